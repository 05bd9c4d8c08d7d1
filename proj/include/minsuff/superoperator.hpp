#pragma once

#include <functional>

#include "minsuff/numerics.hpp"
#include "minsuff/random.hpp"

namespace minsuff {

/// Linear map L(C^in) -> L(C^out) in the Heisenberg picture, stored as its
/// action on column-major vectorised operators together with its Choi matrix
/// J = sum_ij E_ij (x) Lambda(E_ij)  (input factor first).
class Superoperator {
 public:
  Superoperator() = default;
  Superoperator(int in_dim, int out_dim, Matrix action);

  static Superoperator from_function(int in_dim, int out_dim,
                                     const std::function<Matrix(const Matrix&)>& f);
  static Superoperator from_choi(int in_dim, int out_dim, const Matrix& choi);
  static Superoperator identity(int dim);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const Matrix& action() const { return action_; }
  const Matrix& choi() const { return choi_; }

  Matrix apply(const Matrix& a) const;
  /// Schroedinger-picture dual: tr[rho Lambda(A)] = tr[predual(rho) A].
  Matrix predual(const Matrix& rho) const;

  /// this after other: (this o other)(A) = this(other(A)).
  Superoperator compose(const Superoperator& other) const;

  bool is_unital(double tol) const;
  bool is_cp(double tol = 1e-9) const;
  bool is_channel(double unital_tol, double cp_tol = 1e-9) const;
  double choi_min_eigenvalue() const;
  double unitality_residual() const;

  /// Sampled Kadison-Schwarz check Lambda(A*A) >= Lambda(A*) Lambda(A).
  bool schwarz_holds_on_samples(Rng& rng, int samples, double tol) const;

 private:
  int in_dim_ = 0;
  int out_dim_ = 0;
  Matrix action_;
  Matrix choi_;
};

}  // namespace minsuff
