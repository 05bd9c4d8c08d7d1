#pragma once

// Finite-dimensional *-subalgebras of M_n: closure, commutant, centre,
// Wedderburn block structure and conditional expectations onto block algebras.

#include <cstdint>
#include <vector>

#include "minsuff/numerics.hpp"
#include "minsuff/superoperator.hpp"

namespace minsuff {

/// Unital *-subalgebra of M_n given by a Hilbert-Schmidt orthonormal basis.
class StarAlgebra {
 public:
  StarAlgebra() = default;
  /// Adopts `basis` as given; callers guarantee HS-orthonormality.
  StarAlgebra(int ambient_dim, std::vector<Matrix> basis);

  static StarAlgebra scalars(int n);
  static StarAlgebra full(int n);
  /// Block-diagonal algebra  (+)_a M_{d_a}  inside M_{sum d_a}.
  static StarAlgebra block_diagonal(const std::vector<int>& block_dims);

  int ambient_dim() const { return n_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Matrix>& basis() const { return basis_; }

  /// Orthonormal basis as columns of an n^2 x dim matrix of vectorised elements.
  const Matrix& basis_columns() const { return cols_; }

  Matrix project(const Matrix& a) const;
  double distance(const Matrix& a) const;  // ||a - project(a)||_F
  bool contains(const Matrix& a, double tol) const;

  /// Largest violation of adjoint closure, multiplicative closure and unit
  /// membership, and of basis orthonormality.
  double closure_defect() const;
  double orthonormality_defect() const;

 private:
  int n_ = 0;
  std::vector<Matrix> basis_;
  Matrix cols_;
};

struct WedderburnBlock {
  Matrix central_projection;
  int d = 0;  // dim H_a
  int m = 0;  // dim K_a
  /// n x (d*m), |i> (x) |s>  ->  column i*m + s.
  Matrix isometry;
};

struct AlgebraOptions {
  double rank_tol = 1e-8;  // singular-value rank policy
};

StarAlgebra generate_star_algebra(const std::vector<Matrix>& generators, int ambient_dim,
                                  const AlgebraOptions& opts = {});

/// Smallest *-algebra containing `a` and the extra elements (used to close an
/// algebra under an automorphism without restarting from generators).
StarAlgebra extend_star_algebra(const StarAlgebra& a, const std::vector<Matrix>& extra,
                                const AlgebraOptions& opts = {});

StarAlgebra commutant(const StarAlgebra& a, const AlgebraOptions& opts = {});
StarAlgebra center(const StarAlgebra& a, const AlgebraOptions& opts = {});

bool subspace_equal(const StarAlgebra& a, const StarAlgebra& b, double tol = 1e-7);

/// Throws NumericalDegeneracy when no generic central / block element is found
/// within three seeded attempts.
std::vector<WedderburnBlock> wedderburn_decompose(const StarAlgebra& a, std::uint64_t seed = 0x5eed,
                                                  const Tolerances& tol = {});

/// A -> sum_a V_a ( tr_2[V_a* A V_a (I (x) w_a)] (x) I_m ) V_a*.
Superoperator conditional_expectation(const std::vector<WedderburnBlock>& blocks,
                                      const std::vector<Matrix>& weights);

/// Same map, applied directly.
Matrix apply_conditional_expectation(const std::vector<WedderburnBlock>& blocks,
                                     const std::vector<Matrix>& weights, const Matrix& a);

/// Max |V*aV - X (x) I| over the algebra basis, for one block.
double block_form_defect(const WedderburnBlock& block, const StarAlgebra& a);

}  // namespace minsuff
