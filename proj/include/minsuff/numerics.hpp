#pragma once

// Dense complex linear algebra shared by every other module.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

#include "minsuff/error.hpp"

namespace minsuff {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

struct Tolerances {
  double eq_tol = 1e-9;           // entrywise comparisons
  double eig_cluster_tol = 1e-7;  // eigenvalue clustering
  double feas_tol = 1e-7;         // feasibility residuals

  /// Throws InvalidInput unless all are positive and eq_tol <= eig_cluster_tol.
  void validate() const;
};

// Predicates. All comparisons use absolute tolerances on entries / eigenvalues.
bool is_square(const Matrix& a);
bool is_hermitian(const Matrix& a, double tol);
bool is_psd(const Matrix& a, double tol);
bool is_density(const Matrix& a, double tol);
bool is_unitary(const Matrix& u, double tol);

double hermitian_defect(const Matrix& a);  // max |A_ij - conj(A_ji)|
double min_eigenvalue(const Matrix& h);

struct EigenDecomposition {
  RealVector values;  // ascending
  Matrix vectors;     // columns are eigenvectors
};

/// Cyclic Jacobi diagonalisation of a Hermitian matrix. Throws NotHermitian
/// when the input fails the Hermitian predicate at `herm_tol`.
EigenDecomposition eig_hermitian(const Matrix& h, double herm_tol = 1e-9);

/// Groups ascending eigenvalues; i and i+1 share a cluster iff their gap is
/// at most tol * (1 + |lambda_i|). Returns index ranges [begin, end).
std::vector<std::pair<int, int>> cluster_eigenvalues(const RealVector& ascending, double tol);

/// Projection onto the span of eigenvectors with eigenvalue above
/// cluster_tol * lambda_max.
Matrix support_projection(const Matrix& rho, const Tolerances& tol = {});

/// Orthonormal basis (columns) of the support of a PSD matrix.
Matrix support_basis(const Matrix& rho, const Tolerances& tol = {});

/// rho^{it} for strictly positive rho. Throws SingularState otherwise.
Matrix matrix_imag_power(const Matrix& rho, double t, const Tolerances& tol = {});

/// s(rho) rho^{it}: imaginary power on the support, zero on the kernel.
Matrix support_imag_power(const Matrix& rho, double t, const Tolerances& tol = {});

/// f(H) = U f(lambda) U* for Hermitian H.
template <typename F>
Matrix hermitian_function(const Matrix& h, F&& f) {
  auto eig = eig_hermitian(h);
  Vector fv(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) fv(k) = f(eig.values(k));
  return eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
}

enum class TraceSide { First, Second };

/// Partial trace of X acting on C^{d1} (x) C^{d2}; index (i, s) -> i * d2 + s.
Matrix partial_trace(const Matrix& x, int d1, int d2, TraceSide side);

/// tr[A* B].
cplx hs_inner(const Matrix& a, const Matrix& b);

Matrix kron(const Matrix& a, const Matrix& b);
Matrix direct_sum(const Matrix& a, const Matrix& b);

/// Column-major vectorisation and its inverse.
Vector vec(const Matrix& a);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Orthonormal basis of the null space of A via SVD, using the rank policy
/// sigma <= rel_tol * max(sigma_max, scale). A positive scale states the
/// natural size of A, so an A made only of rounding noise has full null space.
Matrix null_space(const Matrix& a, double rel_tol = 1e-8, double scale = 0.0);
int numerical_rank(const Matrix& a, double rel_tol = 1e-8);

/// Unitary factor of the polar decomposition X = U |X|.
Matrix polar_unitary(const Matrix& x);

/// Closest isometry to V (same shape), V (V*V)^{-1/2}.
Matrix orthonormalize_columns(const Matrix& v);

/// Real coordinates of a Hermitian matrix, scaled so that the Euclidean
/// inner product of two coordinate vectors equals tr[A B].
RealVector hermitian_coords(const Matrix& h);
Matrix from_hermitian_coords(const Eigen::Ref<const RealVector>& x, int n);

void require_same_shape(const Matrix& a, const Matrix& b, const char* where);
void require_square(const Matrix& a, const char* where);

}  // namespace minsuff
