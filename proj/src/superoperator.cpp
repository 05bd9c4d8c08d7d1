#include "minsuff/superoperator.hpp"

#include <sstream>

namespace minsuff {

namespace {

Matrix choi_from_action(int in, int out, const Matrix& action) {
  Matrix j(in * out, in * out);
  for (int c = 0; c < in; ++c)
    for (int r = 0; r < in; ++r) {
      // unit E_rc sits at column-major position r + c * in
      Matrix img = unvec(action.col(r + c * in), out, out);
      j.block(r * out, c * out, out, out) = img;
    }
  return j;
}

}  // namespace

Superoperator::Superoperator(int in_dim, int out_dim, Matrix action)
    : in_dim_(in_dim), out_dim_(out_dim), action_(std::move(action)) {
  if (action_.rows() != out_dim * out_dim || action_.cols() != in_dim * in_dim) {
    std::ostringstream os;
    os << "Superoperator: action is " << action_.rows() << "x" << action_.cols() << ", expected "
       << out_dim * out_dim << "x" << in_dim * in_dim;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  choi_ = choi_from_action(in_dim_, out_dim_, action_);
}

Superoperator Superoperator::from_function(int in_dim, int out_dim,
                                           const std::function<Matrix(const Matrix&)>& f) {
  Matrix action(out_dim * out_dim, in_dim * in_dim);
  for (int c = 0; c < in_dim; ++c)
    for (int r = 0; r < in_dim; ++r) {
      Matrix e = Matrix::Zero(in_dim, in_dim);
      e(r, c) = 1.0;
      Matrix img = f(e);
      if (img.rows() != out_dim || img.cols() != out_dim)
        throw Error(ErrorCode::DimensionMismatch, "Superoperator::from_function: bad image shape");
      action.col(r + c * in_dim) = vec(img);
    }
  return Superoperator(in_dim, out_dim, std::move(action));
}

Superoperator Superoperator::from_choi(int in_dim, int out_dim, const Matrix& choi) {
  if (choi.rows() != in_dim * out_dim || choi.cols() != in_dim * out_dim)
    throw Error(ErrorCode::DimensionMismatch, "Superoperator::from_choi: bad Choi shape");
  Matrix action(out_dim * out_dim, in_dim * in_dim);
  for (int c = 0; c < in_dim; ++c)
    for (int r = 0; r < in_dim; ++r)
      action.col(r + c * in_dim) = vec(choi.block(r * out_dim, c * out_dim, out_dim, out_dim));
  return Superoperator(in_dim, out_dim, std::move(action));
}

Superoperator Superoperator::identity(int dim) {
  return Superoperator(dim, dim, Matrix::Identity(dim * dim, dim * dim));
}

Matrix Superoperator::apply(const Matrix& a) const {
  if (a.rows() != in_dim_ || a.cols() != in_dim_)
    throw Error(ErrorCode::DimensionMismatch, "Superoperator::apply: argument shape");
  return unvec(action_ * vec(a), out_dim_, out_dim_);
}

Matrix Superoperator::predual(const Matrix& rho) const {
  if (rho.rows() != out_dim_ || rho.cols() != out_dim_)
    throw Error(ErrorCode::DimensionMismatch, "Superoperator::predual: argument shape");
  // tr[rho L(A)] = vec(rho^T)^T L vec(A)  =>  vec(pred^T) = L^T vec(rho^T)
  Matrix rt = rho.transpose();
  Matrix pt = unvec(action_.transpose() * vec(rt), in_dim_, in_dim_);
  return pt.transpose();
}

Superoperator Superoperator::compose(const Superoperator& other) const {
  if (other.out_dim_ != in_dim_)
    throw Error(ErrorCode::DimensionMismatch, "Superoperator::compose: inner output != outer input");
  return Superoperator(other.in_dim_, out_dim_, action_ * other.action_);
}

double Superoperator::unitality_residual() const {
  Matrix img = apply(Matrix::Identity(in_dim_, in_dim_));
  return (img - Matrix::Identity(out_dim_, out_dim_)).cwiseAbs().maxCoeff();
}

bool Superoperator::is_unital(double tol) const { return unitality_residual() <= tol; }

double Superoperator::choi_min_eigenvalue() const {
  Matrix h = 0.5 * (choi_ + choi_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool Superoperator::is_cp(double tol) const {
  if (hermitian_defect(choi_) > tol) return false;
  return choi_min_eigenvalue() >= -tol;
}

bool Superoperator::is_channel(double unital_tol, double cp_tol) const {
  return is_unital(unital_tol) && is_cp(cp_tol);
}

bool Superoperator::schwarz_holds_on_samples(Rng& rng, int samples, double tol) const {
  for (int s = 0; s < samples; ++s) {
    Matrix a = random_gaussian(rng, in_dim_, in_dim_);
    Matrix gap = apply(a.adjoint() * a) - apply(a.adjoint()) * apply(a);
    if (min_eigenvalue(0.5 * (gap + gap.adjoint())) < -tol * (1.0 + a.squaredNorm())) return false;
  }
  return true;
}

}  // namespace minsuff
