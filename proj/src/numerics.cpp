#include "minsuff/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <complex>
#include <sstream>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace minsuff {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::SingularState: return "SingularState";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NumericalDegeneracy: return "NumericalDegeneracy";
    case ErrorCode::AlgebraNotStabilized: return "AlgebraNotStabilized";
    case ErrorCode::OmegaInconsistent: return "OmegaInconsistent";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::NotMinimalForm: return "NotMinimalForm";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

void Tolerances::validate() const {
  if (!(eq_tol > 0) || !(eig_cluster_tol > 0) || !(feas_tol > 0))
    throw Error(ErrorCode::InvalidInput, "tolerances must be strictly positive");
  if (eq_tol > eig_cluster_tol)
    throw Error(ErrorCode::InvalidInput, "eq_tol must not exceed eig_cluster_tol");
}

void require_square(const Matrix& a, const char* where) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << where << ": expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << where << ": shape " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

bool is_square(const Matrix& a) { return a.rows() == a.cols() && a.rows() > 0; }

double hermitian_defect(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& a, double tol) { return is_square(a) && hermitian_defect(a) <= tol; }

double min_eigenvalue(const Matrix& h) {
  return eig_hermitian(h, std::numeric_limits<double>::infinity()).values(0);
}

bool is_psd(const Matrix& a, double tol) { return is_hermitian(a, tol) && min_eigenvalue(a) >= -tol; }

bool is_density(const Matrix& a, double tol) {
  return is_psd(a, tol) && std::abs(a.trace() - 1.0) <= tol;
}

bool is_unitary(const Matrix& u, double tol) {
  if (!is_square(u)) return false;
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

EigenDecomposition eig_hermitian(const Matrix& h_in, double herm_tol) {
  require_square(h_in, "eig_hermitian");
  const Eigen::Index n = h_in.rows();
  if (hermitian_defect(h_in) > herm_tol)
    throw Error(ErrorCode::NotHermitian, "eig_hermitian: input is not Hermitian");

  Matrix a = 0.5 * (h_in + h_in.adjoint());
  Matrix v = Matrix::Identity(n, n);
  const double fro = a.norm();
  const double stop = 1e-12 * fro;

  auto max_off = [&] {
    double m = 0.0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) m = std::max(m, std::abs(a(p, q)));
    return m;
  };

  for (int sweep = 0; sweep < 100 && fro > 0.0 && max_off() > stop; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq_abs = std::abs(a(p, q));
        if (apq_abs <= 1e-300) continue;
        const cplx phase = a(p, q) / apq_abs;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // real Jacobi rotation on the phase-corrected pair
        const double tau = (aqq - app) / (2.0 * apq_abs);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // G = D R D*, D = diag(1, conj(phase)) on (p, q)
        const cplx gpp = c, gqq = c;
        const cplx gpq = s * phase;
        const cplx gqp = -s * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {  // A <- A G
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {  // A <- G* A
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {  // V <- V G
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });
  EigenDecomposition out{RealVector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

std::vector<std::pair<int, int>> cluster_eigenvalues(const RealVector& ev, double tol) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(ev.size());
  int begin = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || ev(i) - ev(i - 1) > tol * (1.0 + std::abs(ev(i - 1)))) {
      out.emplace_back(begin, i);
      begin = i;
    }
  }
  return out;
}

Matrix support_basis(const Matrix& rho, const Tolerances& tol) {
  auto eig = eig_hermitian(rho, tol.eq_tol * std::max(1.0, rho.cwiseAbs().maxCoeff()));
  const Eigen::Index n = rho.rows();
  const double lmax = n ? eig.values(n - 1) : 0.0;
  const double cut = tol.eig_cluster_tol * std::max(lmax, 0.0);
  Eigen::Index first = n;
  for (Eigen::Index k = 0; k < n; ++k)
    if (eig.values(k) > cut) {
      first = k;
      break;
    }
  if (lmax <= 0.0) first = n;
  return eig.vectors.rightCols(n - first);
}

Matrix support_projection(const Matrix& rho, const Tolerances& tol) {
  Matrix w = support_basis(rho, tol);
  return w * w.adjoint();
}

Matrix matrix_imag_power(const Matrix& rho, double t, const Tolerances& tol) {
  auto eig = eig_hermitian(rho, tol.eq_tol * std::max(1.0, rho.cwiseAbs().maxCoeff()));
  if (eig.values(0) <= tol.eig_cluster_tol)
    throw Error(ErrorCode::SingularState,
                "matrix_imag_power: minimum eigenvalue " + std::to_string(eig.values(0)) +
                    " is not above the cluster tolerance");
  Vector ph(eig.values.size());
  for (Eigen::Index k = 0; k < ph.size(); ++k)
    ph(k) = std::exp(cplx(0.0, t * std::log(eig.values(k))));
  return eig.vectors * ph.asDiagonal() * eig.vectors.adjoint();
}

Matrix support_imag_power(const Matrix& rho, double t, const Tolerances& tol) {
  auto eig = eig_hermitian(rho, tol.eq_tol * std::max(1.0, rho.cwiseAbs().maxCoeff()));
  const Eigen::Index n = eig.values.size();
  const double cut = tol.eig_cluster_tol * std::max(eig.values(n - 1), 0.0);
  Vector ph = Vector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k)
    if (eig.values(k) > cut) ph(k) = std::exp(cplx(0.0, t * std::log(eig.values(k))));
  return eig.vectors * ph.asDiagonal() * eig.vectors.adjoint();
}

Matrix partial_trace(const Matrix& x, int d1, int d2, TraceSide side) {
  if (d1 <= 0 || d2 <= 0 || x.rows() != d1 * d2 || x.cols() != d1 * d2) {
    std::ostringstream os;
    os << "partial_trace: " << x.rows() << "x" << x.cols() << " does not factor as " << d1
       << "*" << d2;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  if (side == TraceSide::Second) {
    Matrix r = Matrix::Zero(d1, d1);
    for (int i = 0; i < d1; ++i)
      for (int j = 0; j < d1; ++j)
        for (int s = 0; s < d2; ++s) r(i, j) += x(i * d2 + s, j * d2 + s);
    return r;
  }
  Matrix r = Matrix::Zero(d2, d2);
  for (int i = 0; i < d1; ++i) r += x.block(i * d2, i * d2, d2, d2);
  return r;
}

cplx hs_inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hs_inner");
  return (a.conjugate().cwiseProduct(b)).sum();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

Matrix direct_sum(const Matrix& a, const Matrix& b) {
  Matrix r = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  r.topLeftCorner(a.rows(), a.cols()) = a;
  r.bottomRightCorner(b.rows(), b.cols()) = b;
  return r;
}

Vector vec(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw Error(ErrorCode::DimensionMismatch, "unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

namespace {

// Singular values, and optionally the full right factor, from LAPACK's
// QR-iteration driver.  Eigen's divide-and-conquer BDCSVD (3.4.0) returned
// inaccurate singular vectors on well-conditioned inputs here, and JacobiSVD
// is accurate but far too slow at the n^2 x n^2 sizes of commutant systems.
struct Svd {
  RealVector s;
  Matrix v;  // n x n, columns ordered like s (decreasing)
};

Svd lapack_svd(const Matrix& a, bool want_v) {
  const lapack_int m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  Matrix work = a;
  Svd out;
  out.s.resize(std::min(m, n));
  Matrix vt(want_v ? n : 1, want_v ? n : 1);
  std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, std::min(m, n))));
  const lapack_int info =
      LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'N', want_v ? 'A' : 'N', m, n, work.data(), m, out.s.data(), nullptr, 1,
                     vt.data(), want_v ? n : 1, superb.data());
  if (info != 0) throw Error(ErrorCode::NumericalDegeneracy, "svd: LAPACK zgesvd did not converge");
  if (want_v) out.v = vt.adjoint();
  return out;
}

}  // namespace

int numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  const RealVector s = lapack_svd(a, false).s;
  if (s.size() == 0 || s(0) <= 1e-300) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_tol * s(0)) ++r;
  return r;
}

Matrix null_space(const Matrix& a, double rel_tol, double scale) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Matrix::Identity(n, n);
  if (n == 0) return Matrix(0, 0);
  const Svd svd = lapack_svd(a, true);
  const auto& s = svd.s;
  Eigen::Index r = 0;
  const double ref = s.size() ? std::max(s(0), scale) : 0.0;
  if (ref > 1e-300)
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s(k) > rel_tol * ref) ++r;
  return svd.v.rightCols(n - r);
}

Matrix polar_unitary(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Matrix orthonormalize_columns(const Matrix& v) { return polar_unitary(v); }

RealVector hermitian_coords(const Matrix& h) {
  const Eigen::Index n = h.rows();
  RealVector x(n * n);
  Eigen::Index k = 0;
  const double r2 = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i) x(k++) = h(i, i).real();
  for (Eigen::Index j = 1; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      x(k++) = r2 * h(i, j).real();
      x(k++) = r2 * h(i, j).imag();
    }
  return x;
}

Matrix from_hermitian_coords(const Eigen::Ref<const RealVector>& x, int n) {
  Matrix h(n, n);
  Eigen::Index k = 0;
  const double r2 = std::sqrt(0.5);
  for (int i = 0; i < n; ++i) h(i, i) = x(k++);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      const double re = r2 * x(k++);
      const double im = r2 * x(k++);
      h(i, j) = cplx(re, im);
      h(j, i) = cplx(re, -im);
    }
  return h;
}

}  // namespace minsuff
