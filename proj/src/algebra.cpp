#include "minsuff/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "minsuff/random.hpp"

namespace minsuff {

namespace {

// Tall linear system accumulated as a triangular factor: appending row blocks
// keeps R with R*R = sum of B_k* B_k, so null spaces match the full stack.
class StackedRows {
 public:
  explicit StackedRows(Eigen::Index cols) : r_(0, cols) {}

  void append(const Matrix& rows) {
    Matrix stacked(r_.rows() + rows.rows(), r_.cols());
    stacked << r_, rows;
    if (stacked.rows() <= stacked.cols()) {
      r_ = std::move(stacked);
      return;
    }
    Eigen::HouseholderQR<Matrix> qr(stacked);
    r_ = qr.matrixQR().topRows(r_.cols()).triangularView<Eigen::Upper>();
  }

  const Matrix& r() const { return r_; }

 private:
  Matrix r_;
};

Matrix stack_columns(const std::vector<Matrix>& basis, int n) {
  Matrix cols(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = vec(basis[k]);
  return cols;
}

// HS-orthonormal basis of span{mats} from an SVD with relative threshold.
std::vector<Matrix> orthonormal_span(const std::vector<Matrix>& mats, int n, double tol) {
  if (mats.empty()) return {};
  const Matrix cols = stack_columns(mats, n);
  Eigen::JacobiSVD<Matrix> svd(cols, Eigen::ComputeThinU);
  const RealVector& s = svd.singularValues();
  std::vector<Matrix> out;
  for (Eigen::Index k = 0; k < s.size() && s(k) > tol * std::max(1.0, s(0)); ++k)
    out.push_back(unvec(svd.matrixU().col(k), n, n));
  return out;
}

// Hermitian HS-orthonormal basis spanning the same complex space. The real
// and imaginary parts are often nearly parallel, so the basis is read off a
// rank-revealing SVD instead of sequential Gram-Schmidt, which would promote
// rounding noise to basis directions.
std::vector<Matrix> hermitian_basis(const std::vector<Matrix>& basis, int n, double tol) {
  if (basis.empty()) return {};
  RealMatrix parts(static_cast<Eigen::Index>(n) * n, 2 * static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Matrix& b = basis[k];
    parts.col(2 * static_cast<Eigen::Index>(k)) = hermitian_coords(0.5 * (b + b.adjoint()));
    parts.col(2 * static_cast<Eigen::Index>(k) + 1) = hermitian_coords(cplx(0.0, -0.5) * (b - b.adjoint()));
  }
  Eigen::JacobiSVD<RealMatrix> svd(parts, Eigen::ComputeThinU);
  const RealVector& s = svd.singularValues();
  std::vector<Matrix> out;
  for (Eigen::Index k = 0; k < s.size() && s(k) > tol * std::max(1.0, s(0)); ++k)
    out.push_back(from_hermitian_coords(svd.matrixU().col(k), n));
  return out;
}

}  // namespace

StarAlgebra::StarAlgebra(int ambient_dim, std::vector<Matrix> basis)
    : n_(ambient_dim), basis_(std::move(basis)) {
  for (const auto& b : basis_)
    if (b.rows() != n_ || b.cols() != n_)
      throw Error(ErrorCode::DimensionMismatch, "StarAlgebra: basis element has wrong shape");
  cols_ = stack_columns(basis_, n_);
}

StarAlgebra StarAlgebra::scalars(int n) {
  return StarAlgebra(n, {Matrix::Identity(n, n) / std::sqrt(static_cast<double>(n))});
}

StarAlgebra StarAlgebra::full(int n) {
  std::vector<Matrix> b;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Matrix e = Matrix::Zero(n, n);
      e(i, j) = 1.0;
      b.push_back(std::move(e));
    }
  return StarAlgebra(n, std::move(b));
}

StarAlgebra StarAlgebra::block_diagonal(const std::vector<int>& dims) {
  int n = 0;
  for (int d : dims) n += d;
  std::vector<Matrix> b;
  int off = 0;
  for (int d : dims) {
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) {
        Matrix e = Matrix::Zero(n, n);
        e(off + i, off + j) = 1.0;
        b.push_back(std::move(e));
      }
    off += d;
  }
  return StarAlgebra(n, std::move(b));
}

Matrix StarAlgebra::project(const Matrix& a) const {
  if (a.rows() != n_ || a.cols() != n_)
    throw Error(ErrorCode::DimensionMismatch, "StarAlgebra::project: shape");
  if (basis_.empty()) return Matrix::Zero(n_, n_);
  return unvec(cols_ * (cols_.adjoint() * vec(a)), n_, n_);
}

double StarAlgebra::distance(const Matrix& a) const { return (a - project(a)).norm(); }

bool StarAlgebra::contains(const Matrix& a, double tol) const { return distance(a) <= tol; }

double StarAlgebra::orthonormality_defect() const {
  if (basis_.empty()) return 0.0;
  Matrix g = cols_.adjoint() * cols_;
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double StarAlgebra::closure_defect() const {
  double worst = distance(Matrix::Identity(n_, n_));
  for (const auto& a : basis_) {
    worst = std::max(worst, distance(a.adjoint()));
    for (const auto& b : basis_) worst = std::max(worst, distance(a * b));
  }
  return worst;
}

namespace {

std::vector<Matrix> commuting_exact(const std::vector<Matrix>& set, int n, const AlgebraOptions& opts) {
  const Eigen::Index n2 = static_cast<Eigen::Index>(n) * n;
  const Matrix id = Matrix::Identity(n, n);
  StackedRows sys(n2);
  for (const auto& b : set) {
    // vec(XB - BX) = (B^T (x) I - I (x) B) vec X
    sys.append(kron(b.transpose(), id) - kron(id, b));
  }
  Matrix ns = null_space(sys.r(), opts.rank_tol, 1.0);
  std::vector<Matrix> basis;
  for (Eigen::Index k = 0; k < ns.cols(); ++k) basis.push_back(unvec(ns.col(k), n, n));
  return basis;
}

// Orthonormal basis of {X : XG = GX for every G in `set`}.
//
// Each element costs an n^2 x n^2 block of the linear system, so large sets
// are first replaced by a few random combinations and their adjoints; a
// generic handful generates the same algebra.  The candidate is then checked
// against every element and the full system is solved if any fails.
std::vector<Matrix> commuting_matrices(const std::vector<Matrix>& set, int n, const AlgebraOptions& opts) {
  constexpr int kProbes = 4;
  if (set.size() <= 2 * kProbes) return commuting_exact(set, n, opts);
  Rng rng(0x636f6d6d + set.size());
  const Matrix z = random_gaussian(rng, static_cast<int>(set.size()), kProbes);
  std::vector<Matrix> probes;
  for (int j = 0; j < kProbes; ++j) {
    Matrix c = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < set.size(); ++i) c += z(static_cast<Eigen::Index>(i), j) * set[i];
    c /= std::max(1e-300, c.norm());
    probes.push_back(c.adjoint());
    probes.push_back(std::move(c));
  }
  std::vector<Matrix> cand = commuting_exact(probes, n, opts);
  for (const auto& g : set) {
    const double bound = 4 * opts.rank_tol * std::max(1.0, g.norm());
    for (const auto& x : cand)
      if ((x * g - g * x).norm() > bound) return commuting_exact(set, n, opts);
  }
  return cand;
}

}  // namespace

// The generated unital *-algebra is the double commutant of the generators
// and their adjoints.  Two null-space computations are used instead of
// closing a Gram-Schmidt span under products: the closure compounds rounding
// error through every weakly represented direction (an error of 1e-13 in the
// generators grew to 1e-8 in the span), after which the span drifts towards
// M_n, whereas each null space is only as sensitive as its spectral gap.
StarAlgebra generate_star_algebra(const std::vector<Matrix>& generators, int n,
                                  const AlgebraOptions& opts) {
  std::vector<Matrix> set;
  for (const auto& g : generators) {
    if (g.rows() != n || g.cols() != n)
      throw Error(ErrorCode::DimensionMismatch, "generate_star_algebra: generator shape");
    set.push_back(g);
    set.push_back(g.adjoint());
  }
  if (set.empty()) return StarAlgebra::scalars(n);
  return StarAlgebra(n, commuting_matrices(commuting_matrices(set, n, opts), n, opts));
}

StarAlgebra extend_star_algebra(const StarAlgebra& a, const std::vector<Matrix>& extra,
                                const AlgebraOptions& opts) {
  std::vector<Matrix> gens = a.basis();
  gens.insert(gens.end(), extra.begin(), extra.end());
  return generate_star_algebra(gens, a.ambient_dim(), opts);
}

StarAlgebra commutant(const StarAlgebra& a, const AlgebraOptions& opts) {
  return StarAlgebra(a.ambient_dim(), commuting_matrices(a.basis(), a.ambient_dim(), opts));
}

StarAlgebra center(const StarAlgebra& a, const AlgebraOptions& opts) {
  const int n = a.ambient_dim();
  const Eigen::Index n2 = static_cast<Eigen::Index>(n) * n;
  const int k = a.dim();
  StackedRows sys(k);
  for (int l = 0; l < k; ++l) {
    const Matrix& al = a.basis()[static_cast<std::size_t>(l)];
    Matrix rows(n2, k);
    for (int j = 0; j < k; ++j) {
      const Matrix& aj = a.basis()[static_cast<std::size_t>(j)];
      rows.col(j) = vec(aj * al - al * aj);
    }
    sys.append(rows);
  }
  Matrix coeffs = null_space(sys.r(), opts.rank_tol, 1.0);
  std::vector<Matrix> basis;
  for (Eigen::Index c = 0; c < coeffs.cols(); ++c)
    basis.push_back(unvec(a.basis_columns() * coeffs.col(c), n, n));
  return StarAlgebra(n, std::move(basis));
}

bool subspace_equal(const StarAlgebra& a, const StarAlgebra& b, double tol) {
  if (a.ambient_dim() != b.ambient_dim())
    throw Error(ErrorCode::DimensionMismatch, "subspace_equal: ambient dimensions differ");
  if (a.dim() != b.dim()) return false;
  for (const auto& x : a.basis())
    if (b.distance(x) > tol) return false;
  for (const auto& x : b.basis())
    if (a.distance(x) > tol) return false;
  return true;
}

double block_form_defect(const WedderburnBlock& blk, const StarAlgebra& a) {
  double worst = 0.0;
  const Matrix idm = Matrix::Identity(blk.m, blk.m);
  for (const auto& x : a.basis()) {
    Matrix y = blk.isometry.adjoint() * x * blk.isometry;
    Matrix red = partial_trace(y, blk.d, blk.m, TraceSide::Second) / static_cast<double>(blk.m);
    worst = std::max(worst, (y - kron(red, idm)).cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace {

struct BlockAttempt {
  bool ok = false;
  WedderburnBlock block;
  std::string why;
};

BlockAttempt build_block(const Matrix& p, const std::vector<Matrix>& herm_basis,
                         const std::vector<Matrix>& block_basis, Rng& rng, const Tolerances& tol) {
  BlockAttempt out;
  const int n = static_cast<int>(p.rows());
  Matrix w = support_basis(p, tol);
  const int r = static_cast<int>(w.cols());
  const int dim_block = static_cast<int>(block_basis.size());

  std::normal_distribution<double> g(0.0, 1.0);
  Matrix h = Matrix::Zero(n, n);
  for (const auto& hb : herm_basis) h += g(rng) * hb;
  Matrix hr = w.adjoint() * p * h * p * w;
  hr = 0.5 * (hr + hr.adjoint());
  auto eig = eig_hermitian(hr);
  auto clusters = cluster_eigenvalues(eig.values, tol.eig_cluster_tol);
  const int d = static_cast<int>(clusters.size());
  if (d == 0 || r % d != 0 || d * d != dim_block) {
    std::ostringstream os;
    os << "block of rank " << r << " with algebra dim " << dim_block << " split into " << d
       << " eigenvalue clusters";
    os << "";
    out.why = os.str();
    return out;
  }
  const int m = r / d;
  for (const auto& [b, e] : clusters)
    if (e - b != m) {
      out.why = "unequal cluster multiplicities";
      return out;
    }

  std::vector<Matrix> cols;  // W U_i  (n x m)
  std::vector<Matrix> proj;  // E_i
  for (const auto& [b, e] : clusters) {
    Matrix wi = w * eig.vectors.middleCols(b, m);
    proj.push_back(wi * wi.adjoint());
    cols.push_back(std::move(wi));
  }

  Matrix v(n, d * m);
  v.middleCols(0, m) = cols[0];
  for (int i = 1; i < d; ++i) {
    Matrix best;
    double best_norm = -1.0;
    for (const auto& a : block_basis) {
      Matrix x = proj[static_cast<std::size_t>(i)] * a * proj[0];
      const double nx = x.norm();
      if (nx > best_norm) {
        best_norm = nx;
        best = std::move(x);
      }
    }
    if (best_norm <= 1e-8) {
      out.why = "no element connects minimal projections";
      return out;
    }
    Matrix e_i1 = best / std::sqrt(best_norm * best_norm / m);
    v.middleCols(i * m, m) = e_i1 * cols[0];
  }
  v = orthonormalize_columns(v);

  out.block.central_projection = p;
  out.block.d = d;
  out.block.m = m;
  out.block.isometry = std::move(v);
  out.ok = true;
  return out;
}

}  // namespace

std::vector<WedderburnBlock> wedderburn_decompose(const StarAlgebra& a, std::uint64_t seed,
                                                  const Tolerances& tol) {
  const int n = a.ambient_dim();
  const StarAlgebra z = center(a);
  const std::vector<Matrix> zh = hermitian_basis(z.basis(), n, 1e-8);
  const std::vector<Matrix> ah = hermitian_basis(a.basis(), n, 1e-8);
  const StarAlgebra zalg(n, zh);

  std::string last_why;
  for (int attempt = 0; attempt < 3; ++attempt) {
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> g(0.0, 1.0);

    Matrix h = Matrix::Zero(n, n);
    for (const auto& b : zh) h += g(rng) * b;
    auto eig = eig_hermitian(0.5 * (h + h.adjoint()));
    auto clusters = cluster_eigenvalues(eig.values, tol.eig_cluster_tol);

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t c = 1; c < clusters.size(); ++c)
      min_gap = std::min(min_gap, eig.values(clusters[c].first) - eig.values(clusters[c].first - 1));
    if (static_cast<int>(clusters.size()) != z.dim()) {
      std::ostringstream os;
      os << "centre has dim " << z.dim() << " but a generic central element has "
         << clusters.size() << " eigenvalue clusters (min gap " << min_gap << ")";
      last_why = os.str();
      continue;
    }

    std::vector<Matrix> projections;
    bool central_ok = true;
    for (const auto& [b, e] : clusters) {
      Matrix u = eig.vectors.middleCols(b, e - b);
      Matrix p = u * u.adjoint();
      if (!zalg.contains(p, tol.feas_tol)) central_ok = false;
      projections.push_back(std::move(p));
    }
    if (!central_ok) {
      last_why = "spectral projection of central element left the centre";
      continue;
    }

    std::vector<WedderburnBlock> blocks;
    bool blocks_ok = true;
    int sum_d2 = 0;
    for (const auto& p : projections) {
      std::vector<Matrix> cut;
      for (const auto& x : a.basis()) cut.push_back(x * p);
      std::vector<Matrix> block_basis = orthonormal_span(cut, n, 1e-8);
      BlockAttempt ba;
      for (int inner = 0; inner < 3 && !ba.ok; ++inner) {
        ba = build_block(p, ah, block_basis, rng, tol);
        if (ba.ok && (block_form_defect(ba.block, a) > tol.feas_tol ||
                      (ba.block.isometry * ba.block.isometry.adjoint() - p).cwiseAbs().maxCoeff() >
                          1e-9)) {
          ba.ok = false;
          ba.why = "block isometry failed the tensor-form check";
        }
      }
      if (!ba.ok) {
        blocks_ok = false;
        last_why = ba.why;
        break;
      }
      sum_d2 += ba.block.d * ba.block.d;
      blocks.push_back(std::move(ba.block));
    }
    if (!blocks_ok) continue;
    if (sum_d2 != a.dim()) {
      last_why = "sum of d^2 disagrees with the algebra dimension";
      continue;
    }
    return blocks;
  }
  throw Error(ErrorCode::NumericalDegeneracy, "wedderburn_decompose: " + last_why);
}

Matrix apply_conditional_expectation(const std::vector<WedderburnBlock>& blocks,
                                     const std::vector<Matrix>& weights, const Matrix& a) {
  if (blocks.size() != weights.size())
    throw Error(ErrorCode::DimensionMismatch, "conditional_expectation: one weight per block");
  const Eigen::Index n = blocks.empty() ? a.rows() : blocks.front().isometry.rows();
  if (a.rows() != n || a.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "conditional_expectation: argument shape");
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    const auto& w = weights[k];
    if (w.rows() != b.m || w.cols() != b.m)
      throw Error(ErrorCode::DimensionMismatch, "conditional_expectation: weight has wrong size");
    Matrix y = b.isometry.adjoint() * a * b.isometry;
    Matrix red = partial_trace(y * kron(Matrix::Identity(b.d, b.d), w), b.d, b.m, TraceSide::Second);
    out += b.isometry * kron(red, Matrix::Identity(b.m, b.m)) * b.isometry.adjoint();
  }
  return out;
}

Superoperator conditional_expectation(const std::vector<WedderburnBlock>& blocks,
                                      const std::vector<Matrix>& weights) {
  if (blocks.empty()) throw Error(ErrorCode::DimensionMismatch, "conditional_expectation: no blocks");
  const int n = static_cast<int>(blocks.front().isometry.rows());
  return Superoperator::from_function(
      n, n, [&](const Matrix& a) { return apply_conditional_expectation(blocks, weights, a); });
}

}  // namespace minsuff
