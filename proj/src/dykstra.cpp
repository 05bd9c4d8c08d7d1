#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "minsuff/optim.hpp"
#include "minsuff/random.hpp"

namespace minsuff {

AffinePsdProblem::AffinePsdProblem(std::vector<int> block_sizes) : sizes_(std::move(block_sizes)) {
  for (int s : sizes_) {
    if (s <= 0) throw Error(ErrorCode::InvalidInput, "AffinePsdProblem: block sizes must be positive");
    coord_dim_ += s * s;
  }
}

RealVector AffinePsdProblem::to_coords(const std::vector<Matrix>& blocks) const {
  if (blocks.size() != sizes_.size())
    throw Error(ErrorCode::DimensionMismatch, "AffinePsdProblem: wrong number of blocks");
  RealVector x(coord_dim_);
  Eigen::Index off = 0;
  for (std::size_t b = 0; b < sizes_.size(); ++b) {
    const int s = sizes_[b];
    if (blocks[b].rows() != s || blocks[b].cols() != s)
      throw Error(ErrorCode::DimensionMismatch, "AffinePsdProblem: block has wrong size");
    x.segment(off, s * s) = hermitian_coords(blocks[b]);
    off += s * s;
  }
  return x;
}

std::vector<Matrix> AffinePsdProblem::from_coords(const RealVector& x) const {
  std::vector<Matrix> out;
  out.reserve(sizes_.size());
  Eigen::Index off = 0;
  for (int s : sizes_) {
    out.push_back(from_hermitian_coords(x.segment(off, s * s), s));
    off += s * s;
  }
  return out;
}

void AffinePsdProblem::add_constraint(const std::vector<Matrix>& f_blocks, double value) {
  rows_.push_back(to_coords(f_blocks));
  rhs_.push_back(value);
}

void AffinePsdProblem::add_complex_constraint(const std::vector<Matrix>& c_blocks, cplx value) {
  std::vector<Matrix> re, im;
  bool has_im = false;
  for (const auto& c : c_blocks) {
    re.push_back(0.5 * (c + c.adjoint()));
    Matrix a = cplx(0.0, -0.5) * (c - c.adjoint());
    if (a.cwiseAbs().maxCoeff() > 0.0) has_im = true;
    im.push_back(std::move(a));
  }
  add_constraint(re, value.real());
  if (has_im) add_constraint(im, value.imag());
}

RealMatrix AffinePsdProblem::constraint_matrix() const {
  RealMatrix a(static_cast<Eigen::Index>(rows_.size()), coord_dim_);
  for (std::size_t k = 0; k < rows_.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = rows_[k].transpose();
  return a;
}

RealVector AffinePsdProblem::rhs() const {
  return Eigen::Map<const RealVector>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
}

double AffinePsdProblem::affine_residual(const std::vector<Matrix>& blocks) const {
  if (rows_.empty()) return 0.0;
  return (constraint_matrix() * to_coords(blocks) - rhs()).norm();
}

double AffinePsdProblem::min_eigenvalue(const std::vector<Matrix>& blocks) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (b + b.adjoint()), Eigen::EigenvaluesOnly);
    m = std::min(m, es.eigenvalues()(0));
  }
  return m;
}

FaceRestriction restrict_to_face(const AffinePsdProblem& p, const std::vector<Matrix>& faces) {
  const auto& sizes = p.block_sizes();
  if (faces.size() != sizes.size())
    throw Error(ErrorCode::DimensionMismatch, "restrict_to_face: one face per block");
  FaceRestriction fr;
  fr.faces = faces;
  std::vector<int> new_sizes;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    if (faces[b].rows() != sizes[b]) throw Error(ErrorCode::DimensionMismatch, "restrict_to_face: face shape");
    if (faces[b].cols() > 0) {
      fr.kept.push_back(static_cast<int>(b));
      new_sizes.push_back(static_cast<int>(faces[b].cols()));
    }
  }
  if (new_sizes.empty()) throw Error(ErrorCode::InvalidInput, "restrict_to_face: the face is {0}");
  fr.problem = AffinePsdProblem(new_sizes);
  const RealVector g = p.rhs();
  for (std::size_t k = 0; k < p.rows().size(); ++k) {
    const RealVector& row = p.rows()[k];
    std::vector<Matrix> f;
    Eigen::Index off = 0;
    std::size_t next = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      const int s = sizes[b];
      if (next < fr.kept.size() && fr.kept[next] == static_cast<int>(b)) {
        const Matrix& v = faces[b];
        f.push_back(v.adjoint() * from_hermitian_coords(row.segment(off, s * s), s) * v);
        ++next;
      }
      off += s * s;
    }
    fr.problem.add_constraint(f, g(static_cast<Eigen::Index>(k)));
  }
  return fr;
}

HermitianBlocks FaceRestriction::lift(const HermitianBlocks& z) const {
  HermitianBlocks x;
  std::size_t next = 0;
  for (std::size_t b = 0; b < faces.size(); ++b) {
    const Matrix& v = faces[b];
    if (next < kept.size() && kept[next] == static_cast<int>(b)) {
      x.push_back(v * z[next] * v.adjoint());
      ++next;
    } else {
      x.push_back(Matrix::Zero(v.rows(), v.rows()));
    }
  }
  return x;
}

HermitianBlocks FaceRestriction::restrict(const HermitianBlocks& x) const {
  HermitianBlocks z;
  for (int b : kept) {
    const Matrix& v = faces[static_cast<std::size_t>(b)];
    z.push_back(v.adjoint() * x[static_cast<std::size_t>(b)] * v);
  }
  return z;
}

namespace {

// Projections onto {x : A x = g} and onto the block PSD cone.
class Projectors {
 public:
  explicit Projectors(const AffinePsdProblem& p) : p_(p), a_(p.constraint_matrix()), g_(p.rhs()) {
    const Eigen::Index n = p.coord_dim();
    if (a_.rows() == 0) {
      basis_ = RealMatrix::Zero(n, 0);
      particular_ = RealVector::Zero(n);
      return;
    }
    Eigen::ColPivHouseholderQR<RealMatrix> qr(a_.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index r = qr.rank();
    basis_ = qr.householderQ() * RealMatrix::Identity(n, r);
    // rows of A permuted by P: P^T A = R^T Q^T; solve with the first r pivoted rows
    RealMatrix r11 = qr.matrixR().topLeftCorner(r, r).triangularView<Eigen::Upper>();
    RealVector pg = qr.colsPermutation().transpose() * g_;
    RealVector y = r11.transpose().triangularView<Eigen::Lower>().solve(pg.head(r));
    particular_ = basis_ * y;
    const double res = (a_ * particular_ - g_).norm();
    inconsistent_ = res > 1e-9 * (1.0 + g_.norm());
  }

  bool inconsistent() const { return inconsistent_; }
  const RealVector& particular() const { return particular_; }

  RealVector affine(const RealVector& x) const {
    return x - basis_ * (basis_.transpose() * x) + particular_;
  }

  double residual(const RealVector& x) const {
    return a_.rows() ? (a_ * x - g_).norm() : 0.0;
  }

  // Projection onto the cone; also reports the min eigenvalue of the input.
  RealVector psd(const RealVector& x, double* min_eig = nullptr) const {
    RealVector out(x.size());
    Eigen::Index off = 0;
    double mn = std::numeric_limits<double>::infinity();
    for (int s : p_.block_sizes()) {
      Matrix h = from_hermitian_coords(x.segment(off, s * s), s);
      Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      RealVector ev = es.eigenvalues();
      mn = std::min(mn, ev(0));
      RealVector clipped = ev.cwiseMax(0.0);
      Matrix hp = es.eigenvectors() * clipped.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
      out.segment(off, s * s) = hermitian_coords(hp);
      off += s * s;
    }
    if (min_eig) *min_eig = mn;
    return out;
  }

  double min_eig(const RealVector& x) const {
    double mn = 0;
    psd(x, &mn);
    return mn;
  }

 private:
  const AffinePsdProblem& p_;
  RealMatrix a_;
  RealVector g_;
  RealMatrix basis_;
  RealVector particular_;
  bool inconsistent_ = false;
};

struct StartOutcome {
  std::optional<RealVector> point;
  RealVector last;  // final PSD iterate when no point was verified
  int iterations = 0;
  double residual = 0;
  double min_eig = 0;
  std::vector<double> trace;
};

// One Dykstra run; on success returns an affine-exact point with
// min eigenvalue >= -tol, or a PSD point with affine residual <= tol.
StartOutcome run_dykstra(const Projectors& pr, const RealVector& start, const DykstraOptions& opts,
                         bool record) {
  StartOutcome out;
  const double tol = opts.feas_tol;

  auto verify = [&](const RealVector& x_psd) -> std::optional<RealVector> {
    RealVector y = pr.affine(x_psd);
    const double me = pr.min_eig(y);
    if (me >= -tol) {
      out.residual = pr.residual(y);
      out.min_eig = me;
      return y;
    }
    out.residual = pr.residual(x_psd);
    out.min_eig = pr.min_eig(x_psd);
    return x_psd;
  };

  // The start itself may already be feasible.
  {
    double me = 0;
    pr.psd(start, &me);
    if (me >= -tol && pr.residual(start) <= tol) {
      out.point = start;
      out.residual = pr.residual(start);
      out.min_eig = me;
      return out;
    }
  }

  RealVector x = start;
  RealVector p = RealVector::Zero(x.size());
  RealVector q = RealVector::Zero(x.size());
  for (int k = 0; k < opts.max_iter; ++k) {
    RealVector y = pr.affine(x + p);
    p = x + p - y;
    RealVector xn = pr.psd(y + q);
    q = y + q - xn;
    ++out.iterations;
    const double res = pr.residual(xn);
    if (record) out.trace.push_back(res);
    if (res <= tol) {
      out.point = verify(xn);
      return out;
    }
    const double step = (xn - x).norm();
    x = std::move(xn);
    if (step <= 1e-15 * (1.0 + x.norm())) break;  // converged away from the affine set
  }
  out.residual = pr.residual(x);
  out.last = std::move(x);
  return out;
}

// Plain alternating projections until the affine-exact point is PSD to `ptol`.
std::optional<RealVector> polish(const Projectors& pr, RealVector x, double ptol, int iters) {
  for (int k = 0; k <= iters; ++k) {
    RealVector y = pr.affine(x);
    double me = 0;
    RealVector xp = pr.psd(y, &me);
    if (me >= -ptol) return y;
    x = std::move(xp);
  }
  return std::nullopt;
}

RealVector random_start(const AffinePsdProblem& p, const Projectors& pr, Rng& rng,
                        const std::optional<RealVector>& objective) {
  std::vector<Matrix> blocks;
  for (int s : p.block_sizes()) {
    Matrix g = random_gaussian(rng, s, s);
    blocks.push_back(g * g.adjoint());
  }
  RealVector x = p.to_coords(blocks);
  const double scale = std::max(1.0, pr.particular().norm());
  x *= scale / std::max(1e-300, x.norm());
  if (objective && objective->norm() > 0) x -= scale * (*objective) / objective->norm();
  return x;
}

struct SearchOutcome {
  std::optional<RealVector> point;
  RealVector last;
  bool reached = false;
  int iterations = 0;
  double residual = 0;
  double min_eig = 0;
  std::vector<double> trace;
};

SearchOutcome search_from(const AffinePsdProblem& problem, const Projectors& pr, const RealVector& start,
                          const DykstraOptions& opts, bool record) {
  SearchOutcome so;
  const std::optional<RealVector> dir =
      opts.objective ? std::optional<RealVector>(problem.to_coords(*opts.objective)) : std::nullopt;

  auto finish = [&](const RealVector& cand) -> std::optional<RealVector> {
    RealVector pt = cand;
    if (opts.polish_tol > 0) {
      auto pol = polish(pr, pt, opts.polish_tol, opts.polish_iter);
      if (!pol) return std::nullopt;
      pt = *pol;
    }
    if (opts.accept && !opts.accept(problem.from_coords(pt))) return std::nullopt;
    return pt;
  };

  StartOutcome first = run_dykstra(pr, start, opts, record);
  so.iterations = first.iterations;
  so.trace = std::move(first.trace);
  if (!first.point) {
    so.residual = first.residual;
    so.last = std::move(first.last);
    return so;
  }
  so.reached = true;
  std::optional<RealVector> best = finish(*first.point);
  if (dir && dir->norm() > 0) {
    RealVector base = best ? *best : *first.point;
    double eta = 0.5 * std::max(1.0, base.norm()) / dir->norm();
    for (int r = 0; r < opts.push_rounds; ++r, eta *= 0.5) {
      StartOutcome pushed = run_dykstra(pr, base - eta * (*dir), opts, false);
      so.iterations += pushed.iterations;
      if (!pushed.point) continue;
      if (pushed.point->dot(*dir) >= base.dot(*dir) - 1e-12) continue;
      auto fin = finish(*pushed.point);
      if (!fin) continue;
      best = fin;
      base = *fin;
    }
  }
  if (best) {
    so.point = best;
    so.residual = pr.residual(*best);
    so.min_eig = pr.min_eig(*best);
  }
  return so;
}

// Levenberg-Marquardt on ||A vec(R R*) - g||^2 over block factors R. The
// iterate R R* is PSD by construction, so only the affine residual has to be
// driven down; steps use the minimum-norm form J^T (J J^T + lambda I)^{-1}.
std::optional<RealVector> refine_factored(const AffinePsdProblem& p, const RealVector& x0, double target, int iters) {
  const auto& sizes = p.block_sizes();
  const Eigen::Index m = p.constraint_count();
  if (m == 0) return std::nullopt;
  const RealMatrix a = p.constraint_matrix();
  const RealVector g = p.rhs();
  std::vector<std::vector<Matrix>> f(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < m; ++k) f[static_cast<std::size_t>(k)] = p.from_coords(a.row(k).transpose());

  std::vector<Matrix> r;
  for (const auto& blk : p.from_coords(x0)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (blk + blk.adjoint()));
    // a small floor keeps the factor full rank, so no direction is frozen
    const RealVector sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().array() + 1e-4;
    r.push_back(es.eigenvectors() * sq.cast<cplx>().asDiagonal());
  }
  auto gram = [&](const std::vector<Matrix>& fac) {
    std::vector<Matrix> x;
    for (const auto& rb : fac) x.push_back(rb * rb.adjoint());
    return p.to_coords(x);
  };
  Eigen::Index nvar = 0;
  for (int s : sizes) nvar += 2 * static_cast<Eigen::Index>(s) * s;

  RealVector res = a * gram(r) - g;
  // damping lambda = mu * |res| shrinks with the residual, which keeps the
  // convergence fast near rank-deficient solutions
  double mu = 1.0;
  for (int it = 0; it < iters && res.norm() > target; ++it) {
    RealMatrix jac(m, nvar);
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::Index off = 0;
      for (std::size_t b = 0; b < sizes.size(); ++b) {
        const Matrix gk = 2.0 * f[static_cast<std::size_t>(k)][b] * r[b];
        const Eigen::Index len = gk.size();
        const Eigen::Map<const Eigen::VectorXcd> v(gk.data(), len);
        jac.row(k).segment(off, len) = v.real().transpose();
        jac.row(k).segment(off + len, len) = v.imag().transpose();
        off += 2 * len;
      }
    }
    const RealMatrix jjt = jac * jac.transpose();
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      const double lambda = std::max(mu * res.norm(), 1e-300);
      const RealMatrix lhs = jjt + lambda * RealMatrix::Identity(m, m);
      const RealVector step = -(jac.transpose() * lhs.ldlt().solve(res));
      std::vector<Matrix> trial = r;
      Eigen::Index off = 0;
      for (std::size_t b = 0; b < sizes.size(); ++b) {
        const Eigen::Index len = trial[b].size();
        for (Eigen::Index e = 0; e < len; ++e) trial[b].data()[e] += cplx(step(off + e), step(off + len + e));
        off += 2 * len;
      }
      const RealVector tres = a * gram(trial) - g;
      if (tres.norm() < res.norm()) {
        r = std::move(trial);
        res = tres;
        mu = std::max(mu / 4.0, 1e-8);
        improved = true;
      } else {
        mu *= 8.0;
      }
    }
    if (!improved) break;
  }
  if (res.norm() > target) return std::nullopt;
  return gram(r);
}

}  // namespace

DykstraResult dykstra_feasibility(const AffinePsdProblem& problem,
                                  const std::vector<HermitianBlocks>& starts,
                                  const DykstraOptions& opts) {
  DykstraResult res;
  Projectors pr(problem);
  if (pr.inconsistent()) {
    res.affine_set_empty = true;
    return res;
  }
  std::vector<RealVector> xs;
  for (const auto& s : starts) xs.push_back(problem.to_coords(s));

  // A start that stalls short of the feasible set (typical when the set has
  // no interior) is handed to the factored refinement straight away, so one
  // success ends the search instead of waiting for every start to stall.
  const auto try_refine = [&](const RealVector& from) {
    const auto x = refine_factored(problem, from, 1e-2 * opts.feas_tol, opts.refine_iter);
    if (!x || pr.residual(*x) > opts.feas_tol || pr.min_eig(*x) < -opts.feas_tol) return false;
    HermitianBlocks blocks = problem.from_coords(*x);
    if (opts.accept && !opts.accept(blocks)) return false;
    res.solution = std::move(blocks);
    res.refined = true;
    res.affine_residual = pr.residual(*x);
    res.min_eigenvalue = pr.min_eig(*x);
    return true;
  };

  const std::size_t threads = static_cast<std::size_t>(std::max(1, opts.threads));
  for (std::size_t begin = 0; begin < xs.size(); begin += threads) {
    const std::size_t end = std::min(xs.size(), begin + threads);
    std::vector<SearchOutcome> outcomes(end - begin);
    if (threads == 1) {
      outcomes[0] = search_from(problem, pr, xs[begin], opts, opts.record_trace && begin == 0);
    } else {
      std::vector<std::future<SearchOutcome>> futs;
      for (std::size_t s = begin; s < end; ++s)
        futs.push_back(std::async(std::launch::async, [&, s] {
          return search_from(problem, pr, xs[s], opts, opts.record_trace && s == 0);
        }));
      for (std::size_t s = begin; s < end; ++s) outcomes[s - begin] = futs[s - begin].get();
    }
    for (std::size_t s = begin; s < end; ++s) {
      auto& o = outcomes[s - begin];
      res.iterations += o.iterations;
      res.reached_feasibility = res.reached_feasibility || o.reached;
      if (s == 0) res.trace = std::move(o.trace);
      if (o.point && !res.solution) {
        res.solution = problem.from_coords(*o.point);
        res.start_index = static_cast<int>(s);
        res.affine_residual = o.residual;
        res.min_eigenvalue = o.min_eig;
      }
    }
    if (res.solution) break;
    if (res.reached_feasibility || opts.refine_iter <= 0) continue;
    for (std::size_t s = begin; s < end && !res.solution; ++s) {
      const auto& o = outcomes[s - begin];
      if (!o.reached && o.last.size() && try_refine(o.last)) res.start_index = static_cast<int>(s);
    }
    if (res.solution) break;
  }
  return res;
}

DykstraResult dykstra_feasibility(const AffinePsdProblem& problem, const DykstraOptions& opts) {
  Projectors pr(problem);
  if (pr.inconsistent()) {
    DykstraResult res;
    res.affine_set_empty = true;
    return res;
  }
  Rng rng(opts.seed);
  const std::optional<RealVector> dir =
      opts.objective ? std::optional<RealVector>(problem.to_coords(*opts.objective)) : std::nullopt;
  std::vector<HermitianBlocks> starts;
  for (int s = 0; s < opts.starts; ++s) starts.push_back(problem.from_coords(random_start(problem, pr, rng, dir)));
  return dykstra_feasibility(problem, starts, opts);
}

}  // namespace minsuff
