#include <algorithm>
#include <cmath>
#include <map>

#include "minsuff/experiment.hpp"

namespace minsuff {

namespace {

std::vector<int> offsets(const std::vector<int>& dims) {
  std::vector<int> off(dims.size(), 0);
  for (std::size_t k = 1; k < dims.size(); ++k) off[k] = off[k - 1] + dims[k - 1];
  return off;
}

Matrix unit(int n, int r, int c) {
  Matrix e = Matrix::Zero(n, n);
  e(r, c) = 1.0;
  return e;
}

}  // namespace

ChannelSpace::ChannelSpace(std::vector<int> in_blocks, std::vector<int> out_blocks)
    : in_(std::move(in_blocks)), out_(std::move(out_blocks)) {
  if (in_.empty() || out_.empty()) throw Error(ErrorCode::InvalidInput, "ChannelSpace: empty block list");
  in_off_ = offsets(in_);
  out_off_ = offsets(out_);
  for (int d : in_) in_dim_ += d;
  for (int d : out_) out_dim_ += d;
}

std::vector<int> ChannelSpace::variable_blocks() const {
  std::vector<int> v;
  for (int a : in_)
    for (int b : out_) v.push_back(a * b);
  return v;
}

AffinePsdProblem ChannelSpace::empty_problem() const { return AffinePsdProblem(variable_blocks()); }

// Variable block (a, b) holds J[(i, k), (j, l)] for i, j in input block a and
// k, l in output block b, with local index i * d_b + k.
void ChannelSpace::add_unital(AffinePsdProblem& p) const {
  const std::size_t nb = out_.size();
  for (std::size_t b = 0; b < nb; ++b) {
    const int db = out_[b];
    for (int k = 0; k < db; ++k)
      for (int l = k; l < db; ++l) {
        std::vector<Matrix> c;
        for (std::size_t a = 0; a < in_.size(); ++a)
          for (std::size_t bb = 0; bb < nb; ++bb) {
            const int size = in_[a] * out_[bb];
            if (bb == b)
              c.push_back(kron(Matrix::Identity(in_[a], in_[a]), unit(db, l, k)));
            else
              c.push_back(Matrix::Zero(size, size));
          }
        p.add_complex_constraint(c, k == l ? 1.0 : 0.0);
      }
  }
}

void ChannelSpace::add_predual(AffinePsdProblem& p, const Matrix& rho_out, const Matrix& rho_in) const {
  if (rho_out.rows() != out_dim_ || rho_in.rows() != in_dim_)
    throw Error(ErrorCode::DimensionMismatch, "ChannelSpace::add_predual: state dimensions");
  const std::size_t nb = out_.size();
  for (std::size_t a = 0; a < in_.size(); ++a) {
    const int da = in_[a];
    for (int i = 0; i < da; ++i)
      for (int j = i; j < da; ++j) {
        std::vector<Matrix> c;
        for (std::size_t aa = 0; aa < in_.size(); ++aa)
          for (std::size_t b = 0; b < nb; ++b) {
            const int size = in_[aa] * out_[b];
            if (aa == a)
              c.push_back(kron(unit(da, j, i), rho_out.block(out_off_[b], out_off_[b], out_[b], out_[b])));
            else
              c.push_back(Matrix::Zero(size, size));
          }
        p.add_complex_constraint(c, rho_in(in_off_[a] + j, in_off_[a] + i));
      }
  }
}

HermitianBlocks ChannelSpace::compress(const Superoperator& s) const {
  if (s.in_dim() != in_dim_ || s.out_dim() != out_dim_)
    throw Error(ErrorCode::DimensionMismatch, "ChannelSpace::compress: superoperator shape");
  const Matrix& j = s.choi();
  HermitianBlocks out;
  for (std::size_t a = 0; a < in_.size(); ++a)
    for (std::size_t b = 0; b < out_.size(); ++b) {
      const int da = in_[a], db = out_[b];
      Matrix blk(da * db, da * db);
      for (int i = 0; i < da; ++i)
        for (int k = 0; k < db; ++k)
          for (int jj = 0; jj < da; ++jj)
            for (int l = 0; l < db; ++l)
              blk(i * db + k, jj * db + l) =
                  j((in_off_[a] + i) * out_dim_ + out_off_[b] + k, (in_off_[a] + jj) * out_dim_ + out_off_[b] + l);
      out.push_back(std::move(blk));
    }
  return out;
}

Superoperator ChannelSpace::expand(const HermitianBlocks& blocks) const {
  if (blocks.size() != in_.size() * out_.size())
    throw Error(ErrorCode::DimensionMismatch, "ChannelSpace::expand: wrong number of blocks");
  Matrix j = Matrix::Zero(in_dim_ * out_dim_, in_dim_ * out_dim_);
  std::size_t idx = 0;
  for (std::size_t a = 0; a < in_.size(); ++a)
    for (std::size_t b = 0; b < out_.size(); ++b, ++idx) {
      const int da = in_[a], db = out_[b];
      const Matrix& blk = blocks[idx];
      for (int i = 0; i < da; ++i)
        for (int k = 0; k < db; ++k)
          for (int jj = 0; jj < da; ++jj)
            for (int l = 0; l < db; ++l)
              j((in_off_[a] + i) * out_dim_ + out_off_[b] + k, (in_off_[a] + jj) * out_dim_ + out_off_[b] + l) =
                  blk(i * db + k, jj * db + l);
    }
  return Superoperator::from_choi(in_dim_, out_dim_, j);
}

HermitianBlocks ChannelSpace::identity_choi() const {
  if (in_ != out_) throw Error(ErrorCode::DimensionMismatch, "ChannelSpace::identity_choi: algebras differ");
  HermitianBlocks out;
  for (std::size_t a = 0; a < in_.size(); ++a)
    for (std::size_t b = 0; b < out_.size(); ++b) {
      const int da = in_[a], db = out_[b];
      Matrix blk = Matrix::Zero(da * db, da * db);
      if (a == b)
        for (int i = 0; i < da; ++i)
          for (int j = 0; j < da; ++j) blk(i * da + i, j * da + j) = 1.0;
      out.push_back(std::move(blk));
    }
  return out;
}

namespace {

double min_eig(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Largest t >= 0 with a - t b PSD (b PSD and nonzero).
double max_shift(const Matrix& a, const Matrix& b) {
  const double tb = b.trace().real();
  if (tb <= 0) return 0.0;
  const double floor = -1e-14 * std::max(1.0, a.cwiseAbs().maxCoeff());
  double lo = 0.0, hi = std::max(0.0, a.trace().real() / tb);
  if (min_eig(a) < floor) return 0.0;
  if (min_eig(a - hi * b) >= floor) return hi;
  for (int it = 0; it < 80 && hi - lo > 1e-16 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (min_eig(a - mid * b) >= floor)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

// 1 - s(x) for PSD x; eigenvalues up to 1e-9 * scale count as zero.
Matrix kernel_projection(const Matrix& x, double scale) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.adjoint()));
  const auto& ev = es.eigenvalues();
  const double cut = 1e-9 * scale;
  Matrix q = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) <= cut) q += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
  return q;
}

}  // namespace

std::vector<Matrix> ChannelSpace::exposed_face(const std::vector<Matrix>& outs, const std::vector<Matrix>& ins) const {
  if (outs.size() != ins.size()) throw Error(ErrorCode::DimensionMismatch, "exposed_face: unpaired states");
  std::vector<std::pair<Matrix, Matrix>> combos;  // (out, in)
  for (std::size_t a = 0; a < outs.size(); ++a) {
    combos.emplace_back(outs[a], ins[a]);
    for (std::size_t b = 0; b < outs.size(); ++b) {
      if (a == b) continue;
      const double t = std::min(max_shift(outs[a], outs[b]), max_shift(ins[a], ins[b]));
      if (t > 0) combos.emplace_back(outs[a] - t * outs[b], ins[a] - t * ins[b]);
    }
  }
  std::vector<Matrix> w;
  for (int da : in_)
    for (int db : out_) w.push_back(Matrix::Zero(da * db, da * db));
  for (const auto& [xo, xi] : combos) {
    const double scale = xi.cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    std::size_t idx = 0;
    for (std::size_t a = 0; a < in_.size(); ++a) {
      const Matrix q = kernel_projection(xi.block(in_off_[a], in_off_[a], in_[a], in_[a]), scale);
      for (std::size_t b = 0; b < out_.size(); ++b, ++idx) {
        if (q.cwiseAbs().maxCoeff() == 0.0) continue;
        w[idx] += kron(q.transpose(), xo.block(out_off_[b], out_off_[b], out_[b], out_[b]));
      }
    }
  }
  std::vector<Matrix> faces;
  for (const auto& wb : w) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (wb + wb.adjoint()));
    const auto& ev = es.eigenvalues();
    const double cut = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::Index r = 0;
    while (r < ev.size() && ev(r) <= cut) ++r;
    faces.push_back(es.eigenvectors().leftCols(r));
  }
  return faces;
}

namespace {

DykstraOptions dykstra_options(const SearchOptions& s, const Tolerances& tol) {
  DykstraOptions o;
  o.starts = s.starts;
  o.max_iter = s.max_iter;
  o.seed = s.seed;
  o.threads = s.threads;
  o.feas_tol = tol.feas_tol;
  return o;
}

// With every block of size one the cone is the nonnegative orthant, so the
// problem is a linear program. The simplex then lands on exact vertices of
// feasible sets without interior, where alternating projections stall.
std::optional<HermitianBlocks> solve_face_problem(const AffinePsdProblem& p, const DykstraOptions& o) {
  const auto& sizes = p.block_sizes();
  const bool orthant = p.coord_dim() > 0 && std::all_of(sizes.begin(), sizes.end(), [](int b) { return b == 1; });
  if (!orthant) return dykstra_feasibility(p, o).solution;
  LinearProgram lp;
  lp.a = p.constraint_matrix();
  lp.b = p.rhs();
  lp.c = o.objective ? RealVector(-p.to_coords(*o.objective)) : RealVector(RealVector::Zero(p.coord_dim()));
  const LpResult r = lp_solve(lp);
  if (r.status == LpStatus::Infeasible) return std::nullopt;
  HermitianBlocks x = p.from_coords(r.x.cwiseMax(0.0));
  if (p.affine_residual(x) > o.feas_tol) return std::nullopt;
  if (o.accept && !o.accept(x)) return std::nullopt;
  return x;
}

double block_distance(const HermitianBlocks& a, const HermitianBlocks& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]).squaredNorm();
  return std::sqrt(s);
}

}  // namespace

std::optional<Superoperator> find_fixing_channel(const StatisticalExperiment& e, const SearchOptions& opts,
                                                 const Tolerances& tol) {
  const ChannelSpace space(e.blocks(), e.blocks());
  AffinePsdProblem p = space.empty_problem();
  space.add_unital(p);
  for (const auto& r : e.states) space.add_predual(p, r, r);
  const HermitianBlocks id = space.identity_choi();

  // Without this reduction the feasible set typically has no interior and
  // the projections converge sublinearly.
  const FaceRestriction fr = restrict_to_face(p, space.exposed_face(e.states, e.states));

  DykstraOptions o = dykstra_options(opts, tol);
  o.objective = fr.restrict(id);  // decreasing the overlap with J(id) moves away from the identity
  // Points near the identity can satisfy the loose tolerance without being
  // genuine; accepted witnesses are refined to a much tighter cone defect.
  o.polish_tol = 1e-11;
  const double min_dist = opts.min_distance;
  o.accept = [&](const HermitianBlocks& z) { return block_distance(fr.lift(z), id) > min_dist; };
  const auto z = solve_face_problem(fr.problem, o);
  if (!z) return std::nullopt;
  const HermitianBlocks x = fr.lift(*z);
  if (p.affine_residual(x) > tol.feas_tol) return std::nullopt;
  return space.expand(x);
}

namespace {

// Index of each label of e1 in e2.
std::vector<std::size_t> match_labels(const StatisticalExperiment& e1, const StatisticalExperiment& e2) {
  if (e1.labels.size() != e2.labels.size())
    throw Error(ErrorCode::LabelMismatch, "experiments have different numbers of states");
  std::map<std::string, std::size_t> where;
  for (std::size_t k = 0; k < e2.labels.size(); ++k) where[e2.labels[k]] = k;
  std::vector<std::size_t> idx;
  for (const auto& l : e1.labels) {
    auto it = where.find(l);
    if (it == where.end()) throw Error(ErrorCode::LabelMismatch, "label '" + l + "' is missing from the second experiment");
    idx.push_back(it->second);
  }
  return idx;
}

}  // namespace

std::optional<Superoperator> check_coarse_graining(const StatisticalExperiment& e1, const StatisticalExperiment& e2,
                                                   const SearchOptions& opts, const Tolerances& tol) {
  const auto idx = match_labels(e1, e2);
  const ChannelSpace space(e1.blocks(), e2.blocks());
  AffinePsdProblem p = space.empty_problem();
  space.add_unital(p);
  for (std::size_t t = 0; t < idx.size(); ++t) space.add_predual(p, e2.states[idx[t]], e1.states[t]);
  std::vector<Matrix> outs, ins;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    outs.push_back(e2.states[idx[t]]);
    ins.push_back(e1.states[t]);
  }
  const auto faces = space.exposed_face(outs, ins);
  if (std::all_of(faces.begin(), faces.end(), [](const Matrix& f) { return f.cols() == 0; })) return std::nullopt;
  const FaceRestriction fr = restrict_to_face(p, faces);
  const auto z = solve_face_problem(fr.problem, dykstra_options(opts, tol));
  if (!z) return std::nullopt;
  const HermitianBlocks x = fr.lift(*z);
  if (p.affine_residual(x) > tol.feas_tol) return std::nullopt;
  return space.expand(x);
}

double coarse_graining_residual(const Superoperator& lambda, const StatisticalExperiment& e1,
                                const StatisticalExperiment& e2) {
  const auto idx = match_labels(e1, e2);
  double r = 0;
  for (std::size_t t = 0; t < idx.size(); ++t)
    r = std::max(r, (lambda.predual(e2.states[idx[t]]) - e1.states[t]).norm());
  return r;
}

}  // namespace minsuff
