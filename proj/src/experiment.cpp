#include "minsuff/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace minsuff {

namespace {

Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

std::vector<int> offsets_of(const std::vector<int>& dims) {
  std::vector<int> off(dims.size(), 0);
  for (std::size_t k = 1; k < dims.size(); ++k) off[k] = off[k - 1] + dims[k - 1];
  return off;
}

}  // namespace

// ---------------------------------------------------------------------------
// StatisticalExperiment

std::vector<int> StatisticalExperiment::blocks() const {
  if (block_dims) return *block_dims;
  return {dim};
}

std::vector<int> StatisticalExperiment::block_offsets() const { return offsets_of(blocks()); }

Matrix StatisticalExperiment::average_state() const {
  Matrix s = Matrix::Zero(dim, dim);
  for (const auto& r : states) s += r;
  if (!states.empty()) s /= static_cast<double>(states.size());
  return s;
}

void StatisticalExperiment::validate(const Tolerances& tol) const {
  if (dim <= 0) throw Error(ErrorCode::InvalidInput, "experiment: dim must be positive");
  if (states.empty()) throw Error(ErrorCode::InvalidInput, "experiment: at least one state is required");
  if (labels.size() != states.size())
    throw Error(ErrorCode::InvalidInput, "experiment: one label per state is required");
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second) throw Error(ErrorCode::InvalidInput, "experiment: duplicate label '" + l + "'");
  if (block_dims) {
    int total = 0;
    for (int d : *block_dims) {
      if (d <= 0) throw Error(ErrorCode::InvalidInput, "experiment: block dimensions must be positive");
      total += d;
    }
    if (total != dim) {
      std::ostringstream os;
      os << "experiment: block dimensions sum to " << total << " but dim is " << dim;
      throw Error(ErrorCode::DimensionMismatch, os.str());
    }
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Matrix& r = states[k];
    const std::string where = "experiment: state '" + labels[k] + "'";
    if (r.rows() != dim || r.cols() != dim) {
      std::ostringstream os;
      os << where << " is " << r.rows() << "x" << r.cols() << ", expected " << dim << "x" << dim;
      throw Error(ErrorCode::DimensionMismatch, os.str());
    }
    if (!is_hermitian(r, tol.eq_tol)) throw Error(ErrorCode::NotHermitian, where + " is not Hermitian");
    if (std::abs(r.trace() - 1.0) > tol.feas_tol) throw Error(ErrorCode::InvalidInput, where + " does not have unit trace");
    if (min_eigenvalue(hermitize(r)) < -tol.feas_tol)
      throw Error(ErrorCode::InvalidInput, where + " is not positive semidefinite");
    if (block_dims) {
      const auto off = block_offsets();
      const auto& dims = *block_dims;
      double off_block = 0;
      for (std::size_t a = 0; a < dims.size(); ++a)
        for (std::size_t b = 0; b < dims.size(); ++b)
          if (a != b)
            off_block = std::max(off_block, r.block(off[a], off[b], dims[a], dims[b]).cwiseAbs().maxCoeff());
      if (off_block > tol.feas_tol) throw Error(ErrorCode::InvalidInput, where + " is not block diagonal");
    }
  }
}

StatisticalExperiment make_experiment(std::vector<Matrix> states, std::vector<std::string> labels,
                                      std::optional<std::vector<int>> block_dims, const Tolerances& tol) {
  StatisticalExperiment e;
  e.dim = states.empty() ? 0 : static_cast<int>(states.front().rows());
  if (labels.empty())
    for (std::size_t k = 0; k < states.size(); ++k) labels.push_back(std::to_string(k));
  e.states = std::move(states);
  e.labels = std::move(labels);
  e.block_dims = std::move(block_dims);
  e.validate(tol);
  return e;
}

// ---------------------------------------------------------------------------
// Support restriction and cocycles

SupportRestriction restrict_to_support(const StatisticalExperiment& e, const Tolerances& tol) {
  const Matrix sigma = e.average_state();
  const auto dims = e.blocks();
  const auto off = e.block_offsets();
  // Supports are computed block by block so that the restricted experiment
  // keeps a declared block structure.
  std::vector<Matrix> parts;
  std::vector<int> new_dims;
  int rank = 0;
  const double lmax = std::max(0.0, eig_hermitian(hermitize(sigma), 1e-6).values.maxCoeff());
  for (std::size_t a = 0; a < dims.size(); ++a) {
    const Matrix sb = hermitize(sigma.block(off[a], off[a], dims[a], dims[a]));
    auto eig = eig_hermitian(sb, 1e-6);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < eig.values.size(); ++k)
      if (eig.values(k) > tol.eig_cluster_tol * lmax) keep.push_back(k);
    Matrix w = Matrix::Zero(e.dim, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
      w.block(off[a], static_cast<Eigen::Index>(k), dims[a], 1) = eig.vectors.col(keep[k]);
    if (!keep.empty()) {
      parts.push_back(w);
      new_dims.push_back(static_cast<int>(keep.size()));
      rank += static_cast<int>(keep.size());
    }
  }

  SupportRestriction out;
  out.was_faithful = rank == e.dim;
  if (out.was_faithful) {
    out.experiment = e;
    out.isometry = Matrix::Identity(e.dim, e.dim);
    out.compression = Superoperator::identity(e.dim);
    return out;
  }
  Matrix w(e.dim, rank);
  int col = 0;
  for (const auto& p : parts) {
    w.middleCols(col, p.cols()) = p;
    col += static_cast<int>(p.cols());
  }
  out.isometry = w;
  out.experiment.dim = rank;
  out.experiment.labels = e.labels;
  if (e.block_dims) out.experiment.block_dims = new_dims;
  for (const auto& r : e.states) {
    Matrix rr = hermitize(w.adjoint() * r * w);
    // the discarded mass is below the support cut; renormalise
    const double t = rr.trace().real();
    if (t > 0) rr /= t;
    out.experiment.states.push_back(rr);
  }
  out.compression = Superoperator::from_function(e.dim, rank, [&](const Matrix& a) { return Matrix(w.adjoint() * a * w); });
  return out;
}

std::vector<double> cocycle_time_grid(int size) {
  static const double base[] = {0.37, 0.71, 1.13, 1.61, 2.23, 2.91, 3.57, 4.33};
  static const double scales[] = {std::sqrt(2.0), std::sqrt(3.0), std::sqrt(5.0), std::sqrt(7.0),
                                  std::sqrt(11.0), std::sqrt(13.0), std::sqrt(17.0)};
  if (size <= 0) throw Error(ErrorCode::InvalidInput, "cocycle_time_grid: size must be positive");
  std::vector<double> g;
  for (int k = 0; k < size && k < 8; ++k) g.push_back(base[k]);
  for (std::size_t s = 0; static_cast<int>(g.size()) < size; ++s) {
    const double f = s < std::size(scales) ? scales[s] : std::sqrt(static_cast<double>(19 + 2 * s));
    for (int k = 0; k < 8 && static_cast<int>(g.size()) < size; ++k) g.push_back(base[k] * f);
  }
  return g;
}

namespace {

void require_faithful(const Matrix& sigma, const Tolerances& tol, const char* where) {
  const auto ev = eig_hermitian(hermitize(sigma), 1e-6).values;
  if (ev(0) <= tol.eig_cluster_tol * std::max(ev.maxCoeff(), 0.0))
    throw Error(ErrorCode::SingularState, std::string(where) + ": average state is not faithful");
}

}  // namespace

std::vector<Matrix> cocycle_generators(const StatisticalExperiment& e, const std::vector<double>& t_grid,
                                       const Tolerances& tol) {
  const Matrix sigma = hermitize(e.average_state());
  require_faithful(sigma, tol, "cocycle_generators");
  std::vector<Matrix> out;
  out.reserve(e.states.size() * t_grid.size());
  for (double t : t_grid) {
    const Matrix sm = matrix_imag_power(sigma, -t, tol);
    for (const auto& r : e.states) out.push_back(support_imag_power(hermitize(r), t, tol) * sm);
  }
  return out;
}

StarAlgebra cocycle_algebra(const StatisticalExperiment& e, const std::vector<double>& t_grid,
                            const Tolerances& tol) {
  const int n = e.dim;
  StarAlgebra a = generate_star_algebra(cocycle_generators(e, t_grid, tol), n);
  const Matrix sigma = hermitize(e.average_state());
  std::vector<Matrix> mods;
  for (double t : t_grid) mods.push_back(matrix_imag_power(sigma, t, tol));
  for (int round = 0; round < n * n && a.dim() < n * n; ++round) {
    std::vector<Matrix> extra;
    for (const auto& u : mods)
      for (const auto& b : a.basis()) {
        Matrix c = u * b * u.adjoint();
        if (a.distance(c) > 1e-8 * std::max(1.0, c.norm())) extra.push_back(std::move(c));
      }
    if (extra.empty()) break;
    StarAlgebra next = extend_star_algebra(a, extra);
    if (next.dim() == a.dim() && subspace_equal(next, a)) break;
    a = std::move(next);
  }
  return a;
}

// ---------------------------------------------------------------------------
// Decomposition

namespace {

struct Extraction {
  std::vector<KIBlock> blocks;
  double spread = 0;
  double reconstruction = 0;
};

// Block data of a faithful experiment relative to a Wedderburn decomposition.
Extraction extract(const StatisticalExperiment& e, const std::vector<WedderburnBlock>& wb, const Tolerances& tol) {
  Extraction out;
  const Matrix sigma = e.average_state();
  for (const auto& b : wb) {
    KIBlock kb;
    kb.block = b;
    Matrix omega_sum = Matrix::Zero(b.m, b.m);
    double wsum = 0;
    std::vector<Matrix> cands;
    for (const auto& r : e.states) {
      const Matrix rt = hermitize(b.isometry.adjoint() * r * b.isometry);
      const double q = std::max(0.0, rt.trace().real());
      if (q > 1e-14) {
        kb.q.push_back(q);
        kb.rho.push_back(hermitize(partial_trace(rt, b.d, b.m, TraceSide::Second) / q));
      } else {
        kb.q.push_back(0.0);
        kb.rho.push_back(Matrix::Identity(b.d, b.d) / static_cast<double>(b.d));
      }
      if (q > tol.feas_tol) {
        cands.push_back(hermitize(partial_trace(rt, b.d, b.m, TraceSide::First) / q));
        omega_sum += q * cands.back();
        wsum += q;
      }
    }
    if (wsum > 0) {
      kb.omega = hermitize(omega_sum / wsum);
    } else {
      Matrix st = b.isometry.adjoint() * sigma * b.isometry;
      Matrix om = partial_trace(st, b.d, b.m, TraceSide::First);
      kb.omega = hermitize(om / om.trace().real());
    }
    for (const auto& c : cands) out.spread = std::max(out.spread, (c - kb.omega).norm());
    out.blocks.push_back(std::move(kb));
  }
  for (std::size_t t = 0; t < e.states.size(); ++t) {
    Matrix rec = Matrix::Zero(e.dim, e.dim);
    for (const auto& kb : out.blocks)
      rec += kb.block.isometry * (kb.q[t] * kron(kb.rho[t], kb.omega)) * kb.block.isometry.adjoint();
    out.reconstruction = std::max(out.reconstruction, (rec - e.states[t]).norm());
  }
  return out;
}

constexpr double kOmegaTol = 1e-7;
constexpr double kReconstructionTol = 1e-8;

struct Attempt {
  StarAlgebra algebra;
  std::vector<double> grid;
  Extraction x;
};

// Tries the grid and its refinements until the extraction is consistent.
Attempt decompose_faithful(const StatisticalExperiment& r, const ExperimentOptions& opts) {
  std::string last;
  for (int level = 0; level <= opts.refinements; ++level) {
    Attempt at;
    at.grid = cocycle_time_grid(opts.t_grid_size << level);
    at.algebra = cocycle_algebra(r, at.grid, opts.tol);
    std::vector<WedderburnBlock> wb;
    try {
      wb = wedderburn_decompose(at.algebra, opts.seed + static_cast<std::uint64_t>(level), opts.tol);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NumericalDegeneracy) throw;
      last = err.what();
      continue;
    }
    at.x = extract(r, wb, opts.tol);
    if (at.x.spread <= kOmegaTol && at.x.reconstruction <= kReconstructionTol) return at;
    std::ostringstream os;
    os << "omega spread " << at.x.spread << ", reconstruction residual " << at.x.reconstruction
       << " with " << at.grid.size() << " grid points";
    last = os.str();
  }
  throw Error(ErrorCode::AlgebraNotStabilized, "no consistent decomposition after grid refinement (" + last + ")");
}

}  // namespace

StarAlgebra minimal_sufficient_subalgebra(const StatisticalExperiment& e, const ExperimentOptions& opts) {
  require_faithful(e.average_state(), opts.tol, "minimal_sufficient_subalgebra");
  return decompose_faithful(e, opts).algebra;
}

Matrix KIDecomposition::reconstruct(std::size_t theta) const {
  Matrix rec = Matrix::Zero(dim, dim);
  for (const auto& kb : blocks)
    rec += kb.block.isometry * (kb.q.at(theta) * kron(kb.rho.at(theta), kb.omega)) * kb.block.isometry.adjoint();
  return rec;
}

std::vector<int> KIDecomposition::block_d() const {
  std::vector<int> v;
  for (const auto& b : blocks) v.push_back(b.block.d);
  return v;
}

std::vector<int> KIDecomposition::block_m() const {
  std::vector<int> v;
  for (const auto& b : blocks) v.push_back(b.block.m);
  return v;
}

KIDecomposition ki_decompose(const StatisticalExperiment& e, const ExperimentOptions& opts) {
  opts.tol.validate();
  e.validate(opts.tol);
  const SupportRestriction sr = restrict_to_support(e, opts.tol);
  Attempt at = decompose_faithful(sr.experiment, opts);

  KIDecomposition ki;
  ki.dim = e.dim;
  ki.support = sr.isometry;
  ki.algebra = std::move(at.algebra);
  ki.t_grid = std::move(at.grid);
  ki.omega_spread = at.x.spread;
  for (auto& kb : at.x.blocks) {
    kb.block.isometry = sr.isometry * kb.block.isometry;
    kb.block.central_projection = sr.isometry * kb.block.central_projection * sr.isometry.adjoint();
    ki.blocks.push_back(std::move(kb));
  }
  for (std::size_t t = 0; t < e.states.size(); ++t)
    ki.reconstruction_residual = std::max(ki.reconstruction_residual, (ki.reconstruct(t) - e.states[t]).norm());
  return ki;
}

MinimalForm minimal_form(const StatisticalExperiment& e, const ExperimentOptions& opts) {
  MinimalForm mf;
  mf.decomposition = ki_decompose(e, opts);
  const auto& blocks = mf.decomposition.blocks;
  std::vector<int> dims;
  int total = 0;
  for (const auto& b : blocks) {
    dims.push_back(b.block.d);
    total += b.block.d;
  }
  auto& out = mf.experiment;
  out.dim = total;
  out.labels = e.labels;
  out.block_dims = dims;
  for (std::size_t t = 0; t < e.states.size(); ++t) {
    Matrix s = Matrix::Zero(total, total);
    int off = 0;
    for (const auto& b : blocks) {
      s.block(off, off, b.block.d, b.block.d) = b.q[t] * b.rho[t];
      off += b.block.d;
    }
    // absorb the per-block rounding so that traces are exactly one
    out.states.push_back(hermitize(s / s.trace().real()));
  }
  return mf;
}

Superoperator conditional_expectation_for(const StatisticalExperiment& e, const KIDecomposition& ki) {
  if (ki.dim != e.dim) throw Error(ErrorCode::DimensionMismatch, "conditional_expectation_for: decomposition dimension");
  if (!ki.blocks.empty() && ki.blocks.front().q.size() != e.states.size())
    throw Error(ErrorCode::DimensionMismatch, "conditional_expectation_for: decomposition state count");
  std::vector<WedderburnBlock> blocks;
  std::vector<Matrix> weights;
  for (const auto& kb : ki.blocks) {
    blocks.push_back(kb.block);
    weights.push_back(kb.omega);
  }
  const int rank = static_cast<int>(ki.support.cols());
  if (rank < e.dim) {
    // complement of the support as one block with trivial H factor
    Matrix comp = null_space(ki.support.adjoint());
    WedderburnBlock nb;
    nb.d = 1;
    nb.m = static_cast<int>(comp.cols());
    nb.isometry = comp;
    nb.central_projection = comp * comp.adjoint();
    blocks.push_back(nb);
    weights.push_back(Matrix::Identity(nb.m, nb.m) / static_cast<double>(nb.m));
  }
  return conditional_expectation(blocks, weights);
}

// ---------------------------------------------------------------------------
// Embeddings

StatisticalExperiment embed_with_ancilla(const StatisticalExperiment& e, const Matrix& omega) {
  if (!is_density(omega, 1e-7)) throw Error(ErrorCode::InvalidInput, "embed_with_ancilla: omega is not a density matrix");
  const int k = static_cast<int>(omega.rows());
  if (k == 1) return e;
  StatisticalExperiment out;
  out.dim = e.dim * k;
  out.labels = e.labels;
  for (const auto& r : e.states) out.states.push_back(kron(r, omega));
  if (e.block_dims) {
    std::vector<int> dims;
    for (int d : *e.block_dims) dims.push_back(d * k);
    out.block_dims = dims;
  }
  return out;
}

StatisticalExperiment embed_direct_sum(const StatisticalExperiment& e, int pad_dim) {
  if (pad_dim < 0) throw Error(ErrorCode::InvalidInput, "embed_direct_sum: negative padding");
  if (pad_dim == 0) return e;
  StatisticalExperiment out;
  out.dim = e.dim + pad_dim;
  out.labels = e.labels;
  for (const auto& r : e.states) out.states.push_back(direct_sum(r, Matrix::Zero(pad_dim, pad_dim)));
  if (e.block_dims) {
    auto dims = *e.block_dims;
    dims.push_back(pad_dim);
    out.block_dims = dims;
  }
  return out;
}

}  // namespace minsuff
