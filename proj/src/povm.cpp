#include "minsuff/povm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "minsuff/optim.hpp"

namespace minsuff {

void DiscretePOVM::validate(const Tolerances& tol) const {
  if (dim <= 0) throw Error(ErrorCode::InvalidInput, "povm: dim must be positive");
  if (effects.empty()) throw Error(ErrorCode::InvalidInput, "povm: at least one effect is required");
  if (labels.size() != effects.size()) throw Error(ErrorCode::InvalidInput, "povm: one label per effect is required");
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second) throw Error(ErrorCode::InvalidInput, "povm: duplicate label '" + l + "'");
  Matrix total = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < effects.size(); ++k) {
    const Matrix& e = effects[k];
    const std::string where = "povm: effect '" + labels[k] + "'";
    if (e.rows() != dim || e.cols() != dim) {
      std::ostringstream os;
      os << where << " is " << e.rows() << "x" << e.cols() << ", expected " << dim << "x" << dim;
      throw Error(ErrorCode::DimensionMismatch, os.str());
    }
    if (!is_hermitian(e, tol.eq_tol)) throw Error(ErrorCode::NotHermitian, where + " is not Hermitian");
    if (min_eigenvalue(0.5 * (e + e.adjoint())) < -tol.feas_tol)
      throw Error(ErrorCode::InvalidInput, where + " is not positive semidefinite");
    total += e;
  }
  if ((total - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol.feas_tol)
    throw Error(ErrorCode::InvalidInput, "povm: effects do not sum to the identity");
}

DiscretePOVM make_povm(std::vector<Matrix> effects, std::vector<std::string> labels, const Tolerances& tol) {
  DiscretePOVM m;
  m.dim = effects.empty() ? 0 : static_cast<int>(effects.front().rows());
  if (labels.empty())
    for (std::size_t k = 0; k < effects.size(); ++k) labels.push_back(std::to_string(k));
  m.effects = std::move(effects);
  m.labels = std::move(labels);
  m.validate(tol);
  return m;
}

bool StochasticKernel::is_stochastic(double tol) const {
  if (k.size() == 0) return false;
  if (k.minCoeff() < -tol) return false;
  for (Eigen::Index j = 0; j < k.cols(); ++j)
    if (std::abs(k.col(j).sum() - 1.0) > tol) return false;
  return true;
}

std::vector<Matrix> StochasticKernel::apply(const std::vector<Matrix>& effects) const {
  if (static_cast<Eigen::Index>(effects.size()) != k.cols())
    throw Error(ErrorCode::DimensionMismatch, "StochasticKernel::apply: kernel has the wrong number of columns");
  std::vector<Matrix> out;
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    Matrix s = Matrix::Zero(effects.front().rows(), effects.front().cols());
    for (Eigen::Index j = 0; j < k.cols(); ++j) s += k(i, j) * effects[static_cast<std::size_t>(j)];
    out.push_back(std::move(s));
  }
  return out;
}

StochasticKernel StochasticKernel::compose(const StochasticKernel& inner) const {
  if (k.cols() != inner.k.rows()) throw Error(ErrorCode::DimensionMismatch, "StochasticKernel::compose: shapes");
  return StochasticKernel{k * inner.k};
}

StochasticKernel StochasticKernel::identity(int n) { return StochasticKernel{RealMatrix::Identity(n, n)}; }

Matrix qc_apply(const DiscretePOVM& m, const RealVector& f) {
  if (f.size() != m.outcomes()) throw Error(ErrorCode::DimensionMismatch, "qc_apply: function has the wrong length");
  Matrix s = Matrix::Zero(m.dim, m.dim);
  for (int i = 0; i < m.outcomes(); ++i) s += f(i) * m.effects[static_cast<std::size_t>(i)];
  return s;
}

Superoperator qc_channel(const DiscretePOVM& m) {
  const int n = m.outcomes();
  Matrix action = Matrix::Zero(m.dim * m.dim, n * n);
  for (int i = 0; i < n; ++i) {
    RealVector f = RealVector::Zero(n);
    f(i) = 1.0;
    action.col(i * n + i) = vec(qc_apply(m, f));  // column of vec(E_ii)
  }
  return Superoperator(n, m.dim, action);
}

RealVector outcome_distribution(const DiscretePOVM& m, const Matrix& rho) {
  if (rho.rows() != m.dim || rho.cols() != m.dim)
    throw Error(ErrorCode::DimensionMismatch, "outcome_distribution: state dimension");
  RealVector p(m.outcomes());
  for (int i = 0; i < m.outcomes(); ++i) p(i) = (rho * m.effects[static_cast<std::size_t>(i)]).trace().real();
  return p;
}

namespace {

// Variables kappa(i|j) at index i + j * n_m.
LinearProgram postprocessing_lp(const DiscretePOVM& m, const DiscretePOVM& n) {
  if (m.dim != n.dim) throw Error(ErrorCode::DimensionMismatch, "postprocessing: POVMs act on different dimensions");
  const int nm = m.outcomes(), nn = n.outcomes(), d2 = m.dim * m.dim;
  LinearProgram lp;
  lp.a = RealMatrix::Zero(nn + nm * d2, nm * nn);
  lp.b = RealVector::Zero(nn + nm * d2);
  lp.c = RealVector::Zero(nm * nn);
  for (int j = 0; j < nn; ++j) {
    for (int i = 0; i < nm; ++i) lp.a(j, i + j * nm) = 1.0;
    lp.b(j) = 1.0;
  }
  std::vector<RealVector> nc;
  for (const auto& e : n.effects) nc.push_back(hermitian_coords(0.5 * (e + e.adjoint())));
  for (int i = 0; i < nm; ++i) {
    const RealVector mc = hermitian_coords(0.5 * (m.effects[static_cast<std::size_t>(i)] +
                                                  m.effects[static_cast<std::size_t>(i)].adjoint()));
    for (int c = 0; c < d2; ++c) {
      const int row = nn + i * d2 + c;
      for (int j = 0; j < nn; ++j) lp.a(row, i + j * nm) = nc[static_cast<std::size_t>(j)](c);
      lp.b(row) = mc(c);
    }
  }
  return lp;
}

StochasticKernel kernel_from(const RealVector& x, int nm, int nn) {
  StochasticKernel k{RealMatrix::Zero(nm, nn)};
  for (int j = 0; j < nn; ++j)
    for (int i = 0; i < nm; ++i) k.k(i, j) = std::max(0.0, x(i + j * nm));
  return k;
}

}  // namespace

std::optional<StochasticKernel> postprocessing_leq(const DiscretePOVM& m, const DiscretePOVM& n, const Tolerances& tol) {
  (void)tol;
  const LinearProgram lp = postprocessing_lp(m, n);
  const LpResult res = lp_solve(lp);
  if (!res.feasible()) return std::nullopt;
  return kernel_from(res.x, m.outcomes(), n.outcomes());
}

double postprocessing_residual(const StochasticKernel& k, const DiscretePOVM& m, const DiscretePOVM& n) {
  const auto img = k.apply(n.effects);
  if (static_cast<int>(img.size()) != m.outcomes())
    throw Error(ErrorCode::DimensionMismatch, "postprocessing_residual: kernel has the wrong number of rows");
  double r = 0;
  for (std::size_t i = 0; i < img.size(); ++i) r = std::max(r, (img[i] - m.effects[i]).cwiseAbs().maxCoeff());
  return r;
}

EquivalenceResult povm_postproc_equiv(const DiscretePOVM& m, const DiscretePOVM& n, const Tolerances& tol) {
  EquivalenceResult r;
  r.m_from_n = postprocessing_leq(m, n, tol);
  r.n_from_m = postprocessing_leq(n, m, tol);
  r.equivalent = r.m_from_n.has_value() && r.n_from_m.has_value();
  return r;
}

std::vector<Matrix> informationally_complete_states(int d) {
  if (d <= 0) throw Error(ErrorCode::InvalidInput, "informationally_complete_states: dimension must be positive");
  std::vector<Matrix> out;
  out.push_back(Matrix::Identity(d, d) / static_cast<double>(d));
  // the last diagonal projector is omitted: I/d already completes the span
  for (int k = 0; k + 1 < d; ++k) {
    Matrix p = Matrix::Zero(d, d);
    p(k, k) = 1.0;
    out.push_back(p);
  }
  const double s = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) {
      for (cplx phase : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
        Vector v = Vector::Zero(d);
        v(k) = s;
        v(l) = s * phase;
        out.push_back(v * v.adjoint());
      }
    }
  return out;
}

RelabelingResult relabeling_minimal_form(const DiscretePOVM& m, const Tolerances& tol) {
  const auto probes = informationally_complete_states(m.dim);
  const int n = m.outcomes();
  RelabelingResult r;
  r.merge_map.assign(static_cast<std::size_t>(n), 0);
  std::vector<RealVector> reps;  // T vector of each new outcome
  std::vector<Matrix> sums;
  std::vector<std::string> labels;
  std::vector<int> zero;
  for (int i = 0; i < n; ++i) {
    const Matrix& e = m.effects[static_cast<std::size_t>(i)];
    const double tr = e.trace().real();
    if (tr <= tol.feas_tol) {
      zero.push_back(i);
      continue;
    }
    RealVector t(static_cast<Eigen::Index>(probes.size()));
    for (std::size_t k = 0; k < probes.size(); ++k)
      t(static_cast<Eigen::Index>(k)) = (probes[k] * e).trace().real() / (tr / m.dim);
    int cls = -1;
    for (std::size_t c = 0; c < reps.size(); ++c)
      if ((reps[c] - t).cwiseAbs().maxCoeff() <= 1e-7) {
        cls = static_cast<int>(c);
        break;
      }
    if (cls < 0) {
      cls = static_cast<int>(reps.size());
      reps.push_back(t);
      sums.push_back(Matrix::Zero(m.dim, m.dim));
      labels.push_back(m.labels[static_cast<std::size_t>(i)]);
    } else {
      labels[static_cast<std::size_t>(cls)] += "+" + m.labels[static_cast<std::size_t>(i)];
    }
    sums[static_cast<std::size_t>(cls)] += e;
    r.merge_map[static_cast<std::size_t>(i)] = cls;
  }
  // near-zero effects are folded into outcome 0 so the effects still sum to I
  for (int i : zero) sums.front() += m.effects[static_cast<std::size_t>(i)];
  r.dropped = zero;
  r.povm.dim = m.dim;
  r.povm.effects = std::move(sums);
  r.povm.labels = std::move(labels);
  return r;
}

KernelMinimality kernel_minimal_check(const DiscretePOVM& m, const Tolerances& tol) {
  LinearProgram lp = postprocessing_lp(m, m);
  const int n = m.outcomes();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) lp.c(i + j * n) = 1.0;
  const LpResult res = lp_solve(lp);
  KernelMinimality km;
  if (res.status == LpStatus::Optimal) {
    km.lp_value = std::max(0.0, res.objective);
    km.kernel = kernel_from(res.x, n, n);
  } else {
    // the identity kernel is always feasible and the objective is bounded by n
    throw Error(ErrorCode::NumericalDegeneracy, "kernel_minimal_check: self-kernel LP did not solve");
  }
  km.minimal = km.lp_value <= tol.feas_tol;
  return km;
}

Dilation fully_quantum_dilation(const DiscretePOVM& m_in, const Tolerances& tol) {
  Dilation dl;
  // zero effects carry no outcome and are removed first
  DiscretePOVM m;
  m.dim = m_in.dim;
  for (int i = 0; i < m_in.outcomes(); ++i)
    if (m_in.effects[static_cast<std::size_t>(i)].trace().real() > tol.feas_tol) {
      m.effects.push_back(m_in.effects[static_cast<std::size_t>(i)]);
      m.labels.push_back(m_in.labels[static_cast<std::size_t>(i)]);
    }
  const int n = m.outcomes();
  const auto& eff = m.effects;
  dl.gamma = Superoperator::from_function(n, m.dim, [&](const Matrix& a) {
    Matrix s = Matrix::Zero(m.dim, m.dim);
    for (int i = 0; i < n; ++i) s += a(i, i) * eff[static_cast<std::size_t>(i)];
    return s;
  });
  dl.pinching = Superoperator::from_function(n, n, [&](const Matrix& a) {
    Matrix p = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) p(i, i) = a(i, i);
    return p;
  });
  const Superoperator qc = qc_channel(m);
  dl.factorization_residual = (dl.gamma.action() - qc.compose(dl.pinching).action()).cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i) {
    Matrix ei = Matrix::Zero(n, n);
    ei(i, i) = 1.0;
    RealVector f = RealVector::Zero(n);
    f(i) = 1.0;
    dl.restriction_residual =
        std::max(dl.restriction_residual, (dl.gamma.apply(ei) - qc_apply(m, f)).cwiseAbs().maxCoeff());
    dl.recovered.effects.push_back(dl.gamma.apply(ei));
  }
  dl.recovered.dim = m.dim;
  dl.recovered.labels = m.labels;
  dl.povm = std::move(m);
  return dl;
}

StatisticalExperiment povm_as_experiment(const DiscretePOVM& m, const std::vector<Matrix>& probes_in) {
  const std::vector<Matrix> probes = probes_in.empty() ? informationally_complete_states(m.dim) : probes_in;
  StatisticalExperiment e;
  e.dim = m.outcomes();
  e.block_dims = std::vector<int>(static_cast<std::size_t>(m.outcomes()), 1);
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const RealVector p = outcome_distribution(m, probes[k]);
    Matrix s = Matrix::Zero(e.dim, e.dim);
    for (int i = 0; i < e.dim; ++i) s(i, i) = std::max(0.0, p(i));
    e.states.push_back(s / s.trace().real());
    e.labels.push_back("probe" + std::to_string(k));
  }
  return e;
}

}  // namespace minsuff
