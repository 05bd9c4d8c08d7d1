#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fixtures {

using minsuff::cplx;
using minsuff::DiscretePOVM;
using minsuff::StatisticalExperiment;
using minsuff::Vector;

double frob(const Matrix& a) { return a.norm(); }
double frob_diff(const Matrix& a, const Matrix& b) { return (a - b).norm(); }

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix ket_bra(int dim, int i, int j) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, j) = 1;
  return m;
}

Matrix diag(const std::vector<double>& v) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = v[k];
  return m;
}

Matrix pure(const Vector& v) {
  Vector u = v / v.norm();
  return u * u.adjoint();
}

namespace {

Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

int random_rank(Rng& rng, int n, bool mixed) { return mixed ? uniform_int(rng, 1, n) : n; }

std::vector<PlantedBlock> random_blocks(Rng& rng, int core) {
  std::vector<PlantedBlock> blocks;
  int left = core;
  while (left > 0) {
    if (blocks.size() == 2) {
      // Last block absorbs the rest as d x m with d a divisor of `left`.
      std::vector<int> divisors;
      for (int d = 1; d <= std::min(left, 3); ++d)
        if (left % d == 0) divisors.push_back(d);
      const int d = divisors[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(divisors.size()) - 1))];
      blocks.push_back({d, left / d});
      break;
    }
    const int d = uniform_int(rng, 1, std::min(left, 3));
    const int m = uniform_int(rng, 1, std::max(1, std::min(left / d, 3)));
    blocks.push_back({d, m});
    left -= d * m;
  }
  return blocks;
}

}  // namespace

PlantedExperiment random_planted_experiment(Rng& rng, const PlantedOptions& opts) {
  PlantedExperiment out;
  const int total = uniform_int(rng, opts.min_dim, opts.max_dim);
  if (opts.allow_padding && total > 2 && uniform_real(rng, 0, 1) < 0.3) out.pad = uniform_int(rng, 1, std::min(2, total - 1));
  out.blocks = random_blocks(rng, total - out.pad);

  const int k = uniform_int(rng, opts.min_states, opts.max_states);
  std::vector<Matrix> omegas;
  for (const auto& b : out.blocks) omegas.push_back(minsuff::random_density(rng, b.m, random_rank(rng, b.m, opts.mixed_ranks)));

  const Matrix u = minsuff::random_unitary(rng, total);
  std::vector<Matrix> states;
  for (int t = 0; t < k; ++t) {
    RealVector q = minsuff::random_probability(rng, static_cast<int>(out.blocks.size()));
    if (opts.mixed_ranks && out.blocks.size() > 1 && uniform_real(rng, 0, 1) < 0.2) {
      q(uniform_int(rng, 0, static_cast<int>(q.size()) - 1)) = 0;
      if (q.sum() <= 0) q(0) = 1;
      q /= q.sum();
    }
    Matrix rho = Matrix::Zero(total, total);
    int off = 0;
    for (std::size_t a = 0; a < out.blocks.size(); ++a) {
      const auto& b = out.blocks[a];
      const Matrix r = minsuff::random_density(rng, b.d, random_rank(rng, b.d, opts.mixed_ranks));
      rho.block(off, off, b.d * b.m, b.d * b.m) = q(static_cast<Eigen::Index>(a)) * minsuff::kron(r, omegas[a]);
      off += b.d * b.m;
    }
    Matrix s = hermitize(u * rho * u.adjoint());
    s /= s.trace().real();
    states.push_back(std::move(s));
  }
  out.experiment = minsuff::make_experiment(std::move(states));
  return out;
}

ClassicalFixture random_classical_experiment(Rng& rng, int max_points, int max_states, bool declare_blocks) {
  ClassicalFixture out;
  const int n = uniform_int(rng, 2, max_points);
  const int k = uniform_int(rng, 1, max_states);
  // One point may be left without mass; the rest are grouped into classes.
  const bool empty_point = n > 2 && uniform_real(rng, 0, 1) < 0.25;
  const int live = empty_point ? n - 1 : n;
  const int classes = uniform_int(rng, 1, live);
  std::vector<int> cls(static_cast<std::size_t>(n), -1);
  for (int p = 0; p < live; ++p) cls[static_cast<std::size_t>(p)] = p < classes ? p : uniform_int(rng, 0, classes - 1);
  std::shuffle(cls.begin(), cls.end(), rng);

  std::vector<double> weight(static_cast<std::size_t>(n), 0.0), class_total(static_cast<std::size_t>(classes), 0.0);
  for (int p = 0; p < n; ++p)
    if (cls[static_cast<std::size_t>(p)] >= 0) {
      weight[static_cast<std::size_t>(p)] = uniform_real(rng, 0.2, 1.0);
      class_total[static_cast<std::size_t>(cls[static_cast<std::size_t>(p)])] += weight[static_cast<std::size_t>(p)];
    }

  std::vector<Matrix> states;
  for (int t = 0; t < k; ++t) {
    const RealVector pc = minsuff::random_probability(rng, classes);
    std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
    for (int p = 0; p < n; ++p) {
      const int c = cls[static_cast<std::size_t>(p)];
      if (c >= 0) dist[static_cast<std::size_t>(p)] = pc(c) * weight[static_cast<std::size_t>(p)] / class_total[static_cast<std::size_t>(c)];
    }
    out.distributions.push_back(dist);
    states.push_back(diag(dist));
  }
  std::optional<std::vector<int>> blocks;
  if (declare_blocks) blocks = std::vector<int>(static_cast<std::size_t>(n), 1);
  out.experiment = minsuff::make_experiment(std::move(states), {}, blocks);
  return out;
}

std::vector<std::vector<int>> likelihood_ratio_partition(const std::vector<std::vector<double>>& dists, double tol) {
  const std::size_t k = dists.size(), n = dists.front().size();
  std::vector<double> sigma(n, 0.0);
  for (const auto& d : dists)
    for (std::size_t p = 0; p < n; ++p) sigma[p] += d[p] / static_cast<double>(k);

  std::vector<std::vector<double>> ratio(n);
  std::vector<int> live;
  for (std::size_t p = 0; p < n; ++p) {
    if (sigma[p] <= 1e-14) continue;
    live.push_back(static_cast<int>(p));
    for (const auto& d : dists) ratio[p].push_back(d[p] / sigma[p]);
  }
  std::vector<std::vector<int>> groups;
  std::vector<bool> used(n, false);
  for (int p : live) {
    if (used[static_cast<std::size_t>(p)]) continue;
    std::vector<int> g{p};
    used[static_cast<std::size_t>(p)] = true;
    for (int r : live) {
      if (used[static_cast<std::size_t>(r)]) continue;
      double gap = 0;
      for (std::size_t t = 0; t < k; ++t)
        gap = std::max(gap, std::abs(ratio[static_cast<std::size_t>(p)][t] - ratio[static_cast<std::size_t>(r)][t]));
      if (gap <= tol) {
        g.push_back(r);
        used[static_cast<std::size_t>(r)] = true;
      }
    }
    groups.push_back(g);
  }
  std::sort(groups.begin(), groups.end());
  return groups;
}

std::vector<std::vector<int>> block_partition(const minsuff::KIDecomposition& ki) {
  std::vector<std::vector<int>> groups;
  for (const auto& b : ki.blocks) {
    const Matrix& p = b.block.central_projection;
    std::vector<int> g;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      if (p(i, i).real() > 0.5) g.push_back(static_cast<int>(i));
    groups.push_back(g);
  }
  std::sort(groups.begin(), groups.end());
  return groups;
}

namespace {

DiscretePOVM normalize_effects(std::vector<Matrix> parts) {
  Matrix s = Matrix::Zero(parts.front().rows(), parts.front().cols());
  for (const auto& p : parts) s += p;
  const Matrix root = minsuff::hermitian_function(hermitize(s), [](double x) { return 1.0 / std::sqrt(x); });
  for (auto& p : parts) p = hermitize(root * p * root);
  return minsuff::make_povm(std::move(parts));
}

}  // namespace

DiscretePOVM random_povm(Rng& rng, int d, int n) {
  // Parts of random rank; redrawn until their sum is invertible.
  for (;;) {
    std::vector<Matrix> parts;
    Matrix s = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      const Matrix g = minsuff::random_gaussian(rng, d, uniform_int(rng, 1, d));
      parts.push_back(g * g.adjoint());
      s += parts.back();
    }
    const RealVector ev = Eigen::SelfAdjointEigenSolver<Matrix>(hermitize(s)).eigenvalues();
    if (ev(0) > 1e-3 * ev(d - 1)) return normalize_effects(std::move(parts));
  }
}

DiscretePOVM random_pvm(Rng& rng, int d) {
  const Matrix u = minsuff::random_unitary(rng, d);
  const int groups = uniform_int(rng, 1, d);
  std::vector<int> owner(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) owner[static_cast<std::size_t>(i)] = i < groups ? i : uniform_int(rng, 0, groups - 1);
  std::vector<Matrix> effects(static_cast<std::size_t>(groups), Matrix::Zero(d, d));
  for (int i = 0; i < d; ++i) effects[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])] += u.col(i) * u.col(i).adjoint();
  return minsuff::make_povm(std::move(effects));
}

DiscretePOVM duplicated_povm(Rng& rng, int d, int n) {
  DiscretePOVM base = random_povm(rng, d, std::max(1, n - 1));
  const int victim = uniform_int(rng, 0, base.outcomes() - 1);
  const double t = uniform_real(rng, 0.2, 0.8);
  std::vector<Matrix> effects = base.effects;
  effects.push_back((1 - t) * effects[static_cast<std::size_t>(victim)]);
  effects[static_cast<std::size_t>(victim)] *= t;
  return minsuff::make_povm(std::move(effects));
}

DiscretePOVM qubit_trine() {
  std::vector<Matrix> effects;
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * M_PI * k / 3.0;
    Vector v(2);
    v << std::cos(a / 2), std::sin(a / 2);
    effects.push_back((2.0 / 3.0) * pure(v));
  }
  return minsuff::make_povm(std::move(effects));
}

DiscretePOVM computational_pvm(int d) {
  std::vector<Matrix> effects;
  for (int i = 0; i < d; ++i) effects.push_back(ket_bra(d, i, i));
  return minsuff::make_povm(std::move(effects));
}

RealMatrix random_stochastic(Rng& rng, int rows, int cols) {
  RealMatrix k(rows, cols);
  for (int j = 0; j < cols; ++j) k.col(j) = minsuff::random_probability(rng, rows);
  return k;
}

namespace {

// All vertices of {x >= 0 : a x = b} by basis enumeration.
std::vector<RealVector> vertices(const RealMatrix& a, const RealVector& b) {
  const int n = static_cast<int>(a.cols());
  Eigen::FullPivLU<RealMatrix> lu(a);
  lu.setThreshold(1e-10);
  const int r = static_cast<int>(lu.rank());
  std::vector<RealVector> out;
  if (r == 0) {
    if (b.norm() <= 1e-9) out.push_back(RealVector::Zero(n));
    return out;
  }
  std::vector<int> pick(static_cast<std::size_t>(n), 0);
  std::fill(pick.end() - r, pick.end(), 1);
  do {
    std::vector<int> cols;
    for (int j = 0; j < n; ++j)
      if (pick[static_cast<std::size_t>(j)]) cols.push_back(j);
    RealMatrix ab(a.rows(), r);
    for (int k = 0; k < r; ++k) ab.col(k) = a.col(cols[static_cast<std::size_t>(k)]);
    Eigen::ColPivHouseholderQR<RealMatrix> qr(ab);
    qr.setThreshold(1e-10);
    if (qr.rank() < r) continue;
    const RealVector xb = qr.solve(b);
    if ((ab * xb - b).norm() > 1e-9 * (1 + b.norm())) continue;
    if (xb.minCoeff() < -1e-10) continue;
    RealVector x = RealVector::Zero(n);
    for (int k = 0; k < r; ++k) x(cols[static_cast<std::size_t>(k)]) = std::max(0.0, xb(k));
    out.push_back(x);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace

VertexOracle vertex_enumeration(const minsuff::LinearProgram& lp) {
  VertexOracle o;
  const auto vs = vertices(lp.a, lp.b);
  if (vs.empty()) return o;
  o.feasible = true;
  o.objective = -INFINITY;
  for (const auto& v : vs) o.objective = std::max(o.objective, lp.c.dot(v));
  // Extreme rays: vertices of {d >= 0 : a d = 0, 1.d = 1}.
  RealMatrix ar(lp.a.rows() + 1, lp.a.cols());
  ar << lp.a, RealMatrix::Ones(1, lp.a.cols());
  RealVector br = RealVector::Zero(ar.rows());
  br(br.size() - 1) = 1;
  for (const auto& d : vertices(ar, br))
    if (lp.c.dot(d) > 1e-9) o.bounded = false;
  return o;
}

minsuff::LinearProgram random_lp(Rng& rng) {
  const int n = uniform_int(rng, 2, 8);
  const int m = uniform_int(rng, 1, std::min(5, n));
  minsuff::LinearProgram lp;
  lp.a = RealMatrix(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) lp.a(i, j) = uniform_int(rng, -3, 3);
  if (m > 1 && uniform_real(rng, 0, 1) < 0.2) lp.a.row(m - 1) = lp.a.row(0) - 2 * lp.a.row(1 % m);
  const double mode = uniform_real(rng, 0, 1);
  if (mode < 0.6) {
    RealVector x0(n);
    for (int j = 0; j < n; ++j) x0(j) = uniform_real(rng, 0, 1) < 0.3 ? 0.0 : uniform_int(rng, 0, 4);
    lp.b = lp.a * x0;
  } else {
    lp.b = RealVector(m);
    for (int i = 0; i < m; ++i) lp.b(i) = uniform_int(rng, -5, 5);
  }
  lp.c = RealVector(n);
  for (int j = 0; j < n; ++j) lp.c(j) = uniform_int(rng, -4, 4);
  return lp;
}

PlantedChannel random_planted_channel(Rng& rng, int in_dim, int out_dim, int probes) {
  // Kraus operators K_k : C^out -> C^in with sum K_k* K_k = I_out.
  const int r = uniform_int(rng, (out_dim + in_dim - 1) / in_dim, in_dim * out_dim);  // r * in_dim >= out_dim
  const Matrix u = minsuff::random_unitary(rng, r * in_dim);
  const Matrix stacked = u.leftCols(out_dim);
  std::vector<Matrix> kraus;
  for (int k = 0; k < r; ++k) kraus.push_back(stacked.block(k * in_dim, 0, in_dim, out_dim));
  const auto heisenberg = [&](const Matrix& a) {
    Matrix s = Matrix::Zero(out_dim, out_dim);
    for (const auto& k : kraus) s += k.adjoint() * a * k;
    return s;
  };
  PlantedChannel out;
  out.channel = minsuff::Superoperator::from_function(in_dim, out_dim, heisenberg);
  minsuff::ChannelSpace space({in_dim}, {out_dim});
  out.problem = space.empty_problem();
  space.add_unital(out.problem);
  for (int p = 0; p < probes; ++p) {
    const Matrix rho = minsuff::random_density(rng, out_dim);
    space.add_predual(out.problem, rho, out.channel.predual(rho));
  }
  return out;
}

}  // namespace fixtures
