#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "minsuff/experiment.hpp"
#include "minsuff/random.hpp"

namespace minsuff {

namespace {

constexpr std::size_t kMaxWords = 4096;

std::vector<std::vector<Matrix>> block_tuples(const StatisticalExperiment& e, const std::vector<std::size_t>& order) {
  const auto dims = e.blocks();
  const auto off = e.block_offsets();
  std::vector<std::vector<Matrix>> out(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a)
    for (std::size_t t : order) out[a].push_back(e.states[t].block(off[a], off[a], dims[a], dims[a]));
  return out;
}

// Word length used for a block of size d with k letters: 2 d^2, reduced so
// that the number of words stays below kMaxWords.
int word_length(int d, std::size_t k) {
  int len = 2 * d * d;
  if (k <= 1) return len;
  std::size_t total = 0, power = 1;
  for (int l = 1; l <= len; ++l) {
    power *= k;
    total += power;
    if (total > kMaxWords) return std::max(1, l - 1);
  }
  return len;
}

// Traces of all words in the tuple up to the given length, in lexicographic order.
std::vector<cplx> fingerprint(const std::vector<Matrix>& xs, int len) {
  std::vector<cplx> out;
  const int d = xs.empty() ? 0 : static_cast<int>(xs.front().rows());
  std::function<void(const Matrix&, int)> rec = [&](const Matrix& prod, int depth) {
    if (depth == len) return;
    for (const auto& x : xs) {
      Matrix next = prod * x;
      out.push_back(next.trace());
      rec(next, depth + 1);
    }
  };
  rec(Matrix::Identity(d, d), 0);
  return out;
}

bool fingerprints_match(const std::vector<cplx>& a, const std::vector<cplx>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > tol * (1.0 + std::abs(a[k]))) return false;
  return true;
}

double conjugation_residual(const Matrix& u, const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double r = 0;
  for (std::size_t t = 0; t < a.size(); ++t) r = std::max(r, (u * a[t] * u.adjoint() - b[t]).norm());
  return r;
}

// Unitary U with U a_t U* = b_t for all t, from the solution space of X a_t = b_t X.
std::optional<Matrix> intertwiner(const std::vector<Matrix>& a, const std::vector<Matrix>& b, Rng& rng, double tol) {
  const int d = static_cast<int>(a.front().rows());
  const Matrix id = Matrix::Identity(d, d);
  Matrix stacked(static_cast<Eigen::Index>(a.size()) * d * d, d * d);
  for (std::size_t t = 0; t < a.size(); ++t)
    stacked.middleRows(static_cast<Eigen::Index>(t) * d * d, d * d) = kron(a[t].transpose(), id) - kron(id, b[t]);
  const Matrix ns = null_space(stacked, 1e-8, 1.0);
  if (ns.cols() == 0) return std::nullopt;
  for (int attempt = 0; attempt < 3; ++attempt) {
    Vector coef = random_gaussian(rng, static_cast<int>(ns.cols()), 1).col(0);
    Matrix x = unvec(ns * coef, d, d);
    Matrix u = polar_unitary(x);
    if (conjugation_residual(u, a, b) <= tol) return u;
  }
  return std::nullopt;
}

std::vector<std::size_t> label_order(const StatisticalExperiment& e1, const StatisticalExperiment& e2) {
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

std::optional<IsomorphismWitness> experiments_isomorphic(const StatisticalExperiment& e1,
                                                         const StatisticalExperiment& e2,
                                                         const IsomorphismOptions& opts) {
  const auto order2 = label_order(e1, e2);
  if (opts.check_minimal) {
    if (find_fixing_channel(e1, opts.search))
      throw Error(ErrorCode::NotMinimalForm, "first experiment admits a non-trivial fixing channel");
    if (find_fixing_channel(e2, opts.search))
      throw Error(ErrorCode::NotMinimalForm, "second experiment admits a non-trivial fixing channel");
  }
  auto d1 = e1.blocks(), d2 = e2.blocks();
  {
    auto s1 = d1, s2 = d2;
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    if (s1 != s2) return std::nullopt;
  }
  std::vector<std::size_t> order1(e1.size());
  for (std::size_t k = 0; k < order1.size(); ++k) order1[k] = k;
  const auto t1 = block_tuples(e1, order1);
  const auto t2 = block_tuples(e2, order2);

  const std::size_t nb = d1.size();
  std::vector<std::vector<cplx>> f1(nb), f2(nb);
  for (std::size_t a = 0; a < nb; ++a) {
    f1[a] = fingerprint(t1[a], word_length(d1[a], e1.size()));
    f2[a] = fingerprint(t2[a], word_length(d2[a], e1.size()));
  }

  Rng rng(opts.seed);
  std::vector<std::vector<std::optional<Matrix>>> compat(nb, std::vector<std::optional<Matrix>>(nb));
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      if (d1[a] == d2[b] && fingerprints_match(f1[a], f2[b], opts.tol))
        compat[a][b] = intertwiner(t1[a], t2[b], rng, opts.tol);

  std::vector<int> assign(nb, -1);
  std::vector<bool> used(nb, false);
  std::function<bool(std::size_t)> place = [&](std::size_t a) {
    if (a == nb) return true;
    for (std::size_t b = 0; b < nb; ++b) {
      if (used[b] || !compat[a][b]) continue;
      used[b] = true;
      assign[a] = static_cast<int>(b);
      if (place(a + 1)) return true;
      used[b] = false;
    }
    return false;
  };
  if (!place(0)) return std::nullopt;

  IsomorphismWitness w;
  w.block_map = assign;
  const auto off1 = e1.block_offsets(), off2 = e2.block_offsets();
  w.unitary = Matrix::Zero(e2.dim, e1.dim);
  for (std::size_t a = 0; a < nb; ++a) {
    const Matrix& u = *compat[a][static_cast<std::size_t>(assign[a])];
    w.unitaries.push_back(u);
    w.unitary.block(off2[static_cast<std::size_t>(assign[a])], off1[a], d1[a], d1[a]) = u;
  }
  for (std::size_t t = 0; t < e1.size(); ++t)
    w.residual = std::max(w.residual, (w.unitary * e1.states[t] * w.unitary.adjoint() - e2.states[order2[t]]).norm());
  if (w.residual > opts.tol) return std::nullopt;
  return w;
}

}  // namespace minsuff
