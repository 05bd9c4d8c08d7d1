#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "minsuff/optim.hpp"

namespace minsuff {

void LinearProgram::validate() const {
  if (a.rows() != b.size() || a.cols() != c.size()) {
    std::ostringstream os;
    os << "LinearProgram: A is " << a.rows() << "x" << a.cols() << ", b has " << b.size()
       << ", c has " << c.size();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;

struct Reduced {
  RealMatrix a;
  RealVector b;
  bool inconsistent = false;
};

// Fully pivoted elimination on [A | b]; returns an equivalent full-row-rank system.
Reduced eliminate(const RealMatrix& a_in, const RealVector& b_in) {
  RealMatrix a = a_in;
  RealVector b = b_in;
  const Eigen::Index m = a.rows(), n = a.cols();
  const double scale = std::max(1.0, a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
  const double bscale = std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)] = j;

  Eigen::Index rank = 0;
  for (; rank < std::min(m, n); ++rank) {
    Eigen::Index pr = 0, pc = 0;
    const double best =
        a.bottomRightCorner(m - rank, n - rank).cwiseAbs().maxCoeff(&pr, &pc);
    if (best <= kRankTol * scale) break;
    pr += rank;
    pc += rank;
    a.row(rank).swap(a.row(pr));
    std::swap(b(rank), b(pr));
    a.col(rank).swap(a.col(pc));
    std::swap(cols[static_cast<std::size_t>(rank)], cols[static_cast<std::size_t>(pc)]);
    for (Eigen::Index i = rank + 1; i < m; ++i) {
      const double f = a(i, rank) / a(rank, rank);
      if (f == 0.0) continue;
      a.row(i) -= f * a.row(rank);
      b(i) -= f * b(rank);
    }
  }
  Reduced out;
  for (Eigen::Index i = rank; i < m; ++i)
    if (std::abs(b(i)) > 1e-9 * bscale) out.inconsistent = true;
  // undo the column permutation on the kept rows
  out.a = RealMatrix::Zero(rank, n);
  for (Eigen::Index j = 0; j < n; ++j)
    out.a.col(cols[static_cast<std::size_t>(j)]) = a.col(j).head(rank);
  out.b = b.head(rank);
  return out;
}

class Tableau {
 public:
  // rows 0..m-1 constraints, row m objective (reduced costs, maximisation form:
  // entering candidates have t(m, j) < 0), last column rhs.
  Tableau(const RealMatrix& a, const RealVector& b, Eigen::Index extra_cols)
      : m_(a.rows()), n_(a.cols() + extra_cols), t_(RealMatrix::Zero(a.rows() + 1, n_ + 1)) {
    t_.topLeftCorner(m_, a.cols()) = a;
    t_.col(n_).head(m_) = b;
    basis_.assign(static_cast<std::size_t>(m_), -1);
  }

  RealMatrix& t() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return m_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
    ++pivots_;
  }

  enum class Outcome { Optimal, Unbounded };

  // Bland's rule over columns [0, usable).
  Outcome run(Eigen::Index usable, Eigen::Index* unbounded_col) {
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < usable; ++j)
        if (t_(m_, j) < -kCostTol) {
          enter = j;
          break;
        }
      if (enter < 0) return Outcome::Optimal;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (t_(i, enter) <= kPivotTol) continue;
        const double ratio = t_(i, n_) / t_(i, enter);
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) {
        *unbounded_col = enter;
        return Outcome::Unbounded;
      }
      pivot(leave, enter);
    }
    throw Error(ErrorCode::NumericalDegeneracy, "lp_solve: pivot limit exceeded");
  }

  int pivots() const { return pivots_; }

  void drop_row(Eigen::Index r) {
    RealMatrix nt(t_.rows() - 1, t_.cols());
    nt << t_.topRows(r), t_.bottomRows(t_.rows() - r - 1);
    t_ = std::move(nt);
    basis_.erase(basis_.begin() + r);
    --m_;
  }

 private:
  Eigen::Index m_;
  Eigen::Index n_;
  RealMatrix t_;
  std::vector<Eigen::Index> basis_;
  int pivots_ = 0;
};

}  // namespace

LpResult lp_solve(const LinearProgram& lp) {
  lp.validate();
  const Eigen::Index n = lp.a.cols();
  LpResult res;
  Reduced red = eliminate(lp.a, lp.b);
  if (red.inconsistent) {
    res.status = LpStatus::Infeasible;
    res.phase_one_value = std::numeric_limits<double>::infinity();
    return res;
  }
  const Eigen::Index m = red.a.rows();
  for (Eigen::Index i = 0; i < m; ++i)
    if (red.b(i) < 0) {
      red.a.row(i) *= -1.0;
      red.b(i) *= -1.0;
    }

  // Phase 1: artificials n..n+m-1, minimise their sum.
  Tableau tab(red.a, red.b, m);
  auto& t = tab.t();
  for (Eigen::Index i = 0; i < m; ++i) {
    t(i, n + i) = 1.0;
    tab.basis()[static_cast<std::size_t>(i)] = n + i;
  }
  for (Eigen::Index i = 0; i < m; ++i) t.row(m) -= t.row(i);
  for (Eigen::Index i = 0; i < m; ++i) t(m, n + i) = 0.0;
  Eigen::Index dummy = -1;
  tab.run(n + m, &dummy);
  res.phase_one_value = -t(tab.rows(), n + m);
  if (res.phase_one_value > 1e-9 * (1.0 + red.b.norm())) {
    res.status = LpStatus::Infeasible;
    res.pivots = tab.pivots();
    return res;
  }

  // Drive remaining artificials out of the basis.
  for (Eigen::Index i = 0; i < tab.rows();) {
    if (tab.basis()[static_cast<std::size_t>(i)] < n) {
      ++i;
      continue;
    }
    Eigen::Index col = -1;
    double best = kPivotTol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(t(i, j)) > best) {
        best = std::abs(t(i, j));
        col = j;
      }
    if (col >= 0) {
      tab.pivot(i, col);
      ++i;
    } else {
      tab.drop_row(i);
    }
  }

  // Phase 2 objective row: reduced costs of  -c  (maximise c.x).
  const Eigen::Index mm = tab.rows();
  auto& t2 = tab.t();
  t2.row(mm).setZero();
  for (Eigen::Index j = 0; j < n; ++j) t2(mm, j) = -lp.c(j);
  for (Eigen::Index i = 0; i < mm; ++i) {
    const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(i)];
    const double cb = lp.c(bj);
    if (cb != 0.0) t2.row(mm) += cb * t2.row(i);
  }
  for (Eigen::Index j = n; j < n + m; ++j) t2(mm, j) = 0.0;

  Eigen::Index ucol = -1;
  auto outcome = tab.run(n, &ucol);
  res.pivots = tab.pivots();
  if (outcome == Tableau::Outcome::Unbounded) {
    res.status = LpStatus::Unbounded;
    res.ray = RealVector::Zero(n);
    res.ray(ucol) = 1.0;
    for (Eigen::Index i = 0; i < mm; ++i) {
      const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(i)];
      res.ray(bj) = -t2(i, ucol);
    }
    return res;
  }

  // Recompute the basic solution from the reduced system for accuracy.
  std::vector<Eigen::Index> basic;
  for (Eigen::Index i = 0; i < mm; ++i) basic.push_back(tab.basis()[static_cast<std::size_t>(i)]);
  RealVector x = RealVector::Zero(n);
  if (!basic.empty()) {
    RealMatrix ab(red.a.rows(), static_cast<Eigen::Index>(basic.size()));
    for (std::size_t k = 0; k < basic.size(); ++k) ab.col(static_cast<Eigen::Index>(k)) = red.a.col(basic[k]);
    RealVector xb = ab.colPivHouseholderQr().solve(red.b);
    for (std::size_t k = 0; k < basic.size(); ++k) x(basic[k]) = xb(static_cast<Eigen::Index>(k));
  }
  const RealVector tab_x = [&] {
    RealVector v = RealVector::Zero(n);
    for (Eigen::Index i = 0; i < mm; ++i) v(tab.basis()[static_cast<std::size_t>(i)]) = t2(i, n + m);
    return v;
  }();
  // keep the tableau value if recomputation degraded feasibility
  auto resid = [&](const RealVector& v) { return (lp.a * v - lp.b).norm(); };
  if (!(x.minCoeff() >= -1e-12) || resid(x) > resid(tab_x)) x = tab_x;
  for (Eigen::Index j = 0; j < n; ++j)
    if (x(j) < 0 && x(j) > -1e-9) x(j) = 0.0;

  res.status = LpStatus::Optimal;
  res.x = std::move(x);
  res.objective = lp.c.dot(res.x);
  return res;
}

}  // namespace minsuff
