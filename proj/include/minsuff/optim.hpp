#pragma once

// Convex feasibility engines: dense simplex for LPs and Dykstra alternating
// projections for (affine subspace) ∩ (block-diagonal PSD cone).

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "minsuff/numerics.hpp"

namespace minsuff {

/// maximize c.x  subject to  A x = b,  x >= 0.
struct LinearProgram {
  RealMatrix a;
  RealVector b;
  RealVector c;

  int variables() const { return static_cast<int>(a.cols()); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  RealVector x;          // Optimal: primal solution
  double objective = 0;  // Optimal: c.x
  RealVector ray;        // Unbounded: x + t*ray feasible for t >= 0, c.ray > 0
  double phase_one_value = 0;  // sum of artificials at the end of phase 1
  int pivots = 0;

  bool feasible() const { return status == LpStatus::Optimal; }
};

/// Two-phase simplex with Bland's rule. Redundant rows are removed first by
/// fully pivoted elimination (threshold 1e-10 relative).
LpResult lp_solve(const LinearProgram& lp);

/// Affine constraints <F_k, X> = g_k on a block-diagonal Hermitian X.
/// Constraints are stored in the real coordinates of `hermitian_coords`,
/// concatenated block by block.
class AffinePsdProblem {
 public:
  AffinePsdProblem() = default;
  explicit AffinePsdProblem(std::vector<int> block_sizes);

  const std::vector<int>& block_sizes() const { return sizes_; }
  int coord_dim() const { return coord_dim_; }
  int constraint_count() const { return static_cast<int>(rows_.size()); }

  /// <F, X> = sum_b tr[F_b X_b] = value, F_b Hermitian.
  void add_constraint(const std::vector<Matrix>& f_blocks, double value);
  /// Re/Im parts of tr[C X] = value for a non-Hermitian C (two real rows; the
  /// imaginary row is dropped when C is Hermitian).
  void add_complex_constraint(const std::vector<Matrix>& c_blocks, cplx value);

  RealMatrix constraint_matrix() const;
  const std::vector<RealVector>& rows() const { return rows_; }
  RealVector rhs() const;

  RealVector to_coords(const std::vector<Matrix>& blocks) const;
  std::vector<Matrix> from_coords(const RealVector& x) const;

  double affine_residual(const std::vector<Matrix>& blocks) const;
  double min_eigenvalue(const std::vector<Matrix>& blocks) const;

 private:
  std::vector<int> sizes_;
  int coord_dim_ = 0;
  std::vector<RealVector> rows_;
  std::vector<double> rhs_;
};

using HermitianBlocks = std::vector<Matrix>;

/// The problem restricted to X_b = V_b Z_b V_b* for given isometries V_b (a
/// face of the cone). Blocks whose face has no columns are removed.
struct FaceRestriction {
  AffinePsdProblem problem;
  std::vector<Matrix> faces;
  std::vector<int> kept;  // original index of each block of `problem`

  HermitianBlocks lift(const HermitianBlocks& z) const;
  HermitianBlocks restrict(const HermitianBlocks& x) const;
};

FaceRestriction restrict_to_face(const AffinePsdProblem& p, const std::vector<Matrix>& faces);

struct DykstraOptions {
  int max_iter = 5000;
  int starts = 20;
  std::uint64_t seed = 1;
  double feas_tol = 1e-7;
  /// Linear direction to decrease: biases starts and drives a post-feasibility push.
  std::optional<HermitianBlocks> objective;
  int push_rounds = 4;
  /// When positive, an accepted point is refined by further alternating
  /// projections until the affine-exact point has min eigenvalue >= -polish_tol;
  /// points that cannot be refined are rejected.
  double polish_tol = 0.0;
  int polish_iter = 3000;
  /// Extra acceptance test applied to a verified point (e.g. "not the identity").
  std::function<bool(const HermitianBlocks&)> accept;
  bool record_trace = false;
  int threads = 1;
  /// A start that stalls short of the feasible set (typical when the set has
  /// no interior, where alternating projections converge sublinearly) has its
  /// final iterate refined in factored form X = R R* by at most this many
  /// Levenberg-Marquardt steps, unless an earlier start reached the set.
  /// 0 disables the fallback.
  int refine_iter = 1000;
};

struct DykstraResult {
  std::optional<HermitianBlocks> solution;
  int start_index = -1;
  int iterations = 0;  // total over all starts
  double affine_residual = 0;
  double min_eigenvalue = 0;
  bool affine_set_empty = false;
  bool reached_feasibility = false;  // some start produced a verified point (accepted or not)
  bool refined = false;              // the solution came from the factored refinement
  std::vector<double> trace;  // affine residual of the PSD iterate, per iteration (first start)
};

/// Runs Dykstra from each given start in order; returns the first verified point.
DykstraResult dykstra_feasibility(const AffinePsdProblem& problem,
                                  const std::vector<HermitianBlocks>& starts,
                                  const DykstraOptions& opts = {});

/// Same, with `opts.starts` seeded random starts.
DykstraResult dykstra_feasibility(const AffinePsdProblem& problem, const DykstraOptions& opts = {});

}  // namespace minsuff
