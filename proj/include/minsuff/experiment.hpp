#pragma once

// Statistical experiments on finite-dimensional matrix algebras and their
// minimal sufficient forms.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "minsuff/algebra.hpp"
#include "minsuff/numerics.hpp"
#include "minsuff/optim.hpp"
#include "minsuff/superoperator.hpp"

namespace minsuff {

/// Family of density matrices on the algebra (+)_a M_{d_a} (a single full
/// block when block_dims is absent).
struct StatisticalExperiment {
  int dim = 0;
  std::vector<std::string> labels;
  std::vector<Matrix> states;
  std::optional<std::vector<int>> block_dims;

  std::size_t size() const { return states.size(); }
  std::vector<int> blocks() const;
  std::vector<int> block_offsets() const;
  Matrix average_state() const;
  /// Throws InvalidInput / DimensionMismatch with a description of the first violation.
  void validate(const Tolerances& tol = {}) const;
};

/// Builds and validates; empty labels become "0", "1", ...
StatisticalExperiment make_experiment(std::vector<Matrix> states, std::vector<std::string> labels = {},
                                      std::optional<std::vector<int>> block_dims = std::nullopt,
                                      const Tolerances& tol = {});

struct SearchOptions {
  int starts = 20;
  int max_iter = 5000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Minimum Choi distance from the identity for a fixing-channel witness.
  double min_distance = 1e-5;
};

struct ExperimentOptions {
  Tolerances tol;
  int t_grid_size = 8;
  int refinements = 2;
  std::uint64_t seed = 0x5eed;
  SearchOptions search;
};

/// Cocycle time grid: the default eight points, extended by scaled copies
/// when more are requested.
std::vector<double> cocycle_time_grid(int size);

struct SupportRestriction {
  StatisticalExperiment experiment;
  Matrix isometry;           // dim x rank, columns span the support
  Superoperator compression;  // A -> W* A W, a channel M_dim -> M_rank
  bool was_faithful = false;
};

SupportRestriction restrict_to_support(const StatisticalExperiment& e, const Tolerances& tol = {});

std::vector<Matrix> cocycle_generators(const StatisticalExperiment& faithful,
                                       const std::vector<double>& t_grid, const Tolerances& tol = {});

/// Generated by the cocycles on `t_grid` and closed under x -> s^{it} x s^{-it}
/// of the average state.
StarAlgebra cocycle_algebra(const StatisticalExperiment& faithful, const std::vector<double>& t_grid,
                            const Tolerances& tol = {});

/// Refines the grid (up to opts.refinements doublings) until the algebra
/// supports a consistent decomposition; throws AlgebraNotStabilized otherwise.
StarAlgebra minimal_sufficient_subalgebra(const StatisticalExperiment& faithful,
                                          const ExperimentOptions& opts = {});

struct KIBlock {
  WedderburnBlock block;     // isometry in the coordinates of the input experiment
  Matrix omega;              // m x m, parameter independent
  std::vector<double> q;     // per state
  std::vector<Matrix> rho;   // per state, d x d
};

struct KIDecomposition {
  int dim = 0;
  Matrix support;            // dim x rank isometry onto the support of the average state
  std::vector<KIBlock> blocks;
  StarAlgebra algebra;       // minimal sufficient subalgebra on the support (rank x rank)
  std::vector<double> t_grid;
  double omega_spread = 0;   // max Frobenius deviation of omega candidates
  double reconstruction_residual = 0;

  Matrix reconstruct(std::size_t theta) const;
  std::vector<int> block_d() const;
  std::vector<int> block_m() const;
};

KIDecomposition ki_decompose(const StatisticalExperiment& e, const ExperimentOptions& opts = {});

struct MinimalForm {
  StatisticalExperiment experiment;
  KIDecomposition decomposition;
};

MinimalForm minimal_form(const StatisticalExperiment& e, const ExperimentOptions& opts = {});

/// State-preserving conditional expectation onto the minimal algebra; on a
/// non-faithful experiment the kernel of the average state is an extra
/// one-dimensional block so that the map stays unital.
Superoperator conditional_expectation_for(const StatisticalExperiment& e, const KIDecomposition& ki);

/// Block structure (+)_a M_{d_a} of the channel variable between two block algebras.
class ChannelSpace {
 public:
  ChannelSpace(std::vector<int> in_blocks, std::vector<int> out_blocks);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  std::vector<int> variable_blocks() const;

  AffinePsdProblem empty_problem() const;
  void add_unital(AffinePsdProblem& p) const;
  /// predual(rho_out) = rho_in.
  void add_predual(AffinePsdProblem& p, const Matrix& rho_out, const Matrix& rho_in) const;

  HermitianBlocks compress(const Superoperator& s) const;
  Superoperator expand(const HermitianBlocks& blocks) const;
  HermitianBlocks identity_choi() const;

  /// Every channel with predual(outs[k]) = ins[k] has its Choi blocks
  /// supported on the returned isometries. The face is exposed by
  /// (1 - s(X_in))^T (x) X_out for PSD combinations X of the given pairs.
  std::vector<Matrix> exposed_face(const std::vector<Matrix>& outs, const std::vector<Matrix>& ins) const;

 private:
  std::vector<int> in_, out_, in_off_, out_off_;
  int in_dim_ = 0, out_dim_ = 0;
};

/// Channel Gamma != id with Gamma_*(rho) = rho for all states, if one is found.
std::optional<Superoperator> find_fixing_channel(const StatisticalExperiment& e,
                                                 const SearchOptions& opts = {},
                                                 const Tolerances& tol = {});

/// Channel Lambda : M_1 -> M_2 with Lambda_*(rho2_theta) = rho1_theta, if one is found.
std::optional<Superoperator> check_coarse_graining(const StatisticalExperiment& e1,
                                                   const StatisticalExperiment& e2,
                                                   const SearchOptions& opts = {},
                                                   const Tolerances& tol = {});

/// Max over states of the residual ||Lambda_*(rho2) - rho1||_F.
double coarse_graining_residual(const Superoperator& lambda, const StatisticalExperiment& e1,
                                const StatisticalExperiment& e2);

struct IsomorphismWitness {
  std::vector<int> block_map;       // block a of E1 -> block_map[a] of E2
  std::vector<Matrix> unitaries;    // per E1 block
  Matrix unitary;                   // rho2 = U rho1 U*
  double residual = 0;
};

struct IsomorphismOptions {
  bool check_minimal = true;
  SearchOptions search;
  std::uint64_t seed = 7;
  double tol = 1e-7;
};

/// Throws NotMinimalForm when check_minimal is set and either input admits a fixing channel.
std::optional<IsomorphismWitness> experiments_isomorphic(const StatisticalExperiment& e1,
                                                         const StatisticalExperiment& e2,
                                                         const IsomorphismOptions& opts = {});

StatisticalExperiment embed_with_ancilla(const StatisticalExperiment& e, const Matrix& omega);
StatisticalExperiment embed_direct_sum(const StatisticalExperiment& e, int pad_dim);

}  // namespace minsuff
