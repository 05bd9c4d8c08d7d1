#pragma once

// Random instance generators and independent oracles shared by the unit tests
// and the acceptance runner. Nothing here calls the code under test except to
// build inputs (make_experiment / make_povm validate what we generate).

#include <optional>
#include <vector>

#include "minsuff/experiment.hpp"
#include "minsuff/optim.hpp"
#include "minsuff/povm.hpp"
#include "minsuff/random.hpp"

namespace fixtures {

using minsuff::Matrix;
using minsuff::RealMatrix;
using minsuff::RealVector;
using minsuff::Rng;

double frob(const Matrix& a);
double frob_diff(const Matrix& a, const Matrix& b);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive
double uniform_real(Rng& rng, double lo, double hi);

Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix ket_bra(int dim, int i, int j);
Matrix diag(const std::vector<double>& v);
Matrix pure(const minsuff::Vector& v);

struct PlantedBlock {
  int d = 1;
  int m = 1;
};

struct PlantedOptions {
  int min_dim = 2;
  int max_dim = 8;
  int min_states = 1;
  int max_states = 4;
  bool mixed_ranks = true;
  bool allow_padding = true;
};

/// rho_theta = U ( (+)_a q_{a,theta} rho_{a,theta} (x) omega_a  (+)  0_pad ) U*.
struct PlantedExperiment {
  minsuff::StatisticalExperiment experiment;
  std::vector<PlantedBlock> blocks;
  int pad = 0;
};

PlantedExperiment random_planted_experiment(Rng& rng, const PlantedOptions& opts = {});

/// Diagonal experiment on n points in which groups of points share likelihood
/// ratio vectors by construction; some points may carry no mass at all.
struct ClassicalFixture {
  minsuff::StatisticalExperiment experiment;
  std::vector<std::vector<double>> distributions;  // per state, per point
};

ClassicalFixture random_classical_experiment(Rng& rng, int max_points = 8, int max_states = 4,
                                             bool declare_blocks = false);

/// Exact partition of the points carrying mass by equality of the vectors
/// (p_theta(k) / sigma(k))_theta, by pairwise comparison. Groups are sorted.
std::vector<std::vector<int>> likelihood_ratio_partition(const std::vector<std::vector<double>>& dists,
                                                         double tol = 1e-9);

/// The same partition read off a decomposition: points lying in each block's
/// central projection, sorted.
std::vector<std::vector<int>> block_partition(const minsuff::KIDecomposition& ki);

minsuff::DiscretePOVM random_povm(Rng& rng, int d, int n);
minsuff::DiscretePOVM random_pvm(Rng& rng, int d);
/// Random POVM with one outcome split into two proportional pieces.
minsuff::DiscretePOVM duplicated_povm(Rng& rng, int d, int n);
minsuff::DiscretePOVM qubit_trine();
minsuff::DiscretePOVM computational_pvm(int d);
RealMatrix random_stochastic(Rng& rng, int rows, int cols);

/// Brute-force LP oracle: enumerate every basis of the equality system.
struct VertexOracle {
  bool feasible = false;
  bool bounded = true;  // only meaningful when feasible
  double objective = 0;
};

VertexOracle vertex_enumeration(const minsuff::LinearProgram& lp);

/// Random LP with n <= 8 variables and m <= 5 rows, sometimes infeasible.
minsuff::LinearProgram random_lp(Rng& rng);

/// Channel-feasibility instance with a known feasible Choi point: unitality
/// and predual constraints of a random channel on random probe states.
struct PlantedChannel {
  minsuff::AffinePsdProblem problem;
  minsuff::Superoperator channel;
};

PlantedChannel random_planted_channel(Rng& rng, int in_dim, int out_dim, int probes);

}  // namespace fixtures
