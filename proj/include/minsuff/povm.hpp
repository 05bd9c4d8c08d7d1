#pragma once

// Finite-outcome POVMs viewed as quantum-to-classical channels.

#include <optional>
#include <string>
#include <vector>

#include "minsuff/experiment.hpp"
#include "minsuff/numerics.hpp"
#include "minsuff/superoperator.hpp"

namespace minsuff {

struct DiscretePOVM {
  int dim = 0;
  std::vector<Matrix> effects;
  std::vector<std::string> labels;

  int outcomes() const { return static_cast<int>(effects.size()); }
  void validate(const Tolerances& tol = {}) const;
};

/// Builds and validates; empty labels become "0", "1", ...
DiscretePOVM make_povm(std::vector<Matrix> effects, std::vector<std::string> labels = {},
                       const Tolerances& tol = {});

/// Column-stochastic matrix: k(i, j) = kappa(i | j).
struct StochasticKernel {
  RealMatrix k;

  bool is_stochastic(double tol) const;
  /// sum_j k(i, j) N_j.
  std::vector<Matrix> apply(const std::vector<Matrix>& effects) const;
  StochasticKernel compose(const StochasticKernel& inner) const;  // this after inner
  static StochasticKernel identity(int n);
};

/// f -> sum_i f_i M_i on the diagonal algebra of C^n (off-diagonal matrix
/// units map to zero).
Superoperator qc_channel(const DiscretePOVM& m);
/// Same map acting on a function vector.
Matrix qc_apply(const DiscretePOVM& m, const RealVector& f);
/// (tr[rho M_i])_i.
RealVector outcome_distribution(const DiscretePOVM& m, const Matrix& rho);

/// Kernel with sum_j kappa(i|j) N_j = M_i, if one exists (exact LP decision).
std::optional<StochasticKernel> postprocessing_leq(const DiscretePOVM& m, const DiscretePOVM& n,
                                                   const Tolerances& tol = {});
/// Largest deviation |sum_j kappa(i|j) N_j - M_i| for a proposed kernel.
double postprocessing_residual(const StochasticKernel& k, const DiscretePOVM& m, const DiscretePOVM& n);

struct EquivalenceResult {
  bool equivalent = false;
  std::optional<StochasticKernel> m_from_n;  // M = kappa N
  std::optional<StochasticKernel> n_from_m;
};

EquivalenceResult povm_postproc_equiv(const DiscretePOVM& m, const DiscretePOVM& n, const Tolerances& tol = {});

/// rho_0 = I/d followed by the pure states |k>, (|k>+|l>)/sqrt2, (|k>+i|l>)/sqrt2.
std::vector<Matrix> informationally_complete_states(int d);

struct RelabelingResult {
  DiscretePOVM povm;
  std::vector<int> merge_map;  // old outcome -> new outcome (dropped zero effects -> 0)
  std::vector<int> dropped;    // old outcomes removed as zero effects
};

RelabelingResult relabeling_minimal_form(const DiscretePOVM& m, const Tolerances& tol = {});

struct KernelMinimality {
  bool minimal = false;
  double lp_value = 0;
  StochasticKernel kernel;  // optimal self-kernel
};

KernelMinimality kernel_minimal_check(const DiscretePOVM& m, const Tolerances& tol = {});

struct Dilation {
  DiscretePOVM povm;         // after zero-effect removal
  Superoperator gamma;       // M_n -> M_d, A -> sum_i <i|A|i> M_i
  Superoperator pinching;    // M_n -> M_n, A -> sum_i <i|A|i> |i><i|
  double factorization_residual = 0;  // |Gamma - Gamma^M o pinching|
  double restriction_residual = 0;    // |Gamma on diagonals - Gamma^M|
  DiscretePOVM recovered;              // effects Gamma(|i><i|)
};

Dilation fully_quantum_dilation(const DiscretePOVM& m, const Tolerances& tol = {});

/// Classical experiment (block sizes all one) of outcome distributions of the probes.
StatisticalExperiment povm_as_experiment(const DiscretePOVM& m, const std::vector<Matrix>& probes = {});

}  // namespace minsuff
