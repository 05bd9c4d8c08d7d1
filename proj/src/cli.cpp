#include "minsuff/cli.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "minsuff/experiment.hpp"
#include "minsuff/io.hpp"
#include "minsuff/povm.hpp"

namespace minsuff::cli {

namespace {

using io::json;

struct Settings {
  double tol = -1;  // overrides feas_tol when set
  int t_grid = 8;
  int starts = 20;
  int max_iter = 5000;
  std::uint64_t seed = 1;
  bool text = false;
  int threads = 1;
  bool dilate = false;
  bool timing = false;
  std::vector<std::string> files;

  Tolerances tolerances() const {
    Tolerances t;
    if (tol > 0) t.feas_tol = tol;
    return t;
  }
  SearchOptions search() const {
    SearchOptions s;
    s.starts = starts;
    s.max_iter = max_iter;
    s.seed = seed;
    s.threads = threads;
    return s;
  }
  ExperimentOptions experiment() const {
    ExperimentOptions o;
    o.tol = tolerances();
    o.t_grid_size = t_grid;
    o.seed = seed;
    o.search = search();
    return o;
  }
};

json options_json(const Settings& s) {
  const Tolerances t = s.tolerances();
  return json{{"feas_tol", t.feas_tol},   {"eq_tol", t.eq_tol},   {"eig_cluster_tol", t.eig_cluster_tol},
              {"t_grid", s.t_grid},       {"starts", s.starts},   {"max_iter", s.max_iter},
              {"seed", s.seed},           {"threads", s.threads}};
}

json vector_json(const std::vector<double>& v) { return json(v); }

json kernel_json(const StochasticKernel& k) { return io::real_matrix_to_json(k.k); }

double predual_residual(const Superoperator& s, const std::vector<Matrix>& states) {
  double r = 0;
  for (const auto& st : states) r = std::max(r, (s.predual(st) - st).norm());
  return r;
}

// ---------------------------------------------------------------------------

json cmd_minimize(const Settings& s, json& residuals, std::string& verdict) {
  const auto opts = s.experiment();
  const auto e = io::experiment_from_json(io::load_json_file(s.files.at(0)), opts.tol);
  const MinimalForm mf = minimal_form(e, opts);
  const KIDecomposition& ki = mf.decomposition;
  const Superoperator cond = conditional_expectation_for(e, ki);

  json blocks = json::array();
  for (const auto& kb : ki.blocks) {
    json support = json::array();
    for (int k = 0; k < e.dim; ++k)
      if (kb.block.central_projection(k, k).real() > 0.5) support.push_back(k);
    json rhos = json::array();
    for (const auto& r : kb.rho) rhos.push_back(io::matrix_to_json(r));
    blocks.push_back({{"d", kb.block.d},
                      {"m", kb.block.m},
                      {"q", vector_json(kb.q)},
                      {"omega", io::matrix_to_json(kb.omega)},
                      {"rho", std::move(rhos)},
                      {"support_indices", std::move(support)},
                      {"isometry", io::matrix_to_json(kb.block.isometry)}});
  }
  const bool fixing = find_fixing_channel(mf.experiment, opts.search, opts.tol).has_value();

  residuals["reconstruction"] = ki.reconstruction_residual;
  residuals["omega_spread"] = ki.omega_spread;
  residuals["state_preservation"] = predual_residual(cond, e.states);
  residuals["conditional_expectation_unitality"] = cond.unitality_residual();
  residuals["conditional_expectation_choi_min_eig"] = cond.choi_min_eigenvalue();
  verdict = fixing ? "minimized-unverified" : "minimized";

  return json{{"input", {{"dim", e.dim}, {"states", e.size()}, {"support_rank", ki.support.cols()}}},
              {"algebra_dim", ki.algebra.dim()},
              {"t_grid", vector_json(ki.t_grid)},
              {"blocks", std::move(blocks)},
              {"minimal_form", io::experiment_to_json(mf.experiment)},
              {"minimality_check", {{"fixing_channel_found", fixing}}},
              {"conditional_expectation_choi", io::matrix_to_json(cond.choi())}};
}

json cmd_equiv(const Settings& s, json& residuals, std::string& verdict) {
  const auto opts = s.experiment();
  const auto e1 = io::experiment_from_json(io::load_json_file(s.files.at(0)), opts.tol);
  const auto e2 = io::experiment_from_json(io::load_json_file(s.files.at(1)), opts.tol);
  const auto m1 = minimal_form(e1, opts).experiment;
  const auto m2 = minimal_form(e2, opts).experiment;
  IsomorphismOptions iso;
  iso.search = opts.search;
  iso.seed = s.seed;
  json result{{"minimal_block_dims", {m1.blocks(), m2.blocks()}}};
  try {
    const auto w = experiments_isomorphic(m1, m2, iso);
    if (w) {
      verdict = "isomorphic";
      result["witness"] = {{"block_map", w->block_map}, {"unitary", io::matrix_to_json(w->unitary)}};
      residuals["conjugation"] = w->residual;
    } else {
      verdict = "not-isomorphic";
    }
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NotMinimalForm) throw;
    verdict = "inconclusive";
    result["reason"] = err.what();
  }
  return result;
}

json cmd_coarse(const Settings& s, json& residuals, std::string& verdict) {
  const auto tol = s.tolerances();
  const auto e1 = io::experiment_from_json(io::load_json_file(s.files.at(0)), tol);
  const auto e2 = io::experiment_from_json(io::load_json_file(s.files.at(1)), tol);
  const auto w = check_coarse_graining(e1, e2, s.search(), tol);
  json result{{"budget", {{"starts", s.starts}, {"max_iter", s.max_iter}}}};
  if (w) {
    verdict = "coarse-graining";
    result["witness_choi"] = io::matrix_to_json(w->choi());
    residuals["predual"] = coarse_graining_residual(*w, e1, e2);
    residuals["unitality"] = w->unitality_residual();
    residuals["choi_min_eig"] = w->choi_min_eigenvalue();
  } else {
    verdict = "no-certificate";
  }
  return result;
}

json order_json(const std::optional<StochasticKernel>& k, const DiscretePOVM& m, const DiscretePOVM& n) {
  if (!k) return json{{"feasible", false}};
  return json{{"feasible", true}, {"kernel", kernel_json(*k)}, {"residual", postprocessing_residual(*k, m, n)}};
}

json cmd_povm_order(const Settings& s, json&, std::string& verdict) {
  const auto tol = s.tolerances();
  const auto m = io::povm_from_json(io::load_json_file(s.files.at(0)), tol);
  const auto n = io::povm_from_json(io::load_json_file(s.files.at(1)), tol);
  const auto eq = povm_postproc_equiv(m, n, tol);
  if (eq.equivalent)
    verdict = "equivalent";
  else if (eq.m_from_n)
    verdict = "m-below-n";
  else if (eq.n_from_m)
    verdict = "n-below-m";
  else
    verdict = "incomparable";
  return json{{"m_leq_n", order_json(eq.m_from_n, m, n)}, {"n_leq_m", order_json(eq.n_from_m, n, m)}};
}

json dilation_json(const DiscretePOVM& m, const Tolerances& tol, json& residuals) {
  const Dilation dl = fully_quantum_dilation(m, tol);
  const auto eq = povm_postproc_equiv(dl.povm, dl.recovered, tol);
  residuals["factorization"] = dl.factorization_residual;
  residuals["diagonal_restriction"] = dl.restriction_residual;
  return json{{"outcomes", dl.povm.outcomes()},
              {"gamma_choi", io::matrix_to_json(dl.gamma.choi())},
              {"pinching_choi", io::matrix_to_json(dl.pinching.choi())},
              {"recovered", io::povm_to_json(dl.recovered)},
              {"recovered_equivalent", eq.equivalent}};
}

json cmd_povm_minimize(const Settings& s, json&, std::string& verdict) {
  const auto tol = s.tolerances();
  const auto m = io::povm_from_json(io::load_json_file(s.files.at(0)), tol);
  const auto r = relabeling_minimal_form(m, tol);
  verdict = r.povm.outcomes() == m.outcomes() ? "already-minimal" : "merged";
  return json{{"outcomes_before", m.outcomes()},
              {"outcomes_after", r.povm.outcomes()},
              {"merge_map", r.merge_map},
              {"dropped", r.dropped},
              {"povm", io::povm_to_json(r.povm)}};
}

json cmd_povm_kernel_check(const Settings& s, json& residuals, std::string& verdict) {
  const auto tol = s.tolerances();
  const auto m = io::povm_from_json(io::load_json_file(s.files.at(0)), tol);
  const auto km = kernel_minimal_check(m, tol);
  verdict = km.minimal ? "minimal" : "not-minimal";
  json result{{"lp_value", km.lp_value}, {"kernel", kernel_json(km.kernel)}};
  if (s.dilate) result["dilation"] = dilation_json(m, tol, residuals);
  return result;
}

json cmd_dilate(const Settings& s, json& residuals, std::string& verdict) {
  const auto tol = s.tolerances();
  const auto m = io::povm_from_json(io::load_json_file(s.files.at(0)), tol);
  json result = dilation_json(m, tol, residuals);
  verdict = result["recovered_equivalent"].get<bool>() ? "dilation-verified" : "dilation-mismatch";
  return result;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::AlgebraNotStabilized:
    case ErrorCode::OmegaInconsistent:
    case ErrorCode::NumericalDegeneracy:
    case ErrorCode::SingularState:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimal sufficient forms of quantum statistical experiments and POVM postprocessing"};
  app.name("minsuff");
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;
  app.add_option("--tol", s.tol, "Feasibility tolerance (overrides the default 1e-7)");
  app.add_option("--t-grid", s.t_grid, "Cocycle time-grid size")->check(CLI::PositiveNumber);
  app.add_option("--starts", s.starts, "Random starts for channel searches")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", s.max_iter, "Iteration budget per start")->check(CLI::PositiveNumber);
  app.add_option("--seed", s.seed, "Seed for all randomised steps");
  app.add_option("--threads", s.threads, "Threads for channel searches")->check(CLI::PositiveNumber);
  auto* json_flag = app.add_flag("--json", "Machine-readable report (default)");
  app.add_flag("--text", s.text, "Human-readable report")->excludes(json_flag);
  app.add_flag("--timing", s.timing, "Include wall-clock timing in the report");

  using Handler = std::function<json(const Settings&, json&, std::string&)>;
  struct Command {
    const char* name;
    const char* help;
    int files;
    Handler handler;
  };
  const std::vector<Command> commands = {
      {"minimize", "Koashi-Imoto decomposition and minimal form of an experiment", 1, cmd_minimize},
      {"equiv", "Isomorphism of the minimal forms of two experiments", 2, cmd_equiv},
      {"coarse", "Search for a channel coarse-graining experiment B into experiment A", 2, cmd_coarse},
      {"povm-order", "Postprocessing order between two POVMs", 2, cmd_povm_order},
      {"povm-minimize", "Relabeling-minimal form of a POVM", 1, cmd_povm_minimize},
      {"povm-kernel-check", "Kernel minimal sufficiency of a POVM", 1, cmd_povm_kernel_check},
      {"dilate", "Fully quantum dilation of a POVM", 1, cmd_dilate},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("files", s.files, c.files == 1 ? "Input file" : "Input files")->required()->expected(c.files);
    if (std::string(c.name) == "povm-kernel-check") sub->add_flag("--dilate", s.dilate, "Also emit the dilation");
    subs.push_back(sub);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  std::size_t which = 0;
  while (which < subs.size() && !subs[which]->parsed()) ++which;
  const Command& cmd = commands.at(which);

  json report;
  report["command"] = cmd.name;
  report["inputs"] = s.files;
  report["options"] = options_json(s);
  json residuals = json::object();
  std::string verdict;
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  try {
    s.tolerances().validate();
    report["result"] = cmd.handler(s, residuals, verdict);
  } catch (const Error& e) {
    code = exit_code_for(e.code());
    err << "error: " << e.what() << "\n";
    if (code == 1) return 1;
    verdict = "numerical-failure";
    report["result"] = json{{"error", std::string(to_string(e.code()))}, {"diagnostics", e.what()}};
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  report["verdict"] = verdict;
  report["residuals"] = residuals;
  if (s.timing)
    report["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  out << (s.text ? io::dump_text(report) : io::dump_json(report));
  return code;
}

}  // namespace minsuff::cli
