// mdiew: simulate MDI entanglement-witness experiments on Werner states,
// certify entanglement from count tables and sweep the witness over lambda.
//
// Exit codes: 0 success, 2 usage or domain error, 3 malformed input,
// 4 contract mismatch (input sets, table shapes), 5 solver failure.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mdiew/errors.hpp"

using namespace mdiew;
using namespace mdiew::cli;

namespace {

struct SimulateFlags {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  ExperimentConfig experiment;
};

struct WitnessFlags {
  std::string counts;
  std::string coeffs;
  std::string coeffs_out;
  std::string out;
  std::string format = "json";
  int n_mc = 100;
  std::uint64_t seed = 0;
};

struct SweepFlags {
  std::string lambdas;
  std::string grid;
  std::string out;
  std::string format = "csv";
  SweepConfig config;
};

WitnessOptions witness_options() {
  WitnessOptions opt;
  if (const char* dir = std::getenv("MDIEW_SOLVER_DUMP")) opt.dump_dir = dir;
  return opt;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    write_file_atomic(path, content);
  }
}

void add_experiment_flags(CLI::App* cmd, ExperimentConfig& e) {
  cmd->add_option("--rate", e.rate_hz, "Mean detected counts per second per outcome cell")
      ->capture_default_str();
  cmd->add_option("--time", e.time_s, "Integration time per input pair, seconds")
      ->capture_default_str();
  cmd->add_option("--efficiency", e.efficiency, "Overall detection efficiency in (0, 1]")
      ->capture_default_str();
  cmd->add_option("--phase-error", e.phase_error, "Analyser phase error, radians")
      ->capture_default_str();
  cmd->add_option("--visibility", e.visibility, "Analyser visibility in [0, 1]")
      ->capture_default_str();
  cmd->add_option("--background", e.background_hz, "Background counts per second per cell")
      ->capture_default_str();
}

int run_simulate(const SimulateFlags& f) {
  if (!(f.lambda >= 0.0 && f.lambda <= 1.0)) throw DomainError("--lambda must lie in [0, 1]");
  const auto counts = simulate_experiment(f.lambda, f.experiment, default_inputs(), f.seed);
  emit(f.out, to_json(counts).dump(2) + "\n");
  return kExitOk;
}

int run_witness(const WitnessFlags& f) {
  if (f.format != "json" && f.format != "csv") throw DomainError("--format must be json or csv");
  const auto counts = count_table_from_json(read_json_file(f.counts));
  std::optional<WitnessCoefficients> coeffs;
  if (!f.coeffs.empty()) coeffs = coefficients_from_json(read_json_file(f.coeffs));
  const auto report = witness_report(counts, coeffs, f.n_mc, f.seed, witness_options());

  std::string written;
  if (!f.coeffs_out.empty()) {
    write_file_atomic(f.coeffs_out, to_json(report.coeffs).dump(2) + "\n");
    written = f.coeffs_out;
  }

  if (f.format == "csv") {
    std::ostringstream os;
    os << "value,std,n_mc,certified\n"
       << format_double(report.value) << ',' << format_double(report.std) << ','
       << report.n_mc << ',' << (report.certified ? "true" : "false") << '\n';
    emit(f.out, os.str());
    return kExitOk;
  }
  nlohmann::json j;
  j["value"] = report.value;
  j["std"] = report.std;
  j["mc_mean"] = report.mc_mean;
  j["n_mc"] = report.n_mc;
  j["certified"] = report.certified;
  j["coeffs_source"] = report.coeffs_computed ? "computed" : "file";
  j["coeffs_path_written"] = written.empty() ? nlohmann::json(nullptr) : nlohmann::json(written);
  j["input_set_id"] = report.coeffs.input_set_id;
  j["regularization_distance"] = report.regularization_distance;
  emit(f.out, j.dump(2) + "\n");
  return kExitOk;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw DomainError("invalid lambda value '" + item + "'");
    }
  }
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  const auto parts = parse_list([&] {
    std::string s = text;
    for (auto& ch : s) {
      if (ch == ':') ch = ',';
    }
    return s;
  }());
  if (parts.size() != 3) throw DomainError("--grid expects start:stop:count");
  const int count = static_cast<int>(parts[2]);
  if (count < 1 || static_cast<double>(count) != parts[2]) {
    throw DomainError("--grid count must be a positive integer");
  }
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double v =
        count == 1 ? parts[0] : (parts[0] * (count - 1 - i) + parts[1] * i) / (count - 1);
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

int run_sweep_cmd(SweepFlags& f) {
  if (f.format != "json" && f.format != "csv") throw DomainError("--format must be json or csv");
  if (!f.lambdas.empty() && !f.grid.empty()) throw DomainError("give either --lambdas or --grid");
  f.config.lambdas = f.grid.empty() ? parse_list(f.lambdas) : parse_grid(f.grid);
  f.config.witness = witness_options();
  const auto rows = run_sweep(f.config);
  if (f.format == "csv") {
    emit(f.out, sweep_csv(rows));
    return kExitOk;
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"lambda", r.lambda},
                 {"w_self", r.w_self},
                 {"std_self", r.std_self},
                 {"w_fixed", r.w_fixed},
                 {"std_fixed", r.std_fixed},
                 {"n_mc", r.n_mc}});
  }
  emit(f.out, j.dump(2) + "\n");
  return kExitOk;
}

void add_witness_flags(CLI::App* cmd, WitnessFlags& f, bool coeffs_required) {
  cmd->add_option("--counts", f.counts, "Count table JSON")->required();
  auto* c = cmd->add_option("--coeffs", f.coeffs, "Stored witness coefficients JSON");
  if (coeffs_required) c->required();
  cmd->add_option("--coeffs-out", f.coeffs_out, "Write the coefficients used to this path");
  cmd->add_option("--mc", f.n_mc, "Monte-Carlo resamples for the error bar (0 disables)")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Monte-Carlo seed")->required();
  cmd->add_option("--out", f.out, "Report path (stdout if omitted)");
  cmd->add_option("--format", f.format, "json or csv")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MDI entanglement witnesses for Werner-state experiments"};
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a coincidence-count table");
  simulate->add_option("--lambda", sim.lambda, "Werner weight in [0, 1]")->required();
  simulate->add_option("--seed", sim.seed, "Random seed")->required();
  simulate->add_option("--out", sim.out, "Output path (stdout if omitted)");
  add_experiment_flags(simulate, sim.experiment);

  WitnessFlags wit;
  auto* witness = app.add_subcommand("witness", "Evaluate the witness on a count table");
  add_witness_flags(witness, wit, false);

  WitnessFlags app_flags;
  auto* apply = app.add_subcommand("apply", "Evaluate stored coefficients on a count table");
  add_witness_flags(apply, app_flags, true);

  SweepFlags sw;
  auto* sweep = app.add_subcommand("sweep", "Witness values over a grid of Werner weights");
  sweep->add_option("--lambdas", sw.lambdas, "Comma-separated lambda values");
  sweep->add_option("--grid", sw.grid, "Evenly spaced grid start:stop:count");
  sweep->add_option("--reference", sw.config.reference_lambda,
                    "Lambda at which the fixed coefficients are extracted")
      ->capture_default_str();
  sweep->add_option("--mc", sw.config.n_mc, "Monte-Carlo resamples per point (0 disables)")
      ->capture_default_str();
  sweep->add_flag("--exact", sw.config.exact, "Use exact probabilities instead of counts");
  sweep->add_option("--threads", sw.config.threads, "Worker threads")->capture_default_str();
  sweep->add_option("--seed", sw.config.seed, "Random seed")->required();
  sweep->add_option("--out", sw.out, "Output path (stdout if omitted)");
  sweep->add_option("--format", sw.format, "csv or json")->capture_default_str();
  add_experiment_flags(sweep, sw.config.experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*witness) return run_witness(wit);
    if (*apply) return run_witness(app_flags);
    if (*sweep) return run_sweep_cmd(sw);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const ContractError& e) {
    std::cerr << "contract error: " << e.what() << '\n';
    return kExitContract;
  } catch (const InfeasibleTableError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const StructuralError& e) {
    std::cerr << "contract error: " << e.what() << '\n';
    return kExitContract;
  }
  return kExitUsage;
}
