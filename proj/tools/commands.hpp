#pragma once

// Experiment-level helpers behind the mdiew command line: simulated count
// tables for Werner states and the witness-versus-lambda sweep.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdiew/witness.hpp"

namespace mdiew::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitParse = 3,
  kExitContract = 4,
  kExitSolver = 5,
};

struct ExperimentConfig {
  double rate_hz = 16.0;  // mean detected counts per second per outcome cell
  double time_s = 10.0;   // integration time per input pair
  double efficiency = 0.03;
  double phase_error = 0.0;  // applied to both Bell-state analysers
  double visibility = 1.0;
  double background_hz = 0.0;
};

// Ideal (noise-free) correlations of a Werner state seen through the
// configured analysers, before losses.
CorrelationTable werner_correlations(double lambda, const ExperimentConfig& cfg,
                                     const InputStateSet& inputs);

CountTable simulate_experiment(double lambda, const ExperimentConfig& cfg,
                               const InputStateSet& inputs, std::uint64_t seed);

struct SweepConfig {
  std::vector<double> lambdas;
  double reference_lambda = 0.94;
  int n_mc = 100;
  bool exact = false;  // use exact probabilities instead of Poisson counts
  int threads = 1;
  std::uint64_t seed = 0;
  ExperimentConfig experiment;
  WitnessOptions witness;
};

struct SweepRow {
  double lambda = 0.0;
  double w_self = 0.0;
  double std_self = 0.0;
  double w_fixed = 0.0;
  double std_fixed = 0.0;
  int n_mc = 0;
};

// One row per grid point, in grid order. Point i draws its counts from a
// stream derived from (seed, i); the reference point uses (seed, grid size).
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct WitnessReport {
  double value = 0.0;
  double std = 0.0;
  double mc_mean = 0.0;
  int n_mc = 0;
  bool certified = false;
  bool coeffs_computed = false;
  double regularization_distance = 0.0;
  WitnessCoefficients coeffs;
};

WitnessReport witness_report(const CountTable& counts,
                             const std::optional<WitnessCoefficients>& coeffs, int n_mc,
                             std::uint64_t seed, const WitnessOptions& options);

// Derives an independent 64-bit seed for stream `index` of a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

nlohmann::json read_json_file(const std::string& path);

std::string format_double(double v);

}  // namespace mdiew::cli
