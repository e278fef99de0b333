#include "commands.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "mdiew/errors.hpp"

namespace mdiew::cli {

CorrelationTable werner_correlations(double lambda, const ExperimentConfig& cfg,
                                     const InputStateSet& inputs) {
  const auto meas = MeasurementModel::make(cfg.phase_error, cfg.phase_error, cfg.visibility);
  return ideal_correlations(make_werner(lambda), inputs, meas);
}

CountTable simulate_experiment(double lambda, const ExperimentConfig& cfg,
                               const InputStateSet& inputs, std::uint64_t seed) {
  if (!(cfg.rate_hz >= 0.0)) throw DomainError("rate must be nonnegative");
  if (!(cfg.efficiency > 0.0 && cfg.efficiency <= 1.0)) {
    throw DomainError("efficiency must lie in (0, 1]");
  }
  const auto lossy = apply_efficiency(werner_correlations(lambda, cfg, inputs), cfg.efficiency);
  const double pair_rate = cfg.rate_hz * kJointOutcomes / cfg.efficiency;
  auto counts = simulate_counts(lossy, inputs, pair_rate, cfg.time_s, seed, cfg.background_hz);
  counts.metadata["lambda"] = lambda;
  counts.metadata["efficiency"] = cfg.efficiency;
  counts.metadata["phase_error_rad"] = cfg.phase_error;
  counts.metadata["visibility"] = cfg.visibility;
  counts.metadata["rate_per_outcome_hz"] = cfg.rate_hz;
  return counts;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

WitnessReport witness_report(const CountTable& counts,
                             const std::optional<WitnessCoefficients>& coeffs, int n_mc,
                             std::uint64_t seed, const WitnessOptions& options) {
  const auto inputs = inputs_from_labels(counts.input_labels());
  const auto res = witness_pipeline(counts, inputs, coeffs, options);
  WitnessReport r;
  r.value = res.value;
  r.coeffs = res.coeffs;
  r.coeffs_computed = res.coeffs_computed;
  r.regularization_distance = res.regularization_distance;
  if (n_mc > 0) {
    const auto mc = monte_carlo_error(counts, inputs, res.coeffs, n_mc, seed);
    r.std = mc.std;
    r.mc_mean = mc.mean;
    r.n_mc = mc.n_samples;
  } else {
    r.mc_mean = res.value;
  }
  r.certified = certifies_entanglement(r.value, r.std);
  return r;
}

namespace {

SweepRow exact_row(double lambda, const WitnessCoefficients& reference, const SweepConfig& cfg,
                   const InputStateSet& inputs) {
  const auto t = werner_correlations(lambda, cfg.experiment, inputs);
  const auto own = extract_coefficients(t, inputs, cfg.witness);
  SweepRow row;
  row.lambda = lambda;
  row.w_self = evaluate_witness(own, t);
  row.w_fixed = evaluate_witness(reference, t);
  return row;
}

SweepRow noisy_row(double lambda, std::uint64_t point_seed, const WitnessCoefficients& reference,
                   const SweepConfig& cfg, const InputStateSet& inputs) {
  const auto counts = simulate_experiment(lambda, cfg.experiment, inputs, point_seed);
  const auto mc_seed = derive_seed(point_seed, 1);
  const auto self = witness_report(counts, std::nullopt, cfg.n_mc, mc_seed, cfg.witness);
  const auto fixed = witness_report(counts, reference, cfg.n_mc, mc_seed, cfg.witness);
  SweepRow row;
  row.lambda = lambda;
  row.w_self = self.value;
  row.std_self = self.std;
  row.w_fixed = fixed.value;
  row.std_fixed = fixed.std;
  row.n_mc = self.n_mc;
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  if (cfg.lambdas.empty()) throw DomainError("sweep: empty lambda grid");
  for (double l : cfg.lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw DomainError("sweep: lambda outside [0, 1]");
  }
  if (!(cfg.reference_lambda >= 0.0 && cfg.reference_lambda <= 1.0)) {
    throw DomainError("sweep: reference lambda outside [0, 1]");
  }
  if (cfg.n_mc < 0 || cfg.n_mc == 1) throw DomainError("sweep: mc must be 0 or at least 2");

  const auto inputs = default_inputs();
  const std::size_t n = cfg.lambdas.size();
  WitnessCoefficients reference;
  if (cfg.exact) {
    reference = extract_coefficients(werner_correlations(cfg.reference_lambda, cfg.experiment, inputs),
                                     inputs, cfg.witness);
  } else {
    const auto counts = simulate_experiment(cfg.reference_lambda, cfg.experiment, inputs,
                                            derive_seed(cfg.seed, n));
    reference = witness_pipeline(counts, inputs, std::nullopt, cfg.witness).coeffs;
  }

  std::vector<SweepRow> rows(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        rows[i] = cfg.exact ? exact_row(cfg.lambdas[i], reference, cfg, inputs)
                            : noisy_row(cfg.lambdas[i], derive_seed(cfg.seed, i), reference, cfg,
                                        inputs);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "lambda,w_self,std_self,w_fixed,std_fixed,n_mc\n";
  for (const auto& r : rows) {
    os << format_double(r.lambda) << ',' << format_double(r.w_self) << ','
       << format_double(r.std_self) << ',' << format_double(r.w_fixed) << ','
       << format_double(r.std_fixed) << ',' << r.n_mc << '\n';
  }
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DomainError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DomainError("cannot rename onto " + path + ": " + ec.message());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace mdiew::cli
