#pragma once

// The MDI-EW scenario: trusted input states, Bell-state measurements,
// correlation tables and coincidence counts.
//
// Tensor ordering. Each Bell-state measurement acts on (polarization, path)
// of its own side. The global order used when writing the full experiment
// is (x path, A polarization, B polarization, y path); Alice's POVM is
// reordered to (path, polarization) for that layout. Joint POVMs Pi_ab act on
// (x path, y path), so the partial transpose on A transposes the x factor.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdiew/qlin.hpp"

namespace mdiew {

inline constexpr int kOutcomes = 4;  // Bell outcomes per side

class InputStateSet {
 public:
  InputStateSet(std::vector<DensityOperator> states, std::vector<std::string> labels);

  std::size_t size() const { return states_.size(); }
  const DensityOperator& state(std::size_t i) const { return states_.at(i); }
  const std::vector<DensityOperator>& states() const { return states_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Identifier binding witness coefficients to this exact set.
  const std::string& id() const { return id_; }

  // Rank of the real span of the states inside the 2x2 Hermitian matrices.
  int span_rank() const;

 private:
  std::vector<DensityOperator> states_;
  std::vector<std::string> labels_;
  std::string id_;
};

// Order: |0>+|1>, |0>-|1>, |0>+i|1>, |0>-i|1>, |0>, |1>.
InputStateSet default_inputs();

// Resolves a label list against the default set; throws ContractError for
// anything else.
InputStateSet inputs_from_labels(const std::vector<std::string>& labels);

// Bell projectors with a path-qubit phase error diag(1, e^{i phase}) applied
// before projecting, then depolarized towards I/4 with the given visibility.
std::array<HermitianMatrix, kOutcomes> bsm_povm(double phase_error, double visibility);

struct MeasurementModel {
  std::array<HermitianMatrix, kOutcomes> povm_a;
  std::array<HermitianMatrix, kOutcomes> povm_b;
  double phase_error_a = 0.0;
  double phase_error_b = 0.0;
  double visibility = 1.0;

  static MeasurementModel make(double phase_error_a, double phase_error_b, double visibility);
  static MeasurementModel ideal() { return make(0.0, 0.0, 1.0); }
};

// P(ab|x,y), optionally with the aggregated non-detection outcome.
class CorrelationTable {
 public:
  CorrelationTable(std::size_t n_inputs, std::string input_set_id);

  std::size_t n_inputs() const { return n_; }
  const std::string& input_set_id() const { return input_set_id_; }

  static std::size_t index(int a, int b, std::size_t x, std::size_t y, std::size_t n) {
    return ((x * n + y) * kOutcomes + static_cast<std::size_t>(a)) * kOutcomes +
           static_cast<std::size_t>(b);
  }

  double& at(int a, int b, std::size_t x, std::size_t y) { return probs_[index(a, b, x, y, n_)]; }
  double at(int a, int b, std::size_t x, std::size_t y) const {
    return probs_[index(a, b, x, y, n_)];
  }
  const std::vector<double>& probs() const { return probs_; }
  std::vector<double>& probs() { return probs_; }

  double row_sum(std::size_t x, std::size_t y) const;

  bool includes_nondetect() const { return p_empty_.has_value(); }
  double p_empty(std::size_t x, std::size_t y) const { return p_empty_->at(x * n_ + y); }
  void set_p_empty(std::vector<double> p) { p_empty_ = std::move(p); }

 private:
  std::size_t n_;
  std::string input_set_id_;
  std::vector<double> probs_;
  std::optional<std::vector<double>> p_empty_;
};

class CountTable {
 public:
  CountTable(std::vector<std::string> input_labels, double integration_time_s);

  std::size_t n_inputs() const { return labels_.size(); }
  const std::vector<std::string>& input_labels() const { return labels_; }
  double integration_time_s() const { return integration_time_s_; }

  std::uint64_t& at(int a, int b, std::size_t x, std::size_t y) {
    return counts_[CorrelationTable::index(a, b, x, y, n_inputs())];
  }
  std::uint64_t at(int a, int b, std::size_t x, std::size_t y) const {
    return counts_[CorrelationTable::index(a, b, x, y, n_inputs())];
  }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::vector<std::uint64_t>& counts() { return counts_; }

  nlohmann::json metadata = nlohmann::json::object();

 private:
  std::vector<std::string> labels_;
  double integration_time_s_;
  std::vector<std::uint64_t> counts_;
};

// P(ab|x,y) = tr[(A_a (x) B_b)(tau_x (x) rho_AB (x) tau_y)].
CorrelationTable ideal_correlations(const DensityOperator& rho, const InputStateSet& inputs,
                                    const MeasurementModel& meas);

struct SeparableComponent {
  double weight;
  DensityOperator rho_a;
  DensityOperator rho_b;
};

// sum_k w_k tr[A_a(tau_x (x) rho_k^A)] tr[B_b(rho_k^B (x) tau_y)].
CorrelationTable separable_correlations(const std::vector<SeparableComponent>& components,
                                        const InputStateSet& inputs,
                                        const MeasurementModel& meas);

// Scales every P(ab|x,y) by eta and books the remainder under the
// non-detection outcome.
CorrelationTable apply_efficiency(const CorrelationTable& t, double eta);

// N(abxy) ~ Poisson(rate * time * P(ab|x,y) + background * time), independent
// cells, reproducible from the seed.
CountTable simulate_counts(const CorrelationTable& t, const InputStateSet& inputs,
                           double pair_rate_hz, double time_s, std::uint64_t seed,
                           double background_hz = 0.0);

// P = N / N*, N* = max over (x,y) of the row total.
CorrelationTable reconstruct_probabilities(const CountTable& c);

// CountTable JSON (see README for the schema).
nlohmann::json to_json(const CountTable& c);
CountTable count_table_from_json(const nlohmann::json& j);

}  // namespace mdiew
