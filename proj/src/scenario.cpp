#include "mdiew/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mdiew/errors.hpp"

namespace mdiew {

namespace {

constexpr double kClampTol = 1e-12;

std::string make_set_id(const std::vector<std::string>& labels) {
  std::string id = "qubit-inputs[";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) id += ',';
    id += labels[i];
  }
  return id + "]";
}

double clamp_probability(double p) {
  if (p < -kClampTol || p > 1.0 + kClampTol) {
    throw DomainError("probability " + std::to_string(p) + " outside [0, 1] beyond rounding");
  }
  return std::clamp(p, 0.0, 1.0);
}

// tr_path[E (I_pol (x) tau)] for E on (polarization, path); a 2x2 operator on
// the polarization qubit.
HermitianMatrix effective_operator(const HermitianMatrix& povm_element,
                                   const DensityOperator& input) {
  const CMatrix& e = povm_element.matrix();
  const CMatrix& tau = input.matrix().matrix();
  CMatrix m = CMatrix::Zero(2, 2);
  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      Complex acc = 0.0;
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) acc += e(2 * p + k, 2 * q + l) * tau(l, k);
      }
      m(p, q) = acc;
    }
  }
  return HermitianMatrix(m);
}

using EffectiveOps = std::vector<std::array<HermitianMatrix, kOutcomes>>;

EffectiveOps effective_operators(const std::array<HermitianMatrix, kOutcomes>& povm,
                                 const InputStateSet& inputs) {
  EffectiveOps out(inputs.size());
  for (std::size_t x = 0; x < inputs.size(); ++x) {
    for (int a = 0; a < kOutcomes; ++a) out[x][a] = effective_operator(povm[a], inputs.state(x));
  }
  return out;
}

void check_measurement(const MeasurementModel& meas) {
  for (int a = 0; a < kOutcomes; ++a) {
    if (meas.povm_a[a].dim() != 4 || meas.povm_b[a].dim() != 4) {
      throw StructuralError("measurement model: POVM elements must be 4x4");
    }
  }
}

}  // namespace

InputStateSet::InputStateSet(std::vector<DensityOperator> states, std::vector<std::string> labels)
    : states_(std::move(states)), labels_(std::move(labels)), id_(make_set_id(labels_)) {
  if (states_.size() != labels_.size()) {
    throw StructuralError("InputStateSet: one label per state required");
  }
  for (const auto& s : states_) {
    if (s.dim() != 2) throw StructuralError("InputStateSet: input states must be qubits");
  }
}

int InputStateSet::span_rank() const {
  // Each 2x2 Hermitian matrix as a real 4-vector in the Pauli-like basis.
  Eigen::MatrixXd g(4, static_cast<Eigen::Index>(states_.size()));
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const CMatrix& m = states_[i].matrix().matrix();
    const auto c = static_cast<Eigen::Index>(i);
    g(0, c) = m(0, 0).real();
    g(1, c) = m(1, 1).real();
    g(2, c) = m(0, 1).real();
    g(3, c) = m(0, 1).imag();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

InputStateSet default_inputs() {
  const double h = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  auto ket = [](Complex c0, Complex c1) {
    CVector v(2);
    v << c0, c1;
    return DensityOperator::from_ket(PureKet(v));
  };
  return InputStateSet({ket(h, h), ket(h, -h), ket(h, i * h), ket(h, -i * h), ket(1, 0), ket(0, 1)},
                       {"+", "-", "+i", "-i", "0", "1"});
}

InputStateSet inputs_from_labels(const std::vector<std::string>& labels) {
  InputStateSet def = default_inputs();
  if (labels != def.labels()) {
    throw ContractError("input-state labels do not match the supported set " + def.id());
  }
  return def;
}

std::array<HermitianMatrix, kOutcomes> bsm_povm(double phase_error, double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw DomainError("bsm_povm: visibility must lie in [0, 1]");
  }
  // Phase on the path qubit: index = 2*pol + path.
  CMatrix u = CMatrix::Identity(4, 4);
  const Complex ph = std::polar(1.0, phase_error);
  u(1, 1) = ph;
  u(3, 3) = ph;
  const CMatrix mixed = CMatrix::Identity(4, 4) / 4.0;
  std::array<HermitianMatrix, kOutcomes> out;
  for (int a = 0; a < kOutcomes; ++a) {
    const CMatrix proj = make_bell(kBellLabels[a]).projector().matrix();
    const CMatrix rotated = u.adjoint() * proj * u;
    out[a] = HermitianMatrix(CMatrix(visibility * rotated + (1.0 - visibility) * mixed));
  }
  return out;
}

MeasurementModel MeasurementModel::make(double phase_error_a, double phase_error_b,
                                        double visibility) {
  return MeasurementModel{bsm_povm(phase_error_a, visibility), bsm_povm(phase_error_b, visibility),
                          phase_error_a, phase_error_b, visibility};
}

CorrelationTable::CorrelationTable(std::size_t n_inputs, std::string input_set_id)
    : n_(n_inputs),
      input_set_id_(std::move(input_set_id)),
      probs_(n_inputs * n_inputs * kOutcomes * kOutcomes, 0.0) {}

double CorrelationTable::row_sum(std::size_t x, std::size_t y) const {
  double s = 0.0;
  for (int a = 0; a < kOutcomes; ++a) {
    for (int b = 0; b < kOutcomes; ++b) s += at(a, b, x, y);
  }
  return s;
}

CountTable::CountTable(std::vector<std::string> input_labels, double integration_time_s)
    : labels_(std::move(input_labels)),
      integration_time_s_(integration_time_s),
      counts_(labels_.size() * labels_.size() * kOutcomes * kOutcomes, 0) {}

CorrelationTable ideal_correlations(const DensityOperator& rho, const InputStateSet& inputs,
                                    const MeasurementModel& meas) {
  if (rho.dim() != 4) throw StructuralError("ideal_correlations: shared state must be 4x4");
  check_measurement(meas);
  const EffectiveOps alice = effective_operators(meas.povm_a, inputs);
  const EffectiveOps bob = effective_operators(meas.povm_b, inputs);
  const std::size_t n = inputs.size();
  CorrelationTable t(n, inputs.id());
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      for (int a = 0; a < kOutcomes; ++a) {
        for (int b = 0; b < kOutcomes; ++b) {
          const double p = trace_product(tensor(alice[x][a], bob[y][b]), rho.matrix());
          t.at(a, b, x, y) = clamp_probability(p);
        }
      }
    }
  }
  return t;
}

CorrelationTable separable_correlations(const std::vector<SeparableComponent>& components,
                                        const InputStateSet& inputs,
                                        const MeasurementModel& meas) {
  if (components.empty()) throw DomainError("separable_correlations: no components");
  check_measurement(meas);
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0) throw DomainError("separable_correlations: negative weight");
    if (c.rho_a.dim() != 2 || c.rho_b.dim() != 2) {
      throw StructuralError("separable_correlations: local states must be qubits");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw DomainError("separable_correlations: weights must sum to 1");
  }
  const EffectiveOps alice = effective_operators(meas.povm_a, inputs);
  const EffectiveOps bob = effective_operators(meas.povm_b, inputs);
  const std::size_t n = inputs.size();
  CorrelationTable t(n, inputs.id());
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      for (int a = 0; a < kOutcomes; ++a) {
        for (int b = 0; b < kOutcomes; ++b) {
          double p = 0.0;
          for (const auto& c : components) {
            p += c.weight * trace_product(alice[x][a], c.rho_a.matrix()) *
                 trace_product(bob[y][b], c.rho_b.matrix());
          }
          t.at(a, b, x, y) = clamp_probability(p);
        }
      }
    }
  }
  return t;
}

CorrelationTable apply_efficiency(const CorrelationTable& t, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("apply_efficiency: eta must lie in (0, 1]");
  if (t.includes_nondetect()) {
    throw DomainError("apply_efficiency: table already carries a non-detection outcome");
  }
  CorrelationTable out = t;
  for (double& p : out.probs()) p *= eta;
  const std::size_t n = t.n_inputs();
  std::vector<double> empty(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) empty[x * n + y] = std::max(0.0, 1.0 - out.row_sum(x, y));
  }
  out.set_p_empty(std::move(empty));
  return out;
}

CountTable simulate_counts(const CorrelationTable& t, const InputStateSet& inputs,
                           double pair_rate_hz, double time_s, std::uint64_t seed,
                           double background_hz) {
  if (!(pair_rate_hz >= 0.0) || !(time_s >= 0.0) || !(background_hz >= 0.0)) {
    throw DomainError("simulate_counts: rates and time must be nonnegative");
  }
  if (t.input_set_id() != inputs.id() || t.n_inputs() != inputs.size()) {
    throw ContractError("simulate_counts: table was not produced with this input set");
  }
  CountTable c(inputs.labels(), time_s);
  std::mt19937_64 rng(seed);
  const auto& probs = t.probs();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double mean = pair_rate_hz * time_s * probs[i] + background_hz * time_s;
    if (mean > 0.0) {
      std::poisson_distribution<std::uint64_t> poisson(mean);
      c.counts()[i] = poisson(rng);
    }
  }
  c.metadata["seed"] = seed;
  c.metadata["pair_rate_hz"] = pair_rate_hz;
  c.metadata["background_hz"] = background_hz;
  return c;
}

CorrelationTable reconstruct_probabilities(const CountTable& c) {
  const std::size_t n = c.n_inputs();
  std::uint64_t n_star = 0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      std::uint64_t row = 0;
      for (int a = 0; a < kOutcomes; ++a) {
        for (int b = 0; b < kOutcomes; ++b) row += c.at(a, b, x, y);
      }
      n_star = std::max(n_star, row);
    }
  }
  if (n_star == 0) throw DomainError("reconstruct_probabilities: count table is all zero");
  CorrelationTable t(n, make_set_id(c.input_labels()));
  const double scale = static_cast<double>(n_star);
  for (std::size_t i = 0; i < c.counts().size(); ++i) {
    t.probs()[i] = static_cast<double>(c.counts()[i]) / scale;
  }
  return t;
}

}  // namespace mdiew
