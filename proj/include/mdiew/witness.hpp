#pragma once

// Measurement-device-independent entanglement witnesses from correlation
// tables: the W' program, its dual coefficients, Euclidean regularization of
// noisy tables, witness evaluation and Monte-Carlo error bars.
//
// Conventions. W' = -sum_ab min tr(sigma^-_ab) <= 0 and W' < 0 certifies
// entanglement. The dual returns gamma_abxy and Y_ab with
//
//   0 <= Y_ab <= I,   sum_xy beta_abxy (tau_x (x) tau_y) - Y_ab^{T_A} >= 0,
//
// where beta = -gamma. For any table produced by a PPT joint POVM the witness
// sum beta * P is then nonnegative.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdiew/scenario.hpp"
#include "mdiew/sdp.hpp"

namespace mdiew {

inline constexpr int kJointOutcomes = kOutcomes * kOutcomes;

struct WitnessOptions {
  sdp::SolverOptions solver;
  // When nonempty, every SDP built here is written to this directory.
  std::string dump_dir;
};

struct WitnessValue {
  double w_prime = 0.0;
  sdp::SolveStatus status = sdp::SolveStatus::MaxIterations;
  std::array<HermitianMatrix, kJointOutcomes> joint_povm;  // Pi_ab, index 4a + b
  std::array<double, kJointOutcomes> sigma_minus_traces{};
  double dual_objective = 0.0;
  double gap = 0.0;
};

struct WitnessCoefficients {
  std::string input_set_id;
  std::size_t n_inputs = 0;
  std::vector<double> beta;  // CorrelationTable layout
  std::array<HermitianMatrix, kJointOutcomes> dual_y;
  std::string provenance;

  double at(int a, int b, std::size_t x, std::size_t y) const {
    return beta[CorrelationTable::index(a, b, x, y, n_inputs)];
  }
};

// Orthonormal (Frobenius) basis of the n x n Hermitian matrices.
std::vector<HermitianMatrix> hermitian_basis(int n);

// The primal program for -W'. Blocks: 16 joint-POVM blocks Pi_ab, then
// sigma^+_ab, sigma^-_ab per outcome pair. Rows 0..575 are the probability
// constraints in CorrelationTable order; the rest tie sigma^+ - sigma^- to
// Pi^{T_A}, 16 rows per outcome pair.
sdp::SdpProblem build_w_prime_problem(const CorrelationTable& t, const InputStateSet& inputs);

struct WitnessSolve {
  WitnessValue value;
  WitnessCoefficients coeffs;
  sdp::SdpProblem problem;
  sdp::SdpSolution solution;
};

// Solves the W' program once and returns both the primal value and the dual
// coefficients. Throws InfeasibleTableError if no PSD joint POVM fits t.
WitnessSolve solve_witness(const CorrelationTable& t, const InputStateSet& inputs,
                           const WitnessOptions& options = {});

WitnessValue compute_w_prime(const CorrelationTable& t, const InputStateSet& inputs,
                             const WitnessOptions& options = {});

WitnessCoefficients extract_coefficients(const CorrelationTable& t, const InputStateSet& inputs,
                                         const WitnessOptions& options = {});

// Largest violation of the dual constraints (0 when feasible).
double dual_feasibility_residual(const WitnessCoefficients& c, const InputStateSet& inputs);

// sum_abxy beta_abxy P(ab|x,y). Throws ContractError if the table was taken
// with a different input set.
double evaluate_witness(const WitnessCoefficients& c, const CorrelationTable& t);

struct Regularization {
  CorrelationTable table;
  double distance = 0.0;  // Euclidean, over all P(ab|x,y)
  std::array<HermitianMatrix, kJointOutcomes> joint_povm;
};

// Closest table (Euclidean) of the form tr[Pi_ab (tau_x (x) tau_y)] with Pi_ab PSD.
Regularization regularize(const CorrelationTable& t_raw, const InputStateSet& inputs,
                          const WitnessOptions& options = {});

struct PipelineResult {
  double value = 0.0;
  WitnessCoefficients coeffs;
  bool coeffs_computed = false;
  double regularization_distance = 0.0;
};

// Reconstructs P from counts. Without coefficients: regularize, extract
// coefficients from the regularized table, and evaluate them on the raw P.
PipelineResult witness_pipeline(const CountTable& c, const InputStateSet& inputs,
                                const std::optional<WitnessCoefficients>& coeffs,
                                const WitnessOptions& options = {});

struct MonteCarloEstimate {
  double mean = 0.0;
  double std = 0.0;
  int n_samples = 0;
};

// Resamples every cell as Poisson(N), reconstructs and evaluates with fixed
// coefficients. Sample i draws from a stream seeded by (seed, i).
MonteCarloEstimate monte_carlo_error(const CountTable& c, const InputStateSet& inputs,
                                     const WitnessCoefficients& coeffs, int n_samples,
                                     std::uint64_t seed);

// Three-sigma decision rule.
inline bool certifies_entanglement(double value, double std) { return value < -3.0 * std; }

nlohmann::json to_json(const WitnessCoefficients& c);
WitnessCoefficients coefficients_from_json(const nlohmann::json& j);

}  // namespace mdiew
