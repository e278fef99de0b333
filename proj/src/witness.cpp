#include "mdiew/witness.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "mdiew/errors.hpp"

namespace mdiew {

namespace {

constexpr int kPovmDim = 4;  // tau_x (x) tau_y

void check_table(const CorrelationTable& t, const InputStateSet& inputs) {
  if (t.input_set_id() != inputs.id() || t.n_inputs() != inputs.size()) {
    throw ContractError("correlation table was taken with input set '" + t.input_set_id() +
                        "', expected '" + inputs.id() + "'");
  }
}

std::vector<HermitianMatrix> input_products(const InputStateSet& inputs) {
  std::vector<HermitianMatrix> out;
  for (std::size_t x = 0; x < inputs.size(); ++x) {
    for (std::size_t y = 0; y < inputs.size(); ++y) {
      out.push_back(tensor(inputs.state(x).matrix(), inputs.state(y).matrix()));
    }
  }
  return out;
}

std::string outcome_name(int ab) {
  return std::string(to_string(kBellLabels[ab / kOutcomes])) + "," +
         std::string(to_string(kBellLabels[ab % kOutcomes]));
}

void maybe_dump(const sdp::SdpProblem& p, const WitnessOptions& options, const char* kind) {
  if (options.dump_dir.empty()) return;
  static std::atomic<int> counter{0};
  const int n = counter++;
  std::filesystem::create_directories(options.dump_dir);
  const auto path = std::filesystem::path(options.dump_dir) /
                    (std::string(kind) + "-" + std::to_string(n) + ".sdp");
  std::ofstream out(path);
  sdp::dump_problem(p, out);
}

// Eigenvalues below `floor` are set to zero: they sit inside the solver
// tolerance and would otherwise pin the W' program to a nearly singular point.
HermitianMatrix psd_part(const HermitianMatrix& m, double floor) {
  const Eigensystem es = eig_hermitian(m);
  const RVector clipped = es.values.unaryExpr([floor](double v) { return v < floor ? 0.0 : v; });
  return HermitianMatrix(CMatrix(es.vectors * clipped.asDiagonal() * es.vectors.adjoint()));
}

}  // namespace

std::vector<HermitianMatrix> hermitian_basis(int n) {
  std::vector<HermitianMatrix> out;
  const double h = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      CMatrix m = CMatrix::Zero(n, n);
      if (i == j) {
        m(i, i) = 1.0;
        out.emplace_back(m);
        continue;
      }
      m(i, j) = m(j, i) = h;
      out.emplace_back(m);
      m(i, j) = Complex(0.0, -h);
      m(j, i) = Complex(0.0, h);
      out.emplace_back(m);
    }
  }
  return out;
}

namespace {

// The dual optimal face is unbounded whenever a Pi_ab is singular: the slack
// sum_xy beta (tau_x (x) tau_y) - Y^{T_A} may grow freely on the kernel of
// Pi_ab. For tomographically complete inputs we keep the solver's Y_ab and
// take the minimum-norm beta with zero slack, which has the same dual
// objective and stays dual feasible.
void canonicalize_beta(WitnessCoefficients& c, const InputStateSet& inputs) {
  const std::size_t n = inputs.size();
  const auto products = input_products(inputs);
  const auto basis = hermitian_basis(kPovmDim);
  Eigen::MatrixXd frame(static_cast<Eigen::Index>(basis.size()),
                        static_cast<Eigen::Index>(products.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    for (std::size_t xy = 0; xy < products.size(); ++xy) {
      frame(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(xy)) =
          trace_product(basis[k], products[xy]);
    }
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(frame);
  for (int a = 0; a < kOutcomes; ++a) {
    for (int b = 0; b < kOutcomes; ++b) {
      const HermitianMatrix target =
          partial_transpose(c.dual_y[a * kOutcomes + b], {2, 2}, Subsystem::A);
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(basis.size()));
      for (std::size_t k = 0; k < basis.size(); ++k) {
        rhs(static_cast<Eigen::Index>(k)) = trace_product(basis[k], target);
      }
      const Eigen::VectorXd beta = cod.solve(rhs);
      for (std::size_t xy = 0; xy < products.size(); ++xy) {
        c.beta[CorrelationTable::index(a, b, xy / n, xy % n, n)] =
            beta(static_cast<Eigen::Index>(xy));
      }
    }
  }
}

}  // namespace

sdp::SdpProblem build_w_prime_problem(const CorrelationTable& t, const InputStateSet& inputs) {
  check_table(t, inputs);
  const std::size_t n = inputs.size();
  const auto products = input_products(inputs);
  const auto basis = hermitian_basis(kPovmDim);

  sdp::SdpProblem p;
  std::array<std::size_t, kJointOutcomes> pi{}, sp{}, sm{};
  for (int ab = 0; ab < kJointOutcomes; ++ab) pi[ab] = p.add_block("Pi[" + outcome_name(ab) + "]", kPovmDim);
  for (int ab = 0; ab < kJointOutcomes; ++ab) {
    sp[ab] = p.add_block("SigmaPlus[" + outcome_name(ab) + "]", kPovmDim);
    sm[ab] = p.add_block("SigmaMinus[" + outcome_name(ab) + "]", kPovmDim);
    p.objective.push_back({sm[ab], HermitianMatrix::identity(kPovmDim)});
  }
  p.constraints.resize(t.probs().size());
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      for (int a = 0; a < kOutcomes; ++a) {
        for (int b = 0; b < kOutcomes; ++b) {
          auto& row = p.constraints[CorrelationTable::index(a, b, x, y, n)];
          row.terms.push_back({pi[a * kOutcomes + b], products[x * n + y]});
          row.rhs = t.at(a, b, x, y);
        }
      }
    }
  }
  for (int ab = 0; ab < kJointOutcomes; ++ab) {
    for (const auto& e : basis) {
      sdp::EqualityConstraint row;
      row.terms.push_back({sp[ab], e});
      row.terms.push_back({sm[ab], e * -1.0});
      row.terms.push_back({pi[ab], partial_transpose(e, {2, 2}, Subsystem::A) * -1.0});
      p.constraints.push_back(std::move(row));
    }
  }
  return p;
}

WitnessSolve solve_witness(const CorrelationTable& t, const InputStateSet& inputs,
                           const WitnessOptions& options) {
  WitnessSolve out;
  out.problem = build_w_prime_problem(t, inputs);
  maybe_dump(out.problem, options, "w_prime");
  out.solution = sdp::solve(out.problem, options.solver);
  const auto& s = out.solution;
  if (s.status == sdp::SolveStatus::Infeasible) {
    throw InfeasibleTableError(
        "no positive joint POVM reproduces this correlation table; regularize it first");
  }
  if (s.status != sdp::SolveStatus::Optimal) {
    throw SolverError("W' program did not converge after " + std::to_string(s.iterations) +
                      " iterations (gap " + std::to_string(s.gap) + ")");
  }

  WitnessValue& v = out.value;
  v.status = s.status;
  v.w_prime = -s.primal_objective;
  v.dual_objective = s.dual_objective;
  v.gap = s.gap;
  for (int ab = 0; ab < kJointOutcomes; ++ab) {
    v.joint_povm[ab] = s.primal_blocks[static_cast<std::size_t>(ab)];
    v.sigma_minus_traces[ab] = s.primal_blocks[kJointOutcomes + 2 * ab + 1].trace();
  }

  WitnessCoefficients& c = out.coeffs;
  c.input_set_id = inputs.id();
  c.n_inputs = inputs.size();
  const std::size_t n_prob = t.probs().size();
  c.beta.resize(n_prob);
  for (std::size_t i = 0; i < n_prob; ++i) c.beta[i] = -s.dual_multipliers[i];
  const auto basis = hermitian_basis(kPovmDim);
  for (int ab = 0; ab < kJointOutcomes; ++ab) {
    CMatrix y = CMatrix::Zero(kPovmDim, kPovmDim);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      y -= s.dual_multipliers[n_prob + ab * basis.size() + k] * basis[k].matrix();
    }
    c.dual_y[ab] = HermitianMatrix(y);
  }
  if (inputs.span_rank() == 4) canonicalize_beta(c, inputs);
  return out;
}

WitnessValue compute_w_prime(const CorrelationTable& t, const InputStateSet& inputs,
                             const WitnessOptions& options) {
  return solve_witness(t, inputs, options).value;
}

WitnessCoefficients extract_coefficients(const CorrelationTable& t, const InputStateSet& inputs,
                                         const WitnessOptions& options) {
  return solve_witness(t, inputs, options).coeffs;
}

double dual_feasibility_residual(const WitnessCoefficients& c, const InputStateSet& inputs) {
  if (c.input_set_id != inputs.id() || c.n_inputs != inputs.size()) {
    throw ContractError("coefficients belong to input set '" + c.input_set_id + "'");
  }
  const auto products = input_products(inputs);
  const std::size_t n = inputs.size();
  double worst = 0.0;
  for (int a = 0; a < kOutcomes; ++a) {
    for (int b = 0; b < kOutcomes; ++b) {
      const HermitianMatrix& y = c.dual_y[a * kOutcomes + b];
      const RVector ev = eig_hermitian(y).values;
      worst = std::max({worst, -ev(ev.size() - 1), ev(0) - 1.0});
      CMatrix lmi = -partial_transpose(y, {2, 2}, Subsystem::A).matrix();
      for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t yy = 0; yy < n; ++yy) lmi += c.at(a, b, x, yy) * products[x * n + yy].matrix();
      }
      worst = std::max(worst, -min_eigenvalue(HermitianMatrix(lmi)));
    }
  }
  return worst;
}

double evaluate_witness(const WitnessCoefficients& c, const CorrelationTable& t) {
  if (c.input_set_id != t.input_set_id() || c.n_inputs != t.n_inputs()) {
    throw ContractError("witness coefficients for input set '" + c.input_set_id +
                        "' cannot be applied to data taken with '" + t.input_set_id() + "'");
  }
  double w = 0.0;
  const auto& p = t.probs();
  for (std::size_t i = 0; i < p.size(); ++i) w += c.beta[i] * p[i];
  return w;
}

Regularization regularize(const CorrelationTable& t_raw, const InputStateSet& inputs,
                          const WitnessOptions& options) {
  check_table(t_raw, inputs);
  const std::size_t n = inputs.size();
  const std::size_t n_pairs = n * n;
  const int arrow = static_cast<int>(n_pairs) + 1;
  const auto products = input_products(inputs);
  const auto basis = hermitian_basis(kPovmDim);
  const std::size_t nh = basis.size();

  // Written in the dual (LMI) form: y = (coordinates h of Pi_ab, t_ab) per
  // outcome pair, maximize -sum t_ab subject to
  //   Pi_ab = sum_k h_k E_k >= 0,
  //   [[t I, r], [r^T, t]] >= 0 with r = P_ab - (tr[Pi_ab tau_x (x) tau_y])_xy,
  // so t_ab >= |r_ab|. The outcome pairs are independent, so minimizing the
  // sum of norms gives the same Pi as minimizing the total squared distance.
  sdp::SdpProblem p;
  for (int ab = 0; ab < kJointOutcomes; ++ab) {
    const int a = ab / kOutcomes, b = ab % kOutcomes;
    const std::size_t pi = p.add_block("Pi[" + outcome_name(ab) + "]", kPovmDim);
    const std::size_t ep =
        p.add_block("Epigraph[" + outcome_name(ab) + "]", arrow, sdp::BlockKind::RealSymmetric);
    CMatrix c = CMatrix::Zero(arrow, arrow);
    for (std::size_t xy = 0; xy < n_pairs; ++xy) {
      c(static_cast<Eigen::Index>(xy), arrow - 1) = c(arrow - 1, static_cast<Eigen::Index>(xy)) =
          t_raw.at(a, b, xy / n, xy % n);
    }
    p.objective.push_back({ep, HermitianMatrix(c)});
    for (std::size_t k = 0; k < nh; ++k) {
      CMatrix g = CMatrix::Zero(arrow, arrow);
      for (std::size_t xy = 0; xy < n_pairs; ++xy) {
        const double v = trace_product(basis[k], products[xy]);
        g(static_cast<Eigen::Index>(xy), arrow - 1) = g(arrow - 1, static_cast<Eigen::Index>(xy)) = v;
      }
      sdp::EqualityConstraint row;
      row.terms.push_back({pi, basis[k] * -1.0});
      row.terms.push_back({ep, HermitianMatrix(g)});
      row.rhs = 0.0;
      p.constraints.push_back(std::move(row));
    }
    sdp::EqualityConstraint trow;
    trow.terms.push_back({ep, HermitianMatrix::identity(arrow) * -1.0});
    trow.rhs = -1.0;
    p.constraints.push_back(std::move(trow));
  }
  maybe_dump(p, options, "regularize");
  const sdp::SdpSolution s = sdp::solve(p, options.solver);
  if (s.status != sdp::SolveStatus::Optimal) {
    throw SolverError("regularization program did not converge (status " +
                      std::string(sdp::to_string(s.status)) + ")");
  }

  Regularization out{CorrelationTable(n, inputs.id()), 0.0, {}};
  double dist2 = 0.0;
  for (int ab = 0; ab < kJointOutcomes; ++ab) {
    const int a = ab / kOutcomes, b = ab % kOutcomes;
    CMatrix pi = CMatrix::Zero(kPovmDim, kPovmDim);
    const std::size_t base = static_cast<std::size_t>(ab) * (nh + 1);
    for (std::size_t k = 0; k < nh; ++k) pi += s.dual_multipliers[base + k] * basis[k].matrix();
    // Clip the solver's rounding so the table is exactly representable.
    out.joint_povm[ab] = psd_part(HermitianMatrix(pi), options.solver.eps_gap);
    for (std::size_t xy = 0; xy < n_pairs; ++xy) {
      const double v = trace_product(out.joint_povm[ab], products[xy]);
      out.table.at(a, b, xy / n, xy % n) = v;
      const double d = v - t_raw.at(a, b, xy / n, xy % n);
      dist2 += d * d;
    }
  }
  out.distance = std::sqrt(dist2);
  return out;
}

PipelineResult witness_pipeline(const CountTable& c, const InputStateSet& inputs,
                                const std::optional<WitnessCoefficients>& coeffs,
                                const WitnessOptions& options) {
  const CorrelationTable p = reconstruct_probabilities(c);
  check_table(p, inputs);
  PipelineResult out;
  if (coeffs) {
    out.coeffs = *coeffs;
  } else {
    const Regularization reg = regularize(p, inputs, options);
    out.coeffs = extract_coefficients(reg.table, inputs, options);
    out.coeffs_computed = true;
    out.regularization_distance = reg.distance;
  }
  out.value = evaluate_witness(out.coeffs, p);
  return out;
}

MonteCarloEstimate monte_carlo_error(const CountTable& c, const InputStateSet& inputs,
                                     const WitnessCoefficients& coeffs, int n_samples,
                                     std::uint64_t seed) {
  if (n_samples < 2) throw DomainError("monte_carlo_error: need at least 2 samples");
  // Fails early on an all-zero table.
  check_table(reconstruct_probabilities(c), inputs);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    CountTable sample = c;
    for (auto& cell : sample.counts()) {
      if (cell > 0) {
        std::poisson_distribution<std::uint64_t> poisson(static_cast<double>(cell));
        cell = poisson(rng);
      }
    }
    values.push_back(evaluate_witness(coeffs, reconstruct_probabilities(sample)));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n_samples;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n_samples - 1);
  return {mean, std::sqrt(var), n_samples};
}

}  // namespace mdiew
