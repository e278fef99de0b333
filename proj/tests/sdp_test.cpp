#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "mdiew/errors.hpp"
#include "mdiew/sdp.hpp"

using namespace mdiew;
using namespace mdiew::sdp;

namespace {

HermitianMatrix unit(int n, int i, int j) {
  CMatrix m = CMatrix::Zero(n, n);
  m(i, j) = 1.0;
  m(j, i) = 1.0;
  if (i != j) m *= 0.5;
  return HermitianMatrix(m);
}

HermitianMatrix random_hermitian(int n, bool real, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), real ? 0.0 : g(rng));
  }
  return HermitianMatrix(CMatrix((m + m.adjoint()) * 0.5));
}

// Random PSD pair (X, Z) with X Z = 0: shared eigenbasis, complementary supports.
std::pair<HermitianMatrix, HermitianMatrix> complementary_pair(int n, int rank, bool real,
                                                               std::mt19937_64& rng) {
  const auto h = random_hermitian(n, real, rng);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h.matrix());
  const CMatrix& u = es.eigenvectors();
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  RVector dx = RVector::Zero(n), dz = RVector::Zero(n);
  for (int i = 0; i < n; ++i) (i < rank ? dx : dz)(i) = pos(rng);
  const CMatrix x = u * dx.cast<Complex>().asDiagonal() * u.adjoint();
  const CMatrix z = u * dz.cast<Complex>().asDiagonal() * u.adjoint();
  return {HermitianMatrix(CMatrix((x + x.adjoint()) * 0.5)),
          HermitianMatrix(CMatrix((z + z.adjoint()) * 0.5))};
}

struct Planted {
  SdpProblem problem;
  double optimum = 0.0;
};

Planted planted_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Planted out;
  auto& p = out.problem;
  const std::vector<std::pair<int, BlockKind>> shapes = {
      {3, BlockKind::Hermitian}, {4, BlockKind::RealSymmetric}, {2, BlockKind::Hermitian}};
  std::vector<HermitianMatrix> xs, zs;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const auto [n, kind] = shapes[k];
    p.add_block("X" + std::to_string(k), n, kind);
    const auto [x, z] = complementary_pair(n, 1 + static_cast<int>(k % 2), kind == BlockKind::RealSymmetric, rng);
    xs.push_back(x);
    zs.push_back(z);
  }
  const int m = 8;
  std::normal_distribution<double> g;
  std::vector<HermitianMatrix> c = zs;
  for (int i = 0; i < m; ++i) {
    EqualityConstraint con;
    const double yi = g(rng);
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      const auto [n, kind] = shapes[k];
      const auto a = random_hermitian(n, kind == BlockKind::RealSymmetric, rng);
      con.rhs += trace_product(a, xs[k]);
      c[k] = c[k] + a * yi;
      con.terms.push_back({k, a});
    }
    p.constraints.push_back(con);
  }
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    p.objective.push_back({k, c[k]});
    out.optimum += trace_product(c[k], xs[k]);
  }
  return out;
}

}  // namespace

TEST(Realify, Identity) {
  const Eigen::MatrixXd r = realify(HermitianMatrix::identity(2));
  EXPECT_LT((r - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-15);
}

TEST(Realify, PauliYSpectrum) {
  CMatrix y(2, 2);
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  const Eigen::MatrixXd r = realify(HermitianMatrix(y));
  EXPECT_LT((r - r.transpose()).norm(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  const Eigen::Vector4d expected(-1, -1, 1, 1);
  EXPECT_LT((es.eigenvalues() - expected).norm(), 1e-14);
}

TEST(Realify, PreservesPsdAndInnerProduct) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_hermitian(4, false, rng);
    const auto b = random_hermitian(4, false, rng);
    const HermitianMatrix psd(CMatrix(a.matrix() * a.matrix()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(realify(psd));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_NEAR((realify(a).array() * realify(b).array()).sum(), 2.0 * trace_product(a, b), 1e-10);
  }
}

TEST(Solve, TraceWithPinnedCorner) {
  SdpProblem p;
  p.add_block("X", 2);
  p.objective.push_back({0, HermitianMatrix::identity(2)});
  p.constraints.push_back({{{0, unit(2, 0, 0)}}, 1.0});
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, 1.0, 1e-7);
  EXPECT_LT((s.primal_blocks[0].matrix() - HermitianMatrix::diagonal({1, 0}).matrix()).norm(), 1e-6);
  EXPECT_TRUE(check_solution(p, s).within(SolverOptions{}));
}

TEST(Solve, SmallestEigenvalue) {
  SdpProblem p;
  p.add_block("X", 2);
  p.objective.push_back({0, HermitianMatrix::diagonal({1, -1})});
  p.constraints.push_back({{{0, HermitianMatrix::identity(2)}}, 1.0});
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, -1.0, 1e-7);
  EXPECT_NEAR(s.dual_objective, -1.0, 1e-7);
  EXPECT_LT((s.primal_blocks[0].matrix() - HermitianMatrix::diagonal({0, 1}).matrix()).norm(), 1e-6);
}

TEST(Solve, ComplexCostNeedsHermitianBlock) {
  // min tr(C X) with C = I - Pauli-Y, tr X = 1: optimum 0 at the +1 eigenvector of Y.
  CMatrix y(2, 2);
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  SdpProblem p;
  p.add_block("X", 2);
  p.objective.push_back({0, HermitianMatrix(CMatrix(CMatrix::Identity(2, 2) - y))});
  p.constraints.push_back({{{0, HermitianMatrix::identity(2)}}, 1.0});
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, 0.0, 1e-7);
  EXPECT_NEAR(s.primal_blocks[0](0, 1).imag(), -0.5, 1e-5);
}

TEST(Solve, PlantedSolutions) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto planted = planted_problem(seed);
    const auto s = solve(planted.problem);
    ASSERT_EQ(s.status, SolveStatus::Optimal) << seed;
    EXPECT_NEAR(s.primal_objective, planted.optimum, 1e-6) << seed;
    EXPECT_NEAR(s.dual_objective, planted.optimum, 1e-6) << seed;
    const auto report = check_solution(planted.problem, s);
    EXPECT_TRUE(report.within(SolverOptions{})) << seed;
    EXPECT_LE(report.dual_objective, report.primal_objective + 1e-7) << seed;
  }
}

TEST(Solve, DetectsInfeasibleTrace) {
  SdpProblem p;
  p.add_block("X", 3);
  p.constraints.push_back({{{0, HermitianMatrix::identity(3)}}, -1.0});
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Infeasible);
  ASSERT_EQ(s.infeasibility_ray.size(), 1u);
  EXPECT_NEAR(-s.infeasibility_ray[0], 1.0, 1e-9);
  EXPECT_LE(s.ray_residual, 1e-8);
}

TEST(Solve, DetectsInconsistentDuplicateRows) {
  SdpProblem p;
  p.add_block("X", 2);
  p.constraints.push_back({{{0, unit(2, 0, 0)}}, 1.0});
  p.constraints.push_back({{{0, unit(2, 0, 0) * 2.0}}, 3.0});
  EXPECT_EQ(solve(p).status, SolveStatus::Infeasible);
}

TEST(Solve, DetectsInfeasibleOffDiagonal) {
  // X PSD with X11 = X22 = 0 forces X12 = 0, contradicting X12 = 1.
  SdpProblem p;
  p.add_block("X", 2, BlockKind::RealSymmetric);
  p.constraints.push_back({{{0, unit(2, 0, 0)}}, 0.0});
  p.constraints.push_back({{{0, unit(2, 1, 1)}}, 0.0});
  p.constraints.push_back({{{0, unit(2, 0, 1)}}, 1.0});
  EXPECT_NE(solve(p).status, SolveStatus::Optimal);
}

TEST(Solve, RedundantConsistentRowsAreHarmless) {
  SdpProblem p;
  p.add_block("X", 2);
  p.objective.push_back({0, HermitianMatrix::diagonal({1, 2})});
  p.constraints.push_back({{{0, HermitianMatrix::identity(2)}}, 1.0});
  p.constraints.push_back({{{0, HermitianMatrix::identity(2) * 3.0}}, 3.0});
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, 1.0, 1e-7);
  EXPECT_TRUE(check_solution(p, s).within(SolverOptions{}));
}

TEST(Solve, Deterministic) {
  const auto planted = planted_problem(42);
  const auto a = solve(planted.problem);
  const auto b = solve(planted.problem);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.primal_objective, b.primal_objective);
  EXPECT_EQ(a.dual_multipliers, b.dual_multipliers);
}

TEST(Solve, ValidationRejectsMalformedProblems) {
  SdpProblem p;
  p.add_block("X", 2, BlockKind::RealSymmetric);
  CMatrix c(2, 2);
  c << 1, Complex(0, 1), Complex(0, -1), 1;
  p.objective.push_back({0, HermitianMatrix(c)});
  EXPECT_THROW(p.validate(), StructuralError);

  SdpProblem q;
  q.add_block("X", 2);
  q.constraints.push_back({{{1, HermitianMatrix::identity(2)}}, 1.0});
  EXPECT_THROW(q.validate(), StructuralError);

  SdpProblem r;
  r.add_block("X", 2);
  r.objective.push_back({0, HermitianMatrix::identity(3)});
  EXPECT_THROW(r.validate(), StructuralError);
}

TEST(CheckSolution, FlagsPerturbedPrimal) {
  SdpProblem p;
  p.add_block("X", 2);
  p.objective.push_back({0, HermitianMatrix::diagonal({1, -1})});
  p.constraints.push_back({{{0, HermitianMatrix::identity(2)}}, 1.0});
  auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  s.primal_blocks[0] = s.primal_blocks[0] + unit(2, 0, 0) * 1e-3;
  const auto report = check_solution(p, s);
  EXPECT_GT(report.primal_residual, 1e-4);
  EXPECT_FALSE(report.within(SolverOptions{}));
}

TEST(CheckSolution, ZeroProblemHasZeroGap) {
  SdpProblem p;
  p.add_block("X", 3);
  const auto s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  const auto report = check_solution(p, s);
  EXPECT_NEAR(report.gap, 0.0, 1e-12);
  EXPECT_NEAR(report.primal_objective, 0.0, 1e-9);
}

TEST(Dump, WritesHeaderAndRows) {
  SdpProblem p;
  p.add_block("Pi", 2);
  p.add_block("t", 1, BlockKind::RealSymmetric);
  p.objective.push_back({1, HermitianMatrix::identity(1)});
  p.constraints.push_back({{{0, HermitianMatrix::identity(2)}, {1, HermitianMatrix::identity(1)}}, 0.5});
  std::ostringstream os;
  dump_problem(p, os);
  const std::string text = os.str();
  EXPECT_NE(text.find("blocks 2"), std::string::npos);
  EXPECT_NE(text.find("block 0 Pi 2 hermitian"), std::string::npos);
  EXPECT_NE(text.find("block 1 t 1 real"), std::string::npos);
  EXPECT_NE(text.find("constraints 1"), std::string::npos);
}
