#pragma once

// Small dense semidefinite programs in standard form
//
//   minimize    sum_k tr(C_k X_k)
//   subject to  sum_k tr(A_ik X_k) = b_i,   X_k PSD,
//
// with dual  maximize b^T y  s.t.  Z_k = C_k - sum_i y_i A_ik PSD.
//
// Blocks are Hermitian or real symmetric. Hermitian blocks are embedded into
// real symmetric blocks of twice the size; the solver core is purely real.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdiew/qlin.hpp"

namespace mdiew::sdp {

enum class BlockKind { Hermitian, RealSymmetric };

struct BlockSpec {
  std::string name;
  int dim = 0;
  BlockKind kind = BlockKind::Hermitian;
};

struct LinearTerm {
  std::size_t block = 0;
  HermitianMatrix coeff;
};

struct EqualityConstraint {
  std::vector<LinearTerm> terms;
  double rhs = 0.0;
};

struct SdpProblem {
  std::vector<BlockSpec> blocks;
  std::vector<LinearTerm> objective;  // blocks without a term have zero cost
  std::vector<EqualityConstraint> constraints;

  std::size_t add_block(std::string name, int dim, BlockKind kind = BlockKind::Hermitian);

  // Throws StructuralError on bad block indices, dimensions or non-real
  // coefficients on real blocks.
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

std::string_view to_string(SolveStatus s);

struct SolverOptions {
  double eps_gap = 1e-7;
  double eps_feas = 1e-8;
  double eps_psd = 1e-9;
  int max_iter = 500;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<HermitianMatrix> primal_blocks;
  std::vector<HermitianMatrix> dual_slacks;  // Z_k as tracked by the solver
  std::vector<double> dual_multipliers;      // y
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;  // primal - dual
  int iterations = 0;

  // Primal infeasibility certificate when status == Infeasible: a ray y
  // with b^T y = 1 and sum_i y_i A_ik <= ray_residual * I on every block.
  std::vector<double> infeasibility_ray;
  double ray_residual = 0.0;
};

// [[Re h, -Im h], [Im h, Re h]].
Eigen::MatrixXd realify(const HermitianMatrix& h);

SdpSolution solve(const SdpProblem& p, const SolverOptions& options = {});

struct SolutionReport {
  double primal_residual = 0.0;        // max_i |A_i(X) - b_i|
  double min_primal_eigenvalue = 0.0;  // over all blocks
  double min_dual_eigenvalue = 0.0;    // of C - A^T y, over all blocks
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;

  bool within(const SolverOptions& o) const;
};

// Independent recomputation from the problem data and the returned X and y.
SolutionReport check_solution(const SdpProblem& p, const SdpSolution& s);

// Plain-text dump for cross-checking against external solvers:
//   blocks <n>              then per block: block <k> <name> <dim> <hermitian|real>
//   objective <terms>       then per term:  term <block> <nnz>, nnz lines "i j re im"
//   constraints <m>         then per row:   constraint <i> <rhs> <terms>, terms as above
// Only the upper triangle (i <= j) of each coefficient matrix is written.
void dump_problem(const SdpProblem& p, std::ostream& out);

}  // namespace mdiew::sdp
