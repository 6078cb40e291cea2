#pragma once

#include <vector>

#include "cvxnn/admm.hpp"
#include "cvxnn/types.hpp"

namespace cvxnn {

struct RobustProgram {
  ConvexProgram base;  // base.robust holds the PerturbationSpec

  const PerturbationSpec& spec() const { return *base.robust; }
};

RobustProgram build_robust_program(Dataset data, PatternSet patterns,
                                   LossKind loss, Scalar beta,
                                   PerturbationSpec spec);

// (2 D_i - I) X v_i - eps ||v_i||_{p*}; nonnegative iff robust-feasible.
Vector robust_constraint_residual(const Matrix& G_i, const Vector& v_i,
                                  const PerturbationSpec& spec);

// Per-sample aggregates q_k = sum_i d_ik (v_i - w_i), returned as rows.
Matrix aggregate_q(const ConvexProgram& prog, const std::vector<Vector>& v_blocks,
                   const std::vector<Vector>& w_blocks);

// Closed-form robust objectives (data term + group-lasso term).
Scalar hinge_robust_objective(const ConvexProgram& prog,
                              const std::vector<Vector>& v_blocks,
                              const std::vector<Vector>& w_blocks);
Scalar bce_robust_objective(const ConvexProgram& prog,
                            const std::vector<Vector>& v_blocks,
                            const std::vector<Vector>& w_blocks);
// Worst-case squared loss 1/2 sum (|r_k| + eps ||q_k||_{p*})^2 + group term;
// same optimum as the SOCP form below.
Scalar squared_robust_objective(const ConvexProgram& prog,
                                const std::vector<Vector>& v_blocks,
                                const std::vector<Vector>& w_blocks);

// Data term only (no group-lasso part) of the matching robust objective.
Scalar robust_data_term(const ConvexProgram& prog,
                        const std::vector<Vector>& v_blocks,
                        const std::vector<Vector>& w_blocks);

struct WorstCase {
  Matrix Delta;         // n x d, row k perturbs sample k
  Scalar attacked_loss; // data term evaluated at X + Delta
};

// Analytic maximizer of the inner adversarial problem (linf only).
WorstCase worst_case_delta(LossKind kind, const ConvexProgram& prog,
                           const std::vector<Vector>& v_blocks,
                           const std::vector<Vector>& w_blocks);

// Data term of the standard (un-robust) objective at a given perturbation.
Scalar attacked_data_term(const ConvexProgram& prog,
                          const std::vector<Vector>& v_blocks,
                          const std::vector<Vector>& w_blocks,
                          const Matrix& Delta);

// Residuals of the squared-loss robust SOCP in epigraph form: robust linear
// constraints, z_k >= |x_k^T q_k - y_k| + eps ||q_k||_1 per sample,
// z_{n+1} >= |2a - 1/4| and ||z|| <= 2a + 1/4.
struct SquaredRobustReport {
  Scalar min_linear_residual;  // min over all robust constraint rows
  Vector z_residuals;          // length n+1, slack of each z constraint
  Scalar cone_residual;        // 2a + 1/4 - ||z||
  Scalar objective;            // a + beta * group term
};

SquaredRobustReport squared_robust_constraints(const ConvexProgram& prog,
                                               const std::vector<Vector>& v_blocks,
                                               const std::vector<Vector>& w_blocks,
                                               Scalar a, const Vector& z);

struct RobustSolveConfig {
  Index outer_iters = 100;
  Index inner_iters = 4000;
  Scalar mu0 = 10.0;        // initial AL penalty
  // Keep the penalty moderate and let the multipliers close the residual;
  // large mu makes the inner problem too ill-conditioned for first-order steps.
  Scalar mu_max = 1e5;
  Scalar tol_feas = 1e-6;
  Scalar tol_obj = 1e-9;    // inner stop on relative objective change
  Scalar drop_tol = 1e-7;
};

struct RobustSolveReport {
  std::vector<Scalar> objective_trace;    // robust objective per outer iter
  std::vector<Scalar> feasibility_trace;  // max constraint violation per outer
  std::vector<Vector> v_blocks, w_blocks;
  NetworkWeights weights;
  Scalar final_objective = 0;
  Scalar feasibility_violation = 0;
  Scalar worst_case_loss = 0;  // data term at the analytic Delta* (linf only)
  Scalar wall_ms = 0;
  bool converged = false;
};

// Augmented-Lagrangian outer loop with proximal-subgradient inner steps on the
// robust objective; the group-lasso term is handled by its prox.
RobustSolveReport solve_robust(const RobustProgram& prog,
                               const RobustSolveConfig& config,
                               std::uint64_t seed = 0);

struct UpperBoundReport {
  Scalar convex_value;              // robust objective at the solution
  Scalar nonconvex_attacked_value;  // best attack found on the recovered net
  bool holds;
};

// Checks that the nonconvex adversarial objective (max over PGD and the
// closed-form Delta*) stays below the convex robust objective + tol.
UpperBoundReport upper_bound_check(const NetworkWeights& weights,
                                   const RobustProgram& prog,
                                   const std::vector<Vector>& v_blocks,
                                   const std::vector<Vector>& w_blocks,
                                   Scalar tol = 1e-6);

}  // namespace cvxnn
