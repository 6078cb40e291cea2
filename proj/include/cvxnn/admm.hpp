#pragma once

#include <optional>
#include <vector>

#include "cvxnn/losses.hpp"
#include "cvxnn/patterns.hpp"
#include "cvxnn/types.hpp"

namespace cvxnn {

// The sampled convex training program: group-lasso objective over paired
// blocks (v_i, w_i) with the pattern constraints G_i v_i >= 0, G_i w_i >= 0.
// When robust is set the constraints gain the -eps ||.||_{p*} term and the
// adversarial module's solver applies; admm_solve requires robust = nullopt.
struct ConvexProgram {
  Dataset data;
  PatternSet patterns;
  LossKind loss = LossKind::Squared;
  Scalar beta = 1e-3;
  std::optional<PerturbationSpec> robust;

  Index n() const { return data.n(); }
  Index d() const { return data.d(); }
  Index P() const { return patterns.size(); }
};

ConvexProgram build_program(Dataset data, PatternSet patterns, LossKind loss,
                            Scalar beta);

// Concatenated iterates: u and v hold the 2P d-blocks (u_1..u_P, z_1..z_P)
// resp. (v_1..v_P, w_1..w_P); s and nu hold the 2P n-blocks.
struct AdmmState {
  Vector u, v, s, lambda, nu;
  Index iter = 0;
};

AdmmState zero_state(const ConvexProgram& prog);

struct RbcdOptions {
  Scalar tau = 1e-3;
  Scalar phi0 = 1e-2;      // inner stop threshold schedule phi0 / t^2
  Index max_inner = 0;     // 0 = 40 * number of blocks
  Scalar gamma_init = 1.0;
};

struct AdmmConfig {
  Scalar rho = 0.1;
  Scalar gamma_a = 0.1;  // dual step size; rho itself is the usual choice
  Index max_iter = 200;
  Scalar tol_primal = 1e-6;
  Scalar tol_dual = 1e-6;
  bool use_rbcd = false;
  RbcdOptions rbcd;
};

struct CholeskyCache {
  // M = I + (1/rho) F^T F + G^T G. When 2dP <= n a dense factor of M is
  // cached; otherwise the solve goes through the Woodbury identity against
  // B = I + blockdiag(X^T X) plus the rank-n term (1/rho) F^T F, which keeps
  // the per-iteration cost at O(ndP + n^2) instead of O(d^2 P^2).
  Eigen::LLT<Matrix> llt;        // dense factor (dense path only)
  bool woodbury = false;
  Eigen::LLT<Matrix> block_llt;  // A = I + X^T X, shared by every block
  Eigen::LLT<Matrix> schur_llt;  // S = rho I_n + F B^{-1} F^T
  Matrix F;                      // n x 2dP signed gated features (Woodbury)
  Matrix BinvFt;                 // B^{-1} F^T (Woodbury)
  Matrix XtX;
  Scalar rho = 0.0;
  Index dim = 0;
  Index d = 0;
  Matrix reconstruct() const;       // M, for diagnostics
  Vector solve(const Vector& rhs) const;
};

CholeskyCache factorize(const ConvexProgram& prog, Scalar rho);

void u_update_squared(AdmmState& state, const CholeskyCache& cache,
                      const ConvexProgram& prog);
void v_update(AdmmState& state, const ConvexProgram& prog, Scalar beta,
              Scalar rho);
void s_update(AdmmState& state, const ConvexProgram& prog);
void dual_update(AdmmState& state, const ConvexProgram& prog, Scalar gamma_a,
                 Scalar rho);

// One inexact u-minimization pass by randomized block coordinate descent with
// backtracking line search; phi is this iteration's stop threshold.
void u_update_rbcd(AdmmState& state, const ConvexProgram& prog,
                   const RbcdOptions& opts, Scalar phi, Scalar rho,
                   std::uint64_t seed);

// Augmented-Lagrangian u-objective (the per-iteration subproblem), used by the
// RBCD line search and in tests.
Scalar admm_u_objective(const AdmmState& state, const ConvexProgram& prog,
                        Scalar rho);

struct SolveReport {
  std::vector<Scalar> objective_trace;       // convex objective per iteration
  std::vector<Scalar> recovered_loss_trace;  // nonconvex value of recovered net
  std::vector<Scalar> primal_residual;
  std::vector<Scalar> dual_residual;
  Scalar factorize_ms = 0, iterate_ms = 0, recover_ms = 0;
  NetworkWeights weights;
  Index iterations = 0;
  bool converged = false;
};

SolveReport admm_solve(const ConvexProgram& prog, const AdmmConfig& config,
                       std::uint64_t seed = 0);

NetworkWeights recover_weights(const std::vector<Vector>& v_blocks,
                               const std::vector<Vector>& w_blocks,
                               Scalar drop_tol = 1e-7);

struct ObjectiveEval {
  Scalar value;
  Scalar constraint_violation;  // most negative constraint entry, 0 if feasible
};

ObjectiveEval convex_objective(const ConvexProgram& prog,
                               const std::vector<Vector>& v_blocks,
                               const std::vector<Vector>& w_blocks);

// Helpers shared with the adversarial module.
std::vector<Vector> split_blocks(const Vector& x, Index P, Index block);
Vector concat_blocks(const std::vector<Vector>& blocks);
Vector predicted_output(const ConvexProgram& prog,
                        const std::vector<Vector>& v_blocks,
                        const std::vector<Vector>& w_blocks);

}  // namespace cvxnn
