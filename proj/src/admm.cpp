#include "cvxnn/admm.hpp"

#include <chrono>
#include <cmath>

#include "cvxnn/rng.hpp"

namespace cvxnn {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Block a in [0, 2P) refers to pattern i = a mod P; the first P blocks carry
// the v side (+F_i), the second P the w side (-F_i). G is the same for both.
inline Index pat(const ConvexProgram& prog, Index a) { return a % prog.P(); }
inline Scalar fsign(const ConvexProgram& prog, Index a) {
  return a < prog.P() ? 1.0 : -1.0;
}

Vector apply_F(const ConvexProgram& prog, const Vector& u) {
  const Index d = prog.d(), P = prog.P();
  Vector yhat = Vector::Zero(prog.n());
  for (Index a = 0; a < 2 * P; ++a)
    yhat += fsign(prog, a) * (prog.patterns.F[pat(prog, a)] * u.segment(a * d, d));
  return yhat;
}

Vector apply_Ft(const ConvexProgram& prog, const Vector& r) {
  const Index d = prog.d(), P = prog.P();
  Vector out(2 * d * P);
  for (Index a = 0; a < 2 * P; ++a)
    out.segment(a * d, d) =
        fsign(prog, a) * (prog.patterns.F[pat(prog, a)].transpose() * r);
  return out;
}

Vector apply_G(const ConvexProgram& prog, const Vector& u) {
  const Index d = prog.d(), n = prog.n(), P = prog.P();
  Vector out(2 * n * P);
  for (Index a = 0; a < 2 * P; ++a)
    out.segment(a * n, n) = prog.patterns.G[pat(prog, a)] * u.segment(a * d, d);
  return out;
}

Vector apply_Gt(const ConvexProgram& prog, const Vector& t) {
  const Index d = prog.d(), n = prog.n(), P = prog.P();
  Vector out(2 * d * P);
  for (Index a = 0; a < 2 * P; ++a)
    out.segment(a * d, d) =
        prog.patterns.G[pat(prog, a)].transpose() * t.segment(a * n, n);
  return out;
}

}  // namespace

ConvexProgram build_program(Dataset data, PatternSet patterns, LossKind loss,
                            Scalar beta) {
  data.validate();
  check_labels(loss, data.y);
  if (beta < 0) throw UsageError("beta must be nonnegative");
  if (patterns.size() < 1) throw UsageError("pattern set is empty");
  if (patterns.source_X.rows() != data.X.rows() ||
      patterns.source_X.cols() != data.X.cols() ||
      patterns.source_X != data.X)
    throw UsageError("pattern set was realized against a different matrix");
  ConvexProgram prog;
  prog.data = std::move(data);
  prog.patterns = std::move(patterns);
  prog.loss = loss;
  prog.beta = beta;
  return prog;
}

AdmmState zero_state(const ConvexProgram& prog) {
  AdmmState st;
  const Index d = prog.d(), n = prog.n(), P = prog.P();
  st.u = Vector::Zero(2 * d * P);
  st.v = Vector::Zero(2 * d * P);
  st.lambda = Vector::Zero(2 * d * P);
  st.s = Vector::Zero(2 * n * P);
  st.nu = Vector::Zero(2 * n * P);
  return st;
}

Matrix CholeskyCache::reconstruct() const {
  if (!woodbury) {
    Matrix L = llt.matrixL();
    return L * L.transpose();
  }
  Matrix M = (F.transpose() * F) / rho;
  for (Index at = 0; at < dim; at += d) M.block(at, at, d, d) += XtX;
  M.diagonal().array() += 1.0;
  return M;
}

Vector CholeskyCache::solve(const Vector& rhs) const {
  if (!woodbury) return llt.solve(rhs);
  Vector x(dim);
  for (Index at = 0; at < dim; at += d)
    x.segment(at, d) = block_llt.solve(rhs.segment(at, d));
  const Vector w = schur_llt.solve(F * x);
  x.noalias() -= BinvFt * w;
  return x;
}

CholeskyCache factorize(const ConvexProgram& prog, Scalar rho) {
  if (rho <= 0) throw UsageError("rho must be positive");
  const Index d = prog.d(), n = prog.n(), P = prog.P();
  const Index dim = 2 * d * P;

  Matrix F(n, dim);
  for (Index a = 0; a < 2 * P; ++a)
    F.middleCols(a * d, d) = fsign(prog, a) * prog.patterns.F[pat(prog, a)];
  if (!F.allFinite())
    throw NumericalError("Cholesky factorization failed (non-finite input)");

  CholeskyCache cache;
  cache.rho = rho;
  cache.dim = dim;
  cache.d = d;
  cache.XtX = prog.data.X.transpose() * prog.data.X;
  cache.woodbury = dim > n;
  if (cache.woodbury) {
    Matrix A = cache.XtX;
    A.diagonal().array() += 1.0;
    cache.block_llt.compute(A);
    if (cache.block_llt.info() != Eigen::Success)
      throw NumericalError("Cholesky factorization failed (NaN or non-PSD input)");
    cache.F = std::move(F);
    cache.BinvFt.resize(dim, n);
    for (Index a = 0; a < 2 * P; ++a)
      cache.BinvFt.middleRows(a * d, d) =
          cache.block_llt.solve(cache.F.middleCols(a * d, d).transpose());
    Matrix S = cache.F * cache.BinvFt;
    S.diagonal().array() += rho;
    cache.schur_llt.compute(S);
    if (cache.schur_llt.info() != Eigen::Success)
      throw NumericalError("Cholesky factorization failed (NaN or non-PSD input)");
    return cache;
  }

  Matrix M = (F.transpose() * F) / rho;
  for (Index a = 0; a < 2 * P; ++a)
    M.block(a * d, a * d, d, d) += cache.XtX;  // G_i^T G_i = X^T X exactly
  M.diagonal().array() += 1.0;
  cache.llt.compute(M);
  if (cache.llt.info() != Eigen::Success || !M.allFinite())
    throw NumericalError("Cholesky factorization failed (NaN or non-PSD input)");
  return cache;
}

void u_update_squared(AdmmState& state, const CholeskyCache& cache,
                      const ConvexProgram& prog) {
  if (prog.loss != LossKind::Squared)
    throw UsageError("u_update_squared requires the squared loss");
  if (cache.dim != state.u.size())
    throw UsageError("Cholesky cache does not match the program");
  const Vector rhs = apply_Ft(prog, prog.data.y) / cache.rho + state.v -
                     state.lambda + apply_Gt(prog, state.s - state.nu);
  state.u = cache.solve(rhs);
}

void v_update(AdmmState& state, const ConvexProgram& prog, Scalar beta,
              Scalar rho) {
  if (rho <= 0) throw UsageError("rho must be positive");
  const Index d = prog.d(), P = prog.P();
  for (Index a = 0; a < 2 * P; ++a) {
    const Vector p = state.u.segment(a * d, d) + state.lambda.segment(a * d, d);
    const Scalar nrm = p.norm();
    const Scalar scale = nrm > 0 ? std::max(0.0, 1.0 - beta / (rho * nrm)) : 0.0;
    state.v.segment(a * d, d) = scale * p;
  }
}

void s_update(AdmmState& state, const ConvexProgram& prog) {
  state.s = (apply_G(prog, state.u) + state.nu).cwiseMax(0.0);
}

void dual_update(AdmmState& state, const ConvexProgram& prog, Scalar gamma_a,
                 Scalar rho) {
  const Scalar step = gamma_a / rho;
  state.lambda += step * (state.u - state.v);
  state.nu += step * (apply_G(prog, state.u) - state.s);
}

Scalar admm_u_objective(const AdmmState& state, const ConvexProgram& prog,
                        Scalar rho) {
  const Scalar loss = loss_eval(prog.loss, apply_F(prog, state.u), prog.data.y).value;
  const Scalar quad = (state.u - state.v + state.lambda).squaredNorm() +
                      (apply_G(prog, state.u) - state.s + state.nu).squaredNorm();
  return loss + 0.5 * rho * quad;
}

namespace {

struct RbcdWork {
  Matrix XtX;
  std::vector<Vector> s_tilde;  // G_i^T (s_a - nu_a) per block a
};

RbcdWork rbcd_setup(const AdmmState& state, const ConvexProgram& prog) {
  RbcdWork w;
  w.XtX = prog.data.X.transpose() * prog.data.X;
  const Index n = prog.n(), P = prog.P();
  w.s_tilde.resize(2 * P);
  for (Index a = 0; a < 2 * P; ++a)
    w.s_tilde[a] = prog.patterns.G[pat(prog, a)].transpose() *
                   (state.s.segment(a * n, n) - state.nu.segment(a * n, n));
  return w;
}

// Local part of the u-objective touched by the pair (u_i, z_i).
Scalar rbcd_local(const AdmmState& state, const ConvexProgram& prog, Scalar rho,
                  Index i, const Vector& ui, const Vector& zi,
                  const Vector& yhat) {
  const Index d = prog.d(), n = prog.n(), P = prog.P();
  const Matrix& Gi = prog.patterns.G[i];
  Scalar quad = (ui - state.v.segment(i * d, d) + state.lambda.segment(i * d, d))
                    .squaredNorm();
  quad += (zi - state.v.segment((i + P) * d, d) +
           state.lambda.segment((i + P) * d, d))
              .squaredNorm();
  quad += (Gi * ui - state.s.segment(i * n, n) + state.nu.segment(i * n, n))
              .squaredNorm();
  quad += (Gi * zi - state.s.segment((i + P) * n, n) +
           state.nu.segment((i + P) * n, n))
              .squaredNorm();
  return loss_eval(prog.loss, yhat, prog.data.y).value + 0.5 * rho * quad;
}

}  // namespace

void u_update_rbcd(AdmmState& state, const ConvexProgram& prog,
                   const RbcdOptions& opts, Scalar phi, Scalar rho,
                   std::uint64_t seed) {
  const Index d = prog.d(), P = prog.P();
  RbcdWork work = rbcd_setup(state, prog);
  CounterRng rng(CounterRng::derive_seed(seed, 0xbcd));
  Vector yhat = apply_F(prog, state.u);

  const Index max_picks = opts.max_inner > 0 ? opts.max_inner : 40 * 2 * P;
  Scalar gamma = opts.gamma_init;
  Index picks = 0;
  while (picks < max_picks) {
    Scalar round_decrease = 0;
    for (Index step = 0; step < 2 * P && picks < max_picks; ++step, ++picks) {
      const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(P)));
      const Matrix& Fi = prog.patterns.F[i];
      Vector ui = state.u.segment(i * d, d);
      Vector zi = state.u.segment((i + P) * d, d);

      const Vector ytil = loss_eval(prog.loss, yhat, prog.data.y).gradient;
      const Vector Ft_ytil = Fi.transpose() * ytil;
      const Vector gu =
          Ft_ytil + rho * (ui - state.v.segment(i * d, d) +
                           state.lambda.segment(i * d, d) + work.XtX * ui -
                           work.s_tilde[i]);
      const Vector gz =
          -Ft_ytil + rho * (zi - state.v.segment((i + P) * d, d) +
                            state.lambda.segment((i + P) * d, d) +
                            work.XtX * zi - work.s_tilde[i + P]);
      const Scalar gnorm2 = gu.squaredNorm() + gz.squaredNorm();
      if (gnorm2 == 0) continue;

      const Scalar base = rbcd_local(state, prog, rho, i, ui, zi, yhat);
      Scalar g = std::min(gamma * 2.0, opts.gamma_init * 16.0);
      bool accepted = false;
      for (int bt = 0; bt < 45; ++bt) {
        const Vector ui_new = ui - g * gu;
        const Vector zi_new = zi - g * gz;
        const Vector yhat_new =
            yhat + Fi * ((ui_new - zi_new) - (ui - zi));
        const Scalar val = rbcd_local(state, prog, rho, i, ui_new, zi_new, yhat_new);
        if (val <= base - 1e-4 * g * gnorm2 || (bt >= 40 && val < base)) {
          state.u.segment(i * d, d) = ui_new;
          state.u.segment((i + P) * d, d) = zi_new;
          yhat = yhat_new;
          round_decrease += base - val;
          gamma = g;
          accepted = true;
          break;
        }
        g *= 0.5;
      }
      if (!accepted && prog.loss != LossKind::Hinge &&
          gnorm2 > 1e-12 * (1.0 + state.u.squaredNorm()))
        throw NumericalError("RBCD line search found no descent direction");
    }
    if (round_decrease < phi / std::max(opts.tau, state.u.norm())) break;
  }
}

std::vector<Vector> split_blocks(const Vector& x, Index P, Index block) {
  std::vector<Vector> out(P);
  for (Index i = 0; i < P; ++i) out[i] = x.segment(i * block, block);
  return out;
}

Vector concat_blocks(const std::vector<Vector>& blocks) {
  Index total = 0;
  for (const auto& b : blocks) total += b.size();
  Vector out(total);
  Index at = 0;
  for (const auto& b : blocks) {
    out.segment(at, b.size()) = b;
    at += b.size();
  }
  return out;
}

Vector predicted_output(const ConvexProgram& prog,
                        const std::vector<Vector>& v_blocks,
                        const std::vector<Vector>& w_blocks) {
  Vector yhat = Vector::Zero(prog.n());
  for (Index i = 0; i < prog.P(); ++i)
    yhat += prog.patterns.F[i] * (v_blocks[i] - w_blocks[i]);
  return yhat;
}

NetworkWeights recover_weights(const std::vector<Vector>& v_blocks,
                               const std::vector<Vector>& w_blocks,
                               Scalar drop_tol) {
  std::vector<Vector> hidden;
  std::vector<Scalar> output;
  for (const auto& v : v_blocks) {
    const Scalar nrm = v.norm();
    if (nrm > drop_tol) {
      hidden.push_back(v / std::sqrt(nrm));
      output.push_back(std::sqrt(nrm));
    }
  }
  for (const auto& w : w_blocks) {
    const Scalar nrm = w.norm();
    if (nrm > drop_tol) {
      hidden.push_back(w / std::sqrt(nrm));
      output.push_back(-std::sqrt(nrm));
    }
  }
  NetworkWeights net;
  const Index m = static_cast<Index>(hidden.size());
  const Index d = m > 0 ? hidden.front().size()
                        : (v_blocks.empty() ? 0 : v_blocks.front().size());
  net.hidden.resize(d, m);
  net.output.resize(m);
  for (Index j = 0; j < m; ++j) {
    net.hidden.col(j) = hidden[j];
    net.output(j) = output[j];
  }
  return net;
}

ObjectiveEval convex_objective(const ConvexProgram& prog,
                               const std::vector<Vector>& v_blocks,
                               const std::vector<Vector>& w_blocks) {
  const Vector yhat = predicted_output(prog, v_blocks, w_blocks);
  Scalar reg = 0;
  Scalar violation = 0;
  for (Index i = 0; i < prog.P(); ++i) {
    reg += v_blocks[i].norm() + w_blocks[i].norm();
    violation = std::min(violation, (prog.patterns.G[i] * v_blocks[i]).minCoeff());
    violation = std::min(violation, (prog.patterns.G[i] * w_blocks[i]).minCoeff());
  }
  return {loss_eval(prog.loss, yhat, prog.data.y).value + prog.beta * reg,
          violation};
}

SolveReport admm_solve(const ConvexProgram& prog, const AdmmConfig& config,
                       std::uint64_t seed) {
  if (prog.robust && prog.robust->epsilon > 0)
    throw UsageError("admm_solve handles standard programs only; use solve_robust");
  if (config.rho <= 0 || config.gamma_a <= 0)
    throw UsageError("rho and gamma_a must be positive");

  const Index d = prog.d(), P = prog.P();
  const bool closed_form = prog.loss == LossKind::Squared && !config.use_rbcd;

  SolveReport report;
  CholeskyCache cache;
  if (closed_form) {
    const auto t0 = Clock::now();
    cache = factorize(prog, config.rho);
    report.factorize_ms = ms_since(t0);
  }

  AdmmState state = zero_state(prog);
  const auto t_iter = Clock::now();
  Scalar recover_ms = 0;
  for (Index iter = 1; iter <= config.max_iter; ++iter) {
    state.iter = iter;
    if (closed_form) {
      u_update_squared(state, cache, prog);
    } else {
      const Scalar phi = config.rbcd.phi0 / (double(iter) * iter);
      u_update_rbcd(state, prog, config.rbcd, phi, config.rho,
                    CounterRng::derive_seed(seed, 0x5000 + iter));
    }
    const Vector v_prev = state.v;
    const Vector s_prev = state.s;
    v_update(state, prog, prog.beta, config.rho);
    s_update(state, prog);
    dual_update(state, prog, config.gamma_a, config.rho);

    const Scalar primal = (state.u - state.v).norm() +
                          (apply_G(prog, state.u) - state.s).norm();
    const Scalar dual =
        config.rho * ((state.v - v_prev).norm() + (state.s - s_prev).norm());
    report.primal_residual.push_back(primal);
    report.dual_residual.push_back(dual);

    auto v_blocks = split_blocks(state.v.head(d * P), P, d);
    auto w_blocks = split_blocks(state.v.tail(d * P), P, d);
    report.objective_trace.push_back(
        convex_objective(prog, v_blocks, w_blocks).value);
    const auto t_rec = Clock::now();
    const NetworkWeights net = recover_weights(v_blocks, w_blocks);
    report.recovered_loss_trace.push_back(
        nonconvex_objective(net, prog.data, prog.loss, prog.beta));
    recover_ms += ms_since(t_rec);

    if (!state.u.allFinite() || !state.v.allFinite() || !state.s.allFinite())
      throw NumericalError("ADMM produced non-finite iterates at iteration " +
                           std::to_string(iter));

    report.iterations = iter;
    if (iter > 1 && primal < config.tol_primal && dual < config.tol_dual) {
      report.converged = true;
      break;
    }
  }
  report.iterate_ms = ms_since(t_iter) - recover_ms;
  report.recover_ms = recover_ms;

  auto v_blocks = split_blocks(state.v.head(d * P), P, d);
  auto w_blocks = split_blocks(state.v.tail(d * P), P, d);
  report.weights = recover_weights(v_blocks, w_blocks);
  return report;
}

}  // namespace cvxnn
