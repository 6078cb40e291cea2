#include "cvxnn/adversarial.hpp"

#include <chrono>
#include <cmath>

#include "cvxnn/attacks.hpp"

namespace cvxnn {

namespace {

// log(e^{2t} + 1) and its derivative 2 sigma(2t), overflow-safe.
inline Scalar softplus2(Scalar t) {
  return 2.0 * std::max(t, 0.0) + std::log1p(std::exp(-2.0 * std::abs(t)));
}
inline Scalar dsoftplus2(Scalar t) { return 2.0 / (1.0 + std::exp(-2.0 * t)); }

// One-sided Huber smoothing of (t)_+; delta = 0 gives the exact hinge.
inline Scalar hpos(Scalar t, Scalar delta) {
  if (t <= 0) return 0;
  if (delta > 0 && t < delta) return t * t / (2 * delta);
  return t - delta / 2;
}
inline Scalar dhpos(Scalar t, Scalar delta) {
  if (t <= 0) return 0;
  if (delta > 0 && t < delta) return t / delta;
  return 1;
}

// Huber smoothing of |t|.
inline Scalar habs(Scalar t, Scalar delta) {
  const Scalar a = std::abs(t);
  if (delta > 0 && a < delta) return t * t / (2 * delta) + delta / 2;
  return a;
}
inline Scalar dhabs(Scalar t, Scalar delta) {
  if (delta > 0 && std::abs(t) < delta) return t / delta;
  return sgn(t);
}

struct NormEval {
  Scalar value;
  Vector grad;
};

// Dual norm ||x||_{p*} with optional smoothing; delta = 0 yields the exact
// value and a subgradient.
NormEval dual_norm_eval(const Vector& x, Scalar pstar, Scalar delta) {
  NormEval out;
  out.grad.resize(x.size());
  if (pstar == 1.0) {
    // The Huber core keeps its +delta/2 offset, so the smoothed value upper
    // bounds ||x||_1 and smoothed-feasible implies exactly feasible.
    Scalar v = 0;
    for (Index j = 0; j < x.size(); ++j) {
      v += delta > 0 ? habs(x(j), delta) : std::abs(x(j));
      out.grad(j) = dhabs(x(j), delta);
    }
    out.value = v;
  } else if (pstar == 2.0) {
    if (delta > 0) {
      const Scalar r = std::sqrt(x.squaredNorm() + delta * delta);
      out.value = r - delta;
      out.grad = x / r;
    } else {
      const Scalar r = x.norm();
      out.value = r;
      out.grad = r > 0 ? Vector(x / r) : Vector(Vector::Zero(x.size()));
    }
  } else {  // pstar = inf (p = 1 threat model); subgradient only
    Index jmax = 0;
    Scalar best = 0;
    for (Index j = 0; j < x.size(); ++j)
      if (std::abs(x(j)) > best) {
        best = std::abs(x(j));
        jmax = j;
      }
    out.value = best;
    out.grad.setZero();
    if (best > 0) out.grad(jmax) = sgn(x(jmax));
  }
  return out;
}

Matrix mask_matrix(const ConvexProgram& prog) {
  Matrix D(prog.n(), prog.P());
  for (Index i = 0; i < prog.P(); ++i)
    for (Index k = 0; k < prog.n(); ++k)
      D(k, i) = prog.patterns.patterns[i].bit(k) ? 1.0 : 0.0;
  return D;
}

struct DataEval {
  Scalar value;
  Matrix grad_q;  // n x d, d value / d q_k as rows
};

// Robust data term as a function of the per-sample aggregates Q (rows q_k).
DataEval robust_data_eval(const ConvexProgram& prog, const Matrix& Q,
                          Scalar pstar, Scalar eps, Scalar delta,
                          bool with_grad) {
  const Index n = prog.n();
  const Matrix& X = prog.data.X;
  const Vector& y = prog.data.y;
  DataEval out;
  out.value = 0;
  if (with_grad) out.grad_q = Matrix::Zero(n, Q.cols());

  for (Index k = 0; k < n; ++k) {
    const Vector q = Q.row(k).transpose();
    const NormEval nq = dual_norm_eval(q, pstar, delta);
    const Scalar xq = X.row(k).dot(q);
    switch (prog.loss) {
      case LossKind::Hinge: {
        const Scalar t = 1.0 - y(k) * xq + eps * nq.value;
        out.value += hpos(t, delta) / n;
        if (with_grad) {
          const Scalar dh = dhpos(t, delta) / n;
          out.grad_q.row(k) =
              dh * (-y(k) * X.row(k) + eps * nq.grad.transpose());
        }
        break;
      }
      case LossKind::Bce: {
        // Worst-case per-sample BCE is f((1 - 2y) x^T q + eps ||q||_1); the
        // derivation in the equivalence proof fixes this sign orientation.
        const Scalar g = (1.0 - 2.0 * y(k)) * xq + eps * nq.value;
        out.value += softplus2(g) / n;
        if (with_grad) {
          const Scalar df = dsoftplus2(g) / n;
          out.grad_q.row(k) =
              df * ((1.0 - 2.0 * y(k)) * X.row(k) + eps * nq.grad.transpose());
        }
        break;
      }
      case LossKind::Squared: {
        const Scalar r = xq - y(k);
        const Scalar t = habs(r, delta) + eps * nq.value;
        out.value += 0.5 * t * t;
        if (with_grad)
          out.grad_q.row(k) =
              t * (dhabs(r, delta) * X.row(k) + eps * nq.grad.transpose());
        break;
      }
    }
  }
  return out;
}

Scalar group_norm(const std::vector<Vector>& v_blocks,
                  const std::vector<Vector>& w_blocks) {
  Scalar s = 0;
  for (const auto& v : v_blocks) s += v.norm();
  for (const auto& w : w_blocks) s += w.norm();
  return s;
}

}  // namespace

RobustProgram build_robust_program(Dataset data, PatternSet patterns,
                                   LossKind loss, Scalar beta,
                                   PerturbationSpec spec) {
  spec.validate();
  RobustProgram prog;
  prog.base = build_program(std::move(data), std::move(patterns), loss, beta);
  prog.base.robust = spec;
  return prog;
}

Vector robust_constraint_residual(const Matrix& G_i, const Vector& v_i,
                                  const PerturbationSpec& spec) {
  return (G_i * v_i).array() - spec.epsilon * lp_norm(v_i, spec.dual_p());
}

Matrix aggregate_q(const ConvexProgram& prog, const std::vector<Vector>& v_blocks,
                   const std::vector<Vector>& w_blocks) {
  const Index P = prog.P();
  Matrix VW(P, prog.d());
  for (Index i = 0; i < P; ++i)
    VW.row(i) = (v_blocks[i] - w_blocks[i]).transpose();
  return mask_matrix(prog) * VW;
}

Scalar robust_data_term(const ConvexProgram& prog,
                        const std::vector<Vector>& v_blocks,
                        const std::vector<Vector>& w_blocks) {
  if (!prog.robust) throw UsageError("program has no perturbation spec");
  const Matrix Q = aggregate_q(prog, v_blocks, w_blocks);
  return robust_data_eval(prog, Q, prog.robust->dual_p(), prog.robust->epsilon,
                          0.0, false)
      .value;
}

Scalar hinge_robust_objective(const ConvexProgram& prog,
                              const std::vector<Vector>& v_blocks,
                              const std::vector<Vector>& w_blocks) {
  if (prog.loss != LossKind::Hinge)
    throw UsageError("hinge_robust_objective requires the hinge loss");
  return robust_data_term(prog, v_blocks, w_blocks) +
         prog.beta * group_norm(v_blocks, w_blocks);
}

Scalar bce_robust_objective(const ConvexProgram& prog,
                            const std::vector<Vector>& v_blocks,
                            const std::vector<Vector>& w_blocks) {
  if (prog.loss != LossKind::Bce)
    throw UsageError("bce_robust_objective requires the BCE loss");
  return robust_data_term(prog, v_blocks, w_blocks) +
         prog.beta * group_norm(v_blocks, w_blocks);
}

Scalar squared_robust_objective(const ConvexProgram& prog,
                                const std::vector<Vector>& v_blocks,
                                const std::vector<Vector>& w_blocks) {
  if (prog.loss != LossKind::Squared)
    throw UsageError("squared_robust_objective requires the squared loss");
  return robust_data_term(prog, v_blocks, w_blocks) +
         prog.beta * group_norm(v_blocks, w_blocks);
}

Scalar attacked_data_term(const ConvexProgram& prog,
                          const std::vector<Vector>& v_blocks,
                          const std::vector<Vector>& w_blocks,
                          const Matrix& Delta) {
  const Matrix Q = aggregate_q(prog, v_blocks, w_blocks);
  const Index n = prog.n();
  Scalar value = 0;
  for (Index k = 0; k < n; ++k) {
    const Scalar yhat =
        (prog.data.X.row(k) + Delta.row(k)).dot(Q.row(k));
    const Scalar y = prog.data.y(k);
    switch (prog.loss) {
      case LossKind::Hinge:
        value += std::max(1.0 - y * yhat, 0.0) / n;
        break;
      case LossKind::Bce:
        value += (-2.0 * yhat * y + softplus2(yhat)) / n;
        break;
      case LossKind::Squared:
        value += 0.5 * (yhat - y) * (yhat - y);
        break;
    }
  }
  return value;
}

WorstCase worst_case_delta(LossKind kind, const ConvexProgram& prog,
                           const std::vector<Vector>& v_blocks,
                           const std::vector<Vector>& w_blocks) {
  if (!prog.robust) throw UsageError("program has no perturbation spec");
  if (!std::isinf(prog.robust->p))
    throw UsageError("closed-form worst case requires the linf threat model");
  if (kind != prog.loss)
    throw UsageError("loss kind does not match the program");
  const Scalar eps = prog.robust->epsilon;
  const Matrix Q = aggregate_q(prog, v_blocks, w_blocks);
  const Index n = prog.n(), d = prog.d();
  const Vector& y = prog.data.y;

  WorstCase out;
  out.Delta = Matrix::Zero(n, d);
  for (Index k = 0; k < n; ++k) {
    for (Index j = 0; j < d; ++j) {
      switch (kind) {
        case LossKind::Hinge:
          out.Delta(k, j) = -eps * sgn(y(k) * Q(k, j));
          break;
        case LossKind::Bce:
          out.Delta(k, j) = -eps * sgn((2.0 * y(k) - 1.0) * Q(k, j));
          break;
        case LossKind::Squared: {
          const Scalar r = prog.data.X.row(k).dot(Q.row(k)) - y(k);
          const Scalar rs = r >= 0 ? 1.0 : -1.0;  // tie goes to +1 (attained)
          out.Delta(k, j) = eps * rs * sgn(Q(k, j));
          break;
        }
      }
    }
  }
  out.attacked_loss = attacked_data_term(prog, v_blocks, w_blocks, out.Delta);
  return out;
}

SquaredRobustReport squared_robust_constraints(const ConvexProgram& prog,
                                               const std::vector<Vector>& v_blocks,
                                               const std::vector<Vector>& w_blocks,
                                               Scalar a, const Vector& z) {
  if (!prog.robust) throw UsageError("program has no perturbation spec");
  const Index n = prog.n();
  if (z.size() != n + 1) throw UsageError("z must have length n + 1");
  const PerturbationSpec& spec = *prog.robust;

  SquaredRobustReport report;
  report.min_linear_residual = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < prog.P(); ++i) {
    report.min_linear_residual = std::min(
        {report.min_linear_residual,
         robust_constraint_residual(prog.patterns.G[i], v_blocks[i], spec)
             .minCoeff(),
         robust_constraint_residual(prog.patterns.G[i], w_blocks[i], spec)
             .minCoeff()});
  }
  const Matrix Q = aggregate_q(prog, v_blocks, w_blocks);
  report.z_residuals.resize(n + 1);
  for (Index k = 0; k < n; ++k) {
    const Scalar r = prog.data.X.row(k).dot(Q.row(k)) - prog.data.y(k);
    report.z_residuals(k) =
        z(k) - (std::abs(r) +
                spec.epsilon * lp_norm(Q.row(k).transpose(), spec.dual_p()));
  }
  report.z_residuals(n) = z(n) - std::abs(2.0 * a - 0.25);
  report.cone_residual = 2.0 * a + 0.25 - z.norm();
  report.objective = a + prog.beta * group_norm(v_blocks, w_blocks);
  return report;
}

RobustSolveReport solve_robust(const RobustProgram& rprog,
                               const RobustSolveConfig& config,
                               std::uint64_t seed) {
  (void)seed;  // the method is deterministic; kept for interface symmetry
  const ConvexProgram& prog = rprog.base;
  if (!prog.robust) throw UsageError("solve_robust requires a perturbation spec");
  const PerturbationSpec spec = *prog.robust;
  const Scalar pstar = spec.dual_p();
  const Index d = prog.d(), n = prog.n(), P = prog.P();
  const Index dim = 2 * d * P;
  const Matrix Dmask = mask_matrix(prog);
  const auto t0 = std::chrono::steady_clock::now();

  // x concatenates v_1..v_P then w_1..w_P.
  Vector x = Vector::Zero(dim);
  std::vector<Vector> mult(2 * P, Vector::Zero(n));
  Scalar mu = config.mu0;
  Scalar delta = 1e-2;  // smoothing level, tightened every outer round

  auto block = [&](const Vector& vec, Index b) { return vec.segment(b * d, d); };
  auto q_of = [&](const Vector& vec) {
    Matrix VW(P, d);
    for (Index i = 0; i < P; ++i)
      VW.row(i) = (vec.segment(i * d, d) - vec.segment((i + P) * d, d)).transpose();
    return Matrix(Dmask * VW);
  };

  // Smooth part: robust data term + augmented-Lagrangian penalty.
  auto smooth_eval = [&](const Vector& vec, Vector* grad) {
    const Matrix Q = q_of(vec);
    DataEval de =
        robust_data_eval(prog, Q, pstar, spec.epsilon, delta, grad != nullptr);
    Scalar value = de.value;
    if (grad) {
      grad->setZero();
      const Matrix GV = Dmask.transpose() * de.grad_q;  // P x d
      for (Index i = 0; i < P; ++i) {
        grad->segment(i * d, d) = GV.row(i).transpose();
        grad->segment((i + P) * d, d) = -GV.row(i).transpose();
      }
    }
    for (Index b = 0; b < 2 * P; ++b) {
      const Matrix& Gi = prog.patterns.G[b % P];
      const Vector xb = block(vec, b);
      const NormEval nb = dual_norm_eval(xb, pstar, delta);
      const Vector c = (Gi * xb).array() - spec.epsilon * nb.value;
      const Vector active = (mult[b] - mu * c).cwiseMax(0.0);
      value += (active.squaredNorm() - mult[b].squaredNorm()) / (2.0 * mu);
      if (grad)
        grad->segment(b * d, d) +=
            -Gi.transpose() * active + spec.epsilon * active.sum() * nb.grad;
    }
    return value;
  };

  auto group_prox = [&](const Vector& vec, Scalar tau) {
    Vector out(dim);
    for (Index b = 0; b < 2 * P; ++b) {
      const Vector p = block(vec, b);
      const Scalar nrm = p.norm();
      const Scalar scale = nrm > 0 ? std::max(0.0, 1.0 - tau / nrm) : 0.0;
      out.segment(b * d, d) = scale * p;
    }
    return out;
  };

  auto exact_violation = [&](const Vector& vec) {
    Scalar viol = 0;
    for (Index b = 0; b < 2 * P; ++b) {
      const Vector r = robust_constraint_residual(prog.patterns.G[b % P],
                                                  block(vec, b), spec);
      viol = std::max(viol, -r.minCoeff());
    }
    return std::max(viol, 0.0);
  };
  auto exact_objective = [&](const Vector& vec) {
    const Matrix Q = q_of(vec);
    Scalar reg = 0;
    for (Index b = 0; b < 2 * P; ++b) reg += block(vec, b).norm();
    return robust_data_eval(prog, Q, pstar, spec.epsilon, 0.0, false).value +
           prog.beta * reg;
  };

  RobustSolveReport report;
  Scalar gamma = 1.0;
  Scalar prev_viol = std::numeric_limits<Scalar>::infinity();
  Scalar prev_obj = std::numeric_limits<Scalar>::infinity();

  auto composite = [&](const Vector& vec) {
    Scalar reg = 0;
    for (Index b = 0; b < 2 * P; ++b) reg += block(vec, b).norm();
    return smooth_eval(vec, nullptr) + prog.beta * reg;
  };

  for (Index outer = 1; outer <= config.outer_iters; ++outer) {
    // FISTA with backtracking and adaptive restart; plain proximal gradient
    // crawls once the penalty weight grows.
    Vector z = x, x_prev = x;
    Scalar tk = 1.0;
    Scalar Fx = composite(x);
    for (Index it = 0; it < config.inner_iters; ++it) {
      Vector grad(dim);
      const Scalar fz = smooth_eval(z, &grad);
      Scalar g = std::min(gamma * 2.0, 1e3);
      Vector x_new;
      bool ok = false;
      for (int bt = 0; bt < 60; ++bt) {
        x_new = group_prox(z - g * grad, g * prog.beta);
        const Vector diff = x_new - z;
        const Scalar fx_new = smooth_eval(x_new, nullptr);
        if (fx_new <= fz + grad.dot(diff) + diff.squaredNorm() / (2.0 * g)) {
          ok = true;
          break;
        }
        g *= 0.5;
      }
      if (!ok) break;
      gamma = g;
      const Scalar F_new = composite(x_new);
      if (F_new > Fx) {  // momentum overshoot: restart from the last iterate
        z = x;
        tk = 1.0;
        continue;
      }
      const Scalar tk_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      z = x_new + ((tk - 1.0) / tk_next) * (x_new - x_prev);
      x_prev = x;
      x = x_new;
      tk = tk_next;
      const Scalar drop = Fx - F_new;
      Fx = F_new;
      if (!x.allFinite())
        throw NumericalError("robust solver produced non-finite iterates");
      if (drop <= config.tol_obj * (1.0 + std::abs(Fx)) &&
          (x - x_prev).norm() <= 1e3 * config.tol_obj * (1.0 + x.norm()))
        break;
    }

    // Multiplier update against the smoothed constraints.
    for (Index b = 0; b < 2 * P; ++b) {
      const Vector xb = block(x, b);
      const NormEval nb = dual_norm_eval(xb, pstar, delta);
      const Vector c = (prog.patterns.G[b % P] * xb).array() -
                       spec.epsilon * nb.value;
      mult[b] = (mult[b] - mu * c).cwiseMax(0.0);
    }

    const Scalar viol = exact_violation(x);
    const Scalar obj = exact_objective(x);
    report.objective_trace.push_back(obj);
    report.feasibility_trace.push_back(viol);

    const bool settled = outer > 3 && viol <= config.tol_feas &&
                         std::abs(obj - prev_obj) <=
                             1e-9 + 1e-7 * std::max(1.0, std::abs(obj));
    if (viol > 0.5 * prev_viol && viol > config.tol_feas)
      mu = std::min(mu * 4.0, config.mu_max);
    prev_viol = viol;
    prev_obj = obj;
    delta = std::max(delta * 0.2, 1e-8);
    if (settled && delta <= 1e-7) {
      report.converged = true;
      break;
    }
  }

  report.v_blocks.resize(P);
  report.w_blocks.resize(P);
  for (Index i = 0; i < P; ++i) {
    report.v_blocks[i] = x.segment(i * d, d);
    report.w_blocks[i] = x.segment((i + P) * d, d);
  }
  report.weights =
      recover_weights(report.v_blocks, report.w_blocks, config.drop_tol);
  report.final_objective = exact_objective(x);
  report.feasibility_violation = exact_violation(x);
  if (std::isinf(spec.p))
    report.worst_case_loss =
        worst_case_delta(prog.loss, prog, report.v_blocks, report.w_blocks)
            .attacked_loss;
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return report;
}

UpperBoundReport upper_bound_check(const NetworkWeights& weights,
                                   const RobustProgram& rprog,
                                   const std::vector<Vector>& v_blocks,
                                   const std::vector<Vector>& w_blocks,
                                   Scalar tol) {
  const ConvexProgram& prog = rprog.base;
  const PerturbationSpec& spec = rprog.spec();
  const Index n = prog.n();

  Scalar reg = 0;
  for (Index j = 0; j < weights.width(); ++j)
    reg += weights.hidden.col(j).squaredNorm() +
           weights.output(j) * weights.output(j);
  reg *= 0.5 * prog.beta;

  auto data_term_at = [&](const Matrix& Delta) {
    Scalar value = 0;
    for (Index k = 0; k < n; ++k) {
      const Vector xk = (prog.data.X.row(k) + Delta.row(k)).transpose();
      const Scalar yhat = forward_one(weights, xk);
      const Scalar y = prog.data.y(k);
      switch (prog.loss) {
        case LossKind::Hinge:
          value += std::max(1.0 - y * yhat, 0.0) / n;
          break;
        case LossKind::Bce:
          value += (-2.0 * yhat * y + softplus2(yhat)) / n;
          break;
        case LossKind::Squared:
          value += 0.5 * (yhat - y) * (yhat - y);
          break;
      }
    }
    return value;
  };

  Scalar best = data_term_at(Matrix::Zero(n, prog.d()));
  if (spec.epsilon > 0 && std::isinf(spec.p)) {
    best = std::max(
        best, data_term_at(
                  worst_case_delta(prog.loss, prog, v_blocks, w_blocks).Delta));
    AttackConfig cfg;
    cfg.kind = AttackKind::Pgd;
    cfg.epsilon = spec.epsilon;
    Matrix Delta = Matrix::Zero(n, prog.d());
    for (Index k = 0; k < n; ++k) {
      const Vector xk = prog.data.X.row(k).transpose();
      Delta.row(k) =
          (pgd(weights, xk, prog.data.y(k), prog.loss, cfg) - xk).transpose();
    }
    best = std::max(best, data_term_at(Delta));
  }

  UpperBoundReport report;
  report.convex_value =
      robust_data_term(prog, v_blocks, w_blocks) +
      prog.beta * group_norm(v_blocks, w_blocks);
  report.nonconvex_attacked_value = best + reg;
  report.holds = report.nonconvex_attacked_value <= report.convex_value + tol;
  return report;
}

}  // namespace cvxnn
