#include "cvxnn/scp.hpp"

#include <cmath>

#include "cvxnn/rng.hpp"

namespace cvxnn {

NetworkWeights ScpModel::as_network() const {
  NetworkWeights net;
  net.hidden = U;
  net.output = alpha;
  return net;
}

Matrix sample_unit_sphere(Index N, Index d, std::uint64_t seed) {
  if (N < 1 || d < 1) throw UsageError("need N >= 1 and d >= 1");
  CounterRng rng(CounterRng::derive_seed(seed, 0x5f));
  Matrix U(d, N);
  for (Index i = 0; i < N; ++i) {
    Vector g;
    do {
      g = rng.gaussian_vector(d);
    } while (g.norm() == 0.0);
    U.col(i) = g / g.norm();
  }
  return U;
}

Matrix relu_features(const Matrix& X, const Matrix& U) {
  return (X * U).cwiseMax(0.0);
}

Vector soft_threshold(const Vector& x, Scalar tau) {
  if (tau < 0) throw UsageError("threshold must be nonnegative");
  return x.unaryExpr([tau](Scalar v) {
    return sgn(v) * std::max(std::abs(v) - tau, 0.0);
  });
}

namespace {

// Largest eigenvalue of H^T H by power iteration; a Lipschitz estimate for
// the smooth part (the BCE curvature factor is at most 1).
Scalar power_iteration_norm(const Matrix& H) {
  const Index N = H.cols();
  Vector v = Vector::Ones(N) / std::sqrt(double(N));
  Scalar lam = 0;
  for (int it = 0; it < 100; ++it) {
    Vector w = H.transpose() * (H * v);
    const Scalar nrm = w.norm();
    if (nrm == 0) return 0;
    v = w / nrm;
    const Scalar lam_new = v.dot(H.transpose() * (H * v));
    if (std::abs(lam_new - lam) <= 1e-10 * std::max(1.0, lam_new)) return lam_new;
    lam = lam_new;
  }
  return lam;
}

}  // namespace

IstaResult ista_solve(const Matrix& H, const Vector& y, LossKind loss,
                      Scalar beta, const IstaConfig& config) {
  if (loss == LossKind::Hinge)
    throw UsageError("ista_solve supports the smooth losses only");
  if (beta < 0) throw UsageError("beta must be nonnegative");
  const Index N = H.cols();

  const Scalar L = power_iteration_norm(H);
  Scalar gamma = L > 0 ? 1.0 / L : 1.0;

  IstaResult result;
  Vector alpha = Vector::Zero(N);
  Vector alpha_prev = alpha;
  Vector z = alpha;  // momentum point (FISTA); restarts keep the trace monotone
  Scalar tk = 1.0;
  Scalar objective =
      loss_eval(loss, H * alpha, y).value + beta * alpha.cwiseAbs().sum();
  result.objective_trace.push_back(objective);

  for (Index it = 0; it < config.max_iter; ++it) {
    const LossEval at_z = loss_eval(loss, H * z, y);
    const Vector grad = H.transpose() * at_z.gradient;
    Scalar g = std::min(2.0 * gamma, L > 0 ? 16.0 / L : 1e6);
    Vector alpha_new;
    Scalar smooth_new = 0;
    bool ok = false;
    for (Index bt = 0; bt < config.max_backtracks; ++bt) {
      alpha_new = soft_threshold(z - g * grad, g * beta);
      smooth_new = loss_eval(loss, H * alpha_new, y).value;
      const Vector diff = alpha_new - z;
      if (smooth_new <=
          at_z.value + grad.dot(diff) + diff.squaredNorm() / (2.0 * g)) {
        ok = true;
        break;
      }
      g *= 0.5;
    }
    if (!ok) {
      // Step shrank to the floating-point floor: treat as converged.
      result.converged = true;
      break;
    }
    gamma = g;
    const Scalar objective_new = smooth_new + beta * alpha_new.cwiseAbs().sum();
    if (objective_new > objective) {
      if ((z - alpha).norm() == 0.0) {
        // A plain step from alpha cannot descend either: numeric floor.
        result.converged = true;
        break;
      }
      // Momentum overshoot: restart from the last accepted iterate.
      z = alpha;
      tk = 1.0;
      continue;
    }
    const Scalar tk_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    z = alpha_new + ((tk - 1.0) / tk_next) * (alpha_new - alpha);
    tk = tk_next;
    alpha_prev = alpha;
    alpha = alpha_new;
    result.objective_trace.push_back(objective_new);
    const Scalar decrease = objective - objective_new;
    objective = objective_new;
    if (decrease < config.tol * std::max(1.0, objective) &&
        (alpha - alpha_prev).norm() <=
            std::sqrt(config.tol) * (1.0 + alpha.norm())) {
      result.converged = true;
      break;
    }
  }
  result.alpha = alpha;
  return result;
}

Scalar hoeffding_certificate(Scalar z_bar, Index n1, Scalar xi) {
  if (n1 < 1) throw UsageError("probe count must be at least 1");
  if (xi <= 0 || xi > 1) throw UsageError("xi must lie in (0, 1]");
  return z_bar + std::sqrt(std::log(1.0 / xi) / (2.0 * n1));
}

IterativeScpResult iterative_sampling_train(const Dataset& data, LossKind loss,
                                            Scalar beta, Index N0, Scalar psi,
                                            Scalar xi, std::uint64_t seed,
                                            Index max_rounds,
                                            const IstaConfig& ista) {
  if (loss == LossKind::Hinge)
    throw UsageError("iterative sampling requires a smooth loss (dual recovery)");
  if (psi <= 0 || psi > 1 || xi <= 0 || xi > 1)
    throw UsageError("psi and xi must lie in (0, 1]");
  data.validate();
  check_labels(loss, data.y);

  const Index n = data.n(), d = data.d();
  const Scalar weight_cap = (n + 1) / (psi * xi) - 1.0;

  IterativeScpResult out;
  Matrix U = sample_unit_sphere(N0, d, CounterRng::derive_seed(seed, 0));

  for (Index round = 1; round <= max_rounds; ++round) {
    out.rounds = round;
    const Matrix H = relu_features(data.X, U);
    IstaResult fit = ista_solve(H, data.y, loss, beta, ista);
    out.objective_per_round.push_back(fit.objective_trace.back());
    out.model.U = U;
    out.model.alpha = fit.alpha;
    out.model.H = H;

    const Vector v = dual_from_primal(loss, H * fit.alpha, data.y);
    const Index Nt = std::max<Index>(500, U.cols());
    const Matrix probes =
        sample_unit_sphere(Nt, d, CounterRng::derive_seed(seed, 100 + round));
    std::vector<Index> violators;
    for (Index i = 0; i < Nt; ++i) {
      const Scalar corr = std::abs(v.dot((data.X * probes.col(i)).cwiseMax(0.0)));
      if (corr > beta) violators.push_back(i);
    }
    const Scalar z_bar = double(violators.size()) / double(Nt);

    out.certificate.z_bar = z_bar;
    out.certificate.n1 = Nt;
    out.certificate.psi = psi;
    out.certificate.xi = xi;
    out.certificate.theta_bound = hoeffding_certificate(z_bar, Nt, xi);
    if (out.certificate.theta_bound <= psi || U.cols() >= weight_cap) {
      out.certificate.certified = out.certificate.theta_bound <= psi;
      return out;
    }

    Matrix U_next(d, U.cols() + static_cast<Index>(violators.size()));
    U_next.leftCols(U.cols()) = U;
    for (size_t j = 0; j < violators.size(); ++j)
      U_next.col(U.cols() + static_cast<Index>(j)) = probes.col(violators[j]);
    U = std::move(U_next);
  }
  out.certificate.certified = false;
  return out;
}

}  // namespace cvxnn
