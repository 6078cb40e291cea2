#include "cvxnn/attacks.hpp"

#include <cmath>

#include "cvxnn/losses.hpp"
#include "cvxnn/rng.hpp"

namespace cvxnn {

namespace {

constexpr Scalar kLeakyZeta = 1e-3;

inline Scalar softplus2(Scalar t) {
  return 2.0 * std::max(t, 0.0) + std::log1p(std::exp(-2.0 * std::abs(t)));
}

// d loss / d yhat for a single sample; hinge uses the leaky variant so the
// flat region still produces an attack direction.
Scalar pointwise_dloss(LossKind loss, Scalar yhat, Scalar y) {
  switch (loss) {
    case LossKind::Squared:
      return yhat - y;
    case LossKind::Hinge:
      return 1.0 - y * yhat > 0 ? -y : -kLeakyZeta * y;
    case LossKind::Bce:
      return 2.0 / (1.0 + std::exp(-2.0 * yhat)) - 2.0 * y;
  }
  return 0;
}

}  // namespace

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::Fgsm: return "fgsm";
    case AttackKind::Pgd: return "pgd";
    case AttackKind::Exact: return "exact";
  }
  return "?";
}

AttackKind attack_from_name(const std::string& name) {
  if (name == "fgsm") return AttackKind::Fgsm;
  if (name == "pgd") return AttackKind::Pgd;
  if (name == "exact") return AttackKind::Exact;
  throw UsageError("unknown attack kind: " + name);
}

Vector input_gradient(const NetworkWeights& w, const Vector& x, Scalar y,
                      LossKind loss) {
  Vector dydx = Vector::Zero(x.size());
  Scalar yhat = 0;
  for (Index j = 0; j < w.width(); ++j) {
    const Scalar pre = w.hidden.col(j).dot(x);
    if (pre >= 0) {
      yhat += pre * w.output(j);
      dydx += w.output(j) * w.hidden.col(j);
    }
  }
  return pointwise_dloss(loss, yhat, y) * dydx;
}

Scalar pointwise_loss(const NetworkWeights& w, const Vector& x, Scalar y,
                      LossKind loss) {
  const Scalar yhat = forward_one(w, x);
  switch (loss) {
    case LossKind::Squared:
      return 0.5 * (yhat - y) * (yhat - y);
    case LossKind::Hinge:
      return std::max(1.0 - y * yhat, 0.0);
    case LossKind::Bce:
      return -2.0 * yhat * y + softplus2(yhat);
  }
  return 0;
}

Vector fgsm(const NetworkWeights& w, const Vector& x, Scalar y, LossKind loss,
            Scalar epsilon, Index frozen_from) {
  const Vector g = input_gradient(w, x, y, loss);
  Vector x_adv = x;
  const Index lim = frozen_from >= 0 ? frozen_from : x.size();
  for (Index j = 0; j < lim; ++j) x_adv(j) += epsilon * sgn(g(j));
  return x_adv;
}

Vector pgd(const NetworkWeights& w, const Vector& x, Scalar y, LossKind loss,
           const AttackConfig& config) {
  const Scalar eps = config.epsilon;
  const Scalar step = config.step_size();
  const Index lim = config.frozen_from >= 0 ? config.frozen_from : x.size();
  Vector x_adv = x;
  for (Index t = 0; t < config.steps; ++t) {
    const Vector g = input_gradient(w, x_adv, y, loss);
    for (Index j = 0; j < lim; ++j) {
      x_adv(j) += step * sgn(g(j));
      x_adv(j) = std::min(std::max(x_adv(j), x(j) - eps), x(j) + eps);
    }
  }
  return x_adv;
}

bool classify_correct(LossKind loss, Scalar yhat, Scalar y) {
  if (loss == LossKind::Bce) return (yhat >= 0 ? 1.0 : 0.0) == y;
  return (yhat >= 0 ? 1.0 : -1.0) == y;  // sgn(0) -> +1
}

Metrics evaluate(const NetworkWeights& w, const Dataset& data, LossKind loss,
                 const std::vector<AttackConfig>& attacks) {
  check_labels(loss, data.y);
  const Index n = data.n();
  const Index frozen = data.has_bias ? data.d() - 1 : -1;

  Metrics m;
  for (Index k = 0; k < n; ++k) {
    const Vector xk = data.X.row(k).transpose();
    const Scalar y = data.y(k);
    m.clean_acc += classify_correct(loss, forward_one(w, xk), y);
    m.clean_loss += pointwise_loss(w, xk, y, loss);
  }
  m.clean_acc /= n;
  m.clean_loss /= n;

  for (const auto& cfg : attacks) {
    AttackConfig acfg = cfg;
    if (acfg.frozen_from < 0) acfg.frozen_from = frozen;
    Scalar acc = 0, loss_sum = 0;
    for (Index k = 0; k < n; ++k) {
      const Vector xk = data.X.row(k).transpose();
      const Scalar y = data.y(k);
      Vector x_adv;
      switch (acfg.kind) {
        case AttackKind::Fgsm:
          x_adv = fgsm(w, xk, y, loss, acfg.epsilon, acfg.frozen_from);
          break;
        case AttackKind::Pgd:
        case AttackKind::Exact:
          x_adv = pgd(w, xk, y, loss, acfg);
          break;
      }
      acc += classify_correct(loss, forward_one(w, x_adv), y);
      loss_sum += pointwise_loss(w, x_adv, y, loss);
    }
    const std::string name = attack_name(acfg.kind);
    m.attack_acc[name] = acc / n;
    m.attack_loss[name] = loss_sum / n;
  }
  return m;
}

NetworkWeights sgd_baseline_train(const Dataset& data, LossKind loss,
                                  Index width, Scalar beta,
                                  const SgdConfig& config, std::uint64_t seed) {
  data.validate();
  check_labels(loss, data.y);
  if (width < 1) throw UsageError("width must be at least 1");
  const Index n = data.n(), d = data.d();
  CounterRng rng(CounterRng::derive_seed(seed, 0x56d));

  NetworkWeights w;
  w.hidden.resize(d, width);
  w.output.resize(width);
  const Scalar scale = std::sqrt(2.0 / double(d));
  for (Index j = 0; j < width; ++j) {
    for (Index i = 0; i < d; ++i) w.hidden(i, j) = scale * rng.gaussian();
    w.output(j) = scale * rng.gaussian();
  }

  std::vector<Index> order(n);
  for (Index i = 0; i < n; ++i) order[i] = i;

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    for (Index i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
    for (Index start = 0; start < n; start += config.batch) {
      const Index bsz = std::min(config.batch, n - start);
      Matrix gh = Matrix::Zero(d, width);
      Vector go = Vector::Zero(width);
      for (Index b = 0; b < bsz; ++b) {
        const Index k = order[start + b];
        const Vector xk = data.X.row(k).transpose();
        Scalar yhat = 0;
        Vector act(width);
        for (Index j = 0; j < width; ++j) {
          const Scalar pre = w.hidden.col(j).dot(xk);
          act(j) = pre >= 0 ? pre : 0.0;
          yhat += act(j) * w.output(j);
        }
        Scalar dl = 0;
        switch (loss) {
          case LossKind::Squared: dl = yhat - data.y(k); break;
          case LossKind::Hinge:
            dl = 1.0 - data.y(k) * yhat > 0 ? -data.y(k) : 0.0;
            break;
          case LossKind::Bce:
            dl = 2.0 / (1.0 + std::exp(-2.0 * yhat)) - 2.0 * data.y(k);
            break;
        }
        for (Index j = 0; j < width; ++j) {
          go(j) += dl * act(j);
          if (act(j) > 0) gh.col(j) += dl * w.output(j) * xk;
        }
      }
      gh /= bsz;
      go /= bsz;
      gh += beta * w.hidden;
      go += beta * w.output;
      w.hidden -= config.lr * gh;
      w.output -= config.lr * go;
      if (!w.hidden.allFinite() || !w.output.allFinite())
        throw NumericalError("SGD diverged at epoch " + std::to_string(epoch));
    }
  }
  return w;
}

}  // namespace cvxnn
