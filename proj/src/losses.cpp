#include "cvxnn/losses.hpp"

#include <cmath>

namespace cvxnn {

namespace {

// log(e^{2t} + 1) without overflow.
inline Scalar softplus2(Scalar t) {
  return 2.0 * std::max(t, 0.0) + std::log1p(std::exp(-2.0 * std::abs(t)));
}

// 2 sigma(2t), the derivative of softplus2.
inline Scalar dsoftplus2(Scalar t) { return 2.0 / (1.0 + std::exp(-2.0 * t)); }

}  // namespace

LossEval loss_eval(LossKind kind, const Vector& yhat, const Vector& y) {
  if (yhat.size() != y.size())
    throw UsageError("loss_eval: yhat and y length mismatch");
  check_labels(kind, y);
  const Index n = y.size();
  LossEval out;
  out.gradient.resize(n);

  switch (kind) {
    case LossKind::Squared: {
      const Vector r = yhat - y;
      out.value = 0.5 * r.squaredNorm();
      out.gradient = r;
      break;
    }
    case LossKind::Hinge: {
      Scalar total = 0;
      for (Index k = 0; k < n; ++k) {
        const Scalar margin = 1.0 - y(k) * yhat(k);
        total += std::max(margin, 0.0);
        out.gradient(k) = margin > 0 ? -y(k) / n : 0.0;
      }
      out.value = total / n;
      break;
    }
    case LossKind::Bce: {
      Scalar total = 0;
      for (Index k = 0; k < n; ++k) {
        total += -2.0 * yhat(k) * y(k) + softplus2(yhat(k));
        out.gradient(k) = dsoftplus2(yhat(k)) - 2.0 * y(k);
      }
      out.value = total;
      break;
    }
  }
  return out;
}

Vector dual_from_primal(LossKind kind, const Vector& yhat_star,
                        const Vector& y) {
  if (kind == LossKind::Hinge)
    throw UsageError("dual recovery is unsupported for the nonsmooth hinge loss");
  return -loss_eval(kind, yhat_star, y).gradient;
}

DualFeasReport dual_feasibility_check(const Vector& v,
                                      const std::vector<Vector>& directions,
                                      const Matrix& X, Scalar beta,
                                      Scalar tol) {
  DualFeasReport report;
  report.max_violation = -beta;
  for (size_t i = 0; i < directions.size(); ++i) {
    const Scalar corr = std::abs(v.dot((X * directions[i]).cwiseMax(0.0)));
    const Scalar violation = corr - beta;
    report.max_violation = std::max(report.max_violation, violation);
    if (violation > tol) report.violating_indices.push_back(static_cast<Index>(i));
  }
  return report;
}

}  // namespace cvxnn
