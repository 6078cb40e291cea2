#include "cvxnn/types.hpp"

#include <cmath>

#include "cvxnn/losses.hpp"

namespace cvxnn {

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::Squared: return "squared";
    case LossKind::Hinge: return "hinge";
    case LossKind::Bce: return "bce";
  }
  return "?";
}

LossKind loss_from_name(const std::string& name) {
  if (name == "squared") return LossKind::Squared;
  if (name == "hinge") return LossKind::Hinge;
  if (name == "bce") return LossKind::Bce;
  throw UsageError("unknown loss: " + name);
}

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1)
    throw UsageError("dataset must have n >= 1 and d >= 1");
  if (y.size() != X.rows())
    throw UsageError("label vector length does not match row count");
  if (!X.allFinite() || !y.allFinite())
    throw UsageError("dataset contains NaN or infinite entries");
  if (has_bias && (X.col(X.cols() - 1).array() != 1.0).any())
    throw UsageError("has_bias set but last column is not all ones");
}

Scalar PerturbationSpec::dual_p() const {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return std::numeric_limits<Scalar>::infinity();
  if (p == 2.0) return 2.0;
  throw UsageError("perturbation norm p must be 1, 2 or inf");
}

void PerturbationSpec::validate() const {
  if (epsilon < 0) throw UsageError("epsilon must be nonnegative");
  (void)dual_p();
}

Scalar lp_norm(const Vector& x, Scalar q) {
  if (std::isinf(q)) return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  if (q == 1.0) return x.cwiseAbs().sum();
  if (q == 2.0) return x.norm();
  throw UsageError("lp_norm supports q in {1, 2, inf}");
}

Vector forward(const NetworkWeights& w, const Matrix& X) {
  if (w.width() == 0) return Vector::Zero(X.rows());
  if (X.cols() != w.dim())
    throw UsageError("forward: input dimension does not match weights");
  return (X * w.hidden).cwiseMax(0.0) * w.output;
}

Scalar forward_one(const NetworkWeights& w, const Vector& x) {
  if (w.width() == 0) return 0.0;
  return ((w.hidden.transpose() * x).cwiseMax(0.0)).dot(w.output);
}

Scalar nonconvex_objective(const NetworkWeights& w, const Dataset& data,
                           LossKind loss, Scalar beta) {
  check_labels(loss, data.y);
  const Vector yhat = forward(w, data.X);
  Scalar reg = 0;
  for (Index j = 0; j < w.width(); ++j)
    reg += w.hidden.col(j).squaredNorm() + w.output(j) * w.output(j);
  return loss_eval(loss, yhat, data.y).value + 0.5 * beta * reg;
}

void check_labels(LossKind kind, const Vector& y) {
  if (kind == LossKind::Hinge) {
    if (((y.array() != 1.0) && (y.array() != -1.0)).any())
      throw UsageError("hinge loss requires labels in {-1, +1}");
  } else if (kind == LossKind::Bce) {
    if (((y.array() != 0.0) && (y.array() != 1.0)).any())
      throw UsageError("BCE loss requires labels in {0, 1}");
  }
}

}  // namespace cvxnn
