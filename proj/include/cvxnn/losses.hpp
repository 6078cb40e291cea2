#pragma once

#include <vector>

#include "cvxnn/types.hpp"

namespace cvxnn {

struct LossEval {
  Scalar value;
  Vector gradient;  // d/d yhat; a subgradient for hinge
};

// Squared: 1/2 ||yhat - y||^2.
// Hinge:   1/n sum (1 - y_k yhat_k)_+, labels +-1; subgradient 0 on the flat
//          part and at the margin tie.
// Bce:     -2 yhat^T y + sum log(e^{2 yhat} + 1), labels {0,1}, evaluated in
//          the overflow-safe form 2 yhat_+ + log1p(e^{-2|yhat|}).
LossEval loss_eval(LossKind kind, const Vector& yhat, const Vector& y);

// Dual vector v = -grad loss(yhat*, y); squared loss gives y - yhat* exactly.
// Hinge is unsupported (nonsmooth).
Vector dual_from_primal(LossKind kind, const Vector& yhat_star, const Vector& y);

struct DualFeasReport {
  Scalar max_violation;  // max_i |v^T (X u_i)_+| - beta
  std::vector<Index> violating_indices;  // where violation > tol
};

DualFeasReport dual_feasibility_check(const Vector& v,
                                      const std::vector<Vector>& directions,
                                      const Matrix& X, Scalar beta, Scalar tol);

}  // namespace cvxnn
