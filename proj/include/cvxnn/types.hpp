#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace cvxnn {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class LossKind { Squared, Hinge, Bce };

std::string loss_name(LossKind kind);
LossKind loss_from_name(const std::string& name);

// Thrown when inputs violate a documented precondition (bad flags, shapes,
// label conventions). Maps to CLI exit code 1.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a solver hits NaN/Inf or an iteration fails numerically.
// Maps to CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Matrix X;            // n x d, rows are data points
  Vector y;            // length n
  bool has_bias = false;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  void validate() const;
};

// Row-wise perturbation ball of radius epsilon in the lp norm.
struct PerturbationSpec {
  Scalar epsilon = 0.0;
  Scalar p = std::numeric_limits<Scalar>::infinity();  // one of {1, 2, inf}

  // Index p* with 1/p + 1/p* = 1 (inf <-> 1).
  Scalar dual_p() const;
  void validate() const;
};

// ||x||_q for q in {1, 2, inf}.
Scalar lp_norm(const Vector& x, Scalar q);

struct NetworkWeights {
  Matrix hidden;  // d x m, column j is u_j
  Vector output;  // length m, alpha_j

  Index width() const { return output.size(); }
  Index dim() const { return hidden.rows(); }
};

Vector forward(const NetworkWeights& w, const Matrix& X);
Scalar forward_one(const NetworkWeights& w, const Vector& x);

Scalar nonconvex_objective(const NetworkWeights& w, const Dataset& data,
                           LossKind loss, Scalar beta);

void check_labels(LossKind kind, const Vector& y);

inline Scalar sgn(Scalar v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace cvxnn
