#pragma once

#include <vector>

#include "cvxnn/losses.hpp"
#include "cvxnn/types.hpp"

namespace cvxnn {

// Sampled-weight model: hidden weights fixed on the unit sphere, only the
// output layer alpha is trained (l1-regularized).
struct ScpModel {
  Matrix U;      // d x N, unit columns
  Vector alpha;  // length N
  Matrix H;      // n x N, column i = (X u_i)_+

  NetworkWeights as_network() const;
};

Matrix sample_unit_sphere(Index N, Index d, std::uint64_t seed);
Matrix relu_features(const Matrix& X, const Matrix& U);

Vector soft_threshold(const Vector& x, Scalar tau);

struct IstaConfig {
  Index max_iter = 20000;
  Scalar tol = 1e-12;       // stop when the objective decrease drops below
  Index max_backtracks = 60;
};

struct IstaResult {
  Vector alpha;
  std::vector<Scalar> objective_trace;
  bool converged = false;
};

// Minimizes loss(H alpha, y) + beta ||alpha||_1 by proximal gradient with
// backtracking (halving until the majorization inequality holds). Smooth
// losses only (squared, BCE).
IstaResult ista_solve(const Matrix& H, const Vector& y, LossKind loss,
                      Scalar beta, const IstaConfig& config = {});

struct Certificate {
  Scalar z_bar = 0;    // violating fraction among probes
  Index n1 = 0;        // probe count
  Scalar theta_bound = 0;
  Scalar psi = 0, xi = 0;
  bool certified = false;
};

// Z_bar + sqrt(ln(1/xi) / (2 N1)). Note: the square-root form implied by the
// Hoeffding tail exp(-2 N1 t^2), not the misprinted bound without the root.
Scalar hoeffding_certificate(Scalar z_bar, Index n1, Scalar xi);

struct IterativeScpResult {
  ScpModel model;
  Certificate certificate;
  Index rounds = 0;
  std::vector<Scalar> objective_per_round;
};

// Alternates ISTA solve, dual recovery v = -grad loss, probe sampling and
// violation-set growth until the certificate fires or the weight count
// reaches (n+1)/(psi xi) - 1. Smooth losses only.
IterativeScpResult iterative_sampling_train(const Dataset& data, LossKind loss,
                                            Scalar beta, Index N0, Scalar psi,
                                            Scalar xi, std::uint64_t seed,
                                            Index max_rounds = 50,
                                            const IstaConfig& ista = {});

}  // namespace cvxnn
