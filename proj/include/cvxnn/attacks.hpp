#pragma once

#include <map>
#include <string>
#include <vector>

#include "cvxnn/types.hpp"

namespace cvxnn {

enum class AttackKind { Fgsm, Pgd, Exact };

struct AttackConfig {
  AttackKind kind = AttackKind::Pgd;
  Scalar epsilon = 0.1;
  Index steps = 40;        // PGD default
  Scalar gamma_p = -1.0;   // < 0 means epsilon / 30
  // Coordinates >= frozen_from are never perturbed (bias column); < 0 = none.
  Index frozen_from = -1;

  Scalar step_size() const { return gamma_p < 0 ? epsilon / 30.0 : gamma_p; }
};

std::string attack_name(AttackKind kind);
AttackKind attack_from_name(const std::string& name);

// d loss(yhat(x), y) / dx through the active ReLU set {j : x^T u_j >= 0}.
// Hinge uses the leaky-hinge gradient (zeta = 1e-3) so the flat region still
// yields a direction.
Vector input_gradient(const NetworkWeights& w, const Vector& x, Scalar y,
                      LossKind loss);

Vector fgsm(const NetworkWeights& w, const Vector& x, Scalar y, LossKind loss,
            Scalar epsilon, Index frozen_from = -1);

Vector pgd(const NetworkWeights& w, const Vector& x, Scalar y, LossKind loss,
           const AttackConfig& config);

// Per-sample loss of the network at a single point.
Scalar pointwise_loss(const NetworkWeights& w, const Vector& x, Scalar y,
                      LossKind loss);

// Decision rule: hinge/squared predict sgn(yhat) with sgn(0) -> +1; BCE
// predicts class 1 iff yhat >= 0.
bool classify_correct(LossKind loss, Scalar yhat, Scalar y);

struct Metrics {
  Scalar clean_acc = 0;
  Scalar clean_loss = 0;
  std::map<std::string, Scalar> attack_acc;
  std::map<std::string, Scalar> attack_loss;
};

Metrics evaluate(const NetworkWeights& w, const Dataset& data, LossKind loss,
                 const std::vector<AttackConfig>& attacks);

struct SgdConfig {
  Index epochs = 200;
  Index batch = 32;
  Scalar lr = 1e-2;
};

// Mini-batch SGD baseline on the nonconvex objective, He-style init.
NetworkWeights sgd_baseline_train(const Dataset& data, LossKind loss,
                                  Index width, Scalar beta,
                                  const SgdConfig& config, std::uint64_t seed);

}  // namespace cvxnn
