#include "cvxnn/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "cvxnn/rng.hpp"

namespace cvxnn {

namespace {

struct BitsHash {
  size_t operator()(const std::vector<std::uint64_t>& b) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto w : b) {
      h ^= w;
      h *= 0x100000001b3ULL;
    }
    return static_cast<size_t>(h);
  }
};

using MaskSet = std::unordered_set<std::vector<std::uint64_t>, BitsHash>;

Matrix gated_F(const Matrix& X, const ActivationPattern& p) {
  Matrix F = X;
  for (Index k = 0; k < X.rows(); ++k)
    if (!p.bit(k)) F.row(k).setZero();
  return F;
}

Matrix gated_G(const Matrix& X, const ActivationPattern& p) {
  Matrix G = X;
  for (Index k = 0; k < X.rows(); ++k)
    if (!p.bit(k)) G.row(k) = -X.row(k);
  return G;
}

}  // namespace

std::string ActivationPattern::to_string(Index n) const {
  std::string s(n, '0');
  for (Index k = 0; k < n; ++k)
    if (bit(k)) s[k] = '1';
  return s;
}

ActivationPattern mask_from_direction(const Matrix& X, const Vector& a) {
  const Index n = X.rows();
  ActivationPattern p;
  p.bits.assign((n + 63) / 64, 0);
  const Vector z = X * a;
  for (Index k = 0; k < n; ++k)
    if (z(k) >= 0.0) p.bits[k >> 6] |= 1ULL << (k & 63);
  p.witness = a;
  return p;
}

PatternSet make_pattern_set(const Matrix& X,
                            std::vector<ActivationPattern> patterns) {
  PatternSet ps;
  ps.source_X = X;
  MaskSet seen;
  for (auto& p : patterns) {
    if (!seen.insert(p.bits).second)
      throw UsageError("duplicate activation mask in pattern set");
    ps.F.push_back(gated_F(X, p));
    ps.G.push_back(gated_G(X, p));
    ps.patterns.push_back(std::move(p));
  }
  return ps;
}

PatternSet sample_patterns(const Dataset& data, Index P_s, std::uint64_t seed,
                           std::int64_t budget, bool allow_partial) {
  if (P_s < 1) throw UsageError("P_s must be at least 1");
  if (budget < 0) budget = 2048 * static_cast<std::int64_t>(P_s);
  CounterRng rng(CounterRng::derive_seed(seed, 0x9a77));

  std::vector<ActivationPattern> found;
  MaskSet seen;
  for (std::int64_t t = 0; t < budget && static_cast<Index>(found.size()) < P_s;
       ++t) {
    const Vector a = rng.gaussian_vector(data.d());
    ActivationPattern p = mask_from_direction(data.X, a);
    if (seen.insert(p.bits).second) found.push_back(std::move(p));
  }
  if (static_cast<Index>(found.size()) < P_s && !allow_partial)
    throw NumericalError("pattern sampling budget exhausted: found " +
                         std::to_string(found.size()) + " of " +
                         std::to_string(P_s) + " distinct masks");
  return make_pattern_set(data.X, std::move(found));
}

PatternSet sample_adversarial_patterns(const Dataset& data,
                                       const PerturbationSpec& spec, Index P_a,
                                       Index S, Index P_s, std::uint64_t seed,
                                       bool allow_partial) {
  if (P_a < 1 || S < 1) throw UsageError("P_a and S must be at least 1");
  if (P_s > P_a * S) throw UsageError("P_s exceeds the draw budget P_a * S");
  spec.validate();
  CounterRng rng(CounterRng::derive_seed(seed, 0xadf));

  std::vector<ActivationPattern> found;
  MaskSet seen;
  auto push = [&](ActivationPattern p) {
    if (static_cast<Index>(found.size()) < P_s && seen.insert(p.bits).second)
      found.push_back(std::move(p));
  };
  for (Index h = 0; h < P_a && static_cast<Index>(found.size()) < P_s; ++h) {
    const Vector a = rng.gaussian_vector(data.d());
    push(mask_from_direction(data.X, a));
    for (Index j = 1; j < S && static_cast<Index>(found.size()) < P_s; ++j) {
      Matrix Xbar = data.X;
      for (Index r = 0; r < Xbar.rows(); ++r)
        for (Index c = 0; c < Xbar.cols(); ++c)
          Xbar(r, c) += spec.epsilon * sgn(rng.gaussian());
      ActivationPattern p = mask_from_direction(Xbar, a);
      // Masks realized on the perturbed matrix may lack a clean-X witness.
      p.witness.reset();
      push(std::move(p));
    }
  }
  if (static_cast<Index>(found.size()) < P_s && !allow_partial)
    throw NumericalError("adversarial pattern budget exhausted: found " +
                         std::to_string(found.size()) + " of " +
                         std::to_string(P_s) + " distinct masks");
  return make_pattern_set(data.X, std::move(found));
}

PatternSet enumerate_patterns_2d(const Dataset& data) {
  if (data.d() != 2) throw UsageError("enumerate_patterns_2d requires d = 2");
  const Matrix& X = data.X;
  const Index n = X.rows();
  for (Index k = 0; k < n; ++k)
    if (X.row(k).norm() == 0.0)
      throw UsageError("zero row " + std::to_string(k) +
                       ": hyperplane undefined");

  // Candidate directions: both unit normals of every row hyperplane (where a
  // tie x_k^T u = 0 occurs exactly in floating point) plus a midpoint of each
  // angular arc between consecutive boundaries.
  std::vector<Vector> candidates;
  std::vector<double> angles;
  for (Index k = 0; k < n; ++k) {
    Vector perp(2);
    perp << -X(k, 1), X(k, 0);
    candidates.push_back(perp);
    candidates.push_back(-perp);
    angles.push_back(std::atan2(perp(1), perp(0)));
    angles.push_back(std::atan2(-perp(1), -perp(0)));
  }
  std::sort(angles.begin(), angles.end());
  const double two_pi = 6.283185307179586476925286766559;
  for (size_t i = 0; i < angles.size(); ++i) {
    const double a0 = angles[i];
    const double a1 =
        i + 1 < angles.size() ? angles[i + 1] : angles.front() + two_pi;
    const double mid = 0.5 * (a0 + a1);
    Vector u(2);
    u << std::cos(mid), std::sin(mid);
    candidates.push_back(u);
  }

  std::vector<ActivationPattern> found;
  MaskSet seen;
  for (const auto& u : candidates) {
    ActivationPattern p = mask_from_direction(X, u);
    if (seen.insert(p.bits).second) found.push_back(std::move(p));
  }
  return make_pattern_set(X, std::move(found));
}

std::int64_t pattern_count_upper_bound(Index n, Index r) {
  if (n < 2 || r < 1) throw UsageError("need n >= 2 and r >= 1");
  const double second =
      std::ceil(2.0 * r * std::pow(std::exp(1.0) * (n - 1) / r, double(r)));
  if (n < 63) {
    const double first = std::ldexp(1.0, static_cast<int>(n));
    return static_cast<std::int64_t>(std::min(first, second));
  }
  return static_cast<std::int64_t>(second);
}

std::int64_t sample_size_bound(Index n, Scalar psi, Scalar xi) {
  if (psi <= 0 || psi > 1 || xi <= 0 || xi > 1)
    throw UsageError("psi and xi must lie in (0, 1]");
  const double a = (n + 1) / (psi * xi) - 1.0;
  const double b = (2.0 / xi) * (n + 1 - std::log(psi));
  return static_cast<std::int64_t>(std::ceil(std::min(a, b)));
}

}  // namespace cvxnn
