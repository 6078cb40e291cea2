#pragma once

// Shared test utilities: independent oracles and generators the unit tests
// check the library against.

#include <functional>
#include <set>
#include <vector>

#include "cvxnn/patterns.hpp"
#include "cvxnn/rng.hpp"
#include "cvxnn/types.hpp"

namespace testutil {

using cvxnn::Index;
using cvxnn::Matrix;
using cvxnn::Scalar;
using cvxnn::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  cvxnn::CounterRng rng(seed);
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = rng.gaussian();
  return M;
}

inline Vector random_vector(Index n, std::uint64_t seed) {
  cvxnn::CounterRng rng(seed);
  return rng.gaussian_vector(n);
}

// Central finite-difference gradient of a scalar function.
inline Vector fd_gradient(const std::function<Scalar(const Vector&)>& f,
                          const Vector& x, Scalar h = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Cyclic coordinate descent for 1/2 ||H a - y||^2 + beta ||a||_1.
// Deliberately a different algorithm from the library's proximal gradient.
inline Vector lasso_cd(const Matrix& H, const Vector& y, Scalar beta,
                       Index sweeps = 20000, Scalar tol = 1e-13) {
  const Index N = H.cols();
  Vector a = Vector::Zero(N);
  Vector r = y;  // residual y - H a
  Vector hh(N);
  for (Index j = 0; j < N; ++j) hh(j) = H.col(j).squaredNorm();
  for (Index sweep = 0; sweep < sweeps; ++sweep) {
    Scalar max_move = 0;
    for (Index j = 0; j < N; ++j) {
      if (hh(j) == 0) continue;
      const Scalar rho = H.col(j).dot(r) + hh(j) * a(j);
      const Scalar anew =
          cvxnn::sgn(rho) * std::max(std::abs(rho) - beta, 0.0) / hh(j);
      if (anew != a(j)) {
        r -= H.col(j) * (anew - a(j));
        max_move = std::max(max_move, std::abs(anew - a(j)));
        a(j) = anew;
      }
    }
    if (max_move < tol) break;
  }
  return a;
}

// All realizable activation masks of X found by dense direction sampling
// (oracle for small instances only).
inline std::set<std::string> masks_by_sampling(const Matrix& X, Index trials,
                                               std::uint64_t seed) {
  cvxnn::CounterRng rng(seed);
  std::set<std::string> masks;
  const Index n = X.rows();
  for (Index t = 0; t < trials; ++t) {
    const Vector a = rng.gaussian_vector(X.cols());
    std::string m(n, '0');
    for (Index k = 0; k < n; ++k)
      if (X.row(k).dot(a) >= 0) m[k] = '1';
    masks.insert(m);
  }
  return masks;
}

// Random feasible block for pattern i: a nonnegative combination of the
// witness direction stays inside the cone near its axis; rejection-check and
// shrink the perturbation until (2D - I) X v >= 0 holds exactly.
inline Vector random_feasible_block(const Matrix& G_i, const Vector& witness,
                                    std::uint64_t seed) {
  cvxnn::CounterRng rng(seed);
  const Scalar scale = 0.3 + 2.0 * rng.uniform();
  Vector base = scale * witness;
  Vector pert = 0.2 * rng.gaussian_vector(witness.size());
  for (int shrink = 0; shrink < 60; ++shrink) {
    Vector v = base + pert;
    if (((G_i * v).array() >= 0.0).all()) return v;
    pert *= 0.5;
  }
  return base;  // witness axis itself is always feasible
}

}  // namespace testutil
