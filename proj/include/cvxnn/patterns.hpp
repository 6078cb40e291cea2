#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvxnn/types.hpp"

namespace cvxnn {

// Diagonal of one ReLU activation matrix D = diag([Xu >= 0]), stored packed.
// Ties x_k^T u = 0 map to bit 1.
struct ActivationPattern {
  std::vector<std::uint64_t> bits;  // packed mask, n bits
  std::optional<Vector> witness;    // u with mask == [Xu >= 0]

  bool bit(Index k) const { return (bits[k >> 6] >> (k & 63)) & 1; }
  std::string to_string(Index n) const;
};

ActivationPattern mask_from_direction(const Matrix& X, const Vector& a);

struct PatternSet {
  std::vector<ActivationPattern> patterns;
  std::vector<Matrix> F;  // F_i = D_i X
  std::vector<Matrix> G;  // G_i = (2 D_i - I) X
  Matrix source_X;

  Index size() const { return static_cast<Index>(patterns.size()); }
  Index n() const { return source_X.rows(); }
  Index d() const { return source_X.cols(); }
};

// Builds a PatternSet (with cached F, G) from explicit patterns; masks must be
// distinct and realized against X.
PatternSet make_pattern_set(const Matrix& X,
                            std::vector<ActivationPattern> patterns);

// Draws standard-normal directions until P_s distinct masks are found or the
// budget (default 2048 * P_s) runs out; the latter throws unless allow_partial.
PatternSet sample_patterns(const Dataset& data, Index P_s, std::uint64_t seed,
                           std::int64_t budget = -1, bool allow_partial = false);

// Like sample_patterns, but each direction a_h is also evaluated against S-1
// vertex-perturbed matrices X + eps * sgn(R). Masks are stored against the
// clean X, which is also what the gated matrices are built from.
PatternSet sample_adversarial_patterns(const Dataset& data,
                                       const PerturbationSpec& spec, Index P_a,
                                       Index S, Index P_s, std::uint64_t seed,
                                       bool allow_partial = false);

// Exact realizable-mask enumeration for d = 2 by sweeping unit directions
// across the sorted hyperplane angles; every pattern carries a witness.
PatternSet enumerate_patterns_2d(const Dataset& data);

// min{2^n, ceil(2r (e(n-1)/r)^r)}.
std::int64_t pattern_count_upper_bound(Index n, Index r);

// ceil(min{(n+1)/(psi*xi) - 1, (2/xi)(n+1 - ln psi)}).
std::int64_t sample_size_bound(Index n, Scalar psi, Scalar xi);

}  // namespace cvxnn
