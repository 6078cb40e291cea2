#pragma once

#include <string>

#include "cvxnn/types.hpp"

namespace cvxnn {

// Reads a comma-separated numeric file. A non-numeric first row is treated as
// a header and skipped. label_column < 0 counts from the end (-1 = last).
Dataset load_csv(const std::string& path, int label_column = -1,
                 bool add_bias = false);

void save_csv(const Dataset& data, const std::string& path);

// Two Gaussian clusters in the unit box with +1/-1 labels, truncated to a
// fixed radius around each center so the classes stay separated even under
// small box perturbations. Deterministic under seed.
Dataset gen_2d_dataset(Index n, std::uint64_t seed);

Dataset with_bias_column(const Dataset& data);

}  // namespace cvxnn
