#pragma once

#include <string>

#include <json.hpp>

#include "cvxnn/admm.hpp"
#include "cvxnn/adversarial.hpp"
#include "cvxnn/attacks.hpp"
#include "cvxnn/patterns.hpp"
#include "cvxnn/types.hpp"

namespace cvxnn {

inline constexpr const char* kLibraryVersion = "0.1.0";

nlohmann::json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const nlohmann::json& j);

nlohmann::json pattern_set_to_json(const PatternSet& ps);
PatternSet pattern_set_from_json(const nlohmann::json& j, const Matrix& X);

nlohmann::json weights_to_json(const NetworkWeights& w);
NetworkWeights weights_from_json(const nlohmann::json& j);

// config: arbitrary record the caller fills (embedded verbatim in reports).
// with_timings controls the wall_ms block; reports are byte-identical across
// runs only when timings are omitted.
nlohmann::json solve_report_to_json(const SolveReport& report,
                                    const nlohmann::json& config,
                                    bool with_timings);
nlohmann::json robust_report_to_json(const RobustSolveReport& report,
                                     const PerturbationSpec& spec,
                                     const nlohmann::json& config,
                                     bool with_timings);
nlohmann::json metrics_to_json(const Metrics& metrics, const std::string& method,
                               const nlohmann::json& config);

void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace cvxnn
