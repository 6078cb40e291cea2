#include "cvxnn/json_io.hpp"

#include <fstream>

namespace cvxnn {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) M(i, c) = j[i][c].get<Scalar>();
  return M;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[i].get<Scalar>();
  return v;
}

json trace_to_json(const std::vector<Scalar>& t) {
  return json(t);
}

}  // namespace

json dataset_to_json(const Dataset& data) {
  return json{{"n", data.n()},
              {"d", data.d()},
              {"has_bias", data.has_bias},
              {"X", matrix_to_json(data.X)},
              {"y", vector_to_json(data.y)}};
}

Dataset dataset_from_json(const json& j) {
  Dataset data;
  data.X = matrix_from_json(j.at("X"));
  data.y = vector_from_json(j.at("y"));
  data.has_bias = j.at("has_bias").get<bool>();
  if (data.n() != j.at("n").get<Index>() || data.d() != j.at("d").get<Index>())
    throw UsageError("dataset JSON dimensions are inconsistent");
  data.validate();
  return data;
}

json pattern_set_to_json(const PatternSet& ps) {
  json masks = json::array();
  json witnesses = json::array();
  bool all_witnessed = true;
  for (const auto& p : ps.patterns) {
    masks.push_back(p.to_string(ps.n()));
    if (p.witness)
      witnesses.push_back(vector_to_json(*p.witness));
    else
      all_witnessed = false;
  }
  json out{{"n", ps.n()}, {"d", ps.d()}, {"masks", masks}};
  if (all_witnessed) out["witnesses"] = witnesses;
  return out;
}

PatternSet pattern_set_from_json(const json& j, const Matrix& X) {
  if (j.at("n").get<Index>() != X.rows() || j.at("d").get<Index>() != X.cols())
    throw UsageError("pattern JSON does not match the data matrix");
  std::vector<ActivationPattern> patterns;
  const auto& masks = j.at("masks");
  const bool has_w = j.contains("witnesses");
  for (size_t i = 0; i < masks.size(); ++i) {
    const std::string bits = masks[i].get<std::string>();
    ActivationPattern p;
    p.bits.assign((bits.size() + 63) / 64, 0);
    for (size_t k = 0; k < bits.size(); ++k)
      if (bits[k] == '1') p.bits[k >> 6] |= 1ULL << (k & 63);
    if (has_w) p.witness = vector_from_json(j.at("witnesses")[i]);
    patterns.push_back(std::move(p));
  }
  return make_pattern_set(X, std::move(patterns));
}

json weights_to_json(const NetworkWeights& w) {
  json u = json::array();
  for (Index j = 0; j < w.width(); ++j)
    u.push_back(vector_to_json(w.hidden.col(j)));
  return json{{"d", w.dim()}, {"m", w.width()}, {"u", u},
              {"alpha", vector_to_json(w.output)}};
}

NetworkWeights weights_from_json(const json& j) {
  NetworkWeights w;
  const Index d = j.at("d").get<Index>();
  const Index m = j.at("m").get<Index>();
  w.hidden.resize(d, m);
  for (Index c = 0; c < m; ++c)
    w.hidden.col(c) = vector_from_json(j.at("u")[c]);
  w.output = vector_from_json(j.at("alpha"));
  if (w.output.size() != m)
    throw UsageError("weights JSON width mismatch");
  return w;
}

json solve_report_to_json(const SolveReport& report, const json& config,
                          bool with_timings) {
  json out{{"version", kLibraryVersion},
           {"config", config},
           {"objective_trace", trace_to_json(report.objective_trace)},
           {"recovered_loss_trace", trace_to_json(report.recovered_loss_trace)},
           {"residuals",
            {{"primal", trace_to_json(report.primal_residual)},
             {"dual", trace_to_json(report.dual_residual)}}},
           {"iterations", report.iterations},
           {"converged", report.converged},
           {"weights", weights_to_json(report.weights)}};
  if (with_timings)
    out["wall_ms"] = {{"factorize", report.factorize_ms},
                      {"iterate", report.iterate_ms},
                      {"recover", report.recover_ms}};
  return out;
}

json robust_report_to_json(const RobustSolveReport& report,
                           const PerturbationSpec& spec, const json& config,
                           bool with_timings) {
  json out{{"version", kLibraryVersion},
           {"config", config},
           {"objective_trace", trace_to_json(report.objective_trace)},
           {"feasibility_trace", trace_to_json(report.feasibility_trace)},
           {"epsilon", spec.epsilon},
           {"p", std::isinf(spec.p) ? json("inf") : json(spec.p)},
           {"feasibility_violation", report.feasibility_violation},
           {"worst_case_loss", report.worst_case_loss},
           {"objective", report.final_objective},
           {"converged", report.converged},
           {"weights", weights_to_json(report.weights)}};
  if (with_timings) out["wall_ms"] = report.wall_ms;
  return out;
}

json metrics_to_json(const Metrics& metrics, const std::string& method,
                     const json& config) {
  json out{{"version", kLibraryVersion},
           {"config", config},
           {"method", method},
           {"clean", metrics.clean_acc},
           {"objective", metrics.clean_loss}};
  for (const auto& [name, acc] : metrics.attack_acc) out[name] = acc;
  json losses = json::object();
  for (const auto& [name, l] : metrics.attack_loss) losses[name] = l;
  out["attack_loss"] = losses;
  return out;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("JSON parse error in " + path + ": " + e.what());
  }
}

}  // namespace cvxnn
