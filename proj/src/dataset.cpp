#include "cvxnn/dataset.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "cvxnn/rng.hpp"

namespace cvxnn {

namespace {

bool parse_number(const std::string& cell, Scalar& out) {
  const char* s = cell.c_str();
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s, &end);
  if (end == s || errno == ERANGE) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column, bool add_bias) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open file: " + path);

  std::vector<std::vector<Scalar>> rows;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    std::vector<Scalar> row(cells.size());
    bool ok = true;
    size_t bad_col = 0;
    for (size_t c = 0; c < cells.size(); ++c) {
      if (!parse_number(cells[c], row[c])) {
        ok = false;
        bad_col = c;
        break;
      }
    }
    if (!ok) {
      if (first) { first = false; continue; }  // header row
      throw UsageError("parse error at row " + std::to_string(lineno) +
                       ", column " + std::to_string(bad_col + 1) + " of " + path);
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw UsageError("ragged row " + std::to_string(lineno) + " in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError("empty file: " + path);

  const Index n = static_cast<Index>(rows.size());
  const Index cols = static_cast<Index>(rows.front().size());
  if (cols < 2) throw UsageError("need at least one feature and one label column");
  Index label = label_column < 0 ? cols + label_column : label_column;
  if (label < 0 || label >= cols)
    throw UsageError("label column out of range");

  Dataset data;
  data.X.resize(n, cols - 1 + (add_bias ? 1 : 0));
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index cj = 0;
    for (Index j = 0; j < cols; ++j) {
      if (j == label)
        data.y(i) = rows[i][j];
      else
        data.X(i, cj++) = rows[i][j];
    }
    if (add_bias) data.X(i, cj) = 1.0;
  }
  data.has_bias = add_bias;
  data.validate();
  return data;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write file: " + path);
  out.precision(17);
  const Index dcols = data.d() - (data.has_bias ? 1 : 0);
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < dcols; ++j) out << data.X(i, j) << ',';
    out << data.y(i) << '\n';
  }
}

Dataset gen_2d_dataset(Index n, std::uint64_t seed) {
  if (n < 2) throw UsageError("gen_2d_dataset needs n >= 2");
  CounterRng rng(CounterRng::derive_seed(seed, 0x2d));
  const double cx[2] = {0.25, 0.75};
  const double cy[2] = {0.35, 0.65};
  const double sigma = 0.10, radius = 0.15;

  Dataset data;
  data.X.resize(n, 2);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    double px, py;
    do {
      px = sigma * rng.gaussian();
      py = sigma * rng.gaussian();
    } while (px * px + py * py > radius * radius);
    data.X(i, 0) = cx[c] + px;
    data.X(i, 1) = cy[c] + py;
    data.y(i) = c == 0 ? 1.0 : -1.0;
  }
  return data;
}

Dataset with_bias_column(const Dataset& data) {
  if (data.has_bias) return data;
  Dataset out;
  out.X.resize(data.n(), data.d() + 1);
  out.X.leftCols(data.d()) = data.X;
  out.X.col(data.d()).setOnes();
  out.y = data.y;
  out.has_bias = true;
  return out;
}

}  // namespace cvxnn
