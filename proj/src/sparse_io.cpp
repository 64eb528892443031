#include <cmath>
#include <fstream>
#include <limits>

#include "hiepar/mlc.hpp"

namespace hiepar::mlc {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw Error(path.string() + " line " + std::to_string(line) + ": " + what);
}

std::pair<Index, double> parse_pair(std::string_view token, const std::filesystem::path& path,
                                    std::size_t line) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos) fail(path, line, "expected idx:value, got '" + std::string(token) + "'");
  try {
    const auto index = parse_integer(token.substr(0, colon));
    if (index < 0) fail(path, line, "negative index");
    return {static_cast<Index>(index), parse_double(token.substr(colon + 1))};
  } catch (const Error& e) {
    fail(path, line, e.what());
  }
}

}  // namespace

void export_sparse_dataset(const FeatureMatrix& features, const std::vector<LabelSet>& label_sets,
                           Index label_count, const std::filesystem::path& path) {
  if (static_cast<std::size_t>(features.rows()) != label_sets.size()) {
    throw Error("export: feature rows and label sets differ in count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("export: cannot write " + path.string());
  out << features.rows() << ' ' << features.dim() << ' ' << label_count << '\n';
  for (Index r = 0; r < features.rows(); ++r) {
    std::string line;
    for (LabelId id : label_sets[static_cast<std::size_t>(r)]) {
      if (id >= static_cast<LabelId>(label_count)) throw Error("export: label id outside label space");
      if (!line.empty()) line += ',';
      line += std::to_string(id);
    }
    for (Index c = 0; c < features.dim(); ++c) {
      const double v = features.values(r, c);
      if (v == 0.0 && !std::signbit(v)) continue;
      if (!std::isfinite(v)) throw Error("export: non-finite feature value");
      if (!line.empty()) line += ' ';
      line += std::to_string(c);
      line += ':';
      line += format_double(v);
    }
    out << line << '\n';
  }
  if (!out) throw Error("export: write failed for " + path.string());
}

SparseDataset import_sparse_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("import: path not found: " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "missing header");
  const auto header = split_whitespace(line);
  if (header.size() != 3) fail(path, 1, "header must be 'N D L'");
  long long n = 0, d = 0, l = 0;
  try {
    n = parse_integer(header[0]);
    d = parse_integer(header[1]);
    l = parse_integer(header[2]);
  } catch (const Error& e) {
    fail(path, 1, e.what());
  }
  if (n < 0 || d < 0 || l < 0) fail(path, 1, "negative header value");

  SparseDataset data;
  data.label_count = static_cast<Index>(l);
  data.features.values = Mat::Zero(n, d);
  for (long long r = 0; r < n; ++r) {
    const std::size_t line_number = static_cast<std::size_t>(r) + 2;
    if (!std::getline(in, line)) fail(path, line_number, "missing row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    data.features.owner_ids.push_back(std::to_string(r));
    auto tokens = split_whitespace(line);
    std::size_t first_feature = 0;
    std::vector<LabelId> labels;
    if (!tokens.empty() && tokens[0].find(':') == std::string_view::npos) {
      first_feature = 1;
      std::string_view field = tokens[0];
      while (!field.empty()) {
        const auto comma = field.find(',');
        const auto item = field.substr(0, comma);
        long long id = 0;
        try {
          id = parse_integer(item);
        } catch (const Error& e) {
          fail(path, line_number, e.what());
        }
        if (id < 0 || id >= l) fail(path, line_number, "label id " + std::string(item) + " out of range");
        labels.push_back(static_cast<LabelId>(id));
        if (comma == std::string_view::npos) break;
        field.remove_prefix(comma + 1);
        if (field.empty()) fail(path, line_number, "trailing comma in label field");
      }
    }
    data.label_sets.emplace_back(std::move(labels));
    Index previous = -1;
    for (std::size_t t = first_feature; t < tokens.size(); ++t) {
      const auto [index, value] = parse_pair(tokens[t], path, line_number);
      if (index >= d) fail(path, line_number, "feature index " + std::to_string(index) + " out of range");
      if (index <= previous) fail(path, line_number, "feature indices must be strictly increasing");
      previous = index;
      data.features.values(r, index) = value;
    }
  }
  return data;
}

void export_scores(const std::vector<Vec>& rows, std::size_t keep, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("scores: cannot write " + path.string());
  for (const auto& scores : rows) {
    const std::size_t k = keep == 0 ? static_cast<std::size_t>(scores.size())
                                    : std::min(keep, static_cast<std::size_t>(scores.size()));
    std::string line;
    for (LabelId id : top_k(scores, k)) {
      if (!line.empty()) line += ' ';
      line += std::to_string(id);
      line += ':';
      line += format_double(scores[id]);
    }
    out << line << '\n';
  }
  if (!out) throw Error("scores: write failed for " + path.string());
}

std::vector<Vec> import_scores(const std::filesystem::path& path, Index label_count) {
  std::ifstream in(path);
  if (!in) throw Error("scores: path not found: " + path.string());
  std::vector<Vec> rows;
  std::string line;
  std::size_t line_number = 0;
  std::optional<long long> expected_rows;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = split_whitespace(line);
    if (line_number == 1 && tokens.size() == 2 && tokens[0].find(':') == std::string_view::npos &&
        tokens[1].find(':') == std::string_view::npos) {
      try {
        expected_rows = parse_integer(tokens[0]);
        if (parse_integer(tokens[1]) != label_count) fail(path, 1, "label count in header differs");
      } catch (const Error& e) {
        fail(path, 1, e.what());
      }
      continue;
    }
    Vec scores = Vec::Constant(label_count, std::numeric_limits<double>::lowest());
    for (auto token : tokens) {
      const auto [index, value] = parse_pair(token, path, line_number);
      if (index >= label_count) fail(path, line_number, "label index " + std::to_string(index) + " out of range");
      scores[index] = value;
    }
    rows.push_back(std::move(scores));
  }
  if (expected_rows && *expected_rows != static_cast<long long>(rows.size())) {
    throw Error(path.string() + ": header announces " + std::to_string(*expected_rows) + " rows, found " +
                std::to_string(rows.size()));
  }
  return rows;
}

}  // namespace hiepar::mlc
