#include "hiepar/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace hiepar::taxonomy {

std::vector<std::string> split_path(std::string_view path_string) {
  std::vector<std::string> parts;
  std::string_view rest = path_string;
  while (true) {
    auto pos = rest.find(kLevelSeparator);
    std::string_view part = trim(rest.substr(0, pos));
    parts.emplace_back(part);
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + kLevelSeparator.size());
  }
  return parts;
}

std::string canonical_path(std::string_view path_string) {
  std::string key;
  for (const auto& part : split_path(path_string)) {
    if (!key.empty()) key += kLevelSeparator;
    key += part;
  }
  return key;
}

NodeId Taxonomy::intern(const std::vector<std::string>& parts, std::size_t length) {
  std::string key;
  for (std::size_t i = 0; i < length; ++i) {
    if (i > 0) key += kLevelSeparator;
    key += parts[i];
  }
  if (auto it = node_by_key_.find(key); it != node_by_key_.end()) return it->second;

  Node node;
  node.name = parts[length - 1];
  node.key = key;
  node.depth = length;
  if (length > 1) node.parent = intern(parts, length - 1);
  const auto id = static_cast<NodeId>(nodes_.size());
  if (node.parent) nodes_[*node.parent].children.push_back(id);
  nodes_.push_back(std::move(node));
  node_by_key_.emplace(std::move(key), id);
  height_ = std::max(height_, length);
  return id;
}

Taxonomy Taxonomy::load(const std::vector<std::string>& path_strings) {
  Taxonomy tree;
  for (const auto& raw : path_strings) {
    if (trim(raw).empty()) continue;
    const auto parts = split_path(raw);
    for (const auto& part : parts) {
      if (part.empty()) throw Error("taxonomy: empty level in path '" + raw + "'");
    }
    if (parts.size() > kMaxPathLength) throw Error("taxonomy: path too long: '" + raw + "'");
    if (parts.size() < kMinPathLength) throw Error("taxonomy: path too short: '" + raw + "'");
    if (!tree.nodes_.empty() && tree.nodes_[0].name != parts[0]) {
      throw Error("taxonomy: path '" + raw + "' is not rooted at '" + tree.nodes_[0].name + "'");
    }

    LabelPath path;
    for (std::size_t length = 1; length <= parts.size(); ++length) {
      path.push_back(tree.intern(parts, length));
    }
    const std::string& key = tree.nodes_[path.back()].key;
    if (!tree.label_by_key_.contains(key)) {
      tree.label_by_key_.emplace(key, static_cast<LabelId>(tree.labels_.size()));
      tree.labels_.push_back(std::move(path));
    }
  }
  if (tree.labels_.empty()) throw Error("taxonomy: empty input");
  return tree;
}

Taxonomy Taxonomy::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("taxonomy: path not found: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return load(lines);
}

std::string Taxonomy::label_string(LabelId id) const { return nodes_[label_path(id).back()].key; }

std::optional<LabelId> Taxonomy::find_label(std::string_view path_string) const {
  const auto key = canonical_path(path_string);
  if (auto it = label_by_key_.find(key); it != label_by_key_.end()) return it->second;
  return std::nullopt;
}

LabelId Taxonomy::label_id(std::string_view path_string) const {
  if (auto id = find_label(path_string)) return *id;
  throw Error("taxonomy: unknown label '" + std::string(path_string) + "'");
}

CoarseningStrategy strategy_from_int(int value) {
  switch (value) {
    case 1: return CoarseningStrategy::kTopThree;
    case 2: return CoarseningStrategy::kDropLast;
    default: throw Error("coarsen: strategy must be 1 or 2, got " + std::to_string(value));
  }
}

LabelPath coarsen(const LabelPath& path, CoarseningStrategy strategy) {
  if (path.empty()) return {};
  std::size_t keep = path.size();
  switch (strategy) {
    case CoarseningStrategy::kTopThree:
      keep = std::min<std::size_t>(3, path.size());
      break;
    case CoarseningStrategy::kDropLast:
      keep = std::max<std::size_t>(2, path.size() - 1);
      keep = std::min(keep, path.size());
      break;
  }
  return LabelPath(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(keep));
}

bool coarse_match(const LabelSet& paper_labels, const LabelSet& reviewer_labels,
                  const Taxonomy& taxonomy, CoarseningStrategy strategy) {
  // A coarsened path is identified by its terminal node since nodes are
  // keyed by full prefix.
  std::set<NodeId> paper_nodes;
  for (LabelId id : paper_labels) {
    paper_nodes.insert(coarsen(taxonomy.label_path(id), strategy).back());
  }
  for (LabelId id : reviewer_labels) {
    if (paper_nodes.contains(coarsen(taxonomy.label_path(id), strategy).back())) return true;
  }
  return false;
}

}  // namespace hiepar::taxonomy
