#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiepar/common.hpp"

namespace hiepar::taxonomy {

using NodeId = std::uint32_t;

// Root-to-node list of tree nodes.
using LabelPath = std::vector<NodeId>;

inline constexpr std::size_t kMaxPathLength = 7;
inline constexpr std::size_t kMinPathLength = 3;
inline constexpr std::string_view kLevelSeparator = " > ";

struct Node {
  std::string name;
  std::string key;  // full prefix, e.g. "CS > A > B"
  std::optional<NodeId> parent;
  std::size_t depth = 0;  // root has depth 1
  std::vector<NodeId> children;
};

// Research-field taxonomy with a registry of label paths. Nodes are keyed
// by their full prefix, so equal display names under different parents
// are distinct nodes.
class Taxonomy {
 public:
  static Taxonomy load(const std::vector<std::string>& path_strings);
  static Taxonomy load_file(const std::filesystem::path& path);

  NodeId root() const { return 0; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t height() const { return height_; }

  std::size_t label_count() const { return labels_.size(); }
  const LabelPath& label_path(LabelId id) const { return labels_.at(id); }
  std::string label_string(LabelId id) const;
  std::optional<LabelId> find_label(std::string_view path_string) const;
  // Throws Error for unregistered paths.
  LabelId label_id(std::string_view path_string) const;

 private:
  NodeId intern(const std::vector<std::string>& parts, std::size_t length);

  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> node_by_key_;
  std::vector<LabelPath> labels_;
  std::map<std::string, LabelId, std::less<>> label_by_key_;
  std::size_t height_ = 0;
};

// Splits "A > B > C" into trimmed level names.
std::vector<std::string> split_path(std::string_view path_string);
// Canonical form used as registry key.
std::string canonical_path(std::string_view path_string);

enum class CoarseningStrategy {
  kTopThree = 1,  // keep root plus the two coarsest categories
  kDropLast = 2,  // remove the finest node, never below two nodes
};

CoarseningStrategy strategy_from_int(int value);

LabelPath coarsen(const LabelPath& path, CoarseningStrategy strategy);

// True iff the coarsened path sets of the two label sets intersect.
bool coarse_match(const LabelSet& paper_labels, const LabelSet& reviewer_labels,
                  const Taxonomy& taxonomy, CoarseningStrategy strategy);

}  // namespace hiepar::taxonomy
