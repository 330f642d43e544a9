#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace veriscribe {

inline constexpr std::size_t kFeatureCount = 15;
inline constexpr std::size_t kMaxParents = 3;

/// Number of distance codes for a feature with `cardinality` classes:
/// one per unordered class pair, n(n+1)/2.
constexpr int distance_code_count(int cardinality) noexcept {
  return cardinality * (cardinality + 1) / 2;
}

struct FeatureDef {
  int index = 0;  // 1-based, f1..f15
  std::string name;
  std::vector<std::string> class_labels;
  int cardinality = 0;
  std::vector<double> default_marginal;

  bool operator==(const FeatureDef&) const = default;
};

/// Directed edge between zero-based feature positions.
struct Edge {
  int parent = 0;
  int child = 0;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

/// The fifteen categorical features, their class labels and the DAG over them.
///
/// Immutable once constructed; the constructor enforces every invariant and
/// throws ValidationError naming the offending field.
class FeatureSchema {
 public:
  FeatureSchema(std::vector<FeatureDef> features, std::vector<Edge> edges);

  const std::vector<FeatureDef>& features() const noexcept { return features_; }
  const FeatureDef& feature(std::size_t j) const { return features_.at(j); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  int cardinality(std::size_t j) const { return features_.at(j).cardinality; }
  int code_count(std::size_t j) const { return distance_code_count(cardinality(j)); }

  /// Parents of feature j in edge-list order.
  const std::vector<int>& parents(std::size_t j) const { return parents_.at(j); }
  /// Features without parents, ascending.
  std::vector<int> roots() const;
  /// Deterministic topological order (Kahn's algorithm, smallest index first).
  const std::vector<int>& topological_order() const noexcept { return topo_; }

  /// Offset of feature j inside a flattened soft vector; offset(15) is the total class count.
  std::size_t soft_offset(std::size_t j) const { return offsets_.at(j); }
  std::size_t total_classes() const noexcept { return offsets_.back(); }

  /// Position of the feature called `name`, or -1.
  int find(std::string_view name) const;

  bool operator==(const FeatureSchema& other) const {
    return features_ == other.features_ && edges_ == other.edges_;
  }

 private:
  std::vector<FeatureDef> features_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> parents_;
  std::vector<int> topo_;
  std::vector<std::size_t> offsets_;
};

/// The canonical handwriting schema: cardinalities (2,2,2,4,3,3,3,2,2,2,4,3,4,2,2),
/// class marginals of the annotated reference corpus, and the ten default edges.
const FeatureSchema& builtin_schema();

/// Topological order of `edges` over `node_count` nodes; empty if cyclic.
std::vector<int> topological_sort(std::size_t node_count, const std::vector<Edge>& edges);

/// Schema document text (see docs in README, "Schema document").
std::string serialize_schema(const FeatureSchema& schema);
FeatureSchema parse_schema(std::string_view text);
FeatureSchema load_schema(const std::filesystem::path& path);

/// "f7" -> 6. Throws ParseError for anything else.
int parse_feature_token(std::string_view token);
std::string feature_token(int position);

}  // namespace veriscribe
