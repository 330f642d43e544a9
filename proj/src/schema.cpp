#include "veriscribe/schema.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>

#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"

namespace veriscribe {

namespace {

constexpr std::array<int, kFeatureCount> kCardinalities = {2, 2, 2, 4, 3, 3, 3, 2, 2, 2, 4, 3, 4, 2, 2};
constexpr std::string_view kSchemaHeader = "veriscribe-schema 1";

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

FeatureDef make_feature(int index, std::string name, std::vector<std::string> labels,
                        std::vector<double> percents) {
  // Percentages are normalised by their row total, kept to 12 significant digits.
  const double total = std::accumulate(percents.begin(), percents.end(), 0.0);
  std::vector<double> marginal;
  marginal.reserve(percents.size());
  for (double p : percents) marginal.push_back(round_significant(p / total, 12));
  FeatureDef def;
  def.index = index;
  def.name = std::move(name);
  def.cardinality = static_cast<int>(labels.size());
  def.class_labels = std::move(labels);
  def.default_marginal = std::move(marginal);
  return def;
}

void validate(const std::vector<FeatureDef>& features, const std::vector<Edge>& edges) {
  if (features.size() != kFeatureCount) {
    throw ValidationError("features: expected " + std::to_string(kFeatureCount) + " features, got " +
                          std::to_string(features.size()));
  }
  std::set<std::string> names;
  for (std::size_t j = 0; j < features.size(); ++j) {
    const FeatureDef& f = features[j];
    const std::string where = "feature f" + std::to_string(j + 1);
    if (f.index != static_cast<int>(j) + 1) {
      throw ValidationError(where + ": index " + std::to_string(f.index) + " out of sequence");
    }
    if (!is_identifier(f.name)) throw ValidationError(where + ": name '" + f.name + "' is not an identifier");
    if (!names.insert(f.name).second) throw ValidationError(where + ": duplicate name '" + f.name + "'");
    if (f.cardinality != kCardinalities[j]) {
      throw ValidationError(where + ": cardinality " + std::to_string(f.cardinality) + ", expected " +
                            std::to_string(kCardinalities[j]));
    }
    if (static_cast<int>(f.class_labels.size()) != f.cardinality) {
      throw ValidationError(where + ": labels count does not match cardinality");
    }
    for (const auto& label : f.class_labels) {
      if (label.empty()) throw ValidationError(where + ": empty class label");
    }
    if (static_cast<int>(f.default_marginal.size()) != f.cardinality) {
      throw ValidationError(where + ": marginal length does not match cardinality");
    }
    double sum = 0.0;
    for (double p : f.default_marginal) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(where + ": marginal entry outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError(where + ": marginal does not sum to 1");
  }

  std::set<Edge> seen;
  std::array<int, kFeatureCount> parent_count{};
  for (const Edge& e : edges) {
    const std::string where = "edges: " + feature_token(e.parent) + "->" + feature_token(e.child);
    if (e.parent < 0 || e.child < 0 || e.parent >= static_cast<int>(kFeatureCount) ||
        e.child >= static_cast<int>(kFeatureCount)) {
      throw ValidationError("edges: endpoint out of range");
    }
    if (e.parent == e.child) throw ValidationError(where + " is a self-loop");
    if (!seen.insert(e).second) throw ValidationError(where + " is duplicated");
    if (++parent_count[e.child] > static_cast<int>(kMaxParents)) {
      throw ValidationError(where + ": more than 3 parents");
    }
  }
  if (topological_sort(kFeatureCount, edges).empty()) throw ValidationError("edges: graph contains a cycle");

  // Distance-code space: sum of cardinalities 40, pair-code product 3^8 * 6^4 * 10^3.
  int total = 0;
  double code_space = 1.0;
  for (const FeatureDef& f : features) {
    total += f.cardinality;
    code_space *= distance_code_count(f.cardinality);
  }
  if (total != 40 || code_space != std::pow(3.0, 8) * std::pow(6.0, 4) * std::pow(10.0, 3)) {
    throw ValidationError("features: cardinalities do not span the expected distance-code space");
  }
}

}  // namespace

std::vector<int> topological_sort(std::size_t node_count, const std::vector<Edge>& edges) {
  std::vector<int> indegree(node_count, 0);
  std::vector<std::vector<int>> children(node_count);
  for (const Edge& e : edges) {
    children[static_cast<std::size_t>(e.parent)].push_back(e.child);
    ++indegree[static_cast<std::size_t>(e.child)];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (std::size_t v = 0; v < node_count; ++v) {
    if (indegree[v] == 0) ready.push(static_cast<int>(v));
  }
  std::vector<int> order;
  order.reserve(node_count);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int c : children[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }
  }
  if (order.size() != node_count) return {};
  return order;
}

FeatureSchema::FeatureSchema(std::vector<FeatureDef> features, std::vector<Edge> edges)
    : features_(std::move(features)), edges_(std::move(edges)) {
  validate(features_, edges_);
  parents_.assign(features_.size(), {});
  for (const Edge& e : edges_) parents_[static_cast<std::size_t>(e.child)].push_back(e.parent);
  topo_ = topological_sort(features_.size(), edges_);
  offsets_.assign(features_.size() + 1, 0);
  for (std::size_t j = 0; j < features_.size(); ++j) {
    offsets_[j + 1] = offsets_[j] + static_cast<std::size_t>(features_[j].cardinality);
  }
}

std::vector<int> FeatureSchema::roots() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < parents_.size(); ++j) {
    if (parents_[j].empty()) out.push_back(static_cast<int>(j));
  }
  return out;
}

int FeatureSchema::find(std::string_view name) const {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].name == name) return static_cast<int>(j);
  }
  return -1;
}

const FeatureSchema& builtin_schema() {
  static const FeatureSchema schema = [] {
    std::vector<FeatureDef> f;
    f.push_back(make_feature(1, "pen_pressure", {"Strong", "Medium"}, {40.6, 59.4}));
    f.push_back(make_feature(2, "tilt", {"Normal", "Tilted"}, {81.24, 18.76}));
    f.push_back(make_feature(3, "entry_stroke_a", {"No Stroke", "Downstroke"}, {94.32, 5.68}));
    f.push_back(make_feature(4, "slantness", {"Normal", "Slight Right", "Very Right", "Left"},
                             {52.41, 29.38, 11.05, 7.58}));
    f.push_back(make_feature(5, "size", {"Small", "Medium", "Large"}, {23.01, 52.41, 24.58}));
    f.push_back(make_feature(6, "dimension", {"Low", "Medium", "High"}, {29.75, 52.18, 18.07}));
    f.push_back(make_feature(7, "letter_spacing", {"Less", "Medium", "High"}, {22.49, 43.09, 25.78}));
    f.push_back(make_feature(8, "is_lowercase", {"No", "Yes"}, {1.5, 98.5}));
    f.push_back(make_feature(9, "is_continuous", {"No", "Yes"}, {33.38, 66.62}));
    f.push_back(make_feature(10, "constancy", {"Irregular", "Regular"}, {39.65, 60.35}));
    f.push_back(make_feature(11, "staff_of_a", {"No Staff", "Retraced", "Loopy", "Tented"},
                             {18.04, 58.45, 7.0, 16.51}));
    f.push_back(make_feature(12, "staff_of_d", {"No Staff", "Retraced", "Loopy"}, {9.86, 49.63, 40.51}));
    f.push_back(make_feature(13, "exit_stroke_d", {"No Stroke", "Down Stroke", "Curved Up", "Straight"},
                             {24.86, 44.02, 12.6, 18.53}));
    f.push_back(make_feature(14, "word_formation", {"Not Well Formed", "Well Formed"}, {56.91, 43.09}));
    f.push_back(make_feature(15, "formation_n", {"No Formation", "Normal"}, {22.97, 77.03}));

    // Zero-based positions: f1->f2, f3->f4, f11->f12, f13->f14, f7->f8,
    // f8->f9, f9->f10, f5->f7, f6->f7, f15->f7.
    std::vector<Edge> edges = {{0, 1}, {2, 3}, {10, 11}, {12, 13}, {6, 7},
                               {7, 8}, {8, 9}, {4, 6},   {5, 6},   {14, 6}};
    return FeatureSchema(std::move(f), std::move(edges));
  }();
  return schema;
}

int parse_feature_token(std::string_view token) {
  token = trim(token);
  if (token.size() < 2 || token[0] != 'f') throw ParseError("bad feature token '" + std::string(token) + "'");
  long long n = 0;
  try {
    n = parse_integer(token.substr(1));
  } catch (const ParseError&) {
    throw ParseError("bad feature token '" + std::string(token) + "'");
  }
  if (n < 1 || n > static_cast<long long>(kFeatureCount)) {
    throw ParseError("feature token '" + std::string(token) + "' out of range");
  }
  return static_cast<int>(n - 1);
}

std::string feature_token(int position) { return "f" + std::to_string(position + 1); }

std::string serialize_schema(const FeatureSchema& schema) {
  std::string out;
  out += kSchemaHeader;
  out += '\n';
  for (const FeatureDef& f : schema.features()) {
    out += "\nfeature f" + std::to_string(f.index) + "\n";
    out += "  name: " + f.name + "\n";
    out += "  labels: ";
    for (std::size_t i = 0; i < f.class_labels.size(); ++i) {
      if (i) out += ", ";
      out += f.class_labels[i];
    }
    out += "\n  marginal: ";
    for (std::size_t i = 0; i < f.default_marginal.size(); ++i) {
      if (i) out += ", ";
      out += format_shortest(f.default_marginal[i]);
    }
    out += '\n';
  }
  out += "\nedges:";
  for (const Edge& e : schema.edges()) out += " " + feature_token(e.parent) + "->" + feature_token(e.child);
  out += '\n';
  return out;
}

FeatureSchema parse_schema(std::string_view text) {
  struct Pending {
    std::optional<std::string> name;
    std::optional<std::vector<std::string>> labels;
    std::optional<std::vector<double>> marginal;
    std::size_t line = 0;
  };
  std::map<int, Pending> pending;
  std::optional<std::vector<Edge>> edges;
  Pending* current = nullptr;
  int current_index = -1;
  bool header_seen = false;

  const auto lines = split(text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t lineno = n + 1;
    const std::string_view line = trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kSchemaHeader) throw ParseError("expected '" + std::string(kSchemaHeader) + "' header", lineno);
      header_seen = true;
      continue;
    }
    if (line.starts_with("feature ") || line == "feature") {
      const int index = parse_feature_token(trim(line.substr(7)));
      if (pending.count(index)) throw ParseError("duplicate section for " + feature_token(index), lineno);
      current = &pending[index];
      current->line = lineno;
      current_index = index;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError("expected 'key: value'", lineno);
    const std::string_view key = trim(line.substr(0, colon));
    const std::string_view value = trim(line.substr(colon + 1));

    if (key == "edges") {
      if (edges) throw ParseError("duplicate 'edges' key", lineno);
      edges.emplace();
      current = nullptr;
      std::size_t pos = 0;
      while (pos < value.size()) {
        const auto end = value.find_first_of(" \t,", pos);
        const std::string_view tok = value.substr(pos, end == std::string_view::npos ? value.size() - pos : end - pos);
        pos = end == std::string_view::npos ? value.size() : end + 1;
        if (tok.empty()) continue;
        const auto arrow = tok.find("->");
        if (arrow == std::string_view::npos) throw ParseError("bad edge token '" + std::string(tok) + "'", lineno);
        try {
          edges->push_back({parse_feature_token(tok.substr(0, arrow)), parse_feature_token(tok.substr(arrow + 2))});
        } catch (const ParseError& e) {
          throw ParseError(e.what(), lineno);
        }
      }
      continue;
    }
    if (current == nullptr) throw ParseError("key '" + std::string(key) + "' outside a feature section", lineno);
    if (key == "name") {
      if (current->name) throw ParseError("duplicate 'name' in " + feature_token(current_index), lineno);
      current->name = std::string(value);
    } else if (key == "labels") {
      if (current->labels) throw ParseError("duplicate 'labels' in " + feature_token(current_index), lineno);
      std::vector<std::string> labels;
      for (auto part : split(value, ',')) labels.emplace_back(trim(part));
      current->labels = std::move(labels);
    } else if (key == "marginal") {
      if (current->marginal) throw ParseError("duplicate 'marginal' in " + feature_token(current_index), lineno);
      std::vector<double> marginal;
      for (auto part : split(value, ',')) marginal.push_back(parse_double(part, lineno));
      current->marginal = std::move(marginal);
    } else {
      throw ParseError("unknown key '" + std::string(key) + "'", lineno);
    }
  }
  if (!header_seen) throw ParseError("empty schema document");

  std::vector<FeatureDef> features;
  for (auto& [index, p] : pending) {
    const std::string where = feature_token(index);
    if (!p.name) throw ParseError(where + " is missing 'name'", p.line);
    if (!p.labels) throw ParseError(where + " is missing 'labels'", p.line);
    if (!p.marginal) throw ParseError(where + " is missing 'marginal'", p.line);
    FeatureDef def;
    def.index = index + 1;
    def.name = *p.name;
    def.cardinality = static_cast<int>(p.labels->size());
    def.class_labels = std::move(*p.labels);
    def.default_marginal = std::move(*p.marginal);
    features.push_back(std::move(def));
  }
  return FeatureSchema(std::move(features), edges.value_or(std::vector<Edge>{}));
}

FeatureSchema load_schema(const std::filesystem::path& path) { return parse_schema(read_text_file(path)); }

}  // namespace veriscribe
