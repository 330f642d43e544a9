#include "veriscribe/laam.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"
#include "veriscribe/rng.hpp"

namespace veriscribe::laam {

using nlohmann::json;

std::string_view to_string(Hypothesis h) noexcept { return h == Hypothesis::SameWriter ? "same" : "different"; }

int pair_code(int cardinality, int a, int b) {
  if (a < 0 || b < 0 || a >= cardinality || b >= cardinality) {
    throw OutOfRange("class pair (" + std::to_string(a) + "," + std::to_string(b) + ") outside cardinality " +
                     std::to_string(cardinality));
  }
  const int lo = std::min(a, b);
  const int hi = std::max(a, b);
  // Codes before row `lo`: n + (n-1) + ... + (n-lo+1).
  return lo * cardinality - lo * (lo - 1) / 2 + (hi - lo);
}

std::pair<int, int> decode_pair_code(int cardinality, int code) {
  if (code < 0 || code >= distance_code_count(cardinality)) {
    throw OutOfRange("distance code " + std::to_string(code) + " outside cardinality " + std::to_string(cardinality));
  }
  int lo = 0;
  int row_len = cardinality;
  while (code >= row_len) {
    code -= row_len;
    ++lo;
    --row_len;
  }
  return {lo, lo + code};
}

std::string code_label(int cardinality, int code) {
  const auto [lo, hi] = decode_pair_code(cardinality, code);
  return std::to_string(lo) + std::to_string(hi);
}

DistanceCode encode_distance(std::size_t feature, int q_class, int k_class, const FeatureSchema& schema) {
  if (feature >= kFeatureCount) throw OutOfRange("feature index " + std::to_string(feature) + " out of range");
  return {static_cast<int>(feature), pair_code(schema.cardinality(feature), q_class, k_class)};
}

DistanceVector distance_vector(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema) {
  DistanceVector d;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    try {
      d.codes[j] = encode_distance(j, q.labels[j], k.labels[j], schema).code;
    } catch (const OutOfRange& e) {
      throw SchemaMismatch("records " + q.writer_id + "/" + q.sample_id + " and " + k.writer_id + "/" + k.sample_id +
                           " do not conform to the schema at " + feature_token(static_cast<int>(j)) + ": " + e.what());
    }
  }
  return d;
}

std::vector<DistanceVector> distance_vectors(const Dataset& dataset, const PairSet& pairs) {
  std::vector<DistanceVector> out;
  out.reserve(pairs.size());
  for (const RecordPair& p : pairs.pairs) {
    out.push_back(distance_vector(dataset[p.first], dataset[p.second], dataset.schema()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structure

Structure::Structure(std::vector<int> code_counts, std::vector<Edge> edges)
    : code_counts_(std::move(code_counts)), edges_(std::move(edges)) {
  const int n = static_cast<int>(code_counts_.size());
  for (int c : code_counts_) {
    if (c < 1) throw ValidationError("structure: every node needs at least one code");
  }
  parents_.assign(code_counts_.size(), {});
  std::set<Edge> seen;
  for (const Edge& e : edges_) {
    if (e.parent < 0 || e.child < 0 || e.parent >= n || e.child >= n) {
      throw ValidationError("structure: edge endpoint out of range");
    }
    if (e.parent == e.child) throw CyclicStructure("structure: self-loop on " + feature_token(e.parent));
    if (!seen.insert(e).second) throw ValidationError("structure: duplicate edge");
    auto& ps = parents_[static_cast<std::size_t>(e.child)];
    ps.push_back(e.parent);
    if (ps.size() > kMaxParents) throw ValidationError("structure: more than 3 parents on " + feature_token(e.child));
  }
  topo_ = topological_sort(code_counts_.size(), edges_);
  if (topo_.empty() && n > 0) throw CyclicStructure("structure: edges contain a cycle");
}

Structure Structure::from_schema(const FeatureSchema& schema) {
  std::vector<int> counts;
  for (std::size_t j = 0; j < kFeatureCount; ++j) counts.push_back(schema.code_count(j));
  return Structure(std::move(counts), schema.edges());
}

int Structure::row_count(std::size_t node) const {
  int rows = 1;
  for (int p : parents_.at(node)) rows *= code_counts_[static_cast<std::size_t>(p)];
  return rows;
}

int Structure::row_index(std::size_t node, const DistanceVector& d) const {
  int row = 0;
  for (int p : parents_.at(node)) row = row * code_counts_[static_cast<std::size_t>(p)] + d.codes[static_cast<std::size_t>(p)];
  return row;
}

long long Structure::parameter_count() const {
  long long total = 0;
  for (std::size_t v = 0; v < node_count(); ++v) {
    total += static_cast<long long>(row_count(v)) * (code_counts_[v] - 1);
  }
  return total;
}

// ---------------------------------------------------------------------------
// TrainedBayesNet

TrainedBayesNet::TrainedBayesNet(Structure structure, Hypothesis hypothesis, std::vector<CpdTable> cpds,
                                 std::size_t training_pairs, double alpha)
    : structure_(std::move(structure)),
      hypothesis_(hypothesis),
      cpds_(std::move(cpds)),
      training_pairs_(training_pairs),
      alpha_(alpha) {
  if (cpds_.size() != structure_.node_count()) {
    throw ValidationError("network needs exactly one CPD per node (" + std::to_string(structure_.node_count()) +
                          "), got " + std::to_string(cpds_.size()));
  }
  std::int32_t offset = 0;
  for (std::size_t v = 0; v < cpds_.size(); ++v) {
    const CpdTable& cpd = cpds_[v];
    const std::string where = "CPD of " + feature_token(static_cast<int>(v));
    if (cpd.node != static_cast<int>(v)) throw ValidationError(where + ": node index mismatch");
    if (cpd.parents != structure_.parents(v)) throw ValidationError(where + ": parents differ from the structure");
    if (cpd.code_count != structure_.code_count(v) || cpd.row_count != structure_.row_count(v) ||
        cpd.probs.size() != static_cast<std::size_t>(cpd.row_count * cpd.code_count)) {
      throw ValidationError(where + ": table shape does not match the structure");
    }
    for (int r = 0; r < cpd.row_count; ++r) {
      double sum = 0.0;
      for (double p : cpd.row(r)) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(where + ": probability outside [0,1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError(where + ", row " + std::to_string(r) + ": sums to " + format_shortest(sum));
      }
    }

    simd::FactorNode f;
    f.node = static_cast<std::int32_t>(v);
    f.offset = offset;
    f.code_count = cpd.code_count;
    f.parent_count = static_cast<std::int32_t>(cpd.parents.size());
    std::int32_t stride = 1;
    for (std::size_t p = cpd.parents.size(); p-- > 0;) {
      f.parents[p] = cpd.parents[p];
      f.parent_strides[p] = stride;
      stride *= structure_.code_count(static_cast<std::size_t>(cpd.parents[p]));
    }
    factors_.push_back(f);
    for (double p : cpd.probs) log_table_.push_back(std::log(p));
    offset += static_cast<std::int32_t>(cpd.probs.size());
  }
}

void TrainedBayesNet::check_conformant(const DistanceVector& d) const {
  for (std::size_t v = 0; v < structure_.node_count(); ++v) {
    if (d.codes[v] < 0 || d.codes[v] >= structure_.code_count(v)) {
      throw NonconformantVector("code " + std::to_string(d.codes[v]) + " at " + feature_token(static_cast<int>(v)) +
                                " outside [0," + std::to_string(structure_.code_count(v)) + ")");
    }
  }
}

double TrainedBayesNet::log_factor(std::size_t node, const DistanceVector& d) const {
  const simd::FactorNode& f = factors_.at(node);
  const int row = structure_.row_index(node, d);
  return log_table_[static_cast<std::size_t>(f.offset + row * f.code_count + d.codes[node])];
}

double TrainedBayesNet::joint_log_prob(const DistanceVector& d) const {
  check_conformant(d);
  double acc = 0.0;
  for (std::size_t v = 0; v < structure_.node_count(); ++v) acc += log_factor(v, d);
  return acc;
}

std::vector<double> TrainedBayesNet::joint_log_prob_batch(std::span<const DistanceVector> vectors,
                                                          const simd::KernelTable& kernels) const {
  const std::size_t n = vectors.size();
  std::vector<std::int32_t> codes(kFeatureCount * n);
  for (std::size_t i = 0; i < n; ++i) {
    check_conformant(vectors[i]);
    for (std::size_t v = 0; v < kFeatureCount; ++v) codes[v * n + i] = vectors[i].codes[v];
  }
  std::vector<double> out(n);
  kernels.factor_log_sum({log_table_, factors_}, codes.data(), n, n, out.data());
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

TrainedBayesNet fit(std::span<const DistanceVector> vectors, const Structure& structure, Hypothesis hypothesis,
                    double alpha) {
  if (vectors.empty()) throw EmptyTrainingSet("cannot fit a network on zero pairs");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be a non-negative number");

  std::vector<CpdTable> cpds;
  cpds.reserve(structure.node_count());
  for (std::size_t v = 0; v < structure.node_count(); ++v) {
    CpdTable cpd;
    cpd.node = static_cast<int>(v);
    cpd.parents = structure.parents(v);
    cpd.code_count = structure.code_count(v);
    cpd.row_count = structure.row_count(v);
    cpd.alpha = alpha;

    std::vector<long long> counts(static_cast<std::size_t>(cpd.row_count * cpd.code_count), 0);
    for (const DistanceVector& d : vectors) {
      const std::int32_t code = d.codes[v];
      if (code < 0 || code >= cpd.code_count) {
        throw NonconformantVector("training vector has code " + std::to_string(code) + " at " +
                                  feature_token(static_cast<int>(v)));
      }
      ++counts[static_cast<std::size_t>(structure.row_index(v, d) * cpd.code_count + code)];
    }
    cpd.probs.resize(counts.size());
    for (int r = 0; r < cpd.row_count; ++r) {
      long long total = 0;
      for (int c = 0; c < cpd.code_count; ++c) total += counts[static_cast<std::size_t>(r * cpd.code_count + c)];
      const double denom = static_cast<double>(total) + alpha * cpd.code_count;
      for (int c = 0; c < cpd.code_count; ++c) {
        const std::size_t at = static_cast<std::size_t>(r * cpd.code_count + c);
        cpd.probs[at] = denom > 0.0 ? (static_cast<double>(counts[at]) + alpha) / denom : 1.0 / cpd.code_count;
      }
    }
    cpds.push_back(std::move(cpd));
  }
  return TrainedBayesNet(structure, hypothesis, std::move(cpds), vectors.size(), alpha);
}

TrainedBayesNet fit(const Dataset& dataset, const PairSet& pairs, Hypothesis hypothesis, double alpha) {
  const PairLabel expected = hypothesis == Hypothesis::SameWriter ? PairLabel::Same : PairLabel::Different;
  for (const RecordPair& p : pairs.pairs) {
    if (p.label != expected) {
      throw HypothesisMismatch("pair set for the " + std::string(to_string(hypothesis)) +
                               "-writer network contains a pair with the other label");
    }
  }
  const auto vectors = distance_vectors(dataset, pairs);
  return fit(vectors, Structure::from_schema(dataset.schema()), hypothesis, alpha);
}

LaamModel train(const Dataset& dataset, const PairSet& pairs, double alpha) {
  const PairSet same = pairs.filtered(PairLabel::Same);
  const PairSet diff = pairs.filtered(PairLabel::Different);
  if (same.empty()) throw EmptyTrainingSet("no same-writer pairs to fit the same-writer network");
  if (diff.empty()) throw EmptyTrainingSet("no different-writer pairs to fit the different-writer network");
  return {fit(dataset, same, Hypothesis::SameWriter, alpha), fit(dataset, diff, Hypothesis::DifferentWriter, alpha)};
}

// ---------------------------------------------------------------------------
// Scoring

double joint_log_prob(const TrainedBayesNet& bn, const DistanceVector& d) { return bn.joint_log_prob(d); }

namespace {

void check_pairing(const TrainedBayesNet& bn_same, const TrainedBayesNet& bn_diff) {
  if (bn_same.hypothesis() != Hypothesis::SameWriter || bn_diff.hypothesis() != Hypothesis::DifferentWriter) {
    throw HypothesisMismatch("llr needs the same-writer network first and the different-writer network second");
  }
  if (!(bn_same.structure() == bn_diff.structure())) {
    throw HypothesisMismatch("the two networks do not share one structure");
  }
}

}  // namespace

double llr(const TrainedBayesNet& bn_same, const TrainedBayesNet& bn_diff, const DistanceVector& d) {
  check_pairing(bn_same, bn_diff);
  return bn_same.joint_log_prob(d) - bn_diff.joint_log_prob(d);
}

std::vector<double> llr_batch(const TrainedBayesNet& bn_same, const TrainedBayesNet& bn_diff,
                              std::span<const DistanceVector> vectors) {
  check_pairing(bn_same, bn_diff);
  std::vector<double> out = bn_same.joint_log_prob_batch(vectors);
  const std::vector<double> other = bn_diff.joint_log_prob_batch(vectors);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= other[i];
  return out;
}

Verdict classify(const TrainedBayesNet& bn_same, const TrainedBayesNet& bn_diff, const DistanceVector& d,
                 double tau) {
  return llr(bn_same, bn_diff, d) >= tau ? Verdict::Same : Verdict::Different;
}

std::vector<double> quantile_sweep(std::span<const double> llrs) {
  if (llrs.empty()) throw InsufficientData("no LLR values to take quantiles of");
  std::vector<double> sorted(llrs.begin(), llrs.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  for (int i = 1; i <= 9; ++i) {
    const double rank = std::ceil(i / 10.0 * static_cast<double>(sorted.size()));
    const std::size_t at = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
    out.push_back(sorted[std::min(at, sorted.size() - 1)]);
  }
  return out;
}

daam::CalibrationResult calibrate_threshold(const LaamModel& model, const Dataset& dataset, const PairSet& pairs) {
  const auto vectors = distance_vectors(dataset, pairs);
  const std::vector<double> scores = llr_batch(model.same, model.different, vectors);
  std::vector<PairLabel> labels;
  labels.reserve(pairs.size());
  for (const RecordPair& p : pairs.pairs) labels.push_back(p.label);
  return daam::calibrate_scores(scores, labels, quantile_sweep(scores));
}

// ---------------------------------------------------------------------------
// Structure scoring and simulation

double bic_score(const std::vector<Edge>& edges, std::span<const DistanceVector> vectors, const FeatureSchema& schema,
                 double alpha) {
  std::vector<int> counts;
  for (std::size_t j = 0; j < kFeatureCount; ++j) counts.push_back(schema.code_count(j));
  const Structure structure(std::move(counts), edges);
  const TrainedBayesNet bn = fit(vectors, structure, Hypothesis::SameWriter, alpha);
  double loglik = 0.0;
  for (const DistanceVector& d : vectors) loglik += bn.joint_log_prob(d);
  return loglik - 0.5 * static_cast<double>(structure.parameter_count()) *
                      std::log(static_cast<double>(vectors.size()));
}

double bic_score(const std::vector<Edge>& edges, const Dataset& dataset, const PairSet& pairs, double alpha) {
  const auto vectors = distance_vectors(dataset, pairs);
  return bic_score(edges, vectors, dataset.schema(), alpha);
}

std::vector<DistanceVector> sample_vectors(const TrainedBayesNet& bn, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const Structure& s = bn.structure();
  std::vector<DistanceVector> out(count);
  for (DistanceVector& d : out) {
    for (int v : s.topological_order()) {
      const auto node = static_cast<std::size_t>(v);
      d.codes[node] = static_cast<std::int32_t>(rng.categorical(bn.cpd(node).row(s.row_index(node, d))));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json network_to_json(const TrainedBayesNet& bn) {
  json cpds = json::array();
  for (const CpdTable& cpd : bn.cpds()) {
    json parents = json::array();
    for (int p : cpd.parents) parents.push_back(feature_token(p));
    json rows = json::array();
    for (int r = 0; r < cpd.row_count; ++r) {
      json row = json::array();
      for (double p : cpd.row(r)) row.push_back(round_significant(p, kModelDigits));
      rows.push_back(std::move(row));
    }
    cpds.push_back({{"node", feature_token(cpd.node)}, {"parents", std::move(parents)}, {"rows", std::move(rows)}});
  }
  return {{"hypothesis", to_string(bn.hypothesis())}, {"training_pairs", bn.training_pairs()}, {"cpds", std::move(cpds)}};
}

TrainedBayesNet network_from_json(const json& j, const Structure& structure, double alpha) {
  const std::string h = j.at("hypothesis").get<std::string>();
  Hypothesis hypothesis;
  if (h == "same") {
    hypothesis = Hypothesis::SameWriter;
  } else if (h == "different") {
    hypothesis = Hypothesis::DifferentWriter;
  } else {
    throw ParseError("unknown hypothesis '" + h + "'");
  }
  const json& cpds_json = j.at("cpds");
  if (!cpds_json.is_array() || cpds_json.size() != structure.node_count()) {
    throw ValidationError("network needs one CPD per node");
  }
  std::vector<CpdTable> cpds;
  for (std::size_t v = 0; v < cpds_json.size(); ++v) {
    const json& c = cpds_json[v];
    CpdTable cpd;
    cpd.node = parse_feature_token(c.at("node").get<std::string>());
    for (const json& p : c.at("parents")) cpd.parents.push_back(parse_feature_token(p.get<std::string>()));
    cpd.code_count = structure.code_count(v);
    cpd.row_count = structure.row_count(v);
    cpd.alpha = alpha;
    const json& rows = c.at("rows");
    if (rows.size() != static_cast<std::size_t>(cpd.row_count)) {
      throw ValidationError("CPD of " + feature_token(static_cast<int>(v)) + ": expected " +
                            std::to_string(cpd.row_count) + " rows");
    }
    for (const json& row : rows) {
      if (row.size() != static_cast<std::size_t>(cpd.code_count)) {
        throw ValidationError("CPD of " + feature_token(static_cast<int>(v)) + ": row has wrong length");
      }
      for (const json& p : row) cpd.probs.push_back(p.get<double>());
    }
    cpds.push_back(std::move(cpd));
  }
  return TrainedBayesNet(structure, hypothesis, std::move(cpds), j.at("training_pairs").get<std::size_t>(), alpha);
}

}  // namespace

std::string serialize_model(const LaamModel& model) {
  const Structure& s = model.same.structure();
  json edges = json::array();
  for (const Edge& e : s.edges()) edges.push_back(feature_token(e.parent) + "->" + feature_token(e.child));
  json doc = {{"format", kModelFormatName},
              {"version", kModelFormatVersion},
              {"alpha", model.same.alpha()},
              {"code_counts", s.code_counts()},
              {"edges", std::move(edges)},
              {"networks", json::array({network_to_json(model.same), network_to_json(model.different)})}};
  return doc.dump(1) + "\n";
}

LaamModel parse_model(std::string_view text, const FeatureSchema& schema) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
  try {
    if (doc.at("format") != kModelFormatName) throw ParseError("not a veriscribe-laam document");
    if (doc.at("version") != kModelFormatVersion) throw ParseError("unsupported model version " + doc["version"].dump());
    const Structure expected = Structure::from_schema(schema);
    if (doc.at("code_counts").get<std::vector<int>>() != expected.code_counts()) {
      throw SchemaMismatch("model code counts do not match the schema");
    }
    std::vector<Edge> edges;
    for (const json& tok : doc.at("edges")) {
      const std::string t = tok.get<std::string>();
      const auto arrow = t.find("->");
      if (arrow == std::string::npos) throw ParseError("bad edge token '" + t + "'");
      edges.push_back({parse_feature_token(t.substr(0, arrow)), parse_feature_token(t.substr(arrow + 2))});
    }
    if (edges != expected.edges()) throw SchemaMismatch("model structure differs from the schema DAG");
    const double alpha = doc.at("alpha").get<double>();
    const json& nets = doc.at("networks");
    if (!nets.is_array() || nets.size() != 2) throw ParseError("model needs exactly two networks");
    LaamModel model{network_from_json(nets[0], expected, alpha), network_from_json(nets[1], expected, alpha)};
    if (model.same.hypothesis() != Hypothesis::SameWriter ||
        model.different.hypothesis() != Hypothesis::DifferentWriter) {
      throw HypothesisMismatch("model networks must be ordered same, different");
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

LaamModel load_model(const std::filesystem::path& path, const FeatureSchema& schema) {
  return parse_model(read_text_file(path), schema);
}

void save_model(const std::filesystem::path& path, const LaamModel& model) {
  write_text_file_atomic(path, serialize_model(model));
}

}  // namespace veriscribe::laam
