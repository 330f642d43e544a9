#pragma once

// Likelihood-ratio verification over categorical feature distances.
//
// A questioned/known pair is reduced to one distance code per feature: the
// unordered pair of classes the two samples show, enumerated
// lexicographically (for four classes: 00 01 02 03 11 12 13 22 23 33).
// Two discrete Bayesian networks over these codes share one DAG; the first is
// fitted on same-writer pairs, the second on different-writer pairs. Their
// factorised log-joints give the log-likelihood ratio.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veriscribe/daam.hpp"
#include "veriscribe/data_io.hpp"
#include "veriscribe/partition.hpp"
#include "veriscribe/schema.hpp"
#include "veriscribe/simd/kernels.hpp"

namespace veriscribe::laam {

enum class Hypothesis { SameWriter, DifferentWriter };
std::string_view to_string(Hypothesis h) noexcept;

struct DistanceCode {
  int feature = 0;
  int code = 0;
  bool operator==(const DistanceCode&) const = default;
};

struct DistanceVector {
  std::array<std::int32_t, kFeatureCount> codes{};
  bool operator==(const DistanceVector&) const = default;
};

/// Code of the unordered class pair {a, b} among `cardinality` classes.
int pair_code(int cardinality, int a, int b);
/// Inverse of pair_code: the (low, high) class pair.
std::pair<int, int> decode_pair_code(int cardinality, int code);
/// Two-digit display form, e.g. "12".
std::string code_label(int cardinality, int code);

/// Throws OutOfRange if either class is outside the feature's cardinality.
DistanceCode encode_distance(std::size_t feature, int q_class, int k_class, const FeatureSchema& schema);
DistanceVector distance_vector(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema);
std::vector<DistanceVector> distance_vectors(const Dataset& dataset, const PairSet& pairs);

/// DAG over distance-code nodes with per-node code counts.
class Structure {
 public:
  /// Throws CyclicStructure for a cyclic edge list, ValidationError for
  /// malformed edges (out of range, duplicate, more than 3 parents).
  Structure(std::vector<int> code_counts, std::vector<Edge> edges);
  static Structure from_schema(const FeatureSchema& schema);

  std::size_t node_count() const noexcept { return code_counts_.size(); }
  int code_count(std::size_t node) const { return code_counts_.at(node); }
  const std::vector<int>& code_counts() const noexcept { return code_counts_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& parents(std::size_t node) const { return parents_.at(node); }
  const std::vector<int>& topological_order() const noexcept { return topo_; }

  /// Number of parent-code combinations of `node`.
  int row_count(std::size_t node) const;
  /// Mixed-radix row of `node` given the parents' codes in `d` (last parent varies fastest).
  int row_index(std::size_t node, const DistanceVector& d) const;
  /// Free parameters: sum over nodes of rows * (codes - 1).
  long long parameter_count() const;

  bool operator==(const Structure& other) const {
    return code_counts_ == other.code_counts_ && edges_ == other.edges_;
  }

 private:
  std::vector<int> code_counts_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> parents_;
  std::vector<int> topo_;
};

/// Conditional distribution of one node's code given its parents' codes.
struct CpdTable {
  int node = 0;
  std::vector<int> parents;
  int code_count = 0;
  int row_count = 0;
  double alpha = 0.0;
  std::vector<double> probs;  // row-major, row_count * code_count

  double prob(int row, int code) const { return probs[static_cast<std::size_t>(row * code_count + code)]; }
  std::span<const double> row(int r) const {
    return std::span<const double>(probs).subspan(static_cast<std::size_t>(r * code_count),
                                                  static_cast<std::size_t>(code_count));
  }
};

/// A fitted network for one hypothesis. Immutable; construction validates
/// that CPDs cover every node once, parents match the structure, and every
/// row sums to 1 within 1e-9.
class TrainedBayesNet {
 public:
  TrainedBayesNet(Structure structure, Hypothesis hypothesis, std::vector<CpdTable> cpds,
                  std::size_t training_pairs, double alpha);

  const Structure& structure() const noexcept { return structure_; }
  Hypothesis hypothesis() const noexcept { return hypothesis_; }
  const std::vector<CpdTable>& cpds() const noexcept { return cpds_; }
  const CpdTable& cpd(std::size_t node) const { return cpds_.at(node); }
  std::size_t training_pairs() const noexcept { return training_pairs_; }
  double alpha() const noexcept { return alpha_; }

  /// ln P(code of `node` | parents) for vector d.
  double log_factor(std::size_t node, const DistanceVector& d) const;
  /// Sum of the per-node log factors, nodes in index order. Throws NonconformantVector.
  double joint_log_prob(const DistanceVector& d) const;
  /// Same values as joint_log_prob for each vector, through the SIMD kernel.
  std::vector<double> joint_log_prob_batch(std::span<const DistanceVector> vectors,
                                           const simd::KernelTable& kernels = simd::active_kernels()) const;

  void check_conformant(const DistanceVector& d) const;

 private:
  Structure structure_;
  Hypothesis hypothesis_;
  std::vector<CpdTable> cpds_;
  std::size_t training_pairs_;
  double alpha_;
  std::vector<double> log_table_;
  std::vector<simd::FactorNode> factors_;
};

/// Additive-smoothed maximum likelihood: P(code | row) = (count + alpha) / (row_total + alpha * K).
/// A row with no observations and alpha = 0 is uniform. Throws EmptyTrainingSet.
TrainedBayesNet fit(std::span<const DistanceVector> vectors, const Structure& structure, Hypothesis hypothesis,
                    double alpha = 1.0);
/// Fits on the distance vectors of `pairs`, which must all carry `hypothesis`'s label.
TrainedBayesNet fit(const Dataset& dataset, const PairSet& pairs, Hypothesis hypothesis, double alpha = 1.0);

struct LaamModel {
  TrainedBayesNet same;       // fitted on same-writer pairs
  TrainedBayesNet different;  // fitted on different-writer pairs
};

/// Fits both networks from a labelled pair set over the schema DAG.
LaamModel train(const Dataset& dataset, const PairSet& pairs, double alpha = 1.0);

double joint_log_prob(const TrainedBayesNet& bn, const DistanceVector& d);

/// ln P(d | same) - ln P(d | different). Throws HypothesisMismatch unless
/// bn_same/bn_diff carry those hypotheses over the same structure.
double llr(const TrainedBayesNet& bn_same, const TrainedBayesNet& bn_diff, const DistanceVector& d);
std::vector<double> llr_batch(const TrainedBayesNet& bn_same, const TrainedBayesNet& bn_diff,
                              std::span<const DistanceVector> vectors);

/// Same iff llr >= tau.
Verdict classify(const TrainedBayesNet& bn_same, const TrainedBayesNet& bn_diff, const DistanceVector& d,
                 double tau = 0.0);

/// Deciles (0.1..0.9, nearest rank) of `llrs` as candidate thresholds.
std::vector<double> quantile_sweep(std::span<const double> llrs);
/// Threshold sweep over validation LLRs, reusing the DAAM calibration rule.
daam::CalibrationResult calibrate_threshold(const LaamModel& model, const Dataset& dataset, const PairSet& pairs);

/// Log-likelihood of `vectors` under the fitted structure minus
/// parameter_count / 2 * ln N. Throws CyclicStructure.
double bic_score(const std::vector<Edge>& edges, std::span<const DistanceVector> vectors,
                 const FeatureSchema& schema, double alpha = 0.0);
double bic_score(const std::vector<Edge>& edges, const Dataset& dataset, const PairSet& pairs, double alpha = 0.0);

/// Ancestral sampling of distance vectors from a network.
std::vector<DistanceVector> sample_vectors(const TrainedBayesNet& bn, std::size_t count, std::uint64_t seed);

// Versioned JSON document holding both networks; probabilities carry 12
// significant digits.
inline constexpr std::string_view kModelFormatName = "veriscribe-laam";
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kModelDigits = 12;

std::string serialize_model(const LaamModel& model);
LaamModel parse_model(std::string_view text, const FeatureSchema& schema);
LaamModel load_model(const std::filesystem::path& path, const FeatureSchema& schema);
void save_model(const std::filesystem::path& path, const LaamModel& model);

}  // namespace veriscribe::laam
