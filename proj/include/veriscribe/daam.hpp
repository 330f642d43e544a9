#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "veriscribe/data_io.hpp"
#include "veriscribe/partition.hpp"

namespace veriscribe {

enum class Verdict { Same, Different };
std::string_view to_string(Verdict v) noexcept;

namespace daam {

/// How per-feature similarities are aggregated into the overall score.
/// Mean keeps the score in [0,1]; Sum is the literal unnormalised total.
enum class OcsMode { Mean, Sum };
OcsMode parse_ocs_mode(std::string_view text);
std::string_view to_string(OcsMode mode) noexcept;

struct Score {
  std::array<double, kFeatureCount> per_feature{};
  double overall = 0.0;
};

/// Cosine similarity of two non-negative vectors. Throws ZeroVector or
/// LengthMismatch.
double cosine_sim(std::span<const double> q, std::span<const double> k);

/// Per-feature cosine similarity of the soft vectors and their aggregate.
Score score_pair(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema,
                 OcsMode mode = OcsMode::Mean);

/// Overall scores for every pair of `pairs`, drawn from `dataset`.
std::vector<double> score_pairs(const Dataset& dataset, const PairSet& pairs, OcsMode mode = OcsMode::Mean);

/// Same iff overall >= threshold.
Verdict classify(double overall, double threshold) noexcept;
Verdict classify(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema, double threshold,
                 OcsMode mode = OcsMode::Mean);

struct SweepRow {
  double threshold = 0.0;
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct CalibrationResult {
  double chosen_threshold = 0.0;
  std::vector<SweepRow> table;
};

/// The candidate thresholds 0.1, 0.2, ..., 0.9.
std::vector<double> default_sweep();

/// Tallies each threshold and picks the one minimising |precision - recall|,
/// ties toward the larger threshold. Zero denominators count as 0.
/// Throws DegenerateLabels unless both labels are present.
CalibrationResult calibrate_scores(std::span<const double> scores, std::span<const PairLabel> labels,
                                   std::span<const double> thresholds);

/// Default sweep over the DAAM scores of `pairs`.
CalibrationResult calibrate(const Dataset& dataset, const PairSet& pairs, OcsMode mode = OcsMode::Mean);

/// CSV `threshold,TP,FP,TN,FN,precision,recall`, one row per sweep value.
std::string format_sweep_csv(const CalibrationResult& result);

}  // namespace daam
}  // namespace veriscribe
