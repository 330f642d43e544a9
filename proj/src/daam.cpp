#include "veriscribe/daam.hpp"

#include <cmath>
#include <cstdlib>

#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"
#include "veriscribe/simd/kernels.hpp"

namespace veriscribe {

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Same ? "same" : "different"; }

namespace daam {

namespace {

std::array<std::uint32_t, kFeatureCount + 1> segment_offsets(const FeatureSchema& schema) {
  std::array<std::uint32_t, kFeatureCount + 1> offsets{};
  for (std::size_t j = 0; j <= kFeatureCount; ++j) offsets[j] = static_cast<std::uint32_t>(schema.soft_offset(j));
  return offsets;
}

void check_pair(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema) {
  if (!q.has_soft()) throw MissingSoft("record " + q.writer_id + "/" + q.sample_id + " has no soft vectors");
  if (!k.has_soft()) throw MissingSoft("record " + k.writer_id + "/" + k.sample_id + " has no soft vectors");
  if (q.soft.size() != schema.total_classes() || k.soft.size() != schema.total_classes()) {
    throw SchemaMismatch("soft vectors do not match the schema's class layout");
  }
}

double aggregate(const std::array<double, kFeatureCount>& per_feature, OcsMode mode) {
  double sum = 0.0;
  for (double s : per_feature) sum += s;
  return mode == OcsMode::Mean ? sum / static_cast<double>(kFeatureCount) : sum;
}

double precision_of(long long tp, long long fp) { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }
double recall_of(long long tp, long long fn) { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }

}  // namespace

OcsMode parse_ocs_mode(std::string_view text) {
  if (text == "mean") return OcsMode::Mean;
  if (text == "sum") return OcsMode::Sum;
  throw ValidationError("unknown ocs mode '" + std::string(text) + "' (mean|sum)");
}

std::string_view to_string(OcsMode mode) noexcept { return mode == OcsMode::Mean ? "mean" : "sum"; }

double cosine_sim(std::span<const double> q, std::span<const double> k) {
  if (q.size() != k.size()) throw LengthMismatch("cosine_sim: vectors differ in length");
  if (q.size() < 2) throw LengthMismatch("cosine_sim: vectors need at least 2 entries");
  auto all_zero = [](std::span<const double> v) {
    for (double x : v) {
      if (x != 0.0) return false;
    }
    return true;
  };
  if (all_zero(q) || all_zero(k)) throw ZeroVector("cosine_sim: all-zero vector");
  const std::uint32_t offsets[2] = {0, static_cast<std::uint32_t>(q.size())};
  double out = 0.0;
  simd::active_kernels().segment_cosine(q.data(), k.data(), std::span<const std::uint32_t>(offsets), &out);
  return out;
}

Score score_pair(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema, OcsMode mode) {
  check_pair(q, k, schema);
  const auto offsets = segment_offsets(schema);
  Score score;
  simd::active_kernels().segment_cosine(q.soft.data(), k.soft.data(), std::span<const std::uint32_t>(offsets), score.per_feature.data());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (std::isnan(score.per_feature[j])) {
      throw ZeroVector("feature " + feature_token(static_cast<int>(j)) + " has an all-zero soft vector");
    }
  }
  score.overall = aggregate(score.per_feature, mode);
  return score;
}

std::vector<double> score_pairs(const Dataset& dataset, const PairSet& pairs, OcsMode mode) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const RecordPair& p : pairs.pairs) {
    out.push_back(score_pair(dataset[p.first], dataset[p.second], dataset.schema(), mode).overall);
  }
  return out;
}

Verdict classify(double overall, double threshold) noexcept {
  return overall >= threshold ? Verdict::Same : Verdict::Different;
}

Verdict classify(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema, double threshold,
                 OcsMode mode) {
  return classify(score_pair(q, k, schema, mode).overall, threshold);
}

std::vector<double> default_sweep() {
  std::vector<double> t;
  for (int i = 1; i <= 9; ++i) t.push_back(i / 10.0);
  return t;
}

CalibrationResult calibrate_scores(std::span<const double> scores, std::span<const PairLabel> labels,
                                   std::span<const double> thresholds) {
  if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
  if (thresholds.empty()) throw ValidationError("empty threshold sweep");
  std::vector<std::uint8_t> is_same(labels.size());
  bool any_same = false, any_diff = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    is_same[i] = labels[i] == PairLabel::Same ? 1 : 0;
    (is_same[i] ? any_same : any_diff) = true;
  }
  if (!any_same || !any_diff) throw DegenerateLabels("calibration needs both same- and different-writer pairs");

  std::vector<simd::SweepCounts> counts(thresholds.size());
  simd::active_kernels().sweep_counts(scores, is_same, thresholds, counts.data());

  CalibrationResult result;
  double best_gap = 0.0;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    SweepRow row;
    row.threshold = thresholds[t];
    row.tp = counts[t].tp;
    row.fp = counts[t].fp;
    row.tn = counts[t].tn;
    row.fn = counts[t].fn;
    row.precision = precision_of(row.tp, row.fp);
    row.recall = recall_of(row.tp, row.fn);
    const double gap = std::abs(row.precision - row.recall);
    if (t == 0 || gap < best_gap || (gap == best_gap && row.threshold > result.chosen_threshold)) {
      best_gap = gap;
      result.chosen_threshold = row.threshold;
    }
    result.table.push_back(row);
  }
  return result;
}

CalibrationResult calibrate(const Dataset& dataset, const PairSet& pairs, OcsMode mode) {
  const std::vector<double> scores = score_pairs(dataset, pairs, mode);
  std::vector<PairLabel> labels;
  labels.reserve(pairs.size());
  for (const RecordPair& p : pairs.pairs) labels.push_back(p.label);
  return calibrate_scores(scores, labels, default_sweep());
}

std::string format_sweep_csv(const CalibrationResult& result) {
  std::string out = "threshold,TP,FP,TN,FN,precision,recall\n";
  for (const SweepRow& r : result.table) {
    out += format_shortest(r.threshold) + "," + std::to_string(r.tp) + "," + std::to_string(r.fp) + "," +
           std::to_string(r.tn) + "," + std::to_string(r.fn) + "," + format_fixed(r.precision, 4) + "," +
           format_fixed(r.recall, 4) + "\n";
  }
  return out;
}

}  // namespace daam
}  // namespace veriscribe
