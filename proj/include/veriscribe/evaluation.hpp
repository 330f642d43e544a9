#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "veriscribe/daam.hpp"
#include "veriscribe/data_io.hpp"
#include "veriscribe/partition.hpp"

namespace veriscribe {

/// Confusion counts and accuracy figures for one method on one regime.
///
/// type1 = TP / #same-writer pairs, type2 = TN / #different-writer pairs,
/// overall = (TP + TN) / total. type2_literal = FP / total is kept alongside
/// as the literal false-positive share of all pairs.
struct EvalReport {
  std::string method;
  std::string regime;
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  double type1 = 0.0;
  double type2 = 0.0;
  double type2_literal = 0.0;
  double overall = 0.0;
  double precision = 0.0;
  double recall = 0.0;

  long long total() const noexcept { return tp + fp + tn + fn; }
};

/// Builds a report from raw counts; zero denominators yield 0.
EvalReport report_from_counts(std::string method, std::string regime, long long tp, long long fp, long long tn,
                              long long fn);

/// Tallies `decisions` against the pair labels. Throws LengthMismatch.
EvalReport evaluate(const PairSet& pairs, std::span<const Verdict> decisions, std::string method = {},
                    std::string regime = {});

enum class Method { Daam, Laam };
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view text);

struct ExperimentConfig {
  std::vector<PartitionMode> regimes;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  SplitRatios ratios{};
  PairStrategy pair_strategy = PairStrategy::balanced(1);
  double alpha = 1.0;
  daam::OcsMode ocs = daam::OcsMode::Mean;
  /// LAAM decision threshold; ignored when calibrate_laam is set.
  double tau = 0.0;
  bool calibrate_laam = false;
};

/// Runs split -> calibrate/train -> test for every (method, regime), pooling
/// confusion counts over all seeds into one report per combination.
std::vector<EvalReport> compare_methods(const Dataset& dataset, const ExperimentConfig& config);

/// `method,regime,TP,FP,TN,FN,type1,type2,type2_literal,overall,precision,recall`,
/// fractions with 4 decimals.
std::string format_report_csv(std::span<const EvalReport> reports);

}  // namespace veriscribe
