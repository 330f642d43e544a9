#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "veriscribe/data_io.hpp"

namespace veriscribe {

enum class PartitionMode { Unseen, Shuffled, Seen };

std::string_view to_string(PartitionMode mode) noexcept;
PartitionMode parse_partition_mode(std::string_view text);

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Parses "0.6,0.2,0.2"; ratios must be positive and sum to 1 within 1e-9.
SplitRatios parse_ratios(std::string_view text);

/// Train/validation/test positions into the source dataset.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  PartitionMode mode = PartitionMode::Unseen;
  std::uint64_t seed = 0;
  /// Seen mode only: writers dropped for having fewer than 5 samples.
  std::size_t excluded_writers = 0;
};

/// Writer-disjoint (Unseen), globally shuffled (Shuffled) or per-writer
/// stratified (Seen) split; deterministic for a fixed seed.
Split split(const Dataset& dataset, PartitionMode mode, const SplitRatios& ratios, std::uint64_t seed);

enum class PairLabel : std::uint8_t { Same = 0, Different = 1 };

struct RecordPair {
  std::size_t first = 0;   // positions into the dataset the pairs were drawn from
  std::size_t second = 0;  // first < second
  PairLabel label = PairLabel::Same;

  bool operator==(const RecordPair&) const = default;
};

struct PairSet {
  std::vector<RecordPair> pairs;
  std::size_t same_count = 0;
  std::size_t different_count = 0;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  /// Pairs carrying `label`, in order.
  PairSet filtered(PairLabel label) const;
};

/// AllPairs: every unordered pair. Balanced(k): every same-writer pair plus
/// k times as many different-writer pairs drawn without replacement.
struct PairStrategy {
  enum class Kind { AllPairs, Balanced } kind = Kind::Balanced;
  std::size_t k = 1;

  static PairStrategy all_pairs() { return {Kind::AllPairs, 0}; }
  static PairStrategy balanced(std::size_t k = 1) { return {Kind::Balanced, k}; }
};

/// "all" or "balanced" / "balanced:K".
PairStrategy parse_pair_strategy(std::string_view text);
std::string to_string(const PairStrategy& strategy);

PairSet generate_pairs(const Dataset& part, const PairStrategy& strategy, std::uint64_t seed);

}  // namespace veriscribe
