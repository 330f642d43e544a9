#include "veriscribe/partition.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"
#include "veriscribe/rng.hpp"

namespace veriscribe {

namespace {

constexpr std::size_t kSeenMinSamples = 5;

std::size_t share(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
}

void check_ratios(const SplitRatios& r) {
  if (!(r.train > 0.0 && r.val > 0.0 && r.test > 0.0)) throw ValidationError("ratios must be positive");
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) throw ValidationError("ratios must sum to 1");
}

struct PartSizes {
  std::size_t train, val, test;
};

// Floor for val/test (at least one each), remainder to train.
PartSizes part_sizes(std::size_t n, const SplitRatios& r, std::string_view unit) {
  if (n < 3) {
    throw InsufficientData("need at least 3 " + std::string(unit) + " to fill three parts, got " + std::to_string(n));
  }
  const std::size_t val = std::max<std::size_t>(1, share(n, r.val));
  const std::size_t test = std::max<std::size_t>(1, share(n, r.test));
  if (val + test >= n) {
    throw InsufficientData("too few " + std::string(unit) + " (" + std::to_string(n) + ") for the requested ratios");
  }
  return {n - val - test, val, test};
}

}  // namespace

std::string_view to_string(PartitionMode mode) noexcept {
  switch (mode) {
    case PartitionMode::Unseen:
      return "unseen";
    case PartitionMode::Shuffled:
      return "shuffled";
    case PartitionMode::Seen:
      return "seen";
  }
  return "unknown";
}

PartitionMode parse_partition_mode(std::string_view text) {
  if (text == "unseen") return PartitionMode::Unseen;
  if (text == "shuffled") return PartitionMode::Shuffled;
  if (text == "seen") return PartitionMode::Seen;
  throw ValidationError("unknown partition mode '" + std::string(text) + "' (unseen|shuffled|seen)");
}

SplitRatios parse_ratios(std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw ValidationError("ratios need three comma-separated values");
  SplitRatios r{parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
  check_ratios(r);
  return r;
}

Split split(const Dataset& dataset, PartitionMode mode, const SplitRatios& ratios, std::uint64_t seed) {
  check_ratios(ratios);
  if (dataset.empty()) throw InsufficientData("cannot split an empty dataset");

  Split out;
  out.mode = mode;
  out.seed = seed;
  Rng rng(seed);

  switch (mode) {
    case PartitionMode::Unseen: {
      std::vector<const std::vector<std::size_t>*> writers;
      for (const auto& [id, positions] : dataset.writer_index()) writers.push_back(&positions);
      const PartSizes sizes = part_sizes(writers.size(), ratios, "writers");
      rng.shuffle(std::span(writers));
      for (std::size_t w = 0; w < writers.size(); ++w) {
        auto& part = w < sizes.train ? out.train : (w < sizes.train + sizes.val ? out.val : out.test);
        part.insert(part.end(), writers[w]->begin(), writers[w]->end());
      }
      break;
    }
    case PartitionMode::Shuffled: {
      std::vector<std::size_t> all(dataset.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      const PartSizes sizes = part_sizes(all.size(), ratios, "records");
      rng.shuffle(std::span(all));
      out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(sizes.train));
      out.val.assign(all.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                     all.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.val));
      out.test.assign(all.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.val), all.end());
      break;
    }
    case PartitionMode::Seen: {
      std::uint64_t ordinal = 0;
      for (const auto& [id, positions] : dataset.writer_index()) {
        const std::uint64_t stream = ordinal++;
        if (positions.size() < kSeenMinSamples) {
          ++out.excluded_writers;
          continue;
        }
        std::vector<std::size_t> mine = positions;
        Rng writer_rng = Rng::substream(seed, stream);
        writer_rng.shuffle(std::span(mine));
        const PartSizes sizes = part_sizes(mine.size(), ratios, "samples of writer " + id);
        out.train.insert(out.train.end(), mine.begin(), mine.begin() + static_cast<std::ptrdiff_t>(sizes.train));
        out.val.insert(out.val.end(), mine.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                       mine.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.val));
        out.test.insert(out.test.end(), mine.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.val),
                        mine.end());
      }
      if (out.train.empty()) throw InsufficientData("no writer has at least 5 samples");
      break;
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

PairSet PairSet::filtered(PairLabel label) const {
  PairSet out;
  for (const RecordPair& p : pairs) {
    if (p.label == label) out.pairs.push_back(p);
  }
  (label == PairLabel::Same ? out.same_count : out.different_count) = out.pairs.size();
  return out;
}

PairStrategy parse_pair_strategy(std::string_view text) {
  if (text == "all") return PairStrategy::all_pairs();
  if (text == "balanced") return PairStrategy::balanced(1);
  if (text.starts_with("balanced:")) {
    const long long k = parse_integer(text.substr(9));
    if (k < 1) throw ValidationError("balanced:K needs K >= 1");
    return PairStrategy::balanced(static_cast<std::size_t>(k));
  }
  throw ValidationError("unknown pair strategy '" + std::string(text) + "' (all|balanced[:K])");
}

std::string to_string(const PairStrategy& strategy) {
  if (strategy.kind == PairStrategy::Kind::AllPairs) return "all";
  return "balanced:" + std::to_string(strategy.k);
}

PairSet generate_pairs(const Dataset& part, const PairStrategy& strategy, std::uint64_t seed) {
  const std::size_t n = part.size();
  if (n < 2) throw InsufficientData("need at least 2 records to form pairs, got " + std::to_string(n));
  const auto& records = part.records();
  auto label_of = [&](std::size_t i, std::size_t j) {
    return records[i].writer_id == records[j].writer_id ? PairLabel::Same : PairLabel::Different;
  };

  PairSet out;
  if (strategy.kind == PairStrategy::Kind::AllPairs) {
    out.pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) out.pairs.push_back({i, j, label_of(i, j)});
    }
  } else {
    for (const auto& [id, positions] : part.writer_index()) {
      for (std::size_t a = 0; a < positions.size(); ++a) {
        for (std::size_t b = a + 1; b < positions.size(); ++b) {
          out.pairs.push_back({positions[a], positions[b], PairLabel::Same});
        }
      }
    }
    const std::size_t same = out.pairs.size();
    const std::size_t total_diff = n * (n - 1) / 2 - same;
    const std::size_t need = same * strategy.k;
    Rng rng(seed);

    if (need >= total_diff) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (label_of(i, j) == PairLabel::Different) out.pairs.push_back({i, j, PairLabel::Different});
        }
      }
    } else if (need * 2 <= total_diff) {
      // Sparse draw: rejection sampling over random record pairs.
      std::set<std::pair<std::size_t, std::size_t>> chosen;
      while (chosen.size() < need) {
        std::size_t i = static_cast<std::size_t>(rng.below(n));
        std::size_t j = static_cast<std::size_t>(rng.below(n));
        if (i == j || label_of(i, j) == PairLabel::Same) continue;
        if (i > j) std::swap(i, j);
        chosen.emplace(i, j);
      }
      for (const auto& [i, j] : chosen) out.pairs.push_back({i, j, PairLabel::Different});
    } else {
      // Dense draw: partial Fisher-Yates over the enumerated candidates.
      std::vector<std::pair<std::size_t, std::size_t>> candidates;
      candidates.reserve(total_diff);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (label_of(i, j) == PairLabel::Different) candidates.emplace_back(i, j);
        }
      }
      for (std::size_t t = 0; t < need; ++t) {
        const std::size_t pick = t + static_cast<std::size_t>(rng.below(candidates.size() - t));
        std::swap(candidates[t], candidates[pick]);
      }
      for (std::size_t t = 0; t < need; ++t) {
        out.pairs.push_back({candidates[t].first, candidates[t].second, PairLabel::Different});
      }
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const RecordPair& a, const RecordPair& b) {
      return std::tie(a.first, a.second) < std::tie(b.first, b.second);
    });
  }
  for (const RecordPair& p : out.pairs) (p.label == PairLabel::Same ? out.same_count : out.different_count)++;
  return out;
}

}  // namespace veriscribe
