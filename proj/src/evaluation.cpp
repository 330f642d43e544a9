#include "veriscribe/evaluation.hpp"

#include <array>
#include <map>

#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"
#include "veriscribe/laam.hpp"
#include "veriscribe/rng.hpp"

namespace veriscribe {

namespace {

double ratio(long long num, long long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

struct Counts {
  long long tp = 0, fp = 0, tn = 0, fn = 0;
};

void tally(Counts& c, const PairSet& pairs, std::span<const Verdict> decisions) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool same = pairs.pairs[i].label == PairLabel::Same;
    const bool said_same = decisions[i] == Verdict::Same;
    if (same) {
      said_same ? ++c.tp : ++c.fn;
    } else {
      said_same ? ++c.fp : ++c.tn;
    }
  }
}

// Stream ids for the seed-derived pair samplers.
constexpr std::uint64_t kTrainPairs = 1;
constexpr std::uint64_t kValPairs = 2;
constexpr std::uint64_t kTestPairs = 3;

}  // namespace

EvalReport report_from_counts(std::string method, std::string regime, long long tp, long long fp, long long tn,
                              long long fn) {
  EvalReport r;
  r.method = std::move(method);
  r.regime = std::move(regime);
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  const long long total = tp + fp + tn + fn;
  r.type1 = ratio(tp, tp + fn);
  r.type2 = ratio(tn, tn + fp);
  r.type2_literal = ratio(fp, total);
  r.overall = ratio(tp + tn, total);
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  return r;
}

EvalReport evaluate(const PairSet& pairs, std::span<const Verdict> decisions, std::string method,
                    std::string regime) {
  if (decisions.size() != pairs.size()) {
    throw LengthMismatch("evaluate: " + std::to_string(decisions.size()) + " decisions for " +
                         std::to_string(pairs.size()) + " pairs");
  }
  Counts c;
  tally(c, pairs, decisions);
  return report_from_counts(std::move(method), std::move(regime), c.tp, c.fp, c.tn, c.fn);
}

std::string_view to_string(Method m) noexcept { return m == Method::Daam ? "daam" : "laam"; }

Method parse_method(std::string_view text) {
  if (text == "daam") return Method::Daam;
  if (text == "laam") return Method::Laam;
  throw ValidationError("unknown method '" + std::string(text) + "' (daam|laam)");
}

std::vector<EvalReport> compare_methods(const Dataset& dataset, const ExperimentConfig& config) {
  if (config.methods.empty() || config.regimes.empty()) return {};
  if (config.seeds.empty()) throw ValidationError("compare_methods needs at least one seed");
  for (Method m : config.methods) {
    if (m == Method::Daam && !dataset.all_soft()) {
      throw MissingSoft("DAAM needs soft probability vectors; supply a soft-record file");
    }
  }

  // (method, regime) -> pooled counts
  std::map<std::pair<std::size_t, std::size_t>, Counts> pooled;
  for (std::size_t ri = 0; ri < config.regimes.size(); ++ri) {
    for (std::uint64_t seed : config.seeds) {
      const Split parts = split(dataset, config.regimes[ri], config.ratios, seed);
      const Dataset val = dataset.subset(parts.val);
      const Dataset test = dataset.subset(parts.test);
      const PairSet val_pairs = generate_pairs(val, config.pair_strategy, derive_seed(seed, kValPairs));
      const PairSet test_pairs = generate_pairs(test, config.pair_strategy, derive_seed(seed, kTestPairs));

      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        std::vector<Verdict> decisions;
        decisions.reserve(test_pairs.size());
        if (config.methods[mi] == Method::Daam) {
          const double threshold = daam::calibrate(val, val_pairs, config.ocs).chosen_threshold;
          for (double s : daam::score_pairs(test, test_pairs, config.ocs)) {
            decisions.push_back(daam::classify(s, threshold));
          }
        } else {
          const Dataset train = dataset.subset(parts.train);
          const PairSet train_pairs = generate_pairs(train, config.pair_strategy, derive_seed(seed, kTrainPairs));
          const laam::LaamModel model = laam::train(train, train_pairs, config.alpha);
          const double tau =
              config.calibrate_laam ? laam::calibrate_threshold(model, val, val_pairs).chosen_threshold : config.tau;
          const auto vectors = laam::distance_vectors(test, test_pairs);
          for (double v : laam::llr_batch(model.same, model.different, vectors)) {
            decisions.push_back(v >= tau ? Verdict::Same : Verdict::Different);
          }
        }
        tally(pooled[{mi, ri}], test_pairs, decisions);
      }
    }
  }

  std::vector<EvalReport> out;
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    for (std::size_t ri = 0; ri < config.regimes.size(); ++ri) {
      const Counts& c = pooled[{mi, ri}];
      out.push_back(report_from_counts(std::string(to_string(config.methods[mi])),
                                       std::string(to_string(config.regimes[ri])), c.tp, c.fp, c.tn, c.fn));
    }
  }
  return out;
}

std::string format_report_csv(std::span<const EvalReport> reports) {
  std::string out = "method,regime,TP,FP,TN,FN,type1,type2,type2_literal,overall,precision,recall\n";
  for (const EvalReport& r : reports) {
    out += r.method + "," + r.regime + "," + std::to_string(r.tp) + "," + std::to_string(r.fp) + "," +
           std::to_string(r.tn) + "," + std::to_string(r.fn) + "," + format_fixed(r.type1, 4) + "," +
           format_fixed(r.type2, 4) + "," + format_fixed(r.type2_literal, 4) + "," + format_fixed(r.overall, 4) +
           "," + format_fixed(r.precision, 4) + "," + format_fixed(r.recall, 4) + "\n";
  }
  return out;
}

}  // namespace veriscribe
