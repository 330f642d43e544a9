#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "veriscribe/daam.hpp"
#include "veriscribe/errors.hpp"

using namespace veriscribe;

TEST_CASE("cosine worked examples") {
  const std::vector<double> e1 = {1, 0}, e2 = {0, 1}, half = {0.5, 0.5};
  CHECK(daam::cosine_sim(e1, e1) == 1.0);
  CHECK(daam::cosine_sim(e1, e2) == 0.0);
  // 0.5 / (sqrt(0.5) * 1)
  CHECK(std::abs(daam::cosine_sim(half, e1) - 0.7071068) <= 1e-6);
  CHECK(daam::cosine_sim(half, e1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("cosine errors") {
  const std::vector<double> zero = {0, 0}, e1 = {1, 0}, three = {1, 0, 0}, one = {1};
  CHECK_THROWS_AS(daam::cosine_sim(zero, e1), ZeroVector);
  CHECK_THROWS_AS(daam::cosine_sim(e1, three), LengthMismatch);
  CHECK_THROWS_AS(daam::cosine_sim(one, one), LengthMismatch);
}

TEST_CASE("score_pair") {
  const FeatureSchema& schema = builtin_schema();
  LabelVector a{};
  SUBCASE("identical records") {
    const auto r = test::make_record("w", "s", a, 0.8);
    const auto s = daam::score_pair(r, r, schema);
    for (double x : s.per_feature) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.overall == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("13 identical, 2 orthogonal one-hot features") {
    LabelVector b = a;
    b[2] = 1;
    b[9] = 1;
    const auto s = daam::score_pair(test::make_record("w", "1", a), test::make_record("v", "2", b), schema);
    CHECK(s.per_feature[2] == 0.0);
    CHECK(s.overall == doctest::Approx(13.0 / 15.0).epsilon(1e-15));
    CHECK(daam::score_pair(test::make_record("w", "1", a), test::make_record("v", "2", b), schema,
                           daam::OcsMode::Sum)
              .overall == doctest::Approx(13.0).epsilon(1e-15));
  }
  SUBCASE("symmetry") {
    const Dataset d = test::synthetic(3, 3, 0.5, 0.8, 4);
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        CHECK(daam::score_pair(d[i], d[j], schema).overall == daam::score_pair(d[j], d[i], schema).overall);
      }
    }
  }
  SUBCASE("missing soft") {
    CHECK_THROWS_AS(daam::score_pair(test::make_record("w", "1", a, 0.0), test::make_record("v", "2", a), schema),
                    MissingSoft);
  }
}

TEST_CASE("classification boundary") {
  CHECK(daam::classify(0.3784, 0.5) == Verdict::Different);
  CHECK(daam::classify(0.5, 0.5) == Verdict::Same);
  for (double t : daam::default_sweep()) CHECK(daam::classify(1.0, t) == Verdict::Same);
}

TEST_CASE("default sweep") {
  const auto t = daam::default_sweep();
  REQUIRE(t.size() == 9);
  CHECK(t.front() == 0.1);
  CHECK(t[2] == 0.3);
  CHECK(t.back() == 0.9);
}

TEST_CASE("calibration") {
  const auto sweep = daam::default_sweep();
  SUBCASE("separable scores pick 0.9") {
    const std::vector<double> scores = {0.95, 0.95, 0.05, 0.05};
    const std::vector<PairLabel> labels = {PairLabel::Same, PairLabel::Same, PairLabel::Different,
                                           PairLabel::Different};
    const auto r = daam::calibrate_scores(scores, labels, sweep);
    CHECK(r.chosen_threshold == 0.9);
    for (const auto& row : r.table) {
      CHECK(row.precision == 1.0);
      CHECK(row.recall == 1.0);
    }
  }
  SUBCASE("identical scores: zero denominators count as 0") {
    const std::vector<double> scores = {0.5, 0.5, 0.5};
    const std::vector<PairLabel> labels = {PairLabel::Same, PairLabel::Different, PairLabel::Different};
    const auto r = daam::calibrate_scores(scores, labels, sweep);
    // T <= 0.5: all positive, P = 1/3, R = 1. T > 0.5: none positive, P = R = 0.
    CHECK(r.table[4].precision == doctest::Approx(1.0 / 3.0));
    CHECK(r.table[5].precision == 0.0);
    CHECK(r.table[5].recall == 0.0);
    CHECK(r.chosen_threshold == 0.9);
  }
  SUBCASE("one label only") {
    const std::vector<double> scores = {0.5, 0.7};
    const std::vector<PairLabel> labels = {PairLabel::Same, PairLabel::Same};
    CHECK_THROWS_AS(daam::calibrate_scores(scores, labels, sweep), DegenerateLabels);
  }
  SUBCASE("chosen threshold minimises |P - R|") {
    const Dataset d = test::synthetic(20, 10, 0.9, 0.9, 42);
    const auto r = daam::calibrate(d, generate_pairs(d, PairStrategy::balanced(1), 42));
    double best = 2.0;
    for (const auto& row : r.table) best = std::min(best, std::abs(row.precision - row.recall));
    for (const auto& row : r.table) {
      if (row.threshold == r.chosen_threshold) CHECK(std::abs(row.precision - row.recall) == best);
      CHECK(row.tp + row.fp + row.tn + row.fn == 1800);
    }
    // Pinned from the first run of this configuration.
    CHECK(r.chosen_threshold == 0.8);
  }
  SUBCASE("sweep csv") {
    const std::vector<double> scores = {0.95, 0.05};
    const std::vector<PairLabel> labels = {PairLabel::Same, PairLabel::Different};
    const std::string csv = daam::format_sweep_csv(daam::calibrate_scores(scores, labels, sweep));
    CHECK(csv.rfind("threshold,TP,FP,TN,FN,precision,recall\n0.1,1,0,1,0,1.0000,1.0000\n", 0) == 0);
  }
}

TEST_CASE("same-writer pairs score higher on consistent data") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Dataset d = test::synthetic(10, 6, 0.8, 0.8, seed);
    const PairSet p = generate_pairs(d, PairStrategy::all_pairs(), seed);
    const auto scores = daam::score_pairs(d, p);
    double same = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) (p.pairs[i].label == PairLabel::Same ? same : diff) += scores[i];
    CHECK(same / static_cast<double>(p.same_count) > diff / static_cast<double>(p.different_count));
  }
}

TEST_CASE("ocs parsing") {
  CHECK(daam::parse_ocs_mode("sum") == daam::OcsMode::Sum);
  CHECK(daam::to_string(daam::OcsMode::Mean) == "mean");
  CHECK_THROWS_AS(daam::parse_ocs_mode("max"), ValidationError);
}
