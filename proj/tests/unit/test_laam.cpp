#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"
#include "veriscribe/laam.hpp"

using namespace veriscribe;
using laam::DistanceVector;
using laam::Hypothesis;

namespace {

std::vector<laam::CpdTable> uniform_cpds(const laam::Structure& st) {
  std::vector<laam::CpdTable> cpds;
  for (std::size_t j = 0; j < st.node_count(); ++j) {
    laam::CpdTable t;
    t.node = static_cast<int>(j);
    t.parents = st.parents(j);
    t.code_count = st.code_count(j);
    t.row_count = st.row_count(j);
    t.probs.assign(static_cast<std::size_t>(t.row_count * t.code_count), 1.0 / t.code_count);
    cpds.push_back(std::move(t));
  }
  return cpds;
}

laam::LaamModel trained_model(std::uint64_t seed, double alpha = 1.0) {
  const Dataset d = test::synthetic(20, 10, 0.9, 0.9, seed);
  return laam::train(d, generate_pairs(d, PairStrategy::balanced(1), seed), alpha);
}

std::vector<DistanceVector> random_vectors(const laam::Structure& st, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DistanceVector> out(n);
  for (auto& d : out) {
    for (std::size_t j = 0; j < st.node_count(); ++j) {
      d.codes[j] = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(st.code_count(j))));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("pair codes") {
  CHECK(laam::pair_code(4, 1, 2) == 5);
  CHECK(laam::pair_code(4, 2, 1) == 5);
  CHECK(laam::code_label(4, 5) == "12");
  CHECK(laam::pair_code(2, 0, 0) == 0);
  CHECK(laam::pair_code(4, 3, 3) == 9);
  for (int n : {2, 3, 4}) {
    for (int c = 0; c < distance_code_count(n); ++c) {
      const auto [lo, hi] = laam::decode_pair_code(n, c);
      CHECK(lo <= hi);
      CHECK(laam::pair_code(n, lo, hi) == c);
    }
  }
  CHECK_THROWS_AS(laam::pair_code(3, 0, 3), OutOfRange);
  CHECK_THROWS_AS(laam::encode_distance(10, 4, 0, builtin_schema()), OutOfRange);
  CHECK(laam::encode_distance(10, 2, 1, builtin_schema()) == laam::DistanceCode{10, 5});
}

TEST_CASE("distance vectors") {
  const FeatureSchema& schema = builtin_schema();
  LabelVector a{};
  a[10] = 1;  // Retraced
  LabelVector b = a;
  b[10] = 2;  // Loopy
  const auto q = test::make_record("w", "1", a), k = test::make_record("v", "2", b);
  const DistanceVector d = laam::distance_vector(q, k, schema);
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const auto [lo, hi] = laam::decode_pair_code(schema.cardinality(j), d.codes[j]);
    if (j == 10) {
      CHECK(laam::code_label(4, d.codes[j]) == "12");
    } else {
      CHECK(lo == hi);
    }
  }
  CHECK(laam::distance_vector(k, q, schema) == d);
}

TEST_CASE("structure") {
  const auto st = laam::Structure::from_schema(builtin_schema());
  CHECK(st.row_count(6) == 6 * 6 * 3);
  CHECK(st.row_count(0) == 1);
  CHECK_THROWS_AS(laam::Structure({3, 3}, {{0, 1}, {1, 0}}), CyclicStructure);
  CHECK_THROWS_AS(laam::Structure({3, 3}, {{0, 0}}), CyclicStructure);
  CHECK_THROWS_AS(laam::Structure({3, 3, 3, 3, 3}, {{0, 4}, {1, 4}, {2, 4}, {3, 4}}), ValidationError);
  // Last parent varies fastest.
  DistanceVector d{};
  d.codes[4] = 1;
  d.codes[5] = 2;
  d.codes[14] = 1;
  CHECK(st.row_index(6, d) == (1 * 6 + 2) * 3 + 1);
  long long params = 0;
  for (std::size_t j = 0; j < kFeatureCount; ++j) params += st.row_count(j) * (st.code_count(j) - 1);
  CHECK(st.parameter_count() == params);
}

TEST_CASE("fit") {
  const auto st = laam::Structure::from_schema(builtin_schema());
  SUBCASE("alpha 0 on constant data") {
    const std::vector<DistanceVector> v(5, DistanceVector{});
    const auto bn = laam::fit(v, st, Hypothesis::SameWriter, 0.0);
    CHECK(bn.cpd(0).prob(0, 0) == 1.0);
    CHECK(bn.cpd(1).prob(0, 0) == 1.0);
    // A row never observed stays uniform.
    CHECK(bn.cpd(1).prob(1, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("alpha 1 on an empty row is uniform") {
    const std::vector<DistanceVector> v(3, DistanceVector{});
    const auto bn = laam::fit(v, st, Hypothesis::SameWriter, 1.0);
    for (int c = 0; c < 3; ++c) CHECK(bn.cpd(1).prob(2, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("alpha 1, root counts (8, 1, 1)") {
    std::vector<DistanceVector> v(10, DistanceVector{});
    v[8].codes[0] = 1;
    v[9].codes[0] = 2;
    const auto bn = laam::fit(v, st, Hypothesis::SameWriter, 1.0);
    // (8 + 1) / (10 + 3), (1 + 1) / 13, (1 + 1) / 13
    CHECK(bn.cpd(0).prob(0, 0) == doctest::Approx(9.0 / 13.0).epsilon(1e-15));
    CHECK(bn.cpd(0).prob(0, 1) == doctest::Approx(2.0 / 13.0).epsilon(1e-15));
    CHECK(bn.cpd(0).prob(0, 2) == doctest::Approx(2.0 / 13.0).epsilon(1e-15));
  }
  SUBCASE("rows sum to one") {
    const auto model = trained_model(3);
    for (const auto* bn : {&model.same, &model.different}) {
      for (const auto& t : bn->cpds()) {
        for (int r = 0; r < t.row_count; ++r) {
          double s = 0.0;
          for (double p : t.row(r)) s += p;
          CHECK(std::abs(s - 1.0) <= 1e-9);
        }
      }
    }
  }
  SUBCASE("errors") {
    const std::vector<DistanceVector> none;
    CHECK_THROWS_AS(laam::fit(none, st, Hypothesis::SameWriter), EmptyTrainingSet);
    const Dataset d = test::synthetic(3, 3, 0.9, 0.9, 1);
    const PairSet p = generate_pairs(d, PairStrategy::all_pairs(), 1);
    CHECK_THROWS_AS(laam::fit(d, p, Hypothesis::SameWriter), HypothesisMismatch);
    CHECK(laam::fit(d, p.filtered(PairLabel::Same), Hypothesis::SameWriter).training_pairs() == 9);
  }
}

TEST_CASE("joint log probability") {
  const auto st = laam::Structure::from_schema(builtin_schema());
  const laam::TrainedBayesNet uniform(st, Hypothesis::SameWriter, uniform_cpds(st), 0, 0.0);
  const double expected = 8 * std::log(1.0 / 3) + 4 * std::log(1.0 / 6) + 3 * std::log(1.0 / 10);
  for (const auto& d : random_vectors(st, 20, 1)) {
    CHECK(uniform.joint_log_prob(d) == doctest::Approx(expected).epsilon(1e-14));
  }
  const auto model = trained_model(5);
  double max_product = 0.0;
  for (const auto& t : model.same.cpds()) max_product += std::log(*std::max_element(t.probs.begin(), t.probs.end()));
  for (const auto& d : random_vectors(st, 200, 2)) {
    const double lp = model.same.joint_log_prob(d);
    CHECK(std::isfinite(lp));
    CHECK(lp <= max_product);
    double sum = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) sum += model.same.log_factor(j, d);
    CHECK(lp == sum);
  }
  DistanceVector bad{};
  bad.codes[0] = 3;
  CHECK_THROWS_AS(model.same.joint_log_prob(bad), NonconformantVector);
}

TEST_CASE("llr") {
  const auto st = laam::Structure::from_schema(builtin_schema());
  const auto model = trained_model(6);
  const laam::TrainedBayesNet same_as_diff(st, Hypothesis::DifferentWriter, model.same.cpds(), 0, 1.0);
  const laam::TrainedBayesNet diff_as_same(st, Hypothesis::SameWriter, model.different.cpds(), 0, 1.0);
  const auto vectors = random_vectors(st, 300, 3);
  for (const auto& d : vectors) {
    CHECK(laam::llr(model.same, same_as_diff, d) == 0.0);
    CHECK(laam::llr(model.same, model.different, d) + laam::llr(diff_as_same, same_as_diff, d) == 0.0);
  }
  CHECK_THROWS_AS(laam::llr(model.different, model.same, vectors[0]), HypothesisMismatch);
  const auto batch = laam::llr_batch(model.same, model.different, vectors);
  for (std::size_t i = 0; i < vectors.size(); ++i) CHECK(batch[i] == laam::llr(model.same, model.different, vectors[i]));
}

TEST_CASE("classify boundary") {
  const auto st = laam::Structure::from_schema(builtin_schema());
  const laam::TrainedBayesNet a(st, Hypothesis::SameWriter, uniform_cpds(st), 0, 0.0);
  const laam::TrainedBayesNet b(st, Hypothesis::DifferentWriter, uniform_cpds(st), 0, 0.0);
  CHECK(laam::classify(a, b, DistanceVector{}, 0.0) == Verdict::Same);
  CHECK(laam::classify(a, b, DistanceVector{}, 3.2) == Verdict::Different);
  CHECK(laam::classify(a, b, DistanceVector{}, -3.2) == Verdict::Same);
}

TEST_CASE("same-writer pairs have positive mean llr") {
  const Dataset train = test::synthetic(30, 10, 0.9, 0.9, 21);
  const Dataset test_set = test::synthetic(10, 10, 0.9, 0.9, 22);
  const auto model = laam::train(train, generate_pairs(train, PairStrategy::balanced(1), 1), 1.0);
  const PairSet p = generate_pairs(test_set, PairStrategy::balanced(1), 2);
  const auto llrs = laam::llr_batch(model.same, model.different, laam::distance_vectors(test_set, p));
  double same = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) (p.pairs[i].label == PairLabel::Same ? same : diff) += llrs[i];
  CHECK(same > 0.0);
  CHECK(diff < 0.0);
}

TEST_CASE("quantile sweep and threshold calibration") {
  std::vector<double> llrs;
  for (int i = 1; i <= 100; ++i) llrs.push_back(i);
  const auto q = laam::quantile_sweep(llrs);
  REQUIRE(q.size() == 9);
  CHECK(q[0] == 10.0);
  CHECK(q[4] == 50.0);
  CHECK(q[8] == 90.0);

  const Dataset d = test::synthetic(20, 10, 0.9, 0.9, 8);
  const auto model = laam::train(d, generate_pairs(d, PairStrategy::balanced(1), 1), 1.0);
  const PairSet val = generate_pairs(d, PairStrategy::balanced(1), 2);
  const auto result = laam::calibrate_threshold(model, d, val);
  CHECK(result.table.size() == 9);
  double best = 2.0;
  for (const auto& row : result.table) best = std::min(best, std::abs(row.precision - row.recall));
  for (const auto& row : result.table) {
    if (row.threshold == result.chosen_threshold) CHECK(std::abs(row.precision - row.recall) == best);
  }
}

TEST_CASE("bic") {
  const FeatureSchema& schema = builtin_schema();
  const auto st = laam::Structure::from_schema(schema);
  const std::vector<Edge> none;
  auto loglik = [&](const std::vector<Edge>& edges, std::span<const DistanceVector> v) {
    std::vector<int> counts;
    for (std::size_t j = 0; j < kFeatureCount; ++j) counts.push_back(schema.code_count(j));
    const laam::Structure s(counts, edges);
    return laam::bic_score(edges, v, schema) +
           0.5 * static_cast<double>(s.parameter_count()) * std::log(static_cast<double>(v.size()));
  };
  SUBCASE("independent uniform codes favour the empty structure") {
    const auto v = random_vectors(st, 20000, 9);
    CHECK(laam::bic_score(none, v, schema) >= laam::bic_score(schema.edges(), v, schema));
  }
  SUBCASE("data from the default structure favours it") {
    const auto model = trained_model(10);
    const auto v = laam::sample_vectors(model.different, 5000, 11);
    CHECK(laam::bic_score(schema.edges(), v, schema) > laam::bic_score(none, v, schema));
  }
  SUBCASE("adding an edge never lowers the likelihood") {
    const auto v = laam::sample_vectors(trained_model(12).same, 2000, 13);
    std::vector<Edge> edges;
    double previous = loglik(edges, v);
    for (const Edge& e : schema.edges()) {
      edges.push_back(e);
      const double now = loglik(edges, v);
      CHECK(now >= previous - 1e-9 * std::abs(previous));
      previous = now;
    }
  }
  SUBCASE("cycles are rejected") {
    const auto v = random_vectors(st, 10, 1);
    CHECK_THROWS_AS(laam::bic_score({{0, 1}, {1, 0}}, v, schema), CyclicStructure);
  }
}

TEST_CASE("sampling follows the network") {
  const auto model = trained_model(14);
  const auto v = laam::sample_vectors(model.same, 40000, 15);
  std::vector<double> freq(3, 0.0);
  for (const auto& d : v) freq[static_cast<std::size_t>(d.codes[0])] += 1.0 / 40000.0;
  for (int c = 0; c < 3; ++c) CHECK(std::abs(freq[static_cast<std::size_t>(c)] - model.same.cpd(0).prob(0, c)) < 0.01);
  CHECK(laam::sample_vectors(model.same, 50, 3) == laam::sample_vectors(model.same, 50, 3));
}

TEST_CASE("model serialization") {
  const FeatureSchema& schema = builtin_schema();
  const auto model = trained_model(16, 0.5);
  const std::string text = laam::serialize_model(model);
  const auto loaded = laam::parse_model(text, schema);
  CHECK(laam::serialize_model(loaded) == text);
  CHECK(loaded.same.alpha() == 0.5);
  CHECK(loaded.same.training_pairs() == model.same.training_pairs());

  // Joint probabilities are reproduced exactly at the printed precision.
  auto rounded = [](const laam::TrainedBayesNet& bn) {
    std::vector<laam::CpdTable> cpds = bn.cpds();
    for (auto& t : cpds) {
      for (double& p : t.probs) p = round_significant(p, laam::kModelDigits);
    }
    return laam::TrainedBayesNet(bn.structure(), bn.hypothesis(), cpds, bn.training_pairs(), bn.alpha());
  };
  const auto same_r = rounded(model.same);
  const auto diff_r = rounded(model.different);
  for (const auto& d : random_vectors(model.same.structure(), 500, 17)) {
    CHECK(loaded.same.joint_log_prob(d) == same_r.joint_log_prob(d));
    CHECK(loaded.different.joint_log_prob(d) == diff_r.joint_log_prob(d));
    CHECK(loaded.same.joint_log_prob(d) == doctest::Approx(model.same.joint_log_prob(d)).epsilon(1e-10));
  }

  test::TempDir dir;
  laam::save_model(dir / "m.json", model);
  CHECK(read_text_file(dir / "m.json") == text);
  CHECK(laam::serialize_model(laam::load_model(dir / "m.json", schema)) == text);

  SUBCASE("version and schema are checked") {
    std::string bad = text;
    bad.replace(bad.find("\"version\": 1"), 12, "\"version\": 2");
    CHECK_THROWS_AS(laam::parse_model(bad, schema), ParseError);
    std::string edges = text;
    edges.replace(edges.find("\"f1->f2\""), 8, "\"f2->f1\"");
    CHECK_THROWS(laam::parse_model(edges, schema));
    CHECK_THROWS_AS(laam::parse_model("{", schema), ParseError);
  }
}
