#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "helpers.hpp"
#include "veriscribe/explain.hpp"

using namespace veriscribe;

TEST_CASE("daam explanation") {
  const FeatureSchema& schema = builtin_schema();
  LabelVector a{};
  SUBCASE("identical records") {
    const auto r = test::make_record("w", "1", a, 0.8);
    const auto rep = explain_daam(r, r, schema, 0.8);
    REQUIRE(rep.per_feature.size() == 15);
    for (const auto& e : rep.per_feature) CHECK(e.contribution == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rep.lowlights.empty());
    CHECK(rep.verdict == Verdict::Same);
  }
  SUBCASE("weak features are lowlights") {
    LabelVector b = a;
    b[7] = 1;   // is_lowercase
    b[11] = 2;  // staff_of_d
    b[12] = 3;  // exit_stroke_d
    const auto q = test::make_record("w", "1", a, 0.9), k = test::make_record("v", "2", b, 0.9);
    const auto rep = explain_daam(q, k, schema, 0.9);
    CHECK(rep.lowlights == std::vector<std::string>{"is_lowercase", "staff_of_d", "exit_stroke_d"});
    CHECK(rep.overall == daam::score_pair(q, k, schema).overall);
    CHECK(rep.verdict == daam::classify(rep.overall, 0.9));
    const auto swapped = explain_daam(k, q, schema, 0.9);
    CHECK(swapped.overall == rep.overall);
    CHECK(swapped.lowlights == rep.lowlights);
    CHECK(swapped.questioned_id == "v/2");
  }
}

TEST_CASE("laam explanation") {
  const FeatureSchema& schema = builtin_schema();
  const Dataset d = test::synthetic(20, 10, 0.9, 0.9, 31);
  const auto model = laam::train(d, generate_pairs(d, PairStrategy::balanced(1), 31), 1.0);
  SUBCASE("contributions sum to the llr") {
    for (std::size_t i = 0; i + 1 < 40; ++i) {
      const auto rep = explain_laam(d[i], d[i + 1], schema, model);
      double sum = 0.0;
      for (const auto& e : rep.per_feature) sum += e.contribution;
      CHECK(std::abs(sum - rep.overall) <= 1e-12);
      CHECK(rep.overall == laam::llr(model.same, model.different, laam::distance_vector(d[i], d[i + 1], schema)));
      CHECK(rep.lowlights.size() <= 3);
      for (std::size_t k = 1; k < rep.lowlights.size(); ++k) {
        const auto c = [&](const std::string& n) { return rep.per_feature[static_cast<std::size_t>(schema.find(n))].contribution; };
        CHECK(c(rep.lowlights[k - 1]) <= c(rep.lowlights[k]));
        CHECK(c(rep.lowlights[k]) < 0.0);
      }
    }
  }
  SUBCASE("identical networks contribute nothing") {
    const laam::TrainedBayesNet as_diff(model.same.structure(), laam::Hypothesis::DifferentWriter, model.same.cpds(),
                                        0, 1.0);
    const auto rep = explain_laam(d[0], d[15], schema, laam::LaamModel{model.same, as_diff});
    for (const auto& e : rep.per_feature) CHECK(e.contribution == 0.0);
    CHECK(rep.overall == 0.0);
    CHECK(rep.lowlights.empty());
  }
}

TEST_CASE("a feature that always differs across writers counts against different-writer pairs") {
  // Four writers, each with its own slantness class.
  std::vector<SampleRecord> rs = test::synthetic(4, 8, 0.6, 0.9, 41).records();
  for (auto& r : rs) r.labels[3] = std::stoi(r.writer_id.substr(1)) - 1;
  const Dataset d(builtin_schema(), rs);
  const PairSet p = generate_pairs(d, PairStrategy::all_pairs(), 1);
  const auto model = laam::train(d, p, 1.0);
  double sum = 0.0;
  for (const auto& rp : p.filtered(PairLabel::Different).pairs) {
    sum += explain_laam(d[rp.first], d[rp.second], d.schema(), model).per_feature[3].contribution;
  }
  CHECK(sum < 0.0);
}

TEST_CASE("renderers") {
  const FeatureSchema& schema = builtin_schema();
  LabelVector a{};
  LabelVector b = a;
  b[11] = 2;
  const auto rep = explain_daam(test::make_record("w", "1", a, 0.9), test::make_record("v", "2", b, 0.9), schema, 0.8);
  const std::string text = render(rep, ReportFormat::Text);
  CHECK(text.find("verdict: same") != std::string::npos);
  CHECK(text.find("lowlights: staff_of_d") != std::string::npos);
  const auto doc = nlohmann::json::parse(render(rep, ReportFormat::Json));
  CHECK(doc["features"].size() == 15);
  CHECK(doc["verdict"] == "same");
  const std::string plot = render(rep, ReportFormat::PlotData);
  CHECK(plot.rfind("feature,q_class,q_score,k_class,k_score,similarity\n", 0) == 0);
  CHECK(std::count(plot.begin(), plot.end(), '\n') == 16);
  CHECK(parse_report_format("plotdata") == ReportFormat::PlotData);
  CHECK_THROWS(parse_report_format("html"));
}
