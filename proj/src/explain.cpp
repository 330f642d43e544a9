#include "veriscribe/explain.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"

namespace veriscribe {

using nlohmann::json;

namespace {

std::string record_id(const SampleRecord& r) { return r.writer_id + "/" + r.sample_id; }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

double top_probability(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

}  // namespace

VerificationReport explain_daam(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema,
                                double threshold, double salience, daam::OcsMode mode) {
  const daam::Score score = daam::score_pair(q, k, schema, mode);
  VerificationReport report;
  report.method = Method::Daam;
  report.questioned_id = record_id(q);
  report.known_id = record_id(k);
  report.overall = score.overall;
  report.threshold = threshold;
  report.verdict = daam::classify(score.overall, threshold);
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const FeatureDef& f = schema.feature(j);
    FeatureExplanation e;
    e.feature = f.name;
    e.q_class = f.class_labels[static_cast<std::size_t>(q.labels[j])];
    e.k_class = f.class_labels[static_cast<std::size_t>(k.labels[j])];
    const auto qs = q.soft_of(schema, j);
    const auto ks = k.soft_of(schema, j);
    e.q_soft.assign(qs.begin(), qs.end());
    e.k_soft.assign(ks.begin(), ks.end());
    e.contribution = score.per_feature[j];
    if (e.contribution < salience) report.lowlights.push_back(f.name);
    report.per_feature.push_back(std::move(e));
  }
  return report;
}

VerificationReport explain_laam(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema,
                                const laam::LaamModel& model, double tau, std::size_t bottom) {
  const laam::DistanceVector d = laam::distance_vector(q, k, schema);
  VerificationReport report;
  report.method = Method::Laam;
  report.questioned_id = record_id(q);
  report.known_id = record_id(k);
  report.overall = laam::llr(model.same, model.different, d);
  report.threshold = tau;
  report.verdict = report.overall >= tau ? Verdict::Same : Verdict::Different;

  std::vector<std::pair<double, std::size_t>> negatives;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const FeatureDef& f = schema.feature(j);
    FeatureExplanation e;
    e.feature = f.name;
    e.q_class = f.class_labels[static_cast<std::size_t>(q.labels[j])];
    e.k_class = f.class_labels[static_cast<std::size_t>(k.labels[j])];
    e.distance_code = laam::code_label(f.cardinality, d.codes[j]);
    e.log_same = model.same.log_factor(j, d);
    e.log_diff = model.different.log_factor(j, d);
    e.contribution = e.log_same - e.log_diff;
    if (e.contribution < 0.0) negatives.emplace_back(e.contribution, j);
    report.per_feature.push_back(std::move(e));
  }
  std::sort(negatives.begin(), negatives.end());
  for (std::size_t i = 0; i < negatives.size() && i < bottom; ++i) {
    report.lowlights.push_back(schema.feature(negatives[i].second).name);
  }
  return report;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "text") return ReportFormat::Text;
  if (text == "json") return ReportFormat::Json;
  if (text == "plotdata") return ReportFormat::PlotData;
  throw ValidationError("unknown report format '" + std::string(text) + "' (text|json|plotdata)");
}

std::string render_text(const VerificationReport& r) {
  const bool is_daam = r.method == Method::Daam;
  std::string out;
  out += "method:     " + std::string(to_string(r.method)) + "\n";
  out += "questioned: " + r.questioned_id + "\n";
  out += "known:      " + r.known_id + "\n\n";
  out += pad("feature", 18) + pad("questioned", 18) + pad("known", 18) +
         (is_daam ? "similarity\n" : "code  log-ratio\n");
  for (const FeatureExplanation& e : r.per_feature) {
    out += pad(e.feature, 18) + pad(e.q_class, 18) + pad(e.k_class, 18);
    if (is_daam) {
      const int bar = static_cast<int>(e.contribution * 20.0 + 0.5);
      out += format_fixed(e.contribution, 4) + "  " + std::string(static_cast<std::size_t>(std::max(bar, 0)), '#');
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%+.4f", e.contribution);
      out += pad(e.distance_code, 6) + buf;
    }
    out += '\n';
  }
  out += "\n";
  out += (is_daam ? "overall similarity: " : "log-likelihood ratio: ") + format_fixed(r.overall, 4) + "\n";
  out += "threshold: " + format_shortest(r.threshold) + "\n";
  out += "verdict: " + std::string(to_string(r.verdict)) + "\n";
  out += "lowlights:";
  if (r.lowlights.empty()) out += " none";
  for (std::size_t i = 0; i < r.lowlights.size(); ++i) out += (i ? ", " : " ") + r.lowlights[i];
  out += "\n";
  return out;
}

std::string render_json(const VerificationReport& r) {
  json features = json::array();
  for (const FeatureExplanation& e : r.per_feature) {
    json f = {{"feature", e.feature}, {"questioned", e.q_class}, {"known", e.k_class}, {"contribution", e.contribution}};
    if (r.method == Method::Daam) {
      f["questioned_soft"] = e.q_soft;
      f["known_soft"] = e.k_soft;
    } else {
      f["distance_code"] = e.distance_code;
      f["log_same"] = e.log_same;
      f["log_different"] = e.log_diff;
    }
    features.push_back(std::move(f));
  }
  json doc = {{"method", to_string(r.method)}, {"questioned", r.questioned_id}, {"known", r.known_id},
              {"features", std::move(features)},  {"overall", r.overall},         {"threshold", r.threshold},
              {"verdict", to_string(r.verdict)},   {"lowlights", r.lowlights}};
  return doc.dump(2) + "\n";
}

std::string render_plotdata(const VerificationReport& r) {
  std::string out;
  if (r.method == Method::Daam) {
    out = "feature,q_class,q_score,k_class,k_score,similarity\n";
    for (const FeatureExplanation& e : r.per_feature) {
      out += e.feature + "," + e.q_class + "," + format_fixed(top_probability(e.q_soft), 4) + "," + e.k_class + "," +
             format_fixed(top_probability(e.k_soft), 4) + "," + format_fixed(e.contribution, 4) + "\n";
    }
  } else {
    out = "feature,q_class,k_class,code,log_same,log_different,contribution\n";
    for (const FeatureExplanation& e : r.per_feature) {
      out += e.feature + "," + e.q_class + "," + e.k_class + "," + e.distance_code + "," +
             format_fixed(e.log_same, 6) + "," + format_fixed(e.log_diff, 6) + "," + format_fixed(e.contribution, 6) +
             "\n";
    }
  }
  return out;
}

std::string render(const VerificationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Text:
      return render_text(report);
    case ReportFormat::Json:
      return render_json(report);
    case ReportFormat::PlotData:
      return render_plotdata(report);
  }
  return {};
}

}  // namespace veriscribe
