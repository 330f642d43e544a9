#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "veriscribe/daam.hpp"
#include "veriscribe/data_io.hpp"
#include "veriscribe/evaluation.hpp"
#include "veriscribe/laam.hpp"

namespace veriscribe {

struct FeatureExplanation {
  std::string feature;
  std::string q_class;  // class label of the hard assignment
  std::string k_class;
  std::vector<double> q_soft;  // empty for LAAM
  std::vector<double> k_soft;
  std::string distance_code;  // LAAM only, e.g. "12"
  double log_same = 0.0;      // LAAM only
  double log_diff = 0.0;      // LAAM only
  /// DAAM: cosine similarity in [0,1]. LAAM: log factor under the same-writer
  /// network minus the different-writer network.
  double contribution = 0.0;
};

struct VerificationReport {
  Method method = Method::Daam;
  std::string questioned_id;
  std::string known_id;
  std::vector<FeatureExplanation> per_feature;
  double overall = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::Different;
  std::vector<std::string> lowlights;
};

inline constexpr double kDefaultSalience = 0.5;
inline constexpr std::size_t kDefaultLaamLowlights = 3;

/// Per-feature similarities; lowlights are features below `salience`, in feature order.
VerificationReport explain_daam(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema,
                                double threshold, double salience = kDefaultSalience,
                                daam::OcsMode mode = daam::OcsMode::Mean);

/// Per-factor LLR decomposition; lowlights are up to `bottom` negative
/// contributions, most negative first. Contributions sum to the LLR.
VerificationReport explain_laam(const SampleRecord& q, const SampleRecord& k, const FeatureSchema& schema,
                                const laam::LaamModel& model, double tau = 0.0,
                                std::size_t bottom = kDefaultLaamLowlights);

enum class ReportFormat { Text, Json, PlotData };
ReportFormat parse_report_format(std::string_view text);

std::string render_text(const VerificationReport& report);
std::string render_json(const VerificationReport& report);
/// CSV for paired per-feature bar charts.
std::string render_plotdata(const VerificationReport& report);
std::string render(const VerificationReport& report, ReportFormat format);

}  // namespace veriscribe
