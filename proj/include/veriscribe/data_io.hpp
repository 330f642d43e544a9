#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veriscribe/schema.hpp"

namespace veriscribe {

using LabelVector = std::array<int, kFeatureCount>;

/// One handwriting sample: 15 hard class labels and, optionally, the 15
/// per-feature probability vectors stored back to back (schema soft offsets).
struct SampleRecord {
  std::string writer_id;
  std::string sample_id;
  LabelVector labels{};
  std::vector<double> soft;

  bool has_soft() const noexcept { return !soft.empty(); }
  /// Probability vector of feature j; record must carry soft vectors.
  std::span<const double> soft_of(const FeatureSchema& schema, std::size_t j) const;

  bool operator==(const SampleRecord&) const = default;
};

/// Validated, immutable collection of records conforming to one schema.
class Dataset {
 public:
  Dataset(FeatureSchema schema, std::vector<SampleRecord> records);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  const SampleRecord& operator[](std::size_t i) const { return records_.at(i); }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// writer_id -> positions in records(), ascending.
  const std::map<std::string, std::vector<std::size_t>>& writer_index() const noexcept { return index_; }
  std::size_t writer_count() const noexcept { return index_.size(); }
  bool all_soft() const noexcept;

  /// Position of (writer, sample), or size() if absent.
  std::size_t find(std::string_view writer_id, std::string_view sample_id) const;

  /// New dataset holding the records at `positions`, in that order.
  Dataset subset(std::span<const std::size_t> positions) const;

 private:
  FeatureSchema schema_;
  std::vector<SampleRecord> records_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

/// Throws ValidationError naming the record and feature on the first violation.
void validate_record(const SampleRecord& record, const FeatureSchema& schema);

/// Per-feature index of the largest probability, lowest index on ties.
LabelVector argmax_assignment(const SampleRecord& record, const FeatureSchema& schema);

// Labels CSV: `writer_id,sample_id,f1,...,f15`, integer class indices, LF endings.
std::string format_labels_csv(const Dataset& dataset);
Dataset parse_labels_csv(std::string_view text, const FeatureSchema& schema);
Dataset read_labels_csv(const std::filesystem::path& path, const FeatureSchema& schema);
void write_labels_csv(const std::filesystem::path& path, const Dataset& dataset);

// Soft-record file: a version header line, then one JSON object per line with
// keys writer_id, sample_id and soft (15 arrays). Probabilities carry 9
// significant digits.
inline constexpr std::string_view kSoftFormatName = "veriscribe-soft";
inline constexpr int kSoftFormatVersion = 1;
inline constexpr int kSoftDigits = 9;

std::string format_soft_records(const Dataset& dataset);
Dataset parse_soft_records(std::string_view text, const FeatureSchema& schema);
Dataset read_soft_records(const std::filesystem::path& path, const FeatureSchema& schema);
void write_soft_records(const std::filesystem::path& path, const Dataset& dataset);

/// Reads either format, deciding by content (a soft file starts with '{').
Dataset read_dataset(const std::filesystem::path& path, const FeatureSchema& schema);

}  // namespace veriscribe
