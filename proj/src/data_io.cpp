#include "veriscribe/data_io.hpp"

#include <cmath>
#include <set>
#include <utility>

#include <json.hpp>

#include "veriscribe/errors.hpp"
#include "veriscribe/io_util.hpp"

namespace veriscribe {

using nlohmann::json;

namespace {

std::string record_name(const SampleRecord& r) { return r.writer_id + "/" + r.sample_id; }

void check_id(const std::string& id, std::string_view what, std::size_t line) {
  if (id.empty()) throw ParseError(std::string(what) + " is empty", line);
  if (id.find_first_of(",\n\r\"") != std::string::npos) {
    throw ParseError(std::string(what) + " '" + id + "' contains a reserved character", line);
  }
}

std::string labels_header() {
  std::string h = "writer_id,sample_id";
  for (std::size_t j = 0; j < kFeatureCount; ++j) h += "," + feature_token(static_cast<int>(j));
  return h;
}

}  // namespace

std::span<const double> SampleRecord::soft_of(const FeatureSchema& schema, std::size_t j) const {
  if (!has_soft()) throw MissingSoft("record " + record_name(*this) + " has no soft vectors");
  return std::span<const double>(soft).subspan(schema.soft_offset(j), static_cast<std::size_t>(schema.cardinality(j)));
}

void validate_record(const SampleRecord& record, const FeatureSchema& schema) {
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const int label = record.labels[j];
    if (label < 0 || label >= schema.cardinality(j)) {
      throw ValidationError("record " + record_name(record) + ", feature " + feature_token(static_cast<int>(j)) +
                            " (" + schema.feature(j).name + "): label " + std::to_string(label) +
                            " outside [0," + std::to_string(schema.cardinality(j)) + ")");
    }
  }
  if (!record.has_soft()) return;
  if (record.soft.size() != schema.total_classes()) {
    throw ValidationError("record " + record_name(record) + ": soft vectors have " +
                          std::to_string(record.soft.size()) + " entries, expected " +
                          std::to_string(schema.total_classes()));
  }
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double sum = 0.0;
    for (double p : record.soft_of(schema, j)) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw ValidationError("record " + record_name(record) + ", feature " + feature_token(static_cast<int>(j)) +
                              ": negative or non-finite probability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ValidationError("record " + record_name(record) + ", feature " + feature_token(static_cast<int>(j)) +
                            ": probabilities sum to " + format_shortest(sum));
    }
  }
}

LabelVector argmax_assignment(const SampleRecord& record, const FeatureSchema& schema) {
  LabelVector out{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const auto v = record.soft_of(schema, j);
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[best]) best = i;
    }
    out[j] = static_cast<int>(best);
  }
  return out;
}

Dataset::Dataset(FeatureSchema schema, std::vector<SampleRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
  std::set<std::pair<std::string, std::string>> keys;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const SampleRecord& r = records_[i];
    validate_record(r, schema_);
    if (!keys.emplace(r.writer_id, r.sample_id).second) {
      throw ValidationError("duplicate record " + record_name(r));
    }
    index_[r.writer_id].push_back(i);
  }
}

bool Dataset::all_soft() const noexcept {
  for (const auto& r : records_) {
    if (!r.has_soft()) return false;
  }
  return true;
}

std::size_t Dataset::find(std::string_view writer_id, std::string_view sample_id) const {
  const auto it = index_.find(std::string(writer_id));
  if (it == index_.end()) return records_.size();
  for (std::size_t pos : it->second) {
    if (records_[pos].sample_id == sample_id) return pos;
  }
  return records_.size();
}

Dataset Dataset::subset(std::span<const std::size_t> positions) const {
  std::vector<SampleRecord> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(records_.at(p));
  return Dataset(schema_, std::move(out));
}

std::string format_labels_csv(const Dataset& dataset) {
  std::string out = labels_header();
  out += '\n';
  for (const auto& r : dataset.records()) {
    out += r.writer_id;
    out += ',';
    out += r.sample_id;
    for (int label : r.labels) {
      out += ',';
      out += std::to_string(label);
    }
    out += '\n';
  }
  return out;
}

Dataset parse_labels_csv(std::string_view text, const FeatureSchema& schema) {
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != labels_header()) {
    throw ParseError("expected header '" + labels_header() + "'", 1);
  }
  std::vector<SampleRecord> records;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t lineno = n + 1;
    const std::string_view line = trim(lines[n]);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2 + kFeatureCount) {
      throw ParseError("expected " + std::to_string(2 + kFeatureCount) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    }
    SampleRecord r;
    r.writer_id = std::string(trim(fields[0]));
    r.sample_id = std::string(trim(fields[1]));
    check_id(r.writer_id, "writer_id", lineno);
    check_id(r.sample_id, "sample_id", lineno);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      r.labels[j] = static_cast<int>(parse_integer(fields[2 + j], lineno));
    }
    records.push_back(std::move(r));
  }
  return Dataset(schema, std::move(records));
}

Dataset read_labels_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  return parse_labels_csv(read_text_file(path), schema);
}

void write_labels_csv(const std::filesystem::path& path, const Dataset& dataset) {
  write_text_file_atomic(path, format_labels_csv(dataset));
}

std::string format_soft_records(const Dataset& dataset) {
  const FeatureSchema& schema = dataset.schema();
  json header = {{"format", kSoftFormatName}, {"version", kSoftFormatVersion}};
  std::string out = header.dump();
  out += '\n';
  for (const auto& r : dataset.records()) {
    json soft = json::array();
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      json vec = json::array();
      for (double p : r.soft_of(schema, j)) vec.push_back(round_significant(p, kSoftDigits));
      soft.push_back(std::move(vec));
    }
    json line = {{"writer_id", r.writer_id}, {"sample_id", r.sample_id}, {"soft", std::move(soft)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

Dataset parse_soft_records(std::string_view text, const FeatureSchema& schema) {
  const auto lines = split(text, '\n');
  std::vector<SampleRecord> records;
  bool first = true;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t lineno = n + 1;
    const std::string_view line = trim(lines[n]);
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", lineno);

    if (first && obj.contains("format")) {
      first = false;
      if (obj.size() != 2 || obj.value("format", "") != kSoftFormatName || !obj.contains("version")) {
        throw ParseError("bad soft-record header", lineno);
      }
      if (obj["version"] != kSoftFormatVersion) {
        throw ParseError("unsupported soft-record version " + obj["version"].dump(), lineno);
      }
      continue;
    }
    first = false;

    for (const auto& item : obj.items()) {
      if (item.key() != "writer_id" && item.key() != "sample_id" && item.key() != "soft") {
        throw ParseError("unknown key '" + item.key() + "'", lineno);
      }
    }
    if (!obj.contains("writer_id") || !obj["writer_id"].is_string() || !obj.contains("sample_id") ||
        !obj["sample_id"].is_string() || !obj.contains("soft") || !obj["soft"].is_array()) {
      throw ParseError("record needs string writer_id, sample_id and an array soft", lineno);
    }
    SampleRecord r;
    r.writer_id = obj["writer_id"].get<std::string>();
    r.sample_id = obj["sample_id"].get<std::string>();
    check_id(r.writer_id, "writer_id", lineno);
    check_id(r.sample_id, "sample_id", lineno);
    const json& soft = obj["soft"];
    if (soft.size() != kFeatureCount) {
      throw ValidationError("record " + record_name(r) + ": expected 15 soft vectors, got " +
                            std::to_string(soft.size()));
    }
    r.soft.reserve(schema.total_classes());
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const json& vec = soft[j];
      const std::string where = "record " + record_name(r) + ", feature " + feature_token(static_cast<int>(j));
      if (!vec.is_array()) throw ParseError(where + ": soft vector is not an array", lineno);
      if (vec.size() != static_cast<std::size_t>(schema.cardinality(j))) {
        throw ValidationError(where + ": vector length " + std::to_string(vec.size()) + ", expected " +
                              std::to_string(schema.cardinality(j)));
      }
      std::vector<double> v;
      double sum = 0.0;
      for (const json& x : vec) {
        if (!x.is_number()) throw ParseError(where + ": non-numeric probability", lineno);
        const double p = x.get<double>();
        if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError(where + ": negative or non-finite probability");
        v.push_back(p);
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError(where + ": probabilities sum to " + format_shortest(sum));
      }
      for (double p : v) r.soft.push_back(p / sum);
    }
    r.labels = argmax_assignment(r, schema);
    records.push_back(std::move(r));
  }
  return Dataset(schema, std::move(records));
}

Dataset read_soft_records(const std::filesystem::path& path, const FeatureSchema& schema) {
  return parse_soft_records(read_text_file(path), schema);
}

void write_soft_records(const std::filesystem::path& path, const Dataset& dataset) {
  write_text_file_atomic(path, format_soft_records(dataset));
}

Dataset read_dataset(const std::filesystem::path& path, const FeatureSchema& schema) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_soft_records(text, schema);
  return parse_labels_csv(text, schema);
}

}  // namespace veriscribe
