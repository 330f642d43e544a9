#include "veriscribe/synthetic.hpp"

#include <cstdio>

#include "veriscribe/errors.hpp"
#include "veriscribe/rng.hpp"

namespace veriscribe {

namespace {

std::string padded_id(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%03zu", prefix, n);
  return buf;
}

}  // namespace

std::vector<WriterProfile> generate_profiles(const FeatureSchema& schema, std::size_t n_writers, double consistency,
                                             std::uint64_t seed) {
  if (n_writers < 1) throw ValidationError("need at least one writer");
  if (!(consistency >= 0.0 && consistency <= 1.0)) throw ValidationError("consistency must lie in [0,1]");

  std::vector<WriterProfile> profiles;
  profiles.reserve(n_writers);
  for (std::size_t w = 0; w < n_writers; ++w) {
    Rng rng = Rng::substream(seed, w);
    WriterProfile p;
    p.writer_id = padded_id('w', w + 1);
    p.consistency = consistency;
    p.distributions.resize(kFeatureCount);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const auto& marginal = schema.feature(j).default_marginal;
      const std::size_t home = rng.categorical(marginal);
      p.home[j] = static_cast<int>(home);
      auto& dist = p.distributions[j];
      dist.resize(marginal.size());
      for (std::size_t c = 0; c < marginal.size(); ++c) {
        dist[c] = consistency * (c == home ? 1.0 : 0.0) + (1.0 - consistency) * marginal[c];
      }
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

Dataset sample_dataset(const FeatureSchema& schema, const std::vector<WriterProfile>& profiles,
                       std::size_t samples_per_writer, std::uint64_t seed) {
  if (samples_per_writer < 1) throw ValidationError("need at least one sample per writer");
  std::vector<SampleRecord> records;
  records.reserve(profiles.size() * samples_per_writer);
  for (std::size_t w = 0; w < profiles.size(); ++w) {
    const WriterProfile& p = profiles[w];
    if (p.distributions.size() != kFeatureCount) throw SchemaMismatch("profile " + p.writer_id + " is incomplete");
    Rng rng = Rng::substream(seed, w);
    for (std::size_t s = 0; s < samples_per_writer; ++s) {
      SampleRecord r;
      r.writer_id = p.writer_id;
      r.sample_id = padded_id('s', s + 1);
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        r.labels[j] = static_cast<int>(rng.categorical(p.distributions[j]));
      }
      records.push_back(std::move(r));
    }
  }
  return Dataset(schema, std::move(records));
}

Dataset soften(const Dataset& dataset, double sharpness, std::uint64_t /*seed*/) {
  if (!(sharpness > 0.0 && sharpness <= 1.0)) throw ValidationError("sharpness must lie in (0,1]");
  const FeatureSchema& schema = dataset.schema();
  std::vector<SampleRecord> records = dataset.records();
  for (SampleRecord& r : records) {
    r.soft.assign(schema.total_classes(), 0.0);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const int n = schema.cardinality(j);
      const double floor = (1.0 - sharpness) / n;
      for (int c = 0; c < n; ++c) {
        r.soft[schema.soft_offset(j) + static_cast<std::size_t>(c)] =
            sharpness * (c == r.labels[j] ? 1.0 : 0.0) + floor;
      }
    }
  }
  return Dataset(schema, std::move(records));
}

}  // namespace veriscribe
