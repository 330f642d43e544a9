#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "veriscribe/data_io.hpp"

namespace veriscribe {

/// Per-writer categorical distribution for every feature.
struct WriterProfile {
  std::string writer_id;
  double consistency = 0.0;
  LabelVector home{};
  std::vector<std::vector<double>> distributions;  // one per feature
};

/// Each writer draws a home class per feature from the schema marginal; the
/// profile is consistency * onehot(home) + (1 - consistency) * marginal.
std::vector<WriterProfile> generate_profiles(const FeatureSchema& schema, std::size_t n_writers, double consistency,
                                             std::uint64_t seed);

/// Labels drawn independently per feature from each writer's profile.
Dataset sample_dataset(const FeatureSchema& schema, const std::vector<WriterProfile>& profiles,
                       std::size_t samples_per_writer, std::uint64_t seed);

/// Attaches soft vectors sharpness * onehot(label) + (1 - sharpness) * uniform.
/// `seed` is accepted for interface stability; the construction is deterministic.
Dataset soften(const Dataset& dataset, double sharpness, std::uint64_t seed = 0);

}  // namespace veriscribe
