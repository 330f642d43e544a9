#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "veriscribe/data_io.hpp"
#include "veriscribe/rng.hpp"
#include "veriscribe/schema.hpp"
#include "veriscribe/synthetic.hpp"

namespace test {

inline veriscribe::Dataset synthetic(std::size_t writers, std::size_t samples, double c, double s,
                                     std::uint64_t seed) {
  using namespace veriscribe;
  const FeatureSchema& schema = builtin_schema();
  const auto profiles = generate_profiles(schema, writers, c, derive_seed(seed, 0));
  return soften(sample_dataset(schema, profiles, samples, derive_seed(seed, 1)), s, derive_seed(seed, 2));
}

// Record with the given labels and, when sharpness > 0, matching soft vectors.
inline veriscribe::SampleRecord make_record(const std::string& w, const std::string& s,
                                            const veriscribe::LabelVector& labels, double sharpness = 1.0) {
  using namespace veriscribe;
  const FeatureSchema& schema = builtin_schema();
  SampleRecord r{w, s, labels, {}};
  if (sharpness > 0.0) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const int n = schema.cardinality(j);
      for (int c = 0; c < n; ++c) r.soft.push_back((c == labels[j] ? sharpness : 0.0) + (1.0 - sharpness) / n);
    }
  }
  return r;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("veriscribe_unit_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test
