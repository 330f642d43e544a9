#include <cmath>

#include "veriscribe/simd/kernels.hpp"

namespace veriscribe::simd {

namespace {

void segment_cosine_scalar(const double* q, const double* k, std::span<const std::uint32_t> offsets, double* out) {
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    double dot = 0.0;
    double qq = 0.0;
    double kk = 0.0;
    for (std::uint32_t i = offsets[s]; i < offsets[s + 1]; ++i) {
      dot += q[i] * k[i];
      qq += q[i] * q[i];
      kk += k[i] * k[i];
    }
    const double r = dot / (std::sqrt(qq) * std::sqrt(kk));
    out[s] = r > 1.0 ? 1.0 : r;
  }
}

void factor_log_sum_scalar(const FactorTableView& table, const std::int32_t* codes, std::size_t stride,
                           std::size_t count, double* out) {
  for (std::size_t v = 0; v < count; ++v) {
    double acc = 0.0;
    for (const FactorNode& f : table.factors) {
      std::int32_t row = 0;
      for (std::int32_t p = 0; p < f.parent_count; ++p) {
        row += codes[static_cast<std::size_t>(f.parents[p]) * stride + v] * f.parent_strides[p];
      }
      const std::int32_t code = codes[static_cast<std::size_t>(f.node) * stride + v];
      acc += table.log_probs[static_cast<std::size_t>(f.offset + row * f.code_count + code)];
    }
    out[v] = acc;
  }
}

void sweep_counts_scalar(std::span<const double> scores, std::span<const std::uint8_t> is_same,
                         std::span<const double> thresholds, SweepCounts* out) {
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    SweepCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool positive = scores[i] >= thresholds[t];
      if (is_same[i]) {
        positive ? ++c.tp : ++c.fn;
      } else {
        positive ? ++c.fp : ++c.tn;
      }
    }
    out[t] = c;
  }
}

}  // namespace

namespace detail {
const KernelTable kScalarKernels = {Isa::Scalar, segment_cosine_scalar, factor_log_sum_scalar, sweep_counts_scalar};
}

}  // namespace veriscribe::simd
