#pragma once

// Data-parallel inner loops with a scalar reference and ISA-specific variants.
//
// Every variant must produce results bit-identical to the scalar reference:
// products are elementwise, and every reduction runs in the reference order.
// The equivalence tests enforce this on random inputs.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace veriscribe::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// One factor of a discrete Bayesian network in a flat log-probability table.
/// Entry for (row, code) sits at offset + row * code_count + code, where row is
/// the mixed-radix index sum(parent_code[p] * parent_stride[p]).
struct FactorNode {
  std::int32_t node = 0;
  std::int32_t offset = 0;
  std::int32_t code_count = 0;
  std::int32_t parent_count = 0;
  std::array<std::int32_t, 3> parents{};
  std::array<std::int32_t, 3> parent_strides{};
};

struct FactorTableView {
  std::span<const double> log_probs;
  std::span<const FactorNode> factors;  // summed in this order
};

/// Threshold sweep tallies at one threshold.
struct SweepCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
};

struct KernelTable {
  Isa isa;

  /// out[s] = cosine similarity of q and k restricted to [offsets[s], offsets[s+1]),
  /// clamped to at most 1. A zero-norm segment yields NaN.
  void (*segment_cosine)(const double* q, const double* k, std::span<const std::uint32_t> offsets, double* out);

  /// out[v] = sum over factors of the log-probability looked up for vector v.
  /// `codes` is node-major: codes[node * stride + v].
  void (*factor_log_sum)(const FactorTableView& table, const std::int32_t* codes, std::size_t stride,
                         std::size_t count, double* out);

  /// For each threshold: positive iff score >= threshold; tallied against is_same.
  void (*sweep_counts)(std::span<const double> scores, std::span<const std::uint8_t> is_same,
                       std::span<const double> thresholds, SweepCounts* out);
};

/// Best variant supported by this CPU. VERISCRIBE_SIMD=scalar forces the reference.
const KernelTable& active_kernels();

/// A specific variant, or nullptr if not compiled in or unsupported by the CPU.
const KernelTable* kernels_for(Isa isa);

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(VERISCRIBE_HAVE_AVX2)
extern const KernelTable kAvx2Kernels;
#endif
}  // namespace detail

}  // namespace veriscribe::simd
