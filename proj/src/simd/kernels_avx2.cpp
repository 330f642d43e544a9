// AVX2 variants. This translation unit is the only one compiled with -mavx2;
// it is reached only through the dispatch table after a CPU check.

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <vector>

#include "veriscribe/simd/kernels.hpp"

namespace veriscribe::simd {

namespace {

void segment_cosine_avx2(const double* q, const double* k, std::span<const std::uint32_t> offsets, double* out) {
  if (offsets.size() < 2) return;
  const std::size_t n = offsets.back();
  thread_local std::vector<double> qk, qq, kk;
  qk.resize(n + 4);
  qq.resize(n + 4);
  kk.resize(n + 4);

  // Elementwise products are exact IEEE operations in either ISA.
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(q + i);
    const __m256d b = _mm256_loadu_pd(k + i);
    _mm256_storeu_pd(qk.data() + i, _mm256_mul_pd(a, b));
    _mm256_storeu_pd(qq.data() + i, _mm256_mul_pd(a, a));
    _mm256_storeu_pd(kk.data() + i, _mm256_mul_pd(b, b));
  }
  for (; i < n; ++i) {
    qk[i] = q[i] * k[i];
    qq[i] = q[i] * q[i];
    kk[i] = k[i] * k[i];
  }

  // Segment sums keep the reference's left-to-right order.
  const std::size_t segs = offsets.size() - 1;
  thread_local std::vector<double> dot, nq, nk;
  dot.assign(segs + 4, 0.0);
  nq.assign(segs + 4, 1.0);
  nk.assign(segs + 4, 1.0);
  for (std::size_t s = 0; s < segs; ++s) {
    double d = 0.0, a = 0.0, b = 0.0;
    for (std::uint32_t e = offsets[s]; e < offsets[s + 1]; ++e) {
      d += qk[e];
      a += qq[e];
      b += kk[e];
    }
    dot[s] = d;
    nq[s] = a;
    nk[s] = b;
  }

  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t s = 0;
  for (; s + 4 <= segs; s += 4) {
    const __m256d denom = _mm256_mul_pd(_mm256_sqrt_pd(_mm256_loadu_pd(nq.data() + s)),
                                        _mm256_sqrt_pd(_mm256_loadu_pd(nk.data() + s)));
    const __m256d ratio = _mm256_div_pd(_mm256_loadu_pd(dot.data() + s), denom);
    // min(one, x) returns x when x is NaN, matching the scalar clamp.
    _mm256_storeu_pd(out + s, _mm256_min_pd(one, ratio));
  }
  for (; s < segs; ++s) {
    const double r = dot[s] / (std::sqrt(nq[s]) * std::sqrt(nk[s]));
    out[s] = r > 1.0 ? 1.0 : r;
  }
}

void factor_log_sum_avx2(const FactorTableView& table, const std::int32_t* codes, std::size_t stride,
                         std::size_t count, double* out) {
  const double* base = table.log_probs.data();
  std::size_t v = 0;
  for (; v + 4 <= count; v += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (const FactorNode& f : table.factors) {
      __m128i row = _mm_setzero_si128();
      for (std::int32_t p = 0; p < f.parent_count; ++p) {
        const __m128i pc = _mm_loadu_si128(
            reinterpret_cast<const __m128i*>(codes + static_cast<std::size_t>(f.parents[p]) * stride + v));
        row = _mm_add_epi32(row, _mm_mullo_epi32(pc, _mm_set1_epi32(f.parent_strides[p])));
      }
      const __m128i code =
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(codes + static_cast<std::size_t>(f.node) * stride + v));
      const __m128i idx = _mm_add_epi32(_mm_add_epi32(_mm_set1_epi32(f.offset),
                                                      _mm_mullo_epi32(row, _mm_set1_epi32(f.code_count))),
                                        code);
      acc = _mm256_add_pd(acc, _mm256_i32gather_pd(base, idx, 8));
    }
    _mm256_storeu_pd(out + v, acc);
  }
  for (; v < count; ++v) {
    double acc = 0.0;
    for (const FactorNode& f : table.factors) {
      std::int32_t row = 0;
      for (std::int32_t p = 0; p < f.parent_count; ++p) {
        row += codes[static_cast<std::size_t>(f.parents[p]) * stride + v] * f.parent_strides[p];
      }
      const std::int32_t code = codes[static_cast<std::size_t>(f.node) * stride + v];
      acc += base[f.offset + row * f.code_count + code];
    }
    out[v] = acc;
  }
}

void sweep_counts_avx2(std::span<const double> scores, std::span<const std::uint8_t> is_same,
                       std::span<const double> thresholds, SweepCounts* out) {
  const std::size_t n = scores.size();
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    const __m256d thr = _mm256_set1_pd(thresholds[t]);
    SweepCounts c;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const unsigned pos =
          static_cast<unsigned>(_mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(scores.data() + i), thr, _CMP_GE_OQ)));
      const unsigned same = (is_same[i] ? 1u : 0u) | (is_same[i + 1] ? 2u : 0u) | (is_same[i + 2] ? 4u : 0u) |
                            (is_same[i + 3] ? 8u : 0u);
      c.tp += std::popcount(pos & same);
      c.fn += std::popcount(~pos & same & 0xFu);
      c.fp += std::popcount(pos & ~same & 0xFu);
      c.tn += std::popcount(~pos & ~same & 0xFu);
    }
    for (; i < n; ++i) {
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
const KernelTable kAvx2Kernels = {Isa::Avx2, segment_cosine_avx2, factor_log_sum_avx2, sweep_counts_avx2};
}

}  // namespace veriscribe::simd
