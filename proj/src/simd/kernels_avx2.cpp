#include <immintrin.h>

#include <algorithm>

#include "fdl/simd/kernels.hpp"
#include "plane_geometry.hpp"

// Built with -mavx2 and without FMA: every lane performs the same multiply
// then add as the scalar reference, so the elementwise and convolution
// kernels are bit-identical to it. Only the reductions reassociate.

namespace fdl::simd {
namespace {

inline void axpy_span(double* y, const double* x, __m256d va, double a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

inline __m256d dot_span(__m256d acc, const double* x, const double* y, std::size_t n,
                        double& tail) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) tail += x[i] * y[i];
  return acc;
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void axpy(double* y, const double* x, double a, std::size_t n) {
  axpy_span(y, x, _mm256_set1_pd(a), a, n);
}

double dot(const double* x, const double* y, std::size_t n) {
  double tail = 0.0;
  const __m256d acc = dot_span(_mm256_setzero_pd(), x, y, n, tail);
  return hsum(acc) + tail;
}

void conv_plane_acc(double* out, const double* in, const double* k, std::size_t h,
                    std::size_t w, std::size_t kh, std::size_t kw) {
  const std::size_t ca = (kh - 1) / 2, cb = (kw - 1) / 2;
  for (std::size_t a = 0; a < kh; ++a) {
    const std::size_t si = detail::tap_shift(a, ca, h);
    for (std::size_t b = 0; b < kw; ++b) {
      const double wt = k[a * kw + b];
      const __m256d vw = _mm256_set1_pd(wt);
      const std::size_t sj = detail::tap_shift(b, cb, w);
      const std::size_t head = w - sj;
      for (std::size_t i = 0; i < h; ++i) {
        double* o = out + i * w;
        const double* src = in + ((i + si) % h) * w;
        axpy_span(o, src + sj, vw, wt, head);
        axpy_span(o + head, src, vw, wt, sj);
      }
    }
  }
}

void conv_plane_kernel_grad(double* dk, const double* gout, const double* in, std::size_t h,
                            std::size_t w, std::size_t kh, std::size_t kw) {
  const std::size_t ca = (kh - 1) / 2, cb = (kw - 1) / 2;
  for (std::size_t a = 0; a < kh; ++a) {
    const std::size_t si = detail::tap_shift(a, ca, h);
    for (std::size_t b = 0; b < kw; ++b) {
      const std::size_t sj = detail::tap_shift(b, cb, w);
      const std::size_t head = w - sj;
      __m256d acc = _mm256_setzero_pd();
      double tail = 0.0;
      for (std::size_t i = 0; i < h; ++i) {
        const double* g = gout + i * w;
        const double* src = in + ((i + si) % h) * w;
        acc = dot_span(acc, g, src + sj, head, tail);
        acc = dot_span(acc, g + head, src, sj, tail);
      }
      dk[a * kw + b] += hsum(acc) + tail;
    }
  }
}

// _mm256_max_pd(zero, v) returns v when both are zero or v is NaN, which is
// what std::max(v, 0.0) does.
void relu_bias(double* out, const double* in, double b, std::size_t n) {
  const __m256d vb = _mm256_set1_pd(b), zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_add_pd(_mm256_loadu_pd(in + i), vb);
    _mm256_storeu_pd(out + i, _mm256_max_pd(zero, v));
  }
  for (; i < n; ++i) out[i] = std::max(in[i] + b, 0.0);
}

inline __m256d shrink4(__m256d z, __m256d vt, __m256d zero, __m256d sign) {
  const __m256d pos = _mm256_max_pd(zero, _mm256_sub_pd(z, vt));
  const __m256d neg = _mm256_max_pd(zero, _mm256_sub_pd(_mm256_xor_pd(z, sign), vt));
  return _mm256_sub_pd(pos, neg);
}

inline double shrink_one(double z, double t) {
  return std::max(z - t, 0.0) - std::max(-z - t, 0.0);
}

void soft_shrink(double* out, const double* in, double t, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(t), zero = _mm256_setzero_pd(),
                sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, shrink4(_mm256_loadu_pd(in + i), vt, zero, sign));
  }
  for (; i < n; ++i) out[i] = shrink_one(in[i], t);
}

void soft_clip(double* out, const double* in, double t, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(t), zero = _mm256_setzero_pd(),
                sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d z = _mm256_loadu_pd(in + i);
    _mm256_storeu_pd(out + i, _mm256_sub_pd(z, shrink4(z, vt, zero, sign)));
  }
  for (; i < n; ++i) out[i] = in[i] - shrink_one(in[i], t);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2",          axpy,      dot,      conv_plane_acc,
                                 conv_plane_kernel_grad, relu_bias, soft_shrink, soft_clip};
  return table;
}

}  // namespace fdl::simd
