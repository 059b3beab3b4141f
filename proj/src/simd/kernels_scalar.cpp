#include <algorithm>

#include "fdl/simd/kernels.hpp"
#include "plane_geometry.hpp"

namespace fdl::simd {
namespace {

void axpy(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void conv_plane_acc(double* out, const double* in, const double* k, std::size_t h,
                    std::size_t w, std::size_t kh, std::size_t kw) {
  const std::size_t ca = (kh - 1) / 2, cb = (kw - 1) / 2;
  for (std::size_t a = 0; a < kh; ++a) {
    const std::size_t si = detail::tap_shift(a, ca, h);
    for (std::size_t b = 0; b < kw; ++b) {
      const double wt = k[a * kw + b];
      const std::size_t sj = detail::tap_shift(b, cb, w);
      for (std::size_t i = 0; i < h; ++i) {
        double* o = out + i * w;
        const double* src = in + ((i + si) % h) * w;
        const std::size_t head = w - sj;
        for (std::size_t j = 0; j < head; ++j) o[j] += wt * src[j + sj];
        for (std::size_t j = head; j < w; ++j) o[j] += wt * src[j - head];
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
      double acc = 0.0;
      for (std::size_t i = 0; i < h; ++i) {
        const double* g = gout + i * w;
        const double* src = in + ((i + si) % h) * w;
        const std::size_t head = w - sj;
        for (std::size_t j = 0; j < head; ++j) acc += g[j] * src[j + sj];
        for (std::size_t j = head; j < w; ++j) acc += g[j] * src[j - head];
      }
      dk[a * kw + b] += acc;
    }
  }
}

void relu_bias(double* out, const double* in, double b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(in[i] + b, 0.0);
}

double shrink_one(double z, double t) {
  return std::max(z - t, 0.0) - std::max(-z - t, 0.0);
}

void soft_shrink(double* out, const double* in, double t, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = shrink_one(in[i], t);
}

void soft_clip(double* out, const double* in, double t, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] - shrink_one(in[i], t);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",          axpy,      dot,      conv_plane_acc,
                                 conv_plane_kernel_grad, relu_bias, soft_shrink, soft_clip};
  return table;
}

}  // namespace fdl::simd
