#pragma once

#include <cstddef>
#include <string_view>

namespace fdl::simd {

// Inner loops shared by the tensor routines. The scalar table is the
// reference; vector tables must match it bit-for-bit for the elementwise and
// convolution entries, and to rounding error for the reductions.
struct KernelTable {
  const char* name;

  // y[i] += a * x[i]
  void (*axpy)(double* y, const double* x, double a, std::size_t n);

  double (*dot)(const double* x, const double* y, std::size_t n);

  // out += k (*) in, circular, for one (h x w) plane and one (kh x kw) filter
  // with odd sizes, centre tap at ((kh-1)/2, (kw-1)/2).
  void (*conv_plane_acc)(double* out, const double* in, const double* k, std::size_t h,
                         std::size_t w, std::size_t kh, std::size_t kw);

  // dk[a][b] += sum_ij gout(i, j) * in(i - a + ca, j - b + cb), circular.
  // Gradient of conv_plane_acc with respect to its filter.
  void (*conv_plane_kernel_grad)(double* dk, const double* gout, const double* in,
                                 std::size_t h, std::size_t w, std::size_t kh, std::size_t kw);

  // out[i] = max(in[i] + b, 0)
  void (*relu_bias)(double* out, const double* in, double b, std::size_t n);

  // out[i] = (in[i] - t)+ - (-in[i] - t)+
  void (*soft_shrink)(double* out, const double* in, double t, std::size_t n);

  // out[i] = in[i] - soft_shrink(in[i], t)
  void (*soft_clip)(double* out, const double* in, double t, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

// Table used by the library. Chosen on first use: AVX2 when available,
// overridable with FDL_SIMD=scalar|avx2.
const KernelTable& active_kernels();

// Force a backend by name ("scalar" or "avx2"). Returns false if unavailable.
bool select_kernels(std::string_view name);

}  // namespace fdl::simd
