#include "fdl/tensor_ops.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "fdl/errors.hpp"
#include "fdl/parallel.hpp"
#include "fdl/simd/kernels.hpp"

namespace fdl {
namespace {

void require_odd_kernel(const Tensor4& k) {
  if (k.height() % 2 == 0 || k.width() % 2 == 0) {
    throw ConfigError("kernel spatial dims must be odd, got " + k.shape().str());
  }
}

}  // namespace

Tensor4 conv2d(const Tensor4& kernel, const Tensor4& signal) {
  require_odd_kernel(kernel);
  if (kernel.cols() != signal.rows()) {
    throw ShapeError("conv2d: kernel " + kernel.shape().str() + " cannot act on signal " +
                     signal.shape().str());
  }
  const std::size_t R = kernel.rows(), C = kernel.cols(), M = signal.cols();
  const std::size_t H = signal.height(), W = signal.width();
  Tensor4 out(R, M, H, W);
  const auto& kt = simd::active_kernels();
  parallel_for(R * M, [&](std::size_t idx) {
    const std::size_t r = idx / M, m = idx % M;
    double* o = out.plane(r, m).data();
    for (std::size_t c = 0; c < C; ++c) {
      kt.conv_plane_acc(o, signal.plane(c, m).data(), kernel.plane(r, c).data(), H, W,
                        kernel.height(), kernel.width());
    }
  });
  return out;
}

Tensor4 conv2d_adjoint(const Tensor4& kernel, const Tensor4& signal) {
  if (kernel.rows() != signal.rows()) {
    throw ShapeError("conv2d_adjoint: kernel " + kernel.shape().str() +
                     " does not match signal " + signal.shape().str());
  }
  return conv2d(flip_spatial(tensor_transpose(kernel)), signal);
}

Tensor4 conv2d_kernel_grad(const Tensor4& g, const Tensor4& signal, std::size_t kh,
                           std::size_t kw) {
  if (g.cols() != signal.cols() || g.height() != signal.height() ||
      g.width() != signal.width()) {
    throw ShapeError("conv2d_kernel_grad: gradient " + g.shape().str() +
                     " does not match signal " + signal.shape().str());
  }
  if (kh % 2 == 0 || kw % 2 == 0) throw ConfigError("kernel spatial dims must be odd");
  const std::size_t R = g.rows(), C = signal.rows(), M = g.cols();
  Tensor4 dk(R, C, kh, kw);
  const auto& kt = simd::active_kernels();
  parallel_for(R * C, [&](std::size_t idx) {
    const std::size_t r = idx / C, c = idx % C;
    double* d = dk.plane(r, c).data();
    for (std::size_t m = 0; m < M; ++m) {
      kt.conv_plane_kernel_grad(d, g.plane(r, m).data(), signal.plane(c, m).data(), g.height(),
                                g.width(), kh, kw);
    }
  });
  return dk;
}

Tensor4 tensor_transpose(const Tensor4& t) {
  Tensor4 out(t.cols(), t.rows(), t.height(), t.width());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) {
      auto src = t.plane(r, c);
      std::copy(src.begin(), src.end(), out.plane(c, r).begin());
    }
  return out;
}

Tensor4 flip_spatial(const Tensor4& t) {
  Tensor4 out(t.shape());
  const std::size_t H = t.height(), W = t.width();
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) out.at(r, c, H - 1 - i, W - 1 - j) = t.at(r, c, i, j);
  return out;
}

Tensor4 downsample(const Tensor4& signal, std::size_t s) {
  if (s == 0) throw DomainError("resampling factor must be positive");
  if (signal.height() % s != 0 || signal.width() % s != 0) {
    throw ShapeError("downsample: " + signal.shape().str() + " not divisible by " +
                     std::to_string(s));
  }
  Tensor4 out(signal.rows(), signal.cols(), signal.height() / s, signal.width() / s);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      for (std::size_t i = 0; i < out.height(); ++i)
        for (std::size_t j = 0; j < out.width(); ++j)
          out.at(r, c, i, j) = signal.at(r, c, i * s, j * s);
  return out;
}

Tensor4 upsample(const Tensor4& signal, std::size_t s) {
  if (s == 0) throw DomainError("resampling factor must be positive");
  Tensor4 out(signal.rows(), signal.cols(), signal.height() * s, signal.width() * s);
  for (std::size_t r = 0; r < signal.rows(); ++r)
    for (std::size_t c = 0; c < signal.cols(); ++c)
      for (std::size_t i = 0; i < signal.height(); ++i)
        for (std::size_t j = 0; j < signal.width(); ++j)
          out.at(r, c, i * s, j * s) = signal.at(r, c, i, j);
  return out;
}

namespace {

// Twiddles e^{-2 pi i k / n} for k in [0, n), indexed by (a*b) mod n so that
// large products keep full accuracy.
std::vector<std::complex<double>> twiddles(std::size_t n) {
  std::vector<std::complex<double>> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ang = -2.0 * std::numbers::pi * double(k) / double(n);
    w[k] = {std::cos(ang), std::sin(ang)};
  }
  return w;
}

}  // namespace

Tensor4 dft_magnitude(const Tensor4& image) {
  if (!image.is_image()) throw ShapeError("dft_magnitude expects an image, got " + image.shape().str());
  const std::size_t H = image.height(), W = image.width();
  const auto wr = twiddles(H), wc = twiddles(W);
  // Rows first, then columns.
  std::vector<std::complex<double>> tmp(H * W);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t v = 0; v < W; ++v) {
      std::complex<double> s = 0.0;
      for (std::size_t j = 0; j < W; ++j) s += image(i, j) * wc[(v * j) % W];
      tmp[i * W + v] = s;
    }
  Tensor4 out = Tensor4::image(H, W);
  for (std::size_t u = 0; u < H; ++u)
    for (std::size_t v = 0; v < W; ++v) {
      std::complex<double> s = 0.0;
      for (std::size_t i = 0; i < H; ++i) s += tmp[i * W + v] * wr[(u * i) % H];
      out(u, v) = std::abs(s);
    }
  return out;
}

Tensor4 embed_centered(const Tensor4& t, std::size_t height, std::size_t width) {
  if (height < t.height() || width < t.width() || (height - t.height()) % 2 != 0 ||
      (width - t.width()) % 2 != 0) {
    throw ShapeError("embed_centered: cannot centre " + t.shape().str() + " in " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t oi = (height - t.height()) / 2, oj = (width - t.width()) / 2;
  Tensor4 out(t.rows(), t.cols(), height, width);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      for (std::size_t i = 0; i < t.height(); ++i)
        for (std::size_t j = 0; j < t.width(); ++j) out.at(r, c, i + oi, j + oj) = t.at(r, c, i, j);
  return out;
}

Tensor4 concat_rows(const Tensor4& a, const Tensor4& b) {
  if (a.cols() != b.cols() || a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("concat: " + a.shape().str() + " and " + b.shape().str());
  }
  Tensor4 out(a.rows() + b.rows(), a.cols(), a.height(), a.width());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + long(a.size()));
  return out;
}

Tensor4 slice_rows(const Tensor4& t, std::size_t begin, std::size_t count) {
  if (begin + count > t.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + t.shape().str());
  }
  Tensor4 out(count, t.cols(), t.height(), t.width());
  const std::size_t stride = t.cols() * t.height() * t.width();
  std::copy(t.data().begin() + long(begin * stride), t.data().begin() + long((begin + count) * stride),
            out.data().begin());
  return out;
}

Tensor4 circular_shift(const Tensor4& t, long di, long dj) {
  const long H = long(t.height()), W = long(t.width());
  Tensor4 out(t.shape());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      for (long i = 0; i < H; ++i)
        for (long j = 0; j < W; ++j) {
          const long si = ((i - di) % H + H) % H, sj = ((j - dj) % W + W) % W;
          out.at(r, c, std::size_t(i), std::size_t(j)) = t.at(r, c, std::size_t(si), std::size_t(sj));
        }
  return out;
}

Tensor4 relu(const Tensor4& t) {
  Tensor4 out(t.shape());
  simd::active_kernels().relu_bias(out.data().data(), t.data().data(), 0.0, t.size());
  return out;
}

}  // namespace fdl
