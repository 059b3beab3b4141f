#pragma once

#include <cstddef>

#include "fdl/tensor.hpp"

namespace fdl {

// Tensor convolution AQ: kernel (R x C x kh x kw), signal (C x M x H x W)
// -> (R x M x H x W), output[r][m] = sum_c kernel[r][c] * signal[c][m].
// Circular boundary; odd kernel sizes, kernel centre at ((kh-1)/2, (kw-1)/2).
Tensor4 conv2d(const Tensor4& kernel, const Tensor4& signal);

// Adjoint of x -> conv2d(kernel, x) (a transposed convolution): kernel
// (R x C x kh x kw), signal (R x M x H x W) -> (C x M x H x W). Equals
// conv2d(flip_spatial(tensor_transpose(kernel)), signal).
Tensor4 conv2d_adjoint(const Tensor4& kernel, const Tensor4& signal);

// Gradient of <g, conv2d(kernel, signal)> with respect to kernel, for a
// kernel of spatial size (kh x kw): g (R x M x H x W), signal (C x M x H x W)
// -> (R x C x kh x kw).
Tensor4 conv2d_kernel_grad(const Tensor4& g, const Tensor4& signal, std::size_t kh,
                           std::size_t kw);

// Swap the row and column axes; each filter's spatial taps are unchanged.
Tensor4 tensor_transpose(const Tensor4& t);

// Rotate every filter by 180 degrees.
Tensor4 flip_spatial(const Tensor4& t);

// Keep samples with index = 0 (mod s) along both spatial axes.
Tensor4 downsample(const Tensor4& signal, std::size_t s);

// Insert s-1 zeros after every sample along both spatial axes.
Tensor4 upsample(const Tensor4& signal, std::size_t s);

// Unnormalised 2-D DFT magnitude of an image, DC at (0,0).
Tensor4 dft_magnitude(const Tensor4& image);

// Place t's spatial taps at the centre of an (h x w) canvas (h, w >= t dims,
// same parity as t's dims).
Tensor4 embed_centered(const Tensor4& t, std::size_t height, std::size_t width);

// Stack along the row (channel) axis.
Tensor4 concat_rows(const Tensor4& a, const Tensor4& b);
Tensor4 slice_rows(const Tensor4& t, std::size_t begin, std::size_t count);

// Cyclic spatial shift: out(i, j) = in(i - di, j - dj).
Tensor4 circular_shift(const Tensor4& t, long di, long dj);

Tensor4 relu(const Tensor4& t);

}  // namespace fdl
