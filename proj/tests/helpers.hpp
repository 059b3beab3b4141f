#pragma once

#include <cstdint>
#include <random>

#include "fdl/tensor.hpp"

namespace testutil {

inline fdl::Tensor4 random_tensor(fdl::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  fdl::Tensor4 t(s);
  for (double& v : t.data()) v = u(rng);
  return t;
}

inline fdl::Tensor4 random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  return random_tensor({1, 1, h, w}, seed);
}

// Direct circular convolution, straight from the definition.
inline fdl::Tensor4 brute_conv(const fdl::Tensor4& k, const fdl::Tensor4& x) {
  const long H = long(x.height()), W = long(x.width());
  const long ca = long(k.height() - 1) / 2, cb = long(k.width() - 1) / 2;
  fdl::Tensor4 out(k.rows(), x.cols(), x.height(), x.width());
  for (std::size_t r = 0; r < k.rows(); ++r)
    for (std::size_t m = 0; m < x.cols(); ++m)
      for (long i = 0; i < H; ++i)
        for (long j = 0; j < W; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < k.cols(); ++c)
            for (long a = 0; a < long(k.height()); ++a)
              for (long b = 0; b < long(k.width()); ++b) {
                const long si = (((i - (a - ca)) % H) + H) % H;
                const long sj = (((j - (b - cb)) % W) + W) % W;
                s += k.at(r, c, std::size_t(a), std::size_t(b)) * x.at(c, m, std::size_t(si), std::size_t(sj));
              }
          out.at(r, m, std::size_t(i), std::size_t(j)) = s;
        }
  return out;
}

}  // namespace testutil
