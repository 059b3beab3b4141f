#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <limits>
#include <vector>

#include "fdl/simd/kernels.hpp"
#include "fdl/tensor_ops.hpp"
#include "helpers.hpp"

using namespace fdl;

namespace {

std::vector<double> rand_vec(std::size_t n, std::uint64_t seed) {
  const Tensor4 t = testutil::random_tensor({1, 1, 1, n}, seed, -2.0, 2.0);
  return t.data();
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

}  // namespace

TEST_CASE("scalar table is always present and selectable") {
  CHECK(simd::select_kernels("scalar"));
  CHECK(std::string(simd::active_kernels().name) == "scalar");
  CHECK_FALSE(simd::select_kernels("sse9"));
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const simd::KernelTable* v = simd::avx2_kernels();
  if (!v) {
    MESSAGE("AVX2 unavailable, skipping");
    return;
  }
  const simd::KernelTable& s = simd::scalar_kernels();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 257u}) {
    const auto x = rand_vec(n, 100 + n), y0 = rand_vec(n, 200 + n);
    auto ys = y0, yv = y0;
    s.axpy(ys.data(), x.data(), 0.37, n);
    v->axpy(yv.data(), x.data(), 0.37, n);
    CHECK(same_bits(ys, yv));
    const double ds = s.dot(x.data(), y0.data(), n), dv = v->dot(x.data(), y0.data(), n);
    CHECK(std::abs(ds - dv) <= 1e-13 * (1.0 + std::abs(ds)) * double(n + 1));

    std::vector<double> os(n), ov(n);
    for (double t : {0.0, 0.5, 1.5}) {
      s.relu_bias(os.data(), x.data(), -t, n);
      v->relu_bias(ov.data(), x.data(), -t, n);
      CHECK(same_bits(os, ov));
      s.soft_shrink(os.data(), x.data(), t, n);
      v->soft_shrink(ov.data(), x.data(), t, n);
      CHECK(same_bits(os, ov));
      s.soft_clip(os.data(), x.data(), t, n);
      v->soft_clip(ov.data(), x.data(), t, n);
      CHECK(same_bits(os, ov));
    }
  }
  // kernel sizes and plane shapes, including widths below the vector length
  const std::size_t dims[][4] = {{8, 8, 3, 3}, {5, 3, 3, 3}, {16, 12, 5, 3}, {2, 6, 1, 1}, {9, 17, 3, 5}};
  for (auto& d : dims) {
    const auto in = rand_vec(d[0] * d[1], 7 + d[1]);
    const auto k = rand_vec(d[2] * d[3], 11 + d[0]);
    const auto base = rand_vec(d[0] * d[1], 13);
    auto a = base, b = base;
    s.conv_plane_acc(a.data(), in.data(), k.data(), d[0], d[1], d[2], d[3]);
    v->conv_plane_acc(b.data(), in.data(), k.data(), d[0], d[1], d[2], d[3]);
    CHECK(same_bits(a, b));
    std::vector<double> ga(d[2] * d[3], 0.25), gb(d[2] * d[3], 0.25);
    s.conv_plane_kernel_grad(ga.data(), base.data(), in.data(), d[0], d[1], d[2], d[3]);
    v->conv_plane_kernel_grad(gb.data(), base.data(), in.data(), d[0], d[1], d[2], d[3]);
    for (std::size_t i = 0; i < ga.size(); ++i)
      CHECK(std::abs(ga[i] - gb[i]) <= 1e-12 * (1.0 + std::abs(ga[i])));
  }
}

TEST_CASE("relu_bias keeps signed zeros and infinities consistent") {
  const simd::KernelTable* v = simd::avx2_kernels();
  if (!v) return;
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> x{-0.0, 0.0, inf, -inf, 1e-300, -1e-300, 2.0, -2.0};
  std::vector<double> a(x.size()), b(x.size());
  simd::scalar_kernels().relu_bias(a.data(), x.data(), 0.0, x.size());
  v->relu_bias(b.data(), x.data(), 0.0, x.size());
  CHECK(same_bits(a, b));
  simd::scalar_kernels().soft_shrink(a.data(), x.data(), inf, x.size());
  v->soft_shrink(b.data(), x.data(), inf, x.size());
  CHECK(same_bits(a, b));
}

TEST_CASE("library results do not depend on the backend") {
  if (!simd::avx2_kernels()) return;
  const Tensor4 k = testutil::random_tensor({6, 4, 3, 3}, 30);
  const Tensor4 x = testutil::random_tensor({4, 1, 20, 12}, 31);
  REQUIRE(simd::select_kernels("scalar"));
  const Tensor4 a = conv2d(k, x);
  const Tensor4 ra = relu(a);
  REQUIRE(simd::select_kernels("avx2"));
  const Tensor4 b = conv2d(k, x);
  const Tensor4 rb = relu(b);
  CHECK(same_bits(a.data(), b.data()));
  CHECK(same_bits(ra.data(), rb.data()));
}
