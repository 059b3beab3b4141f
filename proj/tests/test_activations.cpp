#include <doctest.h>

#include <cmath>
#include <limits>

#include "fdl/activations.hpp"
#include "fdl/errors.hpp"
#include "helpers.hpp"

using namespace fdl;

TEST_CASE("map_threshold") {
  CHECK(map_threshold({0.1, 0.05}) == doctest::Approx(0.2));
  CHECK(map_threshold({0.1, 1e9}) < 1e-10);
  CHECK(map_threshold({0.1, 1e-9}) == doctest::Approx(1e7));
  CHECK_THROWS_AS(map_threshold({0.0, 0.1}), DomainError);
  CHECK_THROWS_AS(map_threshold({0.1, -1.0}), DomainError);
}

TEST_CASE("relu_bias") {
  CHECK(relu_bias(0.5, 0.2) == doctest::Approx(0.3));
  CHECK(relu_bias(-1.0, 0.0) == 0.0);
  CHECK(relu_bias(0.7, 0.7) == 0.0);
  // bias b = -t
  const Tensor4 z = testutil::random_tensor({2, 1, 4, 4}, 1);
  const Tensor4 r = relu_bias(z, 0.3);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(r.data()[i] == std::max(z.data()[i] + -0.3, 0.0));
}

TEST_CASE("soft_shrink and soft_clip") {
  CHECK(soft_shrink(5.0, 2.0) == 3.0);
  CHECK(soft_shrink(-5.0, 2.0) == -3.0);
  for (int z = -2; z <= 2; ++z) CHECK(soft_shrink(double(z), 2.0) == 0.0);
  CHECK(soft_clip(5.0, 2.0) == 2.0);
  CHECK(soft_clip(1.0, 2.0) == 1.0);
  const Tensor4 z = testutil::random_tensor({1, 1, 32, 32}, 2, -4.0, 4.0);
  const Tensor4 sum = soft_shrink(z, 1.3) + soft_clip(z, 1.3);
  CHECK(max_abs_diff(sum, z) < 1e-15);
}

TEST_CASE("garrote") {
  CHECK(garrote_shrink(2.0, 1.0) == doctest::Approx(1.5));
  CHECK(garrote_shrink(0.5, 1.0) == 0.0);
  CHECK(garrote_shrink(0.0, 1.0) == 0.0);
  CHECK(garrote_shrink(100.0, 1.0) == doctest::Approx(99.99));
}

TEST_CASE("derivative of gaussians") {
  CHECK(dog_clip(0.7, 0.7) == doctest::Approx(0.7 * std::exp(-1.0)));
  CHECK(dog_clip(0.0, 0.7) == 0.0);
  CHECK(std::abs(dog_clip(7.0, 0.7)) < 1e-30);
  CHECK(dog_shrink(7.0, 0.7) == doctest::Approx(7.0));
  CHECK(dog_clip(1.0, 1.0, 4) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(dog_clip(Tensor4::image(2, 2), 1.0, 3), ConfigError);
  CHECK_THROWS_AS(dog_clip(Tensor4::image(2, 2), 0.0, 2), DomainError);
}

TEST_CASE("odd symmetry, monotonicity, Lipschitz") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const double t = 1.1;
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(soft_shrink(-a, t) == -soft_shrink(a, t));
    CHECK(soft_clip(-a, t) == -soft_clip(a, t));
    CHECK(garrote_shrink(-a, t) == -garrote_shrink(a, t));
    CHECK(dog_clip(-a, t) == -dog_clip(a, t));
    CHECK(dog_shrink(-a, t) == -dog_shrink(a, t));
    CHECK(dog_shrink(a, t) + dog_clip(a, t) == doctest::Approx(a));
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(soft_shrink(lo, t) <= soft_shrink(hi, t));
    CHECK(soft_clip(lo, t) <= soft_clip(hi, t));
    CHECK(std::abs(soft_shrink(a, t) - soft_shrink(b, t)) <= std::abs(a - b) + 1e-15);
  }
}

TEST_CASE("LET") {
  const Tensor4 z = testutil::random_tensor({1, 1, 8, 8}, 4, -5.0, 5.0);
  const auto soft2 = ActivationSpec::make(ActivationKind::soft_shrink, 2.0);
  CHECK(max_abs_diff(let_shrink(z, {{1.0, soft2}}), soft_shrink(z, 2.0)) == 0.0);
  CHECK(max_abs_diff(let_shrink(z, {{0.5, soft2}, {0.5, soft2}}), soft_shrink(z, 2.0)) < 1e-15);
  CHECK_THROWS_AS(let_shrink(z, {{0.7, soft2}, {0.4, soft2}}), ConfigError);
  const auto mix = let_shrink(z, {{0.25, soft2}, {0.75, ActivationSpec::make(ActivationKind::garrote, 1.0)}});
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = z.data()[i];
    CHECK(mix.data()[i] == doctest::Approx(0.25 * soft_shrink(v, 2.0) + 0.75 * garrote_shrink(v, 1.0)));
  }
}

TEST_CASE("per-channel thresholds") {
  ActivationSpec s = ActivationSpec::make(ActivationKind::soft_shrink, 0.0);
  s.t = {0.0, 1.0, 100.0};
  const Tensor4 z = testutil::random_tensor({3, 1, 4, 4}, 5, -3.0, 3.0);
  const Tensor4 out = apply_activation(s, z);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(out.plane(0, 0)[i] == z.plane(0, 0)[i]);
    CHECK(out.plane(1, 0)[i] == soft_shrink(z.plane(1, 0)[i], 1.0));
    CHECK(out.plane(2, 0)[i] == 0.0);
  }
  s.t = {1.0, 2.0};
  CHECK_THROWS_AS(apply_activation(s, z), ShapeError);
  s.t = {-1.0};
  CHECK_THROWS_AS(apply_activation(s, z), DomainError);
  CHECK(ActivationSpec::make(ActivationKind::garrote, 1.0).is_shrinkage());
  CHECK_FALSE(ActivationSpec::make(ActivationKind::soft_clip, 1.0).is_shrinkage());
  CHECK(activation_kind_from_string("dog_clip") == ActivationKind::dog_clip);
  CHECK_THROWS_AS(activation_kind_from_string("hard"), ConfigError);
}

TEST_CASE("derivatives match finite differences away from kinks") {
  const double t = 0.8, h = 1e-6;
  const ActivationKind kinds[] = {ActivationKind::relu_bias, ActivationKind::soft_shrink,
                                  ActivationKind::soft_clip, ActivationKind::garrote,
                                  ActivationKind::dog_shrink, ActivationKind::dog_clip};
  const Tensor4 z = testutil::random_tensor({1, 1, 1, 200}, 6, -3.0, 3.0);
  for (ActivationKind k : kinds) {
    const auto spec = ActivationSpec::make(k, t);
    const Tensor4 d = activation_derivative(spec, z);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double v = z.data()[i];
      if (std::abs(std::abs(v) - t) < 1e-3) continue;
      Tensor4 p(Shape{1, 1, 1, 1}, v + h), m(Shape{1, 1, 1, 1}, v - h);
      const double fd = (apply_activation(spec, p).data()[0] - apply_activation(spec, m).data()[0]) / (2 * h);
      CHECK(d.data()[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("shrinkage and clipping as ReLU networks") {
  const Tensor4 z = testutil::random_tensor({1, 1, 100, 100}, 7, -3.0, 3.0);
  for (double t : {0.0, 0.4, 1.7}) {
    const ReluExpansion s = shrink_as_relu(t);
    CHECK(s.K.rows() == 2);
    CHECK(max_abs_diff(apply_relu_expansion(s, z), soft_shrink(z, t)) < 1e-12);
    const ReluExpansion c = clip_as_relu(t);
    CHECK(c.K.rows() == 4);
    CHECK(c.b == std::vector<double>{0.0, 0.0, -t, -t});
    CHECK(max_abs_diff(apply_relu_expansion(c, z), soft_clip(z, t)) < 1e-12);
  }
  CHECK(max_abs_diff(apply_relu_expansion(shrink_as_relu(0.0), z), z) < 1e-15);
  CHECK(max_abs_diff(apply_relu_expansion(clip_as_relu(1e9), z), z) < 1e-12);
  CHECK_THROWS_AS(shrink_as_relu(-1.0), DomainError);
}
