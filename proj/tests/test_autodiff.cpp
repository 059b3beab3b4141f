#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "fdl/autodiff.hpp"
#include "fdl/errors.hpp"
#include "fdl/tensor_ops.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"

using namespace fdl;
using testutil::random_tensor;
using testutil::GradCase;
using testutil::away_from;
using testutil::gradient_check;


TEST_CASE("conv2d gradient (spec example)") {
  GradCase c{{Parameter("k", random_tensor({1, 1, 3, 3}, 1))},
             [x = random_tensor({1, 1, 8, 8}, 2)](Graph& g, const std::vector<Var>& v) {
               return g.conv2d(v[0], g.constant(x));
             },
             {}};
  CHECK(gradient_check(c, 1, 20, 1e-5) < 1e-4);
}

TEST_CASE("convolution gradients in kernel and signal") {
  GradCase c{{Parameter("k", random_tensor({3, 2, 3, 3}, 3)), Parameter("x", random_tensor({2, 1, 6, 8}, 4))},
             [](Graph& g, const std::vector<Var>& v) { return g.conv2d(v[0], v[1]); },
             {}};
  CHECK(gradient_check(c, 2) < 1e-4);
  GradCase t{{Parameter("k", random_tensor({3, 2, 3, 3}, 5)), Parameter("x", random_tensor({3, 1, 6, 8}, 6))},
             [](Graph& g, const std::vector<Var>& v) { return g.conv_transpose(v[0], v[1]); },
             {}};
  CHECK(gradient_check(t, 3) < 1e-4);
  GradCase k5{{Parameter("k", random_tensor({2, 2, 5, 3}, 7)), Parameter("x", random_tensor({2, 1, 8, 8}, 8))},
              [](Graph& g, const std::vector<Var>& v) { return g.conv2d(v[0], v[1]); },
              {}};
  CHECK(gradient_check(k5, 4) < 1e-4);
}

TEST_CASE("structural op gradients") {
  GradCase tr{{Parameter("k", random_tensor({3, 2, 3, 3}, 9))},
              [](Graph& g, const std::vector<Var>& v) { return g.transpose(v[0]); },
              {}};
  CHECK(gradient_check(tr, 5) < 1e-4);
  GradCase ds{{Parameter("x", random_tensor({2, 1, 8, 8}, 10))},
              [](Graph& g, const std::vector<Var>& v) { return g.downsample(v[0], 2); },
              {}};
  CHECK(gradient_check(ds, 6) < 1e-4);
  GradCase us{{Parameter("x", random_tensor({2, 1, 4, 4}, 11))},
              [](Graph& g, const std::vector<Var>& v) { return g.upsample(v[0], 2); },
              {}};
  CHECK(gradient_check(us, 7) < 1e-4);
  GradCase rs{{Parameter("x", random_tensor({4, 1, 4, 4}, 12))},
              [](Graph& g, const std::vector<Var>& v) { return g.reshape(v[0], {1, 4, 4, 4}); },
              {}};
  CHECK(gradient_check(rs, 8) < 1e-4);
  GradCase cat{{Parameter("a", random_tensor({2, 1, 4, 4}, 13)), Parameter("b", random_tensor({3, 1, 4, 4}, 14))},
               [](Graph& g, const std::vector<Var>& v) { return g.concat(v[0], v[1]); },
               {}};
  CHECK(gradient_check(cat, 9) < 1e-4);
}

TEST_CASE("arithmetic op gradients") {
  auto two = [](std::uint64_t s) {
    return std::vector<Parameter>{Parameter("a", random_tensor({2, 1, 4, 4}, s)),
                                  Parameter("b", random_tensor({2, 1, 4, 4}, s + 1))};
  };
  GradCase add{two(20), [](Graph& g, const std::vector<Var>& v) { return g.add(v[0], v[1]); }, {}};
  CHECK(gradient_check(add, 10) < 1e-4);
  GradCase sub{two(22), [](Graph& g, const std::vector<Var>& v) { return g.sub(v[0], v[1]); }, {}};
  CHECK(gradient_check(sub, 11) < 1e-4);
  GradCase sc{two(24), [](Graph& g, const std::vector<Var>& v) { return g.scale(v[0], -1.7); }, {}};
  sc.params.pop_back();
  CHECK(gradient_check(sc, 12) < 1e-4);
  GradCase bias{{Parameter("x", random_tensor({3, 1, 4, 4}, 26)), Parameter("b", random_tensor({3, 1, 1, 1}, 27))},
                [](Graph& g, const std::vector<Var>& v) { return g.add_bias(v[0], v[1]); },
                {}};
  CHECK(gradient_check(bias, 13) < 1e-4);
  GradCase mse{two(28), [](Graph& g, const std::vector<Var>& v) { return g.mse(v[0], v[1]); }, {}};
  CHECK(gradient_check(mse, 14) < 1e-4);
}

TEST_CASE("activation gradients") {
  const double t = 0.4;
  GradCase r{{Parameter("z", away_from(random_tensor({2, 1, 6, 6}, 30), 0.0))},
             [](Graph& g, const std::vector<Var>& v) { return g.relu(v[0]); },
             {}};
  CHECK(gradient_check(r, 15) < 1e-4);
  const ActivationKind kinds[] = {ActivationKind::relu_bias, ActivationKind::soft_shrink,
                                  ActivationKind::soft_clip, ActivationKind::garrote,
                                  ActivationKind::dog_shrink, ActivationKind::dog_clip};
  std::uint64_t s = 40;
  for (ActivationKind k : kinds) {
    CAPTURE(to_string(k));
    const ActivationSpec spec = ActivationSpec::make(k, t);
    GradCase c{{Parameter("z", away_from(random_tensor({2, 1, 6, 6}, s), t))},
               [spec](Graph& g, const std::vector<Var>& v) { return g.activation(v[0], spec); },
               {}};
    CHECK(gradient_check(c, s++) < 1e-4);
  }
  const ActivationSpec let = make_let({{0.3, ActivationSpec::make(ActivationKind::soft_shrink, t)},
                                       {0.7, ActivationSpec::make(ActivationKind::dog_shrink, 0.2)}});
  GradCase l{{Parameter("z", away_from(random_tensor({2, 1, 6, 6}, 60), t))},
             [let](Graph& g, const std::vector<Var>& v) { return g.activation(v[0], let); },
             {}};
  CHECK(gradient_check(l, 61) < 1e-4);
}

TEST_CASE("gradient through a small encoder-decoder") {
  const Tensor4 x = random_tensor({1, 1, 8, 8}, 70);
  GradCase c{{Parameter("k0", random_tensor({4, 1, 3, 3}, 71)), Parameter("b0", random_tensor({4, 1, 1, 1}, 72)),
              Parameter("k1", random_tensor({4, 1, 3, 3}, 73))},
             [x](Graph& g, const std::vector<Var>& v) {
               Var h = g.add_bias(g.conv2d(v[0], g.constant(x)), v[1]);
               h = g.activation(h, ActivationSpec::make(ActivationKind::dog_shrink, 0.3));
               h = g.upsample(g.downsample(h, 2), 2);
               return g.sub(g.constant(x), g.conv_transpose(v[2], h));
             },
             {}};
  CHECK(gradient_check(c, 74) < 1e-4);
}

TEST_CASE("relu subgradient at zero is zero") {
  Parameter z("z", Tensor4(Shape{1, 1, 1, 3}, std::vector<double>{0.0, 1.0, -1.0}));
  Graph g;
  const Var out = g.relu(g.param(z));
  g.backward(g.mse(out, g.constant(Tensor4(Shape{1, 1, 1, 3}, -1.0))));
  CHECK(z.gradient.data()[0] == 0.0);
  CHECK(z.gradient.data()[1] != 0.0);
  CHECK(z.gradient.data()[2] == 0.0);
}

TEST_CASE("disconnected parameter gets zero gradient") {
  Parameter used("a", random_tensor({1, 1, 4, 4}, 80));
  Parameter unused("b", random_tensor({1, 1, 4, 4}, 81));
  unused.gradient = Tensor4(unused.value.shape(), 5.0);
  unused.zero_grad();
  Graph g;
  const Var a = g.param(used);
  g.param(unused);
  g.backward(g.mse(a, g.constant(Tensor4(Shape{1, 1, 4, 4}))));
  CHECK(max_abs(unused.gradient) == 0.0);
  CHECK(max_abs(used.gradient) > 0.0);
}

TEST_CASE("transposed convolution is the adjoint") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Tensor4 k = random_tensor({5, 3, 3, 3}, 90 + s);
    const Tensor4 x = random_tensor({3, 1, 10, 8}, 100 + s);
    const Tensor4 y = random_tensor({5, 1, 10, 8}, 110 + s);
    Graph g;
    const Var kv = g.constant(k);
    const double lhs = dot(g.value(g.conv2d(kv, g.constant(x))), y);
    const double rhs = dot(x, g.value(g.conv_transpose(kv, g.constant(y))));
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("graph shape errors") {
  Graph g;
  const Var a = g.constant(Tensor4(2, 1, 4, 4));
  const Var b = g.constant(Tensor4(3, 1, 4, 4));
  CHECK_THROWS_AS(g.add(a, b), ShapeError);
  CHECK_THROWS_AS(g.reshape(a, {1, 1, 4, 4}), ShapeError);
  CHECK_THROWS_AS(g.conv2d(g.constant(Tensor4(1, 3, 3, 3)), a), ShapeError);
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p("p", random_tensor({2, 1, 3, 3}, 120));
    const Tensor4 before = p.value;
    Adam opt;
    for (int i = 0; i < 10; ++i) {
      p.zero_grad();
      opt.step({&p}, 1e-2);
    }
    CHECK(p.value.data() == before.data());
  }
  SUBCASE("constant gradient moves against its sign") {
    Parameter p("p", Tensor4(Shape{1, 1, 1, 2}, std::vector<double>{0.0, 0.0}));
    Adam opt;
    for (int i = 0; i < 50; ++i) {
      p.gradient = Tensor4(Shape{1, 1, 1, 2}, std::vector<double>{3.0, -0.5});
      opt.step({&p}, 1e-2);
    }
    CHECK(p.value.data()[0] < 0.0);
    CHECK(p.value.data()[1] > 0.0);
    CHECK(p.value.data()[0] == doctest::Approx(-0.5).epsilon(1e-6));
  }
  SUBCASE("quadratic bowl") {
    Parameter p("p", random_tensor({1, 1, 4, 4}, 121, -0.5, 0.5));
    const Tensor4 centre = random_tensor({1, 1, 4, 4}, 122, -0.5, 0.5);
    auto loss = [&] {
      Graph g;
      const Var l = g.mse(g.param(p), g.constant(centre));
      p.zero_grad();
      g.backward(l);
      return g.value(l).data()[0];
    };
    const double initial = loss();
    Adam opt;
    for (int i = 0; i < 200; ++i) {
      loss();
      opt.step({&p}, 1e-2);
    }
    CHECK(loss() < 1e-4 * initial);
  }
  SUBCASE("frozen parameters are skipped") {
    Parameter p("p", Tensor4(Shape{1, 1, 1, 1}, 1.0), false);
    p.gradient = Tensor4(Shape{1, 1, 1, 1}, 1.0);
    Adam opt;
    opt.step({&p}, 0.1);
    CHECK(p.value.data()[0] == 1.0);
  }
}

TEST_CASE("Xavier uniform") {
  const Shape s{24, 12, 3, 3};
  const double a = xavier_bound(s);
  CHECK(a == doctest::Approx(std::sqrt(6.0 / (12 * 9 + 24 * 9))));
  CHECK(xavier_uniform(s, 5).data() == xavier_uniform(s, 5).data());
  CHECK(xavier_uniform(s, 5).data() != xavier_uniform(s, 6).data());

  const Shape big{120, 100, 3, 3};
  const Tensor4 w = xavier_uniform(big, 9);
  REQUIRE(w.size() >= 100000);
  const double ab = xavier_bound(big);
  double mean = 0.0, sq = 0.0;
  for (double v : w.data()) {
    CHECK(std::abs(v) <= ab);
    mean += v;
  }
  mean /= double(w.size());
  for (double v : w.data()) sq += (v - mean) * (v - mean);
  const double var = sq / double(w.size());
  CHECK(std::abs(var - ab * ab / 3.0) < 0.05 * ab * ab / 3.0);
}
