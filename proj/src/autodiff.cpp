#include "fdl/autodiff.hpp"

#include <cmath>

#include "fdl/errors.hpp"
#include "fdl/tensor_ops.hpp"

namespace fdl {

Var Graph::push(Tensor4 value, bool needs_grad, std::function<void(Graph&, Node&)> back) {
  nodes_.push_back(Node{std::move(value), Tensor4(), needs_grad, nullptr, std::move(back)});
  return Var{nodes_.size() - 1};
}

void Graph::accumulate(Var v, const Tensor4& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0 && n.value.size() != 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Graph::constant(Tensor4 value) { return push(std::move(value), false, nullptr); }

Var Graph::param(Parameter& p) {
  Var v = push(p.value, p.trainable, nullptr);
  nodes_[v.id].param = &p;
  return v;
}

Var Graph::conv2d(Var k, Var x) {
  const bool ng = needs(k) || needs(x);
  return push(fdl::conv2d(value(k), value(x)), ng, [k, x](Graph& g, Node& n) {
    if (g.needs(x)) g.accumulate(x, conv2d_adjoint(g.value(k), n.grad));
    if (g.needs(k)) {
      const Tensor4& kv = g.value(k);
      g.accumulate(k, conv2d_kernel_grad(n.grad, g.value(x), kv.height(), kv.width()));
    }
  });
}

// y = conv2d_adjoint(K, x) = conv2d(flip(K^T), x). The kernel gradient of
// <G, conv2d(K', x)> is dK', and dK = flip(dK')^T.
Var Graph::conv_transpose(Var k, Var x) {
  const bool ng = needs(k) || needs(x);
  return push(conv2d_adjoint(value(k), value(x)), ng, [k, x](Graph& g, Node& n) {
    if (g.needs(x)) g.accumulate(x, fdl::conv2d(g.value(k), n.grad));
    if (g.needs(k)) {
      const Tensor4& kv = g.value(k);
      Tensor4 dkp = conv2d_kernel_grad(n.grad, g.value(x), kv.height(), kv.width());
      g.accumulate(k, tensor_transpose(flip_spatial(dkp)));
    }
  });
}

Var Graph::transpose(Var t) {
  return push(tensor_transpose(value(t)), needs(t), [t](Graph& g, Node& n) {
    g.accumulate(t, tensor_transpose(n.grad));
  });
}

// Zero-insertion is the adjoint of decimation and vice versa.
Var Graph::downsample(Var x, std::size_t s) {
  return push(fdl::downsample(value(x), s), needs(x), [x, s](Graph& g, Node& n) {
    g.accumulate(x, fdl::upsample(n.grad, s));
  });
}

Var Graph::upsample(Var x, std::size_t s) {
  return push(fdl::upsample(value(x), s), needs(x), [x, s](Graph& g, Node& n) {
    g.accumulate(x, fdl::downsample(n.grad, s));
  });
}

Var Graph::reshape(Var x, Shape shape) {
  if (shape.size() != value(x).size()) {
    throw ShapeError("reshape: " + value(x).shape().str() + " to " + shape.str());
  }
  const Shape from = value(x).shape();
  return push(Tensor4(shape, value(x).data()), needs(x), [x, from](Graph& g, Node& n) {
    g.accumulate(x, Tensor4(from, n.grad.data()));
  });
}

Var Graph::add(Var a, Var b) {
  return push(value(a) + value(b), needs(a) || needs(b), [a, b](Graph& g, Node& n) {
    g.accumulate(a, n.grad);
    g.accumulate(b, n.grad);
  });
}

Var Graph::sub(Var a, Var b) {
  return push(value(a) - value(b), needs(a) || needs(b), [a, b](Graph& g, Node& n) {
    g.accumulate(a, n.grad);
    if (g.needs(b)) g.accumulate(b, n.grad * -1.0);
  });
}

Var Graph::scale(Var a, double s) {
  return push(value(a) * s, needs(a), [a, s](Graph& g, Node& n) { g.accumulate(a, n.grad * s); });
}

Var Graph::add_bias(Var x, Var b) {
  const Tensor4& xv = value(x);
  const Tensor4& bv = value(b);
  if (bv.shape() != Shape{xv.rows(), 1, 1, 1}) {
    throw ShapeError("add_bias: bias " + bv.shape().str() + " for input " + xv.shape().str());
  }
  Tensor4 out = xv;
  const std::size_t block = xv.cols() * xv.shape().plane();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t i = 0; i < block; ++i) out.data()[r * block + i] += bv.data()[r];
  return push(std::move(out), needs(x) || needs(b), [x, b, block](Graph& g, Node& n) {
    g.accumulate(x, n.grad);
    if (g.needs(b)) {
      Tensor4 db(g.value(b).shape());
      for (std::size_t r = 0; r < db.rows(); ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < block; ++i) s += n.grad.data()[r * block + i];
        db.data()[r] = s;
      }
      g.accumulate(b, db);
    }
  });
}

Var Graph::relu(Var x) {
  return activation(x, ActivationSpec::make(ActivationKind::relu_bias, 0.0));
}

Var Graph::activation(Var x, const ActivationSpec& spec) {
  return push(apply_activation(spec, value(x)), needs(x), [x, spec](Graph& g, Node& n) {
    Tensor4 d = activation_derivative(spec, g.value(x));
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= n.grad.data()[i];
    g.accumulate(x, d);
  });
}

Var Graph::concat(Var a, Var b) {
  const std::size_t ra = value(a).rows(), rb = value(b).rows();
  return push(concat_rows(value(a), value(b)), needs(a) || needs(b),
              [a, b, ra, rb](Graph& g, Node& n) {
                if (g.needs(a)) g.accumulate(a, slice_rows(n.grad, 0, ra));
                if (g.needs(b)) g.accumulate(b, slice_rows(n.grad, ra, rb));
              });
}

Var Graph::mse(Var a, Var b) {
  require_same_shape(value(a), value(b), "mse");
  Tensor4 diff = value(a) - value(b);
  const double n = double(diff.size());
  Tensor4 loss(1, 1, 1, 1, squared_norm(diff) / n);
  return push(std::move(loss), needs(a) || needs(b),
              [a, b, diff = std::move(diff), n](Graph& g, Node& node) {
                const double s = 2.0 * node.grad.data()[0] / n;
                if (g.needs(a)) g.accumulate(a, diff * s);
                if (g.needs(b)) g.accumulate(b, diff * -s);
              });
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) throw ShapeError("backward: loss must be a scalar");
  for (auto& n : nodes_) n.grad = Tensor4();
  if (!needs(loss)) return;
  nodes_[loss.id].grad = Tensor4(1, 1, 1, 1, 1.0);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 && n.value.size() != 0) continue;
    if (n.back) n.back(*this, n);
    if (n.param && n.param->trainable) n.param->gradient += n.grad;
  }
}

void Adam::step(std::vector<Parameter*> params, double lr) {
  if (state_.empty()) {
    for (Parameter* p : params) state_.push_back({Tensor4(p->value.shape()), Tensor4(p->value.shape())});
  }
  if (state_.size() != params.size()) throw ShapeError("Adam: parameter list changed");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (!p.trainable) continue;
    AdamState& s = state_[k];
    require_same_shape(s.m, p.gradient, "Adam state");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.gradient.data()[i];
      double& m = s.m.data()[i];
      double& v = s.v.data()[i];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      const double mh = m / c1, vh = v / c2;
      p.value.data()[i] -= lr * mh / (std::sqrt(vh) + eps_);
    }
  }
}

double xavier_bound(const Shape& shape) {
  const double area = double(shape.height * shape.width);
  const double fan_in = double(shape.cols) * area, fan_out = double(shape.rows) * area;
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor4 xavier_uniform(const Shape& shape, std::mt19937_64& rng) {
  const double a = xavier_bound(shape);
  std::uniform_real_distribution<double> u(-a, a);
  Tensor4 t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

Tensor4 xavier_uniform(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return xavier_uniform(shape, rng);
}

}  // namespace fdl
