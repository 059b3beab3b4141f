#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fdl/activations.hpp"
#include "fdl/tensor.hpp"

namespace fdl {

struct Parameter {
  std::string name;
  Tensor4 value;
  Tensor4 gradient;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor4 v, bool train = true)
      : name(std::move(n)), value(std::move(v)), gradient(value.shape()), trainable(train) {}
  void zero_grad() { gradient = Tensor4(value.shape()); }
};

// Handle to a node of a Graph.
struct Var {
  std::size_t id = 0;
};

// Tape for reverse-mode differentiation. Nodes are recorded in evaluation
// order; backward() walks them in reverse and adds the parameter gradients
// into Parameter::gradient.
class Graph {
 public:
  Var constant(Tensor4 value);
  // Leaf bound to a parameter; the parameter must outlive the graph.
  Var param(Parameter& p);

  Var conv2d(Var kernel, Var x);
  // Adjoint (transposed) convolution, see conv2d_adjoint.
  Var conv_transpose(Var kernel, Var x);
  Var transpose(Var t);
  Var downsample(Var x, std::size_t s);
  Var upsample(Var x, std::size_t s);
  // Same data, new dims; sizes must agree.
  Var reshape(Var x, Shape shape);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  // x (C x M x H x W) + b (C x 1 x 1 x 1) per row.
  Var add_bias(Var x, Var b);
  Var relu(Var x);
  Var activation(Var x, const ActivationSpec& spec);
  Var concat(Var a, Var b);
  // Mean squared error, a (1 x 1 x 1 x 1) scalar.
  Var mse(Var a, Var b);

  const Tensor4& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last backward() loss with respect to v (empty if none
  // reached it).
  const Tensor4& grad(Var v) const { return nodes_[v.id].grad; }

  void backward(Var loss);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor4 value;
    Tensor4 grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    std::function<void(Graph&, Node&)> back;
  };

  Var push(Tensor4 value, bool needs_grad, std::function<void(Graph&, Node&)> back);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  void accumulate(Var v, const Tensor4& g);

  std::vector<Node> nodes_;
};

struct AdamState {
  Tensor4 m;
  Tensor4 v;
};

class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update of every trainable parameter from its gradient.
  void step(std::vector<Parameter*> params, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<AdamState> state_;
};

// U(-a, a), a = sqrt(6 / (fan_in + fan_out)), fan_in = cols*kh*kw,
// fan_out = rows*kh*kw.
Tensor4 xavier_uniform(const Shape& shape, std::mt19937_64& rng);
Tensor4 xavier_uniform(const Shape& shape, std::uint64_t seed);
double xavier_bound(const Shape& shape);

}  // namespace fdl
