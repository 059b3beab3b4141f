#pragma once

#include <string>
#include <vector>

#include "fdl/tensor.hpp"

namespace fdl {

enum class ActivationKind { relu_bias, soft_shrink, soft_clip, garrote, dog_shrink, dog_clip, let };

const char* to_string(ActivationKind kind);
ActivationKind activation_kind_from_string(const std::string& name);

struct LetMember;

// One nonlinearity. `t` holds a single threshold or one per channel (channel =
// row index of the feature map). `p` is used by the DoG kinds, `members` by LET.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::relu_bias;
  std::vector<double> t{0.0};
  int p = 2;
  std::vector<LetMember> members;

  // Throws ConfigError (or DomainError for negative thresholds).
  void validate() const;
  double threshold(std::size_t channel) const;
  bool is_shrinkage() const;

  static ActivationSpec make(ActivationKind kind, double t, int p = 2);
};

struct LetMember {
  double weight = 1.0;
  ActivationSpec spec;
};

ActivationSpec make_let(std::vector<LetMember> members);

struct ThresholdParams {
  double sigma_eta = 0.0;
  double sigma_d = 0.0;
};

// t = sigma_eta^2 / sigma_d.
double map_threshold(const ThresholdParams& params);

// Scalar estimators.
double relu_bias(double z, double t);
double soft_shrink(double z, double t);
double soft_clip(double z, double t);
double garrote_shrink(double z, double t);
double dog_clip(double z, double t, int p = 2);
double dog_shrink(double z, double t, int p = 2);

// Elementwise application; thresholds are taken per row of `z`.
Tensor4 apply_activation(const ActivationSpec& spec, const Tensor4& z);
// Elementwise derivative d act / dz evaluated at z (0 at kinks).
Tensor4 activation_derivative(const ActivationSpec& spec, const Tensor4& z);

Tensor4 relu_bias(const Tensor4& z, double t);
Tensor4 soft_shrink(const Tensor4& z, double t);
Tensor4 soft_clip(const Tensor4& z, double t);
Tensor4 garrote_shrink(const Tensor4& z, double t);
Tensor4 dog_clip(const Tensor4& z, double t, int p = 2);
Tensor4 dog_shrink(const Tensor4& z, double t, int p = 2);
Tensor4 let_shrink(const Tensor4& z, const std::vector<LetMember>& members);

// Shrinkage or clipping written as a one-layer ReLU network
// K~^T (K z + b)+ with 1x1 filters; K and K~ are (channels x 1 x 1 x 1).
struct ReluExpansion {
  Tensor4 K;
  Tensor4 K_tilde;
  std::vector<double> b;
};

ReluExpansion shrink_as_relu(double t);
ReluExpansion clip_as_relu(double t);
Tensor4 apply_relu_expansion(const ReluExpansion& e, const Tensor4& z);

}  // namespace fdl
