#include "fdl/activations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fdl/errors.hpp"
#include "fdl/simd/kernels.hpp"
#include "fdl/tensor_ops.hpp"

namespace fdl {

const char* to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu_bias: return "relu";
    case ActivationKind::soft_shrink: return "soft_shrink";
    case ActivationKind::soft_clip: return "soft_clip";
    case ActivationKind::garrote: return "garrote";
    case ActivationKind::dog_shrink: return "dog_shrink";
    case ActivationKind::dog_clip: return "dog_clip";
    case ActivationKind::let: return "let";
  }
  return "?";
}

ActivationKind activation_kind_from_string(const std::string& name) {
  for (auto k : {ActivationKind::relu_bias, ActivationKind::soft_shrink, ActivationKind::soft_clip,
                 ActivationKind::garrote, ActivationKind::dog_shrink, ActivationKind::dog_clip,
                 ActivationKind::let}) {
    if (name == to_string(k)) return k;
  }
  if (name == "relu_bias") return ActivationKind::relu_bias;
  throw ConfigError("unknown activation kind '" + name + "'");
}

ActivationSpec ActivationSpec::make(ActivationKind kind, double t, int p) {
  ActivationSpec s;
  s.kind = kind;
  s.t = {t};
  s.p = p;
  s.validate();
  return s;
}

ActivationSpec make_let(std::vector<LetMember> members) {
  ActivationSpec s;
  s.kind = ActivationKind::let;
  s.members = std::move(members);
  s.validate();
  return s;
}

void ActivationSpec::validate() const {
  if (kind == ActivationKind::let) {
    if (members.empty()) throw ConfigError("LET needs at least one member");
    double sum = 0.0;
    for (const auto& m : members) {
      if (m.spec.kind == ActivationKind::let) throw ConfigError("LET members cannot be LET");
      m.spec.validate();
      sum += m.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ConfigError("LET weights must sum to 1, got " + std::to_string(sum));
    }
    return;
  }
  if (t.empty()) throw ConfigError(std::string(to_string(kind)) + ": missing threshold");
  for (double v : t) {
    if (std::isnan(v) || v < 0.0) throw DomainError("threshold must be >= 0");
  }
  if (kind == ActivationKind::dog_clip || kind == ActivationKind::dog_shrink) {
    if (p < 2 || p % 2 != 0) throw ConfigError("DoG exponent p must be even and >= 2");
    for (double v : t)
      if (v <= 0.0) throw DomainError("DoG threshold must be > 0");
  }
}

double ActivationSpec::threshold(std::size_t channel) const {
  if (t.size() == 1) return t[0];
  if (channel >= t.size()) {
    throw ShapeError("activation has " + std::to_string(t.size()) + " thresholds, channel " +
                     std::to_string(channel) + " requested");
  }
  return t[channel];
}

bool ActivationSpec::is_shrinkage() const {
  switch (kind) {
    case ActivationKind::soft_shrink:
    case ActivationKind::garrote:
    case ActivationKind::dog_shrink:
    case ActivationKind::let:
      return true;
    default:
      return false;
  }
}

double map_threshold(const ThresholdParams& params) {
  if (!(params.sigma_eta > 0.0) || !(params.sigma_d > 0.0)) {
    throw DomainError("map_threshold: sigma_eta and sigma_d must be positive");
  }
  return params.sigma_eta * params.sigma_eta / params.sigma_d;
}

double relu_bias(double z, double t) { return std::max(z - t, 0.0); }

double soft_shrink(double z, double t) { return std::max(z - t, 0.0) - std::max(-z - t, 0.0); }

double soft_clip(double z, double t) { return z - soft_shrink(z, t); }

double garrote_shrink(double z, double t) {
  if (z == 0.0) return 0.0;
  return std::max(z * z - t * t, 0.0) / z;
}

double dog_clip(double z, double t, int p) { return z * std::exp(-std::pow(z / t, p)); }

double dog_shrink(double z, double t, int p) { return z - dog_clip(z, t, p); }

namespace {

double eval(const ActivationSpec& s, double z, double t) {
  switch (s.kind) {
    case ActivationKind::relu_bias: return relu_bias(z, t);
    case ActivationKind::soft_shrink: return soft_shrink(z, t);
    case ActivationKind::soft_clip: return soft_clip(z, t);
    case ActivationKind::garrote: return garrote_shrink(z, t);
    case ActivationKind::dog_shrink: return dog_shrink(z, t, s.p);
    case ActivationKind::dog_clip: return dog_clip(z, t, s.p);
    case ActivationKind::let: break;
  }
  double acc = 0.0;
  for (const auto& m : s.members) acc += m.weight * eval(m.spec, z, m.spec.t[0]);
  return acc;
}

double slope(const ActivationSpec& s, double z, double t) {
  switch (s.kind) {
    case ActivationKind::relu_bias: return z > t ? 1.0 : 0.0;
    case ActivationKind::soft_shrink: return std::abs(z) > t ? 1.0 : 0.0;
    case ActivationKind::soft_clip: return std::abs(z) < t ? 1.0 : 0.0;
    case ActivationKind::garrote: return std::abs(z) > t ? 1.0 + (t * t) / (z * z) : 0.0;
    case ActivationKind::dog_clip:
    case ActivationKind::dog_shrink: {
      const double u = std::pow(z / t, s.p);
      const double clip = std::exp(-u) * (1.0 - s.p * u);
      return s.kind == ActivationKind::dog_clip ? clip : 1.0 - clip;
    }
    case ActivationKind::let: break;
  }
  double acc = 0.0;
  for (const auto& m : s.members) acc += m.weight * slope(m.spec, z, m.spec.t[0]);
  return acc;
}

// LET members carry their own scalar thresholds; per-channel vectors apply to
// the single-kind activations only.
template <class F>
Tensor4 per_channel(const ActivationSpec& spec, const Tensor4& z, F&& f) {
  spec.validate();
  Tensor4 out(z.shape());
  const std::size_t block = z.cols() * z.shape().plane();
  const auto& kt = simd::active_kernels();
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const double t = spec.kind == ActivationKind::let ? 0.0 : spec.threshold(r);
    const double* in = z.data().data() + r * block;
    double* o = out.data().data() + r * block;
    f(kt, o, in, t, block);
  }
  return out;
}

}  // namespace

Tensor4 apply_activation(const ActivationSpec& spec, const Tensor4& z) {
  return per_channel(spec, z, [&](const simd::KernelTable& kt, double* o, const double* in,
                                  double t, std::size_t n) {
    switch (spec.kind) {
      case ActivationKind::relu_bias: kt.relu_bias(o, in, -t, n); break;
      case ActivationKind::soft_shrink: kt.soft_shrink(o, in, t, n); break;
      case ActivationKind::soft_clip: kt.soft_clip(o, in, t, n); break;
      default:
        for (std::size_t i = 0; i < n; ++i) o[i] = eval(spec, in[i], t);
    }
  });
}

Tensor4 activation_derivative(const ActivationSpec& spec, const Tensor4& z) {
  return per_channel(spec, z, [&](const simd::KernelTable&, double* o, const double* in,
                                  double t, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) o[i] = slope(spec, in[i], t);
  });
}

Tensor4 relu_bias(const Tensor4& z, double t) {
  return apply_activation(ActivationSpec::make(ActivationKind::relu_bias, t), z);
}
Tensor4 soft_shrink(const Tensor4& z, double t) {
  return apply_activation(ActivationSpec::make(ActivationKind::soft_shrink, t), z);
}
Tensor4 soft_clip(const Tensor4& z, double t) {
  return apply_activation(ActivationSpec::make(ActivationKind::soft_clip, t), z);
}
Tensor4 garrote_shrink(const Tensor4& z, double t) {
  return apply_activation(ActivationSpec::make(ActivationKind::garrote, t), z);
}
Tensor4 dog_clip(const Tensor4& z, double t, int p) {
  return apply_activation(ActivationSpec::make(ActivationKind::dog_clip, t, p), z);
}
Tensor4 dog_shrink(const Tensor4& z, double t, int p) {
  return apply_activation(ActivationSpec::make(ActivationKind::dog_shrink, t, p), z);
}
Tensor4 let_shrink(const Tensor4& z, const std::vector<LetMember>& members) {
  return apply_activation(make_let(members), z);
}

namespace {
Tensor4 column(std::initializer_list<double> v) {
  return Tensor4(Shape{v.size(), 1, 1, 1}, std::vector<double>(v));
}
}  // namespace

ReluExpansion shrink_as_relu(double t) {
  if (!(t >= 0.0)) throw DomainError("threshold must be >= 0");
  return {column({1.0, -1.0}), column({1.0, -1.0}), {-t, -t}};
}

// z - shrink(z) = (z)+ - (-z)+ - (z - t)+ + (-z - t)+
ReluExpansion clip_as_relu(double t) {
  if (!(t >= 0.0)) throw DomainError("threshold must be >= 0");
  return {column({1.0, -1.0, 1.0, -1.0}), column({1.0, -1.0, -1.0, 1.0}), {0.0, 0.0, -t, -t}};
}

Tensor4 apply_relu_expansion(const ReluExpansion& e, const Tensor4& z) {
  Tensor4 h = conv2d(e.K, z);
  if (e.b.size() != h.rows()) throw ShapeError("relu expansion: bias count mismatch");
  const std::size_t block = h.cols() * h.shape().plane();
  for (std::size_t r = 0; r < h.rows(); ++r) {
    double* p = h.data().data() + r * block;
    simd::active_kernels().relu_bias(p, p, e.b[r], block);
  }
  return conv2d_adjoint(e.K_tilde, h);
}

}  // namespace fdl
