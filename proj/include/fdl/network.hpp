#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fdl/activations.hpp"
#include "fdl/autodiff.hpp"
#include "fdl/tensor.hpp"

namespace fdl {

// Convolution with `in` input and `out` output channels and (nf x nf)
// filters. A transposed layer is a decoder convolution K~^T: its filters are
// stored with the encoder layout (in x out x nf x nf) and applied with the
// adjoint convolution.
struct ConvLayer {
  std::size_t out = 1;
  std::size_t in = 1;
  std::size_t nf = 3;
  bool bias = false;
  bool transposed = false;
};

struct ActivationLayer {
  ActivationSpec spec;
};

enum class ResampleDirection { down, up };
// plain: decimate / zero-insert. dwt_*: Haar analysis + decimation (down) or
// zero-insertion + synthesis (up) with the low band, the three detail bands,
// or all four. Bands are stacked band-major: [LL block, LH, HL, HH].
enum class ResampleKind { plain, dwt_low, dwt_high, dwt_full };

struct ResampleLayer {
  ResampleDirection direction = ResampleDirection::down;
  ResampleKind kind = ResampleKind::plain;
  std::size_t s = 2;
};

struct SkipAddLayer {
  int from = -1;
};

struct SkipConcatLayer {
  int from = -1;
};

using LayerOp = std::variant<ConvLayer, ActivationLayer, ResampleLayer, SkipAddLayer, SkipConcatLayer>;

constexpr int kNetworkInput = -1;
constexpr int kPreviousLayer = -2;

struct LayerSpec {
  LayerOp op;
  // Index of the layer feeding this one; kNetworkInput for the image,
  // kPreviousLayer for the layer before.
  int input = kPreviousLayer;
};

// Layers in evaluation order. With `residual` the network returns y - G(y).
struct NetworkSpec {
  std::string name;
  bool residual = false;
  std::vector<LayerSpec> layers;

  int input_of(std::size_t layer) const;
};

// Per-layer output channels and downsampling factor, from checking the
// channel arithmetic. Throws ConfigError naming the offending layer.
struct SpecGeometry {
  std::vector<std::size_t> channels;
  std::vector<std::size_t> scale;
};
SpecGeometry validate(const NetworkSpec& spec);

NetworkSpec spec_from_json_text(const std::string& text);
std::string spec_to_json_text(const NetworkSpec& spec);

enum class InitMode { independent, shared_enc_dec };
enum class BiasMode { learned, zero_fixed, adaptive };

const char* to_string(InitMode m);
const char* to_string(BiasMode m);
InitMode init_mode_from_string(const std::string& s);
BiasMode bias_mode_from_string(const std::string& s);

// Encoder/decoder pairs (indices into spec.layers), matched like brackets:
// a transposed conv closes the most recent open conv with out == its in and
// in == k * its out (k = concatenation multiplicity).
std::vector<std::pair<std::size_t, std::size_t>> conv_pairs(const NetworkSpec& spec);

// A NetworkSpec with parameters. Each conv layer owns a kernel and, if it has
// one, a (out x 1 x 1 x 1) bias.
class Network {
 public:
  Network(NetworkSpec spec, std::uint64_t seed, InitMode init = InitMode::independent,
          BiasMode bias = BiasMode::learned);

  const NetworkSpec& spec() const { return spec_; }
  const SpecGeometry& geometry() const { return geom_; }
  BiasMode bias_mode() const { return bias_mode_; }

  // Multiplies every conv bias in forward passes (adaptive variant).
  void set_bias_scale(double s) { bias_scale_ = s; }
  double bias_scale() const { return bias_scale_; }

  Var forward(Graph& g, Var x);
  // Evaluates layers (first, last] starting from `start`, the output of layer
  // `first` (kNetworkInput for the image). alias[j] >= kNetworkInput replaces
  // the output of layer j by the output of layer alias[j]. No residual
  // subtraction is applied. Layers may only read outputs inside the range.
  Var run_layers(Graph& g, Var start, int first, std::size_t last,
                 const std::vector<int>& alias = {});
  Tensor4 infer(const Tensor4& image);

  std::vector<Parameter*> parameters();
  // Kernel / bias parameter of a conv layer (bias may be null).
  Parameter& kernel(std::size_t layer);
  Parameter* bias(std::size_t layer);
  void zero_biases();
  void zero_grad();

 private:
  NetworkSpec spec_;
  SpecGeometry geom_;
  // index into params_ per layer, -1 if none
  BiasMode bias_mode_;
  double bias_scale_ = 1.0;
  std::vector<Parameter> params_;
  std::vector<int> kernel_index_;
  std::vector<int> bias_index_;
};

}  // namespace fdl
