#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdl/network.hpp"

namespace fdl {

// Toy model: three encoder convs (6x1, 12x6, 24x12, 3x3) with biases and
// ReLUs, mirrored by three transposed decoder convs, single resolution.
NetworkSpec toy_spec(bool output_relu = true);
Network build_toy(std::uint64_t seed, InitMode init, BiasMode bias = BiasMode::learned);

// Simplified single-decomposition drawings.
NetworkSpec build_unet(std::size_t C0, std::size_t C1, std::size_t Nf, bool residual = false);
NetworkSpec build_red(std::size_t C0, std::size_t C1, std::size_t Nf);
// LET: soft shrinkage on the detail bands with threshold t (t = 0 is the
// reconstruction setting).
NetworkSpec build_lwfsn(std::size_t C0, std::size_t Nf, double t = 0.0);
// Residual: soft clipping on the detail bands, low band dropped.
NetworkSpec build_rlwfsn(std::size_t C0, std::size_t Nf, double t);

// Reconstruction of one block: the map from the output of layer `from`
// (kNetworkInput = image) to the output of layer `to`.
struct PRUnit {
  int from = kNetworkInput;
  std::size_t to = 0;
  double max_recon_err = 0.0;
  double gain_dc = 0.0;
  double gain_nyquist = 0.0;
  bool is_perfect = false;
};

struct PRPair {
  std::size_t encoder = 0;
  std::size_t decoder = 0;
  std::string frame;  // haar_pct, identity_pct, haar, identity
};

struct PRReport {
  std::string network;
  bool is_perfect = false;
  double gain_dc = 0.0;
  double gain_nyquist = 0.0;
  double max_recon_err = 0.0;
  double c0 = 1.0;
  double c1 = 1.0;
  std::vector<PRUnit> units;  // outermost first
  std::vector<PRPair> pairs;
};

// Instantiates every encoder/decoder pair with ideal filters (phase-
// complementary where a ReLU sits between them, a linear tight frame
// otherwise), sets biases and thresholds to their reconstruction values and
// probes each residual block plus the whole network with random signed,
// constant and checkerboard inputs.
PRReport pr_analyze(const NetworkSpec& spec, std::size_t probe_size = 32, std::uint64_t seed = 7);
std::string pr_report_json(const PRReport& r);

// Impulse response of a bias-free network on an (n x n) canvas. Refuses
// (ConfigError) unless the network acts on a random probe as circular
// convolution with that response.
Tensor4 equivalent_filter(Network& net, std::size_t n = 15, double tol = 1e-8);
// K~^T K for one pair, K and K~ both (B x C x k x k): (C x C x 2k-1 x 2k-1).
Tensor4 equivalent_filter(const Tensor4& K, const Tensor4& K_tilde);

// Sum over convs of out * in * (pixels at that layer's resolution) * Nf^2.
std::uint64_t flops(const NetworkSpec& spec, std::size_t rows, std::size_t cols);

std::uint64_t flops_unet_closed(std::uint64_t C0, std::uint64_t C1, std::uint64_t rows,
                                std::uint64_t cols, std::uint64_t Nf);
std::uint64_t flops_red_closed(std::uint64_t C0, std::uint64_t C1, std::uint64_t rows,
                               std::uint64_t cols, std::uint64_t Nf);
std::uint64_t flops_lwfsn_closed(std::uint64_t C0, std::uint64_t rows, std::uint64_t cols,
                                 std::uint64_t Nf);

}  // namespace fdl
