#include "fdl/architectures.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <random>

#include "fdl/errors.hpp"
#include "fdl/framelets.hpp"
#include "fdl/tensor_ops.hpp"

namespace fdl {

namespace {

LayerSpec conv(std::size_t out, std::size_t in, std::size_t nf, bool bias, bool transposed = false,
               int input = kPreviousLayer) {
  return {ConvLayer{out, in, nf, bias, transposed}, input};
}

LayerSpec act(ActivationSpec a) { return {ActivationLayer{std::move(a)}, kPreviousLayer}; }
LayerSpec relu_layer() { return act(ActivationSpec::make(ActivationKind::relu_bias, 0.0)); }

LayerSpec resample(ResampleDirection d, ResampleKind k, int input = kPreviousLayer) {
  return {ResampleLayer{d, k, 2}, input};
}

constexpr auto kDown = ResampleDirection::down;
constexpr auto kUp = ResampleDirection::up;

}  // namespace

NetworkSpec toy_spec(bool output_relu) {
  NetworkSpec s{"toy", false, {}};
  const std::size_t ch[4] = {1, 6, 12, 24};
  for (int l = 0; l < 3; ++l) {
    s.layers.push_back(conv(ch[l + 1], ch[l], 3, true));
    s.layers.push_back(relu_layer());
  }
  for (int l = 2; l >= 0; --l) {
    s.layers.push_back(conv(ch[l], ch[l + 1], 3, true, true));
    if (l > 0 || output_relu) s.layers.push_back(relu_layer());
  }
  return s;
}

Network build_toy(std::uint64_t seed, InitMode init, BiasMode bias) {
  return Network(toy_spec(), seed, init, bias);
}

NetworkSpec build_unet(std::size_t C0, std::size_t C1, std::size_t Nf, bool residual) {
  NetworkSpec s{residual ? "fbpconvnet" : "unet", residual, {}};
  s.layers = {
      conv(C0, 1, Nf, true),                               // 0  K0
      relu_layer(),                                        // 1
      resample(kDown, ResampleKind::dwt_low),              // 2
      conv(C1, C0, Nf, true),                              // 3  K1
      relu_layer(),                                        // 4
      conv(C0, C1, Nf, true, true),                        // 5  K~1
      relu_layer(),                                        // 6
      resample(kUp, ResampleKind::dwt_low),                // 7
      {SkipConcatLayer{1}, kPreviousLayer},                // 8
      conv(1, 2 * C0, Nf, true, true),                     // 9  K~0
  };
  return s;
}

NetworkSpec build_red(std::size_t C0, std::size_t C1, std::size_t Nf) {
  NetworkSpec s{"red", false, {}};
  s.layers = {
      conv(C0, 1, Nf, false),                 // 0  K0
      conv(C1, C0, Nf, true),                 // 1  K1
      relu_layer(),                           // 2
      conv(C0, C1, Nf, true, true),           // 3  K~1
      {SkipAddLayer{0}, kPreviousLayer},      // 4
      relu_layer(),                           // 5
      conv(1, C0, Nf, true, true),            // 6  K~0
      {SkipAddLayer{kNetworkInput}, kPreviousLayer},  // 7
      relu_layer(),                           // 8
  };
  return s;
}

NetworkSpec build_lwfsn(std::size_t C0, std::size_t Nf, double t) {
  NetworkSpec s{"lwfsn", false, {}};
  s.layers = {
      conv(C0, 1, Nf, false),                           // 0  K0
      resample(kDown, ResampleKind::dwt_high),          // 1
      act(make_let({{1.0, ActivationSpec::make(ActivationKind::soft_shrink, t)}})),  // 2
      resample(kUp, ResampleKind::dwt_high),            // 3
      resample(kDown, ResampleKind::dwt_low, 0),        // 4
      resample(kUp, ResampleKind::dwt_low),             // 5
      {SkipAddLayer{3}, kPreviousLayer},                // 6
      conv(1, C0, Nf, false, true),                     // 7  K~0
  };
  return s;
}

NetworkSpec build_rlwfsn(std::size_t C0, std::size_t Nf, double t) {
  NetworkSpec s{"rlwfsn", true, {}};
  s.layers = {
      conv(C0, 1, Nf, false),
      resample(kDown, ResampleKind::dwt_high),
      act(ActivationSpec::make(ActivationKind::soft_clip, t)),
      resample(kUp, ResampleKind::dwt_high),
      conv(1, C0, Nf, false, true),
  };
  return s;
}

namespace {

bool is_relu(const LayerSpec& L) {
  const auto* a = std::get_if<ActivationLayer>(&L.op);
  return a && a->spec.kind == ActivationKind::relu_bias;
}

// Layers reachable from `layer` by following input links, plus the image.
std::vector<int> input_chain(const NetworkSpec& s, int layer) {
  std::vector<int> chain;
  for (int i = layer; i >= 0; i = s.input_of(std::size_t(i))) chain.push_back(i);
  chain.push_back(kNetworkInput);
  return chain;
}

// A skip_add whose source feeds its own input is a residual connection; one
// that joins a parallel branch is a merge.
bool is_residual_skip(const NetworkSpec& s, std::size_t layer) {
  const auto* sk = std::get_if<SkipAddLayer>(&s.layers[layer].op);
  if (!sk) return false;
  const auto chain = input_chain(s, s.input_of(layer));
  return std::find(chain.begin(), chain.end(), sk->from) != chain.end();
}

// Zero-bias, zero-threshold version of an activation: shrinkage becomes the
// identity and clipping passes everything.
ActivationSpec neutral(const ActivationSpec& a) {
  ActivationSpec n = a;
  const double inf = std::numeric_limits<double>::infinity();
  switch (a.kind) {
    case ActivationKind::relu_bias:
    case ActivationKind::soft_shrink:
    case ActivationKind::garrote:
      n.t = {0.0};
      break;
    case ActivationKind::dog_shrink:
      n.t = {std::numeric_limits<double>::min()};
      break;
    case ActivationKind::soft_clip:
    case ActivationKind::dog_clip:
      n.t = {inf};
      break;
    case ActivationKind::let:
      for (auto& m : n.members) m.spec = neutral(m.spec);
      break;
  }
  return n;
}

struct FrameChoice {
  std::string name;
  FrameletBasis basis;
};

FrameChoice choose_frame(bool rectified, const ConvLayer& enc, std::size_t layer) {
  const std::size_t ratio = enc.out / enc.in;
  if (enc.out < enc.in) {
    throw ConfigError("layer " + std::to_string(layer) + ": encoder reduces channels (" +
                      std::to_string(enc.in) + " -> " + std::to_string(enc.out) +
                      "), no tight frame fits");
  }
  if (rectified) {
    if (ratio >= 8 && enc.nf >= 3) return {"haar_pct", phase_complement(haar_basis())};
    if (ratio >= 2) return {"identity_pct", phase_complement(identity_basis(1))};
    throw ConfigError("layer " + std::to_string(layer) +
                      ": a ReLU pair needs at least twice the input channels (" +
                      std::to_string(enc.in) + " -> " + std::to_string(enc.out) + ")");
  }
  if (ratio >= 4 && enc.nf >= 3) return {"haar", haar_basis()};
  return {"identity", identity_basis(1)};
}

void instantiate_pair(Network& net, std::size_t e, std::size_t d, const FrameletBasis& b) {
  const auto& enc = std::get<ConvLayer>(net.spec().layers[e].op);
  const std::size_t B = b.bands(), nf = enc.nf;
  const Tensor4 F = embed_centered(b.forward, nf, nf);
  const Tensor4 Ft = embed_centered(b.inverse * b.c, nf, nf);
  Tensor4& K = net.kernel(e).value;
  Tensor4& Kt = net.kernel(d).value;
  K = Tensor4(K.shape());
  Kt = Tensor4(Kt.shape());
  const std::size_t copies = Kt.rows() / enc.out;
  for (std::size_t c = 0; c < enc.in; ++c)
    for (std::size_t band = 0; band < B; ++band) {
      auto src = F.plane(band, 0);
      std::copy(src.begin(), src.end(), K.plane(c * B + band, c).begin());
      auto inv = Ft.plane(band, 0);
      for (std::size_t j = 0; j < copies; ++j) {
        std::copy(inv.begin(), inv.end(), Kt.plane(j * enc.out + c * B + band, c).begin());
      }
    }
}

Tensor4 probe(std::size_t kind, std::size_t C, std::size_t h, std::size_t w, std::mt19937_64& rng) {
  Tensor4 t(C, 1, h, w);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        double v = 1.0;
        if (kind == 0) v = u(rng);
        if (kind == 2) v = (i + j) % 2 == 0 ? 1.0 : -1.0;
        t.at(c, 0, i, j) = v;
      }
  return t;
}

}  // namespace

PRReport pr_analyze(const NetworkSpec& spec, std::size_t probe_size, std::uint64_t seed) {
  const SpecGeometry geom = validate(spec);
  const auto pairs = conv_pairs(spec);
  std::vector<bool> paired(spec.layers.size(), false);
  for (auto [e, d] : pairs) paired[e] = paired[d] = true;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (std::holds_alternative<ConvLayer>(spec.layers[i].op) && !paired[i]) {
      throw ConfigError("layer " + std::to_string(i) + ": conv has no encoder/decoder partner");
    }
  }

  NetworkSpec neutral_spec = spec;
  for (auto& L : neutral_spec.layers)
    if (auto* a = std::get_if<ActivationLayer>(&L.op)) a->spec = neutral(a->spec);
  Network net(neutral_spec, seed);
  net.zero_biases();

  PRReport rep;
  rep.network = spec.name;
  std::vector<std::size_t> partner(spec.layers.size(), 0);
  for (auto [e, d] : pairs) partner[d] = e;
  for (auto [e, d] : pairs) {
    bool rectified = false;
    int idx = spec.input_of(d);
    while (idx != int(e)) {
      if (idx < int(e)) {
        throw ConfigError("layer " + std::to_string(d) + ": decoder input does not lead back to layer " +
                          std::to_string(e));
      }
      const auto i = std::size_t(idx);
      const LayerSpec& L = spec.layers[i];
      if (is_relu(L)) rectified = true;
      if (const auto* c = std::get_if<ConvLayer>(&L.op)) {
        if (!c->transposed) {
          throw ConfigError("layer " + std::to_string(i) + ": unmatched encoder inside a pair");
        }
        idx = spec.input_of(partner[i]);
      } else if (is_residual_skip(spec, i)) {
        idx = std::get<SkipAddLayer>(L.op).from;
      } else {
        idx = spec.input_of(i);
      }
    }
    const auto& enc = std::get<ConvLayer>(spec.layers[e].op);
    FrameChoice f = choose_frame(rectified, enc, e);
    instantiate_pair(net, e, d, f.basis);
    rep.pairs.push_back({e, d, f.name});
  }

  // Blocks to probe.
  std::vector<std::pair<int, std::size_t>> blocks;
  bool input_level = false;
  std::vector<int> alias(spec.layers.size(), kPreviousLayer);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!is_residual_skip(spec, i)) continue;
    const int from = std::get<SkipAddLayer>(spec.layers[i].op).from;
    blocks.emplace_back(from, std::size_t(spec.input_of(i)));
    alias[i] = from;
    input_level = input_level || from == kNetworkInput;
  }
  if (spec.residual || !input_level) blocks.emplace_back(kNetworkInput, spec.layers.size() - 1);
  std::stable_sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  });

  std::mt19937_64 rng(seed);
  rep.is_perfect = true;
  for (auto [from, to] : blocks) {
    // Inner residual blocks count as their skip path; the block's own skip
    // lies outside (from, to].
    const std::size_t C = from < 0 ? 1 : geom.channels[std::size_t(from)];
    const std::size_t sc = from < 0 ? 1 : geom.scale[std::size_t(from)];
    if (probe_size % (sc * 2) != 0) throw ConfigError("probe size incompatible with network scale");
    const std::size_t h = probe_size / sc;
    PRUnit u{from, to};
    for (std::size_t kind = 0; kind < 3; ++kind) {
      const Tensor4 p = probe(kind, C, h, h, rng);
      Graph g;
      const Tensor4 out = g.value(net.run_layers(g, g.constant(p), from, to, alias));
      if (out.shape() != p.shape()) {
        throw ConfigError("block (" + std::to_string(from) + ", " + std::to_string(to) +
                          "] changes shape " + p.shape().str() + " -> " + out.shape().str());
      }
      const double gain = dot(out, p) / squared_norm(p);
      u.max_recon_err = std::max(u.max_recon_err, max_abs_diff(out, p));
      if (kind == 1) u.gain_dc = gain;
      if (kind == 2) u.gain_nyquist = gain;
    }
    u.is_perfect = u.max_recon_err < 1e-8 && std::abs(u.gain_dc - 1.0) < 1e-8 &&
                   std::abs(u.gain_nyquist - 1.0) < 1e-8;
    rep.is_perfect = rep.is_perfect && u.is_perfect;
    rep.max_recon_err = std::max(rep.max_recon_err, u.max_recon_err);
    rep.units.push_back(u);
  }
  rep.gain_dc = rep.units.front().gain_dc;
  rep.gain_nyquist = rep.units.front().gain_nyquist;
  return rep;
}

std::string pr_report_json(const PRReport& r) {
  using nlohmann::json;
  json units = json::array();
  for (const auto& u : r.units) {
    units.push_back({{"from", u.from},
                     {"to", u.to},
                     {"max_recon_err", u.max_recon_err},
                     {"gain_dc", u.gain_dc},
                     {"gain_nyquist", u.gain_nyquist},
                     {"is_perfect", u.is_perfect}});
  }
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"encoder", p.encoder}, {"decoder", p.decoder}, {"frame", p.frame}});
  }
  json j{{"network", r.network},   {"is_perfect", r.is_perfect},
         {"gain_dc", r.gain_dc},   {"gain_nyquist", r.gain_nyquist},
         {"max_recon_err", r.max_recon_err},
         {"c0", r.c0},             {"c1", r.c1},
         {"blocks", units},        {"pairs", pairs}};
  return j.dump(2);
}

Tensor4 equivalent_filter(Network& net, std::size_t n, double tol) {
  for (std::size_t i = 0; i < net.spec().layers.size(); ++i) {
    if (std::holds_alternative<ResampleLayer>(net.spec().layers[i].op)) {
      throw ConfigError("equivalent_filter: layer " + std::to_string(i) +
                        " resamples, the network is not shift-invariant");
    }
  }
  if (n % 2 == 0) throw ConfigError("equivalent_filter: canvas size must be odd");
  Network lin = net;
  lin.zero_biases();
  const Tensor4 h = lin.infer(Tensor4::delta(n));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor4 x = Tensor4::image(n, n);
  for (double& v : x.data()) v = u(rng);
  const Tensor4 y = lin.infer(x);
  const double err = max_abs_diff(y, conv2d(h, x));
  if (err > tol * std::max(1.0, max_abs(y))) {
    throw ConfigError("equivalent_filter: network is not a linear filter on the probe (deviation " +
                      std::to_string(err) + "); a nonlinear path lacks a phase-complementary pair");
  }
  return h;
}

Tensor4 equivalent_filter(const Tensor4& K, const Tensor4& K_tilde) {
  require_same_shape(K, K_tilde, "equivalent_filter");
  const std::size_t S = 2 * std::max(K.height(), K.width()) - 1;
  return conv2d_adjoint(K_tilde, embed_centered(K, S, S));
}

std::uint64_t flops(const NetworkSpec& spec, std::size_t rows, std::size_t cols) {
  const SpecGeometry g = validate(spec);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto* c = std::get_if<ConvLayer>(&spec.layers[i].op);
    if (!c) continue;
    const std::size_t s = g.scale[i];
    if (rows % s != 0 || cols % s != 0) {
      throw ShapeError("flops: " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " not divisible by layer " + std::to_string(i) + " scale " + std::to_string(s));
    }
    total += std::uint64_t(c->out) * c->in * (rows / s) * (cols / s) * c->nf * c->nf;
  }
  return total;
}

// (3 + C1/2) * C0 * N * Nf^2
std::uint64_t flops_unet_closed(std::uint64_t C0, std::uint64_t C1, std::uint64_t rows,
                                std::uint64_t cols, std::uint64_t Nf) {
  return (6 + C1) * C0 * rows * cols * Nf * Nf / 2;
}

// 2 * (1 + C1) * C0 * N * Nf^2
std::uint64_t flops_red_closed(std::uint64_t C0, std::uint64_t C1, std::uint64_t rows,
                               std::uint64_t cols, std::uint64_t Nf) {
  return 2 * (1 + C1) * C0 * rows * cols * Nf * Nf;
}

// 2 * C0 * N * Nf^2
std::uint64_t flops_lwfsn_closed(std::uint64_t C0, std::uint64_t rows, std::uint64_t cols,
                                 std::uint64_t Nf) {
  return 2 * C0 * rows * cols * Nf * Nf;
}

}  // namespace fdl
