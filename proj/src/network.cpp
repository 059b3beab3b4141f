#include "fdl/network.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <random>

#include "fdl/errors.hpp"
#include "fdl/framelets.hpp"

namespace fdl {

using nlohmann::json;

int NetworkSpec::input_of(std::size_t layer) const {
  const int in = layers.at(layer).input;
  return in == kPreviousLayer ? int(layer) - 1 : in;
}

namespace {

std::string where(std::size_t i) { return "layer " + std::to_string(i) + ": "; }

std::size_t band_count(ResampleKind k) {
  switch (k) {
    case ResampleKind::dwt_low: return 1;
    case ResampleKind::dwt_high: return 3;
    case ResampleKind::dwt_full: return 4;
    case ResampleKind::plain: break;
  }
  return 1;
}

}  // namespace

SpecGeometry validate(const NetworkSpec& spec) {
  if (spec.layers.empty()) throw ConfigError("network '" + spec.name + "' has no layers");
  SpecGeometry g;
  auto ch = [&](int idx) { return idx < 0 ? std::size_t(1) : g.channels[std::size_t(idx)]; };
  auto sc = [&](int idx) { return idx < 0 ? std::size_t(1) : g.scale[std::size_t(idx)]; };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& L = spec.layers[i];
    const int in = spec.input_of(i);
    if (in < kNetworkInput || in >= int(i)) {
      throw ConfigError(where(i) + "input " + std::to_string(in) + " is not an earlier layer");
    }
    std::size_t c = ch(in), s = sc(in);
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            if (op.in != c) {
              throw ConfigError(where(i) + "conv expects " + std::to_string(op.in) +
                                " input channels, receives " + std::to_string(c));
            }
            if (op.nf % 2 == 0 || op.out == 0) throw ConfigError(where(i) + "conv needs odd nf and out >= 1");
            c = op.out;
          } else if constexpr (std::is_same_v<T, ActivationLayer>) {
            try {
              op.spec.validate();
            } catch (const Error& e) {
              throw ConfigError(where(i) + e.what());
            }
            if (op.spec.t.size() != 1 && op.spec.t.size() != c) {
              throw ConfigError(where(i) + "activation has " + std::to_string(op.spec.t.size()) +
                                " thresholds for " + std::to_string(c) + " channels");
            }
          } else if constexpr (std::is_same_v<T, ResampleLayer>) {
            if (op.s == 0) throw ConfigError(where(i) + "resample factor must be >= 1");
            if (op.kind != ResampleKind::plain && op.s != 2) {
              throw ConfigError(where(i) + "dwt resampling requires s = 2");
            }
            const std::size_t b = band_count(op.kind);
            if (op.direction == ResampleDirection::down) {
              s *= op.s;
              c *= b;
            } else {
              if (s % op.s != 0) throw ConfigError(where(i) + "upsampling above input resolution");
              if (c % b != 0) {
                throw ConfigError(where(i) + std::to_string(c) + " channels do not split into " +
                                  std::to_string(b) + " bands");
              }
              s /= op.s;
              c /= b;
            }
          } else {
            if (op.from < kNetworkInput || op.from >= int(i)) {
              throw ConfigError(where(i) + "skip source " + std::to_string(op.from) +
                                " is not an earlier layer");
            }
            if (sc(op.from) != s) throw ConfigError(where(i) + "skip joins different resolutions");
            if constexpr (std::is_same_v<T, SkipAddLayer>) {
              if (ch(op.from) != c) {
                throw ConfigError(where(i) + "skip_add joins " + std::to_string(c) + " and " +
                                  std::to_string(ch(op.from)) + " channels");
              }
            } else {
              c += ch(op.from);
            }
          }
        },
        L.op);
    g.channels.push_back(c);
    g.scale.push_back(s);
  }
  if (g.channels.back() != 1 || g.scale.back() != 1) {
    throw ConfigError("network '" + spec.name + "' must end with 1 channel at full resolution, got " +
                      std::to_string(g.channels.back()) + " channels at 1/" +
                      std::to_string(g.scale.back()));
  }
  return g;
}

namespace {

const char* kind_name(ResampleKind k) {
  switch (k) {
    case ResampleKind::plain: return "plain";
    case ResampleKind::dwt_low: return "dwt_low";
    case ResampleKind::dwt_high: return "dwt_high";
    case ResampleKind::dwt_full: return "dwt_full";
  }
  return "?";
}

json activation_json(const ActivationSpec& a) {
  json j{{"kind", to_string(a.kind)}};
  if (a.kind == ActivationKind::let) {
    json m = json::array();
    for (const auto& mem : a.members) {
      json e = activation_json(mem.spec);
      e["weight"] = mem.weight;
      m.push_back(e);
    }
    j["members"] = m;
    return j;
  }
  if (a.t.size() == 1) {
    j["t"] = std::isinf(a.t[0]) ? json("inf") : json(a.t[0]);
  } else {
    j["t"] = a.t;
  }
  if (a.kind == ActivationKind::dog_clip || a.kind == ActivationKind::dog_shrink) j["p"] = a.p;
  return j;
}

double threshold_value(const json& v) {
  if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

ActivationSpec activation_from_json(const json& j) {
  ActivationSpec a;
  a.kind = activation_kind_from_string(j.at("kind").get<std::string>());
  if (a.kind == ActivationKind::let) {
    for (const auto& m : j.at("members")) {
      a.members.push_back({m.value("weight", 1.0), activation_from_json(m)});
    }
    return a;
  }
  if (j.contains("t")) {
    const json& t = j.at("t");
    a.t.clear();
    if (t.is_array()) {
      for (const auto& v : t) a.t.push_back(threshold_value(v));
    } else {
      a.t.push_back(threshold_value(t));
    }
  }
  a.p = j.value("p", 2);
  return a;
}

}  // namespace

NetworkSpec spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network spec is not valid JSON: ") + e.what());
  }
  NetworkSpec spec;
  std::size_t i = 0;
  try {
    spec.name = j.value("name", std::string("network"));
    spec.residual = j.value("residual", false);
    for (const auto& l : j.at("layers")) {
      LayerSpec L;
      L.input = l.value("input", kPreviousLayer);
      const std::string type = l.at("type").get<std::string>();
      if (type == "conv") {
        ConvLayer c;
        c.out = l.at("out").get<std::size_t>();
        c.in = l.at("in").get<std::size_t>();
        c.nf = l.value("nf", std::size_t(3));
        c.bias = l.value("bias", false);
        c.transposed = l.value("transposed", false);
        L.op = c;
      } else if (type == "activation") {
        L.op = ActivationLayer{activation_from_json(l)};
      } else if (type == "resample") {
        ResampleLayer r;
        const std::string dir = l.at("direction").get<std::string>();
        if (dir != "down" && dir != "up") throw ConfigError("direction must be down or up");
        r.direction = dir == "down" ? ResampleDirection::down : ResampleDirection::up;
        const std::string kind = l.value("kind", std::string("plain"));
        bool found = false;
        for (auto k : {ResampleKind::plain, ResampleKind::dwt_low, ResampleKind::dwt_high,
                       ResampleKind::dwt_full}) {
          if (kind == kind_name(k)) {
            r.kind = k;
            found = true;
          }
        }
        if (!found) throw ConfigError("unknown resample kind '" + kind + "'");
        r.s = l.value("s", std::size_t(2));
        L.op = r;
      } else if (type == "skip_add") {
        L.op = SkipAddLayer{l.at("from").get<int>()};
      } else if (type == "skip_concat") {
        L.op = SkipConcatLayer{l.at("from").get<int>()};
      } else {
        throw ConfigError("unknown layer type '" + type + "'");
      }
      spec.layers.push_back(L);
      ++i;
    }
  } catch (const json::exception& e) {
    throw ConfigError(where(i) + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where(i) + e.what());
  }
  validate(spec);
  return spec;
}

std::string spec_to_json_text(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& L : spec.layers) {
    json l;
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            l = {{"type", "conv"}, {"out", op.out}, {"in", op.in}, {"nf", op.nf}, {"bias", op.bias}};
            if (op.transposed) l["transposed"] = true;
          } else if constexpr (std::is_same_v<T, ActivationLayer>) {
            l = activation_json(op.spec);
            l["type"] = "activation";
          } else if constexpr (std::is_same_v<T, ResampleLayer>) {
            l = {{"type", "resample"},
                 {"direction", op.direction == ResampleDirection::down ? "down" : "up"},
                 {"kind", kind_name(op.kind)},
                 {"s", op.s}};
          } else if constexpr (std::is_same_v<T, SkipAddLayer>) {
            l = {{"type", "skip_add"}, {"from", op.from}};
          } else {
            l = {{"type", "skip_concat"}, {"from", op.from}};
          }
        },
        L.op);
    if (L.input != kPreviousLayer) l["input"] = L.input;
    layers.push_back(l);
  }
  json j{{"name", spec.name}, {"residual", spec.residual}, {"layers", layers}};
  return j.dump(2);
}

const char* to_string(InitMode m) {
  return m == InitMode::independent ? "independent" : "shared_enc_dec";
}

const char* to_string(BiasMode m) {
  switch (m) {
    case BiasMode::learned: return "learned";
    case BiasMode::zero_fixed: return "zero_fixed";
    case BiasMode::adaptive: return "adaptive";
  }
  return "?";
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "independent") return InitMode::independent;
  if (s == "shared_enc_dec") return InitMode::shared_enc_dec;
  throw ConfigError("unknown init mode '" + s + "' (independent, shared_enc_dec)");
}

BiasMode bias_mode_from_string(const std::string& s) {
  for (auto m : {BiasMode::learned, BiasMode::zero_fixed, BiasMode::adaptive})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown bias mode '" + s + "' (learned, zero_fixed, adaptive)");
}

std::vector<std::pair<std::size_t, std::size_t>> conv_pairs(const NetworkSpec& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto* c = std::get_if<ConvLayer>(&spec.layers[i].op);
    if (!c) continue;
    if (!c->transposed) {
      open.push_back(i);
      continue;
    }
    if (open.empty()) throw ConfigError(where(i) + "decoder conv without an encoder partner");
    const auto& e = std::get<ConvLayer>(spec.layers[open.back()].op);
    if (c->out != e.in || c->in % e.out != 0 || c->nf != e.nf) {
      throw ConfigError(where(i) + "decoder conv does not mirror layer " +
                        std::to_string(open.back()));
    }
    pairs.emplace_back(open.back(), i);
    open.pop_back();
  }
  return pairs;
}

Network::Network(NetworkSpec spec, std::uint64_t seed, InitMode init, BiasMode bias)
    : spec_(std::move(spec)), geom_(validate(spec_)), bias_mode_(bias) {
  std::mt19937_64 rng(seed);
  kernel_index_.assign(spec_.layers.size(), -1);
  bias_index_.assign(spec_.layers.size(), -1);
  std::size_t count = 0;
  for (const auto& L : spec_.layers)
    if (const auto* c = std::get_if<ConvLayer>(&L.op)) count += c->bias ? 2 : 1;
  params_.reserve(count);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto* c = std::get_if<ConvLayer>(&spec_.layers[i].op);
    if (!c) continue;
    const Shape ks = c->transposed ? Shape{c->in, c->out, c->nf, c->nf}
                                   : Shape{c->out, c->in, c->nf, c->nf};
    const std::string base = "L" + std::to_string(i);
    kernel_index_[i] = int(params_.size());
    params_.emplace_back(base + ".kernel", xavier_uniform(ks, rng));
    if (c->bias) {
      bias_index_[i] = int(params_.size());
      params_.emplace_back(base + ".bias", Tensor4(c->out, 1, 1, 1),
                           bias != BiasMode::zero_fixed);
    }
  }
  if (init == InitMode::shared_enc_dec) {
    for (auto [enc, dec] : conv_pairs(spec_)) {
      Parameter& ke = kernel(enc);
      Parameter& kd = kernel(dec);
      if (ke.value.shape() == kd.value.shape()) kd.value = ke.value;
    }
  }
}

Parameter& Network::kernel(std::size_t layer) {
  if (kernel_index_.at(layer) < 0) throw ConfigError(where(layer) + "not a conv layer");
  return params_[std::size_t(kernel_index_[layer])];
}

Parameter* Network::bias(std::size_t layer) {
  const int b = bias_index_.at(layer);
  return b < 0 ? nullptr : &params_[std::size_t(b)];
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

void Network::zero_biases() {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i)
    if (Parameter* b = bias(i)) b->value = Tensor4(b->value.shape());
}

void Network::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

namespace {

Tensor4 band_filters(ResampleKind k, bool inverse) {
  const HaarDWT& d = haar_dwt();
  switch (k) {
    case ResampleKind::dwt_low: return inverse ? d.low_inverse() : d.low();
    case ResampleKind::dwt_high: return inverse ? d.high_inverse() : d.high();
    default: return inverse ? d.W_tilde : d.W;
  }
}

}  // namespace

Var Network::forward(Graph& g, Var x) {
  const Tensor4& xv = g.value(x);
  if (!xv.is_image()) throw ShapeError("network input must be an image, got " + xv.shape().str());
  const std::size_t need = *std::max_element(geom_.scale.begin(), geom_.scale.end());
  if (xv.height() % need != 0 || xv.width() % need != 0) {
    throw ShapeError("image " + xv.shape().str() + " not divisible by network scale " +
                     std::to_string(need));
  }
  const Var out = run_layers(g, x, kNetworkInput, spec_.layers.size() - 1);
  return spec_.residual ? g.sub(x, out) : out;
}

Var Network::run_layers(Graph& g, Var start, int first, std::size_t last,
                        const std::vector<int>& alias) {
  if (first < kNetworkInput || first >= int(last) || last >= spec_.layers.size()) {
    throw ConfigError("run_layers: empty or invalid range");
  }
  std::vector<Var> outs(spec_.layers.size());
  auto at = [&](int idx) -> Var {
    if (idx == first) return start;
    if (idx < first) {
      throw ConfigError("layer range starting after " + std::to_string(first) + " reads layer " +
                        std::to_string(idx));
    }
    return outs[std::size_t(idx)];
  };
  for (std::size_t i = std::size_t(first + 1); i <= last; ++i) {
    if (i < alias.size() && alias[i] >= kNetworkInput) {
      outs[i] = at(alias[i]);
      continue;
    }
    const Var in = at(spec_.input_of(i));
    outs[i] = std::visit(
        [&](const auto& op) -> Var {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            const Var k = g.param(kernel(i));
            Var r = op.transposed ? g.conv_transpose(k, in) : g.conv2d(k, in);
            if (Parameter* b = bias(i)) {
              Var bv = g.param(*b);
              if (bias_scale_ != 1.0) bv = g.scale(bv, bias_scale_);
              r = g.add_bias(r, bv);
            }
            return r;
          } else if constexpr (std::is_same_v<T, ActivationLayer>) {
            return g.activation(in, op.spec);
          } else if constexpr (std::is_same_v<T, ResampleLayer>) {
            const bool down = op.direction == ResampleDirection::down;
            if (op.kind == ResampleKind::plain) {
              return down ? g.downsample(in, op.s) : g.upsample(in, op.s);
            }
            const Shape s = g.value(in).shape();
            if (down) {
              // Channels move to the column axis so one filter bank acts on each.
              const Tensor4 W = band_filters(op.kind, false);
              Var r = g.reshape(in, {1, s.rows, s.height, s.width});
              r = g.downsample(g.conv2d(g.constant(W), r), 2);
              return g.reshape(r, {W.rows() * s.rows, 1, s.height / 2, s.width / 2});
            }
            const Tensor4 Wt = band_filters(op.kind, true);
            const std::size_t c = s.rows / Wt.rows();
            Var r = g.reshape(in, {Wt.rows(), c, s.height, s.width});
            r = g.conv_transpose(g.constant(Wt), g.upsample(r, 2));
            return g.reshape(r, {c, 1, s.height * 2, s.width * 2});
          } else if constexpr (std::is_same_v<T, SkipAddLayer>) {
            return g.add(in, at(op.from));
          } else {
            return g.concat(in, at(op.from));
          }
        },
        spec_.layers[i].op);
  }
  return outs[last];
}

Tensor4 Network::infer(const Tensor4& image) {
  Graph g;
  const Var out = forward(g, g.constant(image));
  return g.value(out);
}

}  // namespace fdl
