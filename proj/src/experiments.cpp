#include "fdl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <random>

#include "fdl/architectures.hpp"
#include "fdl/errors.hpp"
#include "fdl/io.hpp"
#include "fdl/tensor_ops.hpp"

namespace fdl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

constexpr std::uint64_t kValidation = 0xffffffffULL;
constexpr std::uint64_t kTestNoise = 0x7e57ULL;

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

}  // namespace

std::vector<Tensor4> gen_triangles(const TriangleDatasetConfig& cfg) {
  if (cfg.max_triangles < cfg.min_triangles || cfg.min_intensity < 0.0 || cfg.max_intensity > 1.0 ||
      cfg.min_intensity > cfg.max_intensity) {
    throw ConfigError("triangle dataset: invalid count or intensity range");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> count(cfg.min_triangles, cfg.max_triangles);
  std::uniform_real_distribution<double> px(0.0, double(cfg.cols)), py(0.0, double(cfg.rows));
  std::uniform_real_distribution<double> inten(cfg.min_intensity, cfg.max_intensity);
  std::vector<Tensor4> out;
  out.reserve(cfg.n_images);
  for (std::size_t n = 0; n < cfg.n_images; ++n) {
    Tensor4 img = Tensor4::image(cfg.rows, cfg.cols);
    const std::size_t k = count(rng);
    for (std::size_t t = 0; t < k; ++t) {
      double x[3], y[3];
      for (int v = 0; v < 3; ++v) {
        x[v] = px(rng);
        y[v] = py(rng);
      }
      const double value = std::clamp(std::round(inten(rng) * 65536.0) / 65536.0, 0.0, 1.0);
      for (std::size_t i = 0; i < cfg.rows; ++i)
        for (std::size_t j = 0; j < cfg.cols; ++j) {
          const double cx = double(j) + 0.5, cy = double(i) + 0.5;
          const double e0 = edge(x[0], y[0], x[1], y[1], cx, cy);
          const double e1 = edge(x[1], y[1], x[2], y[2], cx, cy);
          const double e2 = edge(x[2], y[2], x[0], y[0], cx, cy);
          if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) img(i, j) = value;
        }
    }
    out.push_back(std::move(img));
  }
  return out;
}

Tensor4 gaussian_noise(std::size_t rows, std::size_t cols, const NoiseModel& m) {
  if (!(m.sigma_eta >= 0.0)) throw DomainError("noise std must be >= 0");
  Tensor4 eta = Tensor4::image(rows, cols);
  if (m.sigma_eta == 0.0) return eta;
  std::mt19937_64 rng(m.seed);
  std::normal_distribution<double> n(0.0, 1.0);
  constexpr double grid = 4294967296.0;  // 2^32
  for (double& v : eta.data()) v = std::round(m.sigma_eta * n(rng) * grid) / grid;
  return eta;
}

Tensor4 add_noise(const Tensor4& x, const NoiseModel& m) {
  if (!x.is_image()) throw ShapeError("add_noise expects an image, got " + x.shape().str());
  return x + gaussian_noise(x.height(), x.width(), m);
}

double estimate_sigma_mad(const Tensor4& y) {
  if (!y.is_image() || y.height() < 2 || y.width() < 2) {
    throw ShapeError("estimate_sigma_mad needs an image of at least 2x2");
  }
  Tensor4 d = conv2d(haar_hh_filter(), y);
  std::vector<double> a(d.data().size());
  std::transform(d.data().begin(), d.data().end(), a.begin(), [](double v) { return std::abs(v); });
  const std::size_t n = a.size(), mid = n / 2;
  std::nth_element(a.begin(), a.begin() + long(mid), a.end());
  double med = a[mid];
  if (n % 2 == 0) med = 0.5 * (med + *std::max_element(a.begin(), a.begin() + long(mid)));
  return 1.4826 * med;
}

double snr_db(const Tensor4& reference, const Tensor4& estimate) {
  require_same_shape(reference, estimate, "snr_db");
  const double signal = squared_norm(reference);
  const double err = squared_norm(reference - estimate);
  if (err == 0.0) return kSnrCap;
  if (signal == 0.0) return -kSnrCap;
  return std::clamp(10.0 * std::log10(signal / err), -kSnrCap, kSnrCap);
}

Tensor4 test_scene(std::size_t size) {
  if (size < 16 || size % 2 != 0) throw ShapeError("test scene size must be even and >= 16");
  Tensor4 img = Tensor4::image(size, size, 0.25);
  const double n = double(size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      const double y = (double(i) + 0.5) / n, x = (double(j) + 0.5) / n;
      double v = 0.25;
      if (x > 0.08 && x < 0.45 && y > 0.1 && y < 0.4) v = 0.8;                    // block
      if ((x - 0.7) * (x - 0.7) + (y - 0.3) * (y - 0.3) < 0.03) v = 0.55;          // disc
      if (y > 0.55 && y < 0.92 && x > 0.1 && x < 0.1 + (y - 0.55) * 1.1) v = 0.95;  // wedge
      if (y > 0.6 && y < 0.9 && x > 0.55 && x < 0.9 && int(x * 20) % 2 == 0) v = 0.05;  // bars
      img(i, j) = v;
    }
  return img;
}

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    c.epochs = j.value("epochs", c.epochs);
    c.images_per_epoch = j.value("images_per_epoch", c.images_per_epoch);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.seed = j.value("seed", c.seed);
    c.init_mode = init_mode_from_string(j.value("init_mode", std::string(to_string(c.init_mode))));
    c.bias_mode = bias_mode_from_string(j.value("bias_mode", std::string(to_string(c.bias_mode))));
    c.sigma_train = j.value("sigma_train", c.sigma_train);
    c.image_size = j.value("image_size", c.image_size);
    c.validation_images = j.value("validation_images", c.validation_images);
    const std::string sched = j.value("lr_schedule", std::string("linear"));
    if (sched != "linear") throw ConfigError("lr_schedule must be 'linear'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (!(c.lr_initial > 0.0)) throw ConfigError("lr_initial must be > 0");
  if (c.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (c.image_size < 4 || c.image_size % 2 != 0) throw ConfigError("image_size must be even and >= 4");
  if (!(c.sigma_train > 0.0)) throw ConfigError("sigma_train must be > 0");
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j{{"epochs", c.epochs},
         {"images_per_epoch", c.images_per_epoch},
         {"batch_size", c.batch_size},
         {"lr_initial", c.lr_initial},
         {"lr_schedule", "linear"},
         {"seed", c.seed},
         {"init_mode", to_string(c.init_mode)},
         {"bias_mode", to_string(c.bias_mode)},
         {"sigma_train", c.sigma_train},
         {"image_size", c.image_size},
         {"validation_images", c.validation_images}};
  return j.dump(2);
}

Tensor4 denoise_with(Network& net, const Tensor4& y, double sigma_train) {
  const double scale =
      net.bias_mode() == BiasMode::adaptive ? estimate_sigma_mad(y) / sigma_train : 1.0;
  net.set_bias_scale(scale);
  Tensor4 out = net.infer(y);
  net.set_bias_scale(1.0);
  require_finite(out, "network output");
  return out;
}

std::vector<EpochLog> train(Network& net, const TrainConfig& cfg) {
  TriangleDatasetConfig vc;
  vc.n_images = cfg.validation_images;
  vc.rows = vc.cols = cfg.image_size;
  vc.seed = derive_seed(cfg.seed, kValidation, 1);
  const std::vector<Tensor4> val_clean = gen_triangles(vc);
  std::vector<Tensor4> val_noisy;
  for (std::size_t i = 0; i < val_clean.size(); ++i) {
    val_noisy.push_back(add_noise(val_clean[i], {cfg.sigma_train, derive_seed(cfg.seed, kValidation, 2 + i)}));
  }

  const std::size_t steps_per_epoch = (cfg.images_per_epoch + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = double(steps_per_epoch * cfg.epochs);
  std::size_t step = 0;
  Adam adam;
  auto params = net.parameters();
  std::vector<EpochLog> log;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    TriangleDatasetConfig tc;
    tc.n_images = cfg.images_per_epoch;
    tc.rows = tc.cols = cfg.image_size;
    tc.seed = derive_seed(cfg.seed, e, 1);
    const std::vector<Tensor4> clean = gen_triangles(tc);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < clean.size(); start += cfg.batch_size) {
      net.zero_grad();
      const std::size_t end = std::min(clean.size(), start + cfg.batch_size);
      for (std::size_t i = start; i < end; ++i) {
        const Tensor4 y = add_noise(clean[i], {cfg.sigma_train, derive_seed(cfg.seed, e, 2 + i)});
        net.set_bias_scale(cfg.bias_mode == BiasMode::adaptive
                               ? estimate_sigma_mad(y) / cfg.sigma_train
                               : 1.0);
        Graph g;
        const Var out = net.forward(g, g.constant(y));
        const Var loss = g.mse(out, g.constant(clean[i]));
        const double lv = g.value(loss).data()[0];
        if (!std::isfinite(lv)) {
          throw NumericError("training loss became non-finite at epoch " + std::to_string(e));
        }
        loss_sum += lv;
        g.backward(loss);
      }
      net.set_bias_scale(1.0);
      const double inv = 1.0 / double(end - start);
      for (Parameter* p : params) p->gradient *= inv;
      const double lr = cfg.lr_initial * (1.0 - double(step) / total_steps);
      adam.step(params, lr);
      ++step;
    }
    double val = 0.0;
    for (std::size_t i = 0; i < val_clean.size(); ++i) {
      val += snr_db(val_clean[i], denoise_with(net, val_noisy[i], cfg.sigma_train));
    }
    log.push_back({e, loss_sum / double(std::max<std::size_t>(clean.size(), 1)),
                   val_clean.empty() ? 0.0 : val / double(val_clean.size())});
  }
  return log;
}

Network train_toy(const TrainConfig& cfg, std::vector<EpochLog>* log) {
  Network net = build_toy(cfg.seed, cfg.init_mode, cfg.bias_mode);
  auto l = train(net, cfg);
  if (log) *log = std::move(l);
  return net;
}

std::pair<std::size_t, std::size_t> deepest_pair(const NetworkSpec& spec) {
  const auto pairs = conv_pairs(spec);
  if (pairs.empty()) throw ConfigError("network has no encoder/decoder pair");
  return pairs.front();
}

TightFrameReport run_experiment_tight_frame(const TrainConfig& cfg) {
  TightFrameReport r;
  r.cfg = cfg;
  for (InitMode m : {InitMode::independent, InitMode::shared_enc_dec}) {
    TrainConfig c = cfg;
    c.init_mode = m;
    std::vector<EpochLog> log;
    Network net = train_toy(c, &log);
    const auto [e, d] = deepest_pair(net.spec());
    PctDiagnostic diag = check_phase_complementary(net.kernel(e).value, net.kernel(d).value);
    r.runs.push_back({m, std::move(diag), std::move(log), std::move(net)});
  }
  r.shared_lower = r.runs[1].diag.ratio() < r.runs[0].diag.ratio();
  return r;
}

BiasZeroReport run_experiment_bias_zero(const Network& model, const Tensor4& x, double sigma,
                                        std::uint64_t noise_seed, double sigma_train) {
  Network normal = model;
  Network zero = model;
  zero.zero_biases();
  BiasZeroReport r;
  r.sigma = sigma;
  r.noisy = add_noise(x, {sigma, noise_seed});
  r.out_normal = denoise_with(normal, r.noisy, sigma_train);
  r.out_zero_bias = denoise_with(zero, r.noisy, sigma_train);
  r.snr_noisy = snr_db(x, r.noisy);
  r.snr_normal = snr_db(x, r.out_normal);
  r.snr_zero_bias = snr_db(x, r.out_zero_bias);
  const double n = std::sqrt(double(x.size()));
  r.clean_err_normal = std::sqrt(squared_norm(denoise_with(normal, x, sigma_train) - x)) / n;
  r.clean_err_zero_bias = std::sqrt(squared_norm(denoise_with(zero, x, sigma_train) - x)) / n;
  return r;
}

GeneralizationReport run_experiment_generalization(const TrainConfig& cfg, const Tensor4& test) {
  GeneralizationReport r;
  r.cfg = cfg;
  const std::uint64_t noise_seed = derive_seed(cfg.seed, kTestNoise);
  for (double s : generalization_sigmas()) {
    r.noisy.push_back(add_noise(test, {s, noise_seed}));
    r.snr_noisy.push_back(snr_db(test, r.noisy.back()));
  }
  const std::pair<const char*, BiasMode> variants[] = {{"baseline", BiasMode::learned},
                                                       {"adaptive", BiasMode::adaptive},
                                                       {"bias_free", BiasMode::zero_fixed}};
  for (const auto& [name, mode] : variants) {
    TrainConfig c = cfg;
    c.bias_mode = mode;
    Network net = train_toy(c);
    r.models.push_back(name);
    r.snr.emplace_back();
    r.outputs.emplace_back();
    for (const Tensor4& y : r.noisy) {
      r.outputs.back().push_back(denoise_with(net, y, cfg.sigma_train));
      r.snr.back().push_back(snr_db(test, r.outputs.back().back()));
    }
  }
  return r;
}

Tensor4 response_mosaic(const Tensor4& response) {
  const std::size_t R = response.rows(), C = response.cols();
  const std::size_t S = response.height(), T = response.width();
  Tensor4 m = Tensor4::image(R * S, C * T);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < T; ++j) m(r * S + i, c * T + j) = response.at(r, c, i, j);
  return m;
}

namespace {

json log_json(const std::vector<EpochLog>& log) {
  json a = json::array();
  for (const auto& l : log) {
    a.push_back({{"epoch", l.epoch}, {"train_loss", l.train_loss}, {"val_snr_db", l.val_snr_db}});
  }
  return a;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_tight_frame_report(const fs::path& dir, const TightFrameReport& r) {
  make_dir(dir);
  json runs = json::array();
  for (const auto& run : r.runs) {
    const std::string tag = run.init == InitMode::independent ? "independent" : "shared";
    Network net = run.net;
    save_checkpoint(dir / ("checkpoint_" + tag), net,
                    {BiasMode::learned, run.init, r.cfg.sigma_train, r.cfg.seed});
    write_pgm16_normalized(dir / ("response_" + tag + ".pgm"), response_mosaic(run.diag.response));
    runs.push_back({{"init_mode", to_string(run.init)},
                    {"diag_energy", run.diag.diag_energy},
                    {"offdiag_energy", run.diag.offdiag_energy},
                    {"offdiag_over_diag", run.diag.ratio()},
                    {"is_pct", run.diag.is_pct},
                    {"epochs", log_json(run.log)}});
  }
  json j{{"experiment", "tight-frame"},
         {"config", json::parse(train_config_to_json(r.cfg))},
         {"runs", runs},
         {"shared_ratio_lower", r.shared_lower}};
  write_text(dir / "report.json", j.dump(2) + "\n");
}

void write_bias_zero_report(const fs::path& dir, const std::vector<BiasZeroReport>& reports,
                            const std::vector<std::string>& labels) {
  make_dir(dir);
  json a = json::array();
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    const std::string tag = k < labels.size() ? labels[k] : std::to_string(k);
    if (k == 0) write_pgm16(dir / "noisy.pgm", r.noisy);
    write_pgm16(dir / ("output_" + tag + ".pgm"), r.out_normal);
    write_pgm16(dir / ("output_" + tag + "_zero_bias.pgm"), r.out_zero_bias);
    a.push_back({{"model", tag},
                 {"sigma", r.sigma},
                 {"snr_noisy_db", r.snr_noisy},
                 {"snr_normal_db", r.snr_normal},
                 {"snr_zero_bias_db", r.snr_zero_bias},
                 {"clean_input_rms_err_normal", r.clean_err_normal},
                 {"clean_input_rms_err_zero_bias", r.clean_err_zero_bias}});
  }
  write_text(dir / "report.json", json{{"experiment", "bias-zero"}, {"models", a}}.dump(2) + "\n");
}

std::string generalization_csv(const GeneralizationReport& r) {
  std::string s = "model";
  for (double sigma : generalization_sigmas()) s += "," + fmt(sigma).substr(0, 5);
  s += "\n";
  for (std::size_t m = 0; m < r.models.size(); ++m) {
    s += r.models[m];
    for (double v : r.snr[m]) s += "," + fmt(v);
    s += "\n";
  }
  return s;
}

void write_generalization_report(const fs::path& dir, const GeneralizationReport& r) {
  make_dir(dir);
  write_text(dir / "snr.csv", generalization_csv(r));
  json models = json::array();
  for (std::size_t m = 0; m < r.models.size(); ++m) {
    models.push_back({{"model", r.models[m]},
                      {"snr_db", r.snr[m]},
                      {"degradation_db", r.degradation(m)}});
    for (std::size_t k = 0; k < r.outputs[m].size(); ++k) {
      write_pgm16(dir / (r.models[m] + "_sigma" + fmt(generalization_sigmas()[k]).substr(0, 5) + ".pgm"),
                  r.outputs[m][k]);
    }
  }
  for (std::size_t k = 0; k < r.noisy.size(); ++k) {
    write_pgm16(dir / ("noisy_sigma" + fmt(generalization_sigmas()[k]).substr(0, 5) + ".pgm"), r.noisy[k]);
  }
  json j{{"experiment", "generalization"},
         {"config", json::parse(train_config_to_json(r.cfg))},
         {"sigmas", generalization_sigmas()},
         {"snr_noisy_db", r.snr_noisy},
         {"models", models}};
  write_text(dir / "report.json", j.dump(2) + "\n");
}

}  // namespace fdl
