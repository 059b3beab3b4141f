// Command-line front end: denoise, analyze-pr, flops, train, experiment.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fdl/architectures.hpp"
#include "fdl/errors.hpp"
#include "fdl/experiments.hpp"
#include "fdl/framelets.hpp"
#include "fdl/io.hpp"
#include "fdl/lowrank.hpp"
#include "fdl/parallel.hpp"
#include "fdl/simd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fdl;

namespace {

constexpr const char* kVersion = "0.1.0";
const std::vector<std::string> kExperiments{"tight-frame", "bias-zero", "generalization"};

enum Exit { kOk = 0, kIo = 2, kConfig = 3, kNumeric = 4 };

struct Global {
  std::size_t threads = 1;
  std::string out;
  std::vector<std::string> argv;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

fs::path run_dir(const Global& g, const std::string& fallback) {
  fs::path d = g.out.empty() ? fs::path("runs") / fallback : fs::path(g.out);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw IoError("cannot create " + d.string() + ": " + ec.message());
  return d;
}

// seed precedence: explicit flag, then FDL_SEED, then the config value
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FDL_SEED")) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("FDL_SEED is not an unsigned integer: ") + env);
    }
  }
  return config;
}

void write_manifest(const Global& g, const fs::path& dir, const std::string& command,
                    const json& config, std::optional<std::uint64_t> seed,
                    const std::vector<std::string>& outputs) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g.start).count();
  std::string cmdline;
  for (const auto& a : g.argv) cmdline += (cmdline.empty() ? "" : " ") + a;
  json m{{"command", command},
         {"argv", cmdline},
         {"config", config},
         {"seed", seed ? json(*seed) : json(nullptr)},
         {"threads", g.threads},
         {"simd", simd::active_kernels().name},
         {"tool_version", kVersion},
         {"outputs", outputs},
         {"wall_clock_seconds", secs},
         {"finished_at_unix", std::time(nullptr)}};
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<std::string> list_outputs(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel != "manifest.json") out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- denoise ---------------------------------------------------------------

struct DenoiseArgs {
  std::string input;
  std::string method = "wavelet-shrink";
  std::string t = "auto";
  bool decimated = false;
  std::size_t rank = 0;
  std::string checkpoint;
  std::string reference;
  double add_noise_sigma = 0.0;
  std::optional<std::uint64_t> seed;
};

int cmd_denoise(const Global& g, const DenoiseArgs& a) {
  Tensor4 y = read_image(a.input);
  std::optional<Tensor4> ref;
  if (!a.reference.empty()) ref = read_image(a.reference);
  json params{{"method", a.method}, {"input", a.input}};
  std::optional<std::uint64_t> seed;
  if (a.add_noise_sigma > 0.0) {
    seed = resolve_seed(a.seed, 1);
    if (!ref) ref = y;
    y = add_noise(y, {a.add_noise_sigma, *seed});
    params["add_noise"] = a.add_noise_sigma;
  }
  if (ref && ref->shape() != y.shape()) throw ShapeError("reference and input sizes differ");

  Tensor4 out;
  json metrics;
  if (a.method == "wavelet-shrink") {
    const FrameletBasis basis = haar_basis();
    ActivationSpec act = ActivationSpec::make(ActivationKind::soft_shrink, 0.0);
    const double sigma_hat = estimate_sigma_mad(y);
    metrics["sigma_hat"] = sigma_hat;
    if (a.t == "auto") {
      act.t = band_thresholds(framelet_forward(basis, y, a.decimated), sigma_hat);
    } else {
      try {
        act.t = {std::stod(a.t)};
      } catch (const std::exception&) {
        throw ConfigError("--t must be a number or 'auto', got " + a.t);
      }
    }
    json tj = json::array();
    for (double v : act.t) tj.push_back(std::isinf(v) ? json("inf") : json(v));
    metrics["thresholds"] = tj;
    params["decimated"] = a.decimated;
    out = denoise_framelet(basis, y, act, a.decimated);
  } else if (a.method == "svd-lowrank") {
    const SVDFactors f = svd(Matrix::from_image(y));
    const std::size_t rank = a.rank == 0 ? f.sigma.size() : a.rank;
    params["rank"] = rank;
    metrics["singular_values"] = f.sigma;
    out = lowrank_approx(f, rank).to_image();
  } else if (a.method == "model") {
    if (a.checkpoint.empty()) throw ConfigError("--method model needs --checkpoint");
    CheckpointInfo info;
    Network net = load_checkpoint(a.checkpoint, &info);
    params["checkpoint"] = a.checkpoint;
    metrics["sigma_train"] = info.sigma_train;
    metrics["bias_mode"] = to_string(info.bias_mode);
    out = denoise_with(net, y, info.sigma_train);
  } else {
    throw ConfigError("unknown method '" + a.method + "' (wavelet-shrink, svd-lowrank, model)");
  }
  require_finite(out, "denoised image");

  metrics["max_abs_change"] = max_abs_diff(out, y);
  if (ref) {
    metrics["snr_input_db"] = snr_db(*ref, y);
    metrics["snr_output_db"] = snr_db(*ref, out);
    metrics["snr_gain_db"] = snr_db(*ref, out) - snr_db(*ref, y);
  }
  const fs::path dir = run_dir(g, "denoise");
  write_pgm16(dir / "denoised.pgm", out);
  write_raw_f64(dir / "denoised.f64", out);
  if (a.add_noise_sigma > 0.0) write_pgm16(dir / "noisy.pgm", y);
  json m{{"params", params}, {"metrics", metrics},
         {"rows", out.height()}, {"cols", out.width()}};
  write_text(dir / "metrics.json", m.dump(2) + "\n");
  write_manifest(g, dir, "denoise", params, seed, list_outputs(dir));
  std::cout << m["metrics"].dump(2) << "\n";
  return kOk;
}

// --- analysis --------------------------------------------------------------

int cmd_analyze_pr(const Global& g, const std::string& spec_path, std::size_t probe,
                   std::optional<std::uint64_t> seed_flag) {
  const NetworkSpec spec = spec_from_json_text(read_text(spec_path));
  const std::uint64_t seed = resolve_seed(seed_flag, 7);
  const PRReport r = pr_analyze(spec, probe, seed);
  const std::string text = pr_report_json(r);
  const fs::path dir = run_dir(g, "analyze-pr-" + spec.name);
  write_text(dir / "pr_report.json", text + "\n");
  write_manifest(g, dir, "analyze-pr", {{"spec", spec_path}, {"probe_size", probe}}, seed,
                 list_outputs(dir));
  std::cout << text << "\n";
  return kOk;
}

int cmd_flops(const Global& g, const std::string& spec_path, std::size_t rows, std::size_t cols) {
  const NetworkSpec spec = spec_from_json_text(read_text(spec_path));
  const std::uint64_t n = flops(spec, rows, cols);
  json j{{"network", spec.name}, {"rows", rows}, {"cols", cols}, {"flops", n}};
  const fs::path dir = run_dir(g, "flops-" + spec.name);
  write_text(dir / "flops.json", j.dump(2) + "\n");
  write_manifest(g, dir, "flops", {{"spec", spec_path}, {"rows", rows}, {"cols", cols}},
                 std::nullopt, list_outputs(dir));
  std::cout << n << "\n";
  return kOk;
}

// --- training --------------------------------------------------------------

json log_to_json(const std::vector<EpochLog>& log) {
  json a = json::array();
  for (const auto& e : log)
    a.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_snr_db", e.val_snr_db}});
  return a;
}

int cmd_train(const Global& g, const std::string& config_path, std::optional<std::uint64_t> seed_flag) {
  TrainConfig cfg = train_config_from_json(read_text(config_path));
  cfg.seed = resolve_seed(seed_flag, cfg.seed);
  std::vector<EpochLog> log;
  Network net = train_toy(cfg, &log);
  const fs::path dir = run_dir(g, "train-seed" + std::to_string(cfg.seed));
  save_checkpoint(dir / "checkpoint", net, {cfg.bias_mode, cfg.init_mode, cfg.sigma_train, cfg.seed});
  write_text(dir / "train_log.json", log_to_json(log).dump(2) + "\n");
  write_manifest(g, dir, "train", json::parse(train_config_to_json(cfg)), cfg.seed,
                 list_outputs(dir));
  if (!log.empty()) {
    std::cout << "final train loss " << log.back().train_loss << ", validation SNR "
              << log.back().val_snr_db << " dB\n";
  }
  std::cout << "checkpoint written to " << (dir / "checkpoint").string() << "\n";
  return kOk;
}

struct ExperimentArgs {
  std::string name;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, images, size;
  std::string test_image;
};

int cmd_experiment(const Global& g, const ExperimentArgs& a) {
  if (std::find(kExperiments.begin(), kExperiments.end(), a.name) == kExperiments.end()) {
    std::string names;
    for (const auto& n : kExperiments) names += (names.empty() ? "" : ", ") + n;
    std::cerr << "error: unknown experiment '" << a.name << "'; valid names: " << names << "\n";
    return kConfig;
  }
  TrainConfig cfg;
  cfg.seed = resolve_seed(a.seed, cfg.seed);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.images) cfg.images_per_epoch = *a.images;
  if (a.size) cfg.image_size = *a.size;
  const Tensor4 test = a.test_image.empty() ? test_scene(128) : read_image(a.test_image);

  const fs::path dir = run_dir(g, a.name + "-seed" + std::to_string(cfg.seed));
  json summary;
  if (a.name == "tight-frame") {
    const TightFrameReport r = run_experiment_tight_frame(cfg);
    write_tight_frame_report(dir, r);
    summary = {{"ratio_independent", r.runs[0].diag.ratio()},
               {"ratio_shared", r.runs[1].diag.ratio()},
               {"shared_lower", r.shared_lower}};
  } else if (a.name == "bias-zero") {
    std::vector<BiasZeroReport> reports;
    std::vector<std::string> labels;
    for (InitMode m : {InitMode::independent, InitMode::shared_enc_dec}) {
      TrainConfig c = cfg;
      c.init_mode = m;
      Network net = train_toy(c);
      reports.push_back(run_experiment_bias_zero(net, test, 0.1, cfg.seed + 1, cfg.sigma_train));
      labels.push_back(to_string(m));
      summary[labels.back()] = {{"snr_normal_db", reports.back().snr_normal},
                                {"snr_zero_bias_db", reports.back().snr_zero_bias}};
    }
    write_bias_zero_report(dir, reports, labels);
  } else {
    const GeneralizationReport r = run_experiment_generalization(cfg, test);
    write_generalization_report(dir, r);
    for (std::size_t m = 0; m < r.models.size(); ++m) summary[r.models[m]] = r.degradation(m);
  }
  json config = json::parse(train_config_to_json(cfg));
  config["experiment"] = a.name;
  config["test_image"] = a.test_image.empty() ? json("synthetic") : json(a.test_image);
  write_manifest(g, dir, "experiment", config, cfg.seed, list_outputs(dir));
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Global g;
  g.argv.assign(argv, argv + argc);

  CLI::App app{"Framelet and encoder-decoder denoising tools"};
  app.require_subcommand(1);
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "run directory");
  app.set_version_flag("--version", kVersion);

  DenoiseArgs da;
  auto* den = app.add_subcommand("denoise", "denoise a grayscale image");
  den->add_option("--input", da.input, "PGM image")->required();
  den->add_option("--method", da.method, "wavelet-shrink | svd-lowrank | model");
  den->add_option("--t", da.t, "shrinkage threshold or 'auto'");
  den->add_flag("--decimated", da.decimated, "decimated Haar transform");
  den->add_option("--rank", da.rank, "number of singular values (0 = all)");
  den->add_option("--checkpoint", da.checkpoint, "checkpoint directory");
  den->add_option("--reference", da.reference, "clean image for SNR");
  den->add_option("--add-noise", da.add_noise_sigma, "add Gaussian noise first; input becomes the reference");
  den->add_option("--seed", da.seed, "noise seed");

  std::string spec_path;
  std::size_t probe = 32;
  std::optional<std::uint64_t> pr_seed;
  auto* pr = app.add_subcommand("analyze-pr", "perfect-reconstruction analysis of a network spec");
  pr->add_option("spec", spec_path, "network spec JSON")->required();
  pr->add_option("--probe-size", probe, "probe image size");
  pr->add_option("--seed", pr_seed, "probe seed");

  std::size_t rows = 0, cols = 0;
  auto* fl = app.add_subcommand("flops", "count multiply-accumulates of a network spec");
  fl->add_option("spec", spec_path, "network spec JSON")->required();
  fl->add_option("--rows", rows, "image rows")->required();
  fl->add_option("--cols", cols, "image cols")->required();

  std::string config_path;
  std::optional<std::uint64_t> train_seed;
  auto* tr = app.add_subcommand("train", "train the toy model");
  tr->add_option("config", config_path, "training config JSON")->required();
  tr->add_option("--seed", train_seed, "seed");

  ExperimentArgs ea;
  auto* ex = app.add_subcommand("experiment", "run a named experiment");
  ex->add_option("name", ea.name, "tight-frame | bias-zero | generalization")->required();
  ex->add_option("--seed", ea.seed, "seed");
  ex->add_option("--epochs", ea.epochs, "training epochs");
  ex->add_option("--images", ea.images, "images per epoch");
  ex->add_option("--size", ea.size, "training image size");
  ex->add_option("--test-image", ea.test_image, "PGM test image (default: synthetic scene)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    set_num_threads(g.threads);
    if (*den) return cmd_denoise(g, da);
    if (*pr) return cmd_analyze_pr(g, spec_path, probe, pr_seed);
    if (*fl) return cmd_flops(g, spec_path, rows, cols);
    if (*tr) return cmd_train(g, config_path, train_seed);
    if (*ex) return cmd_experiment(g, ea);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kConfig;
}
