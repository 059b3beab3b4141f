#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fdl/framelets.hpp"
#include "fdl/network.hpp"
#include "fdl/tensor.hpp"

namespace fdl {

struct TriangleDatasetConfig {
  std::size_t n_images = 192;
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t min_triangles = 3;
  std::size_t max_triangles = 8;
  double min_intensity = 0.0;
  double max_intensity = 1.0;
  std::uint64_t seed = 1;
};

// Filled triangles on a zero background; later triangles cover earlier ones.
// Intensities sit on a 2^-16 grid.
std::vector<Tensor4> gen_triangles(const TriangleDatasetConfig& cfg);

struct NoiseModel {
  double sigma_eta = 0.1;
  std::uint64_t seed = 1;
};

// i.i.d. Gaussian field rounded to a 2^-32 grid, so that (x + eta) - eta
// recovers x exactly for images on the 2^-16 grid.
Tensor4 gaussian_noise(std::size_t rows, std::size_t cols, const NoiseModel& m);
Tensor4 add_noise(const Tensor4& x, const NoiseModel& m);

// 1.4826 * median |f_HH * y| over the whole (circular) grid.
double estimate_sigma_mad(const Tensor4& y);

// 10 log10(|x|^2 / |x - x_hat|^2), limited to +-300 dB.
double snr_db(const Tensor4& reference, const Tensor4& estimate);
constexpr double kSnrCap = 300.0;

// Synthetic piecewise-constant test scene (blocks, disc, triangle, stripes).
Tensor4 test_scene(std::size_t size = 128);

struct TrainConfig {
  std::size_t epochs = 25;
  std::size_t images_per_epoch = 192;
  std::size_t batch_size = 1;
  double lr_initial = 1e-3;
  std::uint64_t seed = 1;
  InitMode init_mode = InitMode::independent;
  BiasMode bias_mode = BiasMode::learned;
  double sigma_train = 0.1;
  std::size_t image_size = 64;
  std::size_t validation_images = 8;
};

TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_snr_db = 0.0;
};

// Adam on the MSE to the clean image, learning rate decaying linearly to 0
// over all steps. Each epoch draws fresh triangle images. In adaptive mode the
// conv biases are scaled by sigma_hat / sigma_train for every input.
std::vector<EpochLog> train(Network& net, const TrainConfig& cfg);
Network train_toy(const TrainConfig& cfg, std::vector<EpochLog>* log = nullptr);

// Network output for a noisy image, with the adaptive bias scale applied when
// the network was trained that way.
Tensor4 denoise_with(Network& net, const Tensor4& y, double sigma_train);

// Deepest encoder/decoder pair (K2, K~2 for the toy model).
std::pair<std::size_t, std::size_t> deepest_pair(const NetworkSpec& spec);

struct TightFrameRun {
  InitMode init = InitMode::independent;
  PctDiagnostic diag;
  std::vector<EpochLog> log;
  Network net;
};

struct TightFrameReport {
  TrainConfig cfg;
  std::vector<TightFrameRun> runs;  // independent, shared
  bool shared_lower = false;
};

TightFrameReport run_experiment_tight_frame(const TrainConfig& cfg);

struct BiasZeroReport {
  double sigma = 0.1;
  double snr_noisy = 0.0;
  double snr_normal = 0.0;
  double snr_zero_bias = 0.0;
  // Noiseless input: distance of each model's output from its input.
  double clean_err_normal = 0.0;
  double clean_err_zero_bias = 0.0;
  Tensor4 noisy, out_normal, out_zero_bias;
};

BiasZeroReport run_experiment_bias_zero(const Network& model, const Tensor4& x, double sigma,
                                        std::uint64_t noise_seed, double sigma_train = 0.1);

inline const std::vector<double>& generalization_sigmas() {
  static const std::vector<double> s{0.100, 0.150, 0.175, 0.200, 0.225};
  return s;
}

struct GeneralizationReport {
  TrainConfig cfg;
  std::vector<std::string> models;      // baseline, adaptive, bias_free
  std::vector<double> snr_noisy;        // per sigma
  std::vector<std::vector<double>> snr; // [model][sigma]
  std::vector<std::vector<Tensor4>> outputs;
  std::vector<Tensor4> noisy;

  double degradation(std::size_t model) const { return snr[model].back() - snr[model].front(); }
};

GeneralizationReport run_experiment_generalization(const TrainConfig& cfg, const Tensor4& test);

// Report writers; everything goes under `dir`.
void write_tight_frame_report(const std::filesystem::path& dir, const TightFrameReport& r);
void write_bias_zero_report(const std::filesystem::path& dir, const std::vector<BiasZeroReport>& r,
                            const std::vector<std::string>& labels);
void write_generalization_report(const std::filesystem::path& dir, const GeneralizationReport& r);
std::string generalization_csv(const GeneralizationReport& r);

// Mosaic of a (C x C x S x S) response, one S x S tile per entry.
Tensor4 response_mosaic(const Tensor4& response);

}  // namespace fdl
