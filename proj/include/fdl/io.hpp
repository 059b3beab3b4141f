#pragma once

#include <filesystem>
#include <string>

#include "fdl/network.hpp"
#include "fdl/tensor.hpp"

namespace fdl {

// Netpbm P2 or P5 (8 or 16 bit) grayscale, scaled to [0, 1]. Throws IoError.
Tensor4 read_image(const std::filesystem::path& path);
// 16-bit P5; values clamped to [0, 1].
void write_pgm16(const std::filesystem::path& path, const Tensor4& image);
// 16-bit P5 of an arbitrary-range image, min..max mapped to 0..1.
void write_pgm16_normalized(const std::filesystem::path& path, const Tensor4& image);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Raw little-endian float64 dump of a tensor's data.
void write_raw_f64(const std::filesystem::path& path, const Tensor4& t);
Tensor4 read_raw_f64(const std::filesystem::path& path, const Shape& shape);

struct CheckpointInfo {
  BiasMode bias_mode = BiasMode::learned;
  InitMode init_mode = InitMode::independent;
  double sigma_train = 0.1;
  std::uint64_t seed = 0;
};

// checkpoint.json (spec, metadata, parameter list) plus one .f64 file per
// parameter, all in `dir`.
void save_checkpoint(const std::filesystem::path& dir, Network& net, const CheckpointInfo& info);
Network load_checkpoint(const std::filesystem::path& dir, CheckpointInfo* info = nullptr);

}  // namespace fdl
