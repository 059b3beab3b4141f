#include "fdl/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fdl/errors.hpp"

namespace fdl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(char(ch));
  }
  return tok;
}

std::size_t pnm_number(std::istream& in, const fs::path& path) {
  const std::string tok = pnm_token(in);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), ::isdigit)) {
    throw IoError(path.string() + ": malformed Netpbm header");
  }
  return std::stoul(tok);
}

}  // namespace

Tensor4 read_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() == 2 && std::uint8_t(magic[0]) == 0x89 && magic[1] == 'P') {
    throw IoError(path.string() + ": PNG input is not supported, convert to PGM");
  }
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    throw IoError(path.string() + ": not a P2/P5 grayscale Netpbm file");
  }
  const std::size_t w = pnm_number(in, path), h = pnm_number(in, path);
  const std::size_t maxval = pnm_number(in, path);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw IoError(path.string() + ": unsupported dimensions or maxval");
  }
  Tensor4 img = Tensor4::image(h, w);
  const double scale = 1.0 / double(maxval);
  if (magic[1] == '2') {
    for (double& v : img.data()) {
      const std::string tok = pnm_token(in);
      if (tok.empty()) throw IoError(path.string() + ": truncated pixel data");
      const unsigned long p = std::stoul(tok);
      if (p > maxval) throw IoError(path.string() + ": pixel above maxval");
      v = double(p) * scale;
    }
    return img;
  }
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(w * h * bpp);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (std::size_t(in.gcount()) != buf.size()) throw IoError(path.string() + ": truncated pixel data");
  for (std::size_t i = 0; i < w * h; ++i) {
    const unsigned p = bpp == 1 ? buf[i] : (unsigned(buf[2 * i]) << 8) | buf[2 * i + 1];
    if (p > maxval) throw IoError(path.string() + ": pixel above maxval");
    img.data()[i] = double(p) * scale;
  }
  return img;
}

void write_pgm16(const fs::path& path, const Tensor4& image) {
  if (!image.is_image()) throw ShapeError("write_pgm16 expects an image, got " + image.shape().str());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::vector<unsigned char> buf(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::isfinite(image.data()[i]) ? std::clamp(image.data()[i], 0.0, 1.0) : 0.0;
    const auto p = static_cast<unsigned>(std::lround(v * 65535.0));
    buf[2 * i] = static_cast<unsigned char>(p >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(p & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_pgm16_normalized(const fs::path& path, const Tensor4& image) {
  double lo = 0.0, hi = 0.0;
  if (image.size()) {
    lo = *std::min_element(image.data().begin(), image.data().end());
    hi = *std::max_element(image.data().begin(), image.data().end());
  }
  Tensor4 t = image;
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& v : t.data()) v = (v - lo) / span;
  write_pgm16(path, t);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_raw_f64(const fs::path& path, const Tensor4& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (double v : t.data()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    unsigned char b[8];
    std::memcpy(b, &bits, 8);
    out.write(reinterpret_cast<const char*>(b), 8);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Tensor4 read_raw_f64(const fs::path& path, const Shape& shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Tensor4 t(shape);
  for (double& v : t.data()) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw IoError(path.string() + ": truncated tensor file");
    std::uint64_t bits;
    std::memcpy(&bits, b, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != EOF) throw IoError(path.string() + ": tensor file longer than " + shape.str());
  return t;
}

void save_checkpoint(const fs::path& dir, Network& net, const CheckpointInfo& info) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  json params = json::array();
  for (Parameter* p : net.parameters()) {
    const std::string file = p->name + ".f64";
    write_raw_f64(dir / file, p->value);
    const Shape& s = p->value.shape();
    params.push_back({{"name", p->name},
                      {"file", file},
                      {"shape", {s.rows, s.cols, s.height, s.width}},
                      {"trainable", p->trainable}});
  }
  json j{{"format", "fdl-checkpoint-1"},
         {"spec", json::parse(spec_to_json_text(net.spec()))},
         {"bias_mode", to_string(info.bias_mode)},
         {"init_mode", to_string(info.init_mode)},
         {"sigma_train", info.sigma_train},
         {"seed", info.seed},
         {"parameters", params}};
  write_text(dir / "checkpoint.json", j.dump(2) + "\n");
}

Network load_checkpoint(const fs::path& dir, CheckpointInfo* info) {
  json j;
  try {
    j = json::parse(read_text(dir / "checkpoint.json"));
  } catch (const json::exception& e) {
    throw IoError(dir.string() + "/checkpoint.json: " + e.what());
  }
  CheckpointInfo ci;
  NetworkSpec spec;
  try {
    ci.bias_mode = bias_mode_from_string(j.at("bias_mode").get<std::string>());
    ci.init_mode = init_mode_from_string(j.value("init_mode", std::string("independent")));
    ci.sigma_train = j.at("sigma_train").get<double>();
    ci.seed = j.value("seed", std::uint64_t(0));
    spec = spec_from_json_text(j.at("spec").dump());
  } catch (const json::exception& e) {
    throw IoError(dir.string() + "/checkpoint.json: " + e.what());
  }
  Network net(spec, ci.seed, InitMode::independent, ci.bias_mode);
  auto params = net.parameters();
  const auto& list = j.at("parameters");
  if (list.size() != params.size()) throw IoError("checkpoint parameter count does not match spec");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& e = list[k];
    if (e.at("name").get<std::string>() != params[k]->name) {
      throw IoError("checkpoint parameter " + e.at("name").get<std::string>() + " does not match " +
                    params[k]->name);
    }
    const auto dims = e.at("shape").get<std::vector<std::size_t>>();
    const Shape s{dims.at(0), dims.at(1), dims.at(2), dims.at(3)};
    if (s != params[k]->value.shape()) throw IoError("checkpoint shape mismatch for " + params[k]->name);
    params[k]->value = read_raw_f64(dir / e.at("file").get<std::string>(), s);
    params[k]->trainable = e.value("trainable", true);
  }
  if (info) *info = ci;
  return net;
}

}  // namespace fdl
