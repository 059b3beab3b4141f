#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fdl/architectures.hpp"
#include "fdl/errors.hpp"
#include "fdl/experiments.hpp"
#include "fdl/io.hpp"
#include "helpers.hpp"

using namespace fdl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fdl_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("read ASCII and binary graymaps") {
  const fs::path d = scratch("pgm");
  write_bytes(d / "a.pgm", "P2\n# comment\n3 2\n4\n0 1 2\n3 4 0\n");
  const Tensor4 a = read_image(d / "a.pgm");
  REQUIRE(a.shape() == Shape{1, 1, 2, 3});
  CHECK(a(0, 2) == 0.5);
  CHECK(a(1, 1) == 1.0);

  write_bytes(d / "b.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x01", 4));
  const Tensor4 b = read_image(d / "b.pgm");
  CHECK(b(0, 1) == 1.0);
  CHECK(b(1, 0) == doctest::Approx(128.0 / 255.0));

  write_bytes(d / "c.pgm", std::string("P5\n2 1\n65535\n") + std::string("\xff\xff\x80\x00", 4));
  const Tensor4 c = read_image(d / "c.pgm");
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 1) == doctest::Approx(32768.0 / 65535.0));
}

TEST_CASE("image read errors") {
  const fs::path d = scratch("bad");
  CHECK_THROWS_AS(read_image(d / "missing.pgm"), IoError);
  write_bytes(d / "x.png", "\x89PNG\r\n\x1a\n....");
  CHECK_THROWS_AS(read_image(d / "x.png"), IoError);
  write_bytes(d / "p6.ppm", "P6\n1 1\n255\nabc");
  CHECK_THROWS_AS(read_image(d / "p6.ppm"), IoError);
  write_bytes(d / "short.pgm", "P5\n4 4\n255\nab");
  CHECK_THROWS_AS(read_image(d / "short.pgm"), IoError);
  write_bytes(d / "over.pgm", "P2\n1 1\n10\n11\n");
  CHECK_THROWS_AS(read_image(d / "over.pgm"), IoError);
}

TEST_CASE("16-bit output round trip") {
  const fs::path d = scratch("w16");
  const Tensor4 x = test_scene(32);
  write_pgm16(d / "x.pgm", x);
  CHECK(max_abs_diff(read_image(d / "x.pgm"), x) <= 0.5 / 65535.0 + 1e-15);
  Tensor4 wild = Tensor4::image(2, 2);
  wild(0, 0) = -3.0;
  wild(1, 1) = 7.0;
  write_pgm16(d / "w.pgm", wild);
  const Tensor4 w = read_image(d / "w.pgm");
  CHECK(w(0, 0) == 0.0);
  CHECK(w(1, 1) == 1.0);
  write_pgm16_normalized(d / "n.pgm", wild);
  const Tensor4 n = read_image(d / "n.pgm");
  CHECK(n(0, 0) == 0.0);
  CHECK(n(1, 1) == 1.0);
  CHECK(n(0, 1) == doctest::Approx(0.3).epsilon(1e-4));
  CHECK_THROWS_AS(write_pgm16(d / "t.pgm", Tensor4(2, 1, 2, 2)), ShapeError);
}

TEST_CASE("raw tensors") {
  const fs::path d = scratch("raw");
  const Tensor4 t = testutil::random_tensor({2, 3, 3, 3}, 1);
  write_raw_f64(d / "t.f64", t);
  CHECK(fs::file_size(d / "t.f64") == t.size() * 8);
  CHECK(read_raw_f64(d / "t.f64", t.shape()).data() == t.data());
  CHECK_THROWS_AS(read_raw_f64(d / "t.f64", {2, 3, 3, 4}), IoError);
  CHECK_THROWS_AS(read_raw_f64(d / "t.f64", {2, 3, 3, 2}), IoError);
  // little-endian layout
  write_raw_f64(d / "one.f64", Tensor4(Shape{1, 1, 1, 1}, 1.0));
  std::ifstream in(d / "one.f64", std::ios::binary);
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  CHECK(bytes[7] == 0x3f);
  CHECK(bytes[6] == 0xf0);
  CHECK(bytes[0] == 0x00);
}

TEST_CASE("checkpoints") {
  const fs::path d = scratch("ckpt");
  Network net = build_toy(5, InitMode::shared_enc_dec, BiasMode::adaptive);
  for (Parameter* p : net.parameters()) p->value += testutil::random_tensor(p->value.shape(), 9, -0.01, 0.01);
  save_checkpoint(d, net, {BiasMode::adaptive, InitMode::shared_enc_dec, 0.1, 5});
  CHECK(fs::exists(d / "checkpoint.json"));
  CheckpointInfo info;
  Network back = load_checkpoint(d, &info);
  CHECK(info.bias_mode == BiasMode::adaptive);
  CHECK(info.init_mode == InitMode::shared_enc_dec);
  CHECK(info.seed == 5);
  CHECK(info.sigma_train == 0.1);
  auto pa = net.parameters(), pb = back.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value.data() == pb[i]->value.data());
    CHECK(pa[i]->trainable == pb[i]->trainable);
  }
  const Tensor4 y = test_scene(32);
  CHECK(net.infer(y).data() == back.infer(y).data());

  // zero-fixed biases stay frozen after a reload
  const fs::path bf = scratch("ckpt_bf");
  Network z = build_toy(6, InitMode::independent, BiasMode::zero_fixed);
  save_checkpoint(bf, z, {BiasMode::zero_fixed, InitMode::independent, 0.1, 6});
  Network zb = load_checkpoint(bf);
  for (std::size_t i = 0; i < zb.spec().layers.size(); ++i)
    if (Parameter* b = zb.bias(i)) CHECK_FALSE(b->trainable);

  CHECK_THROWS_AS(load_checkpoint(d / "nope"), IoError);
  fs::remove(d / (pa[0]->name + ".f64"));
  CHECK_THROWS_AS(load_checkpoint(d), IoError);
}
