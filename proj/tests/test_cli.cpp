#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include "fdl/architectures.hpp"
#include "fdl/experiments.hpp"
#include "fdl/io.hpp"

using namespace fdl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" FDL_CLI_PATH "' " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fdl_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string spec(const char* name) { return std::string(FDL_SPECS_DIR) + "/" + name; }

json read_json(const fs::path& p) { return json::parse(read_text(p)); }

}  // namespace

TEST_CASE("flops") {
  const fs::path d = scratch("flops");
  const Result r = run("--out " + d.string() + " flops " + spec("unet.json") + " --rows 512 --cols 512");
  CHECK(r.code == 0);
  CHECK(r.out.find("10116661248") != std::string::npos);
  CHECK(read_json(d / "flops.json").at("flops").get<std::uint64_t>() == 10116661248ull);
  CHECK(fs::exists(d / "manifest.json"));
  const Result l = run("--out " + d.string() + " flops " + spec("lwfsn.json") + " --rows 128 --cols 128");
  CHECK(l.out.find("18874368") != std::string::npos);
}

TEST_CASE("analyze-pr verdicts") {
  const fs::path d = scratch("pr");
  const Result l = run("--out " + (d / "l").string() + " analyze-pr " + spec("lwfsn.json"));
  REQUIRE(l.code == 0);
  CHECK(read_json(d / "l" / "pr_report.json").at("is_perfect") == true);
  const Result u = run("--out " + (d / "u").string() + " analyze-pr --probe-size 16 " + spec("unet.json"));
  REQUIRE(u.code == 0);
  const json uj = read_json(d / "u" / "pr_report.json");
  CHECK(uj.at("is_perfect") == false);
  CHECK(std::abs(uj.at("gain_dc").get<double>() - 2.0) < 1e-6);
  const Result r = run("--out " + (d / "r").string() + " analyze-pr " + spec("red.json"));
  CHECK(read_json(d / "r" / "pr_report.json").at("is_perfect") == true);
}

TEST_CASE("exit codes") {
  const fs::path d = scratch("codes");
  const Result bad_name = run("--out " + d.string() + " experiment nonsense");
  CHECK(bad_name.code == 3);
  CHECK(bad_name.out.find("tight-frame") != std::string::npos);
  CHECK(bad_name.out.find("generalization") != std::string::npos);

  write_text(d / "bad.json", R"({"layers": [{"type": "conv", "out": 4, "in": 1},
                                          {"type": "conv", "out": 1, "in": 3, "transposed": true}]})");
  const Result schema = run("--out " + d.string() + " analyze-pr " + (d / "bad.json").string());
  CHECK(schema.code == 3);
  CHECK(schema.out.find("layer 1") != std::string::npos);

  CHECK(run("--out " + d.string() + " denoise --input " + (d / "missing.pgm").string()).code == 2);
  CHECK(run("--out " + d.string() + " flops " + (d / "missing.json").string() + " --rows 8 --cols 8").code == 2);
  write_pgm16(d / "x.pgm", test_scene(32));
  CHECK(run("--out " + d.string() + " denoise --input " + (d / "x.pgm").string() + " --method bogus").code == 3);
  CHECK(run("--out " + d.string() + " denoise --input " + (d / "x.pgm").string() + " --method svd-lowrank --rank 99").code == 3);
  CHECK(run("--out " + d.string() + " denoise --input " + (d / "x.pgm").string() + " --t -1").code == 3);
  CHECK(run("--out " + d.string() + " frobnicate").code == 3);
  CHECK(run("--version").code == 0);

  write_text(d / "nan.json", R"({"epochs": 1, "images_per_epoch": 4, "image_size": 16, "lr_initial": 1e300})");
  CHECK(run("--out " + (d / "nan").string() + " train " + (d / "nan.json").string()).code == 4);
}

TEST_CASE("denoise methods") {
  const fs::path d = scratch("denoise");
  write_pgm16(d / "x.pgm", test_scene(64));
  const std::string in = " denoise --input " + (d / "x.pgm").string();
  REQUIRE(run("--out " + (d / "w").string() + in + " --t 0").code == 0);
  CHECK(read_json(d / "w" / "metrics.json")["metrics"]["max_abs_change"].get<double>() < 1e-12);
  REQUIRE(run("--out " + (d / "wd").string() + in + " --t 0 --decimated").code == 0);
  CHECK(read_json(d / "wd" / "metrics.json")["metrics"]["max_abs_change"].get<double>() < 1e-12);
  REQUIRE(run("--out " + (d / "s").string() + in + " --method svd-lowrank").code == 0);
  CHECK(read_json(d / "s" / "metrics.json")["metrics"]["max_abs_change"].get<double>() < 1e-8);
  REQUIRE(run("--out " + (d / "a").string() + in + " --add-noise 0.1 --seed 3").code == 0);
  const json m = read_json(d / "a" / "metrics.json")["metrics"];
  CHECK(m["snr_gain_db"].get<double>() > 0.0);
  CHECK(fs::exists(d / "a" / "denoised.pgm"));
  CHECK(fs::exists(d / "a" / "noisy.pgm"));
  const Tensor4 out = read_raw_f64(d / "a" / "denoised.f64", {1, 1, 64, 64});
  CHECK(out.all_finite());
}

TEST_CASE("train and denoise with the checkpoint") {
  const fs::path d = scratch("train");
  write_text(d / "zero.json", R"({"epochs": 0, "seed": 11, "init_mode": "shared_enc_dec"})");
  REQUIRE(run("--out " + (d / "zero").string() + " train " + (d / "zero.json").string()).code == 0);
  Network loaded = load_checkpoint(d / "zero" / "checkpoint");
  Network init = build_toy(11, InitMode::shared_enc_dec);
  auto pa = loaded.parameters(), pb = init.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.data() == pb[i]->value.data());

  // FDL_SEED overrides the config seed
  REQUIRE(run("--out " + (d / "env").string() + " train " + (d / "zero.json").string(), "FDL_SEED=5").code == 0);
  CHECK(read_json(d / "env" / "manifest.json")["seed"] == 5);
  CHECK(run("--out " + (d / "env").string() + " train " + (d / "zero.json").string(), "FDL_SEED=abc").code == 3);

  write_text(d / "small.json", R"({"epochs": 3, "images_per_epoch": 32, "image_size": 32, "lr_initial": 0.003, "seed": 2})");
  REQUIRE(run("--out " + (d / "small").string() + " train " + (d / "small.json").string()).code == 0);
  CHECK(fs::exists(d / "small" / "train_log.json"));
  write_pgm16(d / "x.pgm", test_scene(64));
  const Result r = run("--out " + (d / "den").string() + " denoise --method model --checkpoint " +
                       (d / "small" / "checkpoint").string() + " --input " + (d / "x.pgm").string() +
                       " --add-noise 0.1");
  REQUIRE(r.code == 0);
  CHECK(read_json(d / "den" / "metrics.json")["metrics"]["snr_gain_db"].get<double>() > 0.0);
}

TEST_CASE("experiments through the CLI") {
  const fs::path d = scratch("exp");
  const std::string tiny = " --epochs 1 --images 2 --size 16";
  REQUIRE(run("--out " + (d / "g").string() + " experiment generalization --seed 1" + tiny).code == 0);
  std::istringstream csv(read_text(d / "g" / "snr.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "model,0.100,0.150,0.175,0.200,0.225");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  REQUIRE(run("--out " + (d / "t1").string() + " experiment tight-frame --seed 7" + tiny).code == 0);
  REQUIRE(run("--out " + (d / "t2").string() + " experiment tight-frame --seed 7" + tiny).code == 0);
  CHECK(read_text(d / "t1" / "report.json") == read_text(d / "t2" / "report.json"));
  const json m = read_json(d / "t1" / "manifest.json");
  CHECK(m["command"] == "experiment");
  CHECK(m["seed"] == 7);
  CHECK(m["outputs"].size() > 1);

  REQUIRE(run("--out " + (d / "b").string() + " experiment bias-zero --seed 2" + tiny).code == 0);
  CHECK(read_json(d / "b" / "report.json")["models"].size() == 2);
}
