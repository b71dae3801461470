#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

#include "advmask/cli.hpp"
#include "advmask/image.hpp"
#include "advmask/maskgeom.hpp"
#include "advmask/report.hpp"
#include "test_util.hpp"

using namespace advmask;
using advmask::testing::kDataDir;
using advmask::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), {"advmask", "--data-dir", kDataDir.string()});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, e);
  if (err) *err = e.str() + out.str();
  return code;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::string kSample = (kDataDir / "sample").string();

}  // namespace

TEST_CASE("attack smoke run beats the paste baseline") {
  const auto out = scratch_dir("cli_smoke");
  REQUIRE(run({"attack", "--dataset", kSample, "--pairs", "1", "--seed", "3", "--iters",
               "50", "--alpha", "0.01", "--models", "toy-1", "--out", out.string()}) == kExitOk);
  const auto summary = read_json(out / "summary.json");
  const auto& pair = summary["pairs"][0];
  const fs::path dir = out / "pairs" / pair["artifact"].get<std::string>();
  for (const char* f : {"x_adv.png", "mask.png", "loss.csv", "mask.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const double adv = pair["cosine_adv"]["toy-1"], paste = pair["cosine_paste"]["toy-1"];
  CHECK(adv > paste);
  // Frozen from the first run.
  CHECK(adv == doctest::Approx(0.6261239386090451).epsilon(1e-9));
  CHECK(paste == doctest::Approx(0.5622764940610621).epsilon(1e-9));
  const auto mask_info = read_json(dir / "mask.json");
  CHECK(mask_info["dpi"] == 300.0);
  CHECK(fs::exists(out / "config.toml"));
}

TEST_CASE("zero iterations export the paste composite") {
  const auto out = scratch_dir("cli_n0");
  REQUIRE(run({"attack", "--dataset", kSample, "--pairs", "1", "--seed", "4", "--iters",
               "0", "--out", out.string()}) == kExitOk);
  const auto pair = read_json(out / "summary.json")["pairs"][0];
  const Image x = read_image(out / "pairs" / pair["artifact"].get<std::string>() / "x_adv.png");
  const auto root = kDataDir / "sample";
  const auto src_id = pair["source_image"].get<std::string>();
  const Image src = read_image(root / (src_id + ".png"));
  const Image tgt = read_image(root / (pair["target_image"].get<std::string>() + ".png"));
  const auto m = gen_mask(default_mask_template(src.width(), src.height()),
                          canonical_landmarks(src.width(), src.height()),
                          read_landmarks(root / (src_id + ".landmarks.json")));
  // Inputs are 8-bit PNGs, so the composite round-trips exactly.
  CHECK(x == composite(src, tgt, m));
}

TEST_CASE("configuration errors exit 1 without artifacts") {
  const auto out = scratch_dir("cli_bad");
  fs::remove_all(out);
  std::string err;
  CHECK(run({"attack", "--dataset", kSample, "--models", "no-such-model", "--out",
             out.string()}, &err) == kExitConfig);
  CHECK(err.find("no-such-model") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
  CHECK(run({"attack", "--dataset", kSample, "--attack", "fgsm", "--out", out.string()}) ==
        kExitConfig);
  CHECK(run({"frobnicate"}) == kExitConfig);
  CHECK(run({"evaluate", "--out", out.string()}) == kExitConfig);
}

TEST_CASE("reruns are bit-identical and evaluation is hermetic") {
  const auto a = scratch_dir("cli_rerun_a"), b = scratch_dir("cli_rerun_b");
  const std::vector<std::string> common{"attack", "--dataset", kSample, "--pairs", "2",
                                        "--seed", "9", "--iters", "5", "--models",
                                        "toy-1,toy-2", "--attack", "rstam-all"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out", a.string()});
  args_b.insert(args_b.end(), {"--out", b.string(), "--workers", "2"});
  REQUIRE(run(args_a) == kExitOk);
  REQUIRE(run(args_b) == kExitOk);
  const auto sa = read_json(a / "summary.json");
  for (const auto& p : sa["pairs"]) {
    const auto key = p["artifact"].get<std::string>();
    CHECK(slurp(a / "pairs" / key / "x_adv.png") == slurp(b / "pairs" / key / "x_adv.png"));
  }
  REQUIRE(run({"evaluate", "--out", a.string()}) == kExitOk);
  const auto report = read_report_json(a / "report.json");
  CHECK(report.self_consistent());
  CHECK(report.backends.at("mock").mcs.has_value());
  CHECK(report.rows.size() == 2);
  CHECK(fs::exists(a / "report.csv"));

  // Rerun from the written snapshot lands on the same artifacts.
  const auto c = scratch_dir("cli_rerun_c");
  REQUIRE(run({"--config", (a / "config.toml").string(), "attack", "--out", c.string()}) ==
          kExitOk);
  for (const auto& p : sa["pairs"]) {
    const auto key = p["artifact"].get<std::string>();
    CHECK(slurp(a / "pairs" / key / "x_adv.png") == slurp(c / "pairs" / key / "x_adv.png"));
  }
}

TEST_CASE("sweep subcommand") {
  const auto out = scratch_dir("cli_sweep");
  CHECK(run({"sweep-beta", "--dataset", kSample, "--pairs", "1", "--iters", "2", "--out",
             out.string()}) == kExitConfig);
  REQUIRE(run({"sweep-beta", "--dataset", kSample, "--pairs", "2", "--iters", "5", "--betas",
               "0,0.2", "--victims", "toy-2", "--out", out.string()}) == kExitOk);
  const auto csv = slurp(out / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(fs::file_size(out / "sweep.svg") > 0);
}

TEST_CASE("make-mask") {
  const auto out = scratch_dir("cli_mask");
  const auto dir = scratch_dir("cli_mask_in");
  write_image(dir / "face.png", Image(512, 512, 3, 0.5));
  std::string err;
  CHECK(run({"make-mask", "--source", (dir / "face.png").string(), "--out", out.string()},
            &err) == kExitConfig);
  CHECK(err.find("face.landmarks.json") != std::string::npos);

  // Canonical landmarks reproduce the template.
  write_landmarks(dir / "face.landmarks.json", canonical_landmarks(512, 512));
  REQUIRE(run({"make-mask", "--source", (dir / "face.png").string(), "--out",
               (out / "canon").string()}) == kExitOk);
  const auto info = read_json(out / "canon" / "mask_info.json");
  CHECK(info["pixels"] == 120495);
  const auto c0 = mask_centroid(default_mask_template(512, 512));

  // Landmarks moved by (+17, -9): the centroid follows within 1 px.
  auto lms = canonical_landmarks(512, 512);
  for (auto& p : lms.points) {
    p.x += 17;
    p.y -= 9;
  }
  write_landmarks(dir / "shifted.json", lms);
  REQUIRE(run({"make-mask", "--source", (dir / "face.png").string(), "--landmarks",
               (dir / "shifted.json").string(), "--out", (out / "shift").string()}) == kExitOk);
  const auto moved = read_json(out / "shift" / "mask_info.json")["centroid"];
  CHECK(std::abs(moved[0].get<double>() - (c0.x + 17)) <= 1.0);
  CHECK(std::abs(moved[1].get<double>() - (c0.y - 9)) <= 1.0);
  CHECK(fs::exists(out / "shift" / "overlay.png"));
}

TEST_CASE("synthetic dataset and calibration subcommands") {
  const auto root = scratch_dir("cli_synth");
  REQUIRE(run({"synth-dataset", "--out", root.string(), "--identities", "3",
               "--per-identity", "2", "--canvas", "64", "--seed", "5"}) == kExitOk);
  CHECK(fs::exists(root / "id_02"));
  const auto cal = root / "cal.json";
  REQUIRE(run({"calibrate", "--dataset", root.string(), "--models", "toy-1", "--far", "0.5",
               "--out", cal.string()}) == kExitOk);
  CHECK(read_json(cal).dump().find("toy-1") != std::string::npos);
}
