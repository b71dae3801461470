#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "advmask/error.hpp"
#include "advmask/report.hpp"
#include "test_util.hpp"

using namespace advmask;
using advmask::testing::scratch_dir;

namespace {

// Ten rows, cosines 0.05 .. 0.50 on model "m", threshold 0.241.
EvaluationReport fixture() {
  EvaluationReport r;
  r.thresholds["m"] = 0.241;
  for (int i = 0; i < 10; ++i) {
    PairRow row;
    row.pair = {"t/" + std::to_string(i), "s/" + std::to_string(i), "t", "s"};
    row.artifact = "k" + std::to_string(i);
    row.cosine_per_model["m"] = 0.05 * (i + 1);
    if (i == 3) {
      row.confidence_per_backend["mock"] = std::nullopt;
    } else if (i == 4) {
      row.backend_errors["mock"] = "timeout";
    } else {
      row.confidence_per_backend["mock"] = 10.0 * i;
    }
    r.rows.push_back(row);
  }
  r.config = {{"seed", 1}};
  r.recompute();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("aggregates match hand counts") {
  const auto r = fixture();
  // 0.25 .. 0.50 exceed 0.241: six of ten.
  CHECK(r.asr.at("m") == doctest::Approx(60.0));
  const auto& b = r.backends.at("mock");
  CHECK(b.scored == 8);
  CHECK(b.face_not_detected == 1);
  CHECK(b.failed == 1);
  // (0+10+20+50+60+70+80+90)/8
  REQUIRE(b.mcs.has_value());
  CHECK(*b.mcs == doctest::Approx(47.5));
  CHECK(r.rows[5].success.at("m"));
  CHECK_FALSE(r.rows[3].success.at("m"));
  CHECK(r.self_consistent());
}

TEST_CASE("tampering breaks self-consistency") {
  auto r = fixture();
  r.asr["m"] = 50.0;
  CHECK_FALSE(r.self_consistent());
  r = fixture();
  r.rows[0].success["m"] = true;
  CHECK_FALSE(r.self_consistent());
}

TEST_CASE("JSON round trip") {
  const auto dir = scratch_dir("report_json");
  const auto r = fixture();
  write_report_json(dir / "r.json", r);
  const auto back = read_report_json(dir / "r.json");
  CHECK(to_json(back) == to_json(r));
  CHECK(back.self_consistent());
  CHECK_FALSE(back.rows[3].confidence_per_backend.at("mock").has_value());
}

TEST_CASE("CSV has a header and one line per pair") {
  const auto dir = scratch_dir("report_csv");
  write_report_csv(dir / "r.csv", fixture());
  const auto text = slurp(dir / "r.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  CHECK(text.find("no_face") != std::string::npos);
  CHECK(text.find("error") != std::string::npos);
}

TEST_CASE("impostor pairs") {
  std::vector<LabelledEmbedding> items{
      {"a", {1, 0}}, {"a", {0, 1}}, {"b", {1, 0}}, {"c", {-1, 0}}};
  std::mt19937_64 rng(1);
  auto all = impostor_scores(items, ImpostorMode::kAllPairs, 0, rng);
  std::sort(all.begin(), all.end());
  // a0-b 1, a0-c -1, a1-b 0, a1-c 0, b-c -1
  CHECK(all == std::vector<double>{-1, -1, 0, 0, 1});
  const auto s = impostor_scores(items, ImpostorMode::kSampled, 500, rng);
  CHECK(s.size() == 500u);
  for (double v : s) CHECK((v == -1 || v == 0 || v == 1));
  CHECK(parse_impostor_mode("sampled") == ImpostorMode::kSampled);
  CHECK_THROWS_AS(parse_impostor_mode("some"), Error);
}
