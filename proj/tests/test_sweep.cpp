#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "advmask/dataset.hpp"
#include "advmask/error.hpp"
#include "advmask/sweep.hpp"
#include "advmask/training.hpp"
#include "test_util.hpp"

using namespace advmask;
using advmask::testing::kDataDir;
using advmask::testing::scratch_dir;

namespace {

std::vector<PreparedPair> sample_prepared(int count, std::uint64_t seed) {
  const auto idx = ingest_dataset(kDataDir / "sample");
  std::mt19937_64 rng(seed);
  std::vector<PreparedPair> out;
  for (const auto& p : sample_pairs(idx, count, rng)) out.push_back(prepare_pair(idx, p, 0));
  return out;
}

ModelFactory registry_factory() {
  const auto reg = std::make_shared<ModelRegistry>(ModelRegistry::builtin(kDataDir));
  return [reg](const std::string& name) { return reg->create(name); };
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("beta zero column equals the AM baseline") {
  const auto pairs = sample_prepared(3, 1);
  SweepSpec spec;
  spec.config.iterations = 10;
  spec.config.alpha = 0.01;
  spec.surrogates = {"toy-1"};
  spec.victims = {"toy-1", "toy-2"};
  spec.thresholds = {{"toy-2", 0.2}};
  spec.seed = 5;
  const std::vector<double> betas{0.0};
  const auto table = beta_sweep(pairs, betas, spec, registry_factory());
  REQUIRE(table.rows.size() == 1);

  const auto reg = ModelRegistry::builtin(kDataDir);
  const auto surrogate = reg.create("toy-1");
  std::map<std::string, double> sums;
  std::vector<double> cos2;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    AttackConfig cfg = spec.config;
    cfg.seed = pair_seed(spec.seed, i);
    const auto r = am_attack(pairs[i].source, pairs[i].target, pairs[i].mask, surrogate, cfg);
    for (const auto& v : spec.victims) {
      const auto m = reg.create(v);
      const double c = cosine_similarity(m->embed(r.x_adv), m->embed(pairs[i].target));
      sums[v] += c;
      if (v == "toy-2") cos2.push_back(c);
    }
  }
  for (const auto& v : spec.victims) {
    CHECK(table.rows[0].mean_cosine.at(v) == doctest::Approx(sums[v] / 3).epsilon(1e-12));
  }
  const double hits = std::count_if(cos2.begin(), cos2.end(), [](double c) { return c > 0.2; });
  CHECK(table.rows[0].asr.at("toy-2") == doctest::Approx(100.0 * hits / 3));
  CHECK(table.rows[0].asr.count("toy-1") == 0);
}

TEST_CASE("worker count does not change the table") {
  const auto pairs = sample_prepared(4, 2);
  SweepSpec spec;
  spec.config.iterations = 5;
  spec.surrogates = {"toy-1"};
  spec.victims = {"toy-2"};
  const std::vector<double> betas{0.0, 0.3};
  const auto one = beta_sweep(pairs, betas, spec, registry_factory());
  spec.workers = 3;
  const auto three = beta_sweep(pairs, betas, spec, registry_factory());
  REQUIRE(one.rows.size() == 2);
  for (int k = 0; k < 2; ++k) CHECK(one.rows[k].mean_cosine == three.rows[k].mean_cosine);
}

TEST_CASE("CSV rows and plot band") {
  const auto dir = scratch_dir("sweep_out");
  SweepTable t;
  t.victims = {"toy-2"};
  for (double b : {0.0, 0.1, 0.2}) t.rows.push_back({b, {{"toy-2", 0.1 + b}}, {{"toy-2", 50.0}}});
  write_sweep_csv(dir / "s.csv", t);
  const auto csv = slurp(dir / "s.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.rfind("beta,mean_cos_toy-2,asr_toy-2", 0) == 0);
  write_sweep_svg(dir / "s.svg", t);
  const auto svg = slurp(dir / "s.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("recommended-band") != std::string::npos);
  CHECK(svg.find("0.15-0.25") != std::string::npos);
}

TEST_CASE("errors carry beta context") {
  const auto pairs = sample_prepared(1, 3);
  SweepSpec spec;
  spec.config.iterations = 2;
  spec.surrogates = {"toy-1"};
  spec.victims = {"toy-1"};
  const std::vector<double> bad{0.0, 1.5};
  try {
    beta_sweep(pairs, bad, spec, registry_factory());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  CHECK_THROWS_AS(beta_sweep(pairs, std::vector<double>{}, spec, registry_factory()), Error);
}

TEST_CASE("black-box trend between beta 0 and 0.2 on the trained pair") {
  // Held-out synthetic faces from the shipped recipe; tiny-a attacks,
  // tiny-b scores.
  const auto recipe = bundled_tiny_recipe();
  const auto faces = make_labelled_set(10, 4, recipe.identity_seed, recipe.render, 8);
  const int w = recipe.render.width, h = recipe.render.height;
  const auto m0 = default_mask_template(w, h);
  const auto canon = canonical_landmarks(w, h);
  std::vector<PreparedPair> pairs;
  for (std::size_t i = 0; i + 4 < faces.size(); i += 2) {
    const auto& s = faces[i];
    const auto& t = faces[i + 4];  // next identity
    REQUIRE(s.label != t.label);
    pairs.push_back({{}, s.face.image, t.face.image, s.face.landmarks,
                     gen_mask(m0, canon, s.face.landmarks)});
  }
  SweepSpec spec;
  spec.config.iterations = 200;
  spec.surrogates = {"tiny-a"};
  spec.victims = {"tiny-b"};
  spec.seed = 11;
  const std::vector<double> betas{0.0, 0.2};
  const auto t = beta_sweep(pairs, betas, spec, registry_factory());
  CHECK(t.rows[1].mean_cosine.at("tiny-b") >= t.rows[0].mean_cosine.at("tiny-b"));
}
