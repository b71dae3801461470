#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <fstream>
#include <random>

#include "advmask/error.hpp"
#include "advmask/model.hpp"
#include "advmask/rst.hpp"
#include "test_util.hpp"

using namespace advmask;
using advmask::testing::random_image;
using advmask::testing::scratch_dir;

namespace {

double norm(const Embedding& e) {
  double s = 0;
  for (double v : e) s += v * v;
  return std::sqrt(s);
}

// max |analytic - fd| / max |fd| over every pixel.
double fd_relative_error(const EmbeddingModel& m, Image x, const Embedding& target) {
  const auto lg = m.loss_gradient(x, target);
  double max_err = 0, max_fd = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-3, v = x.data()[i];
    x.data()[i] = v + h;
    const double fp = cosine_loss(m.embed(x), target);
    x.data()[i] = v - h;
    const double fm = cosine_loss(m.embed(x), target);
    x.data()[i] = v;
    const double fd = (fp - fm) / (2 * h);
    max_err = std::max(max_err, std::abs(fd - lg.gradient.data()[i]));
    max_fd = std::max(max_fd, std::abs(fd));
  }
  return max_err / max_fd;
}

}  // namespace

TEST_CASE("cosine helpers") {
  const std::vector<double> a{1, 0}, b{0, 2}, c{-3, 0};
  CHECK(cosine_similarity(a, b) == doctest::Approx(0));
  CHECK(cosine_similarity(a, c) == doctest::Approx(-1));
  CHECK(cosine_loss(a, a) == doctest::Approx(0));
  const std::vector<double> z{0, 0};
  CHECK_THROWS_AS(cosine_similarity(a, z), Error);
}

TEST_CASE("toy embedders are unit norm and deterministic") {
  const auto reg = ModelRegistry::builtin("/nonexistent");
  for (const auto& name : reg.names()) {
    const auto m = reg.create(name);
    for (int i = 0; i < 100; ++i) {
      const Image x = random_image(48, 40, 3, 1000 + i);
      const auto e = m->embed(x);
      REQUIRE(e.size() == static_cast<std::size_t>(m->spec().dim));
      CHECK(std::abs(norm(e) - 1) <= 1e-5);
      if (i < 3) CHECK(e == m->embed(x));
    }
  }
}

TEST_CASE("golden cosine of toy-1 between all-zeros and all-ones") {
  const auto m = ModelRegistry::builtin("/nonexistent").create("toy-1");
  const double c = cosine_similarity(m->embed(Image(512, 512, 3, 0.0)),
                                     m->embed(Image(512, 512, 3, 1.0)));
  CHECK(std::abs(c - -0.9673299345995231) <= 1e-12);
}

TEST_CASE("different seeds give different models") {
  const auto a = make_toy_embedder(1, 32, 32, 32);
  const auto b = make_toy_embedder(2, 32, 32, 32);
  double sum = 0;
  for (int i = 0; i < 20; ++i) {
    const Image x = random_image(64, 64, 3, 50 + i);
    sum += cosine_similarity(a->embed(x), b->embed(x));
  }
  CHECK(sum / 20 < 0.99);
  const auto a2 = make_toy_embedder(1, 32, 32, 32);
  const Image probe = random_image(64, 64, 3, 7);
  CHECK(a->embed(probe) == a2->embed(probe));
  CHECK_THROWS_AS(make_toy_embedder(1, 1, 8, 8), Error);
}

TEST_CASE("linear toy embedder gradient matches finite differences on 8x8") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = make_toy_embedder(seed, 16, 8, 8, 0);
    const Image x = random_image(8, 8, 3, seed);
    const auto t = m->embed(random_image(8, 8, 3, 100 + seed));
    CHECK(fd_relative_error(*m, x, t) <= 1e-4);
  }
}

TEST_CASE("every shipped toy embedder passes the finite-difference check") {
  const auto reg = ModelRegistry::builtin("/nonexistent");
  for (const auto& name : reg.names()) {
    if (name.rfind("toy-", 0) != 0) continue;
    const auto m = reg.create(name);
    const Image x = random_image(8, 8, 3, 3);
    const auto t = m->embed(random_image(8, 8, 3, 4));
    CHECK(fd_relative_error(*m, x, t) <= 1e-4);
  }
}

TEST_CASE("crop and bilinear preprocessing have exact adjoints") {
  std::mt19937_64 rng(5);
  for (auto mode : {ResizeMode::kArea, ResizeMode::kBilinear}) {
    EmbeddingSpec spec{"p", 7, 5, 4, mode, {0.1, 0.2, 0.85, 0.95}};
    const Preprocessor pre(spec);
    const Image x = random_image(23, 19, 3, 9);
    const auto fx = pre.forward(x);
    REQUIRE(fx.size() == 7u * 5 * 3);
    std::vector<double> y(fx.size());
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& v : y) v = u(rng);
    const Image bty = pre.backward(y, 23, 19);
    // <P x, y> = <x, P^T y> up to the affine offset: use the difference of
    // two inputs to cancel it.
    const Image x2 = random_image(23, 19, 3, 10);
    const auto fx2 = pre.forward(x2);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < y.size(); ++i) a += (fx[i] - fx2[i]) * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) b += (x.data()[i] - x2.data()[i]) * bty.data()[i];
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
  }
}

TEST_CASE("gradient is stationary along the matched embedding") {
  const auto m = make_toy_embedder(3, 16, 8, 8, 16);
  const Image x = random_image(16, 16, 3, 2);
  const auto e = m->embed(x);
  const auto lg = m->loss_gradient(x, e);
  CHECK(lg.loss == doctest::Approx(0).epsilon(1e-12));
  double gmax = 0;
  for (double v : lg.gradient.data()) gmax = std::max(gmax, std::abs(v));
  CHECK(gmax <= 1e-5);
  CHECK(lg.gradient.same_shape(x));
}

TEST_CASE("weights round trip through JSON") {
  const auto dir = scratch_dir("model_json");
  auto base = make_toy_embedder(4, 8, 6, 6, 5, {0.1, 0.1, 0.9, 0.8});
  const auto& mlp = static_cast<const MlpEmbedder&>(*base);
  save_mlp_embedder(dir / "w.json", mlp);
  const auto back = load_mlp_embedder(dir / "w.json");
  const Image x = random_image(30, 30, 3, 1);
  CHECK(back->embed(x) == base->embed(x));
  CHECK(back->spec().crop.x1 == 0.9);
}

TEST_CASE("registry lookup and unknown names") {
  auto reg = ModelRegistry::builtin("/nonexistent");
  CHECK(reg.contains("toy-1"));
  CHECK(reg.contains("toy-5"));
  CHECK_FALSE(reg.contains("tiny-a"));
  CHECK_THROWS_AS(reg.entry("nope"), Error);
  const auto with_data = ModelRegistry::builtin(advmask::testing::kDataDir);
  CHECK(with_data.contains("tiny-a"));
  CHECK(with_data.contains("tiny-b"));
  CHECK(with_data.create("tiny-a")->spec().resize == ResizeMode::kBilinear);
}

TEST_CASE("registry file with thresholds") {
  const auto dir = scratch_dir("model_registry");
  {
    std::ofstream f(dir / "models.json");
    f << R"({"models": [{"name": "t9", "adapter": "toy", "seed": 9, "dim": 16,
             "input_width": 8, "input_height": 8, "hidden": 0, "threshold": 0.3}]})";
  }
  const auto reg = ModelRegistry::from_file(dir / "models.json");
  CHECK(reg.entry("t9").threshold == 0.3);
  CHECK(reg.create("t9")->spec().dim == 16);
}

TEST_CASE("reference thresholds are kept for reporting") {
  CHECK(std::size(kReferenceThresholds) == 4);
  CHECK(kReferenceThresholds[0].tau == 0.409);
  CHECK(kReferenceThresholds[1].tau == 0.302);
  CHECK(kReferenceThresholds[2].tau == 0.241);
  CHECK(kReferenceThresholds[3].tau == 0.167);
}

TEST_CASE("counting decorator") {
  auto c = std::make_shared<CountingModel>(make_toy_embedder(1, 8, 4, 4, 0));
  const Image x = random_image(8, 8, 3, 1);
  const auto e = c->embed(x);
  c->loss_gradient(x, e);
  c->loss_gradient(x, e);
  CHECK(c->embed_calls() == 1);
  CHECK(c->gradient_calls() == 2);
}

TEST_CASE("align_face moves rotated fiducials onto the template") {
  const int out = 96;
  const auto canon = canonical_landmarks(out, out);
  // Raw landmarks: template rotated 30 degrees, scaled 1.7, shifted.
  const auto raw_t = build_matrix({40, 25, std::numbers::pi / 6, 1.7});
  const auto raw_lms = transform_landmarks(canon, raw_t);
  Image raw(260, 240, 3, 0.0);
  for (const auto& p : raw_lms.points) {
    for (int y = 0; y < raw.height(); ++y)
      for (int x = 0; x < raw.width(); ++x) {
        const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
        const double v = std::exp(-d2 / (2 * 2.5 * 2.5));
        for (int c = 0; c < 3; ++c) raw.at(x, y, c) = std::min(1.0, raw.at(x, y, c) + v);
      }
  }
  const auto aligned = align_face(raw, raw_lms, canon, out, out);
  CHECK(in_unit_range(aligned.image));
  for (std::size_t k = 0; k < canon.points.size(); ++k) {
    // Re-detect: intensity centroid in a window around the template point.
    const Point2 c = canon.points[k];
    double sw = 0, sx = 0, sy = 0;
    for (int y = int(c.y) - 4; y <= int(c.y) + 4; ++y)
      for (int x = int(c.x) - 4; x <= int(c.x) + 4; ++x) {
        const double v = aligned.image.at(x, y, 0);
        if (v < 0.2) continue;
        sw += v;
        sx += v * x;
        sy += v * y;
      }
    REQUIRE(sw > 0);
    CHECK(std::abs(sx / sw - c.x) <= 0.5);
    CHECK(std::abs(sy / sw - c.y) <= 0.5);
    CHECK(std::abs(aligned.landmarks.points[k].x - c.x) <= 1e-6);
  }
  // Refit between aligned landmarks and the template is the identity.
  const auto p = fit_similarity(aligned.landmarks, canon).params();
  CHECK(std::abs(p.tx) < 1e-6);
  CHECK(std::abs(p.theta) < 1e-9);
  CHECK(p.scale == doctest::Approx(1).epsilon(1e-9));
}

TEST_CASE("align_face of an aligned image is the identity warp") {
  const Image raw = random_image(64, 64, 3, 8);
  const auto canon = canonical_landmarks(64, 64);
  CHECK(max_abs_diff(align_face(raw, canon, canon, 64, 64).image, raw) < 1e-9);
  const FaceLandmarks same{"5pt", {{3, 3}, {3, 3}, {3, 3}, {3, 3}, {3, 3}}};
  CHECK_THROWS_AS(align_face(raw, same, canon, 64, 64), Error);
}
