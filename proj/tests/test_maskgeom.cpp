#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "advmask/error.hpp"
#include "advmask/maskgeom.hpp"
#include "test_util.hpp"

using namespace advmask;
using advmask::testing::kDataDir;
using advmask::testing::random_image;
using advmask::testing::scratch_dir;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

FaceLandmarks shifted(FaceLandmarks l, double dx, double dy) {
  for (auto& p : l.points) p = {p.x + dx, p.y + dy};
  return l;
}

}  // namespace

TEST_CASE("saturated template images") {
  const auto dir = scratch_dir("maskgeom_sat");
  write_image(dir / "white.png", Image(8, 6, 1, 1.0));
  write_image(dir / "black.png", Image(8, 6, 1, 0.0));
  CHECK(load_initial_mask(dir / "white.png").count_ones() == 48);
  CHECK(load_initial_mask(dir / "black.png").count_ones() == 0);
  CHECK(code_of([&] { load_initial_mask(dir / "white.png", 512, 512); }) ==
        ErrorCode::kDimensionMismatch);
  CHECK(code_of([&] { load_initial_mask(dir / "missing.png"); }) == ErrorCode::kIo);
}

TEST_CASE("bundled template matches the golden pixel count") {
  // 120495 ones of 512*512, counted by scripts/mask_fill.py on the PNG.
  const BinaryMask shipped = load_initial_mask(kDataDir / "mask_template.png", 512, 512);
  CHECK(shipped.count_ones() == 120495);
  CHECK(shipped.fill_fraction() == doctest::Approx(0.4596519470).epsilon(1e-9));
  CHECK(shipped == default_mask_template(512, 512));
  // Eyes stay open, the cheeks are covered.
  const auto c = canonical_landmarks(512, 512);
  CHECK(shipped.at(int(c.points[0].x), int(c.points[0].y)) == 0);
  CHECK(shipped.at(int(c.points[1].x), int(c.points[1].y)) == 0);
  CHECK(shipped.at(int(c.points[2].x), int(c.points[2].y)) == 1);
  CHECK(shipped.at(256, 20) == 0);
}

TEST_CASE("fit_similarity basics") {
  const auto src = canonical_landmarks(512, 512);
  const auto id = fit_similarity(src, src);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(id(r, c) == doctest::Approx(r == c ? 1 : 0));

  const auto t = fit_similarity(src, shifted(src, 10, -5)).params();
  CHECK(t.tx == doctest::Approx(10));
  CHECK(t.ty == doctest::Approx(-5));
  CHECK(std::abs(t.theta) < 1e-12);
  CHECK(t.scale == doctest::Approx(1));

  FaceLandmarks dbl = src;
  for (auto& p : dbl.points) p = {2 * p.x, 2 * p.y};
  const auto s = fit_similarity(src, dbl);
  double resid = 0;
  for (std::size_t i = 0; i < src.points.size(); ++i) {
    const Point2 q = map_point(s, src.points[i]);
    resid = std::max({resid, std::abs(q.x - dbl.points[i].x), std::abs(q.y - dbl.points[i].y)});
  }
  CHECK(resid < 1e-6);
  CHECK(s.params().scale == doctest::Approx(2));
}

TEST_CASE("fit_similarity recovers random generators") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  const FaceLandmarks src{"5pt", {{10, 20}, {60, 22}, {35, 50}, {15, 80}, {58, 77}}};
  for (int i = 0; i < 100; ++i) {
    const SimilarityParams g{-50 + 100 * u(rng), -50 + 100 * u(rng),
                             (u(rng) - 0.5) * std::numbers::pi, 0.5 + 1.5 * u(rng)};
    const auto f = fit_similarity(src, transform_landmarks(src, build_matrix(g))).params();
    CHECK(std::abs(f.tx - g.tx) < 1e-6);
    CHECK(std::abs(f.ty - g.ty) < 1e-6);
    CHECK(std::abs(f.theta - g.theta) < 1e-6);
    CHECK(std::abs(f.scale - g.scale) < 1e-6);
  }
}

TEST_CASE("fit_similarity rejects degenerate input") {
  const FaceLandmarks same{"5pt", {{3, 3}, {3, 3}, {3, 3}, {3, 3}, {3, 3}}};
  CHECK(code_of([&] { fit_similarity(same, canonical_landmarks(64, 64)); }) ==
        ErrorCode::kSingularFit);
  const FaceLandmarks bad{"5pt", {{1, 1}, {2, 2}}};
  CHECK_THROWS_AS(validate_landmarks(bad), Error);
  FaceLandmarks nan = canonical_landmarks(64, 64);
  nan.points[1].x = std::nan("");
  CHECK_THROWS_AS(validate_landmarks(nan), Error);
}

TEST_CASE("landmark sidecar round trip") {
  const auto dir = scratch_dir("maskgeom_lms");
  const auto l = canonical_landmarks(300, 200);
  write_landmarks(dir / "a.landmarks.json", l);
  const auto back = read_landmarks(dir / "a.landmarks.json");
  CHECK(back.scheme == "5pt");
  REQUIRE(back.points.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(back.points[i] == l.points[i]);
}

TEST_CASE("gen_mask with canonical landmarks returns the template") {
  const auto m0 = default_mask_template(128, 128);
  const auto c = canonical_landmarks(128, 128);
  CHECK(gen_mask(m0, c, c) == m0);
}

TEST_CASE("gen_mask follows a +20 px landmark shift") {
  const int n = 256;
  const auto m0 = default_mask_template(n, n);
  const auto c = canonical_landmarks(n, n);
  const auto m = gen_mask(m0, c, shifted(c, 20, 0));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int want = x >= 20 ? m0.at(x - 20, y) : 0;
      REQUIRE(m.at(x, y) == want);
    }
  const Point2 a = mask_centroid(m0), b = mask_centroid(m);
  CHECK(std::abs(b.x - a.x - 20) <= 1.0);
  CHECK(std::abs(b.y - a.y) <= 1.0);
}

TEST_CASE("gen_mask at half the inter-eye distance has ~1/4 of the pixels") {
  const int n = 512;
  const auto m0 = default_mask_template(n, n);
  const auto c = canonical_landmarks(n, n);
  FaceLandmarks half = c;
  for (auto& p : half.points) p = {n / 2.0 + 0.5 * (p.x - n / 2.0), n / 2.0 + 0.5 * (p.y - n / 2.0)};
  const auto m = gen_mask(m0, c, half);
  const double ratio = double(m.count_ones()) / double(m0.count_ones());
  CHECK(ratio == doctest::Approx(0.25).epsilon(0.10));
  for (auto v : m.data()) REQUIRE((v == 0 || v == 1));
}

TEST_CASE("gen_mask moved off canvas is degenerate") {
  const auto m0 = default_mask_template(64, 64);
  const auto c = canonical_landmarks(64, 64);
  CHECK(code_of([&] { gen_mask(m0, c, shifted(c, 500, 0)); }) == ErrorCode::kDegenerateMask);
}

TEST_CASE("composite selects per pixel") {
  const Image s = random_image(9, 7, 3, 1), t = random_image(9, 7, 3, 2);
  BinaryMask checker(9, 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x) checker.set(x, y, (x + y) % 2 == 0);
  const Image c = composite(s, t, checker);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x)
      for (int k = 0; k < 3; ++k)
        CHECK(c.at(x, y, k) == (checker.at(x, y) ? t.at(x, y, k) : s.at(x, y, k)));
  CHECK(composite(s, t, BinaryMask(9, 7, 1)) == t);
  CHECK(composite(s, t, BinaryMask(9, 7, 0)) == s);
  CHECK(composite(c, t, checker) == c);
  CHECK_THROWS_AS(composite(s, t, BinaryMask(8, 7, 1)), Error);
}

TEST_CASE("apply_mask zeroes outside the mask") {
  const Image s = random_image(4, 4, 3, 3);
  BinaryMask m(4, 4);
  m.set(1, 2, true);
  const Image a = apply_mask(s, m);
  CHECK(a.at(1, 2, 0) == s.at(1, 2, 0));
  CHECK(a.at(0, 0, 0) == 0.0);
}
