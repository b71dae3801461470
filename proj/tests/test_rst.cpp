#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "advmask/error.hpp"
#include "advmask/rst.hpp"
#include "test_util.hpp"

using namespace advmask;
using advmask::testing::random_image;

namespace {

using M3 = std::array<std::array<double, 3>, 3>;

M3 mul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Translate * Rotate * Scale written out factor by factor.
M3 three_factor(double tx, double ty, double th, double s) {
  const M3 t{{{1, 0, tx}, {0, 1, ty}, {0, 0, 1}}};
  const M3 r{{{std::cos(th), std::sin(th), 0}, {-std::sin(th), std::cos(th), 0}, {0, 0, 1}}};
  const M3 sc{{{s, 0, 0}, {0, s, 0}, {0, 0, 1}}};
  return mul(mul(t, r), sc);
}

}  // namespace

TEST_CASE("build_matrix equals the three-factor product") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const SimilarityParams p{100 * u(rng), 100 * u(rng), 2 * u(rng), 1.0 + 0.5 * u(rng)};
    const auto t = build_matrix(p);
    const auto o = three_factor(p.tx, p.ty, p.theta, p.scale);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(t(r, c) - o[r][c]) <= 1e-12);
  }
}

TEST_CASE("build_matrix hand example and block structure") {
  const auto t = build_matrix({10, -5, std::numbers::pi / 6, 1.1});
  CHECK(t(0, 0) == doctest::Approx(0.95263).epsilon(1e-5));
  CHECK(t(0, 1) == doctest::Approx(0.55).epsilon(1e-5));
  CHECK(t(0, 2) == 10);
  CHECK(t(1, 0) == doctest::Approx(-0.55).epsilon(1e-5));
  CHECK(t(1, 1) == doctest::Approx(0.95263).epsilon(1e-5));
  CHECK(t(1, 2) == -5);
  CHECK(t(2, 0) == 0);
  CHECK(t(2, 1) == 0);
  CHECK(t(2, 2) == 1);
  CHECK(std::abs(t.determinant() - 1.21) <= 1e-9);
  CHECK(t(0, 0) == t(1, 1));
  CHECK(t(0, 1) == -t(1, 0));
}

TEST_CASE("map_point hand example and inverse round trip") {
  const auto t = build_matrix({10, -5, std::numbers::pi / 6, 1.1});
  const Point2 q = map_point(t, {1, 0});
  CHECK(std::abs(q.x - 10.95263) <= 1e-5);
  CHECK(std::abs(q.y - -5.55) <= 1e-5);
  const Point2 p{37.25, -12.5};
  const Point2 back = map_point(t, map_point(t.inverse(), p));
  CHECK(std::abs(back.x - p.x) <= 1e-9);
  CHECK(std::abs(back.y - p.y) <= 1e-9);
  CHECK(map_point(SimilarityTransform{}, p) == p);
}

TEST_CASE("params decomposition recovers the inputs") {
  const SimilarityParams p{3.5, -2, 0.4, 0.9};
  const auto q = build_matrix(p).params();
  CHECK(q.tx == doctest::Approx(p.tx));
  CHECK(q.ty == doctest::Approx(p.ty));
  CHECK(q.theta == doctest::Approx(p.theta));
  CHECK(q.scale == doctest::Approx(p.scale));
}

TEST_CASE("sampler respects bounds and is centred") {
  std::mt19937_64 rng(11);
  const double b = 0.2;
  const int w = 512, h = 512;
  double sum_tx = 0, sum_sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_rst(b, w, h, rng);
    REQUIRE(std::abs(p.tx) <= b * w);
    REQUIRE(std::abs(p.ty) <= b * h);
    REQUIRE(std::abs(p.theta) <= b * std::numbers::pi / 2);
    REQUIRE(p.scale >= 1 - b);
    REQUIRE(p.scale <= 1 + b);
    sum_tx += p.tx;
    sum_sq += p.tx * p.tx;
  }
  const double mean = sum_tx / n;
  const double se = std::sqrt(sum_sq / n - mean * mean) / std::sqrt(double(n));
  CHECK(std::abs(mean) <= 3 * se);
}

TEST_CASE("beta = 0 gives the identity exactly") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto p = sample_rst(0.0, 512, 512, rng);
    CHECK(p == SimilarityParams{0, 0, 0, 1});
    const auto d = draw_rst(0.0, 512, 512, Pivot::kCenter, rng);
    CHECK(d.pixel_transform.matrix() == SimilarityTransform{}.matrix());
  }
}

TEST_CASE("beta outside [0,1) is rejected") {
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_rst(1.0, 8, 8, rng), Error);
  CHECK_THROWS_AS(sample_rst(-0.1, 8, 8, rng), Error);
}

TEST_CASE("same seed gives the same parameter sequence") {
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 50; ++i) CHECK(sample_rst(0.3, 64, 48, a) == sample_rst(0.3, 64, 48, b));
}

TEST_CASE("identity warp is exact") {
  const Image im = random_image(16, 12, 3, 5);
  CHECK(warp_bilinear(im, SimilarityTransform{}) == im);
}

TEST_CASE("integer translation shifts columns with zero fill") {
  const Image im = random_image(16, 16, 1, 6);
  const Image out = warp_bilinear(im, SimilarityTransform::translation(3, 0));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const double want = x + 3 < 16 ? im.at(x + 3, y, 0) : 0.0;
      CHECK(out.at(x, y, 0) == want);
    }
}

TEST_CASE("scaling a constant image keeps the interior constant") {
  Image im(32, 32, 3, 0.37);
  const auto t = about_pivot(build_matrix({0, 0, 0, 2.0}), 32, 32, Pivot::kCenter);
  const Image out = warp_bilinear(im, t);
  // Backward warp: only outputs whose sample lands inside the input count.
  int checked = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const Point2 p = map_point(t, {double(x), double(y)});
      if (p.x < 0 || p.y < 0 || p.x > 31 || p.y > 31) continue;
      ++checked;
      CHECK(std::abs(out.at(x, y, 1) - 0.37) <= 1e-6);
    }
  CHECK(checked > 200);
}

TEST_CASE("centre pivot keeps the centre fixed") {
  const auto t = about_pivot(build_matrix({0, 0, 0.7, 1.3}), 31, 21, Pivot::kCenter);
  const Point2 c = map_point(t, {15, 10});
  CHECK(c.x == doctest::Approx(15));
  CHECK(c.y == doctest::Approx(10));
}

TEST_CASE("adjoint satisfies <W x, y> = <x, W^T y>") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = draw_rst(0.4, 13, 11, Pivot::kCenter, rng);
    const Image x = random_image(13, 11, 3, 100 + trial);
    const Image y = random_image(13, 11, 3, 200 + trial);
    const Image wx = warp_bilinear(x, d.pixel_transform);
    const Image wty = warp_bilinear_adjoint(y, d.pixel_transform, 13, 11);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      a += wx.data()[i] * y.data()[i];
      b += x.data()[i] * wty.data()[i];
    }
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("gradient of mean(warp) matches central differences") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = draw_rst(0.3, 8, 8, Pivot::kCenter, rng);
    Image x = random_image(8, 8, 3, 300 + trial);
    const double n = static_cast<double>(x.size());
    Image ones(8, 8, 3, 1.0 / n);
    const Image g = warp_bilinear_adjoint(ones, d.pixel_transform, 8, 8);
    auto f = [&](const Image& im) {
      const Image w = warp_bilinear(im, d.pixel_transform);
      double s = 0;
      for (double v : w.data()) s += v;
      return s / n;
    };
    double max_err = 0, max_fd = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = 1e-3, v = x.data()[i];
      x.data()[i] = v + h;
      const double fp = f(x);
      x.data()[i] = v - h;
      const double fm = f(x);
      x.data()[i] = v;
      const double fd = (fp - fm) / (2 * h);
      max_err = std::max(max_err, std::abs(fd - g.data()[i]));
      max_fd = std::max(max_fd, std::abs(fd));
    }
    CHECK(max_err / max_fd <= 1e-4);
  }
}

TEST_CASE("composition applies the right operand first") {
  const auto a = SimilarityTransform::translation(5, 0);
  const auto b = build_matrix({0, 0, 0, 2});
  const Point2 p = map_point(a * b, {1, 1});
  CHECK(p.x == doctest::Approx(7));
  CHECK(p.y == doctest::Approx(2));
}
