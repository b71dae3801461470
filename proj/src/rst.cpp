// Copyright 2026 The advmask Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "advmask/rst.hpp"

#include <cmath>
#include <numbers>

namespace advmask {

SimilarityTransform SimilarityTransform::from_rows(
    const std::array<double, 6>& rows) {
  SimilarityTransform t;
  for (int i = 0; i < 6; ++i) t.m_[i] = rows[i];
  t.m_[6] = 0.0;
  t.m_[7] = 0.0;
  t.m_[8] = 1.0;
  return t;
}

SimilarityTransform SimilarityTransform::translation(double tx, double ty) {
  return from_rows({1.0, 0.0, tx, 0.0, 1.0, ty});
}

SimilarityParams SimilarityTransform::params() const {
  SimilarityParams p;
  p.scale = std::hypot(m_[0], m_[1]);
  p.theta = std::atan2(m_[1], m_[0]);
  p.tx = m_[2];
  p.ty = m_[5];
  return p;
}

SimilarityTransform SimilarityTransform::inverse() const {
  const double det = determinant();
  if (det == 0.0 || !std::isfinite(det)) {
    throw Error(ErrorCode::kSingularFit, "transform is not invertible");
  }
  const double a = m_[4] / det, b = -m_[1] / det;
  const double c = -m_[3] / det, d = m_[0] / det;
  return from_rows({a, b, -(a * m_[2] + b * m_[5]),
                    c, d, -(c * m_[2] + d * m_[5])});
}

SimilarityTransform operator*(const SimilarityTransform& a,
                              const SimilarityTransform& b) {
  std::array<double, 6> r{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      double v = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
      if (j == 2) v += a(i, 2);
      r[i * 3 + j] = v;
    }
  }
  return SimilarityTransform::from_rows(r);
}

void validate_beta(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "beta must lie in [0, 1), got " + std::to_string(beta));
  }
}

SimilarityParams sample_rst(double beta, int width, int height,
                            std::mt19937_64& rng) {
  validate_beta(beta);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  SimilarityParams p;
  p.tx = uniform(-beta * width, beta * width);
  p.ty = uniform(-beta * height, beta * height);
  p.theta = uniform(-beta * std::numbers::pi / 2, beta * std::numbers::pi / 2);
  p.scale = uniform(1.0 - beta, 1.0 + beta);
  return p;
}

SimilarityTransform build_matrix(const SimilarityParams& params) {
  if (!(params.scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  }
  const double c = std::cos(params.theta) * params.scale;
  const double s = std::sin(params.theta) * params.scale;
  return SimilarityTransform::from_rows({c, s, params.tx, -s, c, params.ty});
}

Point2 map_point(const SimilarityTransform& t, Point2 p) {
  return {t(0, 0) * p.x + t(0, 1) * p.y + t(0, 2),
          t(1, 0) * p.x + t(1, 1) * p.y + t(1, 2)};
}

SimilarityTransform about_pivot(const SimilarityTransform& t, int width,
                                int height, Pivot pivot) {
  if (pivot == Pivot::kCorner) return t;
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  return SimilarityTransform::translation(cx, cy) * t *
         SimilarityTransform::translation(-cx, -cy);
}

namespace {

// Visits the four bilinear taps of sample point (sx, sy) that fall inside a
// width x height grid, passing (x, y, weight).
template <typename Fn>
inline void for_each_tap(double sx, double sy, int width, int height, Fn&& fn) {
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  if (fx0 < -1.0 || fy0 < -1.0 || fx0 > width || fy0 > height) return;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const double ax = sx - fx0;
  const double ay = sy - fy0;
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  for (int j = 0; j < 2; ++j) {
    const int y = y0 + j;
    if (y < 0 || y >= height || wy[j] == 0.0) continue;
    for (int i = 0; i < 2; ++i) {
      const int x = x0 + i;
      if (x < 0 || x >= width || wx[i] == 0.0) continue;
      fn(x, y, wx[i] * wy[j]);
    }
  }
}

}  // namespace

Image warp_bilinear(const Image& image, const SimilarityTransform& t) {
  return warp_bilinear(image, t, image.width(), image.height());
}

Image warp_bilinear(const Image& image, const SimilarityTransform& t,
                    int out_width, int out_height) {
  if (image.empty()) {
    throw Error(ErrorCode::kEmptyInput, "warp_bilinear: empty image");
  }
  const int ch = image.channels();
  Image out(out_width, out_height, ch);
  const auto src = image.data();
  auto dst = out.data();
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Point2 s = map_point(t, {static_cast<double>(x),
                                     static_cast<double>(y)});
      double* o = &dst[(static_cast<std::size_t>(y) * out_width + x) * ch];
      for_each_tap(s.x, s.y, image.width(), image.height(),
                   [&](int ix, int iy, double w) {
                     const double* p =
                         &src[(static_cast<std::size_t>(iy) * image.width() +
                               ix) * ch];
                     for (int c = 0; c < ch; ++c) o[c] += w * p[c];
                   });
    }
  }
  return out;
}

Image warp_bilinear_adjoint(const Image& grad_out, const SimilarityTransform& t,
                            int in_width, int in_height) {
  const int ch = grad_out.channels();
  Image grad_in(in_width, in_height, ch);
  const auto g = grad_out.data();
  auto dst = grad_in.data();
  for (int y = 0; y < grad_out.height(); ++y) {
    for (int x = 0; x < grad_out.width(); ++x) {
      const Point2 s = map_point(t, {static_cast<double>(x),
                                     static_cast<double>(y)});
      const double* go =
          &g[(static_cast<std::size_t>(y) * grad_out.width() + x) * ch];
      for_each_tap(s.x, s.y, in_width, in_height,
                   [&](int ix, int iy, double w) {
                     double* p =
                         &dst[(static_cast<std::size_t>(iy) * in_width + ix) *
                              ch];
                     for (int c = 0; c < ch; ++c) p[c] += w * go[c];
                   });
    }
  }
  return grad_in;
}

RstDraw draw_rst(double beta, int width, int height, Pivot pivot,
                 std::mt19937_64& rng) {
  RstDraw draw;
  draw.params = sample_rst(beta, width, height, rng);
  draw.pixel_transform =
      about_pivot(build_matrix(draw.params), width, height, pivot);
  return draw;
}

}  // namespace advmask
