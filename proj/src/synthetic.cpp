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

#include "advmask/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace advmask {

namespace {

double smoothstep_inside(double signed_distance, double softness) {
  // 1 inside (negative distance), 0 outside, linear ramp of width softness.
  return std::clamp(0.5 - signed_distance / softness, 0.0, 1.0);
}

// Approximate signed distance to an axis-aligned ellipse, in normalised units.
double ellipse_sd(double u, double v, double cx, double cy, double rx,
                  double ry) {
  const double dx = (u - cx) / rx, dy = (v - cy) / ry;
  return (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(rx, ry);
}

RgbColor mix(const RgbColor& a, const RgbColor& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

}  // namespace

SyntheticIdentity make_identity(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  SyntheticIdentity id;
  id.seed = seed;
  const double r = range(0.50, 0.95);
  const double g = r * range(0.62, 0.86);
  id.skin = {r, g, g * range(0.65, 0.92)};
  id.hair = {range(0.05, 0.45), range(0.03, 0.30), range(0.02, 0.22)};
  id.iris = {range(0.05, 0.4), range(0.1, 0.45), range(0.1, 0.6)};
  id.lips = {range(0.55, 0.9), range(0.15, 0.4), range(0.2, 0.45)};
  id.face_rx = range(0.31, 0.38);
  id.face_ry = range(0.40, 0.46);
  id.hairline = range(0.24, 0.32);

  const auto canon = canonical_landmarks(1, 1);
  const double spread = range(-0.025, 0.025);
  const double eye_dy = range(-0.02, 0.02);
  id.left_eye = {canon.points[0].x - spread, canon.points[0].y + eye_dy};
  id.right_eye = {canon.points[1].x + spread, canon.points[1].y + eye_dy};
  id.nose = {canon.points[2].x + range(-0.01, 0.01),
             canon.points[2].y + range(-0.03, 0.03)};
  const double mouth_w = range(-0.03, 0.03);
  const double mouth_dy = range(-0.025, 0.025);
  id.mouth_left = {canon.points[3].x - mouth_w, canon.points[3].y + mouth_dy};
  id.mouth_right = {canon.points[4].x + mouth_w, canon.points[4].y + mouth_dy};
  id.eye_rx = range(0.042, 0.058);
  id.eye_ry = range(0.018, 0.03);
  id.brow_thickness = range(0.008, 0.02);

  const int blobs = 5;
  for (int i = 0; i < blobs; ++i) {
    Blob b;
    b.center = {range(0.25, 0.75), range(0.5, 0.85)};
    b.radius = range(0.05, 0.12);
    b.tint = {range(-0.25, 0.25), range(-0.25, 0.25), range(-0.25, 0.25)};
    id.blobs.push_back(b);
  }
  return id;
}

SyntheticFace render_face(const SyntheticIdentity& id,
                          const RenderOptions& options, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  // Pose in normalised coordinates, about the canvas centre.
  double angle = 0.0, scale = 1.0, shift_x = 0.0, shift_y = 0.0;
  double brightness = 0.0, contrast = 1.0;
  RgbColor background{0.5, 0.5, 0.5};
  if (!options.canonical_pose) {
    const double j = options.pose_jitter;
    angle = range(-0.10 * j, 0.10 * j);
    scale = range(1.0 - 0.04 * j, 1.0 + 0.04 * j);
    shift_x = range(-0.03 * j, 0.03 * j);
    shift_y = range(-0.03 * j, 0.03 * j);
    brightness = range(-0.06, 0.06);
    contrast = range(0.92, 1.08);
    background = {range(0.2, 0.9), range(0.2, 0.9), range(0.2, 0.9)};
  }
  const double ca = std::cos(angle), sa = std::sin(angle);
  auto pose = [&](Point2 p) -> Point2 {
    const double x = p.x - 0.5, y = p.y - 0.5;
    return {scale * (ca * x - sa * y) + 0.5 + shift_x,
            scale * (sa * x + ca * y) + 0.5 + shift_y};
  };
  auto unpose = [&](Point2 q) -> Point2 {
    const double x = (q.x - 0.5 - shift_x) / scale;
    const double y = (q.y - 0.5 - shift_y) / scale;
    return {ca * x + sa * y + 0.5, -sa * x + ca * y + 0.5};
  };

  const int w = options.width, h = options.height;
  const double soft = 1.5 / std::min(w, h);
  const double face_cx = 0.5, face_cy = 0.57;
  const Point2 mouth_c{(id.mouth_left.x + id.mouth_right.x) / 2,
                       (id.mouth_left.y + id.mouth_right.y) / 2};
  const double mouth_rx = (id.mouth_right.x - id.mouth_left.x) / 2;

  std::normal_distribution<double> noise(0.0, options.noise_sigma > 0
                                                  ? options.noise_sigma
                                                  : 1.0);
  SyntheticFace out;
  out.image = FaceImage(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 p = unpose({(x + 0.5) / w, (y + 0.5) / h});
      RgbColor c = background;

      // Hair: a cap above the hairline inside an enlarged head ellipse.
      const double head = smoothstep_inside(
          ellipse_sd(p.x, p.y, face_cx, face_cy - 0.04, id.face_rx + 0.04,
                     id.face_ry + 0.06),
          soft);
      c = mix(c, id.hair, head);

      const double face = smoothstep_inside(
          ellipse_sd(p.x, p.y, face_cx, face_cy, id.face_rx, id.face_ry),
          soft);
      const double below = std::clamp((p.y - id.hairline) / soft + 0.5, 0.0, 1.0);
      RgbColor skin = id.skin;
      for (const auto& b : id.blobs) {
        const double dx = p.x - b.center.x, dy = p.y - b.center.y;
        const double g = std::exp(-(dx * dx + dy * dy) / (b.radius * b.radius));
        skin.r += b.tint.r * g;
        skin.g += b.tint.g * g;
        skin.b += b.tint.b * g;
      }
      c = mix(c, skin, face * below);

      // Brows, eyes, irises.
      for (const Point2& e : {id.left_eye, id.right_eye}) {
        const double brow = smoothstep_inside(
            ellipse_sd(p.x, p.y, e.x, e.y - 0.045, id.eye_rx * 1.1,
                       id.brow_thickness),
            soft);
        c = mix(c, id.hair, brow * face);
        const double eye = smoothstep_inside(
            ellipse_sd(p.x, p.y, e.x, e.y, id.eye_rx, id.eye_ry), soft);
        c = mix(c, RgbColor{0.95, 0.95, 0.93}, eye);
        const double iris = smoothstep_inside(
            ellipse_sd(p.x, p.y, e.x, e.y, id.eye_ry * 0.9, id.eye_ry * 0.9),
            soft);
        c = mix(c, id.iris, iris * eye);
      }

      // Nose: darker shading ending at the tip.
      const double nose = smoothstep_inside(
          ellipse_sd(p.x, p.y, id.nose.x, id.nose.y - 0.05, 0.028, 0.065),
          soft);
      c = mix(c, RgbColor{skin.r * 0.78, skin.g * 0.74, skin.b * 0.72},
              nose * face);

      const double lips = smoothstep_inside(
          ellipse_sd(p.x, p.y, mouth_c.x, mouth_c.y, mouth_rx, 0.028), soft);
      c = mix(c, id.lips, lips);

      double rgb[3] = {c.r, c.g, c.b};
      for (int k = 0; k < 3; ++k) {
        double v = (rgb[k] - 0.5) * contrast + 0.5 + brightness;
        if (options.noise_sigma > 0) v += noise(rng);
        out.image.at(x, y, k) = std::clamp(v, 0.0, 1.0);
      }
    }
  }

  out.landmarks.scheme = "5pt";
  for (const Point2& p : {id.left_eye, id.right_eye, id.nose, id.mouth_left,
                          id.mouth_right}) {
    const Point2 q = pose(p);
    out.landmarks.points.push_back({q.x * w - 0.5, q.y * h - 0.5});
  }
  return out;
}

std::vector<LabelledFace> make_labelled_set(int identities, int per_identity,
                                            std::uint64_t base_seed,
                                            const RenderOptions& options,
                                            std::uint64_t render_seed) {
  std::mt19937_64 rng(render_seed);
  std::vector<LabelledFace> out;
  out.reserve(static_cast<std::size_t>(identities) * per_identity);
  for (int i = 0; i < identities; ++i) {
    const auto id = make_identity(base_seed + i);
    for (int k = 0; k < per_identity; ++k) {
      out.push_back({i, render_face(id, options, rng)});
    }
  }
  return out;
}

void write_synthetic_dataset(const std::filesystem::path& root, int identities,
                             int per_identity, std::uint64_t seed, int width,
                             int height) {
  std::mt19937_64 rng(seed);
  RenderOptions opts;
  opts.width = width;
  opts.height = height;
  for (int i = 0; i < identities; ++i) {
    const auto id = make_identity(seed + static_cast<std::uint64_t>(i));
    char dir[32];
    std::snprintf(dir, sizeof dir, "id_%02d", i);
    for (int k = 0; k < per_identity; ++k) {
      const auto face = render_face(id, opts, rng);
      char stem[32];
      std::snprintf(stem, sizeof stem, "img_%02d", k);
      write_image(root / dir / (std::string(stem) + ".png"), face.image);
      write_landmarks(root / dir / (std::string(stem) + ".landmarks.json"),
                      face.landmarks);
    }
  }
}

}  // namespace advmask
