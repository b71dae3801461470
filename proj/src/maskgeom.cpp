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

#include "advmask/maskgeom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace advmask {

BinaryMask::BinaryMask(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative mask dimension");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::count_ones() const {
  return static_cast<std::size_t>(std::ranges::count(data_, 1));
}

double BinaryMask::fill_fraction() const {
  return data_.empty() ? 0.0
                       : static_cast<double>(count_ones()) / data_.size();
}

Image BinaryMask::to_image() const {
  Image out(width_, height_, 1);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = data_[i];
  return out;
}

BinaryMask BinaryMask::from_image(const Image& image, double threshold) {
  if (image.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask image must be single-channel");
  }
  BinaryMask m(image.width(), image.height());
  for (std::size_t i = 0; i < m.data_.size(); ++i) {
    m.data_[i] = image.data()[i] >= threshold ? 1 : 0;
  }
  return m;
}

void require_mask_fits(const BinaryMask& m, const Image& image,
                       const char* what) {
  if (m.width() != image.width() || m.height() != image.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": mask " + std::to_string(m.width()) +
                    "x" + std::to_string(m.height()) + " vs image " +
                    std::to_string(image.width()) + "x" +
                    std::to_string(image.height()));
  }
}

int scheme_point_count(const std::string& scheme) {
  if (scheme == "5pt") return 5;
  if (scheme == "68pt") return 68;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown landmark scheme '" + scheme + "'");
}

void validate_landmarks(const FaceLandmarks& lms) {
  const int expected = scheme_point_count(lms.scheme);
  if (static_cast<int>(lms.points.size()) != expected) {
    throw Error(ErrorCode::kInvalidArgument,
                "scheme " + lms.scheme + " expects " +
                    std::to_string(expected) + " points, got " +
                    std::to_string(lms.points.size()));
  }
  for (const auto& p : lms.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite landmark");
    }
  }
}

FaceLandmarks canonical_landmarks(int width, int height) {
  static constexpr double kTemplate[5][2] = {
      {38.2946, 51.6963}, {73.5318, 51.5014}, {56.0252, 71.7366},
      {41.5493, 92.3655}, {70.7299, 92.2041}};
  FaceLandmarks lms{"5pt", {}};
  for (const auto& p : kTemplate) {
    lms.points.push_back({p[0] / 112.0 * width, p[1] / 112.0 * height});
  }
  return lms;
}

FaceLandmarks read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  FaceLandmarks lms;
  try {
    const auto j = nlohmann::json::parse(in);
    lms.scheme = j.at("scheme").get<std::string>();
    for (const auto& p : j.at("points")) {
      lms.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo,
                "malformed landmark file " + path.string() + ": " + e.what());
  }
  validate_landmarks(lms);
  return lms;
}

void write_landmarks(const std::filesystem::path& path,
                     const FaceLandmarks& lms) {
  nlohmann::json j;
  j["scheme"] = lms.scheme;
  j["points"] = nlohmann::json::array();
  for (const auto& p : lms.points) j["points"].push_back({p.x, p.y});
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream(path) << j.dump(2) << "\n";
}

FaceLandmarks transform_landmarks(const FaceLandmarks& lms,
                                  const SimilarityTransform& t) {
  FaceLandmarks out{lms.scheme, {}};
  out.points.reserve(lms.points.size());
  for (const auto& p : lms.points) out.points.push_back(map_point(t, p));
  return out;
}

SimilarityTransform fit_similarity(const FaceLandmarks& src,
                                   const FaceLandmarks& dst) {
  if (src.scheme != dst.scheme || src.points.size() != dst.points.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "landmark schemes differ: " + src.scheme + " vs " + dst.scheme);
  }
  const std::size_t n = src.points.size();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two landmarks");
  }
  Point2 ms, md;
  for (std::size_t i = 0; i < n; ++i) {
    ms.x += src.points[i].x;
    ms.y += src.points[i].y;
    md.x += dst.points[i].x;
    md.y += dst.points[i].y;
  }
  ms.x /= n;
  ms.y /= n;
  md.x /= n;
  md.y /= n;

  // With a = s cos(theta), b = s sin(theta):
  //   x' = a x + b y + tx,  y' = -b x + a y + ty.
  double sxx = 0.0, num_a = 0.0, num_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = src.points[i].x - ms.x, y = src.points[i].y - ms.y;
    const double u = dst.points[i].x - md.x, v = dst.points[i].y - md.y;
    sxx += x * x + y * y;
    num_a += x * u + y * v;
    num_b += y * u - x * v;
  }
  double spread = 0.0;
  for (const auto& p : src.points) {
    spread = std::max({spread, std::abs(p.x), std::abs(p.y)});
  }
  if (sxx <= 1e-12 * std::max(1.0, spread * spread)) {
    throw Error(ErrorCode::kSingularFit,
                "source landmarks are coincident; similarity is undefined");
  }
  const double a = num_a / sxx;
  const double b = num_b / sxx;
  if (a == 0.0 && b == 0.0) {
    throw Error(ErrorCode::kSingularFit, "fitted scale is zero");
  }
  const double tx = md.x - (a * ms.x + b * ms.y);
  const double ty = md.y - (-b * ms.x + a * ms.y);
  return SimilarityTransform::from_rows({a, b, tx, -b, a, ty});
}

namespace {

double ellipse_value(double x, double y, double cx, double cy, double rx,
                     double ry) {
  const double dx = (x - cx) / rx, dy = (y - cy) / ry;
  return dx * dx + dy * dy;
}

}  // namespace

BinaryMask default_mask_template(int width, int height) {
  const auto lms = canonical_landmarks(width, height);
  const Point2 le = lms.points[0], re = lms.points[1];
  BinaryMask m(width, height);
  const double eye_rx = 0.085 * width, eye_ry = 0.055 * height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width, v = (y + 0.5) / height;
      const bool face = ellipse_value(u, v, 0.5, 0.58, 0.40, 0.46) <= 1.0 &&
                        v >= 0.30;
      const bool eye =
          ellipse_value(x + 0.5, y + 0.5, le.x, le.y, eye_rx, eye_ry) <= 1.0 ||
          ellipse_value(x + 0.5, y + 0.5, re.x, re.y, eye_rx, eye_ry) <= 1.0;
      m.set(x, y, face && !eye);
    }
  }
  return m;
}

BinaryMask load_initial_mask(const std::filesystem::path& path,
                             int expected_width, int expected_height) {
  const Image img = read_image(path, 1);
  if ((expected_width > 0 && img.width() != expected_width) ||
      (expected_height > 0 && img.height() != expected_height)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mask template " + path.string() + " is " +
                    std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + ", canvas is " +
                    std::to_string(expected_width) + "x" +
                    std::to_string(expected_height));
  }
  // 8-bit values >= 128 map to >= 128/255 > 0.5; 127 maps below.
  return BinaryMask::from_image(img, 0.5);
}

void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  write_image(path, mask.to_image());
}

BinaryMask gen_mask(const BinaryMask& m0, const FaceLandmarks& canonical,
                    const FaceLandmarks& source) {
  validate_landmarks(canonical);
  validate_landmarks(source);
  const SimilarityTransform forward = fit_similarity(canonical, source);
  // Output pixel p (source frame) reads the template at forward^-1 p.
  const Image warped = warp_bilinear(m0.to_image(), forward.inverse());
  BinaryMask m = BinaryMask::from_image(warped, 0.5);
  if (m.count_ones() == 0) {
    throw Error(ErrorCode::kDegenerateMask,
                "warped mask has no perturbable pixels");
  }
  return m;
}

FaceImage composite(const FaceImage& source, const FaceImage& target,
                    const BinaryMask& m) {
  require_same_shape(source, target, "composite");
  require_mask_fits(m, source, "composite");
  FaceImage out = source;
  const int ch = source.channels();
  for (int y = 0; y < source.height(); ++y) {
    for (int x = 0; x < source.width(); ++x) {
      if (!m.at(x, y)) continue;
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = target.at(x, y, c);
    }
  }
  return out;
}

FaceImage apply_mask(const FaceImage& image, const BinaryMask& m) {
  require_mask_fits(m, image, "apply_mask");
  FaceImage out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!m.at(x, y)) continue;
      for (int c = 0; c < image.channels(); ++c) {
        out.at(x, y, c) = image.at(x, y, c);
      }
    }
  }
  return out;
}

Point2 mask_centroid(const BinaryMask& m) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      sx += x;
      sy += y;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::kDegenerateMask, "empty mask");
  return {sx / n, sy / n};
}

}  // namespace advmask
