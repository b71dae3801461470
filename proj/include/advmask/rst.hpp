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

#pragma once

// Random similarity transformation: 4-DoF parameter sampling controlled by a
// single hyperparameter beta, the homogeneous matrix built from those
// parameters, point mapping, and a bilinear warp that is differentiable with
// respect to the pixel values it reads.

#include <array>
#include <random>

#include "advmask/image.hpp"

namespace advmask {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct SimilarityParams {
  double tx = 0.0;     // pixels
  double ty = 0.0;     // pixels
  double theta = 0.0;  // radians
  double scale = 1.0;  // dimensionless, > 0

  friend bool operator==(const SimilarityParams&,
                         const SimilarityParams&) = default;
};

// 3x3 homogeneous matrix, row-major. Bottom row is always [0 0 1].
class SimilarityTransform {
 public:
  using Matrix = std::array<double, 9>;

  SimilarityTransform() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

  // Takes the top two rows; the bottom row is forced to [0 0 1].
  static SimilarityTransform from_rows(const std::array<double, 6>& rows);
  static SimilarityTransform translation(double tx, double ty);

  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int row, int col) const { return m_[row * 3 + col]; }

  // Recovers (tx, ty, theta, s) under the row-0 = [s cos, s sin, tx] layout.
  SimilarityParams params() const;
  double determinant() const noexcept { return m_[0] * m_[4] - m_[1] * m_[3]; }
  SimilarityTransform inverse() const;

  // (a * b) applies b first.
  friend SimilarityTransform operator*(const SimilarityTransform& a,
                                       const SimilarityTransform& b);

 private:
  Matrix m_;
};

// Rejects beta outside [0,1): at beta=1 the scale interval reaches 0.
void validate_beta(double beta);

// Draws t_x ~ U(-bW, bW), t_y ~ U(-bH, bH), theta ~ U(-b*pi/2, b*pi/2),
// s ~ U(1-b, 1+b), in that order, from `rng`.
SimilarityParams sample_rst(double beta, int width, int height,
                            std::mt19937_64& rng);

// T = Translate(tx, ty) * Rotate(theta) * Scale(s) with
// row 0 = [s cos, s sin, tx], row 1 = [-s sin, s cos, ty].
SimilarityTransform build_matrix(const SimilarityParams& params);

Point2 map_point(const SimilarityTransform& t, Point2 p);

enum class Pivot { kCenter, kCorner };

// Expresses `t` in absolute pixel coordinates. With kCenter the rotation and
// scaling act about the image centre ((W-1)/2, (H-1)/2).
SimilarityTransform about_pivot(const SimilarityTransform& t, int width,
                                int height, Pivot pivot);

// Backward warp: out(p) = bilinear(image, t * p), with t mapping output pixel
// coordinates to input sampling coordinates. Pixel centres sit on integer
// coordinates; samples outside the image read 0.
Image warp_bilinear(const Image& image, const SimilarityTransform& t);
Image warp_bilinear(const Image& image, const SimilarityTransform& t,
                    int out_width, int out_height);

// Adjoint of warp_bilinear with respect to the input pixels: given dL/d(out),
// returns dL/d(image) for an input of size in_width x in_height.
Image warp_bilinear_adjoint(const Image& grad_out, const SimilarityTransform& t,
                            int in_width, int in_height);

// One random similarity transformation of an image, as used inside the
// attack loop: sample params, build the matrix, conjugate to the pivot.
struct RstDraw {
  SimilarityParams params;
  SimilarityTransform pixel_transform;  // absolute pixel coordinates
};

RstDraw draw_rst(double beta, int width, int height, Pivot pivot,
                 std::mt19937_64& rng);

}  // namespace advmask
