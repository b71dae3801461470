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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advmask/image.hpp"
#include "advmask/rst.hpp"

namespace advmask {

// H x W grid of {0,1}; 1 marks a perturbable pixel.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, std::uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint8_t at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  void set(int x, int y, bool on) {
    data_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0;
  }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  std::size_t count_ones() const;
  double fill_fraction() const;
  // Single-channel image of 0.0/1.0.
  Image to_image() const;
  // Thresholds a single-channel image: >= threshold becomes 1.
  static BinaryMask from_image(const Image& image, double threshold = 0.5);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

void require_mask_fits(const BinaryMask& m, const Image& image,
                       const char* what);

struct FaceLandmarks {
  std::string scheme;
  std::vector<Point2> points;
};

// Known schemes and their point counts: "5pt" (left eye, right eye, nose tip,
// left mouth corner, right mouth corner) and "68pt".
int scheme_point_count(const std::string& scheme);
void validate_landmarks(const FaceLandmarks& lms);

// Canonical 5-point positions for a width x height canvas (the usual
// 112x112 alignment template, scaled).
FaceLandmarks canonical_landmarks(int width, int height);

// Sidecar JSON: {"scheme": "5pt", "points": [[x, y], ...]}.
FaceLandmarks read_landmarks(const std::filesystem::path& path);
void write_landmarks(const std::filesystem::path& path,
                     const FaceLandmarks& lms);
FaceLandmarks transform_landmarks(const FaceLandmarks& lms,
                                  const SimilarityTransform& t);

// Least-squares rotation + uniform scale + translation taking src to dst.
SimilarityTransform fit_similarity(const FaceLandmarks& src,
                                   const FaceLandmarks& dst);

// The bundled initial mask: face region below the hairline with two
// elliptical eye holes, laid out against canonical_landmarks().
BinaryMask default_mask_template(int width, int height);

// Loads a single-channel template image, thresholding at 0.5 (8-bit: >=128).
// Pass expected dimensions of 0 to accept any size.
BinaryMask load_initial_mask(const std::filesystem::path& path,
                             int expected_width = 0, int expected_height = 0);
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);

// Warps m0 by the similarity fitted from canonical to source landmarks,
// bilinear resampling, re-binarised at 0.5. Uncovered regions become 0.
BinaryMask gen_mask(const BinaryMask& m0, const FaceLandmarks& canonical,
                    const FaceLandmarks& source);

// source where m == 0, target where m == 1.
FaceImage composite(const FaceImage& source, const FaceImage& target,
                    const BinaryMask& m);

// image where m == 1, 0 elsewhere.
FaceImage apply_mask(const FaceImage& image, const BinaryMask& m);

Point2 mask_centroid(const BinaryMask& m);

}  // namespace advmask
