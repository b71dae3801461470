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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advmask/error.hpp"

namespace advmask {

// Interleaved H x W x C grid of doubles. Face images live in [0,1] with C=3;
// the same type carries gradients with respect to an image.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// A face image is an Image with three channels in [0,1]; a gradient grid has
// the same shape as the image it differentiates.
using FaceImage = Image;
using GradientGrid = Image;

double max_abs_diff(const Image& a, const Image& b);
bool all_finite(const Image& image);
bool in_unit_range(const Image& image);

// Throws kDimensionMismatch naming `what` when shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

// 8-bit image I/O. Files decode to [0,1]; `channels` of 0 keeps the file's.
Image read_image(const std::filesystem::path& path, int channels = 3);
void write_image(const std::filesystem::path& path, const Image& image);
// RGBA PNG; alpha taken from `alpha` (single channel, same size).
void write_rgba(const std::filesystem::path& path, const Image& rgb,
                const Image& alpha);
std::vector<unsigned char> encode_jpeg(const Image& image, int quality);
Image decode_image(std::span<const unsigned char> bytes, int channels = 3);

}  // namespace advmask
