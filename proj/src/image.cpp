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

#include "advmask/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace advmask {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kSingularFit: return "singular fit";
    case ErrorCode::kDegenerateMask: return "degenerate mask";
    case ErrorCode::kUndefinedCosine: return "undefined cosine";
    case ErrorCode::kZeroGradient: return "zero gradient";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kModelFault: return "model fault";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kInsufficientData: return "insufficient data";
    case ErrorCode::kDuplicateId: return "duplicate id";
    case ErrorCode::kBackendAuth: return "backend authentication failure";
    case ErrorCode::kBackendRateLimit: return "backend rate limit exhausted";
    case ErrorCode::kBackendTransport: return "backend transport failure";
    case ErrorCode::kBackendProtocol: return "backend protocol error";
  }
  return "unknown";
}

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative image dimension");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

double max_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

bool all_finite(const Image& image) {
  return std::ranges::all_of(image.data(),
                             [](double v) { return std::isfinite(v); });
}

bool in_unit_range(const Image& image) {
  return std::ranges::all_of(image.data(),
                             [](double v) { return v >= 0.0 && v <= 1.0; });
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + "x" +
                    std::to_string(a.channels()) + " vs " +
                    std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + "x" +
                    std::to_string(b.channels()));
  }
}

namespace {

// OpenCV stores colour as BGR; Image is RGB.
Image from_mat(const cv::Mat& mat, int channels) {
  cv::Mat src = mat;
  if (channels == 0) channels = src.channels() == 4 ? 3 : src.channels();
  cv::Mat converted;
  if (channels == 1 && src.channels() != 1) {
    cv::Mat gray(src.rows, src.cols, CV_8UC1);
    for (int y = 0; y < src.rows; ++y) {
      for (int x = 0; x < src.cols; ++x) {
        const auto* p = src.ptr<unsigned char>(y) + x * src.channels();
        gray.at<unsigned char>(y, x) = static_cast<unsigned char>(
            std::lround(0.114 * p[0] + 0.587 * p[1] + 0.299 * p[2]));
      }
    }
    converted = gray;
  } else {
    converted = src;
  }
  Image out(converted.cols, converted.rows, channels);
  for (int y = 0; y < converted.rows; ++y) {
    const auto* row = converted.ptr<unsigned char>(y);
    for (int x = 0; x < converted.cols; ++x) {
      const auto* p = row + x * converted.channels();
      for (int c = 0; c < channels; ++c) {
        int src_c = converted.channels() == 1 ? 0 : 2 - c;
        out.at(x, y, c) = p[src_c] / 255.0;
      }
    }
  }
  return out;
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

cv::Mat to_mat(const Image& image) {
  const int c = image.channels();
  if (c != 1 && c != 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "image must have 1 or 3 channels for encoding");
  }
  cv::Mat mat(image.height(), image.width(), c == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int k = 0; k < c; ++k) {
        int dst_c = c == 1 ? 0 : 2 - k;
        row[x * c + dst_c] = to_byte(image.at(x, y, k));
      }
    }
  }
  return mat;
}

}  // namespace

Image read_image(const std::filesystem::path& path, int channels) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIo, "file not found: " + path.string());
  }
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) {
    throw Error(ErrorCode::kIo, "cannot decode image: " + path.string());
  }
  if (mat.depth() != CV_8U) {
    mat.convertTo(mat, CV_8U, mat.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
  }
  return from_mat(mat, channels);
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), to_mat(image))) {
    throw Error(ErrorCode::kIo, "cannot write image: " + path.string());
  }
}

void write_rgba(const std::filesystem::path& path, const Image& rgb,
                const Image& alpha) {
  if (rgb.channels() != 3 || alpha.channels() != 1 ||
      rgb.width() != alpha.width() || rgb.height() != alpha.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "write_rgba: shape mismatch");
  }
  cv::Mat mat(rgb.height(), rgb.width(), CV_8UC4);
  for (int y = 0; y < rgb.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < rgb.width(); ++x) {
      row[x * 4 + 0] = to_byte(rgb.at(x, y, 2));
      row[x * 4 + 1] = to_byte(rgb.at(x, y, 1));
      row[x * 4 + 2] = to_byte(rgb.at(x, y, 0));
      row[x * 4 + 3] = to_byte(alpha.at(x, y, 0));
    }
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), mat)) {
    throw Error(ErrorCode::kIo, "cannot write image: " + path.string());
  }
}

std::vector<unsigned char> encode_jpeg(const Image& image, int quality) {
  std::vector<unsigned char> bytes;
  if (!cv::imencode(".jpg", to_mat(image), bytes,
                    {cv::IMWRITE_JPEG_QUALITY, quality})) {
    throw Error(ErrorCode::kIo, "jpeg encoding failed");
  }
  return bytes;
}

Image decode_image(std::span<const unsigned char> bytes, int channels) {
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1,
              const_cast<unsigned char*>(bytes.data()));
  cv::Mat mat = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw Error(ErrorCode::kIo, "cannot decode image bytes");
  return from_mat(mat, channels);
}

}  // namespace advmask
