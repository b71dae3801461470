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

// Procedural face renderer for hermetic datasets. Each identity is a fixed
// set of shape/colour parameters; every render adds pose, lighting and
// background nuisance so that several images of one identity differ.

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "advmask/image.hpp"
#include "advmask/maskgeom.hpp"

namespace advmask {

struct RgbColor {
  double r = 0.0, g = 0.0, b = 0.0;
};

struct Blob {
  Point2 center;  // normalised canvas coordinates
  double radius = 0.0;
  RgbColor tint;  // additive
};

struct SyntheticIdentity {
  std::uint64_t seed = 0;
  RgbColor skin, hair, iris, lips;
  double face_rx = 0.34, face_ry = 0.43;
  double hairline = 0.28;
  Point2 left_eye, right_eye, nose, mouth_left, mouth_right;  // normalised
  double eye_rx = 0.05, eye_ry = 0.024;
  double brow_thickness = 0.012;
  std::vector<Blob> blobs;
};

SyntheticIdentity make_identity(std::uint64_t seed);

struct RenderOptions {
  int width = 512;
  int height = 512;
  bool canonical_pose = false;  // no pose/lighting nuisance
  double noise_sigma = 0.0;
  // Multiplies the pose ranges (rotation, scale, shift); training sets use
  // more than 1 as augmentation.
  double pose_jitter = 1.0;
};

struct SyntheticFace {
  FaceImage image;
  FaceLandmarks landmarks;  // 5pt, pixel coordinates
};

SyntheticFace render_face(const SyntheticIdentity& id,
                          const RenderOptions& options, std::mt19937_64& rng);

struct LabelledFace {
  int label = 0;
  SyntheticFace face;
};

// `identities` identities (seeds base_seed, base_seed+1, ...), `per_identity`
// renders each.
std::vector<LabelledFace> make_labelled_set(int identities, int per_identity,
                                            std::uint64_t base_seed,
                                            const RenderOptions& options,
                                            std::uint64_t render_seed);

// Writes root/id_XX/img_YY.png with img_YY.landmarks.json sidecars.
void write_synthetic_dataset(const std::filesystem::path& root, int identities,
                             int per_identity, std::uint64_t seed, int width,
                             int height);

}  // namespace advmask
