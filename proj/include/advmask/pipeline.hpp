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
#include <functional>
#include <optional>
#include <string>

#include "advmask/dataset.hpp"
#include "advmask/maskgeom.hpp"
#include "advmask/model.hpp"

namespace advmask {

struct PreparedPair {
  IdentityPair pair;
  FaceImage source;
  FaceImage target;
  FaceLandmarks source_landmarks;
  BinaryMask mask;
};

// Loads a dataset image onto a canvas x canvas grid. Images already at the
// canvas size are used as stored; others are aligned to the canonical
// landmarks, which needs a sidecar. canvas = 0 keeps the stored size.
struct LoadedFace {
  FaceImage image;
  std::optional<FaceLandmarks> landmarks;
};
LoadedFace load_face(const ImageRecord& record, int canvas);

// Source + target on a common canvas and the source's binary mask, warped
// from `mask_template` (default template when empty).
PreparedPair prepare_pair(const IdentityIndex& index, const IdentityPair& pair,
                          int canvas, const BinaryMask& mask_template = {});

// Per-pair attack seed derived from the run seed (splitmix64 mixing).
std::uint64_t pair_seed(std::uint64_t run_seed, std::size_t pair_index);

// Runs fn(worker, i) for i in [0, n) on `workers` threads. Each index runs
// exactly once; results must be written to per-index slots. Exceptions are
// captured per index and returned (empty string = ok).
std::vector<std::string> parallel_for(
    std::size_t n, int workers,
    const std::function<void(int worker, std::size_t index)>& fn);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& data);

}  // namespace advmask
