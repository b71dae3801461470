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
#include <memory>
#include <string>
#include <vector>

#include "advmask/model.hpp"
#include "advmask/synthetic.hpp"

namespace advmask {

struct TrainingConfig {
  std::string name = "tiny";
  int input_width = 16;
  int input_height = 16;
  int hidden = 64;
  CropBox crop;
  ResizeMode resize = ResizeMode::kArea;
  int dim = 32;
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 3e-3;
  double logit_scale = 12.0;  // cosine-softmax temperature
  std::uint64_t seed = 1;
};

struct TrainingReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
};

// Trains an MLP embedder with a cosine-softmax identity classifier on top;
// the classifier head is discarded and the normalised embedding kept.
std::shared_ptr<MlpEmbedder> train_tiny_embedder(
    const std::vector<LabelledFace>& data, int classes,
    const TrainingConfig& cfg, TrainingReport* report = nullptr);

// Nearest-class-mean identification accuracy of `model` on `probe`, with
// class means computed from `gallery`.
double identification_accuracy(const EmbeddingModel& model,
                               const std::vector<LabelledFace>& gallery,
                               const std::vector<LabelledFace>& probe,
                               int classes);

// Recipe for the bundled surrogate/victim pair used by the transfer check.
// Surrogate "tiny-a" samples the canvas bilinearly at 12x12; victim
// "tiny-b" area-pools to 12x12 with a different width and seed.
struct TinyRecipe {
  RenderOptions render;
  int identities = 10;
  int per_identity = 60;
  std::uint64_t identity_seed = 1000;
  std::uint64_t render_seed = 7;
  TrainingConfig surrogate;
  TrainingConfig victim;
};

TinyRecipe bundled_tiny_recipe();

struct TinyPair {
  std::shared_ptr<MlpEmbedder> surrogate;
  std::shared_ptr<MlpEmbedder> victim;
};

// Renders the training set and trains both models. Deterministic.
TinyPair train_bundled_pair(const TinyRecipe& recipe);

}  // namespace advmask
