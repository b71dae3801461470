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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advmask/image.hpp"
#include "advmask/maskgeom.hpp"

namespace advmask {

using Embedding = std::vector<double>;

// Loss 1 - cos(v1, v2); both vectors are normalised internally.
double cosine_loss(std::span<const double> v1, std::span<const double> v2);
double cosine_similarity(std::span<const double> v1,
                         std::span<const double> v2);

enum class ResizeMode { kArea, kBilinear };

// Fractional region of the canvas a model looks at.
struct CropBox {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

// Canvas -> model input: crop, resize to (input_width, input_height), then
// (x - mean) / stddev. Every stage is linear in the pixels, so the chain
// has an exact adjoint.
struct EmbeddingSpec {
  std::string name;
  int input_width = 0;
  int input_height = 0;
  int dim = 0;
  ResizeMode resize = ResizeMode::kArea;
  CropBox crop;
  double mean = 0.5;
  double stddev = 0.5;
};

class Preprocessor {
 public:
  Preprocessor() = default;
  explicit Preprocessor(const EmbeddingSpec& spec);

  std::vector<double> forward(const FaceImage& canvas) const;
  // Adjoint of forward for a canvas of the given size.
  FaceImage backward(std::span<const double> grad_input, int canvas_width,
                     int canvas_height) const;

 private:
  int width_ = 0;
  int height_ = 0;
  ResizeMode resize_ = ResizeMode::kArea;
  CropBox crop_;
  double mean_ = 0.0;
  double stddev_ = 1.0;
};

struct LossGradient {
  double loss = 0.0;
  GradientGrid gradient;
};

// A face embedding model f: canvas image -> unit vector in R^d.
class EmbeddingModel {
 public:
  virtual ~EmbeddingModel() = default;

  virtual const EmbeddingSpec& spec() const = 0;
  virtual Embedding embed(const FaceImage& image) const = 0;
  // L(x) = 1 - cos(f(x), target) and dL/dx at the canvas resolution of x.
  virtual LossGradient loss_gradient(const FaceImage& image,
                                     std::span<const double> target) const = 0;
};

using EmbeddingModelHandle = std::shared_ptr<const EmbeddingModel>;

struct DenseLayer {
  int inputs = 0;
  int outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;
};

// Fully connected stack with tanh between layers and L2 normalisation at
// the end. Used for both the random toy embedders and the trained tiny
// embedders.
class MlpNetwork {
 public:
  struct Cache {
    std::vector<std::vector<double>> activations;  // [0] = network input
    std::vector<double> raw_output;
    double raw_norm = 0.0;
    Embedding embedding;
  };

  MlpNetwork() = default;
  explicit MlpNetwork(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }
  int input_size() const { return layers_.front().inputs; }
  int output_size() const { return layers_.back().outputs; }

  Cache forward(std::span<const double> input) const;
  // Backpropagates dL/d(embedding). Returns dL/d(input); when
  // `layer_grads` is non-null it also receives per-layer weight gradients.
  std::vector<double> backward(const Cache& cache,
                               std::span<const double> grad_embedding,
                               std::vector<DenseLayer>* layer_grads) const;

 private:
  std::vector<DenseLayer> layers_;
};

class MlpEmbedder final : public EmbeddingModel {
 public:
  MlpEmbedder(EmbeddingSpec spec, MlpNetwork network);

  const EmbeddingSpec& spec() const override { return spec_; }
  Embedding embed(const FaceImage& image) const override;
  LossGradient loss_gradient(const FaceImage& image,
                             std::span<const double> target) const override;

  const MlpNetwork& network() const noexcept { return network_; }
  const Preprocessor& preprocessor() const noexcept { return pre_; }

 private:
  EmbeddingSpec spec_;
  Preprocessor pre_;
  MlpNetwork network_;
};

// dL/d(embedding) and L for L = 1 - cos(e, target), e already unit-norm.
double cosine_loss_grad(std::span<const double> embedding,
                        std::span<const double> target,
                        std::span<double> grad_embedding);

// Deterministic random-weight embedder: area pooling to the input size,
// `hidden` tanh units (0 for a purely linear map), `dim` outputs.
EmbeddingModelHandle make_toy_embedder(std::uint64_t seed, int dim,
                                       int input_width, int input_height,
                                       int hidden = 32, CropBox crop = {});

// Decorator that counts gradient evaluations and embeddings.
class CountingModel final : public EmbeddingModel {
 public:
  explicit CountingModel(EmbeddingModelHandle inner);

  const EmbeddingSpec& spec() const override { return inner_->spec(); }
  Embedding embed(const FaceImage& image) const override;
  LossGradient loss_gradient(const FaceImage& image,
                             std::span<const double> target) const override;

  long gradient_calls() const noexcept { return gradient_calls_.load(); }
  long embed_calls() const noexcept { return embed_calls_.load(); }

 private:
  EmbeddingModelHandle inner_;
  mutable std::atomic<long> gradient_calls_{0};
  mutable std::atomic<long> embed_calls_{0};
};

// Weight file: JSON with the spec and the layer stack.
void save_mlp_embedder(const std::filesystem::path& path,
                       const MlpEmbedder& model);
EmbeddingModelHandle load_mlp_embedder(const std::filesystem::path& path);

// name -> adapter id + parameters. Adapters: "toy" (seed, dim, input size,
// hidden) and "mlp" (weights file). Entries may carry a verification
// threshold for ASR reporting.
struct ModelEntry {
  std::string name;
  std::string adapter;
  std::filesystem::path weights;
  int input_width = 32;
  int input_height = 32;
  int dim = 32;
  int hidden = 32;
  std::uint64_t seed = 0;
  std::optional<double> threshold;
};

class ModelRegistry {
 public:
  // toy-1 .. toy-5 plus, when present under data_dir/models, tiny-a/tiny-b.
  static ModelRegistry builtin(const std::filesystem::path& data_dir);
  // JSON: {"models": [{"name":..., "adapter":..., ...}, ...]}; relative
  // weight paths resolve against the file's directory.
  static ModelRegistry from_file(const std::filesystem::path& path);

  void add(ModelEntry entry);
  bool contains(const std::string& name) const;
  const ModelEntry& entry(const std::string& name) const;
  std::vector<std::string> names() const;
  // Fresh handle per call; workers each create their own.
  EmbeddingModelHandle create(const std::string& name) const;

 private:
  std::map<std::string, ModelEntry> entries_;
};

// Reference thresholds at 0.1% FAR for the pretrained victims, kept for
// reporting against those models.
struct ReferenceThreshold {
  const char* model;
  double tau;
};
inline constexpr ReferenceThreshold kReferenceThresholds[] = {
    {"FaceNet", 0.409}, {"MobileFace", 0.302}, {"IRSE50", 0.241},
    {"IR152", 0.167}};

// Pluggable landmark detector; none ships, landmarks come from sidecars.
class LandmarkDetector {
 public:
  virtual ~LandmarkDetector() = default;
  virtual FaceLandmarks detect(const Image& image) const = 0;
};

struct AlignedFace {
  FaceImage image;
  FaceLandmarks landmarks;  // in the aligned frame
};

// Similarity-warps `raw` so its landmarks land on `canonical`; the output
// is out_width x out_height, values in [0,1].
AlignedFace align_face(const Image& raw, const FaceLandmarks& landmarks,
                       const FaceLandmarks& canonical, int out_width,
                       int out_height);

}  // namespace advmask
