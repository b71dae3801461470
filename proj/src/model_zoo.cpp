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

#include "advmask/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "advmask/rst.hpp"

namespace advmask {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void require_nonzero(double n, const char* which) {
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kUndefinedCosine,
                std::string("cosine undefined: ") + which +
                    " vector is zero or non-finite");
  }
}

}  // namespace

double cosine_similarity(std::span<const double> v1,
                         std::span<const double> v2) {
  if (v1.size() != v2.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "cosine: length mismatch");
  }
  const double n1 = norm2(v1), n2 = norm2(v2);
  require_nonzero(n1, "first");
  require_nonzero(n2, "second");
  return std::clamp(dot(v1, v2) / (n1 * n2), -1.0, 1.0);
}

double cosine_loss(std::span<const double> v1, std::span<const double> v2) {
  return 1.0 - cosine_similarity(v1, v2);
}

double cosine_loss_grad(std::span<const double> embedding,
                        std::span<const double> target,
                        std::span<double> grad_embedding) {
  const double nt = norm2(target);
  require_nonzero(nt, "target");
  double d = 0.0;
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    grad_embedding[i] = -target[i] / nt;
    d += embedding[i] * target[i] / nt;
  }
  return 1.0 - d;
}

// ---------------------------------------------------------------------------
// Preprocessing

Preprocessor::Preprocessor(const EmbeddingSpec& spec)
    : width_(spec.input_width),
      height_(spec.input_height),
      resize_(spec.resize),
      crop_(spec.crop),
      mean_(spec.mean),
      stddev_(spec.stddev) {
  if (width_ <= 0 || height_ <= 0 || !(stddev_ > 0.0) ||
      !(crop_.x0 >= 0.0 && crop_.x0 < crop_.x1 && crop_.x1 <= 1.0) ||
      !(crop_.y0 >= 0.0 && crop_.y0 < crop_.y1 && crop_.y1 <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad preprocessing spec");
  }
}

namespace {

struct Span1d {
  int begin;
  int end;
};

// Pixel range [begin, end) of a fractional crop along one axis.
Span1d crop_range(double lo, double hi, int extent) {
  Span1d r{static_cast<int>(std::lround(lo * extent)),
           static_cast<int>(std::lround(hi * extent))};
  if (r.end <= r.begin) r.end = r.begin + 1;
  return r;
}

// Adaptive average pooling bin i of `out` over the pixel range `range`.
Span1d pool_bin(int i, Span1d range, int out) {
  const int in = range.end - range.begin;
  return {range.begin +
              static_cast<int>(std::floor(static_cast<double>(i) * in / out)),
          range.begin + static_cast<int>(
                            std::ceil(static_cast<double>(i + 1) * in / out))};
}

// Output pixel -> canvas sampling point for a bilinear resize of the crop.
SimilarityTransform resize_transform(Span1d xr, Span1d yr, int out_w,
                                     int out_h) {
  const double sx = static_cast<double>(xr.end - xr.begin) / out_w;
  const double sy = static_cast<double>(yr.end - yr.begin) / out_h;
  return SimilarityTransform::from_rows({sx, 0.0, xr.begin + 0.5 * sx - 0.5,
                                         0.0, sy, yr.begin + 0.5 * sy - 0.5});
}

}  // namespace

std::vector<double> Preprocessor::forward(const FaceImage& canvas) const {
  const int ch = canvas.channels();
  const Span1d xr = crop_range(crop_.x0, crop_.x1, canvas.width());
  const Span1d yr = crop_range(crop_.y0, crop_.y1, canvas.height());
  std::vector<double> out(static_cast<std::size_t>(width_) * height_ * ch);
  if (resize_ == ResizeMode::kArea) {
    for (int oy = 0; oy < height_; ++oy) {
      const Span1d by = pool_bin(oy, yr, height_);
      for (int ox = 0; ox < width_; ++ox) {
        const Span1d bx = pool_bin(ox, xr, width_);
        const double inv_area =
            1.0 / ((by.end - by.begin) * (bx.end - bx.begin));
        double* o = &out[(static_cast<std::size_t>(oy) * width_ + ox) * ch];
        for (int y = by.begin; y < by.end; ++y) {
          for (int x = bx.begin; x < bx.end; ++x) {
            for (int c = 0; c < ch; ++c) o[c] += canvas.at(x, y, c);
          }
        }
        for (int c = 0; c < ch; ++c) o[c] *= inv_area;
      }
    }
  } else {
    const Image resized = warp_bilinear(
        canvas, resize_transform(xr, yr, width_, height_), width_, height_);
    std::ranges::copy(resized.data(), out.begin());
  }
  for (double& v : out) v = (v - mean_) / stddev_;
  return out;
}

FaceImage Preprocessor::backward(std::span<const double> grad_input,
                                 int canvas_width, int canvas_height) const {
  const int ch = static_cast<int>(grad_input.size() /
                                  (static_cast<std::size_t>(width_) * height_));
  const Span1d xr = crop_range(crop_.x0, crop_.x1, canvas_width);
  const Span1d yr = crop_range(crop_.y0, crop_.y1, canvas_height);
  if (resize_ == ResizeMode::kArea) {
    FaceImage grad(canvas_width, canvas_height, ch);
    for (int oy = 0; oy < height_; ++oy) {
      const Span1d by = pool_bin(oy, yr, height_);
      for (int ox = 0; ox < width_; ++ox) {
        const Span1d bx = pool_bin(ox, xr, width_);
        const double scale =
            1.0 / ((by.end - by.begin) * (bx.end - bx.begin)) / stddev_;
        const double* g =
            &grad_input[(static_cast<std::size_t>(oy) * width_ + ox) * ch];
        for (int y = by.begin; y < by.end; ++y) {
          for (int x = bx.begin; x < bx.end; ++x) {
            for (int c = 0; c < ch; ++c) grad.at(x, y, c) += g[c] * scale;
          }
        }
      }
    }
    return grad;
  }
  Image g(width_, height_, ch);
  for (std::size_t i = 0; i < grad_input.size(); ++i) {
    g.data()[i] = grad_input[i] / stddev_;
  }
  return warp_bilinear_adjoint(g, resize_transform(xr, yr, width_, height_),
                               canvas_width, canvas_height);
}

// ---------------------------------------------------------------------------
// MLP

MlpNetwork::MlpNetwork(std::vector<DenseLayer> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "network needs a layer");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weights.size() != static_cast<std::size_t>(l.inputs) * l.outputs ||
        l.bias.size() != static_cast<std::size_t>(l.outputs)) {
      throw Error(ErrorCode::kInvalidArgument, "layer shape mismatch");
    }
    if (i > 0 && layers_[i - 1].outputs != l.inputs) {
      throw Error(ErrorCode::kInvalidArgument, "layer chain mismatch");
    }
  }
}

MlpNetwork::Cache MlpNetwork::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size()) {
    throw Error(ErrorCode::kDimensionMismatch, "network input size");
  }
  Cache cache;
  cache.activations.emplace_back(input.begin(), input.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const auto& a = cache.activations.back();
    std::vector<double> z(l.outputs);
    for (int o = 0; o < l.outputs; ++o) {
      const double* w = &l.weights[static_cast<std::size_t>(o) * l.inputs];
      double s = l.bias[o];
      for (int i = 0; i < l.inputs; ++i) s += w[i] * a[i];
      z[o] = s;
    }
    if (li + 1 < layers_.size()) {
      for (double& v : z) v = std::tanh(v);
      cache.activations.push_back(std::move(z));
    } else {
      cache.raw_output = std::move(z);
    }
  }
  cache.raw_norm = norm2(cache.raw_output);
  if (!(cache.raw_norm > 0.0) || !std::isfinite(cache.raw_norm)) {
    throw Error(ErrorCode::kModelFault,
                "embedding is zero or non-finite before normalisation");
  }
  cache.embedding = cache.raw_output;
  for (double& v : cache.embedding) v /= cache.raw_norm;
  return cache;
}

std::vector<double> MlpNetwork::backward(
    const Cache& cache, std::span<const double> grad_embedding,
    std::vector<DenseLayer>* layer_grads) const {
  const auto& e = cache.embedding;
  const double proj = dot(e, grad_embedding);
  std::vector<double> gz(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    gz[i] = (grad_embedding[i] - e[i] * proj) / cache.raw_norm;
  }
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const auto& a = cache.activations[li];
    if (layer_grads) {
      auto& lg = (*layer_grads)[li];
      for (int o = 0; o < l.outputs; ++o) {
        double* w = &lg.weights[static_cast<std::size_t>(o) * l.inputs];
        for (int i = 0; i < l.inputs; ++i) w[i] += gz[o] * a[i];
        lg.bias[o] += gz[o];
      }
    }
    std::vector<double> ga(l.inputs, 0.0);
    for (int o = 0; o < l.outputs; ++o) {
      const double* w = &l.weights[static_cast<std::size_t>(o) * l.inputs];
      const double g = gz[o];
      if (g == 0.0) continue;
      for (int i = 0; i < l.inputs; ++i) ga[i] += w[i] * g;
    }
    if (li == 0) return ga;
    // a = tanh(z_prev)
    for (int i = 0; i < l.inputs; ++i) ga[i] *= 1.0 - a[i] * a[i];
    gz = std::move(ga);
  }
  return {};
}

MlpEmbedder::MlpEmbedder(EmbeddingSpec spec, MlpNetwork network)
    : spec_(std::move(spec)), pre_(spec_), network_(std::move(network)) {
  if (spec_.dim != network_.output_size()) {
    throw Error(ErrorCode::kInvalidArgument, "spec dim != network output");
  }
  if (network_.input_size() != spec_.input_width * spec_.input_height * 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "network input != 3 x input_width x input_height");
  }
}

Embedding MlpEmbedder::embed(const FaceImage& image) const {
  if (image.empty() || image.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "embed expects an RGB image");
  }
  return network_.forward(pre_.forward(image)).embedding;
}

LossGradient MlpEmbedder::loss_gradient(const FaceImage& image,
                                        std::span<const double> target) const {
  if (static_cast<int>(target.size()) != spec_.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "target embedding size");
  }
  const auto cache = network_.forward(pre_.forward(image));
  std::vector<double> ge(cache.embedding.size());
  LossGradient out;
  out.loss = cosine_loss_grad(cache.embedding, target, ge);
  const auto gin = network_.backward(cache, ge, nullptr);
  out.gradient = pre_.backward(gin, image.width(), image.height());
  for (std::size_t i = 0; i < out.gradient.size(); ++i) {
    if (!std::isfinite(out.gradient.data()[i])) {
      throw Error(ErrorCode::kModelFault,
                  spec_.name + ": non-finite gradient at element " +
                      std::to_string(i));
    }
  }
  return out;
}

EmbeddingModelHandle make_toy_embedder(std::uint64_t seed, int dim,
                                       int input_width, int input_height,
                                       int hidden, CropBox crop) {
  if (dim < 2) {
    throw Error(ErrorCode::kInvalidArgument, "toy embedder needs dim >= 2");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto make_layer = [&](int in, int out, double gain) {
    DenseLayer l{in, out, std::vector<double>(static_cast<std::size_t>(in) * out),
                 std::vector<double>(out)};
    const double sd = gain / std::sqrt(static_cast<double>(in));
    for (double& w : l.weights) w = sd * normal(rng);
    for (double& b : l.bias) b = 0.1 * normal(rng);
    return l;
  };
  const int in = input_width * input_height * 3;
  std::vector<DenseLayer> layers;
  if (hidden > 0) {
    layers.push_back(make_layer(in, hidden, 1.5));
    layers.push_back(make_layer(hidden, dim, 1.0));
  } else {
    layers.push_back(make_layer(in, dim, 1.0));
  }
  EmbeddingSpec spec;
  spec.name = "toy-" + std::to_string(seed);
  spec.input_width = input_width;
  spec.input_height = input_height;
  spec.dim = dim;
  spec.crop = crop;
  return std::make_shared<MlpEmbedder>(spec, MlpNetwork(std::move(layers)));
}

CountingModel::CountingModel(EmbeddingModelHandle inner)
    : inner_(std::move(inner)) {}

Embedding CountingModel::embed(const FaceImage& image) const {
  ++embed_calls_;
  return inner_->embed(image);
}

LossGradient CountingModel::loss_gradient(
    const FaceImage& image, std::span<const double> target) const {
  ++gradient_calls_;
  return inner_->loss_gradient(image, target);
}

// ---------------------------------------------------------------------------
// Weight files and registry

void save_mlp_embedder(const std::filesystem::path& path,
                       const MlpEmbedder& model) {
  const auto& s = model.spec();
  nlohmann::json j;
  j["name"] = s.name;
  j["input_width"] = s.input_width;
  j["input_height"] = s.input_height;
  j["dim"] = s.dim;
  j["resize"] = s.resize == ResizeMode::kArea ? "area" : "bilinear";
  j["crop"] = {s.crop.x0, s.crop.y0, s.crop.x1, s.crop.y1};
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : model.network().layers()) {
    j["layers"].push_back({{"inputs", l.inputs},
                           {"outputs", l.outputs},
                           {"weights", l.weights},
                           {"bias", l.bias}});
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump();
}

EmbeddingModelHandle load_mlp_embedder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open weights " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    EmbeddingSpec s;
    s.name = j.at("name").get<std::string>();
    s.input_width = j.at("input_width").get<int>();
    s.input_height = j.at("input_height").get<int>();
    s.dim = j.at("dim").get<int>();
    s.resize = j.value("resize", "area") == "bilinear" ? ResizeMode::kBilinear
                                                       : ResizeMode::kArea;
    if (j.contains("crop")) {
      const auto c = j["crop"].get<std::vector<double>>();
      if (c.size() != 4) throw Error(ErrorCode::kIo, "crop needs 4 values");
      s.crop = {c[0], c[1], c[2], c[3]};
    }
    s.mean = j.value("mean", 0.5);
    s.stddev = j.value("stddev", 0.5);
    std::vector<DenseLayer> layers;
    for (const auto& jl : j.at("layers")) {
      layers.push_back({jl.at("inputs").get<int>(), jl.at("outputs").get<int>(),
                        jl.at("weights").get<std::vector<double>>(),
                        jl.at("bias").get<std::vector<double>>()});
    }
    return std::make_shared<MlpEmbedder>(s, MlpNetwork(std::move(layers)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo,
                "malformed weights " + path.string() + ": " + e.what());
  }
}

ModelRegistry ModelRegistry::builtin(const std::filesystem::path& data_dir) {
  ModelRegistry reg;
  for (int i = 1; i <= 5; ++i) {
    ModelEntry e;
    e.name = "toy-" + std::to_string(i);
    e.adapter = "toy";
    e.seed = static_cast<std::uint64_t>(i);
    reg.add(e);
  }
  for (const char* name : {"tiny-a", "tiny-b"}) {
    const auto path = data_dir / "models" / (std::string(name) + ".json");
    if (!std::filesystem::exists(path)) continue;
    ModelEntry e;
    e.name = name;
    e.adapter = "mlp";
    e.weights = path;
    reg.add(e);
  }
  return reg;
}

ModelRegistry ModelRegistry::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open registry " + path.string());
  ModelRegistry reg;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& jm : j.at("models")) {
      ModelEntry e;
      e.name = jm.at("name").get<std::string>();
      e.adapter = jm.at("adapter").get<std::string>();
      if (jm.contains("weights")) {
        std::filesystem::path w = jm["weights"].get<std::string>();
        e.weights = w.is_relative() ? path.parent_path() / w : w;
      }
      e.input_width = jm.value("input_width", e.input_width);
      e.input_height = jm.value("input_height", e.input_height);
      e.dim = jm.value("dim", e.dim);
      e.hidden = jm.value("hidden", e.hidden);
      e.seed = jm.value("seed", e.seed);
      if (jm.contains("threshold")) e.threshold = jm["threshold"].get<double>();
      reg.add(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration,
                "malformed registry " + path.string() + ": " + e.what());
  }
  return reg;
}

void ModelRegistry::add(ModelEntry entry) {
  entries_[entry.name] = std::move(entry);
}

bool ModelRegistry::contains(const std::string& name) const {
  return entries_.contains(name);
}

const ModelEntry& ModelRegistry::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw Error(ErrorCode::kConfiguration, "unknown model '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

EmbeddingModelHandle ModelRegistry::create(const std::string& name) const {
  const auto& e = entry(name);
  if (e.adapter == "toy") {
    return make_toy_embedder(e.seed, e.dim, e.input_width, e.input_height,
                             e.hidden);
  }
  if (e.adapter == "mlp") return load_mlp_embedder(e.weights);
  throw Error(ErrorCode::kConfiguration, "model '" + name +
                                             "' uses unsupported adapter '" +
                                             e.adapter + "'");
}

// ---------------------------------------------------------------------------

AlignedFace align_face(const Image& raw, const FaceLandmarks& landmarks,
                       const FaceLandmarks& canonical, int out_width,
                       int out_height) {
  if (raw.empty()) throw Error(ErrorCode::kEmptyInput, "align_face: empty image");
  const SimilarityTransform to_canonical = fit_similarity(landmarks, canonical);
  AlignedFace out;
  out.image =
      warp_bilinear(raw, to_canonical.inverse(), out_width, out_height);
  for (double& v : out.image.data()) v = std::clamp(v, 0.0, 1.0);
  out.landmarks = transform_landmarks(landmarks, to_canonical);
  return out;
}

}  // namespace advmask
