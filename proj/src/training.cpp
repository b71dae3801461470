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

#include "advmask/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace advmask {

namespace {

struct Adam {
  double lr = 1e-3;
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<double> m, v;

  void step(std::vector<double*> params, const std::vector<double>& grads) {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * grads[i];
      v[i] = b2 * v[i] + (1 - b2) * grads[i] * grads[i];
      *params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

}  // namespace

std::shared_ptr<MlpEmbedder> train_tiny_embedder(
    const std::vector<LabelledFace>& data, int classes,
    const TrainingConfig& cfg, TrainingReport* report) {
  if (data.empty() || classes < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "training needs data from at least two classes");
  }
  // Start from a toy embedder of the same shape and reuse its spec chain.
  auto init = make_toy_embedder(cfg.seed, cfg.dim, cfg.input_width,
                                cfg.input_height, cfg.hidden, cfg.crop);
  const auto& toy = static_cast<const MlpEmbedder&>(*init);
  EmbeddingSpec spec = toy.spec();
  spec.name = cfg.name;
  spec.resize = cfg.resize;
  MlpNetwork net = toy.network();
  const Preprocessor pre(spec);

  std::vector<std::vector<double>> inputs;
  inputs.reserve(data.size());
  for (const auto& d : data) inputs.push_back(pre.forward(d.face.image));

  std::mt19937_64 rng(cfg.seed ^ 0x7F4A7C15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> head(static_cast<std::size_t>(classes) * cfg.dim);
  for (double& w : head) w = normal(rng);

  std::vector<double*> params;
  for (auto& l : net.mutable_layers()) {
    for (double& w : l.weights) params.push_back(&w);
    for (double& b : l.bias) params.push_back(&b);
  }
  for (double& w : head) params.push_back(&w);
  Adam adam;
  adam.lr = cfg.learning_rate;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grads(params.size());
  std::vector<DenseLayer> layer_grads;
  std::vector<double> head_grad(head.size());
  const double s = cfg.logit_scale;

  TrainingReport local;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      layer_grads = net.layers();
      for (auto& l : layer_grads) {
        std::ranges::fill(l.weights, 0.0);
        std::ranges::fill(l.bias, 0.0);
      }
      std::ranges::fill(head_grad, 0.0);

      // Normalised class directions.
      std::vector<double> norms(classes);
      for (int k = 0; k < classes; ++k) {
        double sq = 0.0;
        for (int j = 0; j < cfg.dim; ++j) {
          sq += head[k * cfg.dim + j] * head[k * cfg.dim + j];
        }
        norms[k] = std::sqrt(sq);
      }

      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const auto cache = net.forward(inputs[idx]);
        const auto& e = cache.embedding;
        std::vector<double> logits(classes);
        for (int k = 0; k < classes; ++k) {
          double d = 0.0;
          for (int j = 0; j < cfg.dim; ++j) d += head[k * cfg.dim + j] * e[j];
          logits[k] = s * d / norms[k];
        }
        const double mx = *std::ranges::max_element(logits);
        double z = 0.0;
        for (double& l : logits) z += (l = std::exp(l - mx));
        const int label = data[idx].label;
        epoch_loss += -std::log(logits[label] / z);

        std::vector<double> ge(cfg.dim, 0.0);
        for (int k = 0; k < classes; ++k) {
          const double dlogit = logits[k] / z - (k == label ? 1.0 : 0.0);
          const double* w = &head[k * cfg.dim];
          double wdote = 0.0;
          for (int j = 0; j < cfg.dim; ++j) wdote += w[j] * e[j];
          for (int j = 0; j < cfg.dim; ++j) {
            const double what = w[j] / norms[k];
            ge[j] += s * dlogit * what;
            // d(w.e/|w|)/dw = (e - what (what.e)) / |w|
            head_grad[k * cfg.dim + j] +=
                s * dlogit * (e[j] - what * wdote / norms[k]) / norms[k];
          }
        }
        net.backward(cache, ge, &layer_grads);
      }

      const double inv = 1.0 / static_cast<double>(end - start);
      std::size_t p = 0;
      for (const auto& l : layer_grads) {
        for (double g : l.weights) grads[p++] = g * inv;
        for (double g : l.bias) grads[p++] = g * inv;
      }
      for (double g : head_grad) grads[p++] = g * inv;
      adam.step(params, grads);
    }
    local.epoch_loss.push_back(epoch_loss / data.size());
  }

  auto model = std::make_shared<MlpEmbedder>(spec, std::move(net));
  if (report) {
    local.train_accuracy = identification_accuracy(*model, data, data, classes);
    *report = std::move(local);
  }
  return model;
}

double identification_accuracy(const EmbeddingModel& model,
                               const std::vector<LabelledFace>& gallery,
                               const std::vector<LabelledFace>& probe,
                               int classes) {
  const int dim = model.spec().dim;
  std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
  for (const auto& g : gallery) {
    const auto e = model.embed(g.face.image);
    for (int j = 0; j < dim; ++j) means[g.label][j] += e[j];
  }
  int correct = 0;
  for (const auto& p : probe) {
    const auto e = model.embed(p.face.image);
    int best = -1;
    double best_cos = -2.0;
    for (int k = 0; k < classes; ++k) {
      const double c = cosine_similarity(e, means[k]);
      if (c > best_cos) {
        best_cos = c;
        best = k;
      }
    }
    correct += best == p.label;
  }
  return static_cast<double>(correct) / probe.size();
}

TinyRecipe bundled_tiny_recipe() {
  TinyRecipe r;
  r.render.width = 64;
  r.render.height = 64;
  r.render.noise_sigma = 0.01;
  r.surrogate.name = "tiny-a";
  r.surrogate.seed = 11;
  r.surrogate.input_width = r.surrogate.input_height = 12;
  r.surrogate.hidden = 64;
  r.surrogate.resize = ResizeMode::kBilinear;
  r.victim.name = "tiny-b";
  r.victim.seed = 22;
  r.victim.input_width = r.victim.input_height = 12;
  r.victim.hidden = 48;
  r.victim.resize = ResizeMode::kArea;
  return r;
}

TinyPair train_bundled_pair(const TinyRecipe& recipe) {
  const auto data =
      make_labelled_set(recipe.identities, recipe.per_identity,
                        recipe.identity_seed, recipe.render, recipe.render_seed);
  return {train_tiny_embedder(data, recipe.identities, recipe.surrogate),
          train_tiny_embedder(data, recipe.identities, recipe.victim)};
}

}  // namespace advmask
