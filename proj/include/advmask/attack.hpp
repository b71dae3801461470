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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "advmask/image.hpp"
#include "advmask/maskgeom.hpp"
#include "advmask/model.hpp"
#include "advmask/rst.hpp"

namespace advmask {

enum class NormMode { kLinf, kL2 };
enum class EnsembleMode { kSingle, kHardAll, kMeta };
// Whether each gradient evaluation in an iteration draws its own random
// similarity transformation or all of them share one draw.
enum class RstSampling { kIndependent, kShared };

struct AttackConfig {
  double epsilon = 0.3;
  double alpha = 0.003;  // 2.0 is the usual L2 step
  int iterations = 2000;
  double beta = 0.2;
  NormMode norm = NormMode::kLinf;
  EnsembleMode ensemble = EnsembleMode::kSingle;
  std::uint64_t seed = 0;
  // false gives the plain adversarial-mask attack (no transformation path).
  bool use_rst = true;
  RstSampling rst_sampling = RstSampling::kIndependent;
  Pivot pivot = Pivot::kCenter;

  static AttackConfig defaults(NormMode norm);
  void validate() const;
};

std::string to_string(NormMode m);
std::string to_string(EnsembleMode m);
NormMode parse_norm(const std::string& s);

struct AttackResult {
  FaceImage x_adv;
  FaceImage adv_mask;  // x_adv where mask == 1, 0 elsewhere
  std::vector<double> loss_trace;
  AttackConfig config;
  BinaryMask mask;
  long gradient_evaluations = 0;
};

// Called after every outer update with the new iterate.
struct IterationInfo {
  int iteration = 0;  // n of x_{n+1}
  double loss = 0.0;
  const FaceImage* x = nullptr;
  int query_model = -1;  // meta ensemble only
  const GradientGrid* gradient = nullptr;
};
using IterationObserver = std::function<void(const IterationInfo&)>;

// x_0 = composite(source, target, m); no model queries.
AttackResult paste_attack(const FaceImage& source, const FaceImage& target,
                          const BinaryMask& m);

// Clip_[0,1](Clip_[x0-eps, x0+eps](x_n - alpha * sign(g) (.) m)); pixels with
// m == 0 are returned unchanged.
FaceImage attack_step_linf(const FaceImage& x_n, const GradientGrid& g,
                           const FaceImage& x0, const BinaryMask& m,
                           double alpha, double epsilon);

// As above with g / ||g||_2 (norm over the whole, unmasked gradient).
FaceImage attack_step_l2(const FaceImage& x_n, const GradientGrid& g,
                         const FaceImage& x0, const BinaryMask& m, double alpha,
                         double epsilon);

FaceImage attack_step(NormMode norm, const FaceImage& x_n,
                      const GradientGrid& g, const FaceImage& x0,
                      const BinaryMask& m, double alpha, double epsilon);

// L(f(T x), target) and its gradient with respect to x. A null transform
// evaluates f(x) directly.
LossGradient transformed_loss_gradient(const EmbeddingModel& model,
                                       const FaceImage& x,
                                       std::span<const double> target,
                                       const SimilarityTransform* t);

// (1/k) sum_i grad L(f_i(RST(x_n)), f_i(x_t)); `targets[i]` is f_i(x_t).
GradientGrid hard_ensemble_gradient(
    std::span<const EmbeddingModelHandle> models, const FaceImage& x_n,
    std::span<const Embedding> targets, double beta, std::mt19937_64& rng,
    RstSampling sampling = RstSampling::kIndependent,
    Pivot pivot = Pivot::kCenter, double* mean_loss = nullptr);

GradientGrid hard_ensemble_gradient(
    std::span<const EmbeddingModelHandle> models, const FaceImage& x_n,
    const FaceImage& target, double beta, std::mt19937_64& rng);

// Single surrogate model. With use_rst = false (or beta = 0) this is the
// plain adversarial-mask attack.
AttackResult rstam_single(const FaceImage& source, const FaceImage& target,
                          const BinaryMask& m, const EmbeddingModelHandle& model,
                          const AttackConfig& cfg,
                          const IterationObserver& observer = {});

// Adversarial mask attack without input transformation.
AttackResult am_attack(const FaceImage& source, const FaceImage& target,
                       const BinaryMask& m, const EmbeddingModelHandle& model,
                       AttackConfig cfg, const IterationObserver& observer = {});

AttackResult rstam_hard_ensemble(const FaceImage& source,
                                 const FaceImage& target, const BinaryMask& m,
                                 std::span<const EmbeddingModelHandle> models,
                                 const AttackConfig& cfg,
                                 const IterationObserver& observer = {});

// Random meta-optimisation ensemble; needs at least two models.
AttackResult rstam_meta(const FaceImage& source, const FaceImage& target,
                        const BinaryMask& m,
                        std::span<const EmbeddingModelHandle> models,
                        const AttackConfig& cfg,
                        const IterationObserver& observer = {});

enum class AttackKind { kPaste, kAm, kRstam, kRstamAll, kRstamMeta };
AttackKind parse_attack_kind(const std::string& s);
std::string to_string(AttackKind k);

// Dispatches on kind; sets cfg.ensemble / cfg.use_rst accordingly.
AttackResult run_attack(AttackKind kind, const FaceImage& source,
                        const FaceImage& target, const BinaryMask& m,
                        std::span<const EmbeddingModelHandle> models,
                        AttackConfig cfg, const IterationObserver& observer = {});

// Independent random streams derived from the attack seed.
std::mt19937_64 rst_stream(std::uint64_t seed);
std::mt19937_64 selection_stream(std::uint64_t seed);

}  // namespace advmask
