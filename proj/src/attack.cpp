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

#include "advmask/attack.hpp"

#include <algorithm>
#include <cmath>

namespace advmask {

AttackConfig AttackConfig::defaults(NormMode norm) {
  AttackConfig cfg;
  cfg.norm = norm;
  cfg.alpha = norm == NormMode::kLinf ? 0.003 : 2.0;
  return cfg;
}

void AttackConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "epsilon must lie in (0, 1]");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kConfiguration, "alpha must be finite and >= 0");
  }
  if (iterations < 0) {
    throw Error(ErrorCode::kConfiguration, "iterations must be >= 0");
  }
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "beta must lie in [0, 1)");
  }
}

std::string to_string(NormMode m) {
  return m == NormMode::kLinf ? "linf" : "l2";
}

std::string to_string(EnsembleMode m) {
  switch (m) {
    case EnsembleMode::kSingle: return "single";
    case EnsembleMode::kHardAll: return "hard_all";
    case EnsembleMode::kMeta: return "meta";
  }
  return "?";
}

NormMode parse_norm(const std::string& s) {
  if (s == "linf") return NormMode::kLinf;
  if (s == "l2") return NormMode::kL2;
  throw Error(ErrorCode::kConfiguration, "unknown norm '" + s + "'");
}

std::mt19937_64 rst_stream(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

std::mt19937_64 selection_stream(std::uint64_t seed) {
  return std::mt19937_64(seed ^ 0xA5A5A5A55A5A5A5AULL);
}

AttackResult paste_attack(const FaceImage& source, const FaceImage& target,
                          const BinaryMask& m) {
  AttackResult r;
  r.x_adv = composite(source, target, m);
  r.adv_mask = apply_mask(r.x_adv, m);
  r.config.iterations = 0;
  r.mask = m;
  return r;
}

namespace {

void check_step_shapes(const FaceImage& x_n, const GradientGrid& g,
                       const FaceImage& x0, const BinaryMask& m) {
  require_same_shape(x_n, g, "attack step gradient");
  require_same_shape(x_n, x0, "attack step origin");
  require_mask_fits(m, x_n, "attack step mask");
}

template <typename StepFn>
FaceImage masked_step(const FaceImage& x_n, const FaceImage& x0,
                      const BinaryMask& m, double epsilon, StepFn&& step) {
  FaceImage out = x_n;
  const int ch = x_n.channels();
  for (int y = 0; y < x_n.height(); ++y) {
    for (int x = 0; x < x_n.width(); ++x) {
      if (!m.at(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        const double origin = x0.at(x, y, c);
        double v = x_n.at(x, y, c) - step(x, y, c);
        v = std::clamp(v, origin - epsilon, origin + epsilon);
        out.at(x, y, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

FaceImage attack_step_linf(const FaceImage& x_n, const GradientGrid& g,
                           const FaceImage& x0, const BinaryMask& m,
                           double alpha, double epsilon) {
  check_step_shapes(x_n, g, x0, m);
  return masked_step(x_n, x0, m, epsilon, [&](int x, int y, int c) {
    return alpha * sign(g.at(x, y, c));
  });
}

FaceImage attack_step_l2(const FaceImage& x_n, const GradientGrid& g,
                         const FaceImage& x0, const BinaryMask& m, double alpha,
                         double epsilon) {
  check_step_shapes(x_n, g, x0, m);
  double sq = 0.0;
  for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0)) {
    throw Error(ErrorCode::kZeroGradient,
                "L2 step undefined: gradient norm is zero");
  }
  const double k = alpha / norm;
  return masked_step(x_n, x0, m, epsilon,
                     [&](int x, int y, int c) { return k * g.at(x, y, c); });
}

FaceImage attack_step(NormMode norm, const FaceImage& x_n,
                      const GradientGrid& g, const FaceImage& x0,
                      const BinaryMask& m, double alpha, double epsilon) {
  return norm == NormMode::kLinf
             ? attack_step_linf(x_n, g, x0, m, alpha, epsilon)
             : attack_step_l2(x_n, g, x0, m, alpha, epsilon);
}

LossGradient transformed_loss_gradient(const EmbeddingModel& model,
                                       const FaceImage& x,
                                       std::span<const double> target,
                                       const SimilarityTransform* t) {
  if (t == nullptr) return model.loss_gradient(x, target);
  LossGradient lg = model.loss_gradient(warp_bilinear(x, *t), target);
  lg.gradient = warp_bilinear_adjoint(lg.gradient, *t, x.width(), x.height());
  return lg;
}

GradientGrid hard_ensemble_gradient(
    std::span<const EmbeddingModelHandle> models, const FaceImage& x_n,
    std::span<const Embedding> targets, double beta, std::mt19937_64& rng,
    RstSampling sampling, Pivot pivot, double* mean_loss) {
  if (models.empty()) {
    throw Error(ErrorCode::kConfiguration, "ensemble needs at least one model");
  }
  if (targets.size() != models.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one target embedding per model");
  }
  GradientGrid sum(x_n.width(), x_n.height(), x_n.channels());
  double loss = 0.0;
  RstDraw shared;
  if (sampling == RstSampling::kShared) {
    shared = draw_rst(beta, x_n.width(), x_n.height(), pivot, rng);
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    const RstDraw draw = sampling == RstSampling::kShared
                             ? shared
                             : draw_rst(beta, x_n.width(), x_n.height(), pivot,
                                        rng);
    const auto lg = transformed_loss_gradient(*models[i], x_n, targets[i],
                                              &draw.pixel_transform);
    for (std::size_t j = 0; j < sum.size(); ++j) {
      sum.data()[j] += lg.gradient.data()[j];
    }
    loss += lg.loss;
  }
  const double k = static_cast<double>(models.size());
  for (double& v : sum.data()) v /= k;
  if (mean_loss) *mean_loss = loss / k;
  return sum;
}

GradientGrid hard_ensemble_gradient(
    std::span<const EmbeddingModelHandle> models, const FaceImage& x_n,
    const FaceImage& target, double beta, std::mt19937_64& rng) {
  std::vector<Embedding> targets;
  for (const auto& m : models) targets.push_back(m->embed(target));
  return hard_ensemble_gradient(models, x_n, targets, beta, rng);
}

namespace {

struct LoopState {
  FaceImage x0;
  FaceImage x;
  AttackResult result;
};

LoopState start(const FaceImage& source, const FaceImage& target,
                const BinaryMask& m, const AttackConfig& cfg) {
  cfg.validate();
  LoopState s;
  s.x0 = composite(source, target, m);
  s.x = s.x0;
  s.result.config = cfg;
  s.result.mask = m;
  s.result.loss_trace.reserve(cfg.iterations);
  return s;
}

AttackResult finish(LoopState&& s) {
  s.result.adv_mask = apply_mask(s.x, s.result.mask);
  s.result.x_adv = std::move(s.x);
  return std::move(s.result);
}

void record_loss(AttackResult& r, int n, double loss) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kDivergence,
                "non-finite loss at iteration " + std::to_string(n));
  }
  r.loss_trace.push_back(loss);
}

// Rethrows zero-gradient failures with the iteration index attached.
template <typename Fn>
auto at_iteration(int n, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroGradient) throw;
    throw Error(e.code(),
                std::string(e.what()) + " (iteration " + std::to_string(n) + ")");
  }
}

}  // namespace

AttackResult rstam_single(const FaceImage& source, const FaceImage& target,
                          const BinaryMask& m, const EmbeddingModelHandle& model,
                          const AttackConfig& cfg,
                          const IterationObserver& observer) {
  LoopState s = start(source, target, m, cfg);
  const Embedding target_embedding = model->embed(target);
  auto rng = rst_stream(cfg.seed);
  for (int n = 0; n < cfg.iterations; ++n) {
    LossGradient lg;
    if (cfg.use_rst) {
      const RstDraw draw =
          draw_rst(cfg.beta, s.x.width(), s.x.height(), cfg.pivot, rng);
      lg = transformed_loss_gradient(*model, s.x, target_embedding,
                                     &draw.pixel_transform);
    } else {
      lg = transformed_loss_gradient(*model, s.x, target_embedding, nullptr);
    }
    ++s.result.gradient_evaluations;
    record_loss(s.result, n, lg.loss);
    s.x = at_iteration(n, [&] {
      return attack_step(cfg.norm, s.x, lg.gradient, s.x0, m, cfg.alpha,
                         cfg.epsilon);
    });
    if (observer) observer({n, lg.loss, &s.x, -1, &lg.gradient});
  }
  return finish(std::move(s));
}

AttackResult am_attack(const FaceImage& source, const FaceImage& target,
                       const BinaryMask& m, const EmbeddingModelHandle& model,
                       AttackConfig cfg, const IterationObserver& observer) {
  cfg.use_rst = false;
  cfg.beta = 0.0;
  return rstam_single(source, target, m, model, cfg, observer);
}

AttackResult rstam_hard_ensemble(const FaceImage& source,
                                 const FaceImage& target, const BinaryMask& m,
                                 std::span<const EmbeddingModelHandle> models,
                                 const AttackConfig& cfg,
                                 const IterationObserver& observer) {
  if (models.empty()) {
    throw Error(ErrorCode::kConfiguration, "ensemble needs at least one model");
  }
  LoopState s = start(source, target, m, cfg);
  std::vector<Embedding> targets;
  for (const auto& model : models) targets.push_back(model->embed(target));
  auto rng = rst_stream(cfg.seed);
  const double beta = cfg.use_rst ? cfg.beta : 0.0;
  for (int n = 0; n < cfg.iterations; ++n) {
    double loss = 0.0;
    const GradientGrid g =
        hard_ensemble_gradient(models, s.x, targets, beta, rng,
                               cfg.rst_sampling, cfg.pivot, &loss);
    s.result.gradient_evaluations += static_cast<long>(models.size());
    record_loss(s.result, n, loss);
    s.x = at_iteration(n, [&] {
      return attack_step(cfg.norm, s.x, g, s.x0, m, cfg.alpha, cfg.epsilon);
    });
    if (observer) observer({n, loss, &s.x, -1, &g});
  }
  return finish(std::move(s));
}

AttackResult rstam_meta(const FaceImage& source, const FaceImage& target,
                        const BinaryMask& m,
                        std::span<const EmbeddingModelHandle> models,
                        const AttackConfig& cfg,
                        const IterationObserver& observer) {
  const int count = static_cast<int>(models.size());
  if (count < 2) {
    throw Error(ErrorCode::kConfiguration,
                "meta ensemble needs at least two models");
  }
  LoopState s = start(source, target, m, cfg);
  std::vector<Embedding> targets;
  for (const auto& model : models) targets.push_back(model->embed(target));
  auto rng = rst_stream(cfg.seed);
  auto select = selection_stream(cfg.seed);
  std::uniform_int_distribution<int> pick(0, count - 1);
  const double beta = cfg.use_rst ? cfg.beta : 0.0;
  const int w = s.x.width(), h = s.x.height();

  for (int n = 0; n < cfg.iterations; ++n) {
    const int query = pick(select);
    RstDraw shared;
    if (cfg.rst_sampling == RstSampling::kShared) {
      shared = draw_rst(beta, w, h, cfg.pivot, rng);
    }
    auto next_draw = [&] {
      return cfg.rst_sampling == RstSampling::kShared
                 ? shared
                 : draw_rst(beta, w, h, cfg.pivot, rng);
    };

    GradientGrid g_sum(w, h, s.x.channels());
    double support_loss = 0.0;
    for (int k = 0; k < count; ++k) {
      if (k == query) continue;
      const RstDraw d_sup = next_draw();
      const auto sup = transformed_loss_gradient(*models[k], s.x, targets[k],
                                                 &d_sup.pixel_transform);
      const FaceImage x_meta = at_iteration(n, [&] {
        return attack_step(cfg.norm, s.x, sup.gradient, s.x0, m, cfg.alpha,
                           cfg.epsilon);
      });
      const RstDraw d_que = next_draw();
      const auto que = transformed_loss_gradient(
          *models[query], x_meta, targets[query], &d_que.pixel_transform);
      s.result.gradient_evaluations += 2;
      for (std::size_t j = 0; j < g_sum.size(); ++j) {
        g_sum.data()[j] += sup.gradient.data()[j] + que.gradient.data()[j];
      }
      support_loss += sup.loss;
    }
    const double coef = 1.0 / (count - 1);
    for (double& v : g_sum.data()) v *= coef;
    const double loss = support_loss * coef;
    record_loss(s.result, n, loss);
    s.x = at_iteration(n, [&] {
      return attack_step(cfg.norm, s.x, g_sum, s.x0, m, cfg.alpha,
                         cfg.epsilon);
    });
    if (observer) observer({n, loss, &s.x, query, &g_sum});
  }
  return finish(std::move(s));
}

AttackKind parse_attack_kind(const std::string& s) {
  if (s == "paste") return AttackKind::kPaste;
  if (s == "am") return AttackKind::kAm;
  if (s == "rstam") return AttackKind::kRstam;
  if (s == "rstam-all") return AttackKind::kRstamAll;
  if (s == "rstam-meta") return AttackKind::kRstamMeta;
  throw Error(ErrorCode::kConfiguration, "unknown attack '" + s + "'");
}

std::string to_string(AttackKind k) {
  switch (k) {
    case AttackKind::kPaste: return "paste";
    case AttackKind::kAm: return "am";
    case AttackKind::kRstam: return "rstam";
    case AttackKind::kRstamAll: return "rstam-all";
    case AttackKind::kRstamMeta: return "rstam-meta";
  }
  return "?";
}

AttackResult run_attack(AttackKind kind, const FaceImage& source,
                        const FaceImage& target, const BinaryMask& m,
                        std::span<const EmbeddingModelHandle> models,
                        AttackConfig cfg, const IterationObserver& observer) {
  if (kind == AttackKind::kPaste) return paste_attack(source, target, m);
  if (models.empty()) {
    throw Error(ErrorCode::kConfiguration, "attack needs at least one model");
  }
  switch (kind) {
    case AttackKind::kAm:
      cfg.ensemble = EnsembleMode::kSingle;
      return am_attack(source, target, m, models.front(), cfg, observer);
    case AttackKind::kRstam:
      cfg.ensemble = EnsembleMode::kSingle;
      cfg.use_rst = true;
      return rstam_single(source, target, m, models.front(), cfg, observer);
    case AttackKind::kRstamAll:
      cfg.ensemble = EnsembleMode::kHardAll;
      cfg.use_rst = true;
      return rstam_hard_ensemble(source, target, m, models, cfg, observer);
    case AttackKind::kRstamMeta:
      cfg.ensemble = EnsembleMode::kMeta;
      cfg.use_rst = true;
      return rstam_meta(source, target, m, models, cfg, observer);
    case AttackKind::kPaste:
      break;
  }
  return paste_attack(source, target, m);
}

}  // namespace advmask
