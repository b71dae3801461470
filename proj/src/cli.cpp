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

#include "advmask/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "advmask/dataset.hpp"
#include "advmask/error.hpp"
#include "advmask/metrics.hpp"
#include "advmask/pipeline.hpp"
#include "advmask/report.hpp"
#include "advmask/scoring.hpp"
#include "advmask/sweep.hpp"
#include "advmask/synthetic.hpp"
#include "advmask/training.hpp"

#ifndef ADVMASK_DEFAULT_DATA_DIR
#define ADVMASK_DEFAULT_DATA_DIR "data"
#endif

namespace advmask {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path default_data_dir() {
  if (const char* env = std::getenv("ADVMASK_DATA_DIR"); env && *env) return env;
  return ADVMASK_DEFAULT_DATA_DIR;
}

namespace {

// Raised for usage/configuration problems; maps to exit status 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json attack_config_json(const AttackConfig& c) {
  return {{"epsilon", c.epsilon},
          {"alpha", c.alpha},
          {"iterations", c.iterations},
          {"beta", c.beta},
          {"norm", to_string(c.norm)},
          {"rst_sampling",
           c.rst_sampling == RstSampling::kShared ? "shared" : "independent"},
          {"pivot", c.pivot == Pivot::kCenter ? "center" : "corner"}};
}

json run_json(const RunConfig& r) {
  json j{{"subcommand", r.subcommand},
         {"dataset", r.dataset.generic_string()},
         {"pairs", r.pairs},
         {"seed", r.seed},
         {"attack", r.attack},
         {"attack_config", attack_config_json(r.attack_config)},
         {"models", r.models},
         {"victims", r.victims},
         {"backends", r.backends},
         {"workers", r.workers},
         {"betas", r.betas},
         {"canvas", r.canvas},
         {"dpi", r.dpi}};
  j["manifest"] = r.manifest ? json(r.manifest->generic_string()) : json(nullptr);
  j["mask_template"] =
      r.mask_template ? json(r.mask_template->generic_string()) : json(nullptr);
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed " + path.string() + ": " + e.what());
  }
}

ModelRegistry load_registry(const RunConfig& run) {
  ModelRegistry reg = ModelRegistry::builtin(
      run.data_dir.empty() ? default_data_dir() : run.data_dir);
  if (run.models_file) {
    const auto extra = ModelRegistry::from_file(*run.models_file);
    for (const auto& name : extra.names()) reg.add(extra.entry(name));
  }
  return reg;
}

void require_models(const ModelRegistry& reg,
                    const std::vector<std::string>& names, const char* what) {
  if (names.empty()) throw ConfigError(std::string("no ") + what + " given");
  for (const auto& n : names) {
    if (!reg.contains(n)) {
      throw ConfigError(std::string("unknown ") + what + " '" + n + "'");
    }
  }
}

AttackKind checked_kind(const RunConfig& run) {
  AttackKind kind;
  try {
    kind = parse_attack_kind(run.attack);
    run.attack_config.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (kind == AttackKind::kRstamMeta && run.models.size() < 2) {
    throw ConfigError("rstam-meta needs at least two models");
  }
  return kind;
}

BinaryMask load_template(const RunConfig& run) {
  if (!run.mask_template) return {};
  return load_initial_mask(*run.mask_template, run.canvas, run.canvas);
}

std::vector<std::vector<EmbeddingModelHandle>> per_worker_models(
    const ModelRegistry& reg, const std::vector<std::string>& names,
    int workers) {
  std::vector<std::vector<EmbeddingModelHandle>> out(std::max(1, workers));
  for (auto& handles : out) {
    for (const auto& n : names) handles.push_back(reg.create(n));
  }
  return out;
}

void write_loss_csv(const fs::path& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  out << "iteration,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << "," << trace[i] << "\n";
}

// Tight crop of the mask region with the mask as alpha, plus physical size
// metadata for printing.
void write_mask_crop(const fs::path& dir, const FaceImage& x_adv,
                     const BinaryMask& m, double dpi) {
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) throw Error(ErrorCode::kDegenerateMask, "mask is empty");
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  Image rgb(w, h, 3), alpha(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = x_adv.at(x0 + x, y0 + y, c);
      alpha.at(x, y, 0) = m.at(x0 + x, y0 + y);
    }
  }
  write_rgba(dir / "mask.png", rgb, alpha);
  write_json(dir / "mask.json", {{"dpi", dpi},
                                 {"width_px", w},
                                 {"height_px", h},
                                 {"offset_px", {x0, y0}},
                                 {"width_mm", w / dpi * 25.4},
                                 {"height_mm", h / dpi * 25.4}});
}

std::vector<PreparedPair> prepare_all(const IdentityIndex& index,
                                      const std::vector<IdentityPair>& pairs,
                                      const RunConfig& run) {
  const BinaryMask tmpl = load_template(run);
  std::vector<PreparedPair> out;
  for (const auto& p : pairs) out.push_back(prepare_pair(index, p, run.canvas, tmpl));
  return out;
}

IdentityIndex load_attack_index(const RunConfig& run, std::ostream& log) {
  const auto index = ingest_dataset(run.dataset, run.manifest);
  const auto flagged = index.flagged();
  if (!flagged.empty()) {
    log << flagged.size() << " image(s) without landmark sidecars skipped\n";
  }
  return index.attack_ready();
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int cmd_attack(const RunConfig& run, std::ostream& log) {
  return guarded(log, [&] {
    const ModelRegistry reg = load_registry(run);
    require_models(reg, run.models, "model");
    const AttackKind kind = checked_kind(run);
    if (run.out.empty()) throw ConfigError("--out is required");
    if (run.pairs < 1) throw ConfigError("--pairs must be at least 1");

    const auto index = load_attack_index(run, log);
    std::mt19937_64 rng(run.seed);
    const auto pairs = sample_pairs(index, run.pairs, rng);
    const BinaryMask tmpl = load_template(run);

    fs::create_directories(run.out / "pairs");
    write_json(run.out / "run.json", run_json(run));

    const auto models = per_worker_models(reg, run.models, run.workers);
    std::vector<json> results(pairs.size());
    const json cfg_json = attack_config_json(run.attack_config);
    const auto errors = parallel_for(pairs.size(), run.workers, [&](int w,
                                                                    std::size_t i) {
      const auto& pair = pairs[i];
      const std::uint64_t seed = pair_seed(run.seed, i);
      const json key_json{{"target", pair.target_image},
                          {"source", pair.source_image},
                          {"attack", run.attack},
                          {"config", cfg_json},
                          {"models", run.models},
                          {"canvas", run.canvas},
                          {"template", run.mask_template
                                           ? run.mask_template->generic_string()
                                           : ""},
                          {"dpi", run.dpi},
                          {"seed", seed}};
      const std::string key = fnv1a_hex(key_json.dump());
      const fs::path dir = run.out / "pairs" / key;
      results[i] = {{"index", i},
                    {"target_image", pair.target_image},
                    {"source_image", pair.source_image},
                    {"target_id", pair.target_id},
                    {"source_id", pair.source_id},
                    {"artifact", key},
                    {"seed", seed}};
      if (fs::exists(dir / "result.json")) {
        results[i] = read_json(dir / "result.json");
        return;
      }
      const auto p = prepare_pair(index, pair, run.canvas, tmpl);
      AttackConfig cfg = run.attack_config;
      cfg.seed = seed;
      const auto r = run_attack(kind, p.source, p.target, p.mask, models[w], cfg);
      const FaceImage paste = composite(p.source, p.target, p.mask);

      json cos_adv = json::object(), cos_paste = json::object();
      for (std::size_t k = 0; k < run.models.size(); ++k) {
        const auto t = models[w][k]->embed(p.target);
        cos_adv[run.models[k]] = cosine_similarity(models[w][k]->embed(r.x_adv), t);
        cos_paste[run.models[k]] = cosine_similarity(models[w][k]->embed(paste), t);
      }
      fs::create_directories(dir);
      write_image(dir / "x_adv.png", r.x_adv);
      write_mask_crop(dir, r.x_adv, p.mask, run.dpi);
      write_loss_csv(dir / "loss.csv", r.loss_trace);
      results[i]["status"] = "ok";
      results[i]["cosine_adv"] = cos_adv;
      results[i]["cosine_paste"] = cos_paste;
      results[i]["final_loss"] =
          r.loss_trace.empty() ? json(nullptr) : json(r.loss_trace.back());
      results[i]["gradient_evaluations"] = r.gradient_evaluations;
      results[i]["mask_pixels"] = p.mask.count_ones();
      write_json(dir / "result.json", results[i]);
    });

    int failed = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!errors[i].empty()) {
        ++failed;
        results[i]["status"] = "error";
        results[i]["error"] = errors[i];
        log << "pair " << i << " failed: " << errors[i] << "\n";
      }
    }
    json summary{{"config", run_json(run)},
                 {"pairs", results},
                 {"ok", static_cast<int>(pairs.size()) - failed},
                 {"failed", failed}};
    write_json(run.out / "summary.json", summary);
    if (!run.snapshot_toml.empty()) {
      std::ofstream(run.out / "config.toml") << run.snapshot_toml;
    }
    log << "attacked " << pairs.size() - failed << "/" << pairs.size()
        << " pairs into " << run.out.string() << "\n";
    return failed == 0 ? kExitOk : kExitPartial;
  });
}

namespace {

std::map<std::string, Calibration> calibrate_models(
    const IdentityIndex& index, int canvas, const ModelRegistry& reg,
    const std::vector<std::string>& names, const RunConfig& run,
    std::ostream& log, std::map<std::string, std::size_t>* counts = nullptr) {
  std::vector<std::pair<std::string, FaceImage>> faces;
  for (const auto& [identity, list] : index.identities()) {
    for (const auto& rec : list) {
      try {
        faces.emplace_back(identity, load_face(rec, canvas).image);
      } catch (const Error& e) {
        log << "calibration skips " << rec.id << ": " << e.what() << "\n";
      }
    }
  }
  const ImpostorMode mode = parse_impostor_mode(run.impostors);
  std::map<std::string, Calibration> out;
  for (const auto& name : names) {
    const auto model = reg.create(name);
    std::vector<LabelledEmbedding> items;
    for (const auto& [id, img] : faces) items.push_back({id, model->embed(img)});
    std::mt19937_64 rng(run.seed);
    const auto scores = impostor_scores(items, mode, run.impostor_samples, rng);
    out[name] = calibrate_threshold(scores, run.far);
    if (counts) (*counts)[name] = scores.size();
  }
  return out;
}

}  // namespace

int cmd_evaluate(const RunConfig& run, std::ostream& log) {
  return guarded(log, [&] {
    if (run.out.empty()) throw ConfigError("--out is required");
    const fs::path summary_path = run.out / "summary.json";
    if (!fs::exists(summary_path)) {
      throw ConfigError("missing attack artifacts: " + summary_path.string());
    }
    const json summary = read_json(summary_path);
    const json& acfg = summary.at("config");
    const int canvas = acfg.value("canvas", 0);
    const fs::path dataset =
        run.dataset.empty() ? fs::path(acfg.at("dataset").get<std::string>())
                            : run.dataset;
    std::optional<fs::path> manifest = run.manifest;
    if (!manifest && acfg.contains("manifest") && !acfg["manifest"].is_null()) {
      manifest = fs::path(acfg["manifest"].get<std::string>());
    }

    const ModelRegistry reg = load_registry(run);
    std::vector<std::string> victims = run.victims;
    if (victims.empty()) victims = acfg.at("models").get<std::vector<std::string>>();
    require_models(reg, victims, "victim model");

    std::vector<BackendConfig> backend_cfgs;
    if (run.backends_file) {
      try {
        backend_cfgs = load_backend_configs(*run.backends_file);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
    std::vector<BackendHandle> backends;
    for (const auto& id : run.backends) {
      try {
        backends.push_back(create_backend(id, backend_cfgs, reg, victims.front()));
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }

    const auto index = ingest_dataset(dataset, manifest);

    EvaluationReport report;
    json calib = json::object();
    std::vector<std::string> to_calibrate;
    for (const auto& v : victims) {
      if (const auto& t = reg.entry(v).threshold) {
        report.thresholds[v] = *t;
        calib[v] = {{"source", "registry"}, {"threshold", *t}};
      } else {
        to_calibrate.push_back(v);
      }
    }
    if (!to_calibrate.empty()) {
      std::map<std::string, std::size_t> counts;
      const auto cal =
          calibrate_models(index, canvas, reg, to_calibrate, run, log, &counts);
      for (const auto& [v, c] : cal) {
        report.thresholds[v] = c.threshold;
        calib[v] = {{"source", "calibrated"},
                    {"threshold", c.threshold},
                    {"far", c.far},
                    {"impostor_pairs", counts[v]}};
      }
    }

    std::vector<EmbeddingModelHandle> models;
    for (const auto& v : victims) models.push_back(reg.create(v));

    bool partial = false;
    for (const auto& item : summary.at("pairs")) {
      if (item.value("status", "") != "ok") continue;
      PairRow row;
      row.pair = {item.at("target_image"), item.at("source_image"),
                  item.at("target_id"), item.at("source_id")};
      row.artifact = item.at("artifact");
      const fs::path adv_path = run.out / "pairs" / row.artifact / "x_adv.png";
      FaceImage x_adv, target;
      try {
        x_adv = read_image(adv_path, 3);
        target = load_face(index.find(row.pair.target_image), canvas).image;
      } catch (const Error& e) {
        log << "skipping " << row.artifact << ": " << e.what() << "\n";
        partial = true;
        continue;
      }
      for (std::size_t k = 0; k < victims.size(); ++k) {
        row.cosine_per_model[victims[k]] =
            cosine_similarity(models[k]->embed(x_adv), models[k]->embed(target));
      }
      for (const auto& b : backends) {
        try {
          const auto s = b->verify(target, x_adv);
          row.confidence_per_backend[b->id()] =
              s.outcome == VerifyOutcome::kScored ? std::optional(s.confidence)
                                                  : std::nullopt;
        } catch (const Error& e) {
          row.backend_errors[b->id()] = e.what();
          partial = true;
        }
      }
      report.rows.push_back(std::move(row));
    }
    report.recompute();
    report.config = {{"attack", acfg},
                     {"victims", victims},
                     {"backends", run.backends},
                     {"impostors", run.impostors},
                     {"far_target", run.far},
                     {"calibration", calib}};
    write_report_json(run.out / "report.json", report);
    write_report_csv(run.out / "report.csv", report);
    for (const auto& [m, a] : report.asr) {
      log << "ASR " << m << " = " << a << "% (tau " << report.thresholds[m] << ")\n";
    }
    for (const auto& [b, a] : report.backends) {
      log << "MCS " << b << " = ";
      if (a.mcs) {
        log << *a.mcs;
      } else {
        log << "n/a";
      }
      log << " over " << a.scored << " pair(s), " << a.face_not_detected
          << " without face, " << a.failed << " failed\n";
    }
    return partial ? kExitPartial : kExitOk;
  });
}

int cmd_sweep_beta(const RunConfig& run, std::ostream& log) {
  return guarded(log, [&] {
    if (run.betas.empty()) throw ConfigError("--betas is empty");
    for (double b : run.betas) {
      try {
        validate_beta(b);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
    const ModelRegistry reg = load_registry(run);
    require_models(reg, run.models, "model");
    const std::vector<std::string> victims =
        run.victims.empty() ? run.models : run.victims;
    require_models(reg, victims, "victim model");
    SweepSpec spec;
    spec.kind = checked_kind(run);
    spec.config = run.attack_config;
    spec.surrogates = run.models;
    spec.victims = victims;
    spec.seed = run.seed;
    spec.workers = run.workers;
    for (const auto& v : victims) {
      if (const auto& t = reg.entry(v).threshold) spec.thresholds[v] = *t;
    }
    if (run.out.empty()) throw ConfigError("--out is required");
    if (run.pairs < 1) throw ConfigError("--pairs must be at least 1");

    const auto index = load_attack_index(run, log);
    std::mt19937_64 rng(run.seed);
    const auto prepared = prepare_all(index, sample_pairs(index, run.pairs, rng), run);
    const auto table = beta_sweep(prepared, run.betas, spec,
                                  [&](const std::string& n) { return reg.create(n); });
    fs::create_directories(run.out);
    write_json(run.out / "run.json", run_json(run));
    if (!run.snapshot_toml.empty()) {
      std::ofstream(run.out / "config.toml") << run.snapshot_toml;
    }
    write_sweep_csv(run.out / "sweep.csv", table);
    write_sweep_svg(run.out / "sweep.svg", table);
    for (const auto& r : table.rows) {
      log << "beta " << r.beta;
      for (const auto& [v, c] : r.mean_cosine) log << "  " << v << " " << c;
      log << "\n";
    }
    return kExitOk;
  });
}

int cmd_make_mask(const RunConfig& run, std::ostream& log) {
  return guarded(log, [&] {
    if (run.source.empty()) throw ConfigError("--source is required");
    if (run.out.empty()) throw ConfigError("--out is required");
    const fs::path sidecar =
        run.landmarks ? *run.landmarks
                      : run.source.parent_path() /
                            (run.source.stem().string() + ".landmarks.json");
    if (!fs::exists(sidecar)) {
      throw ConfigError("landmark sidecar not found: " + sidecar.string());
    }
    const Image src = read_image(run.source, 3);
    const FaceLandmarks lms = read_landmarks(sidecar);
    const int w = src.width(), h = src.height();
    const BinaryMask m0 = run.mask_template
                              ? load_initial_mask(*run.mask_template, w, h)
                              : default_mask_template(w, h);
    const BinaryMask m = gen_mask(m0, canonical_landmarks(w, h), lms);
    fs::create_directories(run.out);
    save_mask(run.out / "mask.png", m);
    // Preview: mask pixels tinted red over the source.
    Image overlay = src;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!m.at(x, y)) continue;
        overlay.at(x, y, 0) = 0.5 * overlay.at(x, y, 0) + 0.5;
        overlay.at(x, y, 1) = 0.5 * overlay.at(x, y, 1);
        overlay.at(x, y, 2) = 0.5 * overlay.at(x, y, 2);
      }
    }
    write_image(run.out / "overlay.png", overlay);
    const Point2 c = mask_centroid(m);
    write_json(run.out / "mask_info.json",
               {{"pixels", m.count_ones()},
                {"fill_fraction", m.fill_fraction()},
                {"centroid", {c.x, c.y}}});
    log << "mask: " << m.count_ones() << " pixels, centroid (" << c.x << ", "
        << c.y << ")\n";
    return kExitOk;
  });
}

int cmd_synth_dataset(const RunConfig& run, std::ostream& log) {
  return guarded(log, [&] {
    if (run.out.empty()) throw ConfigError("--out is required");
    const int size = run.canvas > 0 ? run.canvas : 512;
    write_synthetic_dataset(run.out, run.identities, run.per_identity, run.seed,
                            size, size);
    log << "wrote " << run.identities << " x " << run.per_identity
        << " images to " << run.out.string() << "\n";
    return kExitOk;
  });
}

int cmd_calibrate(const RunConfig& run, std::ostream& log) {
  return guarded(log, [&] {
    const ModelRegistry reg = load_registry(run);
    require_models(reg, run.models, "model");
    const auto index = ingest_dataset(run.dataset, run.manifest);
    std::map<std::string, std::size_t> counts;
    const auto cal =
        calibrate_models(index, run.canvas, reg, run.models, run, log, &counts);
    json out = json::object();
    for (const auto& [m, c] : cal) {
      out[m] = {{"threshold", c.threshold}, {"far", c.far},
                {"impostor_pairs", counts[m]}};
      log << m << ": tau " << c.threshold << " at FAR " << c.far << " over "
          << counts[m] << " impostor pairs\n";
    }
    if (!run.out.empty()) {
      if (run.out.has_parent_path()) fs::create_directories(run.out.parent_path());
      write_json(run.out, out);
    }
    return kExitOk;
  });
}

int cmd_train_tiny(const RunConfig& run, std::ostream& log) {
  return guarded(log, [&] {
    if (run.out.empty()) throw ConfigError("--out is required");
    const auto recipe = bundled_tiny_recipe();
    const auto pair = train_bundled_pair(recipe);
    fs::create_directories(run.out);
    save_mlp_embedder(run.out / "tiny-a.json", *pair.surrogate);
    save_mlp_embedder(run.out / "tiny-b.json", *pair.victim);
    log << "wrote tiny-a.json and tiny-b.json to " << run.out.string() << "\n";
    return kExitOk;
  });
}

namespace {

struct Flags {
  std::string norm = "linf";
  std::optional<double> alpha;
  std::string rst_sampling = "independent";
  std::string dataset, out, source;
  std::optional<std::string> manifest, models_file, backends_file,
      mask_template, landmarks;
};

void add_attack_options(CLI::App* sub, RunConfig& r, Flags& f) {
  sub->add_option("--dataset", f.dataset, "dataset root")->required();
  sub->add_option("--manifest", f.manifest, "dataset manifest override");
  sub->add_option("--pairs", r.pairs, "number of identity pairs");
  sub->add_option("--seed", r.seed, "run seed");
  sub->add_option("--attack", r.attack, "paste|am|rstam|rstam-all|rstam-meta");
  sub->add_option("--norm", f.norm, "linf|l2");
  sub->add_option("--epsilon", r.attack_config.epsilon, "perturbation bound");
  sub->add_option("--alpha", f.alpha, "step size (default per norm)");
  sub->add_option("--iters", r.attack_config.iterations, "iterations");
  sub->add_option("--beta", r.attack_config.beta, "transform strength");
  sub->add_option("--rst-sampling", f.rst_sampling, "independent|shared");
  sub->add_option("--models", r.models, "surrogate models")->delimiter(',');
  sub->add_option("--models-file", f.models_file, "extra model registry (JSON)");
  sub->add_option("--out", f.out, "output directory")->required();
  sub->add_option("--workers", r.workers, "worker threads");
  sub->add_option("--canvas", r.canvas, "canvas size (0 = native)");
  sub->add_option("--mask-template", f.mask_template, "initial mask image");
}

void apply_flags(RunConfig& r, const Flags& f) {
  r.dataset = f.dataset;
  r.out = f.out;
  r.source = f.source;
  if (f.manifest) r.manifest = *f.manifest;
  if (f.models_file) r.models_file = *f.models_file;
  if (f.backends_file) r.backends_file = *f.backends_file;
  if (f.mask_template) r.mask_template = *f.mask_template;
  if (f.landmarks) r.landmarks = *f.landmarks;
  r.attack_config.norm = parse_norm(f.norm);
  r.attack_config.alpha =
      f.alpha ? *f.alpha : AttackConfig::defaults(r.attack_config.norm).alpha;
  if (f.rst_sampling == "shared") {
    r.attack_config.rst_sampling = RstSampling::kShared;
  } else if (f.rst_sampling != "independent") {
    throw ConfigError("unknown --rst-sampling " + f.rst_sampling);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Adversarial face mask toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML config; flags override it");
  std::string data_dir;
  app.add_option("--data-dir", data_dir, "bundled data directory");

  RunConfig r;
  Flags f;

  auto* attack = app.add_subcommand("attack", "generate adversarial masks");
  add_attack_options(attack, r, f);
  attack->add_option("--dpi", r.dpi, "print resolution of the mask crop");

  auto* evaluate = app.add_subcommand("evaluate", "score attack artifacts");
  evaluate->add_option("--out", f.out, "attack output directory")->required();
  evaluate->add_option("--dataset", f.dataset, "dataset root (default: from run)");
  evaluate->add_option("--manifest", f.manifest, "dataset manifest override");
  evaluate->add_option("--victims", r.victims, "victim models")->delimiter(',');
  evaluate->add_option("--models-file", f.models_file, "extra model registry");
  evaluate->add_option("--backends", r.backends, "scoring backends")->delimiter(',');
  evaluate->add_option("--backends-file", f.backends_file, "backend config (JSON)");
  evaluate->add_option("--impostors", r.impostors, "all|sampled");
  evaluate->add_option("--impostor-samples", r.impostor_samples, "sampled mode size");
  evaluate->add_option("--far", r.far, "target false acceptance rate");
  evaluate->add_option("--seed", r.seed, "impostor sampling seed");

  auto* sweep = app.add_subcommand("sweep-beta", "transform strength sweep");
  add_attack_options(sweep, r, f);
  sweep->add_option("--betas", r.betas, "beta values")->delimiter(',');
  sweep->add_option("--victims", r.victims, "victim models")->delimiter(',');

  auto* make_mask = app.add_subcommand("make-mask", "warp the mask to a face");
  make_mask->add_option("--source", f.source, "source image")->required();
  make_mask->add_option("--landmarks", f.landmarks, "landmark sidecar");
  make_mask->add_option("--mask-template", f.mask_template, "initial mask image");
  make_mask->add_option("--out", f.out, "output directory")->required();

  auto* synth = app.add_subcommand("synth-dataset", "render synthetic faces");
  synth->add_option("--out", f.out, "output root")->required();
  synth->add_option("--identities", r.identities, "identity count");
  synth->add_option("--per-identity", r.per_identity, "images per identity");
  synth->add_option("--seed", r.seed, "identity seed");
  synth->add_option("--canvas", r.canvas, "image size (default 512)");

  auto* calibrate = app.add_subcommand("calibrate", "impostor thresholds");
  calibrate->add_option("--dataset", f.dataset, "dataset root")->required();
  calibrate->add_option("--manifest", f.manifest, "dataset manifest override");
  calibrate->add_option("--models", r.models, "models")->delimiter(',');
  calibrate->add_option("--models-file", f.models_file, "extra model registry");
  calibrate->add_option("--impostors", r.impostors, "all|sampled");
  calibrate->add_option("--impostor-samples", r.impostor_samples, "sampled mode size");
  calibrate->add_option("--far", r.far, "target false acceptance rate");
  calibrate->add_option("--canvas", r.canvas, "canvas size (0 = native)");
  calibrate->add_option("--seed", r.seed, "impostor sampling seed");
  calibrate->add_option("--out", f.out, "output JSON file");

  auto* export_tmpl =
      app.add_subcommand("export-template", "write the default mask template");
  export_tmpl->add_option("--out", f.out, "output PNG")->required();
  export_tmpl->add_option("--canvas", r.canvas, "template size (default 512)");

  auto* train = app.add_subcommand("train-tiny", "train the bundled tiny pair");
  train->add_option("--out", f.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    apply_flags(r, f);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (!data_dir.empty()) r.data_dir = data_dir;

  CLI::App* sub = app.get_subcommands().front();
  r.subcommand = sub->get_name();
  // Keep only this subcommand's settings; unset optionals are dropped.
  std::ostringstream snap;
  snap << "# rerun: advmask --config <this file> " << r.subcommand << "\n";
  std::istringstream all(app.config_to_str(true, false));
  for (std::string line; std::getline(all, line);) {
    const bool ours = line.starts_with(r.subcommand + ".") ||
                      line.starts_with("data-dir=");
    if (ours && !line.ends_with("=\"\"")) snap << line << "\n";
  }
  r.snapshot_toml = snap.str();

  if (sub == attack) return cmd_attack(r, err);
  if (sub == evaluate) return cmd_evaluate(r, err);
  if (sub == sweep) return cmd_sweep_beta(r, err);
  if (sub == make_mask) return cmd_make_mask(r, err);
  if (sub == synth) return cmd_synth_dataset(r, err);
  if (sub == calibrate) return cmd_calibrate(r, err);
  if (sub == train) return cmd_train_tiny(r, err);
  if (sub == export_tmpl) {
    return guarded(err, [&] {
      const int size = r.canvas > 0 ? r.canvas : 512;
      if (r.out.has_parent_path()) fs::create_directories(r.out.parent_path());
      save_mask(r.out, default_mask_template(size, size));
      return kExitOk;
    });
  }
  return kExitConfig;
}

}  // namespace advmask
