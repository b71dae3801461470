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

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "advmask/dataset.hpp"
#include "advmask/model.hpp"

namespace advmask {

struct PairRow {
  IdentityPair pair;
  std::string artifact;  // per-pair artifact key
  std::map<std::string, double> cosine_per_model;
  // nullopt: the backend reported no face; excluded from MCS.
  std::map<std::string, std::optional<double>> confidence_per_backend;
  // Backends that failed outright for this row.
  std::map<std::string, std::string> backend_errors;
  std::map<std::string, bool> success;  // cosine > tau, per model
};

struct BackendAggregate {
  std::optional<double> mcs;  // absent when nothing was scored
  int scored = 0;
  int face_not_detected = 0;
  int failed = 0;
};

struct EvaluationReport {
  std::vector<PairRow> rows;
  std::map<std::string, double> thresholds;
  std::map<std::string, double> asr;
  std::map<std::string, BackendAggregate> backends;
  nlohmann::json config;

  // Fills success flags and aggregates from rows and thresholds.
  void recompute();
  // True when stored flags and aggregates equal a recomputation exactly.
  bool self_consistent() const;
};

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

void write_report_json(const std::filesystem::path& path,
                       const EvaluationReport& report);
EvaluationReport read_report_json(const std::filesystem::path& path);
// One line per pair: ids, then cosine/success per model, then confidence
// per backend ("no_face" / "error" for missing scores).
void write_report_csv(const std::filesystem::path& path,
                      const EvaluationReport& report);

// Impostor pairs for threshold calibration: every cross-identity pair, or
// `sample_count` pairs drawn uniformly with replacement.
enum class ImpostorMode { kAllPairs, kSampled };

ImpostorMode parse_impostor_mode(const std::string& s);

struct LabelledEmbedding {
  std::string identity;
  Embedding embedding;
};

std::vector<double> impostor_scores(std::span<const LabelledEmbedding> items,
                                    ImpostorMode mode, int sample_count,
                                    std::mt19937_64& rng);

}  // namespace advmask
