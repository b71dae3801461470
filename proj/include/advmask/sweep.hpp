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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "advmask/attack.hpp"
#include "advmask/pipeline.hpp"

namespace advmask {

using ModelFactory = std::function<EmbeddingModelHandle(const std::string&)>;

struct SweepSpec {
  AttackKind kind = AttackKind::kRstam;
  AttackConfig config;  // beta is overridden per column
  std::vector<std::string> surrogates;
  std::vector<std::string> victims;
  std::map<std::string, double> thresholds;  // victims without one get no ASR
  std::uint64_t seed = 0;                    // per-pair seeds derive from it
  int workers = 1;
};

struct SweepRow {
  double beta = 0.0;
  std::map<std::string, double> mean_cosine;  // per victim
  std::map<std::string, double> asr;
};

struct SweepTable {
  std::vector<std::string> victims;
  std::vector<SweepRow> rows;
};

// Runs the attack over all pairs for each beta and aggregates victim
// cosines to the target. Pair i uses the same seed in every column.
SweepTable beta_sweep(std::span<const PreparedPair> pairs,
                      std::span<const double> betas, const SweepSpec& spec,
                      const ModelFactory& make_model);

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& t);
// Line plot of mean victim cosine against beta with the [band_lo, band_hi]
// range shaded and labelled.
void write_sweep_svg(const std::filesystem::path& path, const SweepTable& t,
                     double band_lo = 0.15, double band_hi = 0.25);

}  // namespace advmask
