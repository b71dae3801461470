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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "advmask/attack.hpp"

namespace advmask {

// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitPartial = 2;

struct RunConfig {
  std::string subcommand;
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> manifest;
  int pairs = 10;
  std::uint64_t seed = 0;
  std::string attack = "rstam";
  AttackConfig attack_config;
  std::vector<std::string> models{"toy-1"};
  std::vector<std::string> victims;  // empty: same as models
  std::vector<std::string> backends{"mock"};
  std::filesystem::path out;
  int workers = 1;
  std::vector<double> betas;
  int canvas = 0;  // 0 keeps the dataset's native size
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> models_file;
  std::optional<std::filesystem::path> backends_file;
  std::optional<std::filesystem::path> mask_template;
  double dpi = 300.0;
  // evaluate / calibrate
  std::string impostors = "all";
  int impostor_samples = 2000;
  double far = 0.001;
  // make-mask
  std::filesystem::path source;
  std::optional<std::filesystem::path> landmarks;
  // synth-dataset
  int identities = 6;
  int per_identity = 2;
  // Effective flags as TOML, written next to run outputs when set.
  std::string snapshot_toml;
};

// Parses argv and runs the chosen subcommand. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

int cmd_attack(const RunConfig& run, std::ostream& log);
int cmd_evaluate(const RunConfig& run, std::ostream& log);
int cmd_sweep_beta(const RunConfig& run, std::ostream& log);
int cmd_make_mask(const RunConfig& run, std::ostream& log);
int cmd_synth_dataset(const RunConfig& run, std::ostream& log);
int cmd_calibrate(const RunConfig& run, std::ostream& log);
int cmd_train_tiny(const RunConfig& run, std::ostream& log);

// Compiled-in data directory, overridable with ADVMASK_DATA_DIR.
std::filesystem::path default_data_dir();

}  // namespace advmask
