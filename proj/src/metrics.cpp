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

#include "advmask/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "advmask/error.hpp"

namespace advmask {

namespace {

void require_nonempty(std::span<const double> v, const char* what) {
  if (v.empty()) {
    throw Error(ErrorCode::kEmptyInput, std::string(what) + ": empty list");
  }
}

}  // namespace

double asr(std::span<const double> cosines, double tau) {
  require_nonempty(cosines, "asr");
  const auto hits = std::ranges::count_if(cosines, [&](double c) { return c > tau; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(cosines.size());
}

double mcs(std::span<const double> confidences) {
  require_nonempty(confidences, "mcs");
  double sum = 0.0;
  for (double c : confidences) sum += c;
  return sum / static_cast<double>(confidences.size());
}

double false_acceptance_rate(std::span<const double> scores, double tau) {
  require_nonempty(scores, "far");
  const auto n = std::ranges::count_if(scores, [&](double s) { return s > tau; });
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

Calibration calibrate_threshold(std::span<const double> impostor_scores,
                                double far_target) {
  require_nonempty(impostor_scores, "calibrate_threshold");
  if (!(far_target >= 0.0 && far_target <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "far_target must lie in [0, 1]");
  }
  std::vector<double> s(impostor_scores.begin(), impostor_scores.end());
  if (std::ranges::any_of(s, [](double v) { return std::isnan(v); })) {
    throw Error(ErrorCode::kInvalidArgument, "impostor score is NaN");
  }
  std::ranges::sort(s);
  const std::size_t n = s.size();
  // Ascending scan over distinct candidates; the count above s[i] is the
  // number of entries past the last copy of s[i].
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    const double far = static_cast<double>(n - 1 - j) / static_cast<double>(n);
    if (far <= far_target) return {s[i], far};
    i = j + 1;
  }
  return {std::numeric_limits<double>::infinity(), 0.0};
}

}  // namespace advmask
