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

#include <span>

namespace advmask {

// Attack success rate in percent: share of cosines strictly above tau.
// Ties at tau count as failures.
double asr(std::span<const double> cosines, double tau);

// Mean confidence score, arithmetic mean of percentages.
double mcs(std::span<const double> confidences);

struct Calibration {
  double threshold = 0.0;  // +inf when no observed score is feasible
  double far = 0.0;        // #{s > threshold} / N
};

// Smallest threshold among the observed scores (or +inf) whose false
// acceptance rate #{s > tau}/N does not exceed far_target.
Calibration calibrate_threshold(std::span<const double> impostor_scores,
                                double far_target = 0.001);

// False acceptance rate of `scores` at `tau` (strict >).
double false_acceptance_rate(std::span<const double> scores, double tau);

}  // namespace advmask
