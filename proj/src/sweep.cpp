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

#include "advmask/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "advmask/error.hpp"
#include "advmask/metrics.hpp"

namespace advmask {

SweepTable beta_sweep(std::span<const PreparedPair> pairs,
                      std::span<const double> betas, const SweepSpec& spec,
                      const ModelFactory& make_model) {
  if (betas.empty()) throw Error(ErrorCode::kConfiguration, "no betas to sweep");
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no pairs to attack");
  if (spec.surrogates.empty() || spec.victims.empty()) {
    throw Error(ErrorCode::kConfiguration, "sweep needs surrogates and victims");
  }
  const int workers = std::max(1, spec.workers);
  // Handles are per worker.
  std::vector<std::vector<EmbeddingModelHandle>> surrogates(workers);
  std::vector<std::vector<EmbeddingModelHandle>> victims(workers);
  for (int w = 0; w < workers; ++w) {
    for (const auto& s : spec.surrogates) surrogates[w].push_back(make_model(s));
    for (const auto& v : spec.victims) victims[w].push_back(make_model(v));
  }

  SweepTable table;
  table.victims = spec.victims;
  for (double beta : betas) {
    AttackConfig cfg = spec.config;
    cfg.beta = beta;
    std::vector<std::vector<double>> cos(pairs.size());
    const auto errors = parallel_for(pairs.size(), workers, [&](int w, std::size_t i) {
      AttackConfig c = cfg;
      c.seed = pair_seed(spec.seed, i);
      const auto& p = pairs[i];
      const auto r = run_attack(spec.kind, p.source, p.target, p.mask,
                                surrogates[w], c);
      for (const auto& v : victims[w]) {
        cos[i].push_back(
            cosine_similarity(v->embed(r.x_adv), v->embed(p.target)));
      }
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i].empty()) {
        std::ostringstream msg;
        msg << "beta=" << beta << ", pair " << i << ": " << errors[i];
        throw Error(ErrorCode::kModelFault, msg.str());
      }
    }
    SweepRow row;
    row.beta = beta;
    for (std::size_t v = 0; v < spec.victims.size(); ++v) {
      std::vector<double> col;
      for (const auto& c : cos) col.push_back(c[v]);
      double sum = 0.0;
      for (double x : col) sum += x;
      row.mean_cosine[spec.victims[v]] = sum / static_cast<double>(col.size());
      if (auto it = spec.thresholds.find(spec.victims[v]);
          it != spec.thresholds.end()) {
        row.asr[spec.victims[v]] = asr(col, it->second);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& t) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  out << "beta";
  for (const auto& v : t.victims) out << ",mean_cos_" << v << ",asr_" << v;
  out << "\n";
  for (const auto& r : t.rows) {
    out << r.beta;
    for (const auto& v : t.victims) {
      out << "," << r.mean_cosine.at(v) << ",";
      if (auto it = r.asr.find(v); it != r.asr.end()) out << it->second;
    }
    out << "\n";
  }
}

void write_sweep_svg(const std::filesystem::path& path, const SweepTable& t,
                     double band_lo, double band_hi) {
  constexpr double kW = 640, kH = 400, kL = 70, kR = 150, kT = 30, kB = 50;
  double bmin = std::min(0.0, band_lo), bmax = std::max(band_hi, 0.5);
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& r : t.rows) {
    bmin = std::min(bmin, r.beta);
    bmax = std::max(bmax, r.beta);
    for (const auto& [_, c] : r.mean_cosine) {
      ymin = std::min(ymin, c);
      ymax = std::max(ymax, c);
    }
  }
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  const double pad = std::max(0.02, 0.1 * (ymax - ymin));
  ymin -= pad;
  ymax += pad;
  auto px = [&](double b) { return kL + (b - bmin) / (bmax - bmin) * (kW - kL - kR); };
  auto py = [&](double c) { return kT + (ymax - c) / (ymax - ymin) * (kH - kT - kB); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
    << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect id=\"recommended-band\" x=\"" << px(band_lo) << "\" y=\"" << kT
    << "\" width=\"" << px(band_hi) - px(band_lo) << "\" height=\""
    << kH - kT - kB << "\" fill=\"#ffd54f\" fill-opacity=\"0.35\"/>\n";
  s << "<text x=\"" << (px(band_lo) + px(band_hi)) / 2 << "\" y=\"" << kT - 8
    << "\" text-anchor=\"middle\">recommended beta " << band_lo << "-" << band_hi
    << "</text>\n";
  s << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR
    << "\" y2=\"" << kH - kB << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\""
    << kH - kB << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double b = bmin + (bmax - bmin) * k / 5.0;
    const double c = ymin + (ymax - ymin) * k / 5.0;
    s << "<text x=\"" << px(b) << "\" y=\"" << kH - kB + 16
      << "\" text-anchor=\"middle\">" << std::round(b * 100) / 100 << "</text>\n";
    s << "<text x=\"" << kL - 6 << "\" y=\"" << py(c) + 4
      << "\" text-anchor=\"end\">" << std::round(c * 1000) / 1000 << "</text>\n";
  }
  s << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 10
    << "\" text-anchor=\"middle\">beta</text>\n";
  s << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
    << "\" transform=\"rotate(-90 16 " << (kT + kH - kB) / 2
    << ")\" text-anchor=\"middle\">mean cosine to target</text>\n";
  for (std::size_t v = 0; v < t.victims.size(); ++v) {
    const char* col = kColors[v % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : t.rows) {
      s << px(r.beta) << "," << py(r.mean_cosine.at(t.victims[v])) << " ";
    }
    s << "\"/>\n";
    for (const auto& r : t.rows) {
      s << "<circle cx=\"" << px(r.beta) << "\" cy=\""
        << py(r.mean_cosine.at(t.victims[v])) << "\" r=\"3\" fill=\"" << col
        << "\"/>\n";
    }
    s << "<text x=\"" << kW - kR + 10 << "\" y=\"" << kT + 16 * (v + 1)
      << "\" fill=\"" << col << "\">" << t.victims[v] << "</text>\n";
  }
  s << "</svg>\n";
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << s.str();
}

}  // namespace advmask
