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

#include "advmask/report.hpp"

#include <fstream>
#include <set>

#include "advmask/error.hpp"
#include "advmask/metrics.hpp"

namespace advmask {

using nlohmann::json;

void EvaluationReport::recompute() {
  for (auto& row : rows) {
    row.success.clear();
    for (const auto& [model, cos] : row.cosine_per_model) {
      if (auto it = thresholds.find(model); it != thresholds.end()) {
        row.success[model] = cos > it->second;
      }
    }
  }
  asr.clear();
  std::map<std::string, std::vector<double>> cos_by_model;
  std::map<std::string, std::vector<double>> conf_by_backend;
  std::map<std::string, BackendAggregate> agg;
  for (const auto& row : rows) {
    for (const auto& [model, cos] : row.cosine_per_model) {
      cos_by_model[model].push_back(cos);
    }
    for (const auto& [backend, conf] : row.confidence_per_backend) {
      auto& a = agg[backend];
      if (conf) {
        conf_by_backend[backend].push_back(*conf);
        ++a.scored;
      } else {
        ++a.face_not_detected;
      }
    }
    for (const auto& [backend, _] : row.backend_errors) ++agg[backend].failed;
  }
  for (const auto& [model, cosines] : cos_by_model) {
    if (auto it = thresholds.find(model); it != thresholds.end()) {
      asr[model] = advmask::asr(cosines, it->second);
    }
  }
  for (auto& [backend, a] : agg) {
    if (auto it = conf_by_backend.find(backend); it != conf_by_backend.end()) {
      a.mcs = mcs(it->second);
    }
  }
  backends = std::move(agg);
}

bool EvaluationReport::self_consistent() const {
  EvaluationReport copy = *this;
  copy.recompute();
  if (copy.asr != asr) return false;
  if (copy.backends.size() != backends.size()) return false;
  for (const auto& [id, a] : backends) {
    auto it = copy.backends.find(id);
    if (it == copy.backends.end()) return false;
    const auto& b = it->second;
    if (a.mcs != b.mcs || a.scored != b.scored ||
        a.face_not_detected != b.face_not_detected || a.failed != b.failed) {
      return false;
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].success != copy.rows[i].success) return false;
  }
  return true;
}

json to_json(const EvaluationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json conf = json::object();
    for (const auto& [b, c] : row.confidence_per_backend) {
      conf[b] = c ? json(*c) : json(nullptr);
    }
    rows.push_back({{"target_image", row.pair.target_image},
                    {"source_image", row.pair.source_image},
                    {"target_id", row.pair.target_id},
                    {"source_id", row.pair.source_id},
                    {"artifact", row.artifact},
                    {"cosine", row.cosine_per_model},
                    {"confidence", conf},
                    {"backend_errors", row.backend_errors},
                    {"success", row.success}});
  }
  json backends = json::object();
  for (const auto& [id, a] : r.backends) {
    backends[id] = {{"mcs", a.mcs ? json(*a.mcs) : json(nullptr)},
                    {"scored", a.scored},
                    {"face_not_detected", a.face_not_detected},
                    {"failed", a.failed}};
  }
  return {{"rows", rows},
          {"thresholds", r.thresholds},
          {"asr", r.asr},
          {"backends", backends},
          {"config", r.config}};
}

EvaluationReport report_from_json(const json& j) {
  EvaluationReport r;
  try {
    for (const auto& jr : j.at("rows")) {
      PairRow row;
      row.pair = {jr.at("target_image"), jr.at("source_image"),
                  jr.at("target_id"), jr.at("source_id")};
      row.artifact = jr.value("artifact", "");
      row.cosine_per_model = jr.at("cosine").get<std::map<std::string, double>>();
      for (const auto& [b, c] : jr.at("confidence").items()) {
        row.confidence_per_backend[b] =
            c.is_null() ? std::nullopt : std::optional<double>(c.get<double>());
      }
      row.backend_errors =
          jr.value("backend_errors", std::map<std::string, std::string>{});
      row.success = jr.at("success").get<std::map<std::string, bool>>();
      r.rows.push_back(std::move(row));
    }
    r.thresholds = j.at("thresholds").get<std::map<std::string, double>>();
    r.asr = j.at("asr").get<std::map<std::string, double>>();
    for (const auto& [id, a] : j.at("backends").items()) {
      BackendAggregate b;
      if (!a.at("mcs").is_null()) b.mcs = a["mcs"].get<double>();
      b.scored = a.at("scored");
      b.face_not_detected = a.at("face_not_detected");
      b.failed = a.at("failed");
      r.backends[id] = b;
    }
    r.config = j.value("config", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_report_json(const std::filesystem::path& path,
                       const EvaluationReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json(report).dump(2) << "\n";
}

EvaluationReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed report: ") + e.what());
  }
  return report_from_json(j);
}

void write_report_csv(const std::filesystem::path& path,
                      const EvaluationReport& report) {
  std::set<std::string> models, backends;
  for (const auto& row : report.rows) {
    for (const auto& [m, _] : row.cosine_per_model) models.insert(m);
    for (const auto& [b, _] : row.confidence_per_backend) backends.insert(b);
    for (const auto& [b, _] : row.backend_errors) backends.insert(b);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  out << "target_image,source_image,target_id,source_id";
  for (const auto& m : models) out << ",cos_" << m << ",success_" << m;
  for (const auto& b : backends) out << ",conf_" << b;
  out << "\n";
  for (const auto& row : report.rows) {
    out << row.pair.target_image << "," << row.pair.source_image << ","
        << row.pair.target_id << "," << row.pair.source_id;
    for (const auto& m : models) {
      auto c = row.cosine_per_model.find(m);
      auto s = row.success.find(m);
      out << ",";
      if (c != row.cosine_per_model.end()) out << c->second;
      out << ",";
      if (s != row.success.end()) out << (s->second ? 1 : 0);
    }
    for (const auto& b : backends) {
      out << ",";
      if (row.backend_errors.contains(b)) {
        out << "error";
      } else if (auto c = row.confidence_per_backend.find(b);
                 c != row.confidence_per_backend.end()) {
        if (c->second) {
          out << *c->second;
        } else {
          out << "no_face";
        }
      }
    }
    out << "\n";
  }
}

ImpostorMode parse_impostor_mode(const std::string& s) {
  if (s == "all") return ImpostorMode::kAllPairs;
  if (s == "sampled") return ImpostorMode::kSampled;
  throw Error(ErrorCode::kInvalidArgument, "unknown impostor mode: " + s);
}

std::vector<double> impostor_scores(std::span<const LabelledEmbedding> items,
                                    ImpostorMode mode, int sample_count,
                                    std::mt19937_64& rng) {
  std::vector<double> scores;
  if (mode == ImpostorMode::kAllPairs) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        if (items[i].identity != items[j].identity) {
          scores.push_back(
              cosine_similarity(items[i].embedding, items[j].embedding));
        }
      }
    }
  } else {
    std::set<std::string> ids;
    for (const auto& it : items) ids.insert(it.identity);
    if (ids.size() < 2) {
      throw Error(ErrorCode::kInsufficientData,
                  "impostor sampling needs two identities");
    }
    std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
    while (static_cast<int>(scores.size()) < sample_count) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (items[i].identity == items[j].identity) continue;
      scores.push_back(cosine_similarity(items[i].embedding, items[j].embedding));
    }
  }
  if (scores.empty()) {
    throw Error(ErrorCode::kInsufficientData, "no impostor pairs available");
  }
  return scores;
}

}  // namespace advmask
