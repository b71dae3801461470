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

#include "advmask/scoring.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "advmask/error.hpp"

namespace advmask {

using nlohmann::json;

namespace {

class MockBackend final : public VerificationBackend {
 public:
  MockBackend(EmbeddingModelHandle model, std::string id)
      : model_(std::move(model)), id_(std::move(id)) {
    if (!model_) throw Error(ErrorCode::kInvalidArgument, "mock backend needs a model");
  }
  const std::string& id() const override { return id_; }
  VerificationScore verify(const FaceImage& a, const FaceImage& b) override {
    const double c = cosine_similarity(model_->embed(a), model_->embed(b));
    VerificationScore s;
    s.confidence = std::clamp(50.0 * (c + 1.0), 0.0, 100.0);
    s.backend = id_;
    return s;
  }

 private:
  EmbeddingModelHandle model_;
  std::string id_;
};

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void real_sleep(double seconds) {
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

class HttplibTransport final : public Transport {
 public:
  HttplibTransport(const std::string& endpoint, int timeout_ms)
      : client_(endpoint) {
    if (!client_.is_valid()) {
      throw Error(ErrorCode::kConfiguration, "invalid endpoint: " + endpoint);
    }
    const auto t = std::chrono::milliseconds(timeout_ms);
    client_.set_connection_timeout(t);
    client_.set_read_timeout(t);
    client_.set_write_timeout(t);
  }

  HttpResponse post(const HttpRequest& request) override {
    httplib::Headers headers(request.headers.begin(), request.headers.end());
    httplib::MultipartFormDataItems items;
    for (const auto& [name, part] : request.parts) {
      items.push_back({name, part.second, name + ".jpg", part.first});
    }
    std::lock_guard lock(mu_);
    auto res = client_.Post(request.path, headers, items);
    if (!res) {
      throw Error(ErrorCode::kBackendTransport,
                  "request failed: " + httplib::to_string(res.error()));
    }
    return {res->status, res->body};
  }

 private:
  httplib::Client client_;
  std::mutex mu_;
};

bool looks_like_secret_key(const std::string& key) {
  for (const char* bad : {"api_key", "apikey", "secret", "token", "password"}) {
    if (key.find(bad) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

BackendHandle make_mock_backend(EmbeddingModelHandle embedder, std::string id) {
  return std::make_shared<MockBackend>(std::move(embedder), std::move(id));
}

TokenBucket::TokenBucket(double rate, double burst, Clock clock, Sleep sleep)
    : rate_(rate),
      burst_(burst),
      tokens_(burst),
      clock_(clock ? std::move(clock) : Clock(steady_seconds)),
      sleep_(sleep ? std::move(sleep) : Sleep(real_sleep)) {
  if (!(rate > 0.0) || !(burst >= 1.0)) {
    throw Error(ErrorCode::kConfiguration,
                "rate limit needs rate > 0 and burst >= 1");
  }
  last_ = clock_();
}

void TokenBucket::refill() {
  const double now = clock_();
  tokens_ = std::min(burst_, tokens_ + (now - last_) * rate_);
  last_ = now;
}

bool TokenBucket::try_acquire() {
  std::lock_guard lock(mu_);
  refill();
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void TokenBucket::acquire() {
  for (;;) {
    double wait;
    {
      std::lock_guard lock(mu_);
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = (1.0 - tokens_) / rate_;
    }
    sleep_(wait);
  }
}

std::unique_ptr<Transport> make_http_transport(const std::string& endpoint,
                                               int timeout_ms) {
  return std::make_unique<HttplibTransport>(endpoint, timeout_ms);
}

std::vector<BackendConfig> load_backend_configs(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfiguration, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration,
                "malformed backend config: " + std::string(e.what()));
  }
  std::vector<BackendConfig> out;
  try {
    for (const auto& jb : j.at("backends")) {
      for (const auto& [key, _] : jb.items()) {
        if (looks_like_secret_key(key)) {
          throw Error(ErrorCode::kConfiguration,
                      "backend config field '" + key +
                          "' looks like a credential; use credential_env");
        }
      }
      BackendConfig c;
      c.id = jb.at("id");
      c.kind = jb.value("kind", c.kind);
      c.endpoint = jb.value("endpoint", "");
      c.path = jb.value("path", c.path);
      c.credential_env = jb.value("credential_env", c.credential_env);
      c.rate_limit = jb.value("rate_limit", c.rate_limit);
      c.burst = jb.value("burst", c.burst);
      c.model = jb.value("model", "");
      c.timeout_ms = jb.value("timeout_ms", c.timeout_ms);
      if (c.kind != "http" && c.kind != "mock") {
        throw Error(ErrorCode::kConfiguration, "unknown backend kind: " + c.kind);
      }
      out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration,
                "malformed backend config: " + std::string(e.what()));
  }
  return out;
}

VerificationScore parse_verify_response(const std::string& backend,
                                        const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    throw Error(ErrorCode::kBackendProtocol, backend + ": response is not JSON");
  }
  VerificationScore s;
  s.backend = backend;
  s.raw = body;
  if (j.contains("error")) {
    if (j["error"] == "face_not_detected") {
      s.outcome = VerifyOutcome::kFaceNotDetected;
      return s;
    }
    throw Error(ErrorCode::kBackendProtocol,
                backend + ": backend error " + j["error"].dump());
  }
  if (!j.contains("confidence") || !j["confidence"].is_number()) {
    throw Error(ErrorCode::kBackendProtocol, backend + ": missing confidence");
  }
  s.confidence = j["confidence"].get<double>();
  if (!(s.confidence >= 0.0 && s.confidence <= 100.0)) {
    throw Error(ErrorCode::kBackendProtocol,
                backend + ": confidence out of range: " + j["confidence"].dump());
  }
  return s;
}

HttpBackend::HttpBackend(BackendConfig config,
                         std::unique_ptr<Transport> transport, RetryPolicy retry)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      retry_(std::move(retry)),
      bucket_(config_.rate_limit, config_.burst) {
  if (!transport_) throw Error(ErrorCode::kConfiguration, "no transport");
  if (!retry_.sleep) retry_.sleep = real_sleep;
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
  for (const auto& name : config_.credential_env) {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) {
      throw Error(ErrorCode::kBackendAuth, config_.id +
                                               ": credential variable " + name +
                                               " is not set");
    }
    credentials_.emplace_back(v);
  }
}

VerificationScore HttpBackend::verify(const FaceImage& a, const FaceImage& b) {
  HttpRequest req;
  req.path = config_.path;
  for (std::size_t i = 0; i < credentials_.size(); ++i) {
    req.headers["X-Credential-" + std::to_string(i)] = credentials_[i];
  }
  auto jpeg = [](const FaceImage& im) {
    const auto bytes = encode_jpeg(im, kWireJpegQuality);
    return std::pair<std::string, std::string>(
        "image/jpeg", std::string(bytes.begin(), bytes.end()));
  };
  req.parts["image_a"] = jpeg(a);
  req.parts["image_b"] = jpeg(b);

  double backoff = retry_.initial_backoff_s;
  for (int attempt = 1;; ++attempt) {
    bucket_.acquire();
    ++attempts_;
    const auto t0 = std::chrono::steady_clock::now();
    ErrorCode failure = ErrorCode::kBackendTransport;
    std::string detail;
    try {
      const HttpResponse res = transport_->post(req);
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      if (res.status == 401 || res.status == 403) {
        throw Error(ErrorCode::kBackendAuth,
                    config_.id + ": authentication failed (HTTP " +
                        std::to_string(res.status) + ")");
      }
      if (res.status == 200) {
        auto s = parse_verify_response(config_.id, res.body);
        s.latency_ms = ms;
        return s;
      }
      if (res.status == 429) {
        failure = ErrorCode::kBackendRateLimit;
      } else if (res.status >= 500) {
        failure = ErrorCode::kBackendTransport;
      } else {
        throw Error(ErrorCode::kBackendProtocol,
                    config_.id + ": unexpected HTTP " + std::to_string(res.status));
      }
      detail = "HTTP " + std::to_string(res.status);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBackendTransport) throw;
      failure = e.code();
      detail = e.what();
    }
    if (attempt >= retry_.max_attempts) {
      throw Error(failure, config_.id + ": giving up after " +
                               std::to_string(attempt) + " attempts (" +
                               detail + ")");
    }
    retry_.sleep(backoff);
    backoff *= retry_.multiplier;
  }
}

BackendHandle create_backend(const std::string& id,
                             const std::vector<BackendConfig>& configs,
                             const ModelRegistry& models,
                             const std::string& default_model) {
  auto mock_for = [&](const std::string& model, const std::string& name) {
    if (!models.contains(model)) {
      throw Error(ErrorCode::kConfiguration,
                  "mock backend '" + name + "' names unknown model '" + model + "'");
    }
    return make_mock_backend(models.create(model), name);
  };
  for (const auto& c : configs) {
    if (c.id != id) continue;
    if (c.kind == "mock") return mock_for(c.model.empty() ? default_model : c.model, id);
    return std::make_shared<HttpBackend>(c, make_http_transport(c.endpoint, c.timeout_ms));
  }
  if (id == "mock") return mock_for(default_model, id);
  if (id.starts_with("mock:")) return mock_for(id.substr(5), id);
  throw Error(ErrorCode::kConfiguration, "unknown backend: " + id);
}

}  // namespace advmask
