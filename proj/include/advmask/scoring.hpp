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

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "advmask/image.hpp"
#include "advmask/model.hpp"

namespace advmask {

enum class VerifyOutcome { kScored, kFaceNotDetected };

struct VerificationScore {
  VerifyOutcome outcome = VerifyOutcome::kScored;
  double confidence = 0.0;  // [0, 100]; meaningful only when scored
  std::string backend;
  double latency_ms = 0.0;
  std::string raw;
};

class VerificationBackend {
 public:
  virtual ~VerificationBackend() = default;
  virtual const std::string& id() const = 0;
  // Confidence that a and b show the same person. Throws Error with a
  // kBackend* code on auth, rate-limit, transport or protocol failures.
  virtual VerificationScore verify(const FaceImage& a, const FaceImage& b) = 0;
};

using BackendHandle = std::shared_ptr<VerificationBackend>;

// Local stand-in: confidence = 50 * (cos(f(a), f(b)) + 1). Pure, unlimited.
BackendHandle make_mock_backend(EmbeddingModelHandle embedder,
                                std::string id = "mock");

// Token bucket: `rate` tokens per second, capacity `burst`. The clock and
// sleep hooks exist for tests.
class TokenBucket {
 public:
  using Clock = std::function<double()>;  // seconds
  using Sleep = std::function<void(double)>;

  TokenBucket(double rate, double burst, Clock clock = {}, Sleep sleep = {});
  bool try_acquire();
  void acquire();  // blocks until a token is available

 private:
  void refill();

  double rate_;
  double burst_;
  double tokens_;
  double last_;
  Clock clock_;
  Sleep sleep_;
  std::mutex mu_;
};

struct HttpRequest {
  std::string path;
  std::map<std::string, std::string> headers;
  // Multipart fields: name -> (content type, bytes).
  std::map<std::string, std::pair<std::string, std::string>> parts;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Throws Error(kBackendTransport) when no response arrives.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::unique_ptr<Transport> make_http_transport(const std::string& endpoint,
                                               int timeout_ms);

// Backend config file (JSON):
//   {"backends": [{"id", "kind": "http"|"mock", "endpoint", "path",
//                  "credential_env": [names...], "rate_limit", "burst",
//                  "model" (mock only), "timeout_ms"}]}
// Credentials are read from the named environment variables at
// construction; literal secrets in the file are rejected.
struct BackendConfig {
  std::string id;
  std::string kind = "http";
  std::string endpoint;
  std::string path = "/verify";
  std::vector<std::string> credential_env;
  double rate_limit = 5.0;  // requests per second
  double burst = 5.0;
  std::string model;
  int timeout_ms = 10000;
};

std::vector<BackendConfig> load_backend_configs(
    const std::filesystem::path& path);

struct RetryPolicy {
  int max_attempts = 3;
  double initial_backoff_s = 0.5;
  double multiplier = 2.0;
  std::function<void(double)> sleep;  // defaults to a real sleep
};

// HTTP client. Request: multipart with JPEG (quality 95) fields image_a and
// image_b, credentials as X-Credential-<n> headers. Response JSON:
// {"confidence": x} or {"error": "face_not_detected"}.
class HttpBackend final : public VerificationBackend {
 public:
  HttpBackend(BackendConfig config, std::unique_ptr<Transport> transport,
              RetryPolicy retry = {});

  const std::string& id() const override { return config_.id; }
  VerificationScore verify(const FaceImage& a, const FaceImage& b) override;

  int attempts_made() const noexcept { return attempts_; }

 private:
  BackendConfig config_;
  std::unique_ptr<Transport> transport_;
  RetryPolicy retry_;
  std::vector<std::string> credentials_;
  TokenBucket bucket_;
  int attempts_ = 0;
};

inline constexpr int kWireJpegQuality = 95;

// Interprets a backend response body; exposed for tests.
VerificationScore parse_verify_response(const std::string& backend,
                                        const std::string& body);

// Builds a backend by id. "mock" and "mock:<model>" need no config entry;
// the embedder comes from `models` (default: `default_model`).
BackendHandle create_backend(const std::string& id,
                             const std::vector<BackendConfig>& configs,
                             const ModelRegistry& models,
                             const std::string& default_model);

}  // namespace advmask
