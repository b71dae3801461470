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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace advmask {

// One image of an ingested dataset. `id` is "<identity>/<stem>" and unique.
struct ImageRecord {
  std::string id;
  std::string identity;
  std::filesystem::path image;
  std::optional<std::filesystem::path> landmarks;

  bool attack_ready() const noexcept { return landmarks.has_value(); }
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

class IdentityIndex {
 public:
  void add(ImageRecord record);

  const std::map<std::string, std::vector<ImageRecord>>& identities() const {
    return identities_;
  }
  std::size_t identity_count() const noexcept { return identities_.size(); }
  std::size_t image_count() const noexcept;
  const ImageRecord& find(const std::string& image_id) const;
  // Images lacking a landmark sidecar.
  std::vector<ImageRecord> flagged() const;
  // Same index restricted to images with landmarks; identities left with no
  // image are dropped.
  IdentityIndex attack_ready() const;

  friend bool operator==(const IdentityIndex&, const IdentityIndex&) = default;

 private:
  std::map<std::string, std::vector<ImageRecord>> identities_;
};

// Walks root/<identity>/<image>.{png,jpg,jpeg} with <image>.landmarks.json
// sidecars. Image files directly under root each form their own identity.
// With a manifest the walk is skipped and the manifest is authoritative:
//   {"images": [{"identity": ..., "image": rel, "landmarks": rel|null}]}
IdentityIndex ingest_dataset(
    const std::filesystem::path& root,
    const std::optional<std::filesystem::path>& manifest = std::nullopt);

// Writes the manifest format read above, paths relative to root.
void write_manifest(const std::filesystem::path& path,
                    const std::filesystem::path& root,
                    const IdentityIndex& index);

struct IdentityPair {
  std::string target_image;  // image ids
  std::string source_image;
  std::string target_id;
  std::string source_id;
  friend bool operator==(const IdentityPair&, const IdentityPair&) = default;
};

// `count` pairs, each with distinct identities chosen uniformly, then an
// image uniformly within each identity. Draws with replacement.
std::vector<IdentityPair> sample_pairs(const IdentityIndex& index, int count,
                                       std::mt19937_64& rng);

}  // namespace advmask
