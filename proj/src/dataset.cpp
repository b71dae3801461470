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

#include "advmask/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "advmask/error.hpp"

namespace advmask {

namespace fs = std::filesystem;
using nlohmann::json;

void IdentityIndex::add(ImageRecord record) {
  for (const auto& [_, images] : identities_) {
    for (const auto& r : images) {
      if (r.id == record.id) {
        throw Error(ErrorCode::kDuplicateId, "duplicate image id: " + record.id);
      }
    }
  }
  auto& list = identities_[record.identity];
  list.push_back(std::move(record));
  std::ranges::sort(list, {}, &ImageRecord::id);
}

std::size_t IdentityIndex::image_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, images] : identities_) n += images.size();
  return n;
}

const ImageRecord& IdentityIndex::find(const std::string& image_id) const {
  for (const auto& [_, images] : identities_) {
    for (const auto& r : images) {
      if (r.id == image_id) return r;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown image id: " + image_id);
}

std::vector<ImageRecord> IdentityIndex::flagged() const {
  std::vector<ImageRecord> out;
  for (const auto& [_, images] : identities_) {
    for (const auto& r : images) {
      if (!r.attack_ready()) out.push_back(r);
    }
  }
  return out;
}

IdentityIndex IdentityIndex::attack_ready() const {
  IdentityIndex out;
  for (const auto& [_, images] : identities_) {
    for (const auto& r : images) {
      if (r.attack_ready()) out.add(r);
    }
  }
  return out;
}

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::ranges::transform(ext, ext.begin(),
                         [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

ImageRecord make_record(const std::string& identity, const fs::path& image) {
  ImageRecord r;
  r.identity = identity;
  r.id = identity + "/" + image.stem().string();
  r.image = image;
  fs::path sidecar = image.parent_path() / (image.stem().string() + ".landmarks.json");
  if (fs::is_regular_file(sidecar)) r.landmarks = sidecar;
  return r;
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::ranges::sort(out);
  return out;
}

IdentityIndex from_manifest(const fs::path& root, const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + manifest.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, "malformed manifest: " + std::string(e.what()));
  }
  IdentityIndex index;
  try {
    for (const auto& item : j.at("images")) {
      ImageRecord r;
      r.identity = item.at("identity").get<std::string>();
      r.image = root / item.at("image").get<std::string>();
      r.id = r.identity + "/" + r.image.stem().string();
      if (item.contains("landmarks") && !item["landmarks"].is_null()) {
        r.landmarks = root / item["landmarks"].get<std::string>();
      }
      index.add(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, "malformed manifest: " + std::string(e.what()));
  }
  if (index.identity_count() == 0) {
    throw Error(ErrorCode::kEmptyInput, "manifest lists no images");
  }
  return index;
}

}  // namespace

IdentityIndex ingest_dataset(const fs::path& root,
                             const std::optional<fs::path>& manifest) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::kIo, "dataset root does not exist: " + root.string());
  }
  if (manifest) return from_manifest(root, *manifest);

  IdentityIndex index;
  for (const auto& entry : sorted_entries(root)) {
    if (fs::is_directory(entry)) {
      const std::string identity = entry.filename().string();
      for (const auto& f : sorted_entries(entry)) {
        if (fs::is_regular_file(f) && is_image_file(f)) {
          index.add(make_record(identity, f));
        }
      }
    } else if (is_image_file(entry)) {
      // Loose images: one identity per image.
      index.add(make_record(entry.stem().string(), entry));
    }
  }
  if (index.identity_count() == 0) {
    throw Error(ErrorCode::kEmptyInput, "no images under " + root.string());
  }
  return index;
}

void write_manifest(const fs::path& path, const fs::path& root,
                    const IdentityIndex& index) {
  json images = json::array();
  for (const auto& [_, list] : index.identities()) {
    for (const auto& r : list) {
      json item{{"identity", r.identity},
                {"image", fs::relative(r.image, root).generic_string()}};
      item["landmarks"] = r.landmarks
          ? json(fs::relative(*r.landmarks, root).generic_string())
          : json(nullptr);
      images.push_back(std::move(item));
    }
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << json{{"images", images}}.dump(2) << "\n";
}

std::vector<IdentityPair> sample_pairs(const IdentityIndex& index, int count,
                                       std::mt19937_64& rng) {
  if (count < 0) throw Error(ErrorCode::kInvalidArgument, "negative pair count");
  std::vector<const std::vector<ImageRecord>*> ids;
  for (const auto& [_, images] : index.identities()) {
    if (!images.empty()) ids.push_back(&images);
  }
  if (ids.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "pair sampling needs at least two identities");
  }
  std::vector<IdentityPair> pairs;
  pairs.reserve(count);
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::uniform_int_distribution<std::size_t> other(0, ids.size() - 2);
  for (int k = 0; k < count; ++k) {
    const std::size_t t = pick(rng);
    std::size_t s = other(rng);
    if (s >= t) ++s;
    const auto& ti = *ids[t];
    const auto& si = *ids[s];
    const auto& timg =
        ti[std::uniform_int_distribution<std::size_t>(0, ti.size() - 1)(rng)];
    const auto& simg =
        si[std::uniform_int_distribution<std::size_t>(0, si.size() - 1)(rng)];
    pairs.push_back({timg.id, simg.id, timg.identity, simg.identity});
  }
  return pairs;
}

}  // namespace advmask
