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

#include "advmask/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <thread>

#include "advmask/error.hpp"

namespace advmask {

LoadedFace load_face(const ImageRecord& record, int canvas) {
  LoadedFace out;
  Image raw = read_image(record.image, 3);
  if (record.landmarks) out.landmarks = read_landmarks(*record.landmarks);
  if (canvas == 0 || (raw.width() == canvas && raw.height() == canvas)) {
    out.image = std::move(raw);
    return out;
  }
  if (!out.landmarks) {
    throw Error(ErrorCode::kIo, "image " + record.id + " is " +
                                    std::to_string(raw.width()) + "x" +
                                    std::to_string(raw.height()) +
                                    " and has no landmark sidecar to align it");
  }
  auto aligned = align_face(raw, *out.landmarks,
                            canonical_landmarks(canvas, canvas), canvas, canvas);
  out.image = std::move(aligned.image);
  out.landmarks = std::move(aligned.landmarks);
  return out;
}

PreparedPair prepare_pair(const IdentityIndex& index, const IdentityPair& pair,
                          int canvas, const BinaryMask& mask_template) {
  const auto& src_rec = index.find(pair.source_image);
  if (!src_rec.landmarks) {
    throw Error(ErrorCode::kIo, "source image " + src_rec.id +
                                    " has no landmark sidecar");
  }
  auto src = load_face(src_rec, canvas);
  auto tgt = load_face(index.find(pair.target_image), canvas);
  if (!src.image.same_shape(tgt.image)) {
    require_same_shape(src.image, tgt.image, "source/target");
  }
  const int w = src.image.width(), h = src.image.height();
  const BinaryMask m0 = mask_template.width() > 0
                            ? mask_template
                            : default_mask_template(w, h);
  PreparedPair p;
  p.pair = pair;
  p.mask = gen_mask(m0, canonical_landmarks(w, h), *src.landmarks);
  p.source = std::move(src.image);
  p.target = std::move(tgt.image);
  p.source_landmarks = std::move(*src.landmarks);
  return p;
}

std::uint64_t pair_seed(std::uint64_t run_seed, std::size_t pair_index) {
  std::uint64_t z = run_seed + 0x9E3779B97F4A7C15ULL * (pair_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::string> parallel_for(
    std::size_t n, int workers,
    const std::function<void(int, std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  auto run_one = [&](int w, std::size_t i) {
    try {
      fn(w, i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  };
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(0, i);
    return errors;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) run_one(w, i);
    });
  }
  for (auto& t : pool) t.join();
  return errors;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace advmask
