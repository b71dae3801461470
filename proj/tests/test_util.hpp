#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "advmask/image.hpp"

namespace advmask::testing {

inline Image random_image(int w, int h, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image im(w, h, c);
  for (double& v : im.data()) v = u(rng);
  return im;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("advmask_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline const std::filesystem::path kDataDir = ADVMASK_TEST_DATA_DIR;

}  // namespace advmask::testing
