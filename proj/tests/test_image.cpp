#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "advmask/error.hpp"
#include "advmask/image.hpp"
#include "test_util.hpp"

using namespace advmask;
using advmask::testing::random_image;
using advmask::testing::scratch_dir;

TEST_CASE("image layout is interleaved HWC") {
  Image im(4, 3, 3);
  im.at(2, 1, 1) = 0.5;
  CHECK(im.data()[(1 * 4 + 2) * 3 + 1] == 0.5);
  CHECK(im.size() == 36);
}

TEST_CASE("range and finiteness helpers") {
  Image im(2, 2, 1, 0.5);
  CHECK(in_unit_range(im));
  im.at(0, 0, 0) = 1.5;
  CHECK_FALSE(in_unit_range(im));
  im.at(0, 0, 0) = std::nan("");
  CHECK_FALSE(all_finite(im));
  CHECK_THROWS_AS(require_same_shape(Image(2, 2, 1), Image(2, 3, 1), "t"), Error);
}

TEST_CASE("PNG round trip keeps 8-bit values and channel order") {
  const auto dir = scratch_dir("image_png");
  Image im(5, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      im.at(x, y, 0) = (x * 40) / 255.0;
      im.at(x, y, 1) = (y * 60) / 255.0;
      im.at(x, y, 2) = 200 / 255.0;
    }
  write_image(dir / "a.png", im);
  const Image back = read_image(dir / "a.png", 3);
  CHECK(max_abs_diff(im, back) < 1e-12);
}

TEST_CASE("JPEG encode/decode at high quality stays close") {
  Image im(32, 32, 3, 0.4);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) im.at(x, y, 0) = x / 31.0;
  const auto bytes = encode_jpeg(im, 95);
  CHECK(bytes.size() > 100);
  const Image back = decode_image(bytes, 3);
  CHECK(back.width() == 32);
  CHECK(max_abs_diff(im, back) < 0.05);
}

TEST_CASE("reading a missing file is an I/O error") {
  try {
    read_image("/nonexistent/nothing.png");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("max_abs_diff") {
  const Image a = random_image(3, 3, 3, 1);
  Image b = a;
  b.at(1, 1, 2) += 0.25;
  CHECK(max_abs_diff(a, b) == doctest::Approx(0.25));
}
