#include <doctest.h>

#include <random>

#include "m2n2/error.hpp"
#include "m2n2/image_io.hpp"
#include "m2n2/rle.hpp"

using namespace m2n2;

TEST_CASE("RLE round trip starts with a zero run") {
  Mask m(3, 4, std::vector<std::uint8_t>{1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0});
  const auto runs = rle_encode(m);
  CHECK(runs == std::vector<std::uint32_t>{0, 2, 3, 3, 4});
  CHECK(rle_decode(runs, 3, 4) == m);
  CHECK(rle_encode(Mask(2, 2)) == std::vector<std::uint32_t>{4});
  CHECK_THROWS_AS(rle_decode({3}, 2, 2), ValidationError);
}

TEST_CASE("random masks survive RLE") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    Mask m(1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 30));
    for (auto& v : m.storage()) v = rng() % 3 == 0;
    CHECK(rle_decode(rle_encode(m), m.height(), m.width()) == m);
  }
}

TEST_CASE("PNG encode and decode round trip") {
  Image8 img{5, 7, 3, std::vector<std::uint8_t>(105)};
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 7);
  const auto back = decode_image(encode_png(img), 3);
  CHECK(back.height == 5);
  CHECK(back.width == 7);
  CHECK(back.data == img.data);

  Mask mask(4, 4);
  mask(1, 2) = 1;
  CHECK(mask_from_image(decode_image(encode_png(mask_to_image(mask)), 1)) == mask);
}

TEST_CASE("guide conversion keeps 8-bit values") {
  Image8 img{2, 2, 3, {0, 128, 255, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  CHECK(from_guide(to_guide(img)).data == img.data);
}

TEST_CASE("garbage image bytes are rejected") {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK_THROWS(decode_image(junk));
  std::vector<std::uint8_t> fake_jpeg{0xFF, 0xD8, 0xFF, 0xE0, 0, 0, 0, 0};
  CHECK_THROWS(decode_image(fake_jpeg));
}
