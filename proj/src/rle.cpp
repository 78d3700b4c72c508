#include "m2n2/rle.hpp"

#include "m2n2/error.hpp"

namespace m2n2 {

std::vector<std::uint32_t> rle_encode(const Mask& mask) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t length = 0;
  for (std::uint8_t v : mask.values()) {
    const std::uint8_t bit = v ? 1 : 0;
    if (bit != current) {
      runs.push_back(length);
      current = bit;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

Mask rle_decode(const std::vector<std::uint32_t>& runs, int height, int width) {
  Mask mask(height, width, 0);
  std::size_t pos = 0;
  std::uint8_t bit = 0;
  for (std::uint32_t run : runs) {
    if (run > mask.size() - pos) throw ValidationError("run lengths exceed the mask size");
    for (std::uint32_t i = 0; i < run; ++i) mask[pos++] = bit;
    bit ^= 1;
  }
  if (pos != mask.size()) throw ValidationError("run lengths do not cover the mask");
  return mask;
}

}  // namespace m2n2
