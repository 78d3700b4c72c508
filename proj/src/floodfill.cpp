#include "m2n2/floodfill.hpp"

#include <cmath>
#include <cstdint>
#include <queue>

namespace m2n2 {
namespace {

struct Entry {
  float threshold;
  std::uint64_t seq;
  std::uint32_t index;
};

struct Later {
  bool operator()(const Entry& a, const Entry& b) const noexcept {
    if (a.threshold != b.threshold) return a.threshold > b.threshold;
    return a.seq > b.seq;
  }
};

}  // namespace

FloatMap flood_fill_minimax(const FloatMap& map, Pixel start, std::vector<float>* popped) {
  if (!map.contains(start)) throw ValidationError("flood fill start pixel is out of bounds");
  for (float v : map.values()) {
    if (!std::isfinite(v)) throw ValidationError("flood fill input contains non-finite values");
  }
  const int height = map.height();
  const int width = map.width();
  const float origin = map(start.y, start.x);

  FloatMap out(height, width, 0.0F);
  // 0 = untouched, 1 = queued, 2 = final
  std::vector<std::uint8_t> state(map.size(), 0);
  std::priority_queue<Entry, std::vector<Entry>, Later> queue;
  std::uint64_t seq = 0;
  const auto start_index = static_cast<std::uint32_t>(map.index(start.y, start.x));
  queue.push({0.0F, seq++, start_index});
  state[start_index] = 1;
  if (popped) popped->clear();

  while (!queue.empty()) {
    const Entry e = queue.top();
    queue.pop();
    out[e.index] = e.threshold;
    state[e.index] = 2;
    if (popped) popped->push_back(e.threshold);

    const int row = static_cast<int>(e.index / static_cast<std::uint32_t>(width));
    const int col = static_cast<int>(e.index % static_cast<std::uint32_t>(width));
    const int nr[4] = {row - 1, row + 1, row, row};
    const int nc[4] = {col, col, col - 1, col + 1};
    for (int d = 0; d < 4; ++d) {
      if (!map.contains(nr[d], nc[d])) continue;
      const auto idx = static_cast<std::uint32_t>(map.index(nr[d], nc[d]));
      if (state[idx] != 0) continue;
      // thresholds leave the queue in non-decreasing order, so the first
      // discovery of a pixel already carries its minimax value
      const float step = std::abs(map[idx] - origin);
      queue.push({e.threshold > step ? e.threshold : step, seq++, idx});
      state[idx] = 1;
    }
  }
  return out;
}

}  // namespace m2n2
