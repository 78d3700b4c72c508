#include "m2n2/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "m2n2/error.hpp"

namespace m2n2 {
namespace {

struct Rect {
  int row, col, h, w;
};

bool overlaps(const Rect& a, const Rect& b) {
  return a.row < b.row + b.h && b.row < a.row + a.h && a.col < b.col + b.w && b.col < a.col + a.w;
}

double color_distance(const std::array<float, 3>& a, const std::array<float, 3>& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

Mask partition_mask(const std::vector<int>& partition, int grid_h, int grid_w, int scale, int label) {
  Mask m(grid_h * scale, grid_w * scale, 0);
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      m(r, c) = partition[static_cast<std::size_t>((r / scale) * grid_w + c / scale)] == label ? 1 : 0;
  return m;
}

GuideImage paint_partition(const std::vector<int>& partition, int grid_h, int grid_w, int scale,
                           const std::vector<std::array<float, 3>>& colors) {
  const int H = grid_h * scale;
  const int W = grid_w * scale;
  std::vector<float> rgb(static_cast<std::size_t>(H) * W * 3);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const int label = partition[static_cast<std::size_t>((r / scale) * grid_w + c / scale)];
      const auto& color = colors.at(static_cast<std::size_t>(label));
      for (int ch = 0; ch < 3; ++ch) rgb[(static_cast<std::size_t>(r) * W + c) * 3 + ch] = color[ch];
    }
  return GuideImage(H, W, std::move(rgb));
}

SyntheticWorld make_world(std::uint64_t seed, const WorldOptions& options) {
  if (options.grid < 4 || options.scale < 1) throw ValidationError("world grid too small");
  if (options.min_regions < 1 || options.max_regions < options.min_regions)
    throw ValidationError("invalid region count range");
  std::mt19937_64 rng(seed);
  const int g = options.grid;
  const double cells = static_cast<double>(g) * g;

  std::uniform_int_distribution<int> count_dist(options.min_regions, options.max_regions);
  const int count = count_dist(rng);
  std::vector<Rect> rects;
  for (int attempt = 0; static_cast<int>(rects.size()) < count; ++attempt) {
    if (attempt > 20000) {
      // crowded layout: start over
      rects.clear();
      attempt = 0;
    }
    std::uniform_int_distribution<int> side(3, g - 2);
    Rect r{0, 0, side(rng), side(rng)};
    const double frac = r.h * r.w / cells;
    if (frac < options.min_region_fraction || frac > options.max_region_fraction) continue;
    std::uniform_int_distribution<int> row(0, g - r.h);
    std::uniform_int_distribution<int> col(0, g - r.w);
    r.row = row(rng);
    r.col = col(rng);
    if (std::any_of(rects.begin(), rects.end(), [&](const Rect& o) { return overlaps(r, o); })) continue;
    rects.push_back(r);
  }

  SyntheticWorld world;
  world.seed = seed;
  world.spec.h = static_cast<std::uint32_t>(g);
  world.spec.w = static_cast<std::uint32_t>(g);
  world.spec.partition.assign(static_cast<std::size_t>(g) * g, 0);
  for (std::size_t k = 0; k < rects.size(); ++k) {
    const Rect& r = rects[k];
    for (int y = r.row; y < r.row + r.h; ++y)
      for (int x = r.col; x < r.col + r.w; ++x)
        world.spec.partition[static_cast<std::size_t>(y * g + x)] = static_cast<int>(k) + 1;
  }
  std::uniform_real_distribution<double> mass(options.min_mass, options.max_mass);
  world.spec.in_region_mass = mass(rng);
  world.spec.noise_amplitude = options.noise_amplitude;
  world.spec.noise_seed = rng();
  world.stack = generate_synthetic_stack(world.spec);

  std::vector<std::array<float, 3>> colors;
  std::uniform_real_distribution<float> channel(0.05F, 0.95F);
  while (colors.size() < rects.size() + 1) {
    std::array<float, 3> c{channel(rng), channel(rng), channel(rng)};
    const bool distinct = std::all_of(colors.begin(), colors.end(), [&](const auto& o) {
      return color_distance(c, o) >= options.min_color_distance;
    });
    if (distinct) colors.push_back(c);
  }
  world.image = paint_partition(world.spec.partition, g, g, options.scale, colors);
  if (options.pixel_noise > 0.0) {
    std::uniform_real_distribution<float> jitter(static_cast<float>(-options.pixel_noise),
                                                 static_cast<float>(options.pixel_noise));
    for (float& v : world.image.rgb) v = std::clamp(v + jitter(rng), 0.0F, 1.0F);
  }
  for (std::size_t k = 0; k < rects.size(); ++k)
    world.objects.push_back(partition_mask(world.spec.partition, g, g, options.scale, static_cast<int>(k) + 1));
  return world;
}

}  // namespace m2n2
