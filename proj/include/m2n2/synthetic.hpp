#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "m2n2/grid.hpp"
#include "m2n2/jbu.hpp"
#include "m2n2/tensor_io.hpp"

namespace m2n2 {

/// Random rectangular objects on a background, with matching attention.
struct WorldOptions {
  int grid = 32;   // attention cells per side
  int scale = 4;   // image pixels per cell
  int min_regions = 2;
  int max_regions = 5;
  double min_mass = 0.6;
  double max_mass = 0.9;
  double noise_amplitude = 0.1;
  double min_region_fraction = 0.03;
  double max_region_fraction = 0.35;
  double min_color_distance = 0.35;
  double pixel_noise = 0.02;
};

struct SyntheticWorld {
  std::uint64_t seed = 0;
  SyntheticSpec spec;  // label 0 is the background, objects are 1..K
  AttentionStack stack;
  GuideImage image;
  std::vector<Mask> objects;  // full-res mask per object, in label order
};

SyntheticWorld make_world(std::uint64_t seed, const WorldOptions& options = {});

/// Full-res mask of the cells carrying `label` in a row-major partition.
Mask partition_mask(const std::vector<int>& partition, int grid_h, int grid_w, int scale, int label);

/// Guide image painting each cell with the color of its label.
GuideImage paint_partition(const std::vector<int>& partition, int grid_h, int grid_w, int scale,
                           const std::vector<std::array<float, 3>>& colors);

}  // namespace m2n2
