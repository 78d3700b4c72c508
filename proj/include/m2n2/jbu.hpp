#pragma once

#include <cstddef>
#include <vector>

#include "m2n2/grid.hpp"

namespace m2n2 {

/// RGB guide image, interleaved, channel values in [0, 1].
struct GuideImage {
  int height = 0;
  int width = 0;
  std::vector<float> rgb;

  GuideImage() = default;
  GuideImage(int h, int w, std::vector<float> data);

  const float* pixel(int row, int col) const noexcept {
    return rgb.data() + (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                         static_cast<std::size_t>(col)) * 3;
  }
  friend bool operator==(const GuideImage&, const GuideImage&) = default;
};

struct JbuParams {
  double sigma_spatial = 1.0;  // in low-res cells
  double sigma_range = 0.1;    // in RGB units
  int radius = 2;              // window is (2r+1)^2 low-res cells
};

/// Guide color at the high-res center of low-res cell (row, col), bilinear.
void guide_at_cell_center(const GuideImage& guide, int low_h, int low_w, int row, int col, float rgb[3]);

/// Joint bilateral upsampling with dense low-res sampling and an isotropic
/// Gaussian range term over RGB. Window indices outside the grid are clamped
/// (replicate padding); spatial distances use the unclamped window position.
FloatMap jbu_upsample(const FloatMap& low, const GuideImage& guide, const JbuParams& params = {});

}  // namespace m2n2
