#include "m2n2/jbu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "m2n2/error.hpp"

namespace m2n2 {

GuideImage::GuideImage(int h, int w, std::vector<float> data) : height(h), width(w), rgb(std::move(data)) {
  if (h <= 0 || w <= 0) throw ValidationError("guide image must be non-empty");
  if (rgb.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 3)
    throw ValidationError("guide image data does not match H x W x 3");
  for (float v : rgb) {
    if (!(v >= 0.0F && v <= 1.0F)) throw ValidationError("guide image values must lie in [0, 1]");
  }
}

void guide_at_cell_center(const GuideImage& guide, int low_h, int low_w, int row, int col, float rgb[3]) {
  const double y = (row + 0.5) * guide.height / low_h - 0.5;
  const double x = (col + 0.5) * guide.width / low_w - 0.5;
  const double yc = std::clamp(y, 0.0, static_cast<double>(guide.height - 1));
  const double xc = std::clamp(x, 0.0, static_cast<double>(guide.width - 1));
  const int y0 = static_cast<int>(std::floor(yc));
  const int x0 = static_cast<int>(std::floor(xc));
  const int y1 = std::min(y0 + 1, guide.height - 1);
  const int x1 = std::min(x0 + 1, guide.width - 1);
  const double fy = yc - y0;
  const double fx = xc - x0;
  for (int ch = 0; ch < 3; ++ch) {
    const double top = (1 - fx) * guide.pixel(y0, x0)[ch] + fx * guide.pixel(y0, x1)[ch];
    const double bottom = (1 - fx) * guide.pixel(y1, x0)[ch] + fx * guide.pixel(y1, x1)[ch];
    rgb[ch] = static_cast<float>((1 - fy) * top + fy * bottom);
  }
}

FloatMap jbu_upsample(const FloatMap& low, const GuideImage& guide, const JbuParams& params) {
  if (!(params.sigma_spatial > 0.0) || !(params.sigma_range > 0.0))
    throw ValidationError("JBU sigmas must be positive");
  if (params.radius < 0) throw ValidationError("JBU radius must be non-negative");
  const int h = low.height();
  const int w = low.width();
  const int H = guide.height;
  const int W = guide.width;
  if (h <= 0 || w <= 0) throw ValidationError("low-res map must be non-empty");
  if (h > H || w > W) throw ValidationError("low-res map is larger than the guide image");

  std::vector<float> low_rgb(static_cast<std::size_t>(h) * w * 3);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) guide_at_cell_center(guide, h, w, r, c, &low_rgb[(static_cast<std::size_t>(r) * w + c) * 3]);

  const int radius = params.radius;
  const int side = 2 * radius + 1;
  const double inv_2ss = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
  const double inv_2sr = 1.0 / (2.0 * params.sigma_range * params.sigma_range);
  const double sx = static_cast<double>(w) / W;
  const double sy = static_cast<double>(h) / H;

  FloatMap out(H, W);
  std::vector<double> log_weight(static_cast<std::size_t>(side) * side);
  std::vector<float> value(log_weight.size());
  for (int qy = 0; qy < H; ++qy) {
    const double ly = (qy + 0.5) * sy - 0.5;
    const int cy = static_cast<int>(std::floor(ly + 0.5));
    for (int qx = 0; qx < W; ++qx) {
      const double lx = (qx + 0.5) * sx - 0.5;
      const int cx = static_cast<int>(std::floor(lx + 0.5));
      const float* q_rgb = guide.pixel(qy, qx);

      double top = -std::numeric_limits<double>::infinity();
      std::size_t slot = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int py = cy + dy;
        const int ry = std::clamp(py, 0, h - 1);
        for (int dx = -radius; dx <= radius; ++dx, ++slot) {
          const int px = cx + dx;
          const int rx = std::clamp(px, 0, w - 1);
          const double ddx = px - lx;
          const double ddy = py - ly;
          const float* p_rgb = &low_rgb[(static_cast<std::size_t>(ry) * w + rx) * 3];
          const double dr = static_cast<double>(q_rgb[0]) - p_rgb[0];
          const double dg = static_cast<double>(q_rgb[1]) - p_rgb[1];
          const double db = static_cast<double>(q_rgb[2]) - p_rgb[2];
          const double lw = -(ddx * ddx + ddy * ddy) * inv_2ss - (dr * dr + dg * dg + db * db) * inv_2sr;
          log_weight[slot] = lw;
          value[slot] = low(ry, rx);
          top = std::max(top, lw);
        }
      }
      // weights relative to the largest one, so the sum is never zero; values
      // relative to the window center so constant maps come out exact
      const double center = low(std::clamp(cy, 0, h - 1), std::clamp(cx, 0, w - 1));
      double num = 0.0;
      double den = 0.0;
      for (std::size_t s = 0; s < log_weight.size(); ++s) {
        const double wgt = std::exp(log_weight[s] - top);
        num += wgt * (value[s] - center);
        den += wgt;
      }
      out(qy, qx) = static_cast<float>(center + num / den);
    }
  }
  return out;
}

}  // namespace m2n2
