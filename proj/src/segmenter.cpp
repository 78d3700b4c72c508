#include "m2n2/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "m2n2/error.hpp"
#include "m2n2/floodfill.hpp"

namespace m2n2 {
namespace {

const PromptPoint& find_point(std::span<const PromptPoint> points, int id) {
  for (const auto& p : points) {
    if (p.id == id) return p;
  }
  throw ValidationError("no prompt point with id " + std::to_string(id));
}

/// Smallest g with lambda_at(g) >= v, or grid_size if there is none.
int first_index(double v, int grid_size) noexcept {
  if (!(v <= 1.0)) return grid_size;  // also catches NaN
  int g = static_cast<int>(std::ceil(v * grid_size)) - 1;
  g = std::clamp(g, 0, grid_size - 1);
  while (g > 0 && lambda_at(g - 1, grid_size) >= v) --g;
  while (g < grid_size && lambda_at(g, grid_size) < v) ++g;
  return g;
}

}  // namespace

double lambda_at(int g, int grid_size) noexcept {
  return static_cast<double>(g + 1) / static_cast<double>(grid_size);
}

Grid<double> sobel_magnitude(const FloatMap& map) {
  const int h = map.height();
  const int w = map.width();
  Grid<double> out(h, w, 0.0);
  auto at = [&](int r, int c) -> double {
    return map(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1));
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
      out(r, c) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

ThresholdScore evaluate_scores(const FloatMap& map, double lambda, std::span<const PromptPoint> points, int id) {
  const PromptPoint& self = find_point(points, id);
  const int h = map.height();
  const int w = map.width();
  const auto sobel = sobel_magnitude(map);
  auto inside = [&](int r, int c) { return static_cast<double>(map(r, c)) <= lambda; };

  std::size_t size = 0;
  std::size_t boundary = 0;
  double edge_sum = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!inside(r, c)) continue;
      ++size;
      const bool edge = (r > 0 && !inside(r - 1, c)) || (r + 1 < h && !inside(r + 1, c)) ||
                        (c > 0 && !inside(r, c - 1)) || (c + 1 < w && !inside(r, c + 1));
      if (edge) {
        ++boundary;
        edge_sum += sobel(r, c);
      }
    }
  }

  ThresholdScore s;
  s.lambda = lambda;
  s.s_prior = static_cast<double>(size) / (static_cast<double>(h) * w) < kSegmentSizePrior ? 1.0 : 0.0;
  s.s_edge = boundary > 0 ? edge_sum / static_cast<double>(boundary) : 0.0;
  std::size_t same = 0;
  std::size_t same_inside = 0;
  bool opposite_inside = false;
  for (const auto& p : points) {
    const bool in = map.contains(p.pixel()) && inside(p.y, p.x);
    if (p.label == self.label) {
      ++same;
      same_inside += in ? 1 : 0;
    } else if (in) {
      opposite_inside = true;
    }
  }
  s.s_pos = static_cast<double>(same_inside) / static_cast<double>(same);
  s.s_neg = opposite_inside ? 0.0 : 1.0;
  s.total = s.s_prior * s.s_edge * s.s_pos * s.s_neg;
  return s;
}

void build_threshold_tables(PointMap& pm, int grid_size) {
  if (grid_size < 1) throw ValidationError("lambda grid size must be positive");
  const FloatMap& map = pm.map;
  const int h = map.height();
  const int w = map.width();
  const auto sobel = sobel_magnitude(map);

  std::vector<std::int64_t> size_diff(static_cast<std::size_t>(grid_size) + 1, 0);
  std::vector<std::int64_t> count_diff(size_diff.size(), 0);
  std::vector<double> sum_diff(size_diff.size(), 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double v = map(r, c);
      const int enter = first_index(v, grid_size);
      if (enter == grid_size) continue;
      ++size_diff[static_cast<std::size_t>(enter)];
      double neighbor_max = -std::numeric_limits<double>::infinity();
      if (r > 0) neighbor_max = std::max(neighbor_max, static_cast<double>(map(r - 1, c)));
      if (r + 1 < h) neighbor_max = std::max(neighbor_max, static_cast<double>(map(r + 1, c)));
      if (c > 0) neighbor_max = std::max(neighbor_max, static_cast<double>(map(r, c - 1)));
      if (c + 1 < w) neighbor_max = std::max(neighbor_max, static_cast<double>(map(r, c + 1)));
      // boundary pixel while lambda_g < largest neighbor value
      const int leave = neighbor_max == -std::numeric_limits<double>::infinity()
                            ? enter
                            : first_index(neighbor_max, grid_size);
      if (leave > enter) {
        ++count_diff[static_cast<std::size_t>(enter)];
        --count_diff[static_cast<std::size_t>(leave)];
        sum_diff[static_cast<std::size_t>(enter)] += sobel(r, c);
        sum_diff[static_cast<std::size_t>(leave)] -= sobel(r, c);
      }
    }
  }
  pm.segment_size.assign(static_cast<std::size_t>(grid_size), 0);
  pm.boundary_count.assign(static_cast<std::size_t>(grid_size), 0);
  pm.boundary_sum.assign(static_cast<std::size_t>(grid_size), 0.0);
  std::int64_t size = 0;
  std::int64_t count = 0;
  double sum = 0.0;
  for (std::size_t g = 0; g < static_cast<std::size_t>(grid_size); ++g) {
    size += size_diff[g];
    count += count_diff[g];
    sum += sum_diff[g];
    pm.segment_size[g] = static_cast<std::uint32_t>(size);
    pm.boundary_count[g] = static_cast<std::uint32_t>(count);
    pm.boundary_sum[g] = count > 0 ? std::max(sum, 0.0) : 0.0;
  }
}

std::vector<ThresholdScore> score_curve(const PointMap& pm, std::span<const PromptPoint> points, int id) {
  const PromptPoint& self = find_point(points, id);
  const int grid_size = static_cast<int>(pm.segment_size.size());
  const double area = static_cast<double>(pm.map.height()) * pm.map.width();

  // threshold index from which each point lies inside the segment
  std::vector<int> enters;
  std::vector<bool> same;
  std::size_t same_total = 0;
  for (const auto& p : points) {
    const int e = pm.map.contains(p.pixel()) ? first_index(pm.map(p.y, p.x), grid_size) : grid_size;
    enters.push_back(e);
    same.push_back(p.label == self.label);
    same_total += p.label == self.label ? 1 : 0;
  }

  std::vector<ThresholdScore> curve(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) {
    auto& s = curve[static_cast<std::size_t>(g)];
    const auto gi = static_cast<std::size_t>(g);
    s.lambda = lambda_at(g, grid_size);
    s.s_prior = static_cast<double>(pm.segment_size[gi]) / area < kSegmentSizePrior ? 1.0 : 0.0;
    s.s_edge = pm.boundary_count[gi] > 0 ? pm.boundary_sum[gi] / pm.boundary_count[gi] : 0.0;
    std::size_t same_inside = 0;
    bool opposite_inside = false;
    for (std::size_t j = 0; j < enters.size(); ++j) {
      const bool in = enters[j] <= g;
      if (same[j])
        same_inside += in ? 1 : 0;
      else if (in)
        opposite_inside = true;
    }
    s.s_pos = static_cast<double>(same_inside) / static_cast<double>(same_total);
    s.s_neg = opposite_inside ? 0.0 : 1.0;
    s.total = s.s_prior * s.s_edge * s.s_pos * s.s_neg;
  }
  return curve;
}

double select_lambda(std::span<const ThresholdScore> curve) {
  double best = 0.0;
  double lambda = kFallbackLambda;
  for (const auto& s : curve) {
    if (s.total > best) {
      best = s.total;
      lambda = s.lambda;
    }
  }
  return lambda;
}

Segmentation truncated_nearest_neighbor(int height, int width, std::span<const ScaledMap> maps) {
  Segmentation seg;
  seg.mask = Mask(height, width, 0);
  seg.nearest = Grid<int>(height, width, -1);
  seg.distance = FloatMap(height, width, std::numeric_limits<float>::infinity());

  std::vector<ScaledMap> ordered(maps.begin(), maps.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const ScaledMap& a, const ScaledMap& b) { return a.point->id < b.point->id; });
  for (const auto& m : ordered) {
    if (m.map->height() != height || m.map->width() != width)
      throw ValidationError("point map size does not match the image");
    if (!(m.lambda > 0.0)) throw ValidationError("lambda must be positive");
    seg.per_point_lambda[m.point->id] = m.lambda;
  }
  if (ordered.empty()) return seg;

  const std::size_t count = seg.mask.size();
  std::vector<double> best(count, std::numeric_limits<double>::infinity());
  for (const auto& m : ordered) {
    const double inv = 1.0 / m.lambda;
    const auto& values = m.map->storage();
    for (std::size_t q = 0; q < count; ++q) {
      const double d = static_cast<double>(values[q]) * inv;
      if (d < best[q]) {
        best[q] = d;
        seg.nearest[q] = m.point->id;
      }
    }
  }
  std::map<int, Label> labels;
  for (const auto& m : ordered) labels[m.point->id] = m.point->label;
  for (std::size_t q = 0; q < count; ++q) {
    seg.distance[q] = static_cast<float>(best[q]);
    seg.mask[q] = (seg.distance[q] <= 1.0F && labels[seg.nearest[q]] == Label::foreground) ? 1 : 0;
  }
  return seg;
}

void check_segmentation(const Segmentation& seg, std::span<const PromptPoint> points) {
  const std::size_t count = seg.mask.size();
  if (seg.nearest.size() != count || seg.distance.size() != count)
    throw ContractError("segmentation grids differ in size");
  std::map<int, Label> labels;
  for (const auto& p : points) labels[p.id] = p.label;
  for (std::size_t q = 0; q < count; ++q) {
    if (points.empty()) {
      if (seg.mask[q] != 0 || seg.nearest[q] != -1) throw ContractError("mask must be empty without points");
      continue;
    }
    const auto it = labels.find(seg.nearest[q]);
    if (it == labels.end()) throw ContractError("nearest prompt id is not a session point");
    const bool expect = it->second == Label::foreground && seg.distance[q] <= 1.0F;
    if ((seg.mask[q] != 0) != expect) {
      std::ostringstream msg;
      msg << "mask disagrees with nearest prompt at pixel " << q;
      throw ContractError(msg.str());
    }
  }
}

SessionContext::SessionContext(GuideImage guide, TransitionMatrix matrix, MarkovParams params,
                               SegmenterOptions options)
    : guide_(std::move(guide)), matrix_(std::move(matrix)), params_(params), options_(options) {
  params_.validate();
  if (options_.lambda_grid_size < 1) throw ValidationError("lambda grid size must be positive");
  if (guide_.height <= 0 || guide_.width <= 0) throw ValidationError("guide image must be non-empty");
  if (matrix_.h == 0 || matrix_.w == 0 || matrix_.data.size() != matrix_.n() * matrix_.n())
    throw ValidationError("transition matrix shape is inconsistent");
  if (static_cast<int>(matrix_.h) > guide_.height || static_cast<int>(matrix_.w) > guide_.width)
    throw ValidationError("attention grid is larger than the image");
  if (options_.method == MapMethod::m2n2 && matrix_.stochasticity != Stochasticity::doubly_stochastic)
    throw ContractError("M2N2 sessions need a doubly stochastic operator");
}

SessionContext SessionContext::build(GuideImage guide, const AttentionStack& stack, MarkovParams params,
                                     SegmenterOptions options, const std::optional<BlockWeights>& weights) {
  params.validate();
  TransitionMatrix aggregated = aggregate(stack, weights);
  TransitionMatrix prepared;
  switch (options.method) {
    case MapMethod::m2n2:
      prepared = prepare_markov_operator(aggregated, params);
      break;
    case MapMethod::attention_nn:
      prepared = apply_temperature(aggregated, kAttentionNnTemperature, params.epsilon_floor);
      break;
    case MapMethod::kl_nn:
      prepared = apply_temperature(aggregated, kKlNnTemperature, params.epsilon_floor);
      break;
  }
  return SessionContext(std::move(guide), std::move(prepared), params, options);
}

std::size_t SessionContext::cell_of(Pixel p) const {
  if (p.x < 0 || p.y < 0 || p.x >= guide_.width || p.y >= guide_.height)
    throw ValidationError("pixel (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the image");
  const auto row = static_cast<std::size_t>(static_cast<std::int64_t>(p.y) * matrix_.h / guide_.height);
  const auto col = static_cast<std::size_t>(static_cast<std::int64_t>(p.x) * matrix_.w / guide_.width);
  return row * matrix_.w + col;
}

const PointMap& SessionContext::compute_point_map(const PromptPoint& point) {
  if (auto it = cache_.find(point.id); it != cache_.end()) {
    if (it->second.pixel != point.pixel())
      throw ContractError("point id " + std::to_string(point.id) + " is cached for a different pixel");
    return it->second;
  }
  const std::size_t cell = cell_of(point.pixel());

  PointMap pm;
  pm.pixel = point.pixel();
  switch (options_.method) {
    case MapMethod::m2n2: {
      MarkovGrid grid = markov_map(matrix_, cell, params_);
      pm.low_res = FloatMap(static_cast<int>(grid.h), static_cast<int>(grid.w), std::move(grid.values));
      break;
    }
    case MapMethod::attention_nn:
      pm.low_res = baseline_map(BaselineKind::attention_nn, matrix_, cell);
      break;
    case MapMethod::kl_nn:
      pm.low_res = baseline_map(BaselineKind::kl_nn, matrix_, cell);
      break;
  }
  ++computations_;

  const FloatMap upsampled = jbu_upsample(pm.low_res, guide_, options_.jbu);
  pm.map = flood_fill_minimax(upsampled, point.pixel());
  const float top = *std::max_element(pm.map.storage().begin(), pm.map.storage().end());
  if (top > 0.0F) {
    for (float& v : pm.map.storage()) v /= top;
  }
  build_threshold_tables(pm, options_.lambda_grid_size);
  return cache_.emplace(point.id, std::move(pm)).first->second;
}

const PointMap* SessionContext::cached_map(int id) const {
  const auto it = cache_.find(id);
  return it == cache_.end() ? nullptr : &it->second;
}

const PromptPoint& SessionContext::add_point(int x, int y, Label label) {
  PromptPoint p{x, y, label, static_cast<int>(points_.size())};
  cell_of(p.pixel());
  cache_.erase(p.id);
  compute_point_map(p);
  points_.push_back(p);
  return points_.back();
}

void SessionContext::remove_last_point() {
  if (points_.empty()) throw StateError("no prompt point to remove");
  cache_.erase(points_.back().id);
  points_.pop_back();
}

void SessionContext::clear_points() {
  points_.clear();
  cache_.clear();
}

std::vector<int> SessionContext::cache_keys() const {
  std::vector<int> keys;
  for (const auto& [id, pm] : cache_) keys.push_back(id);
  return keys;
}

Segmentation SessionContext::segment() { return m2n2::segment(*this, points_); }

double select_lambda(SessionContext& ctx, std::span<const PromptPoint> points, int id) {
  const PromptPoint& p = find_point(points, id);
  const auto curve = score_curve(ctx.compute_point_map(p), points, id);
  return select_lambda(curve);
}

Segmentation segment(SessionContext& ctx, std::span<const PromptPoint> points) {
  std::vector<ScaledMap> scaled;
  scaled.reserve(points.size());
  for (const auto& p : points) {
    const PointMap& pm = ctx.compute_point_map(p);
    scaled.push_back({&pm.map, select_lambda(score_curve(pm, points, p.id)), &p});
  }
  return truncated_nearest_neighbor(ctx.height(), ctx.width(), scaled);
}

}  // namespace m2n2
