#include "m2n2/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "m2n2/error.hpp"

namespace m2n2 {
namespace {

// 1-D lower envelope of parabolas (Felzenszwalb & Huttenlocher) on integer
// squared distances.
void edt_1d(const std::int64_t* f, std::int64_t* d, int n, std::vector<int>& v, std::vector<double>& z) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  auto intersect = [&](int q, int p) {
    return (static_cast<double>(f[q] + static_cast<std::int64_t>(q) * q) -
            static_cast<double>(f[p] + static_cast<std::int64_t>(p) * p)) /
           (2.0 * (q - p));
  };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      continue;
    }
    double s = intersect(q, v[static_cast<std::size_t>(k)]);
    while (s <= z[static_cast<std::size_t>(k)]) {
      --k;
      s = intersect(q, v[static_cast<std::size_t>(k)]);
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) {
    std::fill(d, d + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const std::int64_t p = v[static_cast<std::size_t>(j)];
    d[q] = (q - p) * (q - p) + f[p];
  }
}

}  // namespace

void EvalConfig::validate() const {
  if (max_clicks < 1) throw ValidationError("max_clicks must be at least 1");
  if (iou_targets.empty()) throw ValidationError("at least one IoU target is required");
  for (double t : iou_targets) {
    if (!(t > 0.0 && t <= 1.0)) throw ValidationError("IoU targets must lie in (0, 1]");
  }
}

double iou(const Mask& gt, const Mask& pred) {
  if (gt.height() != pred.height() || gt.width() != pred.width())
    throw ValidationError("masks differ in size");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool a = gt[i] != 0;
    const bool b = pred[i] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Grid<std::int64_t> squared_distance_transform(const Grid<std::uint8_t>& inside) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // padded by one pixel of "outside" on every side
  const int h = inside.height() + 2;
  const int w = inside.width() + 2;
  Grid<std::int64_t> f(h, w, 0);
  for (int r = 0; r < inside.height(); ++r)
    for (int c = 0; c < inside.width(); ++c) f(r + 1, c + 1) = inside(r, c) ? kInf : 0;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<std::int64_t> col_in(static_cast<std::size_t>(h)), col_out(static_cast<std::size_t>(h));
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) col_in[static_cast<std::size_t>(r)] = f(r, c);
    edt_1d(col_in.data(), col_out.data(), h, v, z);
    for (int r = 0; r < h; ++r) f(r, c) = col_out[static_cast<std::size_t>(r)];
  }
  std::vector<std::int64_t> row_out(static_cast<std::size_t>(w));
  Grid<std::int64_t> out(inside.height(), inside.width(), 0);
  for (int r = 1; r + 1 < h; ++r) {
    edt_1d(&f(r, 0), row_out.data(), w, v, z);
    for (int c = 1; c + 1 < w; ++c) out(r - 1, c - 1) = row_out[static_cast<std::size_t>(c)];
  }
  return out;
}

PromptPoint next_click(const Mask& gt, const Mask& pred) {
  if (gt.height() != pred.height() || gt.width() != pred.width())
    throw ValidationError("masks differ in size");
  const int h = gt.height();
  const int w = gt.width();
  Grid<std::uint8_t> error(h, w, 0);
  bool any = false;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    error[i] = (gt[i] != 0) != (pred[i] != 0) ? 1 : 0;
    any = any || error[i];
  }
  if (!any) throw StateError("prediction already equals the ground truth");

  // label 4-connected components in flat scan order
  Grid<int> component(h, w, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < error.size(); ++i) {
    if (!error[i] || component[i] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    stack.push_back(i);
    component[i] = id;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const int r = static_cast<int>(cur / static_cast<std::size_t>(w));
      const int c = static_cast<int>(cur % static_cast<std::size_t>(w));
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {c, c, c - 1, c + 1};
      for (int d = 0; d < 4; ++d) {
        if (!error.contains(nr[d], nc[d])) continue;
        const std::size_t ni = error.index(nr[d], nc[d]);
        if (error[ni] && component[ni] < 0) {
          component[ni] = id;
          stack.push_back(ni);
        }
      }
    }
    sizes.push_back(size);
  }
  // first component in scan order wins ties, i.e. the one holding the smallest index
  int largest = 0;
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    if (sizes[k] > sizes[static_cast<std::size_t>(largest)]) largest = static_cast<int>(k);
  }

  Grid<std::uint8_t> inside(h, w, 0);
  for (std::size_t i = 0; i < inside.size(); ++i) inside[i] = component[i] == largest ? 1 : 0;
  const auto dist = squared_distance_transform(inside);
  std::size_t best = 0;
  std::int64_t best_d = -1;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    if (inside[i] && dist[i] > best_d) {
      best_d = dist[i];
      best = i;
    }
  }
  PromptPoint p;
  p.y = static_cast<int>(best / static_cast<std::size_t>(w));
  p.x = static_cast<int>(best % static_cast<std::size_t>(w));
  p.label = gt[best] ? Label::foreground : Label::background;
  p.id = 0;
  return p;
}

InstanceResult simulate_instance(const InstanceRecord& record, const SegmentCallback& segmenter,
                                 const EvalConfig& config) {
  config.validate();
  InstanceResult result;
  result.id = record.id;
  result.noc.assign(config.iou_targets.size(), config.max_clicks);
  std::vector<bool> reached(config.iou_targets.size(), false);

  Mask pred(record.gt.height(), record.gt.width(), 0);
  double current = iou(record.gt, pred);
  try {
    for (int click = 1; click <= config.max_clicks; ++click) {
      if (current < 1.0) {
        PromptPoint p = next_click(record.gt, pred);
        p.id = static_cast<int>(result.clicks.size());
        result.clicks.push_back(p);
        pred = segmenter(result.clicks);
        if (pred.height() != record.gt.height() || pred.width() != record.gt.width())
          throw ValidationError("segmenter returned a mask of the wrong size");
        current = iou(record.gt, pred);
      }
      // a perfect prediction needs no further clicks; its IoU carries over
      result.ious.push_back(current);
      for (std::size_t t = 0; t < config.iou_targets.size(); ++t) {
        if (!reached[t] && current >= config.iou_targets[t]) {
          reached[t] = true;
          result.noc[t] = click;
        }
      }
    }
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

SegmentCallback session_callback(SessionContext& ctx) {
  return [&ctx](std::span<const PromptPoint> points) {
    // drop session points that are not a prefix of the requested list
    std::size_t common = 0;
    const auto& have = ctx.points();
    while (common < have.size() && common < points.size() && have[common].x == points[common].x &&
           have[common].y == points[common].y && have[common].label == points[common].label)
      ++common;
    while (ctx.points().size() > common) ctx.remove_last_point();
    for (std::size_t i = common; i < points.size(); ++i) ctx.add_point(points[i].x, points[i].y, points[i].label);
    return ctx.segment().mask;
  };
}

}  // namespace m2n2
