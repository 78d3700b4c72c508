#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m2n2/grid.hpp"
#include "m2n2/segmenter.hpp"

namespace m2n2 {

struct EvalConfig {
  int max_clicks = 20;
  std::vector<double> iou_targets{0.85, 0.90};

  void validate() const;
};

/// Intersection over union; two empty masks count as a perfect match.
double iou(const Mask& gt, const Mask& pred);

/// Squared Euclidean distance from every pixel with `inside` set to the
/// nearest pixel without it; the image border counts as outside.
Grid<std::int64_t> squared_distance_transform(const Grid<std::uint8_t>& inside);

/// Simulated user: click the pixel deepest inside the largest 4-connected
/// error component. Foreground if the component is missed object area,
/// background if it is a false positive. The returned id is 0.
PromptPoint next_click(const Mask& gt, const Mask& pred);

struct InstanceRecord {
  std::string id;
  Mask gt;
};

struct InstanceResult {
  std::string id;
  std::vector<int> noc;         // one entry per target
  std::vector<double> ious;     // IoU after click 1 .. max_clicks
  std::vector<PromptPoint> clicks;
  std::optional<std::string> error;
};

using SegmentCallback = std::function<Mask(std::span<const PromptPoint>)>;

InstanceResult simulate_instance(const InstanceRecord& record, const SegmentCallback& segmenter,
                                 const EvalConfig& config);

/// Callback that drives a SessionContext, keeping its points in sync with
/// the simulated click list.
SegmentCallback session_callback(SessionContext& ctx);

}  // namespace m2n2
