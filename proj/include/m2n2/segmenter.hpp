#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "m2n2/aggregation.hpp"
#include "m2n2/baselines.hpp"
#include "m2n2/grid.hpp"
#include "m2n2/jbu.hpp"
#include "m2n2/markov.hpp"
#include "m2n2/tensor_io.hpp"

namespace m2n2 {

enum class Label : std::uint8_t { background = 0, foreground = 1 };

struct PromptPoint {
  int x = 0;  // column
  int y = 0;  // row
  Label label = Label::foreground;
  int id = 0;

  Pixel pixel() const noexcept { return {x, y}; }
  friend bool operator==(const PromptPoint&, const PromptPoint&) = default;
};

/// Score of one candidate threshold; total is the product of the four terms.
struct ThresholdScore {
  double lambda = 0.0;
  double s_prior = 0.0;
  double s_edge = 0.0;
  double s_pos = 0.0;
  double s_neg = 0.0;
  double total = 0.0;
};

inline constexpr double kSegmentSizePrior = 0.40;
inline constexpr double kFallbackLambda = 0.5;

/// Sobel gradient magnitude with border replication.
Grid<double> sobel_magnitude(const FloatMap& map);

/// Direct evaluation of the threshold score for point `id` at `lambda`.
ThresholdScore evaluate_scores(const FloatMap& map, double lambda, std::span<const PromptPoint> points, int id);

/// Candidate thresholds (g + 1) / grid_size, g = 0 .. grid_size - 1.
double lambda_at(int g, int grid_size) noexcept;

/// Normalized full-res map of one prompt point plus the per-threshold segment
/// statistics that do not depend on the other points.
struct PointMap {
  Pixel pixel;
  FloatMap low_res;  // raw saturation times or baseline distances
  FloatMap map;      // after JBU + flood fill, scaled to [0, 1]
  std::vector<std::uint32_t> segment_size;  // |{q : map[q] <= lambda_g}|
  std::vector<double> boundary_sum;         // Sobel sum over boundary pixels
  std::vector<std::uint32_t> boundary_count;
};

/// Fills the per-threshold tables of `pm` from pm.map.
void build_threshold_tables(PointMap& pm, int grid_size);

/// Scores of all candidate thresholds, in increasing lambda order.
std::vector<ThresholdScore> score_curve(const PointMap& pm, std::span<const PromptPoint> points, int id);

/// argmax of the score curve; ties go to the smaller lambda, an all-zero
/// curve falls back to kFallbackLambda.
double select_lambda(std::span<const ThresholdScore> curve);

struct Segmentation {
  Mask mask;
  Grid<int> nearest;        // prompt id, -1 when there are no points
  FloatMap distance;        // scaled distance to the nearest prompt
  std::map<int, double> per_point_lambda;

  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

/// Truncated 1-NN over scaled maps: d_i(q) = map_i[q] / lambda_i, nearest
/// prompt by smallest d (ties to smaller id), foreground only when d <= 1.
struct ScaledMap {
  const FloatMap* map;
  double lambda;
  const PromptPoint* point;
};
Segmentation truncated_nearest_neighbor(int height, int width, std::span<const ScaledMap> maps);

/// Throws ContractError if the mask/nearest/distance invariants do not hold.
void check_segmentation(const Segmentation& seg, std::span<const PromptPoint> points);

enum class MapMethod { m2n2, attention_nn, kl_nn };

struct SegmenterOptions {
  MapMethod method = MapMethod::m2n2;
  int lambda_grid_size = 256;
  JbuParams jbu;
};

/// Everything needed to segment one image: the prepared operator and the
/// per-point map cache. Single-writer: add_point/remove_last_point must not
/// race with other calls on the same context.
class SessionContext {
 public:
  /// `matrix` must already be prepared for `options.method`: doubly
  /// stochastic for m2n2, row-stochastic with the baseline temperature for
  /// the baselines.
  SessionContext(GuideImage guide, TransitionMatrix matrix, MarkovParams params, SegmenterOptions options = {});

  /// Aggregates, applies the method's temperature and (for m2n2) IPF.
  static SessionContext build(GuideImage guide, const AttentionStack& stack, MarkovParams params = {},
                              SegmenterOptions options = {},
                              const std::optional<BlockWeights>& weights = std::nullopt);

  const GuideImage& guide() const noexcept { return guide_; }
  const TransitionMatrix& matrix() const noexcept { return matrix_; }
  const MarkovParams& params() const noexcept { return params_; }
  const SegmenterOptions& options() const noexcept { return options_; }
  int height() const noexcept { return guide_.height; }
  int width() const noexcept { return guide_.width; }

  /// Attention cell containing image pixel p.
  std::size_t cell_of(Pixel p) const;

  /// Cached by point id; computing a new map runs exactly one chain.
  const PointMap& compute_point_map(const PromptPoint& point);
  const PointMap* cached_map(int id) const;

  const std::vector<PromptPoint>& points() const noexcept { return points_; }
  /// Appends the point with id = current point count and computes its map.
  const PromptPoint& add_point(int x, int y, Label label);
  void remove_last_point();
  void clear_points();

  std::size_t cache_size() const noexcept { return cache_.size(); }
  std::vector<int> cache_keys() const;
  /// Number of map computations (chain runs or baseline maps) so far.
  std::uint64_t map_computations() const noexcept { return computations_; }

  Segmentation segment();

 private:
  GuideImage guide_;
  TransitionMatrix matrix_;
  MarkovParams params_;
  SegmenterOptions options_;
  std::vector<PromptPoint> points_;
  std::map<int, PointMap> cache_;
  std::uint64_t computations_ = 0;
};

/// Chooses lambda for point `id` among `points` (its map must be computable).
double select_lambda(SessionContext& ctx, std::span<const PromptPoint> points, int id);

/// Full M2N2 fusion for an explicit point list.
Segmentation segment(SessionContext& ctx, std::span<const PromptPoint> points);

}  // namespace m2n2
