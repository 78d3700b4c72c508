#pragma once
// Brute-force reference implementations used by the tests. They follow the
// textbook definitions directly and share no code with the library.

#include <cstdint>
#include <random>
#include <vector>

#include "m2n2/aggregation.hpp"
#include "m2n2/grid.hpp"
#include "m2n2/jbu.hpp"
#include "m2n2/segmenter.hpp"

namespace oracle {

using Matrix = std::vector<double>;  // dense row-major n x n

Matrix to_double(const m2n2::TransitionMatrix& m);

/// Full-matrix Sinkhorn: divide rows by their sums, then columns, until
/// every row and column sum is within `tol` of 1.
Matrix sinkhorn(Matrix a, std::size_t n, double tol = 1e-10, int max_rounds = 200000);

/// p_i^(1/T) / sum_j p_j^(1/T)
std::vector<double> temperature_closed_form(const std::vector<double>& p, double t);
std::vector<double> softmax(const std::vector<double>& v);

struct Chain {
  std::vector<int> crossing;  // first integer t with ratio > tau, -1 if never
  std::vector<double> value;  // interpolated crossing time, max_iters if never
};

/// Dense vector iteration p_{t+1}[l] = sum_k p_t[k] A[k][l] in double, no
/// renormalization.
Chain markov_chain(const Matrix& a, std::size_t n, std::size_t start, double tau, int max_iters);

/// Bottleneck path cost by relaxation to a fixpoint over 4-neighbors.
std::vector<double> bottleneck(const std::vector<double>& map, int h, int w, int start_row, int start_col);

/// Joint bilateral upsampling evaluated term by term in double.
std::vector<double> jbu_direct(const m2n2::FloatMap& low, const m2n2::GuideImage& guide,
                               const m2n2::JbuParams& params);

/// Spatial-only Gaussian upsampling written as two 1-D passes.
std::vector<double> gaussian_upsample(const m2n2::FloatMap& low, int out_h, int out_w, double sigma, int radius);

std::vector<double> sobel(const std::vector<double>& map, int h, int w);

struct Scores {
  double s_prior, s_edge, s_pos, s_neg, total;
};
Scores scores(const std::vector<double>& map, int h, int w, double lambda,
              const std::vector<m2n2::PromptPoint>& points, int id);

/// Click placement by exhaustive search: union-find components, brute-force
/// distance from every component pixel to every non-component pixel.
m2n2::PromptPoint next_click(const m2n2::Mask& gt, const m2n2::Mask& pred);

double symmetric_kl(const Matrix& a, std::size_t n, std::size_t i, std::size_t j, double clip);

// -- random inputs --

/// Row-stochastic matrix with entries drawn from U(lo, 1) before normalizing.
m2n2::TransitionMatrix random_row_stochastic(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w,
                                             double lo = 0.01);

/// Exactly representable mixture of permutation matrices and the uniform
/// matrix, marked doubly stochastic.
m2n2::TransitionMatrix random_doubly_stochastic(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w);

m2n2::GuideImage random_guide(std::mt19937_64& rng, int h, int w);

/// Partition of an h x w grid into `regions` axis-aligned rectangles by
/// recursive guillotine cuts; labels are 0 .. regions-1.
std::vector<int> random_partition(std::mt19937_64& rng, int h, int w, int regions);

}  // namespace oracle
