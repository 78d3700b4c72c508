#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "m2n2/error.hpp"
#include "m2n2/markov.hpp"
#include "m2n2/tensor_io.hpp"

using namespace m2n2;

namespace {

TransitionMatrix from_rows(std::uint32_t h, std::uint32_t w, std::vector<float> data) {
  TransitionMatrix m;
  m.h = h;
  m.w = w;
  m.data = std::move(data);
  return m;
}

}  // namespace

TEST_CASE("temperature closed form on [0.8, 0.2] with T = 0.5") {
  const auto m = apply_temperature(from_rows(1, 2, {0.8F, 0.2F, 0.5F, 0.5F}), 0.5);
  CHECK(m.data[0] == doctest::Approx(0.9412).epsilon(1e-4));
  CHECK(m.data[1] == doctest::Approx(0.0588).epsilon(1e-3));
  const auto closed = oracle::temperature_closed_form({0.8F, 0.2F}, 0.5);
  CHECK(m.data[0] == doctest::Approx(closed[0]).epsilon(1e-6));
  CHECK(m.data[2] == doctest::Approx(0.5));
  CHECK(m.data[3] == doctest::Approx(0.5));
}

TEST_CASE("temperature 1 is the identity and bad temperatures are rejected") {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_row_stochastic(rng, 4, 4);
  const auto b = apply_temperature(a, 1.0);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(std::abs(a.data[i] - b.data[i]) < 1e-6);
  CHECK_THROWS_AS(apply_temperature(a, 0.0), ValidationError);
  CHECK_THROWS_AS(apply_temperature(a, -1.0), ValidationError);
}

TEST_CASE("temperature floors zero entries so IPF can run") {
  std::mt19937_64 rng(3);
  auto a = oracle::random_row_stochastic(rng, 2, 2);
  a.data[1] = 0.0F;
  const auto m = apply_temperature(a, 0.65);
  CHECK(m.data[1] > 0.0F);
  CHECK_NOTHROW(ipf_normalize(m, MarkovParams{}));
}

TEST_CASE("IPF on a 2x2 matrix matches the Sinkhorn limit") {
  const auto a = from_rows(1, 2, {0.6F, 0.4F, 0.5F, 0.5F});
  IpfStats stats;
  const auto d = ipf_normalize(a, MarkovParams{}, stats);
  CHECK(d.stochasticity == Stochasticity::doubly_stochastic);
  const auto ref = oracle::sinkhorn(oracle::to_double(a), 2);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(d.data[i] - ref[i]) < 1e-5);
  CHECK(stats.residual < MarkovParams{}.ipf_tolerance);
}

TEST_CASE("IPF leaves a uniform matrix alone after one round") {
  const auto u = from_rows(2, 2, std::vector<float>(16, 0.25F));
  IpfStats stats;
  const auto d = ipf_normalize(u, MarkovParams{}, stats);
  CHECK(stats.rounds == 1);
  for (float v : d.data) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("IPF property on random 16-cell matrices") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = prepare_markov_operator(oracle::random_row_stochastic(rng, 4, 4), MarkovParams{});
    CHECK(sum_residuals(d).max() < 1e-3);
  }
}

TEST_CASE("IPF errors") {
  MarkovParams p;
  CHECK_THROWS_AS(ipf_normalize(from_rows(1, 2, {1.0F, 0.0F, 0.5F, 0.5F}), p), ValidationError);
  // a near-reducible matrix cannot be balanced in two rounds
  p.ipf_max_rounds = 2;
  try {
    ipf_normalize(from_rows(1, 2, {0.999F, 0.001F, 0.0001F, 0.9999F}), p);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > p.ipf_tolerance);
  }
}

TEST_CASE("Markov map on the uniform matrix saturates everything at t = 1") {
  auto u = from_rows(2, 2, std::vector<float>(16, 0.25F));
  u.stochasticity = Stochasticity::doubly_stochastic;
  const auto g = markov_map(u, 2, MarkovParams{});
  CHECK(g.values[2] == 0.0F);
  for (std::size_t k : {0u, 1u, 3u}) {
    CHECK(g.saturated[k] == 1);
    CHECK(g.values[k] > 0.0F);
    CHECK(g.values[k] <= 1.0F);
  }
  CHECK(g.steps == 1);
}

TEST_CASE("Markov map on the identity never saturates other cells") {
  std::vector<float> id(16, 0.0F);
  for (std::size_t i = 0; i < 4; ++i) id[i * 4 + i] = 1.0F;
  auto m = from_rows(2, 2, id);
  m.stochasticity = Stochasticity::doubly_stochastic;
  MarkovParams p;
  p.max_iters = 50;
  const auto g = markov_map(m, 0, p);
  CHECK(g.values[0] == 0.0F);
  for (std::size_t k = 1; k < 4; ++k) {
    CHECK(g.saturated[k] == 0);
    CHECK(g.values[k] == 50.0F);
  }
}

TEST_CASE("Markov map contract and range errors") {
  std::mt19937_64 rng(9);
  const auto row = oracle::random_row_stochastic(rng, 2, 2);
  CHECK_THROWS_AS(markov_map(row, 0, MarkovParams{}), ContractError);
  auto d = oracle::random_doubly_stochastic(rng, 2, 2);
  CHECK_THROWS_AS(markov_map(d, 4, MarkovParams{}), ValidationError);
  d.data[0] = std::nanf("");
  CHECK_THROWS_AS(markov_map(d, 0, MarkovParams{}), NumericError);
  MarkovParams bad;
  bad.tau = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("two-region synthetic stack: in-region cells saturate first and match the chain oracle") {
  SyntheticSpec spec{4, 4, {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1}, 0.8, 0, 0.0};
  TransitionMatrix a;
  a.h = 4;
  a.w = 4;
  a.data = generate_synthetic_stack(spec).blocks[0].tensor;
  const MarkovParams p;
  const auto op = prepare_markov_operator(a, p);
  const auto g = markov_map(op, 0, p);
  float in_max = 0.0F;
  float out_min = 1e9F;
  for (std::size_t k = 1; k < 16; ++k) {
    if (spec.partition[k] == 0) in_max = std::max(in_max, g.values[k]);
    else out_min = std::min(out_min, g.values[k]);
  }
  CHECK(in_max < out_min);
  const auto ref = oracle::markov_chain(oracle::to_double(op), 16, 0, p.tau, p.max_iters);
  for (std::size_t k = 0; k < 16; ++k) CHECK(std::abs(g.values[k] - ref.value[k]) < 1e-5);
}

TEST_CASE("chain observer sees unit mass, growing saturation and bracketing values") {
  std::mt19937_64 rng(11);
  const auto op = oracle::random_doubly_stochastic(rng, 4, 4);
  std::size_t last_count = 0;
  std::vector<int> first_t(16, -1);
  const auto g = markov_map(op, 5, MarkovParams{}, [&](int t, std::span<const double> state, const MarkovGrid& part) {
    double mass = 0.0;
    for (double v : state) mass += v;
    CHECK(std::abs(mass - 1.0) < 1e-6);
    std::size_t count = 0;
    for (std::size_t k = 0; k < 16; ++k) {
      if (part.saturated[k]) {
        ++count;
        if (first_t[k] < 0) first_t[k] = t;
      }
    }
    CHECK(count >= last_count);
    last_count = count;
    if (t == 1) {
      int support = 0;
      for (double v : state) support += v > 0 ? 1 : 0;
      CHECK(support > 1);
    }
  });
  for (std::size_t k = 0; k < 16; ++k) {
    if (!g.saturated[k] || k == 5) continue;
    CHECK(g.values[k] >= first_t[k] - 1);
    CHECK(g.values[k] <= first_t[k]);
  }
}

TEST_CASE("chain converges to uniform on random doubly stochastic matrices") {
  std::mt19937_64 rng(12);
  const MarkovParams p;
  for (int trial = 0; trial < 5; ++trial) {
    const auto op = prepare_markov_operator(oracle::random_row_stochastic(rng, 4, 4), p);
    std::vector<double> cur(16, 0.0);
    cur[0] = 1.0;
    for (int t = 0; t < 160; ++t) {
      std::vector<double> next(16, 0.0);
      for (std::size_t k = 0; k < 16; ++k)
        for (std::size_t l = 0; l < 16; ++l) next[l] += cur[k] * op.data[k * 16 + l];
      cur = next;
    }
    const auto [lo, hi] = std::minmax_element(cur.begin(), cur.end());
    CHECK(*hi - *lo < 10 * p.ipf_tolerance);
  }
}
