#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace oracle {

Matrix to_double(const m2n2::TransitionMatrix& m) { return Matrix(m.data.begin(), m.data.end()); }

Matrix sinkhorn(Matrix a, std::size_t n, double tol, int max_rounds) {
  for (int round = 0; round < max_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j];
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += a[i * n + j];
      for (std::size_t i = 0; i < n; ++i) a[i * n + j] /= s;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double rs = 0.0;
      double cs = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        rs += a[i * n + j];
        cs += a[j * n + i];
      }
      worst = std::max({worst, std::abs(rs - 1.0), std::abs(cs - 1.0)});
    }
    if (worst < tol) return a;
  }
  return a;
}

std::vector<double> temperature_closed_form(const std::vector<double>& p, double t) {
  std::vector<double> out(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += out[i] = std::pow(p[i], 1.0 / t);
  for (double& v : out) v /= s;
  return out;
}

std::vector<double> softmax(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += out[i] = std::exp(v[i] - top);
  for (double& x : out) x /= s;
  return out;
}

Chain markov_chain(const Matrix& a, std::size_t n, std::size_t start, double tau, int max_iters) {
  Chain c;
  c.crossing.assign(n, -1);
  c.value.assign(n, static_cast<double>(max_iters));
  std::vector<double> p(n, 0.0);
  p[start] = 1.0;
  std::vector<double> prev_ratio(n, 0.0);
  prev_ratio[start] = 1.0;
  c.crossing[start] = 0;
  c.value[start] = 0.0;
  for (int t = 1; t <= max_iters; ++t) {
    std::vector<double> next(n, 0.0);
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t k = 0; k < n; ++k) next[l] += p[k] * a[k * n + l];
    const double top = *std::max_element(next.begin(), next.end());
    bool all = true;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = next[k] / top;
      if (c.crossing[k] < 0) {
        if (r > tau) {
          c.crossing[k] = t;
          c.value[k] = std::max(0.0, (t - 1) + (tau - prev_ratio[k]) / (r - prev_ratio[k]));
        } else {
          all = false;
        }
      }
      prev_ratio[k] = r;
    }
    p = next;
    if (all) break;
  }
  return c;
}

std::vector<double> bottleneck(const std::vector<double>& map, int h, int w, int start_row, int start_col) {
  const double inf = std::numeric_limits<double>::infinity();
  const double origin = map[static_cast<std::size_t>(start_row * w + start_col)];
  std::vector<double> d(map.size(), inf);
  d[static_cast<std::size_t>(start_row * w + start_col)] = 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r * w + c);
        const int nr[4] = {r - 1, r + 1, r, r};
        const int nc[4] = {c, c, c - 1, c + 1};
        for (int k = 0; k < 4; ++k) {
          if (nr[k] < 0 || nc[k] < 0 || nr[k] >= h || nc[k] >= w) continue;
          const double via = std::max(d[static_cast<std::size_t>(nr[k] * w + nc[k])], std::abs(map[i] - origin));
          if (via < d[i]) {
            d[i] = via;
            changed = true;
          }
        }
      }
    }
  }
  return d;
}

namespace {

std::array<double, 3> bilinear(const m2n2::GuideImage& g, double y, double x) {
  y = std::min(std::max(y, 0.0), g.height - 1.0);
  x = std::min(std::max(x, 0.0), g.width - 1.0);
  const int y0 = static_cast<int>(y);
  const int x0 = static_cast<int>(x);
  const int y1 = std::min(y0 + 1, g.height - 1);
  const int x1 = std::min(x0 + 1, g.width - 1);
  const double fy = y - y0;
  const double fx = x - x0;
  std::array<double, 3> out{};
  for (int ch = 0; ch < 3; ++ch) {
    out[static_cast<std::size_t>(ch)] = (1 - fy) * (1 - fx) * g.pixel(y0, x0)[ch] + (1 - fy) * fx * g.pixel(y0, x1)[ch] +
                                        fy * (1 - fx) * g.pixel(y1, x0)[ch] + fy * fx * g.pixel(y1, x1)[ch];
  }
  return out;
}

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::vector<double> jbu_direct(const m2n2::FloatMap& low, const m2n2::GuideImage& guide,
                               const m2n2::JbuParams& params) {
  const int h = low.height();
  const int w = low.width();
  const int H = guide.height;
  const int W = guide.width;
  std::vector<double> out(static_cast<std::size_t>(H) * W);
  for (int qy = 0; qy < H; ++qy) {
    for (int qx = 0; qx < W; ++qx) {
      const double ly = (qy + 0.5) * h / H - 0.5;
      const double lx = (qx + 0.5) * w / W - 0.5;
      const int cy = static_cast<int>(std::floor(ly + 0.5));
      const int cx = static_cast<int>(std::floor(lx + 0.5));
      double num = 0.0;
      double den = 0.0;
      for (int py = cy - params.radius; py <= cy + params.radius; ++py) {
        for (int px = cx - params.radius; px <= cx + params.radius; ++px) {
          const int ry = clampi(py, 0, h - 1);
          const int rx = clampi(px, 0, w - 1);
          const auto prgb = bilinear(guide, (ry + 0.5) * H / h - 0.5, (rx + 0.5) * W / w - 0.5);
          double range2 = 0.0;
          for (int ch = 0; ch < 3; ++ch) {
            const double diff = guide.pixel(qy, qx)[ch] - prgb[static_cast<std::size_t>(ch)];
            range2 += diff * diff;
          }
          const double spatial2 = (px - lx) * (px - lx) + (py - ly) * (py - ly);
          const double wgt = std::exp(-spatial2 / (2 * params.sigma_spatial * params.sigma_spatial)) *
                             std::exp(-range2 / (2 * params.sigma_range * params.sigma_range));
          num += wgt * low(ry, rx);
          den += wgt;
        }
      }
      out[static_cast<std::size_t>(qy) * W + qx] = num / den;
    }
  }
  return out;
}

std::vector<double> gaussian_upsample(const m2n2::FloatMap& low, int out_h, int out_w, double sigma, int radius) {
  const int h = low.height();
  const int w = low.width();
  // horizontal pass: every low-res row resampled at every output column
  std::vector<double> rows(static_cast<std::size_t>(h) * out_w);
  std::vector<double> col_norm(static_cast<std::size_t>(out_w));
  for (int qx = 0; qx < out_w; ++qx) {
    const double lx = (qx + 0.5) * w / out_w - 0.5;
    const int cx = static_cast<int>(std::floor(lx + 0.5));
    double norm = 0.0;
    for (int px = cx - radius; px <= cx + radius; ++px) norm += std::exp(-(px - lx) * (px - lx) / (2 * sigma * sigma));
    col_norm[static_cast<std::size_t>(qx)] = norm;
    for (int r = 0; r < h; ++r) {
      double acc = 0.0;
      for (int px = cx - radius; px <= cx + radius; ++px)
        acc += std::exp(-(px - lx) * (px - lx) / (2 * sigma * sigma)) * low(r, clampi(px, 0, w - 1));
      rows[static_cast<std::size_t>(r) * out_w + qx] = acc / norm;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_h) * out_w);
  for (int qy = 0; qy < out_h; ++qy) {
    const double ly = (qy + 0.5) * h / out_h - 0.5;
    const int cy = static_cast<int>(std::floor(ly + 0.5));
    double norm = 0.0;
    for (int py = cy - radius; py <= cy + radius; ++py) norm += std::exp(-(py - ly) * (py - ly) / (2 * sigma * sigma));
    for (int qx = 0; qx < out_w; ++qx) {
      double acc = 0.0;
      for (int py = cy - radius; py <= cy + radius; ++py)
        acc += std::exp(-(py - ly) * (py - ly) / (2 * sigma * sigma)) *
               rows[static_cast<std::size_t>(clampi(py, 0, h - 1)) * out_w + qx];
      out[static_cast<std::size_t>(qy) * out_w + qx] = acc / norm;
    }
  }
  return out;
}

std::vector<double> sobel(const std::vector<double>& map, int h, int w) {
  static const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  std::vector<double> out(map.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double gx = 0.0;
      double gy = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double v = map[static_cast<std::size_t>(clampi(r + i - 1, 0, h - 1) * w + clampi(c + j - 1, 0, w - 1))];
          gx += kx[i][j] * v;
          gy += ky[i][j] * v;
        }
      }
      out[static_cast<std::size_t>(r * w + c)] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

Scores scores(const std::vector<double>& map, int h, int w, double lambda,
              const std::vector<m2n2::PromptPoint>& points, int id) {
  auto in = [&](int r, int c) { return map[static_cast<std::size_t>(r * w + c)] <= lambda; };
  std::size_t size = 0;
  for (double v : map) size += v <= lambda ? 1 : 0;
  Scores s{};
  s.s_prior = static_cast<double>(size) / (static_cast<double>(h) * w) < 0.40 ? 1.0 : 0.0;
  const auto grad = sobel(map, h, w);
  double sum = 0.0;
  int count = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!in(r, c)) continue;
      const bool edge = (r > 0 && !in(r - 1, c)) || (r + 1 < h && !in(r + 1, c)) || (c > 0 && !in(r, c - 1)) ||
                        (c + 1 < w && !in(r, c + 1));
      if (edge) {
        sum += grad[static_cast<std::size_t>(r * w + c)];
        ++count;
      }
    }
  }
  s.s_edge = count ? sum / count : 0.0;
  m2n2::Label own = m2n2::Label::foreground;
  for (const auto& p : points)
    if (p.id == id) own = p.label;
  int same = 0;
  int same_in = 0;
  s.s_neg = 1.0;
  for (const auto& p : points) {
    const bool inside = in(p.y, p.x);
    if (p.label == own) {
      ++same;
      same_in += inside ? 1 : 0;
    } else if (inside) {
      s.s_neg = 0.0;
    }
  }
  s.s_pos = static_cast<double>(same_in) / same;
  s.total = s.s_prior * s.s_edge * s.s_pos * s.s_neg;
  return s;
}

m2n2::PromptPoint next_click(const m2n2::Mask& gt, const m2n2::Mask& pred) {
  const int h = gt.height();
  const int w = gt.width();
  const std::size_t n = gt.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto err = [&](std::size_t i) { return (gt[i] != 0) != (pred[i] != 0); };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r * w + c);
      if (!err(i)) continue;
      if (c + 1 < w && err(i + 1)) parent[find(i + 1)] = find(i);
      if (r + 1 < h && err(i + static_cast<std::size_t>(w))) parent[find(i + static_cast<std::size_t>(w))] = find(i);
    }
  }
  std::vector<std::size_t> size(n, 0);
  std::vector<std::size_t> first(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!err(i)) continue;
    const std::size_t root = find(i);
    ++size[root];
    first[root] = std::min(first[root], i);
  }
  std::size_t best_root = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!size[i]) continue;
    if (best_root == n || size[i] > size[best_root] || (size[i] == size[best_root] && first[i] < first[best_root]))
      best_root = i;
  }
  long best_d = -1;
  std::size_t best = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!err(i) || find(i) != best_root) continue;
    const long r = static_cast<long>(i) / w;
    const long c = static_cast<long>(i) % w;
    long d = std::min({r + 1, h - r, c + 1, w - c});
    d *= d;
    for (std::size_t j = 0; j < n; ++j) {
      if (err(j) && find(j) == best_root) continue;
      const long dr = static_cast<long>(j) / w - r;
      const long dc = static_cast<long>(j) % w - c;
      d = std::min(d, dr * dr + dc * dc);
    }
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  m2n2::PromptPoint p;
  p.x = static_cast<int>(best % static_cast<std::size_t>(w));
  p.y = static_cast<int>(best / static_cast<std::size_t>(w));
  p.label = gt[best] ? m2n2::Label::foreground : m2n2::Label::background;
  return p;
}

double symmetric_kl(const Matrix& a, std::size_t n, std::size_t i, std::size_t j, double clip) {
  double d = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const double p = std::min(std::max(a[i * n + v], clip), 1.0);
    const double q = std::min(std::max(a[j * n + v], clip), 1.0);
    d += (p - q) * (std::log(p) - std::log(q));
  }
  return d;
}

m2n2::TransitionMatrix random_row_stochastic(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w, double lo) {
  m2n2::TransitionMatrix m;
  m.h = h;
  m.w = w;
  const std::size_t n = m.n();
  m.data.resize(n * n);
  std::uniform_real_distribution<double> u(lo, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n);
    double s = 0.0;
    for (double& v : row) s += v = u(rng);
    for (std::size_t j = 0; j < n; ++j) m.data[i * n + j] = static_cast<float>(row[j] / s);
  }
  return m;
}

m2n2::TransitionMatrix random_doubly_stochastic(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w) {
  m2n2::TransitionMatrix m;
  m.h = h;
  m.w = w;
  const std::size_t n = m.n();
  // weights are multiples of 1/1024 and n is a power of two, so every entry
  // and every row/column sum is exact in float
  const int units = 1024;
  std::uniform_int_distribution<int> pick(1, 8);
  const int perms = pick(rng);
  std::vector<int> share(static_cast<std::size_t>(perms) + 1, 0);
  int left = units;
  share[0] = 64;  // uniform component keeps the chain irreducible
  left -= share[0];
  for (int k = 1; k <= perms; ++k) {
    share[static_cast<std::size_t>(k)] = k == perms ? left : std::uniform_int_distribution<int>(0, left)(rng);
    left -= share[static_cast<std::size_t>(k)];
  }
  std::vector<double> acc(n * n, static_cast<double>(share[0]) / units / static_cast<double>(n));
  std::vector<std::size_t> perm(n);
  for (int k = 1; k <= perms; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) acc[i * n + perm[i]] += static_cast<double>(share[static_cast<std::size_t>(k)]) / units;
  }
  m.data.assign(acc.begin(), acc.end());
  m.stochasticity = m2n2::Stochasticity::doubly_stochastic;
  m.tolerance = 1e-6;
  return m;
}

m2n2::GuideImage random_guide(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  std::vector<float> data(static_cast<std::size_t>(h) * w * 3);
  for (float& v : data) v = u(rng);
  return m2n2::GuideImage(h, w, std::move(data));
}

std::vector<int> random_partition(std::mt19937_64& rng, int h, int w, int regions) {
  struct Rect {
    int r0, c0, r1, c1;
  };
  std::vector<Rect> rects{{0, 0, h, w}};
  while (static_cast<int>(rects.size()) < regions) {
    // split the largest rectangle along its longer side
    auto it = std::max_element(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) {
      return (a.r1 - a.r0) * (a.c1 - a.c0) < (b.r1 - b.r0) * (b.c1 - b.c0);
    });
    Rect r = *it;
    const int rh = r.r1 - r.r0;
    const int rw = r.c1 - r.c0;
    if (rh < 2 && rw < 2) break;
    Rect a = r;
    Rect b = r;
    if (rh >= rw) {
      const int cut = std::uniform_int_distribution<int>(r.r0 + 1, r.r1 - 1)(rng);
      a.r1 = cut;
      b.r0 = cut;
    } else {
      const int cut = std::uniform_int_distribution<int>(r.c0 + 1, r.c1 - 1)(rng);
      a.c1 = cut;
      b.c0 = cut;
    }
    *it = a;
    rects.push_back(b);
  }
  std::vector<int> labels(static_cast<std::size_t>(h) * w, 0);
  for (std::size_t k = 0; k < rects.size(); ++k)
    for (int r = rects[k].r0; r < rects[k].r1; ++r)
      for (int c = rects[k].c0; c < rects[k].c1; ++c) labels[static_cast<std::size_t>(r * w + c)] = static_cast<int>(k);
  return labels;
}

}  // namespace oracle
