#pragma once

// Independent reference computations for the transport and statistics tests.
// None of these share code with the library under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// Points are rows of a flat array with `dim` columns.
inline double dist(const std::vector<double>& a, std::size_t i, const std::vector<double>& b, std::size_t j,
                   std::size_t dim) {
  double s = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const double d = a[i * dim + c] - b[j * dim + c];
    s += d * d;
  }
  return std::sqrt(s);
}

// min over permutations of (1/n) sum |x_i - y_sigma(i)|^p, then the p-th root.
// Equal weights, n = m.
inline double wp_permutation(const std::vector<double>& x, const std::vector<double>& y, std::size_t dim, int p) {
  const std::size_t n = x.size() / dim;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(dist(x, i, y, perm[i], dim), p);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / static_cast<double>(n), 1.0 / p);
}

// Same with a truncated ground cost min(1, |x - y|), p = 1.
inline double w1_truncated_permutation(const std::vector<double>& x, const std::vector<double>& y, std::size_t dim) {
  const std::size_t n = x.size() / dim;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::min(1.0, dist(x, i, y, perm[i], dim));
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

// O(n^3) Hungarian algorithm (potentials, shortest augmenting paths) on a
// square cost matrix; returns the minimal total cost.
inline double assignment_cost(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += a[p[j] - 1][j - 1];
  return total;
}

inline double w1_hungarian(const std::vector<double>& x, const std::vector<double>& y, std::size_t dim) {
  const std::size_t n = x.size() / dim;
  std::vector<std::vector<double>> c(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i][j] = dist(x, i, y, j, dim);
  return assignment_cost(c) / static_cast<double>(n);
}

// 1-D W_1 as the integral of |F^{-1}(u) - G^{-1}(u)| over a common refinement.
inline double w1_quantile_1d(std::vector<double> x, std::vector<double> wx, std::vector<double> y,
                             std::vector<double> wy) {
  auto sort_pair = [](std::vector<double>& pts, std::vector<double>& w) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
    std::vector<double> p2, w2;
    double total = 0.0;
    for (double v : w) total += v;
    for (std::size_t i : idx) {
      p2.push_back(pts[i]);
      w2.push_back(w[i] / total);
    }
    pts = p2;
    w = w2;
  };
  sort_pair(x, wx);
  sort_pair(y, wy);
  std::size_t i = 0, j = 0;
  double ri = wx[0], rj = wy[0], total = 0.0;
  while (i < x.size() && j < y.size()) {
    const double step = std::min(ri, rj);
    total += step * std::abs(x[i] - y[j]);
    ri -= step;
    rj -= step;
    if (ri <= 1e-15) {
      if (++i < x.size()) ri = wx[i];
    }
    if (rj <= 1e-15) {
      if (++j < y.size()) rj = wy[j];
    }
  }
  return total;
}

// Total variation sup_A |mu(A) - nu(A)| doubled: sum of |mu({z}) - nu({z})|
// over the union of supports (exact coordinate matches).
inline double tv_exact(const std::vector<double>& x, const std::vector<double>& wx, const std::vector<double>& y,
                       const std::vector<double>& wy, std::size_t dim) {
  struct Atom {
    std::vector<double> p;
    double mass;
  };
  std::vector<Atom> atoms;
  auto add = [&](const std::vector<double>& pts, const std::vector<double>& w, double sign) {
    double total = 0.0;
    for (double v : w) total += v;
    for (std::size_t i = 0; i < w.size(); ++i) {
      std::vector<double> p(pts.begin() + static_cast<std::ptrdiff_t>(i * dim),
                            pts.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      auto it = std::find_if(atoms.begin(), atoms.end(), [&](const Atom& a) { return a.p == p; });
      if (it == atoms.end()) atoms.push_back({p, sign * w[i] / total});
      else it->mass += sign * w[i] / total;
    }
  };
  add(x, wx, 1.0);
  add(y, wy, -1.0);
  double s = 0.0;
  for (const auto& a : atoms) s += std::abs(a.mass);
  return s;
}

}  // namespace oracle
