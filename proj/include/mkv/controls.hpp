#pragma once

// Relaxed Markovian feedback policies F_t: R^d -> P(U) and the embedding of
// a control path t -> alpha_t as a probability measure on [0,T] x U.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mkv/measures.hpp"
#include "mkv/transport.hpp"

namespace mkv {

// Closed axis-aligned box [lo, hi] in state space.
struct StateBox {
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(std::span<const double> x) const noexcept {
    for (std::size_t c = 0; c < lo.size(); ++c)
      if (!(x[c] >= lo[c] && x[c] <= hi[c])) return false;
    return true;
  }
};

// Piecewise-constant table: time cell x state cell -> row of atom weights.
// State cells are the boxes in order followed by one overflow cell.
struct PolicyGrid {
  std::vector<double> time_knots;
  std::vector<StateBox> boxes;
  std::vector<std::vector<double>> atoms;    // points of U
  std::vector<std::vector<double>> weights;  // (time cells * (boxes + 1)) rows

  std::size_t time_cells() const noexcept { return time_knots.size() - 1; }
  std::size_t state_cells() const noexcept { return boxes.size() + 1; }
  std::size_t rows() const noexcept { return time_cells() * state_cells(); }
};

class FeedbackPolicy {
 public:
  enum class Kind { constant, grid };

  FeedbackPolicy(const FeedbackPolicy&) = default;
  FeedbackPolicy(FeedbackPolicy&&) noexcept = default;
  FeedbackPolicy& operator=(const FeedbackPolicy&) = default;
  FeedbackPolicy& operator=(FeedbackPolicy&&) noexcept = default;

  // alpha at every (t, x) with t in [t_begin, t_end].
  static FeedbackPolicy constant(ControlMeasure alpha, double t_begin, double t_end) {
    if (!(t_end > t_begin)) throw std::invalid_argument("constant policy: empty time domain");
    FeedbackPolicy p(Kind::constant, t_begin, t_end);
    p.rows_.push_back(std::move(alpha));
    return p;
  }

  static FeedbackPolicy grid(PolicyGrid grid, const ControlBox& box) {
    const auto& knots = grid.time_knots;
    if (knots.size() < 2) throw std::invalid_argument("grid policy: need at least two time knots");
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
      if (!(knots[i + 1] > knots[i])) throw std::invalid_argument("grid policy: time knots must be strictly increasing");
    if (grid.atoms.empty()) throw std::invalid_argument("grid policy: empty atom set");
    for (const auto& u : grid.atoms)
      if (!box.contains(u)) throw std::invalid_argument("grid policy: atom outside the control box");

    std::size_t state_dim = 0;
    for (const auto& b : grid.boxes) {
      if (b.lo.empty() || b.lo.size() != b.hi.size()) throw std::invalid_argument("grid policy: malformed box");
      if (state_dim == 0) state_dim = b.lo.size();
      if (b.lo.size() != state_dim) throw std::invalid_argument("grid policy: boxes differ in dimension");
      for (std::size_t c = 0; c < b.lo.size(); ++c)
        if (!(b.lo[c] < b.hi[c])) throw std::invalid_argument("grid policy: box with empty interior");
    }
    for (std::size_t i = 0; i < grid.boxes.size(); ++i)
      for (std::size_t j = i + 1; j < grid.boxes.size(); ++j) {
        const auto& a = grid.boxes[i];
        const auto& b = grid.boxes[j];
        bool overlap = true;
        for (std::size_t c = 0; c < a.lo.size() && overlap; ++c)
          overlap = std::min(a.hi[c], b.hi[c]) > std::max(a.lo[c], b.lo[c]);
        if (overlap)
          throw std::invalid_argument("grid policy: boxes " + std::to_string(i) + " and " + std::to_string(j) +
                                      " overlap");
      }

    if (grid.weights.size() != grid.rows())
      throw std::invalid_argument("grid policy: expected " + std::to_string(grid.rows()) + " weight rows, got " +
                                  std::to_string(grid.weights.size()));
    std::vector<double> flat_atoms;
    for (const auto& u : grid.atoms) flat_atoms.insert(flat_atoms.end(), u.begin(), u.end());

    FeedbackPolicy p(Kind::grid, knots.front(), knots.back());
    p.rows_.reserve(grid.rows());
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      const auto& row = grid.weights[r];
      if (row.size() != grid.atoms.size())
        throw std::invalid_argument("grid policy: row " + std::to_string(r) + " has the wrong length");
      double total = 0.0;
      for (double w : row) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("grid policy: negative or non-finite weight");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("grid policy: row " + std::to_string(r) + " is not normalized");
      p.rows_.emplace_back(box, flat_atoms, row);
    }

    // Lexicographic tie-break on shared faces: probe boxes by decreasing lower corner.
    p.box_order_.resize(grid.boxes.size());
    for (std::size_t i = 0; i < p.box_order_.size(); ++i) p.box_order_[i] = i;
    std::sort(p.box_order_.begin(), p.box_order_.end(), [&](std::size_t a, std::size_t b) {
      return detail::lex_less(grid.boxes[b].lo, grid.boxes[a].lo);
    });
    p.grid_ = std::move(grid);
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  double t_begin() const noexcept { return t_begin_; }
  double t_end() const noexcept { return t_end_; }
  const PolicyGrid& grid_data() const noexcept { return grid_; }

  bool covers(double t) const noexcept {
    const double tol = 1e-12 * std::max(1.0, std::abs(t_end_));
    return t >= t_begin_ - tol && t <= t_end_ + tol;
  }

  // Time cell is left-closed: knots[i] <= t < knots[i+1]; t = t_end maps to the last cell.
  std::size_t time_cell(double t) const noexcept {
    const auto& k = grid_.time_knots;
    const auto it = std::upper_bound(k.begin(), k.end(), t);
    const std::size_t idx = it == k.begin() ? 0 : static_cast<std::size_t>(it - k.begin()) - 1;
    return std::min(idx, k.size() - 2);
  }

  // Index into boxes, or boxes.size() for the overflow cell.
  std::size_t state_cell(std::span<const double> x) const noexcept {
    for (std::size_t i : box_order_)
      if (grid_.boxes[i].contains(x)) return i;
    return grid_.boxes.size();
  }

  // F_t(x). The reference stays valid for the policy's lifetime.
  const ControlMeasure& measure(double t, std::span<const double> x) const {
    if (!covers(t))
      throw std::domain_error("policy queried at t = " + std::to_string(t) + " outside [" + std::to_string(t_begin_) +
                              ", " + std::to_string(t_end_) + "]");
    if (kind_ == Kind::constant) return rows_.front();
    if (!grid_.boxes.empty() && x.size() != grid_.boxes.front().lo.size())
      throw std::invalid_argument("policy queried with a state of the wrong dimension");
    return rows_[time_cell(t) * grid_.state_cells() + state_cell(x)];
  }

  const std::vector<ControlMeasure>& rows() const noexcept { return rows_; }

 private:
  FeedbackPolicy(Kind kind, double t_begin, double t_end) : kind_(kind), t_begin_(t_begin), t_end_(t_end) {}

  Kind kind_;
  double t_begin_;
  double t_end_;
  PolicyGrid grid_;
  std::vector<ControlMeasure> rows_;
  std::vector<std::size_t> box_order_;
};

inline FeedbackPolicy constant_policy(ControlMeasure alpha, double horizon) {
  return FeedbackPolicy::constant(std::move(alpha), 0.0, horizon);
}

inline FeedbackPolicy grid_policy(PolicyGrid grid, const ControlBox& box) {
  return FeedbackPolicy::grid(std::move(grid), box);
}

inline const ControlMeasure& policy_measure(const FeedbackPolicy& policy, double t, std::span<const double> x) {
  return policy.measure(t, x);
}

// Discrete surrogate of the occupation measure bar-mu on [0,T] x U. Atoms are
// points (t, u) in R^{1+k}.
struct CanonicalControl {
  double horizon = 0.0;
  std::size_t control_dim = 0;
  EmpiricalMeasure measure;
};

// path[i] = (t_i, alpha_i) on the uniform grid t_i = i T / M, i < M. Cell i
// contributes atoms ((t_i + t_{i+1}) / 2, u_j) with weight w_ij / M.
inline CanonicalControl canonical_embed(const std::vector<std::pair<double, ControlMeasure>>& path, double horizon) {
  if (path.empty()) throw std::invalid_argument("canonical_embed: empty control path");
  if (!(horizon > 0.0)) throw std::invalid_argument("canonical_embed: horizon must be positive");
  const std::size_t cells = path.size();
  const double h = horizon / static_cast<double>(cells);
  const std::size_t k = path.front().second.dim();
  std::vector<double> atoms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < cells; ++i) {
    const auto& [t, alpha] = path[i];
    if (std::abs(t - static_cast<double>(i) * h) > 1e-9 * horizon)
      throw std::invalid_argument("canonical_embed: control path is not on a uniform grid over [0, T]");
    if (alpha.dim() != k) throw std::invalid_argument("canonical_embed: control dimension changes along the path");
    const double mid = (static_cast<double>(i) + 0.5) * h;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      atoms.push_back(mid);
      const auto u = alpha.atom(j);
      atoms.insert(atoms.end(), u.begin(), u.end());
      weights.push_back(alpha.weight(j) / static_cast<double>(cells));
    }
  }
  return {horizon, k, EmpiricalMeasure(1 + k, std::move(atoms), std::move(weights))};
}

// Exact W_1 on [0,T] x U with the Euclidean metric of R^{1+k}.
inline double relaxed_distance(const CanonicalControl& a, const CanonicalControl& b) {
  if (a.control_dim != b.control_dim) throw std::invalid_argument("relaxed_distance: control dimension mismatch");
  return wp_exact_small(a.measure, b.measure, 1);
}

}  // namespace mkv
