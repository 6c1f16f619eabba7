#pragma once

// Finitely supported probability measures on R^d and on the control box U.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mkv {

namespace detail {

inline double normalize_weights(std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("measure weight is not finite");
    if (w < 0.0) throw std::invalid_argument("measure weight is negative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("measure weights are all zero");
  for (double& w : weights) w /= total;
  return total;
}

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

inline bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

// Weighted atom cloud on R^d with weights summing to one. The mean is cached
// at construction so that mean-field coefficients can read it in O(d).
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::size_t dim, std::vector<double> atoms, std::vector<double> weights)
      : dim_(dim), atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (dim_ == 0) throw std::invalid_argument("measure dimension must be at least 1");
    if (atoms_.empty() || atoms_.size() % dim_ != 0)
      throw std::invalid_argument("atom array is empty or not a multiple of the dimension");
    if (weights_.size() != atoms_.size() / dim_)
      throw std::invalid_argument("weights and atoms have mismatched lengths");
    for (double c : atoms_)
      if (!std::isfinite(c)) throw std::invalid_argument("atom coordinate is not finite");
    detail::normalize_weights(weights_);
    compute_mean();
  }

  // Uniform weights.
  EmpiricalMeasure(std::size_t dim, std::vector<double> atoms)
      : dim_(dim), atoms_(std::move(atoms)) {
    if (dim_ == 0) throw std::invalid_argument("measure dimension must be at least 1");
    if (atoms_.empty() || atoms_.size() % dim_ != 0)
      throw std::invalid_argument("atom array is empty or not a multiple of the dimension");
    for (double c : atoms_)
      if (!std::isfinite(c)) throw std::invalid_argument("atom coordinate is not finite");
    weights_.assign(atoms_.size() / dim_, 1.0 / static_cast<double>(atoms_.size() / dim_));
    uniform_ = true;
    compute_mean();
  }

  static EmpiricalMeasure dirac(std::span<const double> point) {
    return EmpiricalMeasure(point.size(), std::vector<double>(point.begin(), point.end()));
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> atom(std::size_t i) const noexcept {
    return {atoms_.data() + i * dim_, dim_};
  }
  double weight(std::size_t i) const noexcept { return weights_[i]; }
  const std::vector<double>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::span<const double> mean() const noexcept { return mean_; }

  bool is_uniform() const noexcept {
    if (uniform_) return true;
    const double w0 = weights_.front();
    return std::all_of(weights_.begin(), weights_.end(),
                       [w0](double w) { return std::abs(w - w0) <= 1e-15; });
  }

 private:
  void compute_mean() {
    mean_.assign(dim_, 0.0);
    for (std::size_t i = 0; i < weights_.size(); ++i)
      for (std::size_t c = 0; c < dim_; ++c) mean_[c] += weights_[i] * atoms_[i * dim_ + c];
  }

  std::size_t dim_;
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> mean_;
  bool uniform_ = false;
};

// Builds a measure from sample points, uniform unless weights are given.
inline EmpiricalMeasure empirical_from_samples(const std::vector<std::vector<double>>& samples,
                                               const std::optional<std::vector<double>>& weights = {}) {
  if (samples.empty()) throw std::invalid_argument("empirical_from_samples: empty sample list");
  const std::size_t dim = samples.front().size();
  std::vector<double> atoms;
  atoms.reserve(samples.size() * dim);
  for (const auto& s : samples) {
    if (s.size() != dim) throw std::invalid_argument("empirical_from_samples: samples differ in dimension");
    atoms.insert(atoms.end(), s.begin(), s.end());
  }
  if (!weights) return EmpiricalMeasure(dim, std::move(atoms));
  if (weights->size() != samples.size())
    throw std::invalid_argument("empirical_from_samples: mismatched lengths");
  return EmpiricalMeasure(dim, std::move(atoms), *weights);
}

// (1 - eps) mu + eps nu.
inline EmpiricalMeasure mixture(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double eps) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("mixture: dimension mismatch");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("mixture: eps outside [0,1]");
  std::vector<double> atoms = mu.atoms();
  atoms.insert(atoms.end(), nu.atoms().begin(), nu.atoms().end());
  std::vector<double> weights;
  weights.reserve(mu.size() + nu.size());
  for (double w : mu.weights()) weights.push_back((1.0 - eps) * w);
  for (double w : nu.weights()) weights.push_back(eps * w);
  return EmpiricalMeasure(mu.dim(), std::move(atoms), std::move(weights));
}

// sum_i w_i |x_i|^p
inline double abs_moment(const EmpiricalMeasure& mu, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("abs_moment: p must be >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) total += mu.weight(i) * std::pow(detail::norm(mu.atom(i)), p);
  return total;
}

// Total variation ||mu - nu|| = sum over merged atoms of |mu({x}) - nu({x})|.
// Atoms whose coordinates agree within 1e-12 are merged; the lexicographically
// smallest one represents the group.
inline double tv_discrete(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("tv_discrete: dimension mismatch");
  constexpr double kMergeTol = 1e-12;
  struct Entry {
    std::span<const double> x;
    double signed_mass;
  };
  std::vector<Entry> entries;
  entries.reserve(mu.size() + nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) entries.push_back({mu.atom(i), mu.weight(i)});
  for (std::size_t j = 0; j < nu.size(); ++j) entries.push_back({nu.atom(j), -nu.weight(j)});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return detail::lex_less(a.x, b.x); });

  auto close = [](std::span<const double> a, std::span<const double> b) {
    for (std::size_t c = 0; c < a.size(); ++c)
      if (std::abs(a[c] - b[c]) > kMergeTol) return false;
    return true;
  };

  // Lexicographic order does not put every near-coincident pair next to each
  // other in d >= 2, so each entry joins the first open group it matches.
  std::vector<std::span<const double>> reps;
  std::vector<double> mass;
  for (const Entry& e : entries) {
    bool merged = false;
    for (std::size_t g = reps.size(); g-- > 0;) {
      if (e.x[0] - reps[g][0] > kMergeTol) break;
      if (close(e.x, reps[g])) {
        mass[g] += e.signed_mass;
        merged = true;
        break;
      }
    }
    if (!merged) {
      reps.push_back(e.x);
      mass.push_back(e.signed_mass);
    }
  }
  double tv = 0.0;
  for (double m : mass) tv += std::abs(m);
  return std::min(tv, 2.0);
}

// Axis-aligned compact box [lo, hi] in R^k holding the controls.
struct ControlBox {
  std::vector<double> lo;
  std::vector<double> hi;

  ControlBox() = default;
  ControlBox(std::vector<double> lower, std::vector<double> upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("control box: bad dimensions");
    for (std::size_t c = 0; c < lo.size(); ++c)
      if (!(std::isfinite(lo[c]) && std::isfinite(hi[c]) && lo[c] <= hi[c]))
        throw std::invalid_argument("control box: empty or unbounded");
  }

  std::size_t dim() const noexcept { return lo.size(); }

  bool contains(std::span<const double> u, double tol = 1e-12) const noexcept {
    if (u.size() != lo.size()) return false;
    for (std::size_t c = 0; c < lo.size(); ++c)
      if (!(u[c] >= lo[c] - tol && u[c] <= hi[c] + tol)) return false;
    return true;
  }

  double diameter() const {
    double s = 0.0;
    for (std::size_t c = 0; c < lo.size(); ++c) s += (hi[c] - lo[c]) * (hi[c] - lo[c]);
    return std::sqrt(s);
  }

  std::vector<double> center() const {
    std::vector<double> m(lo.size());
    for (std::size_t c = 0; c < lo.size(); ++c) m[c] = 0.5 * (lo[c] + hi[c]);
    return m;
  }
};

// Probability measure on U with finitely many atoms, all inside the box.
class ControlMeasure {
 public:
  ControlMeasure(const ControlBox& box, std::vector<double> atoms, std::vector<double> weights)
      : dim_(box.dim()), atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (atoms_.empty() || atoms_.size() % dim_ != 0)
      throw std::invalid_argument("control measure: atom array is empty or not a multiple of k");
    if (weights_.size() != atoms_.size() / dim_)
      throw std::invalid_argument("control measure: weights and atoms have mismatched lengths");
    detail::normalize_weights(weights_);
    for (std::size_t j = 0; j < size(); ++j)
      if (!box.contains(atom(j))) throw std::invalid_argument("control measure: atom outside the control box");
  }

  static ControlMeasure dirac(const ControlBox& box, std::span<const double> u) {
    return ControlMeasure(box, std::vector<double>(u.begin(), u.end()), {1.0});
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> atom(std::size_t j) const noexcept { return {atoms_.data() + j * dim_, dim_}; }
  double weight(std::size_t j) const noexcept { return weights_[j]; }
  const std::vector<double>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  // Integral of u against the measure.
  std::vector<double> mean() const {
    std::vector<double> m(dim_, 0.0);
    for (std::size_t j = 0; j < size(); ++j)
      for (std::size_t c = 0; c < dim_; ++c) m[c] += weights_[j] * atoms_[j * dim_ + c];
    return m;
  }

  bool operator==(const ControlMeasure&) const = default;

 private:
  std::size_t dim_;
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

// lambda a + (1 - lambda) b, atoms concatenated.
inline ControlMeasure blend(const ControlBox& box, const ControlMeasure& a, const ControlMeasure& b, double lambda) {
  std::vector<double> atoms = a.atoms();
  atoms.insert(atoms.end(), b.atoms().begin(), b.atoms().end());
  std::vector<double> weights;
  for (double w : a.weights()) weights.push_back(lambda * w);
  for (double w : b.weights()) weights.push_back((1.0 - lambda) * w);
  return ControlMeasure(box, std::move(atoms), std::move(weights));
}

}  // namespace mkv
