#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "scdens/core.hpp"
#include "scdens/random.hpp"

namespace scdens {

// Closed proper concave function, linear between knots and -inf off
// [knots.front(), knots.back()].
class PiecewiseConcave {
 public:
  PiecewiseConcave(std::vector<double> knots, std::vector<double> values, double slope_tol = tol::concavity) {
    if (knots.empty() || knots.size() != values.size())
      throw DomainError("knots and values must be nonempty and of equal length");
    std::vector<std::size_t> idx(knots.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return knots[a] < knots[b]; });
    for (auto i : idx) {
      if (!std::isfinite(knots[i]) || !std::isfinite(values[i])) throw DomainError("knots and values must be finite");
      if (!x_.empty() && x_.back() == knots[i]) {
        v_.back() = std::max(v_.back(), values[i]);
      } else {
        x_.push_back(knots[i]);
        v_.push_back(values[i]);
      }
    }
    for (std::size_t j = 1; j + 1 < x_.size(); ++j) {
      double s0 = slope(j - 1), s1 = slope(j);
      if (s1 > s0 + slope_tol * std::max(1.0, std::abs(s0)))
        throw DomainError("values are not concave: slope increases at knot " + std::to_string(j));
    }
  }

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return v_; }
  std::size_t size() const { return x_.size(); }
  Interval domain() const { return {x_.front(), x_.back()}; }
  double slope(std::size_t j) const { return (v_[j + 1] - v_[j]) / (x_[j + 1] - x_[j]); }
  double max_value() const { return *std::max_element(v_.begin(), v_.end()); }
  double min_value() const { return *std::min_element(v_.begin(), v_.end()); }

  ExtReal operator()(double x) const {
    if (x < x_.front() || x > x_.back() || std::isnan(x)) return ExtReal::neg_inf();
    return ExtReal(at(x));
  }

  // Value at x inside the domain.
  double at(double x) const {
    if (x < x_.front() || x > x_.back()) throw DomainError("evaluation outside the effective domain");
    if (x_.size() == 1 || x == x_.back()) return v_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - x_.begin()) - 1;
    double t = (x - x_[j]) / (x_[j + 1] - x_[j]);
    return v_[j] + t * (v_[j + 1] - v_[j]);
  }

  // Index j of the piece [x_j, x_{j+1}] holding x (x inside the domain).
  std::size_t piece(double x) const {
    if (x_.size() < 2) return 0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - x_.begin());
    return std::clamp<std::size_t>(j, 1, x_.size() - 1) - 1;
  }

  PiecewiseConcave restrict_domain(Interval I) const {
    double lo = std::max(I.lo, x_.front()), hi = std::min(I.hi, x_.back());
    if (!(lo <= hi)) throw DomainError("restrict_domain: empty intersection with the domain");
    std::vector<double> xs{lo}, vs{at(lo)};
    for (std::size_t i = 0; i < x_.size(); ++i)
      if (x_[i] > lo && x_[i] < hi) xs.push_back(x_[i]), vs.push_back(v_[i]);
    if (hi > lo) xs.push_back(hi), vs.push_back(at(hi));
    return from_trusted(std::move(xs), std::move(vs));
  }

  // {x : phi(x) >= y}.
  std::optional<Interval> superlevel_set(double y) const {
    std::size_t k = x_.size();
    std::size_t first = k, last = k;
    for (std::size_t i = 0; i < k; ++i)
      if (v_[i] >= y) {
        if (first == k) first = i;
        last = i;
      }
    if (first == k) return std::nullopt;
    double lo = x_[first], hi = x_[last];
    if (first > 0) lo = crossing(first - 1, first, y);
    if (last + 1 < k) hi = crossing(last + 1, last, y);
    return Interval{lo, hi};
  }

  // Restriction to {phi >= y_lo}, clipped above at y_hi.
  PiecewiseConcave restrict_range(double y_lo, double y_hi) const {
    auto D = superlevel_set(y_lo);
    if (!D) throw DomainError("restrict_range: empty superlevel set");
    PiecewiseConcave base = restrict_domain(*D);
    if (!(y_hi < base.max_value())) return base;
    std::vector<double> xs, vs;
    const auto& bx = base.x_;
    const auto& bv = base.v_;
    for (std::size_t i = 0; i < bx.size(); ++i) {
      if (i > 0 && (bv[i - 1] - y_hi) * (bv[i] - y_hi) < 0) {
        xs.push_back(base.crossing(i - 1, i, y_hi));
        vs.push_back(y_hi);
      }
      xs.push_back(bx[i]);
      vs.push_back(std::min(bv[i], y_hi));
    }
    return from_trusted(std::move(xs), std::move(vs));
  }

  // Pointwise a * phi + b with a > 0.
  PiecewiseConcave affine_values(double a, double b) const {
    std::vector<double> vs(v_);
    for (auto& v : vs) v = a * v + b;
    return from_trusted(x_, std::move(vs));
  }

  // x -> phi((x - b) / a) for a > 0.
  PiecewiseConcave affine_argument(double a, double b) const {
    std::vector<double> xs(x_);
    for (auto& x : xs) x = a * x + b;
    return from_trusted(std::move(xs), v_);
  }

  // x -> phi(-x).
  PiecewiseConcave reflect() const {
    std::vector<double> xs(x_.rbegin(), x_.rend()), vs(v_.rbegin(), v_.rend());
    for (auto& x : xs) x = -x;
    return from_trusted(std::move(xs), std::move(vs));
  }

  // Internal constructor for inputs known to be sorted, distinct and concave.
  static PiecewiseConcave from_trusted(std::vector<double> xs, std::vector<double> vs) {
    PiecewiseConcave p;
    // Drop zero-width pieces produced by clipping.
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!p.x_.empty() && !(xs[i] > p.x_.back())) {
        p.v_.back() = std::max(p.v_.back(), vs[i]);
        continue;
      }
      p.x_.push_back(xs[i]);
      p.v_.push_back(vs[i]);
    }
    return p;
  }

 private:
  PiecewiseConcave() = default;

  // Point between knots i and j where the linear interpolant equals y.
  double crossing(std::size_t i, std::size_t j, double y) const {
    double t = (y - v_[i]) / (v_[j] - v_[i]);
    t = std::clamp(t, 0.0, 1.0);
    return x_[i] + t * (x_[j] - x_[i]);
  }

  std::vector<double> x_;
  std::vector<double> v_;
};

// Random member of C([b1,b2],[-B,B]).
inline PiecewiseConcave sample_random_concave(double b1, double b2, double B, int n_knots, std::uint64_t seed) {
  if (!(b1 < b2) || !(B > 0) || n_knots < 2) throw DomainError("sample_random: invalid bounds or knot count");
  Rng rng(seed);
  std::vector<double> xs(n_knots);
  xs.front() = b1;
  xs.back() = b2;
  for (int i = 1; i + 1 < n_knots; ++i) xs[i] = rng.uniform(b1, b2);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::size_t k = xs.size();
  double scale = 2 * B / (b2 - b1);
  std::vector<double> slopes(k - 1);
  for (auto& s : slopes) s = scale * rng.uniform(-2.0, 2.0);
  std::sort(slopes.begin(), slopes.end(), std::greater<>());
  std::vector<double> vs(k);
  vs[0] = rng.uniform(-B, B);
  for (std::size_t i = 1; i < k; ++i) vs[i] = vs[i - 1] + slopes[i - 1] * (xs[i] - xs[i - 1]);
  double lo = *std::min_element(vs.begin(), vs.end()), hi = *std::max_element(vs.begin(), vs.end());
  // Map [lo, hi] affinely onto a random subinterval of [-B, B].
  double width = hi - lo;
  double target = 2 * B * rng.uniform(0.05, 1.0);
  double a = width > 0 ? std::min(1.0, target / width) : 1.0;
  double span = a * width;
  double start = rng.uniform(-B, B - span);
  for (auto& v : vs) v = std::clamp(start + a * (v - lo), -B, B);
  return PiecewiseConcave::from_trusted(std::move(xs), std::move(vs));
}

}  // namespace scdens
