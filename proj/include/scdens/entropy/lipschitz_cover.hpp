#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <vector>

#include "scdens/concave_fn.hpp"
#include "scdens/core.hpp"

namespace scdens::entropy {

// Bracket values at one point. `indexed` is false when the bracket handed
// out for a member is not one of the counted brackets (member outside the
// class, or a rounding accident).
struct BracketValue {
  double lower = 0.0;
  double upper = 0.0;
  bool indexed = true;
};

namespace detail {

inline double lchoose(double n, double k) {
  if (k < 0 || k > n) return -kInf;
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

}  // namespace detail

// Sup-norm brackets of width eps for concave f on [a, b] with |f| <= B and
// |f'| <= Gamma.
//
// With k cells of width h and slope levels sigma_j = Gamma (k - 2j) / k,
// j = 0..k, every member has crossing points t_j = sup{x : f'(x) >= sigma_j}.
// Each cell holding c crossings is cut into c slots; snapping every crossing
// to the left end of its slot gives a knot set T whose size is at most 2k + 2.
// The lower bracket is the linear interpolation of q floor(f / q) over T and
// the upper bracket adds eps. A bracket is indexed by the per-cell crossing
// counts, the slot pattern, the first quantized value and one of three
// quantized increments per piece of T. Brackets are produced on demand.
class LipschitzCover {
 public:
  LipschitzCover(double a, double b, double B, double gamma, double eps)
      : a_(a), b_(b), B_(B), gamma_(gamma), eps_(eps) {
    if (!(a < b) || !(B > 0) || !(gamma > 0) || !(eps > 0) || !std::isfinite(B) || !std::isfinite(gamma))
      throw DomainError("Lipschitz cover needs a < b and positive finite B, Gamma, eps");
    if (eps >= 2 * B) {
      trivial_ = true;
      return;
    }
    double L = b - a;
    double kk = std::max(1.0, std::ceil(std::sqrt(8.8 * (B + gamma * L) / eps)));
    if (!(kk < 0x1p52)) throw ThresholdError("Lipschitz cover: eps too small for the slope bound");
    k_ = static_cast<std::int64_t>(kk);
    h_ = L / kk;
    q_ = eps / 2;
    double k = kk;
    log_card_ = detail::lchoose(2 * k, k - 1) + (k + 1) * 2 * std::numbers::ln2 + std::log(2 * B / q_ + 2) +
                (2 * k + 1) * std::log(3.0);
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double bound() const { return B_; }
  double gamma() const { return gamma_; }
  double eps() const { return eps_; }
  bool trivial() const { return trivial_; }
  std::int64_t cells() const { return k_; }
  double log_cardinality() const { return log_card_; }
  // Sup-norm width of every bracket.
  double width() const { return trivial_ ? 2 * B_ : eps_; }
  double quantum() const { return q_; }

  class Located;
  Located locate(const PiecewiseConcave& f) const;

  // Number of levels j in [0, k] with sigma_j > s, computed without
  // cancellation against Gamma.
  std::int64_t levels_above(double s) const {
    if (s == -kInf) return k_ + 1;
    double t = s * static_cast<double>(k_) / gamma_;
    double kd = static_cast<double>(k_);
    if (t >= kd) return 0;
    if (t < -kd) return k_ + 1;
    auto m0 = static_cast<std::int64_t>(std::floor(t)) + 1;
    if ((m0 - k_) & 1) ++m0;
    m0 = std::max(m0, -k_);
    if (m0 > k_) return 0;
    return (k_ - m0) / 2 + 1;
  }

  double sigma(std::int64_t n) const {
    if (n <= 0) return gamma_;
    if (n >= k_) return -gamma_;
    return gamma_ * static_cast<double>(k_ - 2 * n) / static_cast<double>(k_);
  }

  std::int64_t cell(double x) const {
    double c = std::floor((x - a_) / h_);
    return static_cast<std::int64_t>(std::clamp(c, 0.0, static_cast<double>(k_ - 1)));
  }
  double cell_start(std::int64_t i) const { return a_ + static_cast<double>(i) * h_; }
  double cell_end(std::int64_t i) const { return i == k_ - 1 ? b_ : a_ + static_cast<double>(i + 1) * h_; }

 private:
  double a_, b_, B_, gamma_, eps_;
  bool trivial_ = false;
  std::int64_t k_ = 0;
  double h_ = 0, q_ = 0;
  double log_card_ = 0;
};

class LipschitzCover::Located {
 public:
  Located(const LipschitzCover& c, const PiecewiseConcave& f) : c_(c) {
    if (c.trivial()) return;
    const auto& xs = f.knots();
    const auto& vs = f.values();
    double rel = 1e-9;
    if (xs.front() > c.a() + rel * (c.b() - c.a()) || xs.back() < c.b() - rel * (c.b() - c.a())) indexed_ = false;
    z_.assign(xs.begin(), xs.end());
    v_.assign(vs.begin(), vs.end());
    z_.front() = std::min(z_.front(), c.a());
    z_.back() = std::max(z_.back(), c.b());
    for (double v : v_)
      if (std::abs(v) > c.bound() * (1 + rel) + 1e-12) indexed_ = false;
    // slope_[m] is the slope of piece m (between z_{m-1} and z_m), m = 1..p.
    std::size_t p = z_.size() - 1;
    slope_.assign(p + 2, -kInf);
    slope_[0] = kInf;
    for (std::size_t m = 1; m <= p; ++m) {
      double s = (v_[m] - v_[m - 1]) / (z_[m] - z_[m - 1]);
      if (std::abs(s) > c.gamma() * (1 + rel)) indexed_ = false;
      slope_[m] = std::min(s, slope_[m - 1]);
    }
    above_.resize(p + 2);
    for (std::size_t m = 1; m <= p + 1; ++m) above_[m] = c.levels_above(slope_[m]);
    cellidx_.resize(z_.size());
    for (std::size_t m = 0; m < z_.size(); ++m) cellidx_[m] = c.cell(z_[m]);
  }

  bool indexed() const { return indexed_; }

  BracketValue operator()(double x) const {
    const auto& c = c_;
    if (c.trivial()) return {-c.bound(), c.bound(), true};
    x = std::clamp(x, c.a(), c.b());
    std::int64_t i = c.cell(x);
    double cs = c.cell_start(i), ce = c.cell_end(i);
    auto lo = std::lower_bound(cellidx_.begin(), cellidx_.end(), i) - cellidx_.begin();
    auto hi = std::upper_bound(cellidx_.begin(), cellidx_.end(), i) - cellidx_.begin();
    std::int64_t before = lo == 0 ? 0 : above_[lo];
    std::int64_t total = 0;
    for (auto m = lo; m < hi; ++m) total += count(m);

    struct Node {
      double t;
      std::int64_t le, lt;
    };
    std::vector<Node> nodes{{cs, before, before}};
    double rho = 0;
    if (total > 0) {
      rho = (ce - cs) / static_cast<double>(total);
      std::int64_t run = before;
      for (auto m = lo; m < hi; ++m) {
        std::int64_t cnt = count(m);
        if (cnt == 0) continue;
        double slot = std::min(std::floor((z_[m] - cs) / rho), static_cast<double>(total - 1));
        double tau = cs + std::max(slot, 0.0) * rho;
        if (tau <= nodes.back().t) {
          nodes.back().le += cnt;
        } else {
          nodes.push_back({tau, run + cnt, run});
        }
        run += cnt;
      }
    }
    if (ce > nodes.back().t) {
      std::int64_t n = nodes.back().le;
      nodes.push_back({ce, n, n});
    }
    std::size_t j = 0;
    while (j + 2 < nodes.size() && nodes[j + 1].t <= x) ++j;
    if (nodes.size() == 1) {
      double l = c.quantum() * quant(nodes[0].t);
      return {l, l + c.eps(), indexed_};
    }
    const Node& u = nodes[j];
    const Node& w = nodes[j + 1];
    double vu = quant(u.t), vw = quant(w.t);
    double len = w.t - u.t;
    double l = c.quantum() * (vu + (vw - vu) * (x - u.t) / len);
    bool ok = indexed_;
    // Window of admissible quantized increments on this piece.
    double rp = u.le > u.lt ? std::min(rho, len) : 0.0;
    double inc_lo = c.sigma(u.le) * len;
    double inc_hi = c.sigma(u.lt - 1) * rp + c.sigma(u.le - 1) * (len - rp);
    double slack = 1e-9 * (1 + std::abs(inc_lo) / c.quantum());
    double dv = vw - vu;
    if (!(dv > inc_lo / c.quantum() - 1 - slack && dv < inc_hi / c.quantum() + 1 + slack)) ok = false;
    return {l, l + c.eps(), ok};
  }

 private:
  std::int64_t count(std::ptrdiff_t m) const {
    if (m == 0) return above_[1];
    return above_[m + 1] - above_[m];
  }
  double value(double t) const {
    if (t <= z_.front()) return v_.front();
    if (t >= z_.back()) return v_.back();
    auto it = std::upper_bound(z_.begin(), z_.end(), t);
    std::size_t j = static_cast<std::size_t>(it - z_.begin()) - 1;
    return v_[j] + (v_[j + 1] - v_[j]) * (t - z_[j]) / (z_[j + 1] - z_[j]);
  }
  double quant(double t) const { return std::floor(value(t) / c_.quantum()); }

  LipschitzCover c_;
  std::vector<double> z_, v_, slope_;
  std::vector<std::int64_t> above_, cellidx_;
  bool indexed_ = true;
};

inline LipschitzCover::Located LipschitzCover::locate(const PiecewiseConcave& f) const { return Located(*this, f); }

}  // namespace scdens::entropy
