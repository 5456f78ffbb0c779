#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "scdens/concave_fn.hpp"
#include "scdens/core.hpp"
#include "scdens/entropy/bounded_concave_cover.hpp"
#include "scdens/transforms.hpp"

namespace scdens::entropy {

// L_r brackets for {h o phi : dom phi in [b1, b2], h o phi <= B}.
//
// Values are handled through h~(y) = h(lambda y + c) / B with h~^{-1}(1) = -1:
// a pure rescaling (c = 0) for the homogeneous transforms (-y)^{1/s}, a
// translation (lambda = 1) otherwise. Level gamma covers the part of phi between y_gamma = -2^gamma
// and y_{gamma-1}: its superlevel set is sandwiched between two unions of
// cells of a support grid, and phi on the inner one is bracketed by a
// bounded-concave cover clipped into [y_gamma, y_{gamma-1}]. Between the inner
// and outer sets the bracket is [0, h~(y_{gamma-1})]; below the deepest level it
// is [0, eps / eps0]. When h vanishes below a finite y0 a single level down to
// y0 is enough.
class TransformedCover {
 public:
  struct Level {
    double y_lo, y_hi;  // translated value range of the level
    double eps_b;       // bracket budget for the bounded-concave part, unit scale
    double eps_s;       // support-grid resolution, unit scale
    long long grid;     // number of grid cells on [b1, b2]
    double log_count;
  };

  TransformedCover(TransformSpec h, double b1, double b2, double B, double eps, double r, Thresholds th = {})
      : h_(std::move(h)), b1_(b1), b2_(b2), B_(B), r_(r), th_(th) {
    if (!(b1 < b2) || !(B > 0) || !(eps > 0) || !(r >= 1))
      throw DomainError("transformed cover needs b1 < b2, B > 0, eps > 0, r >= 1");
    L_ = b2 - b1;
    unit_ = B * std::pow(L_, 1 / r);
    e_ = eps / unit_;
    if (e_ > th.eps_star)
      throw ThresholdError("transformed cover: eps / (B (b2-b1)^(1/r)) = " + std::to_string(e_) +
                           " exceeds eps* = " + std::to_string(th.eps_star));
    eps_ = eps;
    if (h_.kind() == TransformKind::PowerS && h_.s() < 0) {
      lambda_ = -h_.inverse(B);
      c_ = 0;
    } else {
      c_ = h_.inverse(B) + 1;
    }
    bool finite_floor = std::isfinite(h_.y0());
    if (finite_floor) {
      if (h_.kind() == TransformKind::PowerS && h_.s() > 1)
        throw UnsupportedTransform("transformed cover: h' is unbounded at the lower limit (s > 1)");
      if (h_.kind() == TransformKind::General && check_assumptions(h_).t2.status != AssumptionStatus::Pass)
        throw UnsupportedTransform("transformed cover: h fails the bounded-derivative condition at y0");
      single_ = true;
      double floor_y = (h_.y0() - c_) / lambda_;
      add_level(floor_y, -1.0, e_, std::pow(e_, r));
    } else {
      if (h_.kind() == TransformKind::General && check_assumptions(h_).t1.status != AssumptionStatus::Pass)
        throw UnsupportedTransform("transformed cover: h fails the left-tail condition");
      // Level budgets use a working exponent strictly inside (1, 2 alpha):
      // the count sum needs it above 1, the plateau sizes below 2 alpha.
      if (!(h_.alpha() > 0.5))
        throw UnsupportedTransform("transformed cover needs a tail exponent above 1/2");
      alpha_ = 0.5 * (1 + std::min(2 * h_.alpha(), 4.0));
      double deep = std::abs(tinv(e_ / th.eps0));
      int k = std::max(1, static_cast<int>(std::ceil(std::log2(deep) - 1e-12)));
      for (int g = 1; g <= k; ++g) {
        double yprev = -std::ldexp(1.0, g - 1);
        add_level(-std::ldexp(1.0, g), yprev, e_ * std::pow(-yprev, (alpha_ + 1) / 2),
                  std::pow(e_, r) * std::pow(-yprev, r * alpha_ / 2));
      }
      declared_r_ += std::pow(e_ / th.eps0, r);
    }
  }

  // h~ and its inverse.
  double ht(double y) const { return h_(lambda_ * y + c_) / B_; }
  double tinv(double u) const { return (h_.inverse(u * B_) - c_) / lambda_; }

  double log_cardinality() const { return log_card_; }
  double declared_size() const { return unit_ * std::pow(declared_r_, 1 / r_); }
  double eps() const { return eps_; }
  const std::vector<Level>& levels() const { return levels_; }
  bool single_level() const { return single_; }
  Interval span() const { return {b1_, b2_}; }
  double shift() const { return c_; }
  double scale() const { return lambda_; }

  class Located;
  // The bracket for h o phi; an empty phi stands for the zero function.
  Located locate(const std::optional<PiecewiseConcave>& phi) const;

 private:
  double grid_point(const Level& lv, long long l) const {
    if (l >= lv.grid) return b2_;
    return b1_ + L_ * static_cast<double>(l) / static_cast<double>(lv.grid);
  }

  void add_level(double y_lo, double y_hi, double eps_b, double eps_s) {
    Level lv{y_lo, y_hi, eps_b, eps_s, 0, 0};
    double G = std::max(1.0, std::ceil(2 / eps_s));
    if (!(G < 1e15)) throw ThresholdError("transformed cover: support grid too fine");
    lv.grid = static_cast<long long>(G);
    // Interval pairs: ordered pairs of grid points, single cells with an
    // empty inner set, and the empty pair.
    double log_support = std::log((G + 1) * (G + 2) / 2 + G + 1);
    double Bl = std::max(std::abs(y_lo), std::abs(y_hi));
    BoundedConcaveCover full(b1_, b2_, Bl, eps_b * std::pow(L_, 1 / r_), r_, th_, true);
    lv.log_count = log_support + full.log_cardinality();
    log_card_ += lv.log_count;
    double dmax = 0;
    for (int i = 0; i <= 64; ++i) {
      double y = y_lo + (y_hi - y_lo) * (i + 0.5 * (i == 0) - 0.5 * (i == 64)) / 64;
      dmax = std::max(dmax, lambda_ * h_.derivative(lambda_ * y + c_) / B_);
    }
    double grid_measure = std::min(1.0, 2 / G);
    double eps_b_used = std::min(eps_b, th_.eps3 * Bl);
    declared_r_ += std::pow(dmax * eps_b_used, r_) + std::pow(ht(y_hi), r_) * grid_measure;
    levels_.push_back(lv);
  }

  TransformSpec h_;
  double b1_, b2_, B_, r_;
  Thresholds th_;
  double L_ = 0, unit_ = 0, e_ = 0, eps_ = 0, c_ = 0, lambda_ = 1, alpha_ = 0;
  bool single_ = false;
  std::vector<Level> levels_;
  double log_card_ = 0;
  double declared_r_ = 0;
};

class TransformedCover::Located {
 public:
  Located(const TransformedCover& c, const std::optional<PiecewiseConcave>& phi) : c_(std::make_shared<TransformedCover>(c)) {
    if (!phi) return;
    auto dom = phi->domain();
    if (dom.lo < c.b1_ - 1e-12 * c.L_ || dom.hi > c.b2_ + 1e-12 * c.L_) indexed_ = false;
    if (dom.hi < c.b1_ || dom.lo > c.b2_) return;
    PiecewiseConcave f = phi->restrict_domain(c.span()).affine_values(1 / c.lambda_, -c.c_ / c.lambda_);
    if (f.max_value() > -1 + 1e-9) indexed_ = false;
    for (const auto& lv : c.levels_) {
      Part part;
      auto D = f.superlevel_set(lv.y_lo);
      if (D) {
        long long G = lv.grid;
        double step = c.L_ / static_cast<double>(G);
        long long l1 = std::clamp(static_cast<long long>(std::ceil((D->lo - c.b1_) / step)), 0LL, G);
        long long l2 = std::clamp(static_cast<long long>(std::floor((D->hi - c.b1_) / step)), 0LL, G);
        while (l1 <= G && c.grid_point(lv, l1) < D->lo) ++l1;
        while (l1 > 0 && c.grid_point(lv, l1 - 1) >= D->lo) --l1;
        while (l2 >= 0 && c.grid_point(lv, l2) > D->hi) --l2;
        while (l2 < G && c.grid_point(lv, l2 + 1) <= D->hi) ++l2;
        if (l1 <= l2) {
          part.inner = Interval{c.grid_point(lv, l1), c.grid_point(lv, l2)};
          part.outer = Interval{c.grid_point(lv, std::max(l1 - 1, 0LL)), c.grid_point(lv, std::min(l2 + 1, G))};
          if (part.inner->hi > part.inner->lo) {
            double Bl = std::max(std::abs(lv.y_lo), std::abs(lv.y_hi));
            BoundedConcaveCover bc(part.inner->lo, part.inner->hi, Bl, lv.eps_b * std::pow(c.L_, 1 / c.r_), c.r_,
                                   c.th_, true);
            part.cover = std::make_shared<BoundedConcaveCover::Located>(bc.locate(f.restrict_domain(*part.inner)));
            if (!part.cover->indexed()) indexed_ = false;
          }
        } else {
          part.outer = Interval{c.grid_point(lv, l2), c.grid_point(lv, l1)};
        }
      }
      parts_.push_back(std::move(part));
    }
  }

  bool indexed() const { return indexed_; }

  BracketValue operator()(double x) const {
    const auto& c = *c_;
    if (x < c.b1_ || x > c.b2_) return {0.0, 0.0, indexed_};
    for (std::size_t g = 0; g < parts_.size(); ++g) {
      const auto& p = parts_[g];
      if (!p.outer || !p.outer->contains(x)) continue;
      const auto& lv = c.levels_[g];
      if (p.inner && p.inner->contains(x)) {
        double lo = lv.y_lo, hi = lv.y_hi;
        if (!p.cover) return {c.B_ * c.ht(lo), c.B_ * c.ht(hi), indexed_};
        auto v = (*p.cover)(x);
        double l = std::clamp(v.lower, lo, hi), u = std::clamp(v.upper, lo, hi);
        return {c.B_ * c.ht(l), c.B_ * c.ht(u), indexed_ && v.indexed};
      }
      return {0.0, c.B_ * c.ht(lv.y_hi), indexed_};
    }
    if (c.single_) return {0.0, 0.0, indexed_};
    return {0.0, c.B_ * c.e_ / c.th_.eps0, indexed_};
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out{c_->b1_, c_->b2_};
    for (const auto& p : parts_) {
      for (const auto& I : {p.inner, p.outer})
        if (I) out.insert(out.end(), {I->lo, I->hi});
      if (p.cover) {
        auto b = p.cover->breakpoints();
        out.insert(out.end(), b.begin(), b.end());
      }
    }
    return out;
  }

 private:
  struct Part {
    std::optional<Interval> inner, outer;
    std::shared_ptr<BoundedConcaveCover::Located> cover;
  };
  std::shared_ptr<const TransformedCover> c_;
  std::vector<Part> parts_;
  bool indexed_ = true;
};

inline TransformedCover::Located TransformedCover::locate(const std::optional<PiecewiseConcave>& phi) const {
  return Located(*this, phi);
}

}  // namespace scdens::entropy
