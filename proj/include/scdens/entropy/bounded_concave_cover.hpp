#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "scdens/concave_fn.hpp"
#include "scdens/core.hpp"
#include "scdens/entropy/lipschitz_cover.hpp"

namespace scdens::entropy {

struct Thresholds {
  double eps_star = 0.25;
  double eps0 = 0.25;
  double eps3 = 0.25;
};

// L_r brackets for concave f on [b1, b2] with |f| <= B and no slope bound.
//
// In the unit coordinates t = (x - b1) / (b2 - b1), f / B: the ends [0, mu]
// and [1 - mu, 1] are split at delta_m; [0, delta_1] carries the constant
// bracket [-1, 1] and each ring [delta_m, delta_{m+1}] a Lipschitz cover with
// slope bound 2 / delta_m and width alpha_m. The middle [mu, 1 - mu] gets a
// Lipschitz cover with slope bound 2 / mu and width eta.
class BoundedConcaveCover {
 public:
  struct Piece {
    Interval span;
    std::optional<LipschitzCover> cover;  // empty on the constant end pieces
    double width = 0;
  };

  // With clamp set, an eps above the validity threshold is lowered to it;
  // otherwise a ThresholdError is raised.
  BoundedConcaveCover(double b1, double b2, double B, double eps, double r, Thresholds th = {}, bool clamp = false)
      : b1_(b1), b2_(b2), B_(B), r_(r) {
    if (!(b1 < b2) || !(B > 0) || !(eps > 0) || !(r >= 1))
      throw DomainError("bounded concave cover needs b1 < b2, B > 0, eps > 0, r >= 1");
    double L = b2 - b1;
    double unit = B * std::pow(L, 1 / r);
    double e = eps / unit;
    if (e > th.eps3) {
      if (!clamp)
        throw ThresholdError("bounded concave cover: eps / (B (b2-b1)^(1/r)) = " + std::to_string(e) +
                             " exceeds eps3 = " + std::to_string(th.eps3));
      e = th.eps3;
    }
    eps_ = e * unit;
    mu_ = mu(r);
    eta_ = std::pow(3.0 / 17.0, 1 / r) * e;
    double log_eta = std::log(eta_);

    // Rings, in unit coordinates.
    struct Ring {
      double lo, hi, gamma, width;
    };
    std::vector<Ring> rings;
    double d1 = std::exp(r * log_eta);
    double const_end = std::min(d1, mu_);
    for (int m = 1; m < 100000; ++m) {
      double dm = std::exp(r * std::pow((r + 1) / (r + 2), m - 1) * log_eta);
      if (!(dm < mu_)) break;
      double dn = std::exp(r * std::pow((r + 1) / (r + 2), m) * log_eta);
      double am = eta_ * std::exp(-r * std::pow(r + 1, m - 2) / std::pow(r + 2, m - 1) * log_eta);
      rings.push_back({dm, std::min(dn, mu_), 2 / dm, am});
    }

    auto add = [&](double lo, double hi, double gamma, double width) {
      if (!(hi > lo)) return;
      Piece p;
      p.span = {lo, hi};
      if (gamma > 0) {
        p.cover.emplace(lo, hi, B, gamma * B / L, width * B);
        p.width = p.cover->width();
      } else {
        p.width = 2 * B;
      }
      pieces_.push_back(std::move(p));
    };
    add(b1, b1 + L * const_end, 0, 0);
    for (const auto& g : rings) add(b1 + L * g.lo, b1 + L * g.hi, g.gamma, g.width);
    add(b1 + L * mu_, b2 - L * mu_, 2 / mu_, eta_);
    for (auto it = rings.rbegin(); it != rings.rend(); ++it) add(b2 - L * it->hi, b2 - L * it->lo, it->gamma, it->width);
    add(b2 - L * const_end, b2, 0, 0);

    // Rounding can leave overlaps or gaps of an ulp between pieces; make
    // the spans a partition.
    for (std::size_t i = 1; i < pieces_.size(); ++i) pieces_[i].span.lo = pieces_[i - 1].span.hi;
    pieces_.front().span.lo = b1;
    pieces_.back().span.hi = b2;

    for (const auto& p : pieces_) {
      if (p.cover) log_card_ += p.cover->log_cardinality();
      declared_r_ += std::pow(p.width, r) * p.span.length();
    }
  }

  static double mu(double r) { return std::exp2(-2 * (r + 1) * (r + 1) * (r + 2)); }

  double eps() const { return eps_; }
  double eta() const { return eta_; }
  double log_cardinality() const { return log_card_; }
  // Bound on the L_r width of every bracket.
  double declared_size() const { return std::pow(declared_r_, 1 / r_); }
  const std::vector<Piece>& pieces() const { return pieces_; }
  Interval span() const { return {b1_, b2_}; }

  class Located {
   public:
    Located(const BoundedConcaveCover& c, const PiecewiseConcave& f) : pieces_(c.pieces_), B_(c.B_), b2_(c.b2_) {
      for (const auto& p : c.pieces_) {
        if (p.cover) {
          auto dom = f.domain();
          if (dom.hi < p.span.lo || dom.lo > p.span.hi) {
            indexed_ = false;
            parts_.emplace_back(std::nullopt);
            continue;
          }
          parts_.emplace_back(p.cover->locate(f.restrict_domain(p.span)));
          if (!parts_.back()->indexed()) indexed_ = false;
        } else {
          parts_.emplace_back(std::nullopt);
        }
      }
    }

    bool indexed() const { return indexed_; }

    BracketValue operator()(double x) const {
      const auto& ps = pieces_;
      auto it = std::upper_bound(ps.begin(), ps.end(), x, [](double v, const Piece& p) { return v < p.span.lo; });
      std::size_t i = it == ps.begin() ? 0 : static_cast<std::size_t>(it - ps.begin()) - 1;
      if (!ps[i].cover) return {-B_, B_, indexed_};
      if (!parts_[i]) return {-B_, B_, false};
      auto v = (*parts_[i])(x);
      v.indexed = v.indexed && indexed_;
      return v;
    }

    std::vector<double> breakpoints() const {
      std::vector<double> out;
      for (const auto& p : pieces_) out.push_back(p.span.lo);
      out.push_back(b2_);
      return out;
    }

   private:
    std::vector<Piece> pieces_;
    double B_, b2_;
    std::vector<std::optional<LipschitzCover::Located>> parts_;
    bool indexed_ = true;
  };

  Located locate(const PiecewiseConcave& f) const { return Located(*this, f); }

 private:
  double b1_, b2_, B_, r_;
  double eps_ = 0, mu_ = 0, eta_ = 0;
  std::vector<Piece> pieces_;
  double log_card_ = 0;
  double declared_r_ = 0;
};

}  // namespace scdens::entropy
