#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "scdens/concave_fn.hpp"
#include "scdens/core.hpp"
#include "scdens/quadrature.hpp"
#include "scdens/random.hpp"
#include "scdens/transforms.hpp"

namespace scdens {

// p = h o phi with the integral of p cached.
class TransformedDensity {
 public:
  TransformedDensity(TransformSpec t, PiecewiseConcave phi) : t_(std::move(t)), phi_(std::move(phi)) {
    for (double v : phi_.values()) {
      if (std::isfinite(t_.yinf()) && !(v < t_.yinf()))
        throw DomainError("phi reaches the upper limit of the transform");
      if (std::isfinite(t_.y0()) && v < t_.y0() && t_.kind() == TransformKind::General)
        throw DomainError("phi falls below the lower limit of the transform");
    }
    const auto& x = phi_.knots();
    const auto& v = phi_.values();
    cum_.assign(x.size(), 0.0);
    for (std::size_t j = 0; j + 1 < x.size(); ++j)
      cum_[j + 1] = cum_[j] + (x[j + 1] - x[j]) * segment_mean(t_, v[j], v[j + 1]);
    if (!(cum_.back() > 0) || !std::isfinite(cum_.back()))
      throw DomainError("density integral must be finite and positive");
  }

  const TransformSpec& transform() const { return t_; }
  const PiecewiseConcave& phi() const { return phi_; }
  double integral() const { return cum_.back(); }
  bool is_normalized() const { return std::abs(integral() - 1.0) <= tol::normalized; }
  Interval support() const { return phi_.domain(); }

  double operator()(double x) const {
    auto y = phi_(x);
    return y.finite() ? t_(y.value()) : 0.0;
  }

  // Integral of p over (-inf, x].
  double cumulative(double x) const {
    const auto& xs = phi_.knots();
    if (x <= xs.front()) return 0.0;
    if (x >= xs.back()) return integral();
    std::size_t j = phi_.piece(x);
    return cum_[j] + (x - xs[j]) * segment_mean(t_, phi_.values()[j], phi_.at(x));
  }
  double mass_between(double a, double b) const { return cumulative(b) - cumulative(a); }
  double lower_tail(double x) const { return cumulative(x); }
  double upper_tail(double x) const { return integral() - cumulative(x); }

  double sup() const {
    double m = 0;
    for (double v : phi_.values()) m = std::max(m, t_(v));
    return m;
  }

 private:
  TransformSpec t_;
  PiecewiseConcave phi_;
  std::vector<double> cum_;
};

// Integral of h o phi by sum of segment closed forms.
inline double integrate(const TransformedDensity& p) { return p.integral(); }

// Rescale through the cone action so the integral is one. Already-normalized
// inputs (to within rounding) are returned unchanged.
inline TransformedDensity normalize(const TransformedDensity& p) {
  double I = p.integral();
  if (std::abs(I - 1.0) <= 4 * std::numeric_limits<double>::epsilon()) return p;
  const auto& t = p.transform();
  switch (t.kind()) {
    case TransformKind::LogConcave:
      return TransformedDensity(t, p.phi().affine_values(1.0, -std::log(I) / t.rate()));
    case TransformKind::PowerS:
      return TransformedDensity(t, p.phi().affine_values(std::pow(I, -t.s()), 0.0));
    default: throw UnsupportedTransform("normalize needs a power or exponential transform");
  }
}

// Tabulate a concave phi on a uniform grid over [lo, hi].
inline TransformedDensity tabulate(const TransformSpec& t, const std::function<double(double)>& phi, double lo,
                                   double hi, int n) {
  std::vector<double> xs(n), vs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = lo + (hi - lo) * i / (n - 1);
    vs[i] = phi(xs[i]);
  }
  return TransformedDensity(t, PiecewiseConcave(std::move(xs), std::move(vs), 1e-9));
}

// Uniform view of a density for the distance routines.
struct DensityView {
  std::function<double(double)> pdf;
  Interval support;
  std::vector<double> breaks;
  // Mass below and above a point; used to truncate infinite supports.
  std::function<double(double)> lower_tail;
  std::function<double(double)> upper_tail;
  double mass = 1.0;
};

inline DensityView view(const TransformedDensity& p) {
  return {[p](double x) { return p(x); },
          p.support(),
          p.phi().knots(),
          [p](double x) { return p.lower_tail(x); },
          [p](double x) { return p.upper_tail(x); },
          p.integral()};
}

inline DensityView view(const ReferenceDistribution& d) {
  return {[d](double x) { return d.pdf(x); },
          d.support(),
          d.kinks(),
          [d](double x) { return d.lower_tail(x); },
          [d](double x) { return d.upper_tail(x); },
          1.0};
}

// A density callback on a finite support.
inline DensityView view(std::function<double(double)> pdf, Interval support, std::vector<double> breaks = {}) {
  auto mass = quad::adaptive_simpson(pdf, support.lo, support.hi, 1e-12).value;
  return {std::move(pdf), support, std::move(breaks), [](double) { return 0.0; }, [](double) { return 0.0; }, mass};
}

namespace detail {

// Integral of f over the common support of p and q, split at breakpoints
// and on a geometric grid in infinite directions. `tail` bounds the
// contribution beyond a truncation point R.
template <class F, class TailBound>
double integrate_common(const DensityView& p, const DensityView& q, F&& f, TailBound&& tail, double abs_tol) {
  double lo = std::max(p.support.lo, q.support.lo), hi = std::min(p.support.hi, q.support.hi);
  if (!(lo < hi)) return 0.0;
  const double cut = 1e-12;
  std::vector<double> pts;
  auto extend = [&](bool left) {
    double R = 1.0;
    double anchor = left ? std::min(0.0, hi) : std::max(0.0, lo);
    while (R < 1e15) {
      double x = left ? anchor - R : anchor + R;
      pts.push_back(x);
      if (tail(x, left) < cut) return x;
      R *= 2;
    }
    throw NumericError("tail truncation did not reach the cutoff", 0.0);
  };
  if (std::isinf(lo)) lo = extend(true);
  if (std::isinf(hi)) hi = extend(false);
  pts.push_back(lo);
  pts.push_back(hi);
  for (double b : p.breaks) pts.push_back(b);
  for (double b : q.breaks) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  std::vector<double> cuts;
  for (double x : pts)
    if (x >= lo && x <= hi && (cuts.empty() || x > cuts.back())) cuts.push_back(x);
  double total = 0.0;
  bool ok = true;
  double per = abs_tol / std::max<std::size_t>(1, cuts.size() - 1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto r = quad::adaptive_simpson(f, cuts[i], cuts[i + 1], per, 60, 5'000'000);
    total += r.value;
    ok = ok && r.converged;
  }
  if (!ok) throw NumericError("quadrature did not converge within budget", total);
  return total;
}

}  // namespace detail

inline double hellinger(const DensityView& p, const DensityView& q, double abs_tol = 1e-11) {
  auto f = [&](double x) { return std::sqrt(p.pdf(x) * q.pdf(x)); };
  auto tail = [&](double x, bool left) {
    return left ? std::sqrt(p.lower_tail(x) * q.lower_tail(x)) : std::sqrt(p.upper_tail(x) * q.upper_tail(x));
  };
  double bc = detail::integrate_common(p, q, f, tail, abs_tol);
  double h2 = 0.5 * (p.mass + q.mass) - bc;
  return std::sqrt(std::clamp(h2, 0.0, 1.0));
}

inline double l1_distance(const DensityView& p, const DensityView& q, double abs_tol = 1e-11) {
  auto f = [&](double x) { return std::min(p.pdf(x), q.pdf(x)); };
  auto tail = [&](double x, bool left) {
    return left ? std::min(p.lower_tail(x), q.lower_tail(x)) : std::min(p.upper_tail(x), q.upper_tail(x));
  };
  double common = detail::integrate_common(p, q, f, tail, abs_tol);
  return std::clamp(p.mass + q.mass - 2 * common, 0.0, 2.0);
}

template <class P, class Q>
double hellinger(const P& p, const Q& q) {
  return hellinger(view(p), view(q));
}
template <class P, class Q>
double l1_distance(const P& p, const Q& q) {
  return l1_distance(view(p), view(q));
}

// Pointwise bound on members of the class with sup p <= M and p >= 1/M on [-1, 1].
struct EnvelopeFn {
  double M = 1;
  TransformSpec transform;
  double L = 0;
  double D = 0;
  double alpha = 0;
  double cutoff = 3;
  // Closed form h(h^{-1}(M) - L |x| / (2M)) for power and exponential h;
  // otherwise D (1 + L |x| / (2M))^{-alpha}.
  bool closed_form = true;

  double operator()(double x) const {
    double ax = std::abs(x);
    if (ax < cutoff) return M;
    double z = L * ax / (2 * M);
    if (closed_form) return transform(transform.inverse(M) - z);
    return D * std::pow(1 + z, -alpha);
  }
};

inline EnvelopeFn envelope_for_class(double M, const TransformSpec& t) {
  if (!(M > 0)) throw DomainError("envelope needs M > 0");
  EnvelopeFn e;
  e.M = M;
  e.transform = t;
  e.cutoff = 2 * M + 1;
  e.alpha = t.alpha();
  e.L = t.inverse(1 / M) - t.inverse(1 / (2 * M));
  if (t.closed_form()) {
    e.closed_form = true;
    return e;
  }
  auto rep = check_assumptions(t);
  if (rep.t1.status != AssumptionStatus::Pass)
    throw UnsupportedTransform("envelope needs the left-tail condition on h'");
  e.closed_form = false;
  double shift = 1 + t.inverse(M);
  double D = 0;
  for (int k = 0; k <= 20 * 16; ++k) {
    double y = -std::pow(2.0, k / 16.0);
    D = std::max(D, t(y + shift) * std::pow(-y, e.alpha));
  }
  e.D = 1.01 * D;
  return e;
}

// Conditions the envelope bound relies on: sup p <= M and p(0) >= 1/M.
inline bool envelope_applies(const TransformedDensity& p, double M) {
  return p.sup() <= M * (1 + 1e-9) && p(0.0) >= (1 / M) * (1 - 1e-9);
}

// Empty when the envelope preconditions fail; otherwise whether
// p <= envelope (1 + 1e-9) on the grid.
inline std::optional<bool> check_envelope(const TransformedDensity& p, double M, const std::vector<double>& grid) {
  if (!envelope_applies(p, M)) return std::nullopt;
  auto env = envelope_for_class(M, p.transform());
  for (double x : grid)
    if (p(x) > env(x) * (1 + 1e-9)) return false;
  return true;
}

inline bool member_of_class(const TransformedDensity& p, double M) {
  if (p.sup() > M) return false;
  for (int i = 0; i < 512; ++i) {
    double x = -1.0 + 2.0 * i / 511;
    if (p(x) < 1 / M) return false;
  }
  return true;
}

// Bound on p(x) from the values at x0 and x1 and the mass between x0 and x.
inline double upper_bound_f(const TransformedDensity& p, double x0, double x1, double x) {
  bool right = x0 < x1 && x1 < x;
  bool left = x < x1 && x1 < x0;
  if (!right && !left) throw DomainError("upper_bound_f needs x0 < x1 < x or x < x1 < x0");
  auto f0 = p.phi()(x0), f1 = p.phi()(x1), fx = p.phi()(x);
  if (!f0.finite() || !f1.finite() || !fx.finite() || !(fx.value() < f1.value() && f1.value() < f0.value()))
    throw DomainError("upper_bound_f needs phi(x) < phi(x1) < phi(x0), all finite");
  const auto& h = p.transform();
  double F = p.cumulative(x) - p.cumulative(x0);
  double arg = f0.value() - h(f1.value()) * (f0.value() - f1.value()) / F * (x - x0);
  return h(arg);
}

struct NestingResult {
  bool concave = true;
  std::size_t skipped = 0;
};

// Whether h_{s_target}^{-1}(p) is concave on the grid points inside the support.
inline NestingResult nesting_check(const TransformedDensity& p, double s_target, const std::vector<double>& grid,
                                   double tolerance = 1e-9) {
  const auto& t = p.transform();
  if (t.kind() == TransformKind::General || s_target > t.s())
    throw DomainError("nesting_check needs s_target <= s of the density's transform");
  auto target = TransformSpec::power(s_target);
  NestingResult res;
  std::vector<double> xs, ys;
  for (double x : grid) {
    double v = p(x);
    if (!(v > 0)) {
      ++res.skipped;
      continue;
    }
    xs.push_back(x);
    ys.push_back(target.inverse(v));
  }
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    double s0 = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
    double s1 = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    if (s1 - s0 > tolerance * std::max(1.0, std::abs(s0))) res.concave = false;
  }
  return res;
}

}  // namespace scdens
