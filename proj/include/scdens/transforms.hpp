#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scdens/core.hpp"
#include "scdens/quadrature.hpp"

namespace scdens {

enum class TransformKind { PowerS, LogConcave, General };

// User-supplied h for the General kind. derivative may be left empty, in
// which case a central difference is used.
struct TransformCallbacks {
  std::function<double(double)> eval;
  std::function<double(double)> inverse;
  std::function<double(double)> derivative;
};

// An increasing transformation h. PowerS(s) is h_s; LogConcave(c) is e^{c y}.
class TransformSpec {
 public:
  static TransformSpec power(double s) {
    if (!std::isfinite(s)) throw DomainError("power transform needs a finite s");
    if (s == 0.0) return log_concave();
    TransformSpec t;
    t.kind_ = TransformKind::PowerS;
    t.s_ = s;
    t.p_ = 1.0 / s;
    if (s < 0) {
      t.y0_ = -kInf;
      t.yinf_ = 0.0;
      t.alpha_ = -1.0 / s;
      t.beta_ = -1.0 / s;
    } else {
      t.y0_ = 0.0;
      t.yinf_ = kInf;
      t.alpha_ = kInf;
    }
    return t;
  }

  static TransformSpec log_concave(double rate = 1.0) {
    if (!(rate > 0) || !std::isfinite(rate)) throw DomainError("log-concave rate must be positive");
    TransformSpec t;
    t.kind_ = TransformKind::LogConcave;
    t.s_ = 0.0;
    t.rate_ = rate;
    t.y0_ = -kInf;
    t.yinf_ = kInf;
    t.alpha_ = kInf;
    return t;
  }

  static TransformSpec general(TransformCallbacks cb, double y0, double yinf, double alpha,
                               std::optional<double> beta = std::nullopt) {
    if (!cb.eval || !cb.inverse) throw DomainError("general transform needs eval and inverse callbacks");
    if (!(y0 < yinf)) throw DomainError("general transform needs y0 < yinf");
    if (!(alpha > 0)) throw DomainError("tail exponent must be positive");
    TransformSpec t;
    t.kind_ = TransformKind::General;
    t.cb_ = std::make_shared<TransformCallbacks>(std::move(cb));
    t.y0_ = y0;
    t.yinf_ = yinf;
    t.alpha_ = alpha;
    t.beta_ = beta;
    return t;
  }

  TransformKind kind() const { return kind_; }
  // The power index; 0 for LogConcave, NaN for General.
  double s() const { return kind_ == TransformKind::General ? std::nan("") : s_; }
  double rate() const { return rate_; }
  double y0() const { return y0_; }
  double yinf() const { return yinf_; }
  double alpha() const { return alpha_; }
  std::optional<double> beta() const { return beta_; }
  bool closed_form() const { return kind_ != TransformKind::General; }

  std::string describe() const {
    switch (kind_) {
      case TransformKind::PowerS: return "PowerS(" + std::to_string(s_) + ")";
      case TransformKind::LogConcave:
        return rate_ == 1.0 ? "LogConcave" : "LogConcave(rate=" + std::to_string(rate_) + ")";
      default: return "General";
    }
  }

  // h on doubles; returns 0 at or below y0 and +inf at or above yinf.
  double operator()(double y) const {
    if (std::isnan(y)) return y;
    switch (kind_) {
      case TransformKind::LogConcave: return std::exp(rate_ * y);
      case TransformKind::PowerS:
        if (s_ < 0) return y < 0 ? std::pow(-y, p_) : kInf;
        return y > 0 ? std::pow(y, p_) : 0.0;
      default:
        if (y <= y0_) return 0.0;
        if (y >= yinf_) return kInf;
        return cb_->eval(y);
    }
  }

  ExtReal eval(ExtReal y) const {
    if (y.is_neg_inf()) return ExtReal(0.0);
    if (y.is_pos_inf()) return ExtReal::pos_inf();
    return ExtReal((*this)(y.value()));
  }

  double inverse(double u) const {
    if (!(u > 0) || !std::isfinite(u)) throw DomainError("inverse: argument outside the open range of h");
    switch (kind_) {
      case TransformKind::LogConcave: return std::log(u) / rate_;
      case TransformKind::PowerS: return s_ < 0 ? -std::pow(u, s_) : std::pow(u, s_);
      default: return cb_->inverse(u);
    }
  }

  double derivative(double y) const {
    check_open(y, "derivative");
    switch (kind_) {
      case TransformKind::LogConcave: return rate_ * std::exp(rate_ * y);
      case TransformKind::PowerS:
        if (s_ < 0) return -p_ * std::pow(-y, p_ - 1.0);
        return p_ * std::pow(y, p_ - 1.0);
      default:
        if (cb_->derivative) return cb_->derivative(y);
        return central_difference(y);
    }
  }

  double second_derivative(double y) const {
    check_open(y, "second_derivative");
    switch (kind_) {
      case TransformKind::LogConcave: return rate_ * rate_ * std::exp(rate_ * y);
      case TransformKind::PowerS:
        if (s_ < 0) return p_ * (p_ - 1.0) * std::pow(-y, p_ - 2.0);
        return p_ * (p_ - 1.0) * std::pow(y, p_ - 2.0);
      default: {
        double step = 1e-4 * std::max(1.0, std::abs(y));
        return (derivative(y + step) - derivative(y - step)) / (2 * step);
      }
    }
  }

  // log h and its first two derivatives, on the open interval (y0, yinf).
  double log_h(double y) const {
    switch (kind_) {
      case TransformKind::LogConcave: return rate_ * y;
      case TransformKind::PowerS: return p_ * std::log(std::abs(y));
      default: return std::log((*this)(y));
    }
  }
  double dlog_h(double y) const {
    switch (kind_) {
      case TransformKind::LogConcave: return rate_;
      case TransformKind::PowerS: return p_ / y;
      default: return derivative(y) / (*this)(y);
    }
  }
  double d2log_h(double y) const {
    switch (kind_) {
      case TransformKind::LogConcave: return 0.0;
      case TransformKind::PowerS: return -p_ / (y * y);
      default: {
        double step = 1e-4 * std::max(1.0, std::abs(y));
        return (dlog_h(y + step) - dlog_h(y - step)) / (2 * step);
      }
    }
  }
  // log h'(y), computed without forming h' (which may underflow).
  double log_derivative(double y) const {
    switch (kind_) {
      case TransformKind::LogConcave: return std::log(rate_) + rate_ * y;
      case TransformKind::PowerS:
        if (s_ < 0) return y < 0 ? std::log(-p_) + (p_ - 1.0) * std::log(-y) : kInf;
        return y > 0 ? std::log(p_) + (p_ - 1.0) * std::log(y) : -kInf;
      default: return std::log(derivative(y));
    }
  }

 private:
  void check_open(double y, const char* what) const {
    if (!(y > y0_ && y < yinf_)) throw DomainError(std::string(what) + ": argument outside (y0, yinf)");
  }
  double central_difference(double y) const {
    double step = 1e-6 * std::max(1.0, std::abs(y));
    double lo = std::max(y - step, y0_ + 0.5 * (y - y0_));
    double hi = std::min(y + step, yinf_ - 0.5 * (yinf_ - y));
    return ((*this)(hi) - (*this)(lo)) / (hi - lo);
  }

  TransformKind kind_ = TransformKind::LogConcave;
  double s_ = 0.0;
  double p_ = 0.0;
  double rate_ = 1.0;
  double y0_ = -kInf;
  double yinf_ = kInf;
  double alpha_ = kInf;
  std::optional<double> beta_;
  std::shared_ptr<TransformCallbacks> cb_;
};

// g with g^2 = h. PowerS(s) -> PowerS(2s), LogConcave(c) -> LogConcave(c/2).
inline TransformSpec sqrt_transform(const TransformSpec& t) {
  switch (t.kind()) {
    case TransformKind::PowerS: return TransformSpec::power(2.0 * t.s());
    case TransformKind::LogConcave: return TransformSpec::log_concave(0.5 * t.rate());
    default: throw UnsupportedTransform("sqrt_transform of a general transform needs explicit callbacks");
  }
}

inline TransformSpec sqrt_transform(const TransformSpec& t, TransformCallbacks cb) {
  if (t.kind() != TransformKind::General) return sqrt_transform(t);
  std::optional<double> beta;
  if (t.beta()) beta = *t.beta() / 2;
  return TransformSpec::general(std::move(cb), t.y0(), t.yinf(), t.alpha() / 2, beta);
}

// h with h = g^2, the inverse of sqrt_transform.
inline TransformSpec square_transform(const TransformSpec& g) {
  switch (g.kind()) {
    case TransformKind::PowerS: return TransformSpec::power(0.5 * g.s());
    case TransformKind::LogConcave: return TransformSpec::log_concave(2.0 * g.rate());
    default: {
      TransformCallbacks cb;
      cb.eval = [g](double y) { double v = g(y); return v * v; };
      cb.inverse = [g](double u) { return g.inverse(std::sqrt(u)); };
      cb.derivative = [g](double y) { return 2.0 * g(y) * g.derivative(y); };
      std::optional<double> beta;
      if (g.beta()) beta = 2 * *g.beta();
      return TransformSpec::general(std::move(cb), g.y0(), g.yinf(), 2 * g.alpha(), beta);
    }
  }
}

// Mean of h(a + t (b - a)) over t in [0, 1] and its derivatives in (a, b).
// Integrating h over a linear piece of length w gives w * g.
struct SegmentMoments {
  double g = 0, ga = 0, gb = 0, gaa = 0, gab = 0, gbb = 0;
};

namespace detail {

// H(b) - H(a) for an antiderivative H of h, with a, b strictly inside the
// support of a power or exponential transform.
inline double antiderivative_difference(const TransformSpec& t, double a, double b) {
  if (t.kind() == TransformKind::LogConcave) {
    double c = t.rate();
    return std::exp(c * a) * std::expm1(c * (b - a)) / c;
  }
  double p = 1.0 / t.s();
  double lr = std::log1p((b - a) / a);
  if (p == -1.0) return -lr;
  double q = p + 1.0;
  double base = std::pow(std::abs(a), q) / q;
  return (t.s() < 0 ? -base : base) * std::expm1(q * lr);
}

inline SegmentMoments moments_by_quadrature(const TransformSpec& t, double a, double b, bool second) {
  const auto& gl = quad::GaussLegendre<16>::get();
  SegmentMoments m;
  double d = b - a;
  for (int i = 0; i < 16; ++i) {
    double u = gl.x[i], w = gl.w[i];
    double y = a + u * d;
    double hv = t(y);
    m.g += w * hv;
    double hp = t.derivative(y);
    m.ga += w * (1 - u) * hp;
    m.gb += w * u * hp;
    if (second) {
      double hpp = t.second_derivative(y);
      m.gaa += w * (1 - u) * (1 - u) * hpp;
      m.gab += w * u * (1 - u) * hpp;
      m.gbb += w * u * u * hpp;
    }
  }
  return m;
}

}  // namespace detail

// Closed forms for power and exponential transforms, Gauss-Legendre on short
// pieces where the closed forms cancel. Needs a, b inside (y0, yinf) except
// that s > 0 allows values at or below 0 where h vanishes.
inline SegmentMoments segment_moments(const TransformSpec& t, double a, double b, bool second = true) {
  if (t.kind() == TransformKind::General) {
    if (!(a > t.y0() && b > t.y0() && a < t.yinf() && b < t.yinf()))
      throw DomainError("segment value outside the transform range");
    return detail::moments_by_quadrature(t, a, b, second);
  }
  if (t.kind() == TransformKind::PowerS && t.s() < 0 && !(a < 0 && b < 0))
    throw DomainError("segment value reaches the pole of h");
  double d = b - a;
  bool positive_part = t.kind() == TransformKind::PowerS && t.s() > 0 && (a <= 0 || b <= 0);
  if (positive_part) {
    SegmentMoments m;
    if (a <= 0 && b <= 0) return m;
    double q = 1.0 / t.s() + 1.0;
    double hb = t(b), ha = t(a);
    double diff = b > 0 ? std::pow(b, q) / q : -std::pow(a, q) / q;
    m.g = diff / d;
    m.ga = (m.g - ha) / d;
    m.gb = (hb - m.g) / d;
    if (second) {
      double dpa = a > 0 ? t.derivative(a) : 0.0;
      double dpb = b > 0 ? t.derivative(b) : 0.0;
      m.gaa = (2 * m.ga - dpa) / d;
      m.gbb = (dpb - 2 * m.gb) / d;
      m.gab = (m.gb - m.ga) / d;
    }
    return m;
  }
  bool short_piece = t.kind() == TransformKind::LogConcave
                         ? std::abs(d) * t.rate() <= 2.0
                         : std::abs(d) <= 0.25 * std::min(std::abs(a), std::abs(b));
  if (short_piece) return detail::moments_by_quadrature(t, a, b, second);
  SegmentMoments m;
  m.g = detail::antiderivative_difference(t, a, b) / d;
  double ha = t(a), hb = t(b);
  m.ga = (m.g - ha) / d;
  m.gb = (hb - m.g) / d;
  if (second) {
    m.gaa = (2 * m.ga - t.derivative(a)) / d;
    m.gbb = (t.derivative(b) - 2 * m.gb) / d;
    m.gab = (m.gb - m.ga) / d;
  }
  return m;
}

inline double segment_mean(const TransformSpec& t, double a, double b) {
  if (t.kind() == TransformKind::General) {
    auto r = quad::adaptive_simpson([&](double u) { return t(a + u * (b - a)); }, 0.0, 1.0, 1e-13);
    return r.value;
  }
  return segment_moments(t, a, b, false).g;
}

// M_s(a, b; theta). Pass s = -inf for the minimum.
inline double generalized_mean(double s, double a, double b, double theta) {
  if (a < 0 || b < 0) throw DomainError("generalized_mean: arguments must be nonnegative");
  if (!(theta > 0 && theta < 1)) throw DomainError("generalized_mean: theta must lie in (0,1)");
  if (s == -kInf) return std::min(a, b);
  if (s == kInf) return std::max(a, b);
  if (a * b == 0.0 && s <= 0) return 0.0;
  if (s == 0.0) return std::exp((1 - theta) * std::log(a) + theta * std::log(b));
  return std::pow((1 - theta) * std::pow(a, s) + theta * std::pow(b, s), 1.0 / s);
}

// True iff p((1-t)x0 + t x1) >= M_s(p(x0), p(x1); t) for all grid pairs and
// t in {1/4, 1/2, 3/4}. For s > 0 only pairs inside the support are compared.
inline bool check_s_concavity(const std::function<double(double)>& p, double s, const std::vector<double>& grid,
                              double tolerance = tol::s_concavity) {
  if (grid.size() < 3) throw DomainError("check_s_concavity needs at least 3 grid points");
  std::vector<double> pv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pv[i] = p(grid[i]);
  const double thetas[] = {0.25, 0.5, 0.75};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      if (s > 0 && (pv[i] == 0 || pv[j] == 0)) continue;
      for (double th : thetas) {
        double x = (1 - th) * grid[i] + th * grid[j];
        double rhs = generalized_mean(s, pv[i], pv[j], th);
        if (p(x) < rhs - tolerance * std::max(1.0, rhs)) return false;
      }
    }
  }
  return true;
}

enum class AssumptionStatus { Pass, Fail, Vacuous };

inline const char* to_string(AssumptionStatus s) {
  switch (s) {
    case AssumptionStatus::Pass: return "pass";
    case AssumptionStatus::Fail: return "fail";
    default: return "vacuous";
  }
}

struct AssumptionItem {
  AssumptionStatus status = AssumptionStatus::Vacuous;
  double exponent = std::nan("");
  std::string note;
};

// T1: left tail of h'. T2: h' bounded near a finite left limit. T3: pole
// order at a finite right limit. T4: h(y)^gamma h(-C y) -> 0 when yinf = inf.
struct AssumptionReport {
  AssumptionItem t1, t2, t3, t4;
};

namespace detail {

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace detail

inline AssumptionReport check_assumptions(const TransformSpec& t, double slope_tol = 0.05) {
  AssumptionReport rep;
  const double ln2 = std::log(2.0);

  if (std::isfinite(t.y0())) {
    rep.t1 = {AssumptionStatus::Pass, kInf, "h' vanishes left of the finite lower limit"};
  } else {
    std::vector<double> lx, ly;
    bool superpoly = false;
    for (int k = 20; k <= 40; ++k) {
      double y = -std::ldexp(1.0, k);
      double v = t.log_derivative(y);
      if (!std::isfinite(v)) {
        superpoly = true;
        break;
      }
      lx.push_back(k * ln2);
      ly.push_back(v);
    }
    double alpha = superpoly ? kInf : -detail::ols_slope(lx, ly) - 1.0;
    if (alpha > 1e6) alpha = kInf;
    rep.t1 = {alpha > 1.0 ? AssumptionStatus::Pass : AssumptionStatus::Fail, alpha,
              "tail exponent witnessed on y = -2^k"};
  }

  if (!std::isfinite(t.y0())) {
    rep.t2 = {AssumptionStatus::Vacuous, std::nan(""), "lower limit is -inf"};
  } else {
    std::vector<double> lx, ly;
    for (int k = 20; k <= 40; ++k) {
      double y = t.y0() + std::ldexp(1.0, -k) * std::max(1.0, std::abs(t.y0()));
      lx.push_back(std::log(y - t.y0()));
      ly.push_back(t.log_derivative(y));
    }
    double slope = detail::ols_slope(lx, ly);
    rep.t2 = {slope >= -slope_tol ? AssumptionStatus::Pass : AssumptionStatus::Fail, slope,
              "log-log slope of h' at the lower limit"};
  }

  if (!std::isfinite(t.yinf())) {
    rep.t3 = {AssumptionStatus::Vacuous, std::nan(""), "upper limit is +inf"};
  } else {
    std::vector<double> lx, ly;
    for (int k = 20; k <= 40; ++k) {
      double gap = std::ldexp(1.0, -k) * std::max(1.0, std::abs(t.yinf()));
      lx.push_back(std::log(gap));
      ly.push_back(t.log_h(t.yinf() - gap));
    }
    double beta = -detail::ols_slope(lx, ly);
    rep.t3 = {beta > 1.0 ? AssumptionStatus::Pass : AssumptionStatus::Fail, beta, "pole order at the upper limit"};
  }

  if (std::isfinite(t.yinf())) {
    rep.t4 = {AssumptionStatus::Vacuous, std::nan(""), "upper limit is finite"};
  } else {
    const double probes[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    rep.t4 = {AssumptionStatus::Fail, std::nan(""), "no probed (gamma, C) pair decays"};
    for (double gamma : probes) {
      for (double c : probes) {
        // log of h(y)^gamma h(-C y) on y = 2^k
        auto lg = [&](double y) {
          double hm = t(-c * y);
          if (hm == 0.0) return -kInf;
          return gamma * t.log_h(y) + std::log(hm);
        };
        double first = lg(std::ldexp(1.0, 20)), last = lg(std::ldexp(1.0, 40));
        if (last == -kInf || (last < first && last < -20.0)) {
          rep.t4 = {AssumptionStatus::Pass, gamma, "decays with gamma = " + std::to_string(gamma) +
                                                       ", C = " + std::to_string(c)};
          return rep;
        }
      }
    }
  }
  return rep;
}

}  // namespace scdens
