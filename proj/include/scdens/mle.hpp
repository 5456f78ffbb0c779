#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <limits>
#include <vector>

#include "scdens/concave_fn.hpp"
#include "scdens/core.hpp"
#include "scdens/density.hpp"
#include "scdens/transforms.hpp"

namespace scdens {

struct FitConfig {
  double s = 0.0;
  int max_iterations = 500;
  // Bound on the KKT residual: the gradient over the active knots and every
  // directional derivative that would add a kink.
  double grad_tol = 1e-10;
  double integral_tol = 1e-8;
  double shrink = 0.5;
  double initial_step = 1.0;
  double armijo = 1e-4;
  // For s < 0 knot values stay at or below -range_guard.
  double range_guard = 1e-10;
};

struct FitResult {
  PiecewiseConcave phi_hat;
  TransformedDensity density;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  // Integral of h(phi_hat) at the optimum, before the final normalize.
  double raw_integral = 0.0;
  // Penalized objective after every accepted step.
  std::vector<double> objective_history;
};

// Sorted distinct points with multiplicity weights summing to one.
struct WeightedData {
  std::vector<double> x;
  std::vector<double> w;
};

inline WeightedData weigh(std::vector<double> data) {
  for (double v : data)
    if (!std::isfinite(v)) throw DomainError("data must be finite");
  std::sort(data.begin(), data.end());
  WeightedData out;
  double unit = 1.0 / data.size();
  for (double v : data) {
    if (!out.x.empty() && out.x.back() == v) {
      out.w.back() += unit;
    } else {
      out.x.push_back(v);
      out.w.push_back(unit);
    }
  }
  return out;
}

// Smallest sample size with a maximizer, ceil(g / (g - 1)) for g = -1/s.
inline std::size_t existence_threshold(double s) {
  if (s >= 0) return 2;
  if (s <= -1) return std::numeric_limits<std::size_t>::max();
  double g = -1.0 / s;
  return static_cast<std::size_t>(std::ceil(g / (g - 1) - 1e-12));
}

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};

namespace detail {

inline double log_h_or_minus_inf(const TransformSpec& t, double y) {
  if (!(y > t.y0()) || !(y < t.yinf())) return -kInf;
  return t.log_h(y);
}

// The penalized objective over piecewise-linear phi whose knots are a
// subset of the data points, with tridiagonal second derivatives.
class MleProblem {
 public:
  MleProblem(WeightedData d, TransformSpec t) : d_(std::move(d)), t_(std::move(t)) {}

  const WeightedData& data() const { return d_; }
  const TransformSpec& transform() const { return t_; }

  bool feasible(const std::vector<double>& theta, double guard) const {
    for (double v : theta) {
      if (t_.kind() == TransformKind::PowerS && t_.s() < 0 && !(v <= -guard)) return false;
      if (t_.kind() == TransformKind::PowerS && t_.s() > 0 && !(v > 0)) return false;
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  // Value of the objective with knots x[idx[i]] carrying theta[i].
  double value(const std::vector<std::size_t>& idx, const std::vector<double>& theta) const {
    double data_term = 0, integral = 0;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      std::size_t a = idx[i], b = idx[i + 1];
      double za = d_.x[a], width = d_.x[b] - za;
      integral += width * segment_mean(t_, theta[i], theta[i + 1]);
      std::size_t end = (i + 2 == idx.size()) ? b + 1 : b;
      for (std::size_t j = a; j < end; ++j) {
        double lam = (d_.x[j] - za) / width;
        data_term += d_.w[j] * log_h_or_minus_inf(t_, (1 - lam) * theta[i] + lam * theta[i + 1]);
      }
    }
    if (idx.size() == 1) data_term = log_h_or_minus_inf(t_, theta[0]);
    double v = data_term - integral;
    return std::isnan(v) ? -kInf : v;
  }

  // Gradient g and tridiagonal Hessian (diag, off) of the objective in theta.
  void derivatives(const std::vector<std::size_t>& idx, const std::vector<double>& theta, std::vector<double>& g,
                   std::vector<double>& diag, std::vector<double>& off) const {
    std::size_t q = idx.size();
    g.assign(q, 0.0);
    diag.assign(q, 0.0);
    off.assign(q > 0 ? q - 1 : 0, 0.0);
    for (std::size_t i = 0; i + 1 < q; ++i) {
      std::size_t a = idx[i], b = idx[i + 1];
      double za = d_.x[a], width = d_.x[b] - za;
      auto m = segment_moments(t_, theta[i], theta[i + 1], true);
      g[i] -= width * m.ga;
      g[i + 1] -= width * m.gb;
      diag[i] -= width * m.gaa;
      diag[i + 1] -= width * m.gbb;
      off[i] -= width * m.gab;
      std::size_t end = (i + 2 == q) ? b + 1 : b;
      for (std::size_t j = a; j < end; ++j) {
        double lam = (d_.x[j] - za) / width;
        double v = (1 - lam) * theta[i] + lam * theta[i + 1];
        double c = d_.w[j] * t_.dlog_h(v), e = d_.w[j] * t_.d2log_h(v);
        g[i] += c * (1 - lam);
        g[i + 1] += c * lam;
        diag[i] += e * (1 - lam) * (1 - lam);
        diag[i + 1] += e * lam * lam;
        off[i] += e * lam * (1 - lam);
      }
    }
  }

  // Values of phi at every data point.
  std::vector<double> interpolate(const std::vector<std::size_t>& idx, const std::vector<double>& theta) const {
    std::vector<double> v(d_.x.size());
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      std::size_t a = idx[i], b = idx[i + 1];
      double za = d_.x[a], width = d_.x[b] - za;
      for (std::size_t j = a; j <= b; ++j) {
        double lam = (d_.x[j] - za) / width;
        v[j] = (1 - lam) * theta[i] + lam * theta[i + 1];
      }
    }
    return v;
  }

  // Directional derivative of the objective along the tent that adds a kink
  // at each non-knot data point (zero at knots).
  std::vector<double> kink_gains(const std::vector<std::size_t>& idx, const std::vector<double>& theta) const {
    std::size_t m = d_.x.size();
    auto v = interpolate(idx, theta);
    std::vector<double> p0(m + 1, 0.0), p1(m + 1, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      double c = d_.w[j] * t_.dlog_h(v[j]);
      p0[j + 1] = p0[j] + c;
      p1[j + 1] = p1[j] + c * (d_.x[j] - d_.x[0]);
    }
    std::vector<double> gain(m, 0.0);
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      std::size_t a = idx[i], b = idx[i + 1];
      double za = d_.x[a] - d_.x[0], zb = d_.x[b] - d_.x[0];
      for (std::size_t j = a + 1; j < b; ++j) {
        double xj = d_.x[j] - d_.x[0];
        double left = ((p1[j + 1] - p1[a + 1]) - za * (p0[j + 1] - p0[a + 1])) / (xj - za);
        double right = (zb * (p0[b] - p0[j + 1]) - (p1[b] - p1[j + 1])) / (zb - xj);
        auto ml = segment_moments(t_, theta[i], v[j], false);
        auto mr = segment_moments(t_, v[j], theta[i + 1], false);
        gain[j] = left + right - ((xj - za) * ml.gb + (zb - xj) * mr.ga);
      }
    }
    return gain;
  }

 private:
  WeightedData d_;
  TransformSpec t_;
};

// Solve (D + mu I) x = r for a symmetric tridiagonal D, raising mu until the
// factorization is positive definite.
inline std::vector<double> damped_solve(std::vector<double> a, const std::vector<double>& b,
                                        const std::vector<double>& r) {
  std::size_t q = a.size();
  double scale = 0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  double mu = 0;
  std::vector<double> dd(q), l(q), x(q);
  for (int attempt = 0; attempt < 200; ++attempt) {
    bool ok = true;
    for (std::size_t i = 0; i < q && ok; ++i) {
      double di = a[i] + mu - (i > 0 ? l[i - 1] * b[i - 1] : 0.0);
      if (!(di > 1e-14 * (scale + mu))) ok = false;
      dd[i] = di;
      if (i + 1 < q) l[i] = b[i] / di;
    }
    if (ok) {
      for (std::size_t i = 0; i < q; ++i) x[i] = r[i] - (i > 0 ? l[i - 1] * x[i - 1] : 0.0);
      for (std::size_t i = 0; i < q; ++i) x[i] /= dd[i];
      for (std::size_t i = q - 1; i-- > 0;) x[i] -= l[i] * x[i + 1];
      return x;
    }
    mu = mu == 0 ? 1e-10 * scale + 1e-300 : 4 * mu;
  }
  throw NumericError("damped Newton system could not be factorized", 0.0);
}

}  // namespace detail

// Objective and gradient for knot values at the sorted distinct data points.
inline ObjectiveValue objective(const std::vector<double>& values, const std::vector<double>& data, double s) {
  auto wd = weigh(data);
  if (values.size() != wd.x.size()) throw DomainError("one value per distinct data point is required");
  auto t = TransformSpec::power(s);
  for (double v : values)
    if (std::isfinite(t.yinf()) && !(v < t.yinf())) throw DomainError("knot value at or above the pole of h");
  detail::MleProblem prob(wd, t);
  std::vector<std::size_t> idx(wd.x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  ObjectiveValue out;
  out.value = prob.value(idx, values);
  std::vector<double> diag, off;
  prob.derivatives(idx, values, out.gradient, diag, off);
  return out;
}

inline FitResult fit(const std::vector<double>& data, const FitConfig& cfg) {
  if (!(cfg.s > -1)) throw UnsupportedInstance("the maximizer is only computed for s > -1");
  if (!(cfg.grad_tol > 0) || !(cfg.integral_tol > 0) || cfg.max_iterations < 1 || !(cfg.shrink > 0 && cfg.shrink < 1))
    throw DomainError("invalid fit configuration");
  std::size_t need = existence_threshold(cfg.s);
  if (data.size() < need)
    throw UnsupportedInstance("need at least " + std::to_string(need) + " observations for s = " +
                              std::to_string(cfg.s) + ", got " + std::to_string(data.size()));
  auto wd = weigh(data);
  if (wd.x.size() < 2) throw UnsupportedInstance("data must contain at least two distinct values");
  auto t = TransformSpec::power(cfg.s);
  detail::MleProblem prob(wd, t);
  const auto& x = wd.x;
  std::size_t m = x.size();

  // Start from the uniform density on the data range.
  double R = x.back() - x.front();
  double start = t.inverse(1.0 / R);
  std::vector<std::size_t> idx{0, m - 1};
  std::vector<double> theta{start, start};
  double L = prob.value(idx, theta);

  std::vector<double> history{L};
  std::vector<double> g, diag, off;
  const double eps = std::numeric_limits<double>::epsilon();

  auto gnorm_at = [&](const std::vector<double>& th) {
    std::vector<double> g2, d2, o2;
    prob.derivatives(idx, th, g2, d2, o2);
    double n = 0;
    for (double v : g2) n = std::max(n, std::abs(v));
    return n;
  };

  auto drop_flat_kinks = [&] {
    for (std::size_t i = 1; i + 1 < idx.size();) {
      double hl = x[idx[i]] - x[idx[i - 1]], hr = x[idx[i + 1]] - x[idx[i]];
      double sl = (theta[i] - theta[i - 1]) / hl, sr = (theta[i + 1] - theta[i]) / hr;
      if (sl - sr <= 1e-14 * std::max({1.0, std::abs(sl), std::abs(sr)})) {
        idx.erase(idx.begin() + i);
        theta.erase(theta.begin() + i);
      } else {
        ++i;
      }
    }
  };

  // Step along dir from theta, capped so kinks stay concave and values stay
  // in range; a kink reaching zero is removed. With `polish` the step is
  // judged by the gradient norm instead of the objective.
  auto take_step = [&](const std::vector<double>& dir, double slope, double t0, bool polish, double gnorm) {
    double tmax = kInf;
    std::size_t blocking = 0;
    for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
      double hl = x[idx[i]] - x[idx[i - 1]], hr = x[idx[i + 1]] - x[idx[i]];
      double kink = (theta[i] - theta[i - 1]) / hl - (theta[i + 1] - theta[i]) / hr;
      double dk = (dir[i] - dir[i - 1]) / hl - (dir[i + 1] - dir[i]) / hr;
      if (dk < 0) {
        double tc = std::max(0.0, kink / -dk);
        if (tc < tmax) tmax = tc, blocking = i;
      }
    }
    double trange = kInf;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (cfg.s < 0 && dir[i] > 0) trange = std::min(trange, 0.9 * (-cfg.range_guard - theta[i]) / dir[i]);
      if (cfg.s > 0 && dir[i] < 0) trange = std::min(trange, 0.9 * theta[i] / -dir[i]);
    }
    double step = std::min({t0, tmax, trange});
    bool hits_kink = tmax <= std::min(t0, trange);
    if (hits_kink && step == 0) {
      idx.erase(idx.begin() + blocking);
      theta.erase(theta.begin() + blocking);
      L = prob.value(idx, theta);
      return true;
    }
    std::vector<double> trial(theta.size());
    bool accepted = false;
    for (int ls = 0; ls < (polish ? 1 : 80); ++ls, step *= cfg.shrink, hits_kink = false) {
      for (std::size_t i = 0; i < theta.size(); ++i) trial[i] = theta[i] + step * dir[i];
      if (!prob.feasible(trial, cfg.range_guard)) continue;
      if (polish) {
        accepted = gnorm_at(trial) < gnorm;
        if (accepted) L = prob.value(idx, trial);
      } else {
        double Lnew = prob.value(idx, trial);
        accepted = Lnew >= L + cfg.armijo * step * slope;
        if (accepted) {
          L = Lnew;
          history.push_back(L);
        }
      }
      if (accepted) break;
    }
    if (!accepted) return false;
    theta.swap(trial);
    if (hits_kink) {
      idx.erase(idx.begin() + blocking);
      theta.erase(theta.begin() + blocking);
    }
    drop_flat_kinks();
    return true;
  };

  bool converged = false;
  bool stalled = false;
  int it = 0;
  double residual = kInf;
  for (; it < cfg.max_iterations; ++it) {
    prob.derivatives(idx, theta, g, diag, off);
    double gnorm = 0;
    for (double v : g) gnorm = std::max(gnorm, std::abs(v));

    if (gnorm > cfg.grad_tol && !stalled) {
      std::vector<double> neg(diag.size()), negoff(off.size());
      for (std::size_t i = 0; i < diag.size(); ++i) neg[i] = -diag[i];
      for (std::size_t i = 0; i < off.size(); ++i) negoff[i] = -off[i];
      auto dir = detail::damped_solve(neg, negoff, g);
      double slope = 0;
      for (std::size_t i = 0; i < g.size(); ++i) slope += g[i] * dir[i];
      // Below the rounding noise of L the Armijo test cannot discriminate,
      // so the final Newton steps are judged by the gradient and are not
      // recorded in the history.
      bool polish = slope <= 64 * eps * std::max(1.0, std::abs(L));
      if (!take_step(dir, slope, cfg.initial_step, polish, gnorm)) stalled = true;
      continue;
    }
    stalled = false;

    auto gain = prob.kink_gains(idx, theta);
    double worst = std::max(0.0, *std::max_element(gain.begin(), gain.end()));
    residual = std::max(gnorm, worst);
    if (worst <= cfg.grad_tol) {
      converged = gnorm <= cfg.grad_tol;
      break;
    }
    // Add the best new kink inside every active interval that has one and
    // move along the sum of their tents.
    auto vals = prob.interpolate(idx, theta);
    std::vector<std::size_t> nidx;
    std::vector<double> ntheta, tent;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      nidx.push_back(idx[i]);
      ntheta.push_back(theta[i]);
      tent.push_back(0.0);
      // Rank candidates by the gain of the equivalent hinge, which does not
      // favour points crowding an existing knot.
      std::size_t best = 0;
      double bv = 0;
      double za = x[idx[i]], zb = x[idx[i + 1]];
      for (std::size_t j = idx[i] + 1; j < idx[i + 1]; ++j) {
        if (!(gain[j] > cfg.grad_tol)) continue;
        double score = gain[j] * (x[j] - za) * (zb - x[j]) / (zb - za);
        if (score > bv) bv = score, best = j;
      }
      if (best) {
        nidx.push_back(best);
        ntheta.push_back(vals[best]);
        tent.push_back(gain[best]);
      }
    }
    nidx.push_back(idx.back());
    ntheta.push_back(theta.back());
    tent.push_back(0.0);
    auto old_idx = idx;
    auto old_theta = theta;
    idx.swap(nidx);
    theta.swap(ntheta);
    prob.derivatives(idx, theta, g, diag, off);
    double slope = 0, curv = 0;
    for (std::size_t i = 0; i < tent.size(); ++i) {
      slope += g[i] * tent[i];
      curv += diag[i] * tent[i] * tent[i];
      if (i + 1 < tent.size()) curv += 2 * off[i] * tent[i] * tent[i + 1];
    }
    double t0 = curv < 0 ? slope / -curv : 1.0;
    if (!(slope > 0) || !take_step(tent, slope, t0, false, gnorm)) {
      idx.swap(old_idx);
      theta.swap(old_theta);
      L = prob.value(idx, theta);
      break;
    }
  }

  std::vector<double> knots;
  for (auto i : idx) knots.push_back(x[i]);
  PiecewiseConcave phi(knots, theta, 1e-9);
  TransformedDensity raw(t, phi);
  FitResult res{phi, normalize(raw), 0.0, 0, false, 0.0, 0.0, {}};
  res.raw_integral = raw.integral();
  res.converged = converged;
  res.objective_history = std::move(history);
  res.iterations = it;
  res.kkt_residual = residual;
  if (std::abs(res.raw_integral - 1) > cfg.integral_tol) res.converged = false;
  double ll = 0;
  for (std::size_t j = 0; j < m; ++j) ll += wd.w[j] * std::log(res.density(x[j]));
  res.loglik = ll;
  return res;
}

inline double loglik_ratio(const FitResult& f, const std::function<double(double)>& p0, const std::vector<double>& data) {
  double acc = 0;
  for (double xi : data) {
    double q = p0(xi);
    if (!(q > 0)) throw DomainError("reference density vanishes at a data point");
    acc += std::log(f.density(xi) / q);
  }
  return acc / data.size();
}

inline double loglik_ratio(const FitResult& f, const TransformedDensity& p0, const std::vector<double>& data) {
  return loglik_ratio(f, [&](double x) { return p0(x); }, data);
}

inline double loglik_ratio(const FitResult& f, const ReferenceDistribution& p0, const std::vector<double>& data) {
  return loglik_ratio(f, [&](double x) { return p0.pdf(x); }, data);
}

struct NonexistencePoint {
  double a = 0;
  double loglik = 0;
  double integral = 0;
};

// Log likelihoods of the densities a (b_r - a x)^{-r} on [0, b_r / a],
// r = -1/s, along a_k = (b_r / max x)(1 - 10^{-k}), k = 1..grid_size.
// These densities are s-concave and the likelihood is unbounded in a.
inline std::vector<NonexistencePoint> demonstrate_nonexistence(std::vector<double> data, double s, int grid_size) {
  if (!(s < -1)) throw DomainError("the likelihood is only unbounded for s < -1");
  if (data.empty() || grid_size < 1) throw DomainError("need data and a positive grid size");
  double lo = *std::min_element(data.begin(), data.end());
  if (!(lo > 0))
    for (auto& v : data) v += 1 - lo;
  double xmax = *std::max_element(data.begin(), data.end());
  double r = -1.0 / s;
  double br = std::pow(1 - r, 1 / (1 - r));
  std::vector<NonexistencePoint> out;
  for (int k = 1; k <= grid_size; ++k) {
    double a = br / xmax * -std::expm1(-k * std::log(10.0));
    double ll = 0;
    for (double xi : data) ll += std::log(a) - r * std::log(br - a * xi);
    // Antiderivative -(b_r - a x)^{1-r} / (1 - r) between 0 and b_r / a.
    double integral = std::pow(br, 1 - r) / (1 - r);
    out.push_back({a, ll, integral});
  }
  return out;
}

inline double nonexistence_constant(double s) {
  double r = -1.0 / s;
  return std::pow(1 - r, 1 / (1 - r));
}

}  // namespace scdens
