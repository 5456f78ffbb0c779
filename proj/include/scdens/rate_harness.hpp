#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "scdens/core.hpp"
#include "scdens/density.hpp"
#include "scdens/mle.hpp"
#include "scdens/quadrature.hpp"
#include "scdens/random.hpp"
#include "scdens/transforms.hpp"

namespace scdens::rates {

enum class Metric { Hellinger, L1, LogLR, SupCompact };
inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Hellinger, Metric::L1, Metric::LogLR, Metric::SupCompact};

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::Hellinger: return "hellinger";
    case Metric::L1: return "l1";
    case Metric::LogLR: return "loglr";
    default: return "sup_compact";
  }
}

inline Metric metric_from_string(const std::string& s) {
  for (Metric m : kAllMetrics)
    if (s == to_string(m)) return m;
  throw DomainError("unknown metric '" + s + "'");
}

struct RateStudyConfig {
  ReferenceDistribution true_density = ReferenceDistribution::laplace();
  double s = 0.0;
  std::vector<std::size_t> n_grid{100, 200, 400, 800, 1600, 3200, 6400};
  int replications = 100;
  std::uint64_t seed = 0;
  std::vector<Metric> metrics{Metric::Hellinger, Metric::L1, Metric::LogLR};
  Interval compact{-1, 1};  // for sup_compact and the consistency diagnostics
  unsigned jobs = 0;        // 0: hardware threads
};

struct Quantiles {
  double q25 = 0, q50 = 0, q75 = 0;
};

// Linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw InsufficientData("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  double h = p * static_cast<double>(v.size() - 1);
  auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline Quantiles quantiles(const std::vector<double>& v) { return {quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)}; }

struct SlopeFit {
  double slope = 0, intercept = 0, stderr_ = 0;
  std::size_t points = 0;
  std::vector<std::string> warnings;
};

// Least squares of log(error) on log(n). Nonpositive errors are dropped.
inline SlopeFit fit_slope(const std::vector<double>& ns, const std::vector<double>& errors) {
  if (ns.size() != errors.size()) throw DomainError("fit_slope: ns and errors differ in length");
  SlopeFit out;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(errors[i] > 0) || !(ns[i] > 0)) {
      out.warnings.push_back("dropped point n = " + std::to_string(ns[i]) + " with error " + std::to_string(errors[i]));
      continue;
    }
    x.push_back(std::log(ns[i]));
    y.push_back(std::log(errors[i]));
  }
  if (x.size() < 3) throw InsufficientData("fit_slope: " + std::to_string(x.size()) + " usable points, need 3");
  double k = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - out.intercept - out.slope * x[i];
    rss += e * e;
  }
  out.stderr_ = x.size() > 2 ? std::sqrt(rss / (k - 2) / sxx) : 0.0;
  out.points = x.size();
  return out;
}

struct Consistency {
  double sup_dist = 0;
  double sup_phat = 0;
};

inline Consistency consistency_diagnostics(const FitResult& fit, const std::function<double(double)>& p0,
                                           Interval p0_support, Interval compact) {
  if (!(compact.lo < compact.hi) || !(compact.lo > p0_support.lo) || !(compact.hi < p0_support.hi))
    throw DomainError("consistency_diagnostics: compact set must lie strictly inside the support of p0");
  Consistency c;
  for (int i = 0; i < 1024; ++i) {
    double x = compact.lo + (compact.hi - compact.lo) * i / 1023.0;
    c.sup_dist = std::max(c.sup_dist, std::abs(fit.density(x) - p0(x)));
  }
  c.sup_phat = fit.density.sup();
  return c;
}

inline Consistency consistency_diagnostics(const FitResult& fit, const ReferenceDistribution& p0, Interval compact) {
  return consistency_diagnostics(fit, [&](double x) { return p0.pdf(x); }, p0.support(), compact);
}

struct Replication {
  std::size_t n = 0;
  int rep = 0;
  bool converged = false;
  std::string error;  // set when the fit threw
  std::array<double, 4> value{};  // indexed by Metric
  double sup_phat = 0;
};

struct NSummary {
  std::size_t n = 0;
  std::size_t used = 0, excluded = 0;
  std::array<Quantiles, 4> q{};
  double sup_phat_median = 0;
};

struct RateStudyResult {
  RateStudyConfig config;
  std::vector<Replication> raw;  // n-major, then replication
  std::vector<NSummary> per_n;
  std::array<std::optional<SlopeFit>, 4> slope;
  std::size_t nonconverged = 0;
  double nonconverged_fraction = 0;
  bool valid = true;
  std::vector<std::string> warnings;

  bool has(Metric m) const {
    return std::find(config.metrics.begin(), config.metrics.end(), m) != config.metrics.end();
  }
};

inline void validate(const RateStudyConfig& cfg) {
  if (cfg.replications < 1) throw DomainError("replications must be at least 1");
  if (cfg.n_grid.empty()) throw DomainError("n_grid is empty");
  if (cfg.metrics.empty()) throw DomainError("no metrics requested");
  std::size_t need = existence_threshold(cfg.s);
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (i > 0 && !(cfg.n_grid[i] > cfg.n_grid[i - 1])) throw DomainError("n_grid must be strictly increasing");
    if (cfg.n_grid[i] < need)
      throw DomainError("n = " + std::to_string(cfg.n_grid[i]) + " is below the existence threshold " +
                        std::to_string(need) + " for this s");
  }
  const auto& d = cfg.true_density;
  std::vector<double> grid;
  double a = d.kind() == ReferenceDistribution::Kind::Uniform ? 0.0 : -20.0;
  double b = d.kind() == ReferenceDistribution::Kind::Uniform ? 1.0 : 20.0;
  for (int i = 0; i <= 40; ++i) grid.push_back(a + (b - a) * i / 40.0);
  if (!check_s_concavity([&](double x) { return d.pdf(x); }, cfg.s, grid))
    throw HypothesisError("true density " + d.name() + " is not s-concave for s = " + std::to_string(cfg.s));
}

inline Replication run_replication(const RateStudyConfig& cfg, std::size_t ni, int rep) {
  Replication r;
  r.n = cfg.n_grid[ni];
  r.rep = rep;
  const auto& p0 = cfg.true_density;
  auto data = sample(p0, r.n, derive_seed(cfg.seed, ni, static_cast<std::uint64_t>(rep)));
  FitConfig fc;
  fc.s = cfg.s;
  try {
    FitResult f = fit(data, fc);
    r.converged = f.converged;
    for (Metric m : cfg.metrics) {
      auto& v = r.value[static_cast<std::size_t>(m)];
      switch (m) {
        case Metric::Hellinger: v = hellinger(f.density, p0); break;
        case Metric::L1: v = l1_distance(f.density, p0); break;
        case Metric::LogLR: v = loglik_ratio(f, p0, data); break;
        case Metric::SupCompact: v = consistency_diagnostics(f, p0, cfg.compact).sup_dist; break;
      }
    }
    r.sup_phat = f.density.sup();
  } catch (const Error& e) {
    r.converged = false;
    r.error = e.what();
  }
  return r;
}

// Deterministic for a fixed seed: replication (i, j) draws from
// derive_seed(seed, i, j) and results are stored by index.
inline RateStudyResult run_rate_study(const RateStudyConfig& cfg) {
  validate(cfg);
  RateStudyResult res;
  res.config = cfg;
  std::size_t reps = static_cast<std::size_t>(cfg.replications);
  std::size_t total = cfg.n_grid.size() * reps;
  res.raw.resize(total);
  unsigned jobs = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, total));
  // Largest n first so workers finish together.
  std::vector<std::size_t> order(total);
  for (std::size_t k = 0; k < total; ++k) order[k] = total - 1 - k;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < total; k += jobs) {
        std::size_t idx = order[k];
        res.raw[idx] = run_replication(cfg, idx / reps, static_cast<int>(idx % reps));
      }
    });
  for (auto& t : pool) t.join();

  std::vector<double> ns;
  std::array<std::vector<double>, 4> medians;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    NSummary s;
    s.n = cfg.n_grid[ni];
    std::array<std::vector<double>, 4> vals;
    std::vector<double> sups;
    for (std::size_t j = 0; j < reps; ++j) {
      const auto& r = res.raw[ni * reps + j];
      if (!r.converged) {
        ++s.excluded;
        continue;
      }
      ++s.used;
      for (Metric m : cfg.metrics) vals[static_cast<std::size_t>(m)].push_back(r.value[static_cast<std::size_t>(m)]);
      sups.push_back(r.sup_phat);
      if (res.has(Metric::LogLR) && r.value[static_cast<std::size_t>(Metric::LogLR)] < -1e-9)
        res.warnings.push_back("negative log-likelihood ratio at n = " + std::to_string(r.n) + ", replication " +
                               std::to_string(r.rep));
      if (res.has(Metric::L1) && res.has(Metric::Hellinger) &&
          r.value[static_cast<std::size_t>(Metric::L1)] >
              2 * std::sqrt(2.0) * r.value[static_cast<std::size_t>(Metric::Hellinger)] + 1e-9)
        res.warnings.push_back("L1 above 2 sqrt(2) H at n = " + std::to_string(r.n) + ", replication " +
                               std::to_string(r.rep));
    }
    res.nonconverged += s.excluded;
    if (s.used > 0) {
      for (Metric m : cfg.metrics) {
        auto k = static_cast<std::size_t>(m);
        s.q[k] = quantiles(vals[k]);
        medians[k].push_back(s.q[k].q50);
      }
      s.sup_phat_median = quantile(sups, 0.5);
      ns.push_back(static_cast<double>(s.n));
    }
    res.per_n.push_back(s);
  }
  res.nonconverged_fraction = static_cast<double>(res.nonconverged) / static_cast<double>(total);
  if (res.nonconverged_fraction > 0.05) {
    res.valid = false;
    res.warnings.push_back("non-converged fits above 5%: study invalid");
  }
  if (ns.size() >= 3)
    for (Metric m : cfg.metrics) {
      auto k = static_cast<std::size_t>(m);
      try {
        res.slope[k] = fit_slope(ns, medians[k]);
      } catch (const InsufficientData& e) {
        res.warnings.push_back(std::string(to_string(m)) + ": " + e.what());
      }
    }
  if (res.has(Metric::Hellinger)) {
    const auto& h = medians[static_cast<std::size_t>(Metric::Hellinger)];
    for (std::size_t i = 1; i < h.size(); ++i)
      if (!(h[i] < h[i - 1]))
        res.warnings.push_back("median Hellinger not decreasing between n = " + std::to_string(ns[i - 1]) +
                               " and n = " + std::to_string(ns[i]));
  }
  return res;
}

// Bookkeeping for r_n^2 Psi(1/r_n) <= sqrt(n) with log N(eps) = K eps^{-1/2}.
struct RateEquationRow {
  double n = 0;
  double r = 0;      // c n^{2/5} at the reported c
  double lhs = 0;    // r^2 Psi(1/r)
  double rhs = 0;    // sqrt(n)
  bool holds = false;
  double c_max = 0;  // largest admissible c at this n, by bisection
};

struct RateEquationTable {
  double K = 0;
  double c = 0;             // reported constant
  double c_max_closed = 0;  // ((sqrt5 - 1)/2 / ((4/3) sqrt K))^{4/5}
  std::vector<double> deltas;
  std::vector<double> j_quadrature, j_closed;
  double j_max_rel_error = 0;
  std::vector<RateEquationRow> rows;
  bool all_hold = true;
};

inline double bracketing_integral_closed(double K, double delta) {
  return 4.0 / 3.0 * std::sqrt(K) * std::pow(delta, 0.75);
}

// int_0^delta sqrt(log N(eps)) d eps after eps = delta t^4, which removes the
// integrable singularity at 0.
inline double bracketing_integral(const std::function<double(double)>& log_n, double delta) {
  static const quad::GaussLegendre<32> gl;
  double acc = 0;
  for (int i = 0; i < 32; ++i) {
    double t = gl.x[static_cast<std::size_t>(i)];
    double t3 = t * t * t;
    acc += gl.w[static_cast<std::size_t>(i)] * std::sqrt(log_n(delta * t3 * t)) * 4 * delta * t3;
  }
  return acc;
}

// r^2 Psi(1/r) at r = c n^{2/5}, Psi(d) = J(d) (1 + J(d) / (d^2 sqrt n)).
inline double rate_equation_lhs(double K, double c, double n) {
  double r = c * std::pow(n, 0.4);
  double J = bracketing_integral([K](double e) { return K / std::sqrt(e); }, 1 / r);
  return r * r * J * (1 + J * r * r / std::sqrt(n));
}

inline RateEquationTable rate_equation_check(double K, const std::vector<double>& n_grid,
                                             std::vector<double> deltas = {0.1, 1.0}) {
  if (!(K > 0)) throw DomainError("rate_equation_check needs K > 0");
  RateEquationTable t;
  t.K = K;
  auto log_n = [K](double e) { return K / std::sqrt(e); };
  t.deltas = deltas;
  for (double d : deltas) {
    double q = bracketing_integral(log_n, d), c = bracketing_integral_closed(K, d);
    t.j_quadrature.push_back(q);
    t.j_closed.push_back(c);
    t.j_max_rel_error = std::max(t.j_max_rel_error, std::abs(q - c) / c);
  }
  t.c_max_closed = std::pow((std::sqrt(5.0) - 1) / 2 / (4.0 / 3.0 * std::sqrt(K)), 0.8);
  t.c = 0.5 * t.c_max_closed;
  auto lhs = [K](double c, double n) { return rate_equation_lhs(K, c, n); };
  for (double n : n_grid) {
    RateEquationRow row;
    row.n = n;
    row.r = t.c * std::pow(n, 0.4);
    row.lhs = lhs(t.c, n);
    row.rhs = std::sqrt(n);
    row.holds = row.lhs <= row.rhs;
    double lo = 0, hi = 1;
    while (lhs(hi, n) <= std::sqrt(n)) hi *= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (lhs(mid, n) <= std::sqrt(n) ? lo : hi) = mid;
    }
    row.c_max = lo;
    t.all_hold = t.all_hold && row.holds;
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace scdens::rates
