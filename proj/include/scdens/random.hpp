#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "scdens/core.hpp"

namespace scdens {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for work item (i, j) of a study seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(i + 1)) ^ splitmix64((j + 1) * 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}
  // Uniform on the open interval (0, 1), 53 random bits.
  double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t bits() { return eng_(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * n) % n; }

 private:
  std::mt19937_64 eng_;
};

// Wichura's AS241 (PPND16) inverse of the standard normal CDF.
inline double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw DomainError("normal_quantile: p outside (0,1)");
  double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

// Fixed true densities used by the studies and tests.
class ReferenceDistribution {
 public:
  enum class Kind { Gaussian, Laplace, Uniform, Pareto };

  static ReferenceDistribution gaussian() { return ReferenceDistribution(Kind::Gaussian, 0); }
  static ReferenceDistribution laplace() { return ReferenceDistribution(Kind::Laplace, 0); }
  static ReferenceDistribution uniform() { return ReferenceDistribution(Kind::Uniform, 0); }
  // ((beta - 1) / 2) (1 + |x|)^(-beta)
  static ReferenceDistribution pareto(double beta) {
    if (!(beta > 1)) throw DomainError("symmetric Pareto needs beta > 1");
    return ReferenceDistribution(Kind::Pareto, beta);
  }
  static ReferenceDistribution from_name(const std::string& name, double beta = 3.0) {
    if (name == "gaussian") return gaussian();
    if (name == "laplace") return laplace();
    if (name == "uniform") return uniform();
    if (name == "pareto") return pareto(beta);
    throw DomainError("unknown reference distribution '" + name + "'");
  }

  Kind kind() const { return kind_; }
  double beta() const { return beta_; }
  std::string name() const {
    switch (kind_) {
      case Kind::Gaussian: return "gaussian";
      case Kind::Laplace: return "laplace";
      case Kind::Uniform: return "uniform";
      default: return "pareto";
    }
  }

  double pdf(double x) const {
    switch (kind_) {
      case Kind::Gaussian: return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
      case Kind::Laplace: return 0.5 * std::exp(-std::abs(x));
      case Kind::Uniform: return (x >= 0 && x <= 1) ? 1.0 : 0.0;
      default: return 0.5 * (beta_ - 1) * std::pow(1 + std::abs(x), -beta_);
    }
  }

  double cdf(double x) const {
    switch (kind_) {
      case Kind::Gaussian: return 0.5 * std::erfc(-x / std::sqrt(2.0));
      case Kind::Laplace: return x < 0 ? 0.5 * std::exp(x) : 1 - 0.5 * std::exp(-x);
      case Kind::Uniform: return x <= 0 ? 0.0 : (x >= 1 ? 1.0 : x);
      default:
        return x < 0 ? 0.5 * std::pow(1 - x, 1 - beta_) : 1 - 0.5 * std::pow(1 + x, 1 - beta_);
    }
  }

  // Mass of (-inf, x] and [x, inf) without cancellation.
  double lower_tail(double x) const { return x <= 0 ? cdf(x) : 1 - upper_tail(x); }
  double upper_tail(double x) const {
    switch (kind_) {
      case Kind::Gaussian: return 0.5 * std::erfc(x / std::sqrt(2.0));
      case Kind::Laplace: return x > 0 ? 0.5 * std::exp(-x) : 1 - 0.5 * std::exp(x);
      case Kind::Uniform: return 1 - cdf(x);
      default: return x > 0 ? 0.5 * std::pow(1 + x, 1 - beta_) : 1 - 0.5 * std::pow(1 - x, 1 - beta_);
    }
  }

  double quantile(double u) const {
    if (!(u > 0 && u < 1)) throw DomainError("quantile: u outside (0,1)");
    switch (kind_) {
      case Kind::Gaussian: return normal_quantile(u);
      case Kind::Laplace: return u < 0.5 ? std::log(2 * u) : -std::log(2 * (1 - u));
      case Kind::Uniform: return u;
      default: {
        double e = -1.0 / (beta_ - 1);
        return u < 0.5 ? 1 - std::pow(2 * u, e) : std::pow(2 * (1 - u), e) - 1;
      }
    }
  }

  // Mode location and value.
  double mode() const { return kind_ == Kind::Uniform ? 0.5 : 0.0; }
  double peak() const { return pdf(mode()); }
  Interval support() const { return kind_ == Kind::Uniform ? Interval{0, 1} : Interval{-kInf, kInf}; }

  // Points where the density is not smooth.
  std::vector<double> kinks() const {
    switch (kind_) {
      case Kind::Gaussian: return {};
      case Kind::Uniform: return {0.0, 1.0};
      default: return {0.0};
    }
  }

 private:
  ReferenceDistribution(Kind k, double beta) : kind_(k), beta_(beta) {}
  Kind kind_;
  double beta_;
};

inline std::vector<double> sample(const ReferenceDistribution& dist, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample size must be at least 1");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = dist.quantile(rng.uniform());
  return out;
}

}  // namespace scdens
