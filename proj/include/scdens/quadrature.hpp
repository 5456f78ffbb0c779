#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "scdens/core.hpp"

namespace scdens::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

// Adaptive Simpson with interval bisection and Richardson correction.
// abs_tol is the target for the whole interval; the budget caps evaluations.
template <class F>
Result adaptive_simpson(F&& f, double a, double b, double abs_tol = tol::quadrature,
                        int max_depth = 50, std::size_t budget = 2'000'000) {
  Result res;
  if (!(b > a)) return res;
  struct Frame {
    double a, b, fa, fm, fb, whole, tol;
    int depth;
  };
  auto simpson = [](double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  };
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  res.evaluations = 3;
  std::vector<Frame> stack;
  stack.push_back({a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), abs_tol, 0});
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    double m = 0.5 * (fr.a + fr.b);
    double lm = 0.5 * (fr.a + m), rm = 0.5 * (m + fr.b);
    double flm = f(lm), frm = f(rm);
    res.evaluations += 2;
    double left = simpson(fr.a, m, fr.fa, flm, fr.fm);
    double right = simpson(m, fr.b, fr.fm, frm, fr.fb);
    double delta = left + right - fr.whole;
    bool stop = std::abs(delta) <= 15.0 * fr.tol || fr.depth >= max_depth || res.evaluations >= budget ||
                m <= fr.a || m >= fr.b;
    if (stop) {
      if (std::abs(delta) > 15.0 * fr.tol) res.converged = false;
      res.value += left + right + delta / 15.0;
      res.error += std::abs(delta) / 15.0;
      continue;
    }
    stack.push_back({m, fr.b, fr.fm, frm, fr.fb, right, 0.5 * fr.tol, fr.depth + 1});
    stack.push_back({fr.a, m, fr.fa, flm, fr.fm, left, 0.5 * fr.tol, fr.depth + 1});
  }
  return res;
}

// Gauss-Legendre rule with N nodes on [0, 1].
template <int N>
struct GaussLegendre {
  std::array<double, N> x{};
  std::array<double, N> w{};

  GaussLegendre() {
    for (int i = 0; i < N; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double dp = 1.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= N; ++k) {
          double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = N * (z * p1 - p0) / (z * z - 1.0);
        double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = 0.5 * (1.0 - z);
      w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
  }

  static const GaussLegendre& get() {
    static const GaussLegendre rule;
    return rule;
  }
};

}  // namespace scdens::quad
