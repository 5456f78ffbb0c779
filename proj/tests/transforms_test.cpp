#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "scdens/density.hpp"
#include "scdens/quadrature.hpp"
#include "scdens/transforms.hpp"

using namespace scdens;

namespace {

std::vector<double> interior_grid(const TransformSpec& t, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) {
    double u = (i + 0.5) / n;
    if (t.kind() == TransformKind::PowerS && t.s() < 0) g.push_back(-std::exp(-12 * (u - 0.5)));
    else if (t.kind() == TransformKind::PowerS) g.push_back(std::exp(12 * (u - 0.5)));
    else g.push_back(40 * (u - 0.5));
  }
  return g;
}

const std::vector<TransformSpec> kFamily = {
    TransformSpec::power(-0.9), TransformSpec::power(-0.5), TransformSpec::power(-1.0 / 3),
    TransformSpec::log_concave(), TransformSpec::log_concave(0.5), TransformSpec::power(0.5),
    TransformSpec::power(2.0)};

}  // namespace

TEST(Eval, PowerAndExponentialValues) {
  EXPECT_DOUBLE_EQ(TransformSpec::power(0)(0.0), 1.0);
  EXPECT_DOUBLE_EQ(TransformSpec::power(-0.5)(-2.0), 0.25);
  EXPECT_DOUBLE_EQ(TransformSpec::power(0.5)(4.0), 16.0);
}

TEST(Eval, ExtendedArguments) {
  auto t = TransformSpec::power(-0.5);
  EXPECT_EQ(t.eval(ExtReal::neg_inf()), ExtReal(0.0));
  EXPECT_TRUE(t.eval(ExtReal::pos_inf()).is_pos_inf());
  EXPECT_TRUE(t.eval(ExtReal(0.0)).is_pos_inf());
  EXPECT_TRUE(t.eval(ExtReal(1.0)).is_pos_inf());
  auto q = TransformSpec::power(0.5);
  EXPECT_EQ(q.eval(ExtReal(-1.0)), ExtReal(0.0));
  EXPECT_EQ(TransformSpec::log_concave().eval(ExtReal::neg_inf()), ExtReal(0.0));
}

TEST(Eval, LimitPoints) {
  auto neg = TransformSpec::power(-0.5);
  EXPECT_EQ(neg.y0(), -kInf);
  EXPECT_EQ(neg.yinf(), 0.0);
  EXPECT_EQ(neg.alpha(), 2.0);
  auto pos = TransformSpec::power(0.5);
  EXPECT_EQ(pos.y0(), 0.0);
  EXPECT_EQ(pos.yinf(), kInf);
  for (const auto& t : kFamily) {
    if (std::isfinite(t.y0())) EXPECT_LT(t(t.y0() + 1e-15), 1e-6);
    else EXPECT_LT(t(-1e12), 1e-6);
    if (std::isfinite(t.yinf())) EXPECT_GT(t(t.yinf() - 1e-9), 1e6);
    else EXPECT_GT(t(1e13), 1e6);
  }
}

TEST(Inverse, Values) {
  auto t = TransformSpec::power(-0.5);
  EXPECT_DOUBLE_EQ(t.inverse(1.0), -1.0);
  EXPECT_DOUBLE_EQ(t.inverse(0.25), -2.0);
  EXPECT_NEAR(TransformSpec::log_concave().inverse(std::numbers::e), 1.0, 1e-15);
  EXPECT_THROW(t.inverse(0.0), DomainError);
  EXPECT_THROW(t.inverse(-1.0), DomainError);
  EXPECT_THROW(t.inverse(kInf), DomainError);
}

TEST(Derivative, Values) {
  EXPECT_DOUBLE_EQ(TransformSpec::log_concave().derivative(0.0), 1.0);
  EXPECT_DOUBLE_EQ(TransformSpec::power(-1).derivative(-2.0), 0.25);
  EXPECT_NEAR(TransformSpec::power(-0.5).derivative(-1.0), 2.0, 1e-14);
  EXPECT_THROW(TransformSpec::power(-0.5).derivative(0.0), DomainError);
  EXPECT_THROW(TransformSpec::power(0.5).derivative(-1.0), DomainError);
}

TEST(Properties, MonotoneOnProbeGrid) {
  for (const auto& t : kFamily) {
    auto g = interior_grid(t, 1000);
    for (std::size_t i = 1; i < g.size(); ++i) {
      EXPECT_LE(t(g[i - 1]), t(g[i])) << t.describe();
    }
  }
}

TEST(Properties, RoundTrip) {
  for (const auto& t : kFamily) {
    for (double y : interior_grid(t, 1000)) {
      double back = t.inverse(t(y));
      EXPECT_NEAR(back, y, 1e-10 * std::max(1.0, std::abs(y))) << t.describe();
      EXPECT_NEAR(t(t.inverse(t(y))), t(y), 1e-12 * t(y));
    }
  }
}

TEST(Properties, SquareRootTransform) {
  EXPECT_EQ(sqrt_transform(TransformSpec::power(-0.5)).s(), -1.0);
  EXPECT_NEAR(sqrt_transform(TransformSpec::power(-1.0 / 3)).s(), -2.0 / 3, 1e-15);
  for (const auto& t : kFamily) {
    auto g = sqrt_transform(t);
    if (std::isfinite(t.alpha())) {
      EXPECT_DOUBLE_EQ(g.alpha(), t.alpha() / 2);
    }
    for (double y : interior_grid(t, 1000)) {
      double gy = g(y);
      EXPECT_NEAR(gy * gy, t(y), 1e-10 * t(y)) << t.describe();
    }
  }
}

TEST(Properties, DerivativeMatchesFiniteDifference) {
  for (const auto& t : kFamily) {
    for (double y : interior_grid(t, 200)) {
      double step = 1e-6 * std::max(1e-3, std::abs(y));
      double fd = (t(y + step) - t(y - step)) / (2 * step);
      EXPECT_NEAR(t.derivative(y), fd, 1e-6 * std::abs(fd) + 1e-300) << t.describe() << " y=" << y;
    }
  }
}

TEST(Properties, GeneralizedMeanNondecreasingInS) {
  const double ss[] = {-kInf, -8, -2, -1, -0.5, -0.1, 0, 0.1, 0.5, 1, 2, 8};
  const double pairs[][2] = {{1, 4}, {0.3, 2}, {5, 0.1}, {2, 3}};
  for (auto& ab : pairs)
    for (double th : {0.1, 0.5, 0.9}) {
      double prev = -1;
      for (double s : ss) {
        double m = generalized_mean(s, ab[0], ab[1], th);
        EXPECT_GE(m, prev - 1e-14);
        prev = m;
      }
    }
}

TEST(GeneralizedMean, Values) {
  EXPECT_DOUBLE_EQ(generalized_mean(1, 2, 4, 0.5), 3.0);
  EXPECT_NEAR(generalized_mean(0, 1, 4, 0.5), 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(generalized_mean(-kInf, 2, 4, 0.3), 2.0);
  EXPECT_DOUBLE_EQ(generalized_mean(-0.5, 0, 4, 0.3), 0.0);
  EXPECT_THROW(generalized_mean(1, 2, 4, 1.0), DomainError);
}

TEST(SConcavity, Examples) {
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(-6 + 12.0 * i / 40);
  std::vector<double> unit;
  for (int i = 0; i <= 30; ++i) unit.push_back(i / 30.0);
  auto uniform = [](double x) { return (x >= 0 && x <= 1) ? 1.0 : 0.0; };
  EXPECT_TRUE(check_s_concavity(uniform, -0.5, unit));
  auto gauss = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); };
  EXPECT_TRUE(check_s_concavity(gauss, 0.0, grid));
  auto cauchy = [](double x) { return 1.0 / (std::numbers::pi * (1 + x * x)); };
  auto mixture = [&](double x) { return 0.5 * cauchy(x - 5) + 0.5 * cauchy(x + 5); };
  EXPECT_FALSE(check_s_concavity(mixture, 0.0, grid));
  // The Cauchy density itself is (-1/2)-concave but not log-concave.
  EXPECT_TRUE(check_s_concavity(cauchy, -0.5, grid));
  EXPECT_FALSE(check_s_concavity(cauchy, 0.0, grid));
}

TEST(Assumptions, NegativePower) {
  auto rep = check_assumptions(TransformSpec::power(-0.5));
  EXPECT_EQ(rep.t1.status, AssumptionStatus::Pass);
  EXPECT_NEAR(rep.t1.exponent, 2.0, 1e-9);
  EXPECT_EQ(rep.t2.status, AssumptionStatus::Vacuous);
  EXPECT_EQ(rep.t3.status, AssumptionStatus::Pass);
  EXPECT_NEAR(rep.t3.exponent, 2.0, 1e-9);
  EXPECT_EQ(rep.t4.status, AssumptionStatus::Vacuous);
}

TEST(Assumptions, LogConcave) {
  auto rep = check_assumptions(TransformSpec::log_concave());
  EXPECT_EQ(rep.t1.status, AssumptionStatus::Pass);
  EXPECT_TRUE(std::isinf(rep.t1.exponent));
  EXPECT_EQ(rep.t3.status, AssumptionStatus::Vacuous);
  EXPECT_EQ(rep.t4.status, AssumptionStatus::Pass);
}

TEST(Assumptions, PositivePowers) {
  EXPECT_EQ(check_assumptions(TransformSpec::power(2)).t2.status, AssumptionStatus::Fail);
  EXPECT_EQ(check_assumptions(TransformSpec::power(1)).t2.status, AssumptionStatus::Pass);
  EXPECT_EQ(check_assumptions(TransformSpec::power(0.5)).t2.status, AssumptionStatus::Pass);
  EXPECT_EQ(check_assumptions(TransformSpec::power(0.5)).t4.status, AssumptionStatus::Pass);
}

TEST(Assumptions, PolesAndTailsOutsideRange) {
  // s = -2 has a pole of order 1/2 and a left tail too heavy for T1.
  auto rep = check_assumptions(TransformSpec::power(-2));
  EXPECT_EQ(rep.t1.status, AssumptionStatus::Fail);
  EXPECT_EQ(rep.t3.status, AssumptionStatus::Fail);
}

TEST(Assumptions, GeneralCallbacks) {
  TransformCallbacks cb;
  cb.eval = [](double y) { return std::exp(y) * (2 + std::tanh(y)) / 3; };
  cb.inverse = [](double u) {
    double lo = -800, hi = 800;
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (std::exp(mid) * (2 + std::tanh(mid)) / 3 < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto t = TransformSpec::general(cb, -kInf, kInf, 4.0);
  auto rep = check_assumptions(t);
  EXPECT_EQ(rep.t1.status, AssumptionStatus::Pass);
  EXPECT_NEAR(t.derivative(0.3), (cb.eval(0.3 + 1e-7) - cb.eval(0.3 - 1e-7)) / 2e-7, 1e-6);
}

TEST(SegmentMoments, MatchQuadratureOracle) {
  for (const auto& t : kFamily) {
    auto g = interior_grid(t, 40);
    for (std::size_t i = 0; i < g.size(); i += 3)
      for (std::size_t j = 0; j < g.size(); j += 5) {
        double a = g[i], b = g[j];
        if (a == b) continue;
        if (t.kind() == TransformKind::LogConcave && std::abs(a - b) > 30) continue;
        auto m = segment_moments(t, a, b);
        // Oracle: Simpson in w = log|y| for powers, which flattens the
        // integrand near the pole, and in u directly for the exponential.
        auto w = [&](auto fn) {
          double scale = 1e-300;
          for (int k = 0; k <= 8; ++k) scale = std::max(scale, std::abs(fn(k / 8.0, a + k / 8.0 * (b - a))));
          if (t.kind() == TransformKind::LogConcave)
            return quad::adaptive_simpson([&](double u) { return fn(u, a + u * (b - a)); }, 0, 1, 1e-13 * scale).value;
          double sg = a < 0 ? -1.0 : 1.0;
          auto g = [&](double lw) {
            double y = sg * std::exp(lw);
            return fn((y - a) / (b - a), y) * y / (b - a);
          };
          double la = std::log(std::abs(a)), lb = std::log(std::abs(b));
          double lo = std::min(la, lb), hi = std::max(la, lb), sign = la < lb ? 1.0 : -1.0;
          double rough = quad::adaptive_simpson(g, lo, hi, 1e-6 * scale).value;
          return sign * quad::adaptive_simpson(g, lo, hi, 1e-13 * std::abs(rough)).value;
        };
        double g0 = w([&](double, double y) { return t(y); });
        auto one_minus = [&](double y) { return (b - y) / (b - a); };
        double ga = w([&](double, double y) { return one_minus(y) * t.derivative(y); });
        double gbb = w([&](double u, double y) { return u * u * t.second_derivative(y); });
        double gab = w([&](double u, double y) { return u * one_minus(y) * t.second_derivative(y); });
        EXPECT_NEAR(m.g, g0, 1e-9 * std::abs(g0)) << t.describe() << " " << a << " " << b;
        EXPECT_NEAR(m.ga, ga, 1e-7 * std::abs(ga) + 1e-14) << t.describe() << " " << a << " " << b;
        EXPECT_NEAR(m.gbb, gbb, 1e-6 * std::abs(gbb) + 1e-12) << t.describe() << " " << a << " " << b;
        EXPECT_NEAR(m.gab, gab, 1e-6 * std::abs(gab) + 1e-12) << t.describe() << " " << a << " " << b;
      }
  }
}

TEST(Nesting, Examples) {
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(-5 + 10.0 * i / 200);
  auto gauss = tabulate(TransformSpec::log_concave(), [](double x) { return -0.5 * x * x; }, -6, 6, 301);
  auto r1 = nesting_check(normalize(gauss), -0.5, grid);
  EXPECT_TRUE(r1.concave);
  EXPECT_EQ(r1.skipped, 0u);

  auto uni = TransformedDensity(TransformSpec::log_concave(), PiecewiseConcave({0, 1}, {0, 0}));
  std::vector<double> wide;
  for (int i = 0; i <= 100; ++i) wide.push_back(-0.5 + 2.0 * i / 100);
  auto r2 = nesting_check(uni, -0.9, wide);
  EXPECT_TRUE(r2.concave);
  EXPECT_GT(r2.skipped, 0u);

  // (1 + |x|)^{-3} is h_{-1/3} of the tent -(1 + |x|).
  auto pareto = normalize(TransformedDensity(TransformSpec::power(-1.0 / 3),
                                             PiecewiseConcave({-50, 0, 50}, {-51, -1, -51})));
  EXPECT_TRUE(nesting_check(pareto, -0.5, grid).concave);
  EXPECT_THROW(nesting_check(pareto, -0.2, grid), DomainError);
  auto lap = TransformedDensity(TransformSpec::log_concave(), PiecewiseConcave({-5, 0, 5}, {-5, 0, -5}));
  EXPECT_TRUE(nesting_check(lap, -0.5, grid).concave);
}
