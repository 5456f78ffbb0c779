#include <gtest/gtest.h>

#include <cmath>

#include "scdens/concave_fn.hpp"

using namespace scdens;

namespace {

PiecewiseConcave tent() { return PiecewiseConcave({0, 1, 2}, {0, 1, 0}); }

void expect_concave(const PiecewiseConcave& f) {
  for (std::size_t j = 1; j + 1 < f.size(); ++j) EXPECT_LE(f.slope(j), f.slope(j - 1) + 1e-12);
}

}  // namespace

TEST(Eval, Examples) {
  PiecewiseConcave flat({0, 1}, {0, 0});
  EXPECT_EQ(flat(0.5), ExtReal(0.0));
  EXPECT_TRUE(flat(2.0).is_neg_inf());
  EXPECT_EQ(tent()(1.5), ExtReal(0.5));
  EXPECT_EQ(tent()(2.0), ExtReal(0.0));
  EXPECT_EQ(tent()(0.0), ExtReal(0.0));
  EXPECT_THROW(tent()(3.0).value(), DomainError);
}

TEST(Construction, RejectsNonConcaveAndMergesTies) {
  EXPECT_THROW(PiecewiseConcave({0, 1, 2}, {0, -1, 0}), DomainError);
  EXPECT_THROW(PiecewiseConcave({0, 1}, {0}), DomainError);
  PiecewiseConcave f({2, 0, 1, 1}, {0, 0, 0.5, 1});
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f.values()[1], 1.0);
  PiecewiseConcave point({3}, {7});
  EXPECT_EQ(point(3.0), ExtReal(7.0));
  EXPECT_TRUE(point(3.1).is_neg_inf());
}

TEST(RestrictDomain, Examples) {
  auto left = tent().restrict_domain({0, 1});
  EXPECT_EQ(left.knots(), (std::vector<double>{0, 1}));
  EXPECT_EQ(left.values(), (std::vector<double>{0, 1}));
  auto same = tent().restrict_domain({-5, 5});
  EXPECT_EQ(same.knots(), tent().knots());
  EXPECT_EQ(same.values(), tent().values());
  auto mid = PiecewiseConcave({0, 1}, {0, 1}).restrict_domain({0.25, 0.75});
  EXPECT_EQ(mid.knots(), (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(mid.values(), (std::vector<double>{0.25, 0.75}));
  EXPECT_THROW(tent().restrict_domain({3, 4}), DomainError);
}

TEST(SuperlevelSet, Examples) {
  auto s = tent().superlevel_set(0.5);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->lo, 0.5);
  EXPECT_DOUBLE_EQ(s->hi, 1.5);
  EXPECT_FALSE(tent().superlevel_set(2.0));
  auto all = tent().superlevel_set(-10);
  EXPECT_EQ(all->lo, 0.0);
  EXPECT_EQ(all->hi, 2.0);
}

TEST(RestrictRange, Examples) {
  auto a = tent().restrict_range(0.5, kInf);
  EXPECT_EQ(a.domain().lo, 0.5);
  EXPECT_EQ(a.domain().hi, 1.5);
  auto b = tent().restrict_range(-1e9, 0.5);
  EXPECT_DOUBLE_EQ(b.max_value(), 0.5);
  EXPECT_EQ(b.domain().lo, 0.0);
  expect_concave(b);
  auto c = PiecewiseConcave({0, 1}, {0, 1}).restrict_range(0.25, 0.75);
  EXPECT_EQ(c.knots(), (std::vector<double>{0.25, 0.75, 1}));
  EXPECT_EQ(c.values(), (std::vector<double>{0.25, 0.75, 0.75}));
  EXPECT_THROW(tent().restrict_range(3, 4), DomainError);
}

TEST(SampleRandom, MembersAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto f = sample_random_concave(-1, 2, 3, 2 + static_cast<int>(seed % 20), seed);
    expect_concave(f);
    EXPECT_EQ(f.domain().lo, -1.0);
    EXPECT_EQ(f.domain().hi, 2.0);
    EXPECT_LE(f.max_value(), 3.0);
    EXPECT_GE(f.min_value(), -3.0);
  }
  auto a = sample_random_concave(0, 1, 1, 8, 42), b = sample_random_concave(0, 1, 1, 8, 42);
  EXPECT_EQ(a.knots(), b.knots());
  EXPECT_EQ(a.values(), b.values());
  EXPECT_THROW(sample_random_concave(1, 0, 1, 5, 0), DomainError);
  EXPECT_THROW(sample_random_concave(0, 1, 0, 5, 0), DomainError);
  EXPECT_THROW(sample_random_concave(0, 1, 1, 1, 0), DomainError);
}

TEST(Properties, SuperlevelSetsShrink) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto f = sample_random_concave(0, 1, 1, 10, seed);
    std::optional<Interval> prev = f.domain();
    for (double y = -1.0; y <= 1.0; y += 0.05) {
      auto s = f.superlevel_set(y);
      if (!s) {
        prev = s;
        continue;
      }
      ASSERT_TRUE(prev);
      EXPECT_GE(s->lo, prev->lo);
      EXPECT_LE(s->hi, prev->hi);
      prev = s;
    }
  }
}

TEST(Properties, RestrictionsAgreeWithMasking) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto f = sample_random_concave(0, 1, 1, 12, seed);
    Interval I{0.2 + 0.1 * (seed % 3), 0.9};
    auto g = f.restrict_domain(I);
    expect_concave(g);
    for (int i = 0; i <= 200; ++i) {
      double x = -0.1 + 1.2 * i / 200;
      auto gx = g(x);
      if (I.contains(x)) EXPECT_NEAR(gx.value(), f(x).value(), 1e-14);
      else EXPECT_TRUE(gx.is_neg_inf());
    }
    double y = f.min_value() + 0.3 * (f.max_value() - f.min_value());
    auto r = f.restrict_range(y, kInf);
    EXPECT_GE(r.min_value(), y - 1e-12);
    expect_concave(r);
    auto clipped = f.restrict_range(-10, y);
    expect_concave(clipped);
    EXPECT_LE(clipped.max_value(), y);
  }
}
