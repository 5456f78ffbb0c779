#include <gtest/gtest.h>

#include <cmath>

#include "scdens/entropy.hpp"

using namespace scdens;
using namespace scdens::entropy;

namespace {

const std::vector<double> kTailGrid{1e-3, 2.5e-4, 6.25e-5, 1.5625e-5};

void expect_full_cover(const BracketSet& set, const std::vector<PiecewiseConcave>& members, double abs_slack = 0) {
  auto rep = verify_bracketing(set, members);
  EXPECT_EQ(rep.uncovered, 0u) << describe(set.descriptor) << " eps " << set.epsilon << " worst " << rep.worst_member;
  EXPECT_EQ(rep.unindexed, 0u) << describe(set.descriptor) << " eps " << set.epsilon;
  EXPECT_DOUBLE_EQ(rep.covered_fraction, 1.0);
  EXPECT_LE(rep.max_observed_size, set.declared_size * (1 + 1e-9) + abs_slack);
  EXPECT_FALSE(rep.vacuous);
}

}  // namespace

TEST(BoundedConcaveCover, MuForROne) {
  EXPECT_DOUBLE_EQ(BoundedConcaveCover::mu(1), std::ldexp(1.0, -24));
  EXPECT_NEAR(BoundedConcaveCover::mu(1), 5.96e-8, 1e-10);
}

TEST(BoundedConcaveCover, EtaAndDeclaredSize) {
  BoundedConcaveCover c(0, 1, 1, 0.1, 2);
  EXPECT_NEAR(c.eta(), std::sqrt(3.0 / 17.0) * 0.1, 1e-15);
  EXPECT_LE(c.declared_size(), 0.1 * (1 + 1e-12));
}

TEST(BoundedConcaveCover, ThresholdErrorAboveEps3) {
  EXPECT_THROW(cover_bounded_concave(0, 1, 1, 0.3, 1), ThresholdError);
  EXPECT_NO_THROW(BoundedConcaveCover(0, 1, 1, 0.3, 1, {}, true));
}

TEST(BoundedConcaveCover, RingsAtTinyEps) {
  BoundedConcaveCover c(0, 1, 1, 1e-9, 1);
  int lipschitz = 0;
  for (const auto& p : c.pieces()) lipschitz += p.cover.has_value();
  EXPECT_GE(lipschitz, 3);
  EXPECT_LT(c.pieces()[1].span.hi, BoundedConcaveCover::mu(1) * (1 + 1e-12));
  auto set = cover_bounded_concave(0, 1, 1, 1e-9, 1);
  // Probe spacing near x = 1 is limited to about 1e-16, against widths of 2.
  expect_full_cover(set, sample_members(BoundedConcave{0, 1, 1}, 50, 9), 1e-15);
}

TEST(TransformedCover, LevelGrid) {
  TransformedCover c(TransformSpec::power(-1), 0, 1, 1, 1e-3, 2);
  ASSERT_GE(c.levels().size(), 3u);
  EXPECT_DOUBLE_EQ(c.levels()[2].y_lo, -8);
  EXPECT_DOUBLE_EQ(c.levels()[2].y_hi, -4);
  EXPECT_NEAR(c.ht(-1), 1, 1e-12);
}

TEST(TransformedCover, LogConcaveAndFiniteFloor) {
  ClassDescriptor lc = TransformedCompact{TransformSpec::log_concave(), 0, 1, 1};
  expect_full_cover(build_cover(lc, 1e-3, 1), sample_members(lc, 100, 3));
  TransformedCover single(TransformSpec::power(0.5), 0, 1, 1, 1e-2, 1);
  EXPECT_TRUE(single.single_level());
  ClassDescriptor pos = TransformedCompact{TransformSpec::power(0.5), 0, 1, 1};
  expect_full_cover(build_cover(pos, 1e-2, 1), sample_members(pos, 100, 4));
}

TEST(TransformedCover, UnsupportedTransforms) {
  EXPECT_THROW(TransformedCover(TransformSpec::power(2), 0, 1, 1, 1e-2, 1), UnsupportedTransform);
  EXPECT_THROW(TransformedCover(TransformSpec::power(-3), 0, 1, 1, 1e-2, 1), UnsupportedTransform);
}

TEST(TailCover, Parameters) {
  TailCover c(TransformSpec::power(-1), 2, 1e-2, 2);
  EXPECT_DOUBLE_EQ(c.beta(), 0.2);
  EXPECT_DOUBLE_EQ(c.partition_exponent(), (5.0 / 2.0) * 2 / 0.5);
  EXPECT_DOUBLE_EQ(c.pieces().front().span.hi, 5);
  EXPECT_THROW(TailCover(TransformSpec::power(-1), 2, 1e-2, 1), HypothesisError);
}

TEST(Bracketing, AllClassesFullyCovered) {
  struct Case {
    ClassDescriptor d;
    double r;
    std::vector<double> eps;
  };
  std::vector<Case> cases{
      {LipschitzConcave{0, 1, 1, 1}, kInf, {0.5, 0.1}},
      {BoundedConcave{0, 1, 1}, 1, {0.2, 0.025}},
      {BoundedConcave{-2, 3, 4}, 2, {0.5}},
      {TransformedCompact{TransformSpec::power(-1), 0, 1, 1}, 2, {1e-3, 1.5625e-5}},
      {TailClass{TransformSpec::power(-1), 2}, 2, {1e-3}},
  };
  for (const auto& c : cases) {
    auto members = sample_members(c.d, 200, 42);
    for (double e : c.eps) {
      auto set = build_cover(c.d, e, c.r);
      expect_full_cover(set, members);
    }
  }
}

TEST(Bracketing, LowerBelowUpper) {
  ClassDescriptor d = TailClass{TransformSpec::power(-1), 2};
  auto set = build_cover(d, 1e-3, 2);
  for (const auto& phi : sample_members(d, 20, 5)) {
    auto br = set.locate(phi);
    for (double x = -300; x <= 300; x += 0.37) EXPECT_LE(br.lower(x), br.upper(x) + 1e-12);
  }
}

TEST(Bracketing, EmptyMemberListIsVacuous) {
  auto rep = verify_bracketing(build_cover(BoundedConcave{0, 1, 1}, 0.1, 1), {});
  EXPECT_TRUE(rep.vacuous);
  EXPECT_DOUBLE_EQ(rep.covered_fraction, 1.0);
}

TEST(Bracketing, SizeShrinksWithEps) {
  ClassDescriptor d = BoundedConcave{0, 1, 1};
  auto members = sample_members(d, 100, 8);
  auto a = verify_bracketing(build_cover(d, 0.2, 1), members);
  auto b = verify_bracketing(build_cover(d, 0.1, 1), members);
  double ratio = a.max_observed_size / b.max_observed_size;
  EXPECT_GT(ratio, 1.0);
  EXPECT_LT(ratio, 4.0);
}

TEST(Bracketing, OutsideMemberNotCounted) {
  auto set = build_cover(LipschitzConcave{0, 1, 1, 1}, 0.1, kInf);
  PiecewiseConcave steep({0, 0.5, 1}, {-1, 1, -1});
  auto rep = verify_bracketing(set, {steep});
  EXPECT_LT(rep.covered_fraction, 1.0);
}

TEST(LipschitzCover, SqrtScalingInClassSize) {
  for (double e : {1e-2, 1e-4}) {
    auto a = build_cover(LipschitzConcave{0, 1, 1, 1}, e, kInf);
    auto b = build_cover(LipschitzConcave{0, 1, 2, 2}, e, kInf);
    EXPECT_NEAR(b.log_cardinality / a.log_cardinality, std::sqrt(2.0), 0.1);
  }
}

TEST(LipschitzCover, TrivialAtLargeEps) {
  LipschitzCover c(0, 1, 1, 1, 2);
  EXPECT_TRUE(c.trivial());
  EXPECT_EQ(c.log_cardinality(), 0);
}

TEST(EntropyCurve, Exponents) {
  auto lip = entropy_curve(LipschitzConcave{0, 1, 1, 1}, {0.5, 0.25, 0.125, 0.0625}, kInf);
  EXPECT_GE(lip.exponent, 0.4);
  EXPECT_LE(lip.exponent, 0.65);
  auto bc = entropy_curve(BoundedConcave{0, 1, 1}, {0.2, 0.1, 0.05, 0.025}, 1);
  EXPECT_GE(bc.exponent, 0.4);
  EXPECT_LE(bc.exponent, 0.65);
  auto tr = entropy_curve(TransformedCompact{TransformSpec::power(-1), 0, 1, 1}, kTailGrid, 2);
  EXPECT_GE(tr.exponent, 0.4);
  EXPECT_LE(tr.exponent, 0.65);
  auto tail = entropy_curve(TailClass{TransformSpec::power(-1), 2}, kTailGrid, 2);
  EXPECT_GE(tail.exponent, 0.4);
  EXPECT_LE(tail.exponent, 0.7);
}

TEST(EntropyCurve, MonotoneInEps) {
  for (ClassDescriptor d : {ClassDescriptor{BoundedConcave{0, 1, 1}},
                            ClassDescriptor{TailClass{TransformSpec::power(-1), 2}}}) {
    double prev = 0;
    for (double e = 0.2; e > 1e-5; e /= 3) {
      double n = build_cover(d, e, 2).log_cardinality;
      EXPECT_GE(n, prev) << describe(d) << " eps " << e;
      prev = n;
    }
  }
}

TEST(EntropyCurve, ConstantStableAcrossGrid) {
  for (ClassDescriptor d : {ClassDescriptor{TransformedCompact{TransformSpec::power(-1), 0, 1, 1}},
                            ClassDescriptor{TailClass{TransformSpec::power(-1), 2}}}) {
    double lo = kInf, hi = 0;
    for (double e : kTailGrid) {
      double c = build_cover(d, e, 2).constant();
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    EXPECT_LE(hi / lo, 1.2) << describe(d);
  }
}

TEST(EntropyCurve, TailConstantGrowsAsAlphaDrops) {
  std::vector<double> grid{0.2, 0.1, 0.05, 0.025};
  double prev = 0;
  for (double alpha : {2.0, 1.0, 0.6}) {
    auto c = entropy_curve(TailClass{TransformSpec::power(-1 / alpha), 2}, grid, 2);
    EXPECT_GT(c.K, prev) << "alpha " << alpha;
    prev = c.K;
  }
}

TEST(EntropyCurve, DegenerateGridIsInsufficient) {
  EXPECT_THROW(entropy_curve(LipschitzConcave{0, 1, 1, 1}, {4, 8, 16, 32}, kInf), InsufficientData);
  auto c = entropy_curve(BoundedConcave{0, 1, 1}, {0.4, 0.2, 0.1, 0.05}, 1);
  EXPECT_EQ(c.warnings.size(), 1u);
}
