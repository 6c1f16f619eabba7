#include <gtest/gtest.h>

#include <cmath>

#include "mkv/model_zoo.hpp"
#include "mkv/regularity.hpp"

using mkv::Coefficient;

TEST(Regularity, LinearDriftHasUnitConstant) {
  const auto m = mkv::zoo::linear_restoring();
  const auto r = mkv::estimate_lipschitz(m, Coefficient::drift, {}, 2000);
  EXPECT_LE(r.empirical_estimate, 1.0 + 1e-9);
  EXPECT_GT(r.empirical_estimate, 0.9);
  EXPECT_EQ(r.sample_count, 2000u);
}

TEST(Regularity, MeanDriftIsBoundedByOne) {
  // b = m(mu) - x + u: |b(a) - b(b)| <= |x_a - x_b| + W_1, so the quotient is at most 1.
  const auto r = mkv::estimate_lipschitz(mkv::zoo::meanfield_ou(), Coefficient::drift, {}, 2000);
  EXPECT_LE(r.empirical_estimate, 1.0 + 1e-9);
  EXPECT_GT(r.empirical_estimate, 0.5);
}

TEST(Regularity, ConstantCoefficientGivesZero) {
  const auto r = mkv::estimate_lipschitz(mkv::zoo::uncontrolled_gaussian(), Coefficient::diffusion, {}, 500);
  EXPECT_EQ(r.empirical_estimate, 0.0);
  EXPECT_EQ(r.truncated_estimate, 0.0);
}

TEST(Regularity, MonotoneInSampleCount) {
  const auto m = mkv::zoo::meanfield_ou();
  double prev = 0.0;
  for (std::size_t n : {10u, 50u, 200u, 1000u}) {
    const double e = mkv::estimate_lipschitz(m, Coefficient::terminal_cost, {}, n).empirical_estimate;
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(Regularity, NeverExceedsDeclaredConstants) {
  for (const auto& m : mkv::builtin_models()) {
    if (m.name == "SGN_COUNTEREXAMPLE" || m.name == "BANG_BANG_DET") continue;
    if (!m.constants.K1) continue;
    for (Coefficient c : {Coefficient::drift, Coefficient::diffusion}) {
      const auto r = mkv::estimate_lipschitz(m, c, {}, 1000);
      EXPECT_TRUE(std::isfinite(r.empirical_estimate)) << m.name;
      EXPECT_LE(r.empirical_estimate, *m.constants.K1 + 1e-9) << m.name << " " << mkv::to_string(c);
    }
  }
}

TEST(Regularity, TruncatedDistanceGivesLargerQuotients) {
  const auto r = mkv::estimate_lipschitz(mkv::zoo::meanfield_ou(), Coefficient::drift, {}, 500);
  EXPECT_GE(r.truncated_estimate + 1e-12, r.empirical_estimate);
}

TEST(Regularity, SignDriftIsUnbounded) {
  // Pairs straddling 0 give quotients 2 / |x_a - x_b|.
  const auto r = mkv::estimate_lipschitz(mkv::zoo::sgn_counterexample(), Coefficient::drift, {}, 5000);
  EXPECT_GT(r.empirical_estimate, 10.0);
}

TEST(Regularity, Ellipticity) {
  const auto identity = mkv::check_ellipticity(mkv::zoo::uncontrolled_gaussian(), {}, 200);
  EXPECT_NEAR(identity.empirical_estimate, 1.0, 1e-12);
  EXPECT_FALSE(identity.violated);

  auto doubled = mkv::zoo::uncontrolled_gaussian();
  doubled.diffusion = mkv::zoo::scaled_identity(1, 2.0);
  EXPECT_NEAR(mkv::check_ellipticity(doubled, {}, 200).empirical_estimate, 4.0, 1e-12);

  const auto degenerate = mkv::check_ellipticity(mkv::zoo::bang_bang_det(), {}, 50);
  EXPECT_TRUE(degenerate.violated);
  EXPECT_TRUE(std::isinf(degenerate.empirical_estimate));
}

TEST(Regularity, Errors) {
  EXPECT_THROW(mkv::estimate_lipschitz(mkv::zoo::meanfield_ou(), Coefficient::drift, {}, 0), std::invalid_argument);
  mkv::SamplerConfig bad;
  bad.state_hi = bad.state_lo;
  EXPECT_THROW(mkv::estimate_lipschitz(mkv::zoo::meanfield_ou(), Coefficient::drift, bad, 5), std::invalid_argument);
  EXPECT_THROW(mkv::coefficient_from_string("h"), std::invalid_argument);
  EXPECT_EQ(mkv::coefficient_from_string("sigma"), Coefficient::diffusion);
}
