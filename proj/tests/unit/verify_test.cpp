#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numbers>

#include "mkv/model_zoo.hpp"
#include "mkv/verify.hpp"

using mkv::CheckReport;
using mkv::ControlMeasure;
using mkv::FeedbackPolicy;
using mkv::InitialLaw;
using mkv::TimeGrid;

namespace {

FeedbackPolicy constant_at(const mkv::ModelSpec& m, double u) {
  return FeedbackPolicy::constant(ControlMeasure::dirac(m.control_box, std::vector<double>{u}), 0.0, m.horizon);
}

mkv::ModelSpec frozen() {
  auto m = mkv::zoo::uncontrolled_gaussian();
  m.name = "FROZEN";
  m.diffusion = mkv::zoo::scaled_identity(1, 0.0);
  m.constants.K1 = 1.0;
  m.constants.b_sup = 0.0;
  m.constants.sigma_sup = 0.0;
  return m;
}

double max_lhs(const CheckReport& r) {
  double v = 0.0;
  for (const auto& q : r.inequalities) v = std::max(v, q.lhs);
  return v;
}

}  // namespace

TEST(Report, VerdictIsAllInequalities) {
  CheckReport r;
  r.add({"a", 1.0, 1.0, 0.0});
  r.add({"b", 1.1, 1.0, 0.2});
  EXPECT_TRUE(r.finish().passed);
  r.add({"c", 2.0, 1.0, 0.5});
  EXPECT_FALSE(r.finish().passed);
  EXPECT_EQ(r.violations, 1u);
  const auto j = mkv::to_json(r);
  EXPECT_EQ(j["verdict"], "fail");
  EXPECT_EQ(j["inequalities"].size(), 3u);
}

TEST(Stability, IdenticalLawsGiveZeroDifferences) {
  const auto m = mkv::zoo::linear_restoring();
  const auto init = InitialLaw::gaussian({0.0}, {1.0});
  const auto r = mkv::check_stability(m, constant_at(m, 0.0), 0.0, init, init, {0.0, 1.0, 20}, 200, 3);
  EXPECT_TRUE(r.passed);
  for (const auto& q : r.inequalities) EXPECT_EQ(q.lhs, 0.0);
}

TEST(Stability, LinearRestoringDifferenceIsDeterministic) {
  const auto m = mkv::zoo::linear_restoring();
  const auto r = mkv::check_stability(m, constant_at(m, 0.0), 0.0, InitialLaw::dirac({0.0}), InitialLaw::dirac({1.0}),
                                      {0.0, 1.0, 50}, 1000, 4);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.inequalities.size(), 3u * 51u);
  EXPECT_LT(r.extras["max_middle_std_error"].get<double>(), 1e-12);
  EXPECT_EQ(r.extras["mean_initial_gap"].get<double>(), 1.0);
  // The running sup of e^{-(r-s)} is its value at s.
  EXPECT_NEAR(r.inequalities.back().lhs, 1.0, 1e-12);
}

TEST(Stability, FirstInequalityHoldsWithoutSlack) {
  const auto m = mkv::zoo::linear_restoring();
  const auto r = mkv::check_stability(m, constant_at(m, 0.0), 0.0, InitialLaw::gaussian({0.0}, {1.0}),
                                      InitialLaw::gaussian({0.5}, {2.0}), {0.0, 1.0, 20}, 500, 5);
  for (std::size_t k = 0; k < r.inequalities.size(); k += 3) EXPECT_LE(r.inequalities[k].lhs, r.inequalities[k].rhs + 1e-12);
}

TEST(Stability, RequiresK1AndLawFreeSigma) {
  auto m = mkv::zoo::linear_restoring();
  m.constants.K1.reset();
  EXPECT_THROW(mkv::check_stability(m, constant_at(m, 0.0), 0.0, InitialLaw::dirac({0.0}), InitialLaw::dirac({1.0}),
                                    {0.0, 1.0, 5}, 10, 1),
               mkv::ConfigError);
  auto n = mkv::zoo::linear_restoring();
  n.diffusion_depends_on_law = true;
  EXPECT_THROW(mkv::check_stability(n, constant_at(n, 0.0), 0.0, InitialLaw::dirac({0.0}), InitialLaw::dirac({1.0}),
                                    {0.0, 1.0, 5}, 10, 1),
               mkv::ConfigError);
}

TEST(Moment, Examples) {
  const auto fm = frozen();
  auto f = mkv::check_moment(fm, constant_at(fm, 0.0), 0.0, InitialLaw::gaussian({0.0}, {1.0}), {0.0, 1.0, 10}, 500, 1);
  EXPECT_TRUE(f.passed);
  EXPECT_EQ(f.extras["mean_sup"].get<double>(), f.extras["mean_initial_norm"].get<double>());

  const auto g = mkv::zoo::uncontrolled_gaussian();
  const auto a = mkv::check_moment(g, constant_at(g, 0.0), 0.0, InitialLaw::dirac({0.0}), {0.0, 1.0, 100}, 2000, 2);
  const auto b = mkv::check_moment(g, constant_at(g, 0.0), 0.0, InitialLaw::dirac({0.0}), {0.0, 1.0, 100}, 4000, 2);
  EXPECT_TRUE(a.passed);
  EXPECT_EQ(a.passed, b.passed);
  // By the reflection principle E|W_1| <= E sup|W| <= 2 E|W_1|.
  const double mean_sup = a.extras["mean_sup"].get<double>();
  EXPECT_GT(mean_sup, std::sqrt(2.0 / std::numbers::pi));
  EXPECT_LT(mean_sup, 2.0 * std::sqrt(2.0 / std::numbers::pi));

  auto no_k2 = g;
  no_k2.constants.K2.reset();
  EXPECT_THROW(mkv::check_moment(no_k2, constant_at(g, 0.0), 0.0, InitialLaw::dirac({0.0}), {0.0, 1.0, 10}, 10, 1),
               mkv::ConfigError);
}

TEST(Tightness, Examples) {
  const auto g = mkv::zoo::uncontrolled_gaussian();
  const auto b = mkv::simulate_ensemble(g, constant_at(g, 0.0), {0.0, 1.0, 20}, InitialLaw::dirac({0.0}), 2000, 3);
  const auto r = mkv::check_tightness_modulus(b, g);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.inequalities_tested, 21u * 20u / 2u);
  EXPECT_EQ(r.inequalities.size(), 10u);

  const auto fm = frozen();
  const auto fb = mkv::simulate_ensemble(fm, constant_at(fm, 0.0), {0.0, 1.0, 10}, InitialLaw::gaussian({0.0}, {1.0}), 20, 1);
  const auto fr = mkv::check_tightness_modulus(fb, fm);
  EXPECT_TRUE(fr.passed);
  EXPECT_EQ(max_lhs(fr), 0.0);

  const auto bb = mkv::zoo::bang_bang_det();
  auto bbm = bb;
  bbm.constants.b_sup = 1.0;
  bbm.constants.sigma_sup = 0.0;
  const auto db = mkv::simulate_ensemble(bbm, constant_at(bbm, -1.0), {0.0, 0.5, 10}, InitialLaw::dirac({1.0}), 4, 1);
  const auto dr = mkv::check_tightness_modulus(db, bbm, 100);
  EXPECT_TRUE(dr.passed);
  for (const auto& q : dr.inequalities) EXPECT_LE(q.lhs, q.rhs);

  auto missing = g;
  missing.constants.b_sup.reset();
  EXPECT_THROW(mkv::check_tightness_modulus(b, missing), mkv::ConfigError);
}

TEST(Continuity, GaussianClosedFormRatios) {
  const auto g = mkv::zoo::uncontrolled_gaussian();
  const auto fam = mkv::PolicyFamily::constant_mixture({{0.0}}, g.control_box, 0.0, 1.0);
  std::vector<std::pair<double, InitialLaw>> pert{{0.0, InitialLaw::dirac({0.5})}, {0.25, InitialLaw::dirac({0.0})},
                                                  {0.0, InitialLaw::dirac({0.0})}};
  mkv::OptimizerConfig cfg;
  cfg.seed = 4;
  const auto r = mkv::check_value_continuity(g, fam, {0.0, InitialLaw::dirac({0.0})}, pert, {0.0, 1.0, 40}, 4000, cfg, 2.0);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.inequalities_tested, 2u);  // the third perturbation is the base itself
  EXPECT_LE(r.extras["max_ratio"].get<double>(), 2.0);

  // Reordering perturbations leaves the ratios alone.
  std::vector<std::pair<double, InitialLaw>> swapped{pert[1], pert[0]};
  const auto s = mkv::check_value_continuity(g, fam, {0.0, InitialLaw::dirac({0.0})}, swapped, {0.0, 1.0, 40}, 4000, cfg, 2.0);
  EXPECT_EQ(s.inequalities[0].lhs, r.inequalities[1].lhs);
  EXPECT_EQ(s.inequalities[1].lhs, r.inequalities[0].lhs);

  EXPECT_THROW(mkv::check_value_continuity(g, fam, {0.0, InitialLaw::dirac({0.0})}, {pert[2]}, {0.0, 1.0, 40}, 100, cfg),
               std::invalid_argument);
  auto law_sigma = g;
  law_sigma.diffusion_depends_on_law = true;
  EXPECT_THROW(
      mkv::check_value_continuity(law_sigma, fam, {0.0, InitialLaw::dirac({0.0})}, pert, {0.0, 1.0, 40}, 100, cfg),
      mkv::ConfigError);
}

TEST(Continuity, SamplerDistancesInOneDimension) {
  EXPECT_NEAR(mkv::detail::initial_law_distance(InitialLaw::gaussian({0.0}, {1.0}), InitialLaw::gaussian({0.3}, {1.0})),
              0.3, 1e-9);
  EXPECT_NEAR(mkv::detail::initial_law_distance(InitialLaw::uniform({0.0}, {1.0}), InitialLaw::dirac({0.0})), 0.5, 1e-9);
  EXPECT_THROW(mkv::detail::initial_law_distance(InitialLaw::gaussian({0.0, 0.0}, {1.0, 1.0}),
                                                 InitialLaw::dirac({0.0, 0.0})),
               mkv::ConfigError);
}

TEST(LawInvariance, Examples) {
  const auto bb = mkv::zoo::bang_bang_det();
  const auto det = mkv::check_law_invariance(bb, constant_at(bb, -1.0), 0.0, mkv::EmpiricalMeasure(1, {1.0}),
                                             {0.0, 0.5, 20}, 50, {1, 2});
  EXPECT_TRUE(det.passed);
  EXPECT_EQ(det.extras["w1"].get<double>(), 0.0);

  const auto g = mkv::zoo::uncontrolled_gaussian();
  const mkv::EmpiricalMeasure mu(1, {-1.0, 0.0, 2.0});
  const auto a = mkv::check_law_invariance(g, constant_at(g, 0.0), 0.0, mu, {0.0, 1.0, 50}, 5000, {3, 4});
  const auto b = mkv::check_law_invariance(g, constant_at(g, 0.0), 0.0, mu, {0.0, 1.0, 50}, 5000, {4, 3});
  EXPECT_TRUE(a.passed);
  EXPECT_EQ(a.passed, b.passed);
  EXPECT_EQ(a.extras["calibration"], b.extras["calibration"]);
  EXPECT_THROW(mkv::check_law_invariance(g, constant_at(g, 0.0), 0.0, mu, {0.0, 1.0, 50}, 10, {3, 3}),
               std::invalid_argument);
}

TEST(Chaos, FrozenDiracIsZero) {
  const auto fm = frozen();
  const auto r = mkv::check_chaos_convergence(fm, constant_at(fm, 0.0), 0.0, InitialLaw::dirac({1.0}), {0.0, 1.0, 5},
                                              {10, 20, 40}, 1);
  EXPECT_TRUE(r.passed);
  for (double v : r.extras["medians"]) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(mkv::check_chaos_convergence(fm, constant_at(fm, 0.0), 0.0, InitialLaw::dirac({1.0}), {0.0, 1.0, 5},
                                            {10, 20}, 1),
               std::invalid_argument);
  EXPECT_THROW(mkv::check_chaos_convergence(fm, constant_at(fm, 0.0), 0.0, InitialLaw::dirac({1.0}), {0.0, 1.0, 5},
                                            {10, 40, 20}, 1),
               std::invalid_argument);
}

TEST(Chaos, LawFreeCoefficientsTrackIidSamples) {
  // With mu-independent coefficients the terminal law is an i.i.d. sample of N(0, 1).
  const auto g = mkv::zoo::uncontrolled_gaussian();
  const auto r = mkv::check_chaos_convergence(g, constant_at(g, 0.0), 0.0, InitialLaw::dirac({0.0}), {0.0, 1.0, 20},
                                              {250, 1000, 4000}, 7);
  EXPECT_TRUE(r.passed);
  const auto med = r.extras["medians"].get<std::vector<double>>();
  // Reference decay from i.i.d. draws: W1 between samples of sizes n and 4n scales like n^{-1/2}.
  EXPECT_LT(med[1], med[0]);
  EXPECT_GT(med[1], med[0] / 8.0);
}

TEST(Flow, Examples) {
  const auto bb = mkv::zoo::bang_bang_det();
  const auto exact = mkv::check_flow_property(bb, constant_at(bb, -1.0), 0.0, 0.25, InitialLaw::dirac({1.0}),
                                              {0.0, 0.5, 100}, 20, 1);
  EXPECT_TRUE(exact.passed);
  EXPECT_EQ(exact.extras["w1"].get<double>(), 0.0);

  const auto g = mkv::zoo::uncontrolled_gaussian();
  const auto same = mkv::check_flow_property(g, constant_at(g, 0.0), 0.0, 0.0, InitialLaw::gaussian({0.0}, {1.0}),
                                             {0.0, 1.0, 50}, 3000, 2);
  EXPECT_TRUE(same.passed);
  EXPECT_THROW(mkv::check_flow_property(g, constant_at(g, 0.0), 0.0, 0.333, InitialLaw::dirac({0.0}), {0.0, 1.0, 50},
                                        10, 1),
               std::invalid_argument);
}

TEST(CounterexampleCheck, Verdicts) {
  EXPECT_TRUE(mkv::check_counterexample({0.1, 0.01, 0.001}, 0.0, 1.0).passed);
  EXPECT_TRUE(mkv::check_counterexample({0.1, 0.01, 0.001}, 1.0, 2.0).passed);
  // A horizon too short to reach the neighbourhood of 0 fails.
  EXPECT_FALSE(mkv::check_counterexample({0.01}, 1.0, 0.5).passed);
}

TEST(Dppcheck, BangBangLowerSide) {
  const auto m = mkv::zoo::bang_bang_det();
  mkv::DppConfig cfg;
  cfg.outer.generations = 8;
  cfg.outer.population = 8;
  cfg.outer.seed = 3;
  cfg.inner.generations = 5;
  cfg.inner.population = 8;
  const mkv::PolicyFamily fam{{0.0, 0.5}, {}, {{-1.0}, {0.0}, {1.0}}, m.control_box};
  const auto r = mkv::check_dpp(m, fam, 0.0, 0.25, InitialLaw::dirac({1.0}), {0.0, 0.5, 40}, 4, cfg);
  ASSERT_EQ(r.inequalities.size(), 2u);
  EXPECT_TRUE(r.inequalities[1].holds()) << mkv::to_json(r).dump();
  // One cell on [0, 0.5] splits into two on the right, which reach 0.25.
  EXPECT_NEAR(r.extras["rhs"].get<double>(), 0.25, 1e-3);
  EXPECT_EQ(r.passed, r.inequalities[0].holds());
}
