#include <gtest/gtest.h>

#include <cmath>

#include "mkv/model_zoo.hpp"
#include "mkv/objective.hpp"

using mkv::ControlMeasure;
using mkv::FeedbackPolicy;
using mkv::InitialLaw;
using mkv::OptimizerConfig;
using mkv::PolicyFamily;
using mkv::TimeGrid;

namespace {

FeedbackPolicy constant_at(const mkv::ModelSpec& m, double u) {
  return FeedbackPolicy::constant(ControlMeasure::dirac(m.control_box, std::vector<double>{u}), 0.0, m.horizon);
}

PolicyFamily three_atoms(const mkv::ModelSpec& m, std::vector<double> knots) {
  return PolicyFamily{std::move(knots), {}, {{-1.0}, {0.0}, {1.0}}, m.control_box};
}

OptimizerConfig small_optimizer(std::uint64_t seed) {
  OptimizerConfig c;
  c.generations = 12;
  c.population = 12;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Cost, UnitRunningCostIntegratesExactly) {
  auto m = mkv::zoo::uncontrolled_gaussian();
  m.running_cost = [](double, std::span<const double>, const mkv::EmpiricalMeasure&, std::span<const double>) {
    return 1.0;
  };
  m.terminal_cost = [](std::span<const double>, const mkv::EmpiricalMeasure&) { return 0.0; };
  const auto c = mkv::estimate_cost(m, constant_at(m, 0.0), 0.25, InitialLaw::gaussian({0.0}, {1.0}),
                                    {0.25, 1.0, 30}, 100, 5);
  EXPECT_NEAR(c.mean, 0.75, 1e-12);
  EXPECT_EQ(c.std_error, 0.0);
  EXPECT_EQ(c.particles, 100u);
  EXPECT_EQ(c.steps, 30u);
  EXPECT_EQ(c.seed, 5u);
}

TEST(Cost, GaussianSecondMoment) {
  const auto m = mkv::zoo::uncontrolled_gaussian();
  const auto c = mkv::estimate_cost(m, constant_at(m, 0.0), 0.0, InitialLaw::dirac({0.0}), {0.0, 1.0, 200}, 10000, 7);
  EXPECT_LE(std::abs(c.mean - 1.0), 3.0 * c.std_error);
  EXPECT_GT(c.std_error, 0.0);
}

TEST(Cost, BangBangQuarter) {
  const auto m = mkv::zoo::bang_bang_det();
  const auto c = mkv::estimate_cost(m, constant_at(m, -1.0), 0.0, InitialLaw::dirac({1.0}), {0.0, 0.5, 100}, 16, 1);
  EXPECT_NEAR(c.mean, 0.25, 1e-12);
  EXPECT_EQ(c.std_error, 0.0);
}

TEST(Cost, ReproducibleAndScaleEquivariant) {
  const auto m = mkv::zoo::meanfield_ou();
  const auto pol = FeedbackPolicy::constant(ControlMeasure(m.control_box, {-0.5, 0.5}, {1.0, 2.0}), 0.0, 1.0);
  const auto init = InitialLaw::gaussian({1.0}, {0.5});
  const TimeGrid g{0.0, 1.0, 50};
  const auto a = mkv::estimate_cost(m, pol, 0.0, init, g, 500, 3);
  const auto b = mkv::estimate_cost(m, pol, 0.0, init, g, 500, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  // Multiplying by 2 is exact in binary floating point.
  const auto s = mkv::estimate_cost(mkv::scale_costs(m, 2.0), pol, 0.0, init, g, 500, 3);
  EXPECT_EQ(s.mean, 2.0 * a.mean);
}

TEST(Cost, DoublingParticlesMovesTheMeanWithinNoise) {
  const auto m = mkv::zoo::meanfield_ou();
  const auto pol = constant_at(m, 0.0);
  const auto init = InitialLaw::gaussian({0.5}, {1.0});
  const TimeGrid g{0.0, 1.0, 20};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = mkv::estimate_cost(m, pol, 0.0, init, g, 400, seed);
    const auto b = mkv::estimate_cost(m, pol, 0.0, init, g, 800, seed + 100);
    EXPECT_LE(std::abs(a.mean - b.mean), 5.0 * std::hypot(a.std_error, b.std_error)) << seed;
  }
}

TEST(Cost, Errors) {
  const auto m = mkv::zoo::uncontrolled_gaussian();
  EXPECT_THROW(mkv::estimate_cost(m, constant_at(m, 0.0), 0.1, InitialLaw::dirac({0.0}), {0.0, 1.0, 10}, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(mkv::estimate_cost(m, constant_at(m, 0.0), 0.0, InitialLaw::dirac({0.0}), {0.0, 1.0, 10}, 1, 1),
               std::invalid_argument);
  EXPECT_THROW(mkv::estimate_cost(m, constant_at(m, 0.0), 0.0, InitialLaw::dirac({0.0, 0.0}), {0.0, 1.0, 10}, 10, 1),
               std::invalid_argument);
}

TEST(Family, SoftmaxRows) {
  const auto m = mkv::zoo::bang_bang_det();
  const auto fam = three_atoms(m, {0.0, 0.25, 0.5});
  EXPECT_EQ(fam.rows(), 2u);
  EXPECT_EQ(fam.parameter_count(), 6u);
  const auto p = fam.instantiate(std::vector<double>{0.0, 0.0, 0.0, 100.0, 0.0, -100.0});
  const auto& first = p.measure(0.1, std::vector<double>{0.0});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(first.weight(j), 1.0 / 3.0, 1e-15);
  // Logits are clamped to +-10 before the softmax.
  const auto& second = p.measure(0.3, std::vector<double>{0.0});
  EXPECT_NEAR(second.weight(0), 1.0 / (1.0 + std::exp(-10.0) + std::exp(-20.0)), 1e-15);
  EXPECT_THROW(fam.instantiate(std::vector<double>{0.0}), std::invalid_argument);
  const auto r = fam.restricted(0.1, 0.5);
  EXPECT_EQ(r.time_knots, (std::vector<double>{0.1, 0.25, 0.5}));
}

TEST(Family, RestrictedParametersReproduceThePolicy) {
  const auto m = mkv::zoo::bang_bang_det();
  PolicyFamily fam{{0.0, 0.2, 0.4, 0.5}, {mkv::StateBox{{0.5}, {2.0}}}, {{-1.0}, {0.0}, {1.0}}, m.control_box};
  std::vector<double> theta(fam.parameter_count());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::sin(1.7 * static_cast<double>(i));
  const auto whole = fam.instantiate(theta);
  for (auto [t0, t1] : {std::pair{0.1, 0.45}, std::pair{0.0, 0.2}, std::pair{0.4, 0.5}, std::pair{0.25, 0.3}}) {
    const auto sub = fam.restricted(t0, t1);
    const auto theta_sub = fam.restrict_parameters(theta, t0, t1);
    ASSERT_EQ(theta_sub.size(), sub.parameter_count());
    const auto part = sub.instantiate(theta_sub);
    for (double t = t0; t < t1; t += 0.01)
      for (double x : {0.0, 1.0, 3.0})
        for (std::size_t j = 0; j < 3; ++j)
          EXPECT_EQ(part.measure(t, std::vector<double>{x}).weight(j), whole.measure(t, std::vector<double>{x}).weight(j))
              << t << " " << x;
  }
  EXPECT_THROW(fam.restrict_parameters(std::vector<double>{1.0}, 0.0, 0.5), std::invalid_argument);
}

TEST(Optimize, SingleMemberFamily) {
  const auto m = mkv::zoo::bang_bang_det();
  const auto fam = PolicyFamily::constant_mixture({{-1.0}}, m.control_box, 0.0, 0.5);
  const auto v = mkv::optimize_policy(m, fam, 0.0, InitialLaw::dirac({1.0}), {0.0, 0.5, 100}, 8, small_optimizer(1));
  EXPECT_EQ(v.optimizer_gap, 0.0);
  EXPECT_EQ(v.evaluations, 1u);
  EXPECT_NEAR(v.cost.mean, 0.25, 1e-12);
}

TEST(Optimize, FindsTheBangBangControl) {
  const auto m = mkv::zoo::bang_bang_det();
  const auto v = mkv::optimize_policy(m, three_atoms(m, {0.0, 0.5}), 0.0, InitialLaw::dirac({1.0}), {0.0, 0.5, 100}, 8,
                                      small_optimizer(2));
  EXPECT_NEAR(v.cost.mean, 0.25, 0.01);
  EXPECT_LE(v.best_policy.measure(0.0, std::vector<double>{1.0}).mean()[0], -0.9);
  EXPECT_GE(v.optimizer_gap, 0.0);
  EXPECT_EQ(v.evaluations, 12u * 12u + 1u);
}

TEST(Optimize, ScalingCostsScalesTheValue) {
  const auto m = mkv::zoo::meanfield_ou();
  const auto fam = three_atoms(m, {0.0, 1.0});
  const auto init = InitialLaw::gaussian({1.0}, {0.3});
  const TimeGrid g{0.0, 1.0, 10};
  const auto a = mkv::optimize_policy(m, fam, 0.0, init, g, 100, small_optimizer(3));
  const auto b = mkv::optimize_policy(mkv::scale_costs(m, 2.0), fam, 0.0, init, g, 100, small_optimizer(3));
  EXPECT_EQ(a.best_parameters, b.best_parameters);
  EXPECT_EQ(b.cost.mean, 2.0 * a.cost.mean);
  EXPECT_EQ(b.optimizer_gap, 2.0 * a.optimizer_gap);
}

TEST(Optimize, DeterministicAcrossThreads) {
  const auto m = mkv::zoo::meanfield_ou();
  auto one = small_optimizer(4), many = small_optimizer(4);
  many.threads = 8;
  const auto init = InitialLaw::dirac({1.0});
  const auto a = mkv::optimize_policy(m, three_atoms(m, {0.0, 1.0}), 0.0, init, {0.0, 1.0, 10}, 50, one);
  const auto b = mkv::optimize_policy(m, three_atoms(m, {0.0, 1.0}), 0.0, init, {0.0, 1.0, 10}, 50, many);
  EXPECT_EQ(a.best_parameters, b.best_parameters);
  EXPECT_EQ(a.cost.mean, b.cost.mean);
}

TEST(Optimize, EnlargingTheFamilyDoesNotRaiseTheValue) {
  const auto m = mkv::zoo::meanfield_ou();
  const auto init = InitialLaw::dirac({1.0});
  const TimeGrid g{0.0, 1.0, 20};
  const auto small = mkv::estimate_value(m, three_atoms(m, {0.0, 1.0}), 0.0, init, g, 200, small_optimizer(5));
  const auto large = mkv::estimate_value(m, three_atoms(m, {0.0, 0.5, 1.0}), 0.0, init, g, 200, small_optimizer(5));
  const double tol = 3.0 * std::hypot(small.cost.std_error, large.cost.std_error) + small.optimizer_gap +
                     large.optimizer_gap;
  EXPECT_LE(large.cost.mean, small.cost.mean + tol);
  EXPECT_EQ(small.cost.particles, 800u);
}

TEST(Optimize, AllCandidatesNonFiniteAborts) {
  auto m = mkv::zoo::bang_bang_det();
  m.terminal_cost = [](std::span<const double>, const mkv::EmpiricalMeasure&) { return NAN; };
  EXPECT_THROW(mkv::optimize_policy(m, three_atoms(m, {0.0, 0.5}), 0.0, InitialLaw::dirac({1.0}), {0.0, 0.5, 10}, 4,
                                    small_optimizer(1)),
               mkv::NumericalError);
}

TEST(Optimize, ConfigValidation) {
  OptimizerConfig c;
  c.population = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.elite_frac = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  EXPECT_EQ(c.elites(), 7u);
}

TEST(Dpp, UncontrolledModel) {
  const auto m = mkv::zoo::uncontrolled_gaussian();
  const auto fam = PolicyFamily::constant_mixture({{0.0}}, m.control_box, 0.0, 1.0);
  mkv::DppConfig cfg;
  cfg.outer.seed = 9;
  const auto r = mkv::dpp_residual(m, fam, 0.0, 0.5, InitialLaw::dirac({0.0}), {0.0, 1.0, 40}, 2000, cfg);
  EXPECT_TRUE(r.within_tolerance()) << r.residual << " vs " << r.tolerance;
  EXPECT_EQ(r.lhs.optimizer_gap, 0.0);
  EXPECT_EQ(r.simulations, 3u);
}

// The right side restarts from draws with replacement; its standard error
// should match the spread of rhs over independent seeds.
TEST(Dpp, RightSideStandardErrorIsCalibrated) {
  const auto m = mkv::zoo::uncontrolled_gaussian();
  const auto fam = PolicyFamily::constant_mixture({{0.0}}, m.control_box, 0.0, 1.0);
  const int runs = 80;
  double sum = 0.0, sq = 0.0, se = 0.0;
  for (int k = 0; k < runs; ++k) {
    mkv::DppConfig cfg;
    cfg.outer.seed = 300 + static_cast<std::uint64_t>(k);
    const auto r = mkv::dpp_residual(m, fam, 0.0, 0.5, InitialLaw::dirac({0.0}), {0.0, 1.0, 20}, 100, cfg);
    sum += r.rhs.mean;
    sq += r.rhs.mean * r.rhs.mean;
    se += r.rhs.std_error;
  }
  const double sd = std::sqrt((sq - sum * sum / runs) / (runs - 1));
  // sd from 80 draws is good to about 8%.
  EXPECT_NEAR(se / runs / sd, 1.0, 0.25) << se / runs << " vs " << sd;
}

TEST(Dpp, BangBang) {
  const auto m = mkv::zoo::bang_bang_det();
  mkv::DppConfig cfg;
  cfg.outer = small_optimizer(6);
  cfg.inner = small_optimizer(0);
  cfg.inner.generations = 6;
  cfg.inner.population = 8;
  const auto r = mkv::dpp_residual(m, three_atoms(m, {0.0, 0.5}), 0.0, 0.25, InitialLaw::dirac({1.0}),
                                   {0.0, 0.5, 40}, 4, cfg);
  // x_T >= 0.5 under |u| <= 1, so no estimate can go below 0.25.
  EXPECT_GE(r.lhs.cost.mean, 0.25 - 1e-12);
  EXPECT_GE(r.rhs.mean, 0.25 - 1e-12);
  EXPECT_NEAR(r.lhs.cost.mean, 0.25, 0.01);
  EXPECT_NEAR(r.rhs.mean, 0.25, 0.01);
  // The right side starts from the split lhs winner, so it can only be
  // below lhs by what the lhs search missed.
  EXPECT_TRUE(r.lower_side_holds()) << r.residual << " vs " << r.tolerance;
  EXPECT_LE(r.residual, r.lhs.cost.mean - 0.25 + 1e-12);
}

TEST(Dpp, BudgetAndArguments) {
  const auto m = mkv::zoo::bang_bang_det();
  mkv::DppConfig cfg;
  cfg.max_simulations = 100;
  EXPECT_THROW(mkv::dpp_residual(m, three_atoms(m, {0.0, 0.5}), 0.0, 0.25, InitialLaw::dirac({1.0}), {0.0, 0.5, 40},
                                 4, cfg),
               mkv::BudgetError);
  cfg.max_simulations = 0;
  EXPECT_THROW(mkv::dpp_residual(m, three_atoms(m, {0.0, 0.5}), 0.0, 0.5, InitialLaw::dirac({1.0}), {0.0, 0.5, 40}, 4,
                                 cfg),
               std::invalid_argument);
}
