#include <gtest/gtest.h>

#include <cmath>

#include "mkv/model_json.hpp"
#include "mkv/model_zoo.hpp"

using mkv::ControlMeasure;
using mkv::EmpiricalMeasure;

namespace {

std::vector<double> v(std::initializer_list<double> x) { return std::vector<double>(x); }

}  // namespace

TEST(Model, BuiltinsValidate) {
  const auto all = mkv::builtin_models();
  ASSERT_EQ(all.size(), 5u);
  for (const auto& m : all) {
    EXPECT_NO_THROW(m.validate()) << m.name;
    EXPECT_TRUE(mkv::find_builtin(m.name).has_value());
  }
  EXPECT_FALSE(mkv::find_builtin("NOPE").has_value());
}

TEST(Model, RelaxedDriftExamples) {
  const auto bb = mkv::zoo::bang_bang_det();
  const EmpiricalMeasure mu(1, {0.0});
  const ControlMeasure split(bb.control_box, {-1.0, 1.0}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(mkv::eval_drift_relaxed(bb, 0.0, v({0.3}), mu, split)[0], 0.0);

  const auto ou = mkv::zoo::meanfield_ou();
  const auto one = ControlMeasure::dirac(ou.control_box, v({1.0}));
  EXPECT_DOUBLE_EQ(mkv::eval_drift_relaxed(ou, 0.0, v({0.0}), EmpiricalMeasure(1, {2.0}), one)[0], 3.0);
}

TEST(Model, CostExamples) {
  const auto ou = mkv::zoo::meanfield_ou();
  const auto one = ControlMeasure::dirac(ou.control_box, v({1.0}));
  const auto c = mkv::eval_costs(ou, 0.5, v({2.0}), EmpiricalMeasure(1, {0.0}), one);
  EXPECT_DOUBLE_EQ(c.running, 1.0);
  EXPECT_DOUBLE_EQ(c.terminal, 4.0);
  const ControlMeasure mixed(ou.control_box, {-1.0, 0.0}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(mkv::eval_costs(ou, 0.0, v({1.0}), EmpiricalMeasure(1, {0.0}), mixed).running, 0.5);
}

TEST(Model, SignConventionAtZero) {
  const auto sg = mkv::zoo::sgn_counterexample();
  const auto u = ControlMeasure::dirac(sg.control_box, v({0.0}));
  const EmpiricalMeasure mu(1, {0.0});
  EXPECT_DOUBLE_EQ(mkv::eval_drift_relaxed(sg, 0.0, v({-0.5}), mu, u)[0], 1.0);
  EXPECT_DOUBLE_EQ(mkv::eval_drift_relaxed(sg, 0.0, v({0.0}), mu, u)[0], 1.0);
  EXPECT_DOUBLE_EQ(mkv::eval_drift_relaxed(sg, 0.0, v({0.5}), mu, u)[0], -1.0);
}

TEST(Model, RelaxedLiftIsAffineInTheControlMeasure) {
  const auto ou = mkv::zoo::meanfield_ou();
  const ControlMeasure a(ou.control_box, {-1.0, 0.2}, {1.0, 3.0});
  const ControlMeasure b(ou.control_box, {0.7}, {1.0});
  const EmpiricalMeasure mu(1, {0.0, 1.0});
  for (double lam : {0.0, 0.3, 1.0}) {
    const auto mix = mkv::blend(ou.control_box, a, b, lam);
    const double lhs = mkv::eval_drift_relaxed(ou, 0.2, v({0.4}), mu, mix)[0];
    const double rhs = lam * mkv::eval_drift_relaxed(ou, 0.2, v({0.4}), mu, a)[0] +
                       (1 - lam) * mkv::eval_drift_relaxed(ou, 0.2, v({0.4}), mu, b)[0];
    EXPECT_NEAR(lhs, rhs, 1e-14);
    const double flhs = mkv::eval_costs(ou, 0.2, v({0.4}), mu, mix).running;
    const double frhs = lam * mkv::eval_costs(ou, 0.2, v({0.4}), mu, a).running +
                        (1 - lam) * mkv::eval_costs(ou, 0.2, v({0.4}), mu, b).running;
    EXPECT_NEAR(flhs, frhs, 1e-14);
  }
}

TEST(Model, DiffusionAndCovariance) {
  const auto ou = mkv::zoo::meanfield_ou(2);
  const auto s = mkv::eval_diffusion(ou, 0.0, v({0.0, 0.0}), EmpiricalMeasure(2, {0.0, 0.0}));
  EXPECT_EQ(s, v({0.5, 0.0, 0.0, 0.5}));
  EXPECT_EQ(mkv::diffusion_covariance(s, 2), v({0.25, 0.0, 0.0, 0.25}));
}

TEST(Model, DomainErrors) {
  const auto bb = mkv::zoo::bang_bang_det();
  const auto u = ControlMeasure::dirac(bb.control_box, v({0.0}));
  const EmpiricalMeasure mu(1, {0.0});
  EXPECT_THROW(mkv::eval_drift_relaxed(bb, 0.6, v({0.0}), mu, u), std::domain_error);
  EXPECT_THROW(mkv::eval_drift_relaxed(bb, -0.1, v({0.0}), mu, u), std::domain_error);
  EXPECT_THROW(mkv::eval_drift_relaxed(bb, 0.1, v({0.0, 1.0}), mu, u), std::invalid_argument);
  auto broken = bb;
  broken.terminal_cost = [](std::span<const double>, const EmpiricalMeasure&) { return NAN; };
  EXPECT_THROW(mkv::eval_costs(broken, 0.1, v({0.0}), mu, u), mkv::NumericalError);
  broken.drift = nullptr;
  EXPECT_THROW(broken.validate(), std::invalid_argument);
}

TEST(Model, ScaleCosts) {
  const auto ou = mkv::zoo::meanfield_ou();
  const auto scaled = mkv::scale_costs(ou, 2.0);
  const auto one = ControlMeasure::dirac(ou.control_box, v({0.5}));
  const EmpiricalMeasure mu(1, {1.0});
  const auto a = mkv::eval_costs(ou, 0.1, v({1.5}), mu, one);
  const auto b = mkv::eval_costs(scaled, 0.1, v({1.5}), mu, one);
  EXPECT_DOUBLE_EQ(b.running, 2.0 * a.running);
  EXPECT_DOUBLE_EQ(b.terminal, 2.0 * a.terminal);
  EXPECT_EQ(mkv::eval_drift_relaxed(scaled, 0.1, v({1.5}), mu, one), mkv::eval_drift_relaxed(ou, 0.1, v({1.5}), mu, one));
}

TEST(ModelJson, PolynomialModel) {
  const auto j = nlohmann::json::parse(R"({
    "name": "J", "state_dim": 1, "control_dim": 1, "horizon": 2,
    "control_box": {"lo": [-1], "hi": [1]},
    "drift": [[{"coef": -1, "x": [1]}, {"coef": 1, "m": [1]}, {"coef": 2, "u": [1]}]],
    "diffusion": [[{"coef": 0.5}, {"coef": 1, "t": 1}]],
    "running_cost": [{"coef": 1, "u": [2]}],
    "terminal_cost": [{"coef": 1, "x": [2]}],
    "constants": {"K1": 3, "K2": 3}})");
  mkv::cfg::Diagnostics diag;
  const auto m = mkv::model_from_json(j, diag);
  ASSERT_TRUE(m.has_value()) << (diag.ok() ? "" : diag.messages().front());
  EXPECT_EQ(m->name, "J");
  EXPECT_EQ(m->horizon, 2.0);
  EXPECT_EQ(*m->constants.K1, 3.0);
  EXPECT_FALSE(m->diffusion_depends_on_law);
  const auto u = ControlMeasure::dirac(m->control_box, v({0.5}));
  const EmpiricalMeasure mu(1, {4.0});
  EXPECT_DOUBLE_EQ(mkv::eval_drift_relaxed(*m, 1.0, v({1.0}), mu, u)[0], -1.0 + 4.0 + 1.0);
  EXPECT_DOUBLE_EQ(mkv::eval_diffusion(*m, 1.5, v({1.0}), mu)[0], 2.0);
  const auto c = mkv::eval_costs(*m, 0.0, v({3.0}), mu, u);
  EXPECT_DOUBLE_EQ(c.running, 0.25);
  EXPECT_DOUBLE_EQ(c.terminal, 9.0);
}

TEST(ModelJson, CollectsEveryViolation) {
  const auto j = nlohmann::json::parse(R"({
    "state_dim": 1, "control_dim": 1, "horizon": -1, "colour": 3,
    "control_box": {"lo": [-1], "hi": [1]},
    "drift": [[{"coef": 1, "x": [1, 2]}]],
    "diffusion": [[{"coef": 1, "u": [1]}]],
    "running_cost": [],
    "terminal_cost": [{"coef": 1, "t": 1}]})");
  mkv::cfg::Diagnostics diag;
  EXPECT_FALSE(mkv::model_from_json(j, diag).has_value());
  const auto& msgs = diag.messages();
  auto has = [&](const std::string& s) {
    for (const auto& m : msgs)
      if (m.find(s) != std::string::npos) return true;
    return false;
  };
  EXPECT_TRUE(has("model.colour: unknown key 'colour'"));
  EXPECT_TRUE(has("model.horizon: horizon > 0"));
  EXPECT_TRUE(has("model.drift[0][0].x"));
  EXPECT_TRUE(has("model.diffusion[0][0].u"));
  EXPECT_TRUE(has("model.terminal_cost[0].t"));
  EXPECT_THROW(diag.throw_if_failed(), mkv::ConfigError);
}

TEST(ModelJson, LawDependentDiffusionIsFlagged) {
  const auto j = nlohmann::json::parse(R"({
    "state_dim": 1, "control_dim": 1, "horizon": 1,
    "control_box": {"lo": [0], "hi": [1]},
    "drift": [[]], "diffusion": [[{"coef": 1, "m": [2]}]],
    "running_cost": [], "terminal_cost": []})");
  mkv::cfg::Diagnostics diag;
  const auto m = mkv::model_from_json(j, diag);
  ASSERT_TRUE(m.has_value());
  EXPECT_TRUE(m->diffusion_depends_on_law);
}
