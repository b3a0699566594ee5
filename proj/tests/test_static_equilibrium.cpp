// Copyright 2026 The eqkit Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eqkit/static_equilibrium.hpp"

#include <catch2/catch.hpp>
#include <cmath>
#include <random>

#include "eqkit/oracle.hpp"
#include "random_scenarios.hpp"

using eqkit::AgentSpec;
using eqkit::StaticEquilibrium;
using eqkit::StaticModel;
using eqkit::StaticScenario;
using eqkit::UtilityFunction;

namespace {

// Four capped-linear agents trading over a 38-unit network; the exact
// equilibrium sits at the indifference price of agent 2.
StaticScenario example1_scenario() {
  StaticScenario s;
  s.agents.push_back({UtilityFunction::capped_linear(21.0, 135.0), 13.0});
  s.agents.push_back({UtilityFunction::capped_linear(20.0, 600.0), 14.0});
  s.agents.push_back({UtilityFunction::capped_linear(23.0, 130.0), 4.0});
  s.agents.push_back({UtilityFunction::capped_linear(32.0, 150.0), 7.0});
  return s;
}

StaticScenario pm1_scenario(double C) {
  const double b[] = {2.0, 5.0, 3.0, 4.0};
  const double k[] = {21.0, 17.0, 23.0, 13.0};
  StaticScenario s;
  for (int i = 0; i < 4; ++i)
    s.agents.push_back({UtilityFunction::quadratic(b[i], k[i]), C / 4.0});
  return s;
}

double pm1_closed_form(double C) {
  const double b[] = {2.0, 5.0, 3.0, 4.0};
  const double k[] = {21.0, 17.0, 23.0, 13.0};
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 4; ++i) {
    num += k[i] / b[i];
    den += 1.0 / b[i];
  }
  return (num - C) / den;
}

}  // namespace

TEST_CASE("load-only equilibrium reproduces the four-agent trading network") {
  const StaticScenario s = example1_scenario();
  const StaticEquilibrium eq = eqkit::solve_sald(s);

  CHECK(eq.lambda == Approx(20.0).margin(1e-3));
  const double x1 = 135.0 / 21.0;
  const double x3 = 130.0 / 23.0;
  const double x4 = 150.0 / 32.0;
  const double x2 = 38.0 - x1 - x3 - x4;
  CHECK(eq.x[0] == Approx(x1).margin(1e-3));
  CHECK(eq.x[1] == Approx(x2).margin(1e-3));
  CHECK(eq.x[2] == Approx(x3).margin(1e-3));
  CHECK(eq.x[3] == Approx(x4).margin(1e-3));
  CHECK(std::abs(eq.balance_residual) <= 1e-9 * 38.0);
  CHECK(eq.duality_gap <= 1e-6);

  const auto rep = eqkit::verify_equilibrium(s, eq, StaticModel::sald);
  CHECK(rep.accepted);
}

TEST_CASE("trading equilibrium adds the balanced trade vector") {
  const StaticScenario s = example1_scenario();
  const StaticEquilibrium eq = eqkit::solve_saltd(s);

  CHECK(eq.lambda == Approx(20.0).margin(1e-3));
  REQUIRE(eq.e.has_value());
  const double e_expected[] = {6.571, -7.232, -1.652, 2.313};
  for (int i = 0; i < 4; ++i) CHECK((*eq.e)[i] == Approx(e_expected[i]).margin(1e-3));
  double esum = 0.0;
  for (double v : *eq.e) esum += v;
  CHECK(std::abs(esum) <= 1e-9 * 38.0);

  const auto rep = eqkit::verify_equilibrium(s, eq, StaticModel::saltd);
  CHECK(rep.accepted);
}

TEST_CASE("single agent consumes its own resource at zero price") {
  StaticScenario s;
  s.agents.push_back({UtilityFunction::quadratic(1.0, 5.0), 5.0});
  const StaticEquilibrium eq = eqkit::solve_sald(s);
  CHECK(eq.lambda == Approx(0.0).margin(1e-6));
  CHECK(eq.x[0] == Approx(5.0).margin(1e-6));
}

TEST_CASE("quadratic scenario matches the closed form and the grid oracle") {
  const StaticScenario s = pm1_scenario(10.0);
  const StaticEquilibrium eq = eqkit::solve_sald(s);
  CHECK(eq.lambda == Approx(pm1_closed_form(10.0)).margin(1e-6));
  const double k[] = {21.0, 17.0, 23.0, 13.0};
  const double b[] = {2.0, 5.0, 3.0, 4.0};
  for (int i = 0; i < 4; ++i)
    CHECK(eq.x[i] == Approx((k[i] - eq.lambda) / b[i]).margin(1e-6));

  const auto oracle = eqkit::oracle::dp_welfare_sald(s, 0.01);
  const double welfare = eqkit::testing::scenario_welfare(s, eq.x);
  const double L = eqkit::testing::slope_bound(s);
  CHECK(std::abs(welfare - oracle.welfare) <= 4.0 * L * 0.01 + 1e-9);
}

TEST_CASE("trading model at slack capacity settles at zero price") {
  const StaticScenario s = pm1_scenario(30.0);
  const StaticEquilibrium eq = eqkit::solve_saltd(s);
  CHECK(eq.lambda == 0.0);
  const double k[] = {21.0, 17.0, 23.0, 13.0};
  const double b[] = {2.0, 5.0, 3.0, 4.0};
  double esum = 0.0;
  for (int i = 0; i < 4; ++i) {
    CHECK(eq.x[i] == Approx(k[i] / b[i]).margin(1e-9));
    CHECK((*eq.e)[i] <= s.agents[i].a - eq.x[i] + 1e-9);
    esum += (*eq.e)[i];
  }
  CHECK(std::abs(esum) <= 1e-9 * 30.0);
}

TEST_CASE("single-agent trading forces zero trade") {
  for (double a : {3.0, 10.0}) {
    StaticScenario s;
    s.agents.push_back({UtilityFunction::quadratic(1.0, 5.0), a});
    const StaticEquilibrium eq = eqkit::solve_saltd(s);
    REQUIRE(eq.e.has_value());
    CHECK(std::abs((*eq.e)[0]) <= 1e-9);
    CHECK(eq.lambda >= 0.0);
  }
}

TEST_CASE("linear utilities clear at the top marginal value") {
  StaticScenario s;
  s.agents.push_back({UtilityFunction::quadratic(0.0, 3.0), 2.0});
  s.agents.push_back({UtilityFunction::quadratic(0.0, 5.0), 2.0});
  const StaticEquilibrium eq = eqkit::solve_sald(s);
  CHECK(eq.lambda == Approx(5.0).margin(1e-9));
  CHECK(eq.x[0] == Approx(0.0).margin(1e-9));
  CHECK(eq.x[1] == Approx(4.0).margin(1e-9));
}

TEST_CASE("verifier rejects perturbed prices and unbalanced allocations") {
  const StaticScenario s = example1_scenario();
  const StaticEquilibrium good = eqkit::solve_sald(s);

  StaticEquilibrium bad_price = good;
  bad_price.lambda = 25.0;
  const auto rep1 = eqkit::verify_equilibrium(s, bad_price, StaticModel::sald);
  CHECK_FALSE(rep1.accepted);
  CHECK(rep1.optimality_gap[1] > 0.0);  // agent 2's best response at 25 is zero load

  StaticEquilibrium unbalanced = good;
  for (double& v : unbalanced.x) v *= 1.1;
  const auto rep2 = eqkit::verify_equilibrium(s, unbalanced, StaticModel::sald);
  CHECK_FALSE(rep2.accepted);
  CHECK(std::abs(rep2.balance_residual) > 1e-3);
}

TEST_CASE("verifier accepts the exact equilibrium") {
  const StaticScenario s = example1_scenario();
  StaticEquilibrium published;
  published.lambda = 20.0;
  published.x = {135.0 / 21.0, 38.0 - 135.0 / 21.0 - 130.0 / 23.0 - 150.0 / 32.0, 130.0 / 23.0,
                 150.0 / 32.0};
  eqkit::VerifyTolerances tols;
  tols.optimality_gap = 1e-3;
  const auto rep = eqkit::verify_equilibrium(s, published, StaticModel::sald, tols);
  CHECK(rep.accepted);
  CHECK(rep.max_optimality_gap <= 1e-3);
}

TEST_CASE("verifier validates dimensions") {
  const StaticScenario s = example1_scenario();
  StaticEquilibrium eq = eqkit::solve_sald(s);
  eq.x.pop_back();
  CHECK_THROWS_AS(eqkit::verify_equilibrium(s, eq, StaticModel::sald), eqkit::DimensionMismatch);
}

TEST_CASE("solver rejects non-concave utilities and empty scenarios") {
  StaticScenario s;
  s.agents.push_back({UtilityFunction::quadratic(-1.0, 5.0), 1.0});
  CHECK_THROWS_AS(eqkit::solve_sald(s), eqkit::NonConcaveUtility);
  CHECK_THROWS_AS(eqkit::solve_saltd(s), eqkit::NonConcaveUtility);
  StaticScenario empty;
  CHECK_THROWS_AS(eqkit::solve_sald(empty), eqkit::Error);
}

TEST_CASE("capacity sweep: prices fall as capacity grows, trading floor at zero") {
  std::vector<UtilityFunction> pm1;
  const double b[] = {2.0, 5.0, 3.0, 4.0};
  const double k[] = {21.0, 17.0, 23.0, 13.0};
  for (int i = 0; i < 4; ++i) pm1.push_back(UtilityFunction::quadratic(b[i], k[i]));

  std::vector<double> grid;
  for (int i = 1; i <= 50; ++i) grid.push_back(0.8 * i);

  const auto sald = eqkit::price_capacity_sweep(pm1, grid, StaticModel::sald);
  REQUIRE(sald.size() == 50);
  for (std::size_t i = 1; i < sald.size(); ++i) {
    CHECK(sald[i].C > sald[i - 1].C);
    CHECK(sald[i].lambda <= sald[i - 1].lambda + 1e-9);
  }
  CHECK(sald.back().lambda == Approx(pm1_closed_form(40.0)).margin(1e-2));
  CHECK(sald.back().lambda < 0.0);

  const auto saltd = eqkit::price_capacity_sweep(pm1, grid, StaticModel::saltd);
  for (const auto& row : saltd) CHECK(row.lambda >= 0.0);
  CHECK(saltd.back().lambda == 0.0);

  CHECK_THROWS_AS(eqkit::price_capacity_sweep(pm1, {0.0}, StaticModel::sald), eqkit::Error);
}

TEST_CASE("welfare equivalence against the grid oracle on random scenarios") {
  std::mt19937_64 rng(123456);
  eqkit::testing::ScenarioGenOptions opt;
  opt.utility.allow_piecewise = true;
  for (int trial = 0; trial < 120; ++trial) {
    const StaticScenario s = eqkit::testing::random_scenario(rng, opt);
    const double C = s.capacity();
    const double L = eqkit::testing::slope_bound(s);
    const double grid_gap = static_cast<double>(s.size()) * L * 0.01 + 1e-9;

    const StaticEquilibrium sald = eqkit::solve_sald(s);
    const auto oracle_sald = eqkit::oracle::dp_welfare_sald(s, 0.01);
    const double welfare_sald = eqkit::testing::scenario_welfare(s, sald.x);
    REQUIRE(std::abs(welfare_sald - oracle_sald.welfare) <= grid_gap);
    REQUIRE(sald.duality_gap <= 1e-6);
    REQUIRE(eqkit::verify_equilibrium(s, sald, StaticModel::sald).accepted);
    double sum = 0.0;
    for (double v : sald.x) sum += v;
    REQUIRE(std::abs(sum - C) <= 1e-9 * std::max(1.0, C));

    const StaticEquilibrium saltd = eqkit::solve_saltd(s);
    const auto oracle_saltd = eqkit::oracle::dp_welfare_saltd(s, 0.01);
    const double welfare_saltd = eqkit::testing::scenario_welfare(s, saltd.x);
    REQUIRE(std::abs(welfare_saltd - oracle_saltd.welfare) <= grid_gap);
    REQUIRE(saltd.duality_gap <= 1e-6);
    REQUIRE(eqkit::verify_equilibrium(s, saltd, StaticModel::saltd).accepted);
    double esum = 0.0;
    for (double v : *saltd.e) esum += v;
    REQUIRE(std::abs(esum) <= 1e-9 * std::max(1.0, C));
  }
}

TEST_CASE("nondecreasing utilities keep the load-only price nonnegative") {
  std::mt19937_64 rng(777);
  eqkit::testing::ScenarioGenOptions opt;
  opt.require_capped = true;
  for (int trial = 0; trial < 200; ++trial) {
    const StaticScenario s = eqkit::testing::random_scenario(rng, opt);
    REQUIRE(eqkit::solve_sald(s).lambda >= -1e-9);
  }
}

TEST_CASE("trading prices are never negative") {
  std::mt19937_64 rng(778);
  eqkit::testing::ScenarioGenOptions opt;
  opt.utility.allow_piecewise = true;
  opt.utility.allow_zero_curvature = true;
  for (int trial = 0; trial < 200; ++trial) {
    const StaticScenario s = eqkit::testing::random_scenario(rng, opt);
    REQUIRE(eqkit::solve_saltd(s).lambda >= 0.0);
  }
}

TEST_CASE("zero capacity clears with zero loads") {
  StaticScenario s;
  s.agents.push_back({UtilityFunction::quadratic(2.0, 3.0), 0.0});
  s.agents.push_back({UtilityFunction::capped_linear(5.0, 10.0), 0.0});
  const StaticEquilibrium sald = eqkit::solve_sald(s);
  CHECK(sald.x[0] == 0.0);
  CHECK(sald.x[1] == 0.0);
  CHECK(sald.lambda >= 5.0);  // above every marginal value at zero
  const StaticEquilibrium saltd = eqkit::solve_saltd(s);
  CHECK(saltd.x[0] == 0.0);
  CHECK((*saltd.e)[0] == 0.0);
}

TEST_CASE("solves are deterministic down to the bit pattern") {
  const StaticScenario s = example1_scenario();
  const StaticEquilibrium a = eqkit::solve_sald(s);
  const StaticEquilibrium b = eqkit::solve_sald(s);
  CHECK(a.lambda == b.lambda);
  CHECK(a.x == b.x);
  const StaticEquilibrium c = eqkit::solve_saltd(s);
  const StaticEquilibrium d = eqkit::solve_saltd(s);
  CHECK(c.lambda == d.lambda);
  CHECK(*c.e == *d.e);
}
