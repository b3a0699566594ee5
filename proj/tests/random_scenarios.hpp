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

// Seeded generators for property-style tests. Everything is deterministic:
// a fixed seed gives a fixed stream of scenarios.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "eqkit/static_equilibrium.hpp"
#include "eqkit/utility.hpp"

namespace eqkit::testing {

struct UtilityGenOptions {
  double k_max = 8.0;           // cap on marginal values (the slope bound L)
  bool allow_quadratic = true;
  bool allow_capped = true;
  bool allow_piecewise = false;
  bool allow_zero_curvature = false;  // admit b = 0 quadratics occasionally
};

inline UtilityFunction random_utility(std::mt19937_64& rng, const UtilityGenOptions& opt = {}) {
  std::vector<int> kinds;
  if (opt.allow_quadratic) kinds.push_back(0);
  if (opt.allow_capped) kinds.push_back(1);
  if (opt.allow_piecewise) kinds.push_back(2);
  std::uniform_int_distribution<std::size_t> pick(0, kinds.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> kdist(0.3, opt.k_max);
  switch (kinds[pick(rng)]) {
    case 0: {
      double b = std::uniform_real_distribution<double>(0.3, 4.0)(rng);
      if (opt.allow_zero_curvature && unit(rng) < 0.1) b = 0.0;
      return UtilityFunction::quadratic(b, kdist(rng));
    }
    case 1: {
      const double k = kdist(rng);
      const double beta = std::uniform_real_distribution<double>(0.5, 6.0 * k)(rng);
      return UtilityFunction::capped_linear(k, beta);
    }
    default: {
      // Concave tabulated curve: increasing x ticks, nonincreasing slopes.
      const int segments = std::uniform_int_distribution<int>(2, 5)(rng);
      std::vector<double> slopes(segments);
      slopes[0] = kdist(rng);
      for (int j = 1; j < segments; ++j)
        slopes[j] = slopes[j - 1] - std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      std::vector<std::array<double, 2>> pts;
      pts.push_back({0.0, 0.0});
      double x = 0.0, f = 0.0;
      for (int j = 0; j < segments; ++j) {
        x += std::uniform_real_distribution<double>(0.3, 2.0)(rng);
        f = pts.back()[1] + slopes[j] * (x - pts.back()[0]);
        pts.push_back({x, f});
      }
      return UtilityFunction::piecewise_linear(std::move(pts));
    }
  }
}

struct ScenarioGenOptions {
  int n_max = 6;
  double C_min = 0.5;
  double C_max = 8.0;
  UtilityGenOptions utility;
  bool require_capped = false;  // force at least one capped-linear agent
};

inline StaticScenario random_scenario(std::mt19937_64& rng, const ScenarioGenOptions& opt = {}) {
  const int n = std::uniform_int_distribution<int>(1, opt.n_max)(rng);
  const double C = std::uniform_real_distribution<double>(opt.C_min, opt.C_max)(rng);
  // Random split of C across agents.
  std::vector<double> weights(n);
  double total = 0.0;
  for (double& w : weights) {
    w = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    total += w;
  }
  StaticScenario s;
  for (int i = 0; i < n; ++i)
    s.agents.push_back({random_utility(rng, opt.utility), C * weights[i] / total});
  if (opt.require_capped) {
    bool has_capped = false;
    for (const auto& ag : s.agents)
      has_capped |= ag.utility.kind() == UtilityKind::capped_linear;
    if (!has_capped) {
      UtilityGenOptions capped_only = opt.utility;
      capped_only.allow_quadratic = false;
      capped_only.allow_piecewise = false;
      capped_only.allow_capped = true;
      s.agents.front().utility = random_utility(rng, capped_only);
    }
  }
  return s;
}

// Slope bound over the relevant load range [0, C]: concavity puts the largest
// magnitude at an endpoint.
inline double slope_bound(const StaticScenario& s) {
  const double C = s.capacity();
  double L = 0.0;
  for (const auto& ag : s.agents) {
    L = std::max(L, std::abs(ag.utility.marginal(0.0)));
    L = std::max(L, std::abs(ag.utility.marginal(C)));
  }
  return L;
}

inline double scenario_welfare(const StaticScenario& s, const std::vector<double>& x) {
  double w = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) w += s.agents[i].utility.eval(std::max(0.0, x[i]));
  return w;
}

}  // namespace eqkit::testing
