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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "eqkit/dynamic_equilibrium.hpp"
#include "eqkit/errors.hpp"
#include "eqkit/static_equilibrium.hpp"
#include "eqkit/utility.hpp"

// Brute-force references used by the test suites. These exist to falsify the
// solvers, so they share no code path with them: welfare optima come from
// exhaustive dynamic programming / grid search, not from prices.

namespace eqkit::oracle {

struct OracleResult {
  double welfare = 0.0;
  std::vector<double> allocation;  // grid-snapped decision vector
  double resolution = 0.0;
  double grid_capacity = 0.0;  // C snapped to the grid (static oracles)
};

namespace detail {

inline constexpr std::int64_t kMaxCells = 1'000'000;

// Backward DP over agents with state = remaining grid units. `exact_balance`
// pins the final state to zero (load-only model); otherwise leftover units
// may remain (trading model in its e-eliminated form). Welfare ties are
// broken toward the smaller allocation of the earlier-indexed agent.
inline OracleResult dp_welfare(const StaticScenario& s, double resolution, bool exact_balance) {
  if (!(resolution > 0.0)) throw Error("oracle resolution must be positive");
  const double C = s.capacity();
  const std::int64_t G = std::llround(C / resolution);
  if (G > kMaxCells) throw GridTooLarge("capacity grid exceeds the cell budget");
  const std::size_t n = s.size();
  const std::size_t states = static_cast<std::size_t>(G) + 1;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Tabulated utilities on the grid.
  std::vector<std::vector<double>> f(n, std::vector<double>(states));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t u = 0; u < states; ++u)
      f[i][u] = s.agents[i].utility.eval(static_cast<double>(u) * resolution);

  // value[g] = best welfare of agents i..n-1 given g remaining units.
  std::vector<double> value(states), next(states);
  std::vector<std::vector<std::uint32_t>> choice(n, std::vector<std::uint32_t>(states, 0));
  if (exact_balance) {
    std::fill(next.begin(), next.end(), kNegInf);
    next[0] = 0.0;
  } else {
    std::fill(next.begin(), next.end(), 0.0);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t g = 0; g < states; ++g) {
      double best = kNegInf;
      std::uint32_t best_u = 0;
      for (std::size_t u = 0; u <= g; ++u) {
        const double w = f[i][u] + next[g - u];
        if (w > best) {
          best = w;
          best_u = static_cast<std::uint32_t>(u);
        }
      }
      value[g] = best;
      choice[i][g] = best_u;
    }
    std::swap(value, next);
  }

  OracleResult res;
  res.resolution = resolution;
  res.grid_capacity = static_cast<double>(G) * resolution;
  res.welfare = next[states - 1];
  res.allocation.resize(n);
  std::size_t g = states - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = choice[i][g];
    res.allocation[i] = static_cast<double>(u) * resolution;
    g -= u;
  }
  return res;
}

}  // namespace detail

/// Exact optimum of the grid-restricted load-only welfare problem
/// (sum x_i == C enforced by the final DP state).
inline OracleResult dp_welfare_sald(const StaticScenario& s, double resolution) {
  return detail::dp_welfare(s, resolution, /*exact_balance=*/true);
}

/// Trading-model variant: sum x_i <= C (the e-eliminated balance form).
inline OracleResult dp_welfare_saltd(const StaticScenario& s, double resolution) {
  return detail::dp_welfare(s, resolution, /*exact_balance=*/false);
}

/// L*(lambda) - primal welfare for a feasible allocation; nonnegative for any
/// price by weak duality, zero exactly at an equilibrium. Feasibility is the
/// one-sided sum x <= C (the trading model's e-eliminated form; the load-only
/// model's balance makes it tight).
inline double duality_gap(const StaticScenario& s, double lambda, const std::vector<double>& x) {
  const std::size_t n = s.size();
  if (x.size() != n) throw DimensionMismatch("allocation length does not match agent count");
  const double C = s.capacity();
  constexpr double kFeasTol = 1e-6;
  double sum = 0.0;
  for (double v : x) {
    if (v < -kFeasTol) throw InfeasiblePoint("allocation has a negative component");
    sum += v;
  }
  if (sum - C > kFeasTol * std::max(1.0, std::abs(C)))
    throw InfeasiblePoint("allocation exceeds the network capacity");

  double dual = 0.0;
  double primal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = s.agents[i].utility;
    const ResponseInterval r = u.best_response(lambda);
    if (!r.attained) return kUnbounded;
    dual += u.eval(r.lo) + lambda * (s.agents[i].a - r.lo);
    primal += u.eval(std::max(0.0, x[i]));
  }
  return dual - primal;
}

/// Exhaustive control-grid search for tiny dynamic instances. Per-step trades
/// are eliminated: a control profile is feasible iff the per-step trade caps
/// sum to a nonnegative value (surplus can always be shed downward, deficits
/// cannot), relaxed by a grid-induced slack sized so the snap of any exactly
/// balanced continuous profile stays admissible.
inline OracleResult grid_search_daltd(const DynamicScenario& s, double box_lo, double box_hi,
                                      double resolution) {
  validate_scenario(s);
  if (!(box_hi > box_lo) || !(resolution > 0.0)) throw Error("invalid control box or resolution");
  const int T = s.T;
  const int m = s.dim();
  const std::size_t n = s.agents.size();
  const int dims = static_cast<int>(n) * m * T;
  const int ticks = static_cast<int>(std::floor((box_hi - box_lo) / resolution + 1e-12)) + 1;

  double total_points = 1.0;
  for (int d = 0; d < dims; ++d) total_points *= static_cast<double>(ticks);
  if (total_points > 1e7) throw GridTooLarge("control grid exceeds the candidate budget");

  const double u_max = std::max(std::abs(box_lo), std::abs(box_hi));
  double slack = 0.0;
  for (const auto& ag : s.agents) {
    const Eigen::MatrixXd H_sym = 0.5 * (ag.H + ag.H.transpose());
    const double h_norm = H_sym.cwiseAbs().rowwise().sum().maxCoeff();
    slack += m * h_norm * (u_max * resolution + 0.25 * resolution * resolution);
  }

  std::vector<int> idx(dims, 0);
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(dims, box_lo);
  OracleResult best;
  best.welfare = -std::numeric_limits<double>::infinity();
  best.resolution = resolution;

  for (;;) {
    // Feasibility: at every step the trade caps must cover the balance.
    bool feasible = true;
    for (int t = 0; t < T && feasible; ++t) {
      double r = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto u = flat.segment(static_cast<int>(i) * m * T + t * m, m);
        r += s.agents[i].a[t] - s.agents[i].resource_required(u);
      }
      feasible = r >= -slack;
    }
    if (feasible) {
      double welfare = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        welfare += agent_utility(s.agents[i], flat.segment(static_cast<int>(i) * m * T, m * T), T);
      if (welfare > best.welfare) {
        best.welfare = welfare;
        best.allocation.assign(flat.data(), flat.data() + dims);
      }
    }
    // Odometer step.
    int d = 0;
    while (d < dims) {
      if (++idx[d] < ticks) {
        flat[d] = box_lo + idx[d] * resolution;
        break;
      }
      idx[d] = 0;
      flat[d] = box_lo;
      ++d;
    }
    if (d == dims) break;
  }
  if (best.allocation.empty()) throw InfeasiblePoint("no grid candidate satisfies the balance slack");
  return best;
}

}  // namespace eqkit::oracle
