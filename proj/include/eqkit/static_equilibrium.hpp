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
#include <optional>
#include <string>
#include <vector>

#include "eqkit/errors.hpp"
#include "eqkit/log.hpp"
#include "eqkit/utility.hpp"

namespace eqkit {

struct AgentSpec {
  UtilityFunction utility;
  double a = 0.0;  // local resource, load-units
};

struct StaticScenario {
  std::vector<AgentSpec> agents;

  double capacity() const {
    double c = 0.0;
    for (const auto& ag : agents) c += ag.a;
    return c;
  }
  std::size_t size() const { return agents.size(); }
};

enum class StaticModel { sald, saltd };

inline const char* to_string(StaticModel m) { return m == StaticModel::sald ? "sald" : "saltd"; }

struct StaticEquilibrium {
  double lambda = 0.0;
  std::vector<double> x;
  std::optional<std::vector<double>> e;  // present for SALTD
  double duality_gap = 0.0;
  double balance_residual = 0.0;
};

namespace detail {

struct DemandWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool finite = true;  // false: some agent has no finite maximizer at this price
};

inline DemandWindow demand_window(const StaticScenario& s, double lambda,
                                  std::vector<ResponseInterval>* out = nullptr) {
  DemandWindow w;
  if (out) out->clear();
  for (const auto& ag : s.agents) {
    const ResponseInterval r = ag.utility.best_response(lambda);
    if (out) out->push_back(r);
    if (!r.attained) w.finite = false;
    w.lo += r.lo;
    w.hi += r.hi;  // propagates +inf
  }
  return w;
}

// Fill x_i inside [lo_i, hi_i] so that sum(x) == C: start at the interval
// floors and hand the remainder out in ascending agent order. Attained rays
// absorb any remainder. If C falls outside the aggregate window (possible
// only by the width of the final bisection bracket), rescale.
inline std::vector<double> reconcile_allocation(const std::vector<ResponseInterval>& r, double C) {
  const std::size_t n = r.size();
  std::vector<double> x(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = r[i].lo;
    total += x[i];
  }
  double remaining = C - total;
  if (remaining > 0.0) {
    for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
      const double room = r[i].hi - x[i];  // +inf for rays
      const double take = std::min(room, remaining);
      x[i] += take;
      remaining -= take;
    }
  }
  double sum = 0.0;
  for (double v : x) sum += v;
  if (sum != C) {
    if (sum > 0.0) {
      const double scale = C / sum;
      for (double& v : x) v *= scale;
    } else if (n > 0 && C > 0.0) {
      for (double& v : x) v = C / static_cast<double>(n);
    }
  }
  return x;
}

// Lagrangian dual value minus primal welfare at (lambda, x), written as the
// sum of per-agent payoff gaps; the two agree whenever x is balance-feasible.
// Zero at an exact equilibrium, +inf if some agent has no finite maximizer.
inline double welfare_duality_gap(const StaticScenario& s, double lambda,
                                  const std::vector<double>& x) {
  double gap = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const ResponseInterval r = s.agents[i].utility.best_response(lambda);
    if (!r.attained) return kUnbounded;
    const double xi = std::max(0.0, x[i]);
    const double best = s.agents[i].utility.eval(r.lo) - lambda * r.lo;
    const double got = s.agents[i].utility.eval(xi) - lambda * xi;
    gap += best - got;
  }
  return gap;
}

// Candidate prices where some agent's demand jumps, restricted to [lo, hi].
inline std::vector<double> kink_candidates(const StaticScenario& s, double lo, double hi) {
  std::vector<double> c;
  for (const auto& ag : s.agents) {
    for (double p : ag.utility.kink_prices()) {
      if (p >= lo && p <= hi) c.push_back(p);
    }
  }
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

struct BisectionResult {
  double lambda = 0.0;
  std::vector<ResponseInterval> responses;
};

// Scalar bisection on the price against the aggregate demand correspondence.
// Bracket invariant: at lambda_lo demand can reach C from above, at lambda_hi
// it cannot exceed C. The negative side grows geometrically from -1 until the
// window reaches C or a response turns unbounded; with allow_negative false
// the caller guarantees the bracket is valid at zero.
inline BisectionResult bisect_price(const StaticScenario& s, double C, double tol, int max_iter,
                                    bool allow_negative) {
  for (const auto& ag : s.agents) {
    if (!ag.utility.concave()) throw NonConcaveUtility("utility fails concavity check");
    if (ag.a < 0.0) throw Error("agent resource must be nonnegative");
  }

  double lambda_hi = 0.0;
  for (const auto& ag : s.agents) lambda_hi = std::max(lambda_hi, ag.utility.marginal_at_zero());
  lambda_hi += 1.0;

  double lambda_lo = 0.0;
  if (allow_negative) {
    int growth = 0;
    DemandWindow w = demand_window(s, lambda_lo);
    while (w.hi < C) {
      lambda_lo = lambda_lo == 0.0 ? -1.0 : 2.0 * lambda_lo;
      if (++growth > 200) throw InfeasibleBalance("no finite price clears the market");
      w = demand_window(s, lambda_lo);
    }
  }

  const double balance_tol = 1e-9 * std::max(1.0, std::abs(C));
  std::vector<ResponseInterval> resp;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    if (mid == lambda_lo || mid == lambda_hi) break;  // adjacent doubles
    const DemandWindow w = demand_window(s, mid, &resp);
    if (!w.finite || w.lo > C) {
      lambda_lo = mid;
    } else if (w.hi < C) {
      lambda_hi = mid;
    } else {
      return {mid, std::move(resp)};  // window contains C
    }
    if (lambda_hi - lambda_lo <= tol) {
      // Tight bracket. A clearing price in it is either a point of continuous
      // demand (any bracket point reconciles within tolerance) or a demand
      // jump, which must sit at one of the agents' kink prices: try those
      // exactly before settling.
      for (double cand : kink_candidates(s, lambda_lo, lambda_hi)) {
        const DemandWindow wc = demand_window(s, cand, &resp);
        if (wc.finite && wc.lo <= C && C <= wc.hi) return {cand, std::move(resp)};
      }
      const double probe = 0.5 * (lambda_lo + lambda_hi);
      const DemandWindow wp = demand_window(s, probe, &resp);
      if (wp.finite && std::abs(std::clamp(C, wp.lo, wp.hi) - C) <= balance_tol)
        return {probe, std::move(resp)};
      // Otherwise keep halving toward the jump until rescaling is harmless.
    }
  }
  const double final_lambda = 0.5 * (lambda_lo + lambda_hi);
  demand_window(s, final_lambda, &resp);
  return {final_lambda, std::move(resp)};
}

}  // namespace detail

/// Competitive/social-welfare equilibrium for static load decisions: price
/// from dual bisection on the aggregate demand correspondence, allocation
/// reconciled inside the per-agent argmax intervals (floors first, remainder
/// in ascending agent order).
inline StaticEquilibrium solve_sald(const StaticScenario& s, double tol = 1e-9,
                                    int max_iter = 200) {
  if (s.size() == 0) throw Error("scenario requires at least one agent");
  const double C = s.capacity();
  auto [lambda, resp] = detail::bisect_price(s, C, tol, max_iter, /*allow_negative=*/true);
  StaticEquilibrium eq;
  eq.lambda = lambda;
  eq.x = detail::reconcile_allocation(resp, C);
  double sum = 0.0;
  for (double v : eq.x) sum += v;
  eq.balance_residual = sum - C;
  eq.duality_gap = detail::welfare_duality_gap(s, lambda, eq.x);
  log_info("solve_sald: lambda=", lambda, " residual=", eq.balance_residual);
  return eq;
}

/// Equilibrium for static load plus trading decisions. Prices are clamped to
/// lambda >= 0; at a positive price the trade constraint is tight
/// (e_i = a_i - x_i), at zero price with aggregate slack the surplus sellers
/// are shrunk proportionally so trades balance.
inline StaticEquilibrium solve_saltd(const StaticScenario& s, double tol = 1e-9,
                                     int max_iter = 200) {
  if (s.size() == 0) throw Error("scenario requires at least one agent");
  const double C = s.capacity();
  const std::size_t n = s.size();

  StaticEquilibrium eq;
  std::vector<double> e(n, 0.0);

  std::vector<ResponseInterval> resp0;
  const detail::DemandWindow w0 = detail::demand_window(s, 0.0, &resp0);
  if (w0.hi < C) {
    // Zero price with slack: agents sit at their unconstrained optima and the
    // aggregate surplus is absorbed by shrinking sellers proportionally.
    eq.lambda = 0.0;
    eq.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) eq.x[i] = resp0[i].lo;
    double buy = 0.0, sell = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double slack = s.agents[i].a - eq.x[i];
      if (slack < 0.0)
        buy -= slack;
      else
        sell += slack;
    }
    const double shrink = sell > 0.0 ? buy / sell : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double slack = s.agents[i].a - eq.x[i];
      e[i] = slack < 0.0 ? slack : slack * shrink;
    }
  } else {
    auto [lambda, resp] = detail::bisect_price(s, C, tol, max_iter, /*allow_negative=*/false);
    eq.lambda = lambda;
    eq.x = detail::reconcile_allocation(resp, C);
    for (std::size_t i = 0; i < n; ++i) e[i] = s.agents[i].a - eq.x[i];
  }

  double esum = 0.0;
  for (double v : e) esum += v;
  eq.e = std::move(e);
  eq.balance_residual = esum;
  eq.duality_gap = detail::welfare_duality_gap(s, eq.lambda, eq.x);
  log_info("solve_saltd: lambda=", eq.lambda, " residual=", eq.balance_residual);
  return eq;
}

struct VerifyTolerances {
  double optimality_gap = 1e-6;  // per-agent payoff gap, utility-units
  double balance = 1e-6;         // scaled by max(1, C)
  double constraint = 1e-9;      // per-agent constraint violation
  double duality_gap = 1e-6;
};

struct VerificationReport {
  std::vector<double> optimality_gap;
  double max_optimality_gap = 0.0;
  double balance_residual = 0.0;
  double max_constraint_violation = 0.0;
  double duality_gap = 0.0;
  bool lambda_nonnegative = true;
  bool accepted = false;
};

/// Checks a claimed equilibrium against the definition: every agent at a best
/// response for the claimed price, demand/supply balance, feasibility, and a
/// zero welfare duality gap.
inline VerificationReport verify_equilibrium(const StaticScenario& s, const StaticEquilibrium& eq,
                                             StaticModel model,
                                             const VerifyTolerances& tols = {}) {
  const std::size_t n = s.size();
  if (eq.x.size() != n) throw DimensionMismatch("allocation length does not match agent count");
  if (model == StaticModel::saltd && (!eq.e || eq.e->size() != n))
    throw DimensionMismatch("trade vector missing or wrong length for SALTD");

  const double C = s.capacity();
  VerificationReport rep;
  rep.optimality_gap.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = s.agents[i].utility;
    const ResponseInterval r = u.best_response(eq.lambda);
    double gap;
    if (!r.attained) {
      gap = kUnbounded;  // no finite best response exists at this price
    } else {
      const double xi = std::max(0.0, eq.x[i]);
      gap = (u.eval(r.lo) - eq.lambda * r.lo) - (u.eval(xi) - eq.lambda * xi);
    }
    rep.optimality_gap[i] = gap;
    rep.max_optimality_gap = std::max(rep.max_optimality_gap, gap);
    rep.max_constraint_violation = std::max(rep.max_constraint_violation, -eq.x[i]);
  }

  if (model == StaticModel::sald) {
    double sum = 0.0;
    for (double v : eq.x) sum += v;
    rep.balance_residual = sum - C;
  } else {
    double esum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = (*eq.e)[i];
      esum += ei;
      rep.max_constraint_violation =
          std::max(rep.max_constraint_violation, eq.x[i] + ei - s.agents[i].a);
    }
    rep.balance_residual = esum;
    rep.lambda_nonnegative = eq.lambda >= 0.0;
  }

  rep.duality_gap = detail::welfare_duality_gap(s, eq.lambda, eq.x);
  rep.accepted = rep.max_optimality_gap <= tols.optimality_gap &&
                 std::abs(rep.balance_residual) <= tols.balance * std::max(1.0, std::abs(C)) &&
                 rep.max_constraint_violation <= tols.constraint &&
                 std::abs(rep.duality_gap) <= tols.duality_gap && rep.lambda_nonnegative;
  return rep;
}

struct SweepRow {
  double C = 0.0;
  double lambda = 0.0;
};

/// Clearing price as a function of network capacity. The per-agent resource
/// split does not move the price (only the total enters either balance
/// constraint), so a_i = C/n is used at every grid point.
inline std::vector<SweepRow> price_capacity_sweep(const std::vector<UtilityFunction>& utilities,
                                                  std::vector<double> C_values, StaticModel mode,
                                                  double tol = 1e-9, int max_iter = 200) {
  if (utilities.empty()) throw Error("sweep requires at least one utility");
  for (double C : C_values) {
    if (!(C > 0.0) || !std::isfinite(C)) throw Error("sweep capacities must be positive, finite");
  }
  std::sort(C_values.begin(), C_values.end());
  std::vector<SweepRow> rows;
  rows.reserve(C_values.size());
  for (double C : C_values) {
    StaticScenario s;
    for (const auto& u : utilities)
      s.agents.push_back({u, C / static_cast<double>(utilities.size())});
    const StaticEquilibrium eq =
        mode == StaticModel::sald ? solve_sald(s, tol, max_iter) : solve_saltd(s, tol, max_iter);
    rows.push_back({C, eq.lambda});
  }
  return rows;
}

}  // namespace eqkit
