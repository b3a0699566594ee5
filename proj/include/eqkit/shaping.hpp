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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eqkit/errors.hpp"
#include "eqkit/static_equilibrium.hpp"
#include "eqkit/utility.hpp"

namespace eqkit {

/// Parameter box for socially admissible quadratic utilities together with
/// the price cap and the network characteristics it must certify against.
struct ShapingBounds {
  double k_min = 0.0;
  double k_max = 0.0;
  double b_min = 0.0;
  double b_max = 0.0;
  double lambda_dagger = 0.0;  // highest socially acceptable price
  int n = 0;
  double C = 0.0;
};

struct QuadraticProfile {
  std::vector<double> k;
  std::vector<double> b;

  std::size_t size() const { return k.size(); }
};

inline StaticScenario scenario_from_profile(const QuadraticProfile& p, double C) {
  StaticScenario s;
  const double share = C / static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    s.agents.push_back({UtilityFunction::quadratic(p.b[i], p.k[i]), share});
  return s;
}

/// Closed-form clearing price for all-quadratic scenarios plus its validity
/// flag. The closed form assumes every agent interior (x_i > 0 active), which
/// holds iff 0 <= lambda <= min_i k_i; outside that region the bisection
/// solver is authoritative and its price is reported alongside.
struct PriceResult {
  double closed_form = 0.0;
  bool interior_valid = false;
  std::optional<double> solver_lambda;  // set when interior_valid is false

  double price() const { return interior_valid ? closed_form : *solver_lambda; }
};

inline double quadratic_price_closed_form(const QuadraticProfile& p, double C) {
  if (p.k.size() != p.b.size() || p.size() == 0)
    throw DimensionMismatch("profile k/b lengths disagree or empty");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.b[i] <= 0.0) throw ZeroCurvature("closed-form price needs b_i > 0");
    num += p.k[i] / p.b[i];
    den += 1.0 / p.b[i];
  }
  return (num - C) / den;
}

inline PriceResult quadratic_price(const QuadraticProfile& p, double C) {
  PriceResult r;
  r.closed_form = quadratic_price_closed_form(p, C);
  const double k_min = *std::min_element(p.k.begin(), p.k.end());
  r.interior_valid = r.closed_form >= 0.0 && r.closed_form <= k_min;
  if (!r.interior_valid) r.solver_lambda = solve_sald(scenario_from_profile(p, C)).lambda;
  return r;
}

struct AdmissibilityCondition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs-side margin, nonnegative when the condition holds
  bool holds = false;
};

struct AdmissibilityReport {
  bool admissible = false;
  std::vector<AdmissibilityCondition> conditions;
};

/// Membership test for the admissible set of bound boxes: (i) guarantees a
/// nonnegative price, (ii) keeps every agent interior, (iii) enforces the
/// price cap; all three over every profile drawn from the box.
inline AdmissibilityReport is_admissible(const ShapingBounds& b) {
  if (!(b.k_min <= b.k_max) || !(0.0 < b.b_min) || !(b.b_min <= b.b_max) ||
      !(b.lambda_dagger > 0.0) || b.n < 1)
    throw Error("shaping bounds violate basic invariants");
  const double n = static_cast<double>(b.n);
  AdmissibilityReport rep;
  auto push = [&rep](std::string name, double lhs, double rhs, bool geq) {
    AdmissibilityCondition c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = geq ? lhs - rhs : rhs - lhs;
    c.holds = c.slack >= 0.0;
    rep.conditions.push_back(std::move(c));
  };
  push("n*k_min/b_max >= C", n * b.k_min / b.b_max, b.C, true);
  push("-n*k_min/b_max + n*k_max/b_min <= C", -n * b.k_min / b.b_max + n * b.k_max / b.b_min, b.C,
       false);
  push("-n*lambda_dagger/b_max + n*k_max/b_min <= C",
       -n * b.lambda_dagger / b.b_max + n * b.k_max / b.b_min, b.C, false);
  rep.admissible = rep.conditions[0].holds && rep.conditions[1].holds && rep.conditions[2].holds;
  return rep;
}

struct WorstCaseCertificate {
  double worst_lambda = 0.0;
  QuadraticProfile witness;
  bool certified = false;  // worst_lambda <= lambda_dagger
  bool exact = false;      // corner enumeration ran (n <= 20)
  int samples = 0;
};

/// Maximizes the clearing price over profiles in the bounds box. The price is
/// nondecreasing in every k_i, so k is pinned at k_max; it is monotone in
/// each 1/b_i with sign k_i - lambda, so the b-maximum sits at a corner of
/// the box and corner enumeration is exact for n <= 20. Optional uniform box
/// samples are added on top (and are the only search for larger n).
inline WorstCaseCertificate certify_worst_case_price(const ShapingBounds& bounds, int budget = 0,
                                                     std::uint64_t seed = 0) {
  const int n = bounds.n;
  if (n < 1) throw Error("worst-case certification needs n >= 1");
  WorstCaseCertificate cert;
  cert.worst_lambda = -kUnbounded;

  auto consider = [&cert, &bounds](const QuadraticProfile& p) {
    const double lam = quadratic_price_closed_form(p, bounds.C);
    if (lam > cert.worst_lambda) {
      cert.worst_lambda = lam;
      cert.witness = p;
    }
  };

  if (n <= 20) {
    cert.exact = true;
    QuadraticProfile p;
    p.k.assign(n, bounds.k_max);
    p.b.assign(n, 0.0);
    const std::uint64_t corners = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < corners; ++mask) {
      for (int i = 0; i < n; ++i) p.b[i] = (mask >> i) & 1 ? bounds.b_max : bounds.b_min;
      consider(p);
    }
  }

  if (budget > 0 || !cert.exact) {
    const int samples = budget > 0 ? budget : 10000;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uk(bounds.k_min, bounds.k_max);
    std::uniform_real_distribution<double> ub(bounds.b_min, bounds.b_max);
    QuadraticProfile p;
    p.k.resize(n);
    p.b.resize(n);
    for (int t = 0; t < samples; ++t) {
      for (int i = 0; i < n; ++i) p.k[i] = uk(rng);
      for (int i = 0; i < n; ++i) p.b[i] = ub(rng);
      consider(p);
    }
    cert.samples = samples;
  }

  cert.certified = cert.worst_lambda <= bounds.lambda_dagger;
  return cert;
}

/// Price monotonicity along the componentwise order on k (same curvature).
inline bool monotonicity_check(const QuadraticProfile& p, const QuadraticProfile& p_upper,
                               double C) {
  if (p.size() != p_upper.size() || p.b != p_upper.b)
    throw DimensionMismatch("monotonicity check requires matching b vectors");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.k[i] > p_upper.k[i])
      throw PartialOrderViolated("k is not componentwise below k'");
  }
  return quadratic_price_closed_form(p, C) <= quadratic_price_closed_form(p_upper, C) + 1e-12;
}

struct ContourAxis {
  bool is_b = false;  // otherwise a k parameter
  int index = 0;      // agent index, zero-based
  double min = 0.0;
  double max = 0.0;

  std::string label() const { return (is_b ? "b" : "k") + std::to_string(index + 1); }
};

// Parses "k1".."kn" / "b1".."bn" (one-based agent indices).
inline ContourAxis parse_axis_param(const std::string& name, double lo, double hi,
                                    std::size_t n_agents) {
  if (name.size() < 2 || (name[0] != 'k' && name[0] != 'b'))
    throw Error("axis parameter must look like k1 or b2");
  const int idx = std::stoi(name.substr(1)) - 1;
  if (idx < 0 || static_cast<std::size_t>(idx) >= n_agents)
    throw Error("axis parameter index out of range: " + name);
  if (!(lo < hi)) throw Error("axis range must satisfy min < max");
  return {name[0] == 'b', idx, lo, hi};
}

struct ContourResult {
  ContourAxis axis1, axis2;
  std::vector<double> ticks1, ticks2;
  std::vector<std::vector<double>> values;  // values[i][j] at (ticks1[i], ticks2[j])
};

/// Clearing-price surface over two free profile parameters; closed form with
/// bisection fallback outside the interior-valid region.
inline ContourResult contour_sweep(QuadraticProfile profile, const ContourAxis& axis1,
                                   const ContourAxis& axis2, int grid, double C) {
  if (grid < 2) throw Error("contour grid needs at least 2 points per axis");
  if (axis1.is_b == axis2.is_b && axis1.index == axis2.index)
    throw Error("contour axes must be distinct parameters");
  ContourResult res;
  res.axis1 = axis1;
  res.axis2 = axis2;
  auto ticks = [grid](const ContourAxis& ax) {
    std::vector<double> t(grid);
    for (int i = 0; i < grid; ++i)
      t[i] = ax.min + (ax.max - ax.min) * static_cast<double>(i) / (grid - 1);
    return t;
  };
  res.ticks1 = ticks(axis1);
  res.ticks2 = ticks(axis2);
  auto set_param = [&profile](const ContourAxis& ax, double v) {
    (ax.is_b ? profile.b : profile.k)[ax.index] = v;
  };
  res.values.assign(grid, std::vector<double>(grid, 0.0));
  for (int i = 0; i < grid; ++i) {
    set_param(axis1, res.ticks1[i]);
    for (int j = 0; j < grid; ++j) {
      set_param(axis2, res.ticks2[j]);
      res.values[i][j] = quadratic_price(profile, C).price();
    }
  }
  return res;
}

}  // namespace eqkit
