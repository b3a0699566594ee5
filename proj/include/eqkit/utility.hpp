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
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "eqkit/errors.hpp"

namespace eqkit {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Tolerance for slope comparisons on tabulated piecewise-linear utilities.
inline constexpr double kSlopeTol = 1e-12;

/// Argmax set of x -> f(x) - lambda*x over x >= 0.
///
/// `hi == kUnbounded` marks a response ray. `attained` distinguishes the two
/// ray cases: true means every point of [lo, hi] is a maximizer (indifference
/// segment or ray), false means the payoff is unbounded along the ray and no
/// finite maximizer exists. Bounded intervals always have attained == true.
struct ResponseInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool attained = true;

  bool unbounded() const { return std::isinf(hi); }
  bool singleton() const { return lo == hi; }
};

enum class UtilityKind { quadratic, capped_linear, piecewise_linear };

/// Concave agent utility over loads x >= 0. Three families:
///
///   quadratic        f(x) = -b/2 x^2 + k x,        b >= 0, k >= 0
///   capped_linear    f(x) = min(k x, beta),        k > 0, beta > 0
///   piecewise_linear tabulated breakpoints (x_j, f_j) with x_0 = 0 and
///                    nonincreasing segment slopes; the final slope extends
///                    beyond the last breakpoint.
///
/// Values are immutable after construction; all member functions are pure.
class UtilityFunction {
 public:
  UtilityFunction() = default;  // quadratic(0, 0), the zero utility

  static UtilityFunction quadratic(double b, double k) {
    UtilityFunction u;
    u.kind_ = UtilityKind::quadratic;
    u.b_ = b;
    u.k_ = k;
    return u;
  }

  static UtilityFunction capped_linear(double k, double beta) {
    UtilityFunction u;
    u.kind_ = UtilityKind::capped_linear;
    u.k_ = k;
    u.beta_ = beta;
    return u;
  }

  static UtilityFunction piecewise_linear(std::vector<std::array<double, 2>> points) {
    if (points.size() < 2) throw Error("piecewise_linear needs at least two breakpoints");
    if (points.front()[0] != 0.0) throw Error("piecewise_linear must start at x = 0");
    for (std::size_t j = 1; j < points.size(); ++j) {
      if (!(points[j][0] > points[j - 1][0]))
        throw Error("piecewise_linear breakpoints must be strictly increasing in x");
    }
    UtilityFunction u;
    u.kind_ = UtilityKind::piecewise_linear;
    u.points_ = std::move(points);
    return u;
  }

  UtilityKind kind() const { return kind_; }
  double b() const { return b_; }
  double k() const { return k_; }
  double beta() const { return beta_; }
  const std::vector<std::array<double, 2>>& points() const { return points_; }

  double eval(double x) const {
    if (x < 0.0) throw NegativeLoad("utility evaluated at negative load");
    switch (kind_) {
      case UtilityKind::quadratic:
        return -0.5 * b_ * x * x + k_ * x;
      case UtilityKind::capped_linear:
        return std::min(k_ * x, beta_);
      case UtilityKind::piecewise_linear: {
        const std::size_t last = points_.size() - 1;
        if (x >= points_[last][0])
          return points_[last][1] + segment_slope(last) * (x - points_[last][0]);
        std::size_t j = 1;
        while (points_[j][0] < x) ++j;
        return points_[j - 1][1] + segment_slope(j) * (x - points_[j - 1][0]);
      }
    }
    return 0.0;  // unreachable
  }

  /// Right derivative of f at x >= 0 (constant slope of the segment to the
  /// right; for quadratics the true derivative).
  double marginal(double x) const {
    if (x < 0.0) throw NegativeLoad("marginal queried at negative load");
    switch (kind_) {
      case UtilityKind::quadratic:
        return k_ - b_ * x;
      case UtilityKind::capped_linear:
        return x < beta_ / k_ ? k_ : 0.0;
      case UtilityKind::piecewise_linear: {
        const std::size_t last = points_.size() - 1;
        if (x >= points_[last][0]) return segment_slope(last);
        std::size_t j = 1;
        while (points_[j][0] <= x) ++j;
        return segment_slope(j);
      }
    }
    return 0.0;  // unreachable
  }

  double marginal_at_zero() const { return marginal(0.0); }

  /// Full argmax set of f(x) - lambda*x over x >= 0.
  ResponseInterval best_response(double lambda) const {
    switch (kind_) {
      case UtilityKind::quadratic: {
        if (b_ > 0.0) {
          const double x = std::max(0.0, (k_ - lambda) / b_);
          return {x, x, true};
        }
        // b == 0 is linear utility: objective slope is k - lambda everywhere.
        if (lambda > k_) return {0.0, 0.0, true};
        if (lambda == k_) return {0.0, kUnbounded, true};
        return {0.0, kUnbounded, false};
      }
      case UtilityKind::capped_linear: {
        const double kink = beta_ / k_;
        if (lambda > k_) return {0.0, 0.0, true};
        if (lambda == k_) return {0.0, kink, true};
        if (lambda > 0.0) return {kink, kink, true};
        if (lambda == 0.0) return {kink, kUnbounded, true};
        return {kink, kUnbounded, false};
      }
      case UtilityKind::piecewise_linear:
        return piecewise_best_response(lambda);
    }
    return {};  // unreachable
  }

  /// True iff the family parameters describe a concave admissible utility:
  /// quadratic b >= 0 and k >= 0, capped_linear k > 0 and beta > 0,
  /// piecewise_linear nonincreasing slopes.
  bool concave() const {
    switch (kind_) {
      case UtilityKind::quadratic:
        return b_ >= 0.0 && k_ >= 0.0;
      case UtilityKind::capped_linear:
        return k_ > 0.0 && beta_ > 0.0;
      case UtilityKind::piecewise_linear: {
        for (std::size_t j = 2; j < points_.size(); ++j) {
          if (segment_slope(j) > segment_slope(j - 1) + kSlopeTol) return false;
        }
        return true;
      }
    }
    return false;  // unreachable
  }

  /// Prices at which the demand correspondence of this utility jumps. The
  /// market-clearing price of any scenario is either a point of continuous
  /// demand or one of these.
  std::vector<double> kink_prices() const {
    switch (kind_) {
      case UtilityKind::quadratic:
        return b_ > 0.0 ? std::vector<double>{} : std::vector<double>{k_};
      case UtilityKind::capped_linear:
        return {0.0, k_};
      case UtilityKind::piecewise_linear: {
        std::vector<double> s;
        s.reserve(points_.size() - 1);
        for (std::size_t j = 1; j < points_.size(); ++j) s.push_back(segment_slope(j));
        return s;
      }
    }
    return {};  // unreachable
  }

 private:
  double segment_slope(std::size_t j) const {
    return (points_[j][1] - points_[j - 1][1]) / (points_[j][0] - points_[j - 1][0]);
  }

  ResponseInterval piecewise_best_response(double lambda) const {
    const std::size_t nseg = points_.size() - 1;  // segment j covers [x_{j-1}, x_j]
    const double tail = segment_slope(nseg);      // also the extension slope
    if (lambda < tail - kSlopeTol) return {0.0, kUnbounded, false};

    // Nonincreasing slopes: payoff rises while s_j > lambda, is flat while
    // s_j == lambda, falls once s_j < lambda.
    double lo = 0.0;
    double hi = 0.0;
    bool lo_set = false;
    for (std::size_t j = 1; j <= nseg; ++j) {
      const double s = segment_slope(j);
      if (!lo_set && s <= lambda + kSlopeTol) {
        lo = points_[j - 1][0];
        lo_set = true;
      }
      if (s >= lambda - kSlopeTol) hi = points_[j][0];
    }
    if (!lo_set) lo = points_[nseg][0];        // every tabulated slope above lambda
    if (tail >= lambda - kSlopeTol) {          // flat or rising extension
      return {lo, kUnbounded, true};
    }
    return {lo, std::max(lo, hi), true};
  }

  UtilityKind kind_ = UtilityKind::quadratic;
  double b_ = 0.0;
  double k_ = 0.0;
  double beta_ = 0.0;
  std::vector<std::array<double, 2>> points_;
};

}  // namespace eqkit
