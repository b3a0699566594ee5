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

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "eqkit/errors.hpp"
#include "eqkit/log.hpp"

namespace eqkit {

/// Linear agent y(t+1) = A y(t) + B u(t) with per-step utility
/// f(y, u) = y'R y + W y + u'Q u + K u, terminal utility
/// Phi(y) = y'R_term y + W_term y, and resource requirement h(u) = u'H u.
/// R, Q (and R_term) must be negative definite, H positive definite.
struct DynamicAgent {
  Eigen::MatrixXd A, B;
  Eigen::MatrixXd R, Q, H;
  Eigen::RowVectorXd W, K;
  Eigen::MatrixXd R_term;     // defaults to R when empty
  Eigen::RowVectorXd W_term;  // defaults to W when empty
  Eigen::VectorXd y0;
  std::vector<double> a;  // supply per step, length T

  int dim() const { return static_cast<int>(A.rows()); }
  const Eigen::MatrixXd& terminal_R() const { return R_term.size() > 0 ? R_term : R; }
  const Eigen::RowVectorXd& terminal_W() const { return W_term.size() > 0 ? W_term : W; }

  double resource_required(const Eigen::VectorXd& u) const { return u.dot(H * u); }
};

struct DynamicScenario {
  std::vector<DynamicAgent> agents;
  int T = 0;

  int dim() const { return agents.empty() ? 0 : agents.front().dim(); }
};

namespace detail {

inline bool negative_definite(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = -0.5 * (m + m.transpose());
  return Eigen::LLT<Eigen::MatrixXd>(sym).info() == Eigen::Success;
}

inline bool positive_definite(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return Eigen::LLT<Eigen::MatrixXd>(sym).info() == Eigen::Success;
}

}  // namespace detail

inline void validate_scenario(const DynamicScenario& s) {
  if (s.agents.empty()) throw Error("dynamic scenario requires at least one agent");
  if (s.T < 1) throw Error("horizon must be at least 1");
  const int m = s.dim();
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& ag = s.agents[i];
    const auto check_mm = [m, i](const Eigen::MatrixXd& mat, const char* name) {
      if (mat.rows() != m || mat.cols() != m)
        throw DimensionMismatch(std::string(name) + " of agent " + std::to_string(i + 1) +
                                " is not m x m");
    };
    check_mm(ag.A, "A");
    check_mm(ag.B, "B");
    check_mm(ag.R, "R");
    check_mm(ag.Q, "Q");
    check_mm(ag.H, "H");
    if (ag.W.size() != m || ag.K.size() != m || ag.y0.size() != m)
      throw DimensionMismatch("W/K/y0 of agent " + std::to_string(i + 1) + " has wrong length");
    if (static_cast<int>(ag.a.size()) != s.T)
      throw DimensionMismatch("supply sequence of agent " + std::to_string(i + 1) +
                              " must have length T");
    if (!detail::negative_definite(ag.R) || !detail::negative_definite(ag.Q) ||
        !detail::negative_definite(ag.terminal_R()))
      throw Error("R, Q and terminal weights must be negative definite (agent " +
                  std::to_string(i + 1) + ")");
    if (!detail::positive_definite(ag.H))
      throw Error("H must be positive definite (agent " + std::to_string(i + 1) + ")");
  }
  for (int t = 0; t < s.T; ++t) {
    double total = 0.0;
    for (const auto& ag : s.agents) total += ag.a[t];
    if (!(total > 0.0))
      throw InfeasibleScenario("total supply must be positive at every step (t=" +
                               std::to_string(t) + ")");
  }
}

/// Affine map from (y0, U) to the stacked trajectory: Y = P y0 + Qc U with
/// Qc block (t, s) = A^(t-1-s) B for s < t, zero otherwise.
struct CondensedDynamics {
  Eigen::MatrixXd P;   // (T+1)m x m
  Eigen::MatrixXd Qc;  // (T+1)m x Tm
};

inline CondensedDynamics condense(const DynamicAgent& agent, int T) {
  const int m = agent.dim();
  CondensedDynamics cd;
  cd.P = Eigen::MatrixXd::Zero((T + 1) * m, m);
  cd.Qc = Eigen::MatrixXd::Zero((T + 1) * m, T * m);
  cd.P.topRows(m) = Eigen::MatrixXd::Identity(m, m);
  for (int t = 1; t <= T; ++t) {
    cd.P.middleRows(t * m, m) = agent.A * cd.P.middleRows((t - 1) * m, m);
    cd.Qc.block(t * m, (t - 1) * m, m, m) = agent.B;
    for (int sidx = 0; sidx < t - 1; ++sidx) {
      cd.Qc.block(t * m, sidx * m, m, m) =
          agent.A * cd.Qc.block((t - 1) * m, sidx * m, m, m);
    }
  }
  return cd;
}

/// Applies the recursion directly; U is the stacked control vector (mT).
inline Eigen::VectorXd rollout(const DynamicAgent& agent, const Eigen::VectorXd& U, int T) {
  const int m = agent.dim();
  if (U.size() != T * m) throw DimensionMismatch("stacked control vector must have length m*T");
  Eigen::VectorXd Y((T + 1) * m);
  Y.head(m) = agent.y0;
  for (int t = 0; t < T; ++t)
    Y.segment((t + 1) * m, m) = agent.A * Y.segment(t * m, m) + agent.B * U.segment(t * m, m);
  return Y;
}

/// Utility accumulated along the trajectory induced by U (no trade income).
inline double agent_utility(const DynamicAgent& agent, const Eigen::VectorXd& U, int T) {
  const int m = agent.dim();
  const Eigen::VectorXd Y = rollout(agent, U, T);
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const auto y = Y.segment(t * m, m);
    const auto u = U.segment(t * m, m);
    total += y.dot(agent.R * y) + agent.W.dot(y) + u.dot(agent.Q * u) + agent.K.dot(u);
  }
  const auto yT = Y.tail(m);
  total += yT.dot(agent.terminal_R() * yT) + agent.terminal_W().dot(yT);
  return total;
}

/// Combined payoff of a control/trade profile at prices lambda.
inline double agent_payoff(const DynamicAgent& agent, const Eigen::VectorXd& U,
                           const Eigen::VectorXd& e, const Eigen::VectorXd& lambda, int T) {
  if (e.size() != T || lambda.size() != T)
    throw DimensionMismatch("trade/price vectors must have length T");
  return agent_utility(agent, U, T) + lambda.dot(e);
}

struct AgentBestResponse {
  Eigen::VectorXd U;  // mT
  Eigen::VectorXd e;  // T
  double payoff = 0.0;
};

namespace detail {

// Horizon quadratic for one agent after eliminating the dynamics and the
// (tight) trade variables: J(U) = U' M(lambda) U + c'U + d0 + lambda'a with
// M(lambda) = M_base - blockdiag(lambda_t * Hsym).
struct AgentHorizonQP {
  CondensedDynamics cd;
  Eigen::MatrixXd M_base;
  Eigen::VectorXd c;
  double d0 = 0.0;
  Eigen::MatrixXd H_sym;
};

inline AgentHorizonQP build_horizon_qp(const DynamicAgent& agent, int T) {
  const int m = agent.dim();
  AgentHorizonQP qp;
  qp.cd = condense(agent, T);
  qp.H_sym = 0.5 * (agent.H + agent.H.transpose());
  const Eigen::MatrixXd R_sym = 0.5 * (agent.R + agent.R.transpose());
  const Eigen::MatrixXd Rt_sym = 0.5 * (agent.terminal_R() + agent.terminal_R().transpose());
  const Eigen::MatrixXd Q_sym = 0.5 * (agent.Q + agent.Q.transpose());

  qp.M_base = Eigen::MatrixXd::Zero(T * m, T * m);
  qp.c = Eigen::VectorXd::Zero(T * m);
  qp.d0 = 0.0;
  for (int t = 0; t <= T; ++t) {
    const Eigen::MatrixXd& Rt = t == T ? Rt_sym : R_sym;
    const Eigen::RowVectorXd& Wt = t == T ? agent.terminal_W() : agent.W;
    const auto Qc_t = qp.cd.Qc.middleRows(t * m, m);
    const auto P_t = qp.cd.P.middleRows(t * m, m);
    const Eigen::VectorXd py = P_t * agent.y0;
    qp.M_base.noalias() += Qc_t.transpose() * Rt * Qc_t;
    qp.c.noalias() += Qc_t.transpose() * (2.0 * (Rt * py) + Wt.transpose());
    qp.d0 += py.dot(Rt * py) + Wt.dot(py);
  }
  for (int t = 0; t < T; ++t) {
    qp.M_base.block(t * m, t * m, m, m) += Q_sym;
    qp.c.segment(t * m, m) += agent.K.transpose();
  }
  return qp;
}

inline AgentBestResponse solve_best_response(const DynamicAgent& agent, const AgentHorizonQP& qp,
                                              const Eigen::VectorXd& lambda, int T) {
  const int m = agent.dim();
  Eigen::MatrixXd neg2M = -2.0 * qp.M_base;
  for (int t = 0; t < T; ++t)
    neg2M.block(t * m, t * m, m, m) += 2.0 * lambda[t] * qp.H_sym;

  Eigen::LLT<Eigen::MatrixXd> llt(neg2M);
  if (llt.info() != Eigen::Success)
    throw SingularSystem("negated best-response Hessian is not positive definite");

  AgentBestResponse br;
  br.U = llt.solve(qp.c);
  br.e.resize(T);
  double lam_terms = 0.0;
  for (int t = 0; t < T; ++t) {
    const auto u = br.U.segment(t * m, m);
    br.e[t] = agent.a[t] - u.dot(agent.H * u);
    lam_terms += lambda[t] * agent.a[t];
  }
  // J(U*) = 0.5 c'U* + d at the stationary point.
  br.payoff = 0.5 * qp.c.dot(br.U) + qp.d0 + lam_terms;
  return br;
}

}  // namespace detail

/// Payoff-maximizing control and trade profile of one agent at given
/// nonnegative prices. The trade constraint is taken tight,
/// e(t) = a(t) - h(u(t)), which is optimal for lambda_t > 0 and one of the
/// maximizers at lambda_t = 0; the remaining problem is an unconstrained
/// concave horizon quadratic solved by one symmetric factorization.
inline AgentBestResponse agent_best_response(const DynamicAgent& agent,
                                             const Eigen::VectorXd& lambda, int T) {
  if (lambda.size() != T) throw DimensionMismatch("price vector must have length T");
  for (int t = 0; t < T; ++t)
    if (lambda[t] < 0.0) throw Error("agent best response requires lambda >= 0");
  return detail::solve_best_response(agent, detail::build_horizon_qp(agent, T), lambda, T);
}

struct DynamicEquilibrium {
  Eigen::VectorXd lambda;          // T
  std::vector<Eigen::VectorXd> U;  // per agent, stacked mT
  std::vector<Eigen::VectorXd> E;  // per agent, length T
  std::vector<Eigen::VectorXd> Y;  // per agent, stacked (T+1)m, derived
  double residual = 0.0;           // max_t |sum_i e_i(t)|
  int iterations = 0;
  bool converged = false;
  double welfare = 0.0;     // sum of agent utilities at the returned profile
  double dual_value = 0.0;  // sum of best-response payoffs at the final prices
};

namespace detail {

// At zero-price steps the per-agent trades are indeterminate below their
// caps; shrink the sellers proportionally so the step balances (buyers keep
// their trades). Same rule as the static trading model.
inline void reconcile_zero_price_steps(const Eigen::VectorXd& lambda,
                                       std::vector<Eigen::VectorXd>& E) {
  const int T = static_cast<int>(lambda.size());
  const std::size_t n = E.size();
  for (int t = 0; t < T; ++t) {
    if (lambda[t] > 0.0) continue;
    double buy = 0.0, sell = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = E[i][t];
      if (ei < 0.0)
        buy -= ei;
      else
        sell += ei;
    }
    if (sell <= 0.0 || buy > sell) continue;  // deficits stay visible in the residual
    const double shrink = buy / sell;
    for (std::size_t i = 0; i < n; ++i)
      if (E[i][t] > 0.0) E[i][t] *= shrink;
  }
}

inline double max_step_residual(const std::vector<Eigen::VectorXd>& E, int T) {
  double worst = 0.0;
  for (int t = 0; t < T; ++t) {
    double r = 0.0;
    for (const auto& e : E) r += e[t];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace detail

/// Dual decomposition for the dynamic welfare problem: projected subgradient
/// on the per-step price vector, per-agent condensed best responses inside.
/// Steps follow alpha_0/sqrt(k) with alpha_0 = step_scale/(n * max_t total
/// supply). Returns the primal with the smaller balance residual between the
/// final iterate and the trailing-window average (window: last 10% of
/// iterations); non-convergence is reported, not thrown.
inline DynamicEquilibrium solve_daltd(const DynamicScenario& s, double tol = 1e-4,
                                      int max_iter = 50000, double step_scale = 25.0) {
  validate_scenario(s);
  const int T = s.T;
  const int m = s.dim();
  const std::size_t n = s.agents.size();

  double max_supply = 0.0;
  for (int t = 0; t < T; ++t) {
    double total = 0.0;
    for (const auto& ag : s.agents) total += ag.a[t];
    max_supply = std::max(max_supply, total);
  }
  const double alpha0 = step_scale / (static_cast<double>(n) * max_supply);

  std::vector<detail::AgentHorizonQP> qps;
  qps.reserve(n);
  for (const auto& ag : s.agents) qps.push_back(detail::build_horizon_qp(ag, T));

  const int ring_cap = std::min(std::max(1, (max_iter + 9) / 10), 20000);
  Eigen::MatrixXd ring_U(static_cast<int>(n) * m * T, ring_cap);
  Eigen::MatrixXd ring_E(static_cast<int>(n) * T, ring_cap);

  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(T);
  std::vector<Eigen::VectorXd> U(n), E(n);
  Eigen::VectorXd residual(T);
  double dual_value = 0.0;

  int k = 0;
  bool converged = false;
  while (k < max_iter) {
    ++k;
    residual.setZero();
    dual_value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto br = detail::solve_best_response(s.agents[i], qps[i], lambda, T);
      residual += br.e;
      dual_value += br.payoff;
      U[i] = std::move(br.U);
      E[i] = std::move(br.e);
    }

    const int slot = (k - 1) % ring_cap;
    for (std::size_t i = 0; i < n; ++i) {
      ring_U.col(slot).segment(static_cast<int>(i) * m * T, m * T) = U[i];
      ring_E.col(slot).segment(static_cast<int>(i) * T, T) = E[i];
    }

    double eff = 0.0;
    for (int t = 0; t < T; ++t) {
      const double r = residual[t];
      eff = std::max(eff, lambda[t] > 0.0 ? std::abs(r) : std::max(0.0, -r));
    }
    if (eff <= tol) {
      converged = true;
      break;
    }
    if (k % 25 == 0) log_debug("daltd iter ", k, ": residual=", eff, " dual=", dual_value);
    if (k == max_iter) break;  // keep the returned prices consistent with U, E

    const double alpha = alpha0 / std::sqrt(static_cast<double>(k));
    for (int t = 0; t < T; ++t) lambda[t] = std::max(0.0, lambda[t] - alpha * residual[t]);
  }

  // Candidate primals: final iterate and the trailing-window average.
  std::vector<Eigen::VectorXd> U_avg(n), E_avg(n);
  {
    const int window = std::min(std::max(1, (k + 9) / 10), std::min(k, ring_cap));
    Eigen::VectorXd sum_U = Eigen::VectorXd::Zero(ring_U.rows());
    Eigen::VectorXd sum_E = Eigen::VectorXd::Zero(ring_E.rows());
    for (int w = 0; w < window; ++w) {
      const int slot = (k - 1 - w) % ring_cap;
      sum_U += ring_U.col(slot);
      sum_E += ring_E.col(slot);
    }
    sum_U /= static_cast<double>(window);
    sum_E /= static_cast<double>(window);
    for (std::size_t i = 0; i < n; ++i) {
      U_avg[i] = sum_U.segment(static_cast<int>(i) * m * T, m * T);
      E_avg[i] = sum_E.segment(static_cast<int>(i) * T, T);
    }
  }

  detail::reconcile_zero_price_steps(lambda, E);
  detail::reconcile_zero_price_steps(lambda, E_avg);
  const double res_last = detail::max_step_residual(E, T);
  const double res_avg = detail::max_step_residual(E_avg, T);

  DynamicEquilibrium eq;
  eq.lambda = lambda;
  if (res_avg < res_last) {
    eq.U = std::move(U_avg);
    eq.E = std::move(E_avg);
    eq.residual = res_avg;
  } else {
    eq.U = std::move(U);
    eq.E = std::move(E);
    eq.residual = res_last;
  }
  eq.iterations = k;
  eq.converged = converged && eq.residual <= tol;
  eq.dual_value = dual_value;
  eq.Y.resize(n);
  eq.welfare = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    eq.Y[i] = rollout(s.agents[i], eq.U[i], T);
    eq.welfare += agent_utility(s.agents[i], eq.U[i], T);
  }
  log_info("solve_daltd: iterations=", eq.iterations, " residual=", eq.residual,
           " converged=", eq.converged);
  return eq;
}

struct DynamicVerifyTolerances {
  double payoff_gap = 1e-3;  // relative: gap <= payoff_gap * (1 + |payoff|)
  double residual = 1e-4;
  double constraint = 1e-6;
};

struct DynamicVerificationReport {
  std::vector<double> payoff_gap;       // per agent, absolute
  double max_relative_payoff_gap = 0.0;
  std::vector<double> step_residual;    // per step, sum of trades
  double max_step_residual = 0.0;
  double max_trade_violation = 0.0;     // e_i(t) - (a_i(t) - h(u_i(t)))
  std::vector<double> trade_multipliers;  // of the per-agent trade caps; equal
                                          // to the prices at a tight constraint
  bool lambda_nonnegative = true;
  bool accepted = false;
};

/// Definition-level check of a dynamic equilibrium: fresh best responses at
/// the claimed prices against the claimed profiles, per-step balance, trade
/// feasibility, and price nonnegativity.
inline DynamicVerificationReport verify_dynamic_equilibrium(
    const DynamicScenario& s, const DynamicEquilibrium& eq,
    const DynamicVerifyTolerances& tols = {}) {
  validate_scenario(s);
  const int T = s.T;
  const int m = s.dim();
  const std::size_t n = s.agents.size();
  if (eq.U.size() != n || eq.E.size() != n || eq.lambda.size() != T)
    throw DimensionMismatch("equilibrium profiles do not match the scenario");

  DynamicVerificationReport rep;
  rep.payoff_gap.resize(n);
  for (int t = 0; t < T; ++t)
    if (eq.lambda[t] < 0.0) rep.lambda_nonnegative = false;

  const Eigen::VectorXd lambda_clamped = eq.lambda.cwiseMax(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (eq.U[i].size() != m * T || eq.E[i].size() != T)
      throw DimensionMismatch("profile of agent " + std::to_string(i + 1) + " has wrong length");
    const auto br = agent_best_response(s.agents[i], lambda_clamped, T);
    const double claimed = agent_payoff(s.agents[i], eq.U[i], eq.E[i], lambda_clamped, T);
    const double gap = br.payoff - claimed;
    rep.payoff_gap[i] = gap;
    rep.max_relative_payoff_gap =
        std::max(rep.max_relative_payoff_gap, gap / (1.0 + std::abs(br.payoff)));
    for (int t = 0; t < T; ++t) {
      const auto u = eq.U[i].segment(t * m, m);
      const double cap = s.agents[i].a[t] - s.agents[i].resource_required(u);
      rep.max_trade_violation = std::max(rep.max_trade_violation, eq.E[i][t] - cap);
    }
  }

  rep.step_residual.assign(T, 0.0);
  rep.trade_multipliers.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += eq.E[i][t];
    rep.step_residual[t] = r;
    rep.max_step_residual = std::max(rep.max_step_residual, std::abs(r));
    rep.trade_multipliers[t] = lambda_clamped[t];
  }

  rep.accepted = rep.lambda_nonnegative && rep.max_relative_payoff_gap <= tols.payoff_gap &&
                 rep.max_step_residual <= tols.residual &&
                 rep.max_trade_violation <= tols.constraint;
  return rep;
}

}  // namespace eqkit
