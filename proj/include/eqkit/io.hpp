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

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqkit/dynamic_equilibrium.hpp"
#include "eqkit/errors.hpp"
#include "eqkit/oracle.hpp"
#include "eqkit/shaping.hpp"
#include "eqkit/static_equilibrium.hpp"
#include "eqkit/utility.hpp"

namespace eqkit::io {

using nlohmann::json;

namespace detail {

inline const json& require(const json& j, const std::string& field, const std::string& context) {
  const auto it = j.find(field);
  if (it == j.end()) throw SchemaError(context + ": missing field \"" + field + "\"");
  return *it;
}

inline double require_number(const json& j, const std::string& field, const std::string& context) {
  const json& v = require(j, field, context);
  if (!v.is_number()) throw SchemaError(context + ": field \"" + field + "\" must be a number");
  return v.get<double>();
}

inline std::vector<double> number_list(const json& v, const std::string& context) {
  if (!v.is_array()) throw SchemaError(context + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(context + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Utility functions
// ---------------------------------------------------------------------------

inline json to_json(const UtilityFunction& u) {
  switch (u.kind()) {
    case UtilityKind::quadratic:
      return {{"type", "quadratic"}, {"b", u.b()}, {"k", u.k()}};
    case UtilityKind::capped_linear:
      return {{"type", "capped_linear"}, {"k", u.k()}, {"beta", u.beta()}};
    case UtilityKind::piecewise_linear: {
      json pts = json::array();
      for (const auto& p : u.points()) pts.push_back({p[0], p[1]});
      return {{"type", "piecewise_linear"}, {"points", pts}};
    }
  }
  throw Error("unknown utility kind");
}

inline UtilityFunction utility_from_json(const json& j, const std::string& context = "utility") {
  const json& type = detail::require(j, "type", context);
  const std::string t = type.is_string() ? type.get<std::string>() : "";
  if (t == "quadratic") {
    return UtilityFunction::quadratic(detail::require_number(j, "b", context),
                                      detail::require_number(j, "k", context));
  }
  if (t == "capped_linear") {
    return UtilityFunction::capped_linear(detail::require_number(j, "k", context),
                                          detail::require_number(j, "beta", context));
  }
  if (t == "piecewise_linear") {
    const json& pts = detail::require(j, "points", context);
    if (!pts.is_array()) throw SchemaError(context + ": points must be an array of [x, f] pairs");
    std::vector<std::array<double, 2>> points;
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw SchemaError(context + ": points must be an array of [x, f] pairs");
      points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    try {
      return UtilityFunction::piecewise_linear(std::move(points));
    } catch (const Error& e) {
      throw SchemaError(context + ": " + e.what());
    }
  }
  throw SchemaError(context + ": unknown utility type \"" + t + "\"");
}

// ---------------------------------------------------------------------------
// Static scenarios and equilibria
// ---------------------------------------------------------------------------

inline json to_json(const StaticScenario& s) {
  json agents = json::array();
  for (const auto& ag : s.agents) agents.push_back({{"utility", to_json(ag.utility)}, {"a", ag.a}});
  return {{"agents", agents}};
}

inline StaticScenario static_scenario_from_json(const json& root,
                                                const std::string& context = "scenario") {
  const json& j = root.contains("scenario") ? root.at("scenario") : root;
  const json& agents = detail::require(j, "agents", context);
  if (!agents.is_array() || agents.empty())
    throw SchemaError(context + ": agents must be a non-empty array");
  StaticScenario s;
  int i = 0;
  for (const auto& aj : agents) {
    const std::string ctx = context + ".agents[" + std::to_string(i++) + "]";
    AgentSpec spec;
    spec.utility = utility_from_json(detail::require(aj, "utility", ctx), ctx + ".utility");
    spec.a = detail::require_number(aj, "a", ctx);
    if (spec.a < 0.0) throw SchemaError(ctx + ": resource a must be nonnegative");
    s.agents.push_back(std::move(spec));
  }
  return s;
}

inline json to_json(const StaticEquilibrium& eq) {
  json j = {{"lambda", eq.lambda},
            {"x", eq.x},
            {"duality_gap", eq.duality_gap},
            {"balance_residual", eq.balance_residual}};
  if (eq.e) j["e"] = *eq.e;
  return j;
}

inline StaticEquilibrium static_equilibrium_from_json(const json& j,
                                                      const std::string& context = "equilibrium") {
  StaticEquilibrium eq;
  eq.lambda = detail::require_number(j, "lambda", context);
  eq.x = detail::number_list(detail::require(j, "x", context), context + ".x");
  if (j.contains("e")) eq.e = detail::number_list(j.at("e"), context + ".e");
  if (j.contains("duality_gap")) eq.duality_gap = j.at("duality_gap").get<double>();
  if (j.contains("balance_residual")) eq.balance_residual = j.at("balance_residual").get<double>();
  return eq;
}

inline json to_json(const VerificationReport& rep) {
  return {{"optimality_gap", rep.optimality_gap},
          {"max_optimality_gap", rep.max_optimality_gap},
          {"balance_residual", rep.balance_residual},
          {"max_constraint_violation", rep.max_constraint_violation},
          {"duality_gap", rep.duality_gap},
          {"lambda_nonnegative", rep.lambda_nonnegative},
          {"accepted", rep.accepted}};
}

// ---------------------------------------------------------------------------
// Shaping
// ---------------------------------------------------------------------------

inline json to_json(const ShapingBounds& b) {
  return {{"k_min", b.k_min},       {"k_max", b.k_max}, {"b_min", b.b_min},
          {"b_max", b.b_max},       {"lambda_dagger", b.lambda_dagger},
          {"n", b.n},               {"C", b.C}};
}

inline ShapingBounds shaping_bounds_from_json(const json& root,
                                              const std::string& context = "bounds") {
  const json& j = root.contains("bounds") ? root.at("bounds") : root;
  ShapingBounds b;
  b.k_min = detail::require_number(j, "k_min", context);
  b.k_max = detail::require_number(j, "k_max", context);
  b.b_min = detail::require_number(j, "b_min", context);
  b.b_max = detail::require_number(j, "b_max", context);
  b.lambda_dagger = detail::require_number(j, "lambda_dagger", context);
  const json& n = detail::require(j, "n", context);
  if (!n.is_number_integer()) throw SchemaError(context + ": n must be an integer");
  b.n = n.get<int>();
  b.C = detail::require_number(j, "C", context);
  return b;
}

inline json to_json(const AdmissibilityReport& rep) {
  json conds = json::array();
  for (const auto& c : rep.conditions) {
    conds.push_back({{"condition", c.name},
                     {"lhs", c.lhs},
                     {"rhs", c.rhs},
                     {"slack", c.slack},
                     {"holds", c.holds}});
  }
  return {{"admissible", rep.admissible}, {"conditions", conds}};
}

inline json to_json(const WorstCaseCertificate& cert) {
  return {{"worst_lambda", cert.worst_lambda},
          {"witness", {{"k", cert.witness.k}, {"b", cert.witness.b}}},
          {"certified", cert.certified},
          {"exact", cert.exact},
          {"samples", cert.samples}};
}

struct ContourConfig {
  QuadraticProfile profile;
  double C = 0.0;
  int grid = 0;
  ContourAxis axis1, axis2;
};

inline ContourConfig contour_config_from_json(const json& j,
                                              const std::string& context = "contour") {
  ContourConfig cfg;
  cfg.profile.k = detail::number_list(detail::require(j, "k", context), context + ".k");
  cfg.profile.b = detail::number_list(detail::require(j, "b", context), context + ".b");
  if (cfg.profile.k.size() != cfg.profile.b.size() || cfg.profile.k.empty())
    throw SchemaError(context + ": k and b must be non-empty and the same length");
  cfg.C = detail::require_number(j, "C", context);
  const json& grid = detail::require(j, "grid", context);
  if (!grid.is_number_integer() || grid.get<int>() < 2)
    throw SchemaError(context + ": grid must be an integer >= 2");
  cfg.grid = grid.get<int>();
  const json& axes = detail::require(j, "axes", context);
  if (!axes.is_array() || axes.size() != 2)
    throw SchemaError(context + ": axes must list exactly two free parameters");
  ContourAxis parsed[2];
  for (int i = 0; i < 2; ++i) {
    const json& ax = axes.at(i);
    const std::string ctx = context + ".axes[" + std::to_string(i) + "]";
    const json& name = detail::require(ax, "param", ctx);
    if (!name.is_string()) throw SchemaError(ctx + ": param must be a string like k1 or b2");
    try {
      parsed[i] = parse_axis_param(name.get<std::string>(), detail::require_number(ax, "min", ctx),
                                   detail::require_number(ax, "max", ctx), cfg.profile.size());
    } catch (const Error& e) {
      throw SchemaError(ctx + ": " + e.what());
    }
  }
  cfg.axis1 = parsed[0];
  cfg.axis2 = parsed[1];
  return cfg;
}

// ---------------------------------------------------------------------------
// Capacity sweeps
// ---------------------------------------------------------------------------

struct SweepConfig {
  std::vector<UtilityFunction> utilities;
  std::vector<double> C_values;
  StaticModel mode = StaticModel::sald;
};

inline SweepConfig sweep_config_from_json(const json& j, const std::string& context = "sweep") {
  SweepConfig cfg;
  const json& agents = detail::require(j, "agents", context);
  if (!agents.is_array() || agents.empty())
    throw SchemaError(context + ": agents must be a non-empty array");
  int i = 0;
  for (const auto& aj : agents) {
    const std::string ctx = context + ".agents[" + std::to_string(i++) + "]";
    cfg.utilities.push_back(
        utility_from_json(detail::require(aj, "utility", ctx), ctx + ".utility"));
  }
  if (j.contains("C_values")) {
    cfg.C_values = detail::number_list(j.at("C_values"), context + ".C_values");
  } else if (j.contains("C_grid")) {
    const json& g = j.at("C_grid");
    const double start = detail::require_number(g, "start", context + ".C_grid");
    const double step = detail::require_number(g, "step", context + ".C_grid");
    const json& count = detail::require(g, "count", context + ".C_grid");
    if (!count.is_number_integer() || count.get<int>() < 1)
      throw SchemaError(context + ".C_grid: count must be a positive integer");
    for (int c = 0; c < count.get<int>(); ++c) cfg.C_values.push_back(start + step * c);
  } else {
    throw SchemaError(context + ": needs C_values or C_grid");
  }
  const std::string mode = detail::require(j, "mode", context).get<std::string>();
  if (mode == "sald")
    cfg.mode = StaticModel::sald;
  else if (mode == "saltd")
    cfg.mode = StaticModel::saltd;
  else
    throw SchemaError(context + ": mode must be \"sald\" or \"saltd\"");
  return cfg;
}

// ---------------------------------------------------------------------------
// Dynamic scenarios and equilibria
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXd matrix_from_json(const json& v, const std::string& context) {
  if (!v.is_array() || v.empty()) throw SchemaError(context + ": expected a row-major matrix");
  const std::size_t rows = v.size();
  if (!v.at(0).is_array()) throw SchemaError(context + ": expected a row-major matrix");
  const std::size_t cols = v.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = v.at(r);
    if (!row.is_array() || row.size() != cols)
      throw SchemaError(context + ": matrix rows have inconsistent lengths");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row.at(c).is_number()) throw SchemaError(context + ": matrix entries must be numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.at(c).get<double>();
    }
  }
  return m;
}

// Accepts either a flat array or a single-row nested one for 1 x m weights.
inline Eigen::RowVectorXd row_vector_from_json(const json& v, const std::string& context) {
  const json& flat = (v.is_array() && !v.empty() && v.at(0).is_array()) ? v.at(0) : v;
  const std::vector<double> vals = number_list(flat, context);
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) r[static_cast<Eigen::Index>(i)] = vals[i];
  return r;
}

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace detail

inline DynamicScenario dynamic_scenario_from_json(const json& root,
                                                  const std::string& context = "scenario") {
  const json& j = root.contains("scenario") ? root.at("scenario") : root;
  DynamicScenario s;
  const json& T = detail::require(j, "T", context);
  if (!T.is_number_integer() || T.get<int>() < 1)
    throw SchemaError(context + ": T must be a positive integer");
  s.T = T.get<int>();
  const json& agents = detail::require(j, "agents", context);
  if (!agents.is_array() || agents.empty())
    throw SchemaError(context + ": agents must be a non-empty array");
  int i = 0;
  for (const auto& aj : agents) {
    const std::string ctx = context + ".agents[" + std::to_string(i++) + "]";
    DynamicAgent ag;
    ag.A = detail::matrix_from_json(detail::require(aj, "A", ctx), ctx + ".A");
    ag.B = detail::matrix_from_json(detail::require(aj, "B", ctx), ctx + ".B");
    ag.R = detail::matrix_from_json(detail::require(aj, "R", ctx), ctx + ".R");
    ag.Q = detail::matrix_from_json(detail::require(aj, "Q", ctx), ctx + ".Q");
    ag.H = detail::matrix_from_json(detail::require(aj, "H", ctx), ctx + ".H");
    ag.W = detail::row_vector_from_json(detail::require(aj, "W", ctx), ctx + ".W");
    ag.K = detail::row_vector_from_json(detail::require(aj, "K", ctx), ctx + ".K");
    if (aj.contains("R_term"))
      ag.R_term = detail::matrix_from_json(aj.at("R_term"), ctx + ".R_term");
    if (aj.contains("W_term"))
      ag.W_term = detail::row_vector_from_json(aj.at("W_term"), ctx + ".W_term");
    const std::vector<double> y0 =
        detail::number_list(detail::require(aj, "y0", ctx), ctx + ".y0");
    ag.y0 = Eigen::Map<const Eigen::VectorXd>(y0.data(), static_cast<Eigen::Index>(y0.size()));
    ag.a = detail::number_list(detail::require(aj, "a", ctx), ctx + ".a");
    s.agents.push_back(std::move(ag));
  }
  try {
    validate_scenario(s);
  } catch (const Error& e) {
    throw SchemaError(std::string(context) + ": " + e.what());
  }
  return s;
}

inline json to_json(const DynamicScenario& s) {
  json agents = json::array();
  for (const auto& ag : s.agents) {
    json aj = {{"A", detail::to_json(ag.A)},
               {"B", detail::to_json(ag.B)},
               {"R", detail::to_json(ag.R)},
               {"W", detail::to_json_vector(ag.W.transpose())},
               {"Q", detail::to_json(ag.Q)},
               {"K", detail::to_json_vector(ag.K.transpose())},
               {"H", detail::to_json(ag.H)},
               {"a", ag.a},
               {"y0", detail::to_json_vector(ag.y0)}};
    if (ag.R_term.size() > 0) aj["R_term"] = detail::to_json(ag.R_term);
    if (ag.W_term.size() > 0) aj["W_term"] = detail::to_json_vector(ag.W_term.transpose());
    agents.push_back(std::move(aj));
  }
  return {{"agents", agents}, {"T", s.T}};
}

inline json to_json(const DynamicEquilibrium& eq) {
  json U = json::array();
  for (const auto& u : eq.U) U.push_back(detail::to_json_vector(u));
  json E = json::array();
  for (const auto& e : eq.E) E.push_back(detail::to_json_vector(e));
  return {{"lambda", detail::to_json_vector(eq.lambda)},
          {"U", U},
          {"E", E},
          {"residual", eq.residual},
          {"iterations", eq.iterations},
          {"converged", eq.converged}};
}

inline DynamicEquilibrium dynamic_equilibrium_from_json(const json& j,
                                                        const std::string& context = "equilibrium") {
  DynamicEquilibrium eq;
  const std::vector<double> lam =
      detail::number_list(detail::require(j, "lambda", context), context + ".lambda");
  eq.lambda = Eigen::Map<const Eigen::VectorXd>(lam.data(), static_cast<Eigen::Index>(lam.size()));
  for (const auto& u : detail::require(j, "U", context)) {
    const std::vector<double> v = detail::number_list(u, context + ".U");
    eq.U.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  for (const auto& e : detail::require(j, "E", context)) {
    const std::vector<double> v = detail::number_list(e, context + ".E");
    eq.E.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  if (j.contains("residual")) eq.residual = j.at("residual").get<double>();
  if (j.contains("iterations")) eq.iterations = j.at("iterations").get<int>();
  if (j.contains("converged")) eq.converged = j.at("converged").get<bool>();
  return eq;
}

inline json to_json(const DynamicVerificationReport& rep) {
  return {{"payoff_gap", rep.payoff_gap},
          {"max_relative_payoff_gap", rep.max_relative_payoff_gap},
          {"step_residual", rep.step_residual},
          {"max_step_residual", rep.max_step_residual},
          {"max_trade_violation", rep.max_trade_violation},
          {"trade_multipliers", rep.trade_multipliers},
          {"lambda_nonnegative", rep.lambda_nonnegative},
          {"accepted", rep.accepted}};
}

// ---------------------------------------------------------------------------
// CSV emission (fixed significant digits so artifacts diff cleanly)
// ---------------------------------------------------------------------------

inline std::string format_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, StaticModel mode) {
  std::ostringstream os;
  os << "C,lambda_" << to_string(mode) << "\n";
  for (const auto& r : rows)
    os << format_sig(r.C, 12) << ',' << format_sig(r.lambda, 12) << "\n";
  return os.str();
}

inline std::string contour_csv(const ContourResult& res) {
  std::ostringstream os;
  os << res.axis1.label() << '\\' << res.axis2.label();
  for (double t : res.ticks2) os << ',' << format_sig(t, 9);
  os << "\n";
  for (std::size_t i = 0; i < res.ticks1.size(); ++i) {
    os << format_sig(res.ticks1[i], 9);
    for (double v : res.values[i]) os << ',' << format_sig(v, 9);
    os << "\n";
  }
  return os.str();
}

inline std::string price_csv(const Eigen::VectorXd& lambda) {
  std::ostringstream os;
  os << "t,lambda\n";
  for (Eigen::Index t = 0; t < lambda.size(); ++t)
    os << t << ',' << format_sig(lambda[t], 12) << "\n";
  return os.str();
}

inline std::string trajectory_csv(const DynamicEquilibrium& eq, int m) {
  std::ostringstream os;
  os << "t,agent,dim,y\n";
  for (std::size_t i = 0; i < eq.Y.size(); ++i) {
    const Eigen::VectorXd& Y = eq.Y[i];
    const int steps = static_cast<int>(Y.size()) / m;
    for (int t = 0; t < steps; ++t)
      for (int d = 0; d < m; ++d)
        os << t << ',' << (i + 1) << ',' << (d + 1) << ','
           << format_sig(Y[t * m + d], 12) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  out << text;
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace eqkit::io
