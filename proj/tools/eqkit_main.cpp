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

// Command-line front end: scenario ingestion, solver dispatch, verification,
// sweep/contour emission, and reproduction runs for the bundled examples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eqkit/eqkit.hpp"

namespace {

using eqkit::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

struct RunConfig {
  std::string input;
  std::string output;
  double tol = -1.0;  // command-specific default when negative
  int max_iter = -1;
  std::uint64_t seed = 0;
  std::string format = "json";
  double resolution = 0.0;
};

void add_common_flags(CLI::App* cmd, RunConfig* cfg, bool needs_input = true) {
  auto* in = cmd->add_option("--input,-i", cfg->input, "Input file (JSON)");
  if (needs_input) in->required();
  cmd->add_option("--output,-o", cfg->output,
                  "Output artifact path (defaults to stdout)");
  cmd->add_option("--tol", cfg->tol, "Solver tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", cfg->max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", cfg->seed, "Seed for sampling commands");
  cmd->add_option("--format", cfg->format, "Artifact format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--resolution", cfg->resolution, "Oracle grid resolution")
      ->check(CLI::PositiveNumber);
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty())
    std::cout << text;
  else
    eqkit::io::write_text_file(cfg.output, text);
}

void emit_json(const RunConfig& cfg, const json& j) { emit(cfg, j.dump(2) + "\n"); }

int run_solve_static(const RunConfig& cfg, eqkit::StaticModel model) {
  const json root = eqkit::io::read_json_file(cfg.input);
  const eqkit::StaticScenario s = eqkit::io::static_scenario_from_json(root);
  const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-9;
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : 200;
  const eqkit::StaticEquilibrium eq = model == eqkit::StaticModel::sald
                                          ? eqkit::solve_sald(s, tol, max_iter)
                                          : eqkit::solve_saltd(s, tol, max_iter);
  emit_json(cfg, eqkit::io::to_json(eq));
  return kExitOk;
}

int run_shaping_check(const RunConfig& cfg) {
  const eqkit::ShapingBounds b =
      eqkit::io::shaping_bounds_from_json(eqkit::io::read_json_file(cfg.input));
  const eqkit::AdmissibilityReport rep = eqkit::is_admissible(b);
  emit_json(cfg, eqkit::io::to_json(rep));
  return kExitOk;
}

int run_shaping_certify(const RunConfig& cfg) {
  const json root = eqkit::io::read_json_file(cfg.input);
  const eqkit::ShapingBounds b = eqkit::io::shaping_bounds_from_json(root);
  int budget = 0;
  if (root.contains("budget")) budget = root.at("budget").get<int>();
  const eqkit::WorstCaseCertificate cert = eqkit::certify_worst_case_price(b, budget, cfg.seed);
  emit_json(cfg, eqkit::io::to_json(cert));
  return kExitOk;
}

int run_shaping_contour(const RunConfig& cfg) {
  const eqkit::io::ContourConfig cc =
      eqkit::io::contour_config_from_json(eqkit::io::read_json_file(cfg.input));
  const eqkit::ContourResult res =
      eqkit::contour_sweep(cc.profile, cc.axis1, cc.axis2, cc.grid, cc.C);
  if (cfg.format == "json") {
    json ticks1 = res.ticks1, ticks2 = res.ticks2, values = res.values;
    emit_json(cfg, json{{"axis1", res.axis1.label()},
                        {"axis2", res.axis2.label()},
                        {"ticks1", ticks1},
                        {"ticks2", ticks2},
                        {"values", values}});
  } else {
    emit(cfg, eqkit::io::contour_csv(res));
  }
  return kExitOk;
}

int run_sweep(const RunConfig& cfg) {
  const eqkit::io::SweepConfig sc =
      eqkit::io::sweep_config_from_json(eqkit::io::read_json_file(cfg.input));
  const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-9;
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : 200;
  const auto rows = eqkit::price_capacity_sweep(sc.utilities, sc.C_values, sc.mode, tol, max_iter);
  if (cfg.format == "json") {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"C", r.C}, {"lambda", r.lambda}});
    emit_json(cfg, out);
  } else {
    emit(cfg, eqkit::io::sweep_csv(rows, sc.mode));
  }
  return kExitOk;
}

int run_solve_daltd(const RunConfig& cfg) {
  const eqkit::DynamicScenario s =
      eqkit::io::dynamic_scenario_from_json(eqkit::io::read_json_file(cfg.input));
  const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-4;
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : 50000;
  const eqkit::DynamicEquilibrium eq = eqkit::solve_daltd(s, tol, max_iter);
  if (cfg.format == "json") {
    emit_json(cfg, eqkit::io::to_json(eq));
  } else {
    // CSV: prices at the artifact path, trajectories alongside it.
    emit(cfg, eqkit::io::price_csv(eq.lambda));
    if (!cfg.output.empty())
      eqkit::io::write_text_file(cfg.output + ".traj.csv",
                                 eqkit::io::trajectory_csv(eq, s.dim()));
    else
      std::cout << eqkit::io::trajectory_csv(eq, s.dim());
  }
  return eq.converged ? kExitOk : kExitNotConverged;
}

int run_verify(const RunConfig& cfg) {
  const json root = eqkit::io::read_json_file(cfg.input);
  const std::string mode = eqkit::io::detail::require(root, "mode", "verify").get<std::string>();
  json out;
  if (mode == "sald" || mode == "saltd") {
    const eqkit::StaticScenario s = eqkit::io::static_scenario_from_json(
        eqkit::io::detail::require(root, "scenario", "verify"));
    const eqkit::StaticEquilibrium eq = eqkit::io::static_equilibrium_from_json(
        eqkit::io::detail::require(root, "equilibrium", "verify"));
    eqkit::VerifyTolerances tols;
    if (root.contains("tolerances")) {
      const json& t = root.at("tolerances");
      if (t.contains("optimality_gap")) tols.optimality_gap = t.at("optimality_gap").get<double>();
      if (t.contains("balance")) tols.balance = t.at("balance").get<double>();
      if (t.contains("constraint")) tols.constraint = t.at("constraint").get<double>();
      if (t.contains("duality_gap")) tols.duality_gap = t.at("duality_gap").get<double>();
    }
    const auto model = mode == "sald" ? eqkit::StaticModel::sald : eqkit::StaticModel::saltd;
    out = eqkit::io::to_json(eqkit::verify_equilibrium(s, eq, model, tols));
    if (cfg.resolution > 0.0) {
      // Optional oracle cross-check on the claimed welfare.
      const auto oracle = model == eqkit::StaticModel::sald
                              ? eqkit::oracle::dp_welfare_sald(s, cfg.resolution)
                              : eqkit::oracle::dp_welfare_saltd(s, cfg.resolution);
      double welfare = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i)
        welfare += s.agents[i].utility.eval(std::max(0.0, eq.x[i]));
      out["oracle"] = {{"welfare", oracle.welfare},
                       {"resolution", oracle.resolution},
                       {"claimed_welfare", welfare}};
    }
  } else if (mode == "daltd") {
    const eqkit::DynamicScenario s = eqkit::io::dynamic_scenario_from_json(
        eqkit::io::detail::require(root, "scenario", "verify"));
    const eqkit::DynamicEquilibrium eq = eqkit::io::dynamic_equilibrium_from_json(
        eqkit::io::detail::require(root, "equilibrium", "verify"));
    eqkit::DynamicVerifyTolerances tols;
    if (root.contains("tolerances")) {
      const json& t = root.at("tolerances");
      if (t.contains("payoff_gap")) tols.payoff_gap = t.at("payoff_gap").get<double>();
      if (t.contains("residual")) tols.residual = t.at("residual").get<double>();
      if (t.contains("constraint")) tols.constraint = t.at("constraint").get<double>();
    }
    out = eqkit::io::to_json(eqkit::verify_dynamic_equilibrium(s, eq, tols));
  } else {
    throw eqkit::SchemaError("verify: mode must be sald, saltd or daltd");
  }
  emit_json(cfg, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reproduce-example
// ---------------------------------------------------------------------------

struct CheckRow {
  std::string name;
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

class CheckTable {
 public:
  void add(const std::string& name, double computed, double expected, double tolerance) {
    CheckRow r{name, computed, expected, tolerance,
               std::abs(computed - expected) <= tolerance};
    all_pass_ &= r.pass;
    rows_.push_back(std::move(r));
  }
  void add_flag(const std::string& name, bool pass) {
    CheckRow r{name, pass ? 1.0 : 0.0, 1.0, 0.0, pass};
    all_pass_ &= pass;
    rows_.push_back(std::move(r));
  }
  bool all_pass() const { return all_pass_; }

  void print(std::ostream& os, int example) const {
    os << "reproduce-example " << example << "\n";
    os << std::left << std::setw(46) << "check" << std::setw(16) << "computed" << std::setw(16)
       << "expected" << std::setw(12) << "tolerance" << "result\n";
    for (const auto& r : rows_) {
      os << std::left << std::setw(46) << r.name << std::setw(16) << r.computed << std::setw(16)
         << r.expected << std::setw(12) << r.tolerance << (r.pass ? "PASS" : "FAIL") << "\n";
    }
    os << (all_pass_ ? "ALL PASS" : "FAILURES PRESENT") << "\n";
  }

  json to_json(int example) const {
    json checks = json::array();
    for (const auto& r : rows_)
      checks.push_back({{"check", r.name},
                        {"computed", r.computed},
                        {"expected", r.expected},
                        {"tolerance", r.tolerance},
                        {"pass", r.pass}});
    return {{"example", example}, {"checks", checks}, {"all_pass", all_pass_}};
  }

 private:
  std::vector<CheckRow> rows_;
  bool all_pass_ = true;
};

int finish_reproduce(const RunConfig& cfg, const CheckTable& table, int example) {
  table.print(std::cout, example);
  if (!cfg.output.empty()) eqkit::io::write_json_file(cfg.output, table.to_json(example));
  return table.all_pass() ? kExitOk : kExitNotConverged;
}

int reproduce_example_1(const RunConfig& cfg) {
  const json root = eqkit::io::read_json_file(cfg.input);
  const eqkit::StaticScenario s = eqkit::io::static_scenario_from_json(root);
  const json& exp = eqkit::io::detail::require(root, "expected", "example1");
  const double tol = exp.value("tolerance", 1e-3);
  const double lam_exp = exp.at("lambda").get<double>();
  const std::vector<double> x_exp = exp.at("x").get<std::vector<double>>();
  const std::vector<double> e_exp = exp.at("e").get<std::vector<double>>();

  CheckTable table;
  const eqkit::StaticEquilibrium sald = eqkit::solve_sald(s);
  table.add("sald lambda", sald.lambda, lam_exp, tol);
  for (std::size_t i = 0; i < x_exp.size(); ++i)
    table.add("sald x" + std::to_string(i + 1), sald.x[i], x_exp[i], tol);

  const eqkit::StaticEquilibrium saltd = eqkit::solve_saltd(s);
  table.add("saltd lambda", saltd.lambda, lam_exp, tol);
  for (std::size_t i = 0; i < x_exp.size(); ++i)
    table.add("saltd x" + std::to_string(i + 1), saltd.x[i], x_exp[i], tol);
  for (std::size_t i = 0; i < e_exp.size(); ++i)
    table.add("saltd e" + std::to_string(i + 1), (*saltd.e)[i], e_exp[i], tol);
  return finish_reproduce(cfg, table, 1);
}

int reproduce_example_2(const RunConfig& cfg) {
  const json root = eqkit::io::read_json_file(cfg.input);
  CheckTable table;
  for (const char* pm : {"pm1", "pm2"}) {
    json sweep_spec = eqkit::io::detail::require(root, pm, "example2");
    sweep_spec["C_grid"] = eqkit::io::detail::require(root, "C_grid", "example2");
    sweep_spec["mode"] = "sald";
    const auto cfg_sald = eqkit::io::sweep_config_from_json(sweep_spec);
    const auto sald = eqkit::price_capacity_sweep(cfg_sald.utilities, cfg_sald.C_values,
                                                  eqkit::StaticModel::sald);
    sweep_spec["mode"] = "saltd";
    const auto cfg_saltd = eqkit::io::sweep_config_from_json(sweep_spec);
    const auto saltd = eqkit::price_capacity_sweep(cfg_saltd.utilities, cfg_saltd.C_values,
                                                   eqkit::StaticModel::saltd);

    bool nonincreasing = true;
    for (std::size_t i = 1; i < sald.size(); ++i)
      nonincreasing &= sald[i].lambda <= sald[i - 1].lambda + 1e-9;
    table.add_flag(std::string(pm) + " sald nonincreasing in C", nonincreasing);

    double min_saltd = eqkit::kUnbounded;
    for (const auto& r : saltd) min_saltd = std::min(min_saltd, r.lambda);
    table.add_flag(std::string(pm) + " saltd nonnegative", min_saltd >= 0.0);

    if (std::string(pm) == "pm1") {
      // Closed-form reference at the last grid point.
      eqkit::QuadraticProfile prof;
      for (const auto& u : cfg_sald.utilities) {
        prof.b.push_back(u.b());
        prof.k.push_back(u.k());
      }
      const double C_last = sald.back().C;
      const double ref = eqkit::quadratic_price_closed_form(prof, C_last);
      table.add("pm1 sald lambda at C=40", sald.back().lambda, ref, 1e-2);
      table.add_flag("pm1 sald negative at C=40", sald.back().lambda < 0.0);
    }
  }
  return finish_reproduce(cfg, table, 2);
}

int reproduce_example_3(const RunConfig& cfg) {
  const json root = eqkit::io::read_json_file(cfg.input);
  const eqkit::ShapingBounds bounds = eqkit::io::shaping_bounds_from_json(root);
  CheckTable table;
  const auto adm = eqkit::is_admissible(bounds);
  table.add_flag("bounds admissible", adm.admissible);

  double global_max = -eqkit::kUnbounded;
  double b_sweep_max = -eqkit::kUnbounded;
  for (const char* key : {"contour_k", "contour_b"}) {
    const auto cc = eqkit::io::contour_config_from_json(
        eqkit::io::detail::require(root, key, "example3"));
    const auto res = eqkit::contour_sweep(cc.profile, cc.axis1, cc.axis2, cc.grid, cc.C);
    double max_cell = -eqkit::kUnbounded;
    for (const auto& row : res.values)
      for (double v : row) max_cell = std::max(max_cell, v);
    global_max = std::max(global_max, max_cell);
    if (std::string(key) == "contour_b") b_sweep_max = max_cell;
  }
  table.add("b-sweep max price vs reference 21", b_sweep_max, 21.0, 0.5);
  table.add_flag("all contour cells below price cap", global_max <= bounds.lambda_dagger);

  const auto cert = eqkit::certify_worst_case_price(bounds, 0, cfg.seed);
  table.add_flag("worst-case price certified", cert.certified);
  const eqkit::StaticEquilibrium check =
      eqkit::solve_sald(eqkit::scenario_from_profile(cert.witness, bounds.C));
  table.add("witness price vs bisection", cert.worst_lambda, check.lambda, 1e-6);
  return finish_reproduce(cfg, table, 3);
}

int reproduce_example_4(const RunConfig& cfg) {
  const eqkit::DynamicScenario s =
      eqkit::io::dynamic_scenario_from_json(eqkit::io::read_json_file(cfg.input));
  const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-4;
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : 50000;
  CheckTable table;
  const eqkit::DynamicEquilibrium eq = eqkit::solve_daltd(s, tol, max_iter);
  table.add_flag("dual loop converged", eq.converged);
  table.add("max step residual", eq.residual, 0.0, tol);
  table.add_flag("prices nonnegative", eq.lambda.minCoeff() >= 0.0);
  const auto rep = eqkit::verify_dynamic_equilibrium(s, eq);
  table.add("max relative payoff gap", rep.max_relative_payoff_gap, 0.0, 1e-3);
  table.add_flag("verification accepted", rep.accepted);
  return finish_reproduce(cfg, table, 4);
}

int run_reproduce(const RunConfig& cfg_in, int example) {
  RunConfig cfg = cfg_in;
  if (cfg.input.empty()) cfg.input = "data/example" + std::to_string(example) + ".json";
  switch (example) {
    case 1:
      return reproduce_example_1(cfg);
    case 2:
      return reproduce_example_2(cfg);
    case 3:
      return reproduce_example_3(cfg);
    case 4:
      return reproduce_example_4(cfg);
    default:
      throw eqkit::Error("reproduce-example expects an example number in 1..4");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium solvers for self-sustained multi-agent resource allocation"};
  app.require_subcommand(1);

  RunConfig cfg;
  int example = 0;

  auto* sald = app.add_subcommand("solve-sald", "Clearing price and allocation, load-only model");
  add_common_flags(sald, &cfg);
  auto* saltd = app.add_subcommand("solve-saltd", "Clearing price, allocation and trades");
  add_common_flags(saltd, &cfg);
  auto* shaping_check =
      app.add_subcommand("shaping-check", "Test a bounds box for social admissibility");
  add_common_flags(shaping_check, &cfg);
  auto* shaping_certify =
      app.add_subcommand("shaping-certify", "Worst-case price over a bounds box");
  add_common_flags(shaping_certify, &cfg);
  auto* shaping_contour =
      app.add_subcommand("shaping-contour", "Price surface over two profile parameters");
  add_common_flags(shaping_contour, &cfg);
  shaping_contour->get_option("--format")->default_str("csv");
  auto* sweep = app.add_subcommand("sweep-capacity", "Clearing price versus network capacity");
  add_common_flags(sweep, &cfg);
  auto* daltd = app.add_subcommand("solve-daltd", "Dynamic equilibrium by dual decomposition");
  add_common_flags(daltd, &cfg);
  auto* verify = app.add_subcommand("verify", "Check a claimed equilibrium against its scenario");
  add_common_flags(verify, &cfg);
  auto* reproduce =
      app.add_subcommand("reproduce-example", "Recompute a bundled example and compare");
  reproduce->add_option("example", example, "Example number (1-4)")->required();
  add_common_flags(reproduce, &cfg, /*needs_input=*/false);

  // Contour output defaults to CSV (it is a matrix artifact).
  std::string contour_format = "csv";

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (sald->parsed()) return run_solve_static(cfg, eqkit::StaticModel::sald);
    if (saltd->parsed()) return run_solve_static(cfg, eqkit::StaticModel::saltd);
    if (shaping_check->parsed()) return run_shaping_check(cfg);
    if (shaping_certify->parsed()) return run_shaping_certify(cfg);
    if (shaping_contour->parsed()) {
      if (shaping_contour->get_option("--format")->empty()) cfg.format = contour_format;
      return run_shaping_contour(cfg);
    }
    if (sweep->parsed()) {
      if (sweep->get_option("--format")->empty()) cfg.format = "csv";
      return run_sweep(cfg);
    }
    if (daltd->parsed()) return run_solve_daltd(cfg);
    if (verify->parsed()) return run_verify(cfg);
    if (reproduce->parsed()) return run_reproduce(cfg, example);
  } catch (const eqkit::SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const eqkit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
