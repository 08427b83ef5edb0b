// Command-line front end: solve / eigen / verify / sweep over a JSON
// problem config.  Exit codes: 0 success, 1 config error, 2
// non-convergence, 3 predicate/observation inconsistency.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "pmix/config_io.hpp"

namespace fs = std::filesystem;
using namespace pmix;

namespace {

struct CommonArgs {
  std::string config;
  std::string out_dir;  // overrides output.directory when set
};

ProblemSpec load_spec(const CommonArgs& args) {
  ProblemSpec spec = load_config(args.config);
  if (!args.out_dir.empty()) spec.output.directory = args.out_dir;
  return spec;
}

fs::path out_path(const ProblemSpec& spec, const std::string& name) {
  return fs::path(spec.output.directory) / name;
}

int cmd_solve(const CommonArgs& args) {
  ProblemSpec spec = load_spec(args);
  FeSpace sp = make_space(spec);
  FormContext ctx = make_context(sp, spec.quad.diag_order, spec.quad.far_order);
  NonlinearityModel m = make_model(spec);

  SolveReport rep = minimize(ctx, m, CoeffVec::constant(sp, 0.1), make_solver_options(spec));

  json j = to_json(rep);
  j["spec"] = to_json(spec);
  write_file_atomic(out_path(spec, "solve_report.json"), j.dump(2) + "\n");
  write_file_atomic(out_path(spec, "solution.csv"), profile_csv(sp, rep.u_star));
  if (!rep.converged) {
    std::fprintf(stderr, "solve: %s (residual %.3e, tol %.3e)\n", to_string(rep.status),
                 rep.residual_inf, rep.tol_res);
    return 2;
  }
  return 0;
}

int cmd_eigen(const CommonArgs& args, const std::string& weight_sel) {
  ProblemSpec spec = load_spec(args);
  FeSpace sp = make_space(spec);
  FormContext ctx = make_context(sp, spec.quad.diag_order, spec.quad.far_order);
  EigenOptions eopts = make_eigen_options(spec);

  json j;
  bool converged = true;
  if (weight_sel == "a") {
    EigenReport rep = lambda1(ctx, make_weight(spec), eopts);
    j = to_json(rep);
    converged = rep.converged;
    if (rep.has_e1)
      write_file_atomic(out_path(spec, "eigenfunction.csv"), profile_csv(sp, rep.e1));
  } else {
    NonlinearityModel m = make_model(spec);
    AsymptoticData asym = m.asymptotics();
    BoWeight which = weight_sel == "a0" ? BoWeight::A0 : BoWeight::AInf;
    double lam = lambda1_bo(ctx, asym, which, eopts);
    j["lambda1"] = ext_json(lam);
    j["weight"] = weight_sel;
    if (std::isfinite(lam)) {
      double w = which == BoWeight::A0 ? -asym.a0_value : -asym.ainf_value;
      EigenReport rep = lambda1(ctx, WeightFn(w), eopts);
      j["report"] = to_json(rep);
      converged = rep.converged;
      if (rep.has_e1)
        write_file_atomic(out_path(spec, "eigenfunction.csv"), profile_csv(sp, rep.e1));
    }
  }
  j["spec"] = to_json(spec);
  write_file_atomic(out_path(spec, "eigen_report.json"), j.dump(2) + "\n");
  return converged ? 0 : 2;
}

// 0 only when the prediction matched and every check passed; inconsistency
// dominates other failures.
int verify_exit_code(const VerifyReport& rep) {
  if (!rep.consistent) return 3;
  if (!rep.all_converged || !rep.smp_pass || !rep.uniqueness_pass || !rep.errors.empty())
    return 2;
  return 0;
}

int cmd_verify(const CommonArgs& args) {
  ProblemSpec spec = load_spec(args);
  VerifyReport rep = run_verify(spec);

  json j = to_json(rep);
  j["spec"] = to_json(spec);
  write_file_atomic(out_path(spec, "verify_report.json"), j.dump(2) + "\n");
  write_file_atomic(out_path(spec, "verify_summary.csv"),
                    verify_summary_header() + "\n" + verify_summary_row(spec, rep) + "\n");

  FeSpace sp = make_space(spec);
  const CoeffVec& u = rep.best_run >= 0 ? rep.solves.runs[rep.best_run].u_star
                                        : CoeffVec::zeros(sp);
  write_file_atomic(out_path(spec, "solution.csv"), profile_csv(sp, u));

  int rc = verify_exit_code(rep);
  if (rc == 3)
    std::fprintf(stderr, "verify: predicate/observation mismatch\n");
  else if (rc == 2)
    std::fprintf(stderr, "verify: a check failed (see verify_report.json)\n");
  return rc;
}

int cmd_sweep(const CommonArgs& args, const std::string& param,
              const std::string& values_arg) {
  ProblemSpec spec = load_spec(args);
  std::vector<double> values;
  std::stringstream ss(values_arg);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) values.push_back(std::stod(tok));
  if (values.empty()) throw ConfigError("sweep: --values must list at least one value");

  std::vector<SweepRow> rows = sweep(spec, param, values);
  std::ostringstream csv;
  csv << "param,value," << verify_summary_header() << "\n";
  int rc = 0;
  for (const auto& row : rows) {
    char head[64];
    std::snprintf(head, sizeof head, "%s,%.17g,", row.param.c_str(), row.value);
    csv << head << verify_summary_row(row.spec, row.report) << "\n";
    rc = std::max(rc, verify_exit_code(row.report));
  }
  write_file_atomic(out_path(spec, "sweep_summary.csv"), csv.str());
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational solver for sublinear problems driven by the mixed "
               "local/nonlocal p-Laplacian on (0,1)"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string weight_sel = "a";
  std::string param, values;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config, "path to JSON problem config")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  };

  CLI::App* solve = app.add_subcommand("solve", "minimize the energy, write the profile");
  add_common(solve);
  CLI::App* eigen = app.add_subcommand("eigen", "smallest weighted eigenvalue");
  add_common(eigen);
  eigen->add_option("--weight", weight_sel, "weight selector: a, a0 or ainf")
      ->check(CLI::IsMember({"a", "a0", "ainf"}));
  CLI::App* verify = app.add_subcommand("verify", "run every theorem-level check");
  add_common(verify);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "verify across a parameter range");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--param", param, "parameter: lambda_lin, s, p or n_cells")
      ->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(args);
    if (eigen->parsed()) return cmd_eigen(args, weight_sel);
    if (verify->parsed()) return cmd_verify(args);
    if (sweep_cmd->parsed()) return cmd_sweep(args, param, values);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
