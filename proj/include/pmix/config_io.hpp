#pragma once

// JSON problem configs and structured run reports, CSV summary rows, and
// atomic file output.  Extended eigenvalues serialize as the strings
// "+inf" / "-inf"; everything else is plain JSON.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmix/problem_spec.hpp"
#include "pmix/verify.hpp"

namespace pmix {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline void collect(std::vector<std::string>& errs, bool ok, const std::string& msg) {
  if (!ok) errs.push_back(msg);
}

template <class T>
inline bool fetch(const json& j, const char* key, T& out, std::vector<std::string>& errs,
                  const std::string& path) {
  if (!j.contains(key)) return false;
  try {
    out = j.at(key).get<T>();
    return true;
  } catch (const json::exception&) {
    errs.push_back(path + key + ": wrong type");
    return false;
  }
}

}  // namespace detail

inline ProblemSpec parse_config(const json& j) {
  std::vector<std::string> errs;
  ProblemSpec spec;
  using detail::collect;
  using detail::fetch;

  fetch(j, "p", spec.p, errs, "");
  fetch(j, "s", spec.s, errs, "");
  fetch(j, "n_cells", spec.n_cells, errs, "");
  collect(errs, spec.p > 1.0, "p: must be > 1");
  collect(errs, spec.s > 0.0 && spec.s < 1.0, "s: must lie in (0,1)");
  collect(errs, spec.n_cells >= 4, "n_cells: must be >= 4");

  if (j.contains("nonlinearity")) {
    const json& n = j.at("nonlinearity");
    auto& nc = spec.nonlinearity;
    fetch(n, "family", nc.family, errs, "nonlinearity.");
    fetch(n, "c", nc.c, errs, "nonlinearity.");
    fetch(n, "theta", nc.theta, errs, "nonlinearity.");
    fetch(n, "lambda", nc.lambda, errs, "nonlinearity.");
    fetch(n, "b", nc.b, errs, "nonlinearity.");
    fetch(n, "q", nc.q, errs, "nonlinearity.");
    fetch(n, "c_values", nc.c_values, errs, "nonlinearity.");
    fetch(n, "b_values", nc.b_values, errs, "nonlinearity.");
    collect(errs,
            nc.family == "power" || nc.family == "logistic" || nc.family == "general",
            "nonlinearity.family: must be power, logistic or general");
    collect(errs, nc.c >= 0.0, "nonlinearity.c: must be >= 0");
    collect(errs, nc.b >= 0.0, "nonlinearity.b: must be >= 0");
    if (spec.p > 1.0) {
      if (nc.family != "logistic")
        collect(errs, nc.theta >= 0.0 && nc.theta < spec.p - 1.0,
                "nonlinearity.theta: must satisfy 0 <= theta < p-1");
      if (nc.family != "power")
        collect(errs, nc.q > spec.p, "nonlinearity.q: must exceed p");
    }
    for (double v : nc.c_values)
      if (v < 0.0) {
        errs.push_back("nonlinearity.c_values: entries must be >= 0");
        break;
      }
    for (double v : nc.b_values)
      if (v < 0.0) {
        errs.push_back("nonlinearity.b_values: entries must be >= 0");
        break;
      }
  }

  if (j.contains("weight")) {
    fetch(j.at("weight"), "a", spec.weight.a, errs, "weight.");
    fetch(j.at("weight"), "a_values", spec.weight.a_values, errs, "weight.");
  }

  if (j.contains("solve")) {
    const json& s = j.at("solve");
    fetch(s, "tol_res", spec.solve.tol_res, errs, "solve.");
    fetch(s, "max_iters", spec.solve.max_iters, errs, "solve.");
    fetch(s, "starts", spec.solve.starts, errs, "solve.");
    fetch(s, "seed", spec.solve.seed, errs, "solve.");
    collect(errs, spec.solve.tol_res >= 0.0, "solve.tol_res: must be >= 0");
    collect(errs, spec.solve.max_iters >= 1, "solve.max_iters: must be >= 1");
    collect(errs, spec.solve.starts >= 2, "solve.starts: must be >= 2");
  }

  if (j.contains("eigen")) {
    const json& e = j.at("eigen");
    fetch(e, "tol_eig", spec.eigen.tol_eig, errs, "eigen.");
    fetch(e, "max_iters", spec.eigen.max_iters, errs, "eigen.");
    collect(errs, spec.eigen.tol_eig > 0.0, "eigen.tol_eig: must be > 0");
    collect(errs, spec.eigen.max_iters >= 1, "eigen.max_iters: must be >= 1");
  }

  if (j.contains("quad")) {
    const json& q = j.at("quad");
    fetch(q, "diag_order", spec.quad.diag_order, errs, "quad.");
    fetch(q, "far_order", spec.quad.far_order, errs, "quad.");
    collect(errs, spec.quad.diag_order >= 3, "quad.diag_order: must be >= 3");
    collect(errs, spec.quad.far_order >= 3, "quad.far_order: must be >= 3");
  }

  if (j.contains("output")) {
    fetch(j.at("output"), "directory", spec.output.directory, errs, "output.");
    collect(errs, !spec.output.directory.empty(), "output.directory: must not be empty");
  }

  if (!errs.empty()) {
    std::string msg = "config error:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return spec;
}

inline ProblemSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config error: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

// Resolved spec (defaults included), echoed into every report.
inline json to_json(const ProblemSpec& spec) {
  json n{{"family", spec.nonlinearity.family}, {"c", spec.nonlinearity.c},
         {"theta", spec.nonlinearity.theta},   {"lambda", spec.nonlinearity.lambda},
         {"b", spec.nonlinearity.b},           {"q", spec.nonlinearity.q}};
  if (!spec.nonlinearity.c_values.empty()) n["c_values"] = spec.nonlinearity.c_values;
  if (!spec.nonlinearity.b_values.empty()) n["b_values"] = spec.nonlinearity.b_values;
  json w{{"a", spec.weight.a}};
  if (!spec.weight.a_values.empty()) w["a_values"] = spec.weight.a_values;
  return json{
      {"p", spec.p},
      {"s", spec.s},
      {"n_cells", spec.n_cells},
      {"nonlinearity", n},
      {"weight", w},
      {"solve",
       {{"tol_res", spec.solve.tol_res},
        {"max_iters", spec.solve.max_iters},
        {"starts", spec.solve.starts},
        {"seed", spec.solve.seed}}},
      {"eigen", {{"tol_eig", spec.eigen.tol_eig}, {"max_iters", spec.eigen.max_iters}}},
      {"quad",
       {{"diag_order", spec.quad.diag_order}, {"far_order", spec.quad.far_order}}},
      {"output", {{"directory", spec.output.directory}}}};
}

// Extended reals: numbers when finite, "+inf"/"-inf" strings otherwise.
inline json ext_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("+inf") : json("-inf");
  return json(v);
}

inline std::string ext_csv(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const SolveReport& r, bool with_history = true) {
  json j{{"converged", r.converged},
         {"status", to_string(r.status)},
         {"iterations", r.iterations},
         {"energy", r.energy},
         {"residual_inf", r.residual_inf},
         {"tol_res", r.tol_res},
         {"is_nontrivial", r.is_nontrivial},
         {"min_interior_value", r.min_interior_value},
         {"linf", r.linf},
         {"history_length", r.history.size()}};
  if (with_history) {
    json h = json::array();
    for (const auto& it : r.history)
      h.push_back({{"energy", it.energy}, {"step", it.step}, {"residual_inf", it.residual_inf}});
    j["history"] = h;
  }
  return j;
}

inline json to_json(const EigenReport& r) {
  json j{{"lambda1", ext_json(r.lambda1)},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"method", r.method},
         {"rayleigh_history", r.rayleigh_history}};
  if (!std::isnan(r.lambda2)) j["lambda2"] = r.lambda2;
  return j;
}

inline json to_json(const DeGiorgiTrace& t) {
  return json{{"delta", t.delta},
              {"levels", t.levels},
              {"Uk", t.Uk},
              {"eta", t.eta},
              {"k_vanish", t.k_vanish ? json(*t.k_vanish) : json("none")}};
}

inline json to_json(const VerifyReport& r) {
  json solves = json::array();
  for (const auto& run : r.solves.runs) solves.push_back(to_json(run, /*with_history=*/false));
  return json{{"predicate",
               {{"lambda_a0", ext_json(r.predicate.lam_a0)},
                {"lambda_ainf", ext_json(r.predicate.lam_ainf)},
                {"predict_exists", r.predicate.predict_exists},
                {"sharp", r.predicate.sharp}}},
              {"solves", solves},
              {"uniqueness",
               {{"verdict", to_string(r.solves.verdict)},
                {"detail", r.solves.detail},
                {"max_pair_diff", r.solves.max_pair_diff}}},
              {"best_run", r.best_run},
              {"observed_nontrivial", r.observed_nontrivial},
              {"smp_pass", r.smp_pass},
              {"uniqueness_pass", r.uniqueness_pass},
              {"linf_bound", r.linf_bound},
              {"degiorgi", to_json(r.degiorgi)},
              {"f5_inferred", r.f5_inferred},
              {"consistent", r.consistent},
              {"all_converged", r.all_converged},
              {"errors", r.errors}};
}

// Flat summary row for sweep aggregation; fixed column set.
inline std::string verify_summary_header() {
  return "p,s,n_cells,family,lambda_lin,lambda_a0,lambda_ainf,predict_exists,sharp,"
         "observed_nontrivial,consistent,smp_pass,uniqueness_pass,verdict,linf,"
         "energy,residual_inf,degiorgi_delta,degiorgi_k_vanish,f5_inferred,n_errors";
}

inline std::string verify_summary_row(const ProblemSpec& spec, const VerifyReport& r) {
  char buf[512];
  double energy = r.best_run >= 0 ? r.solves.runs[r.best_run].energy : 0.0;
  double res = r.best_run >= 0 ? r.solves.runs[r.best_run].residual_inf : 0.0;
  std::string kv = r.degiorgi.k_vanish ? std::to_string(*r.degiorgi.k_vanish) : "none";
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%d,%s,%.17g,%s,%s,%d,%d,%d,%d,%d,%d,%s,%.17g,%.17g,%.17g,"
                "%.17g,%s,%d,%d",
                spec.p, spec.s, spec.n_cells, spec.nonlinearity.family.c_str(),
                spec.nonlinearity.lambda, ext_csv(r.predicate.lam_a0).c_str(),
                ext_csv(r.predicate.lam_ainf).c_str(), (int)r.predicate.predict_exists,
                (int)r.predicate.sharp, (int)r.observed_nontrivial, (int)r.consistent,
                (int)r.smp_pass, (int)r.uniqueness_pass, to_string(r.solves.verdict),
                r.linf_bound, energy, res, r.degiorgi.delta, kv.c_str(),
                (int)r.f5_inferred, (int)r.errors.size());
  return buf;
}

// Write via temp file + rename so partial output is never observed.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string profile_csv(const FeSpace& sp, const CoeffVec& u) {
  std::ostringstream os;
  write_profile_csv(sp, u, os);
  return os.str();
}

}  // namespace pmix
