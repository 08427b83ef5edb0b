#pragma once

// Fully reproducible problem description: exponents, mesh, nonlinearity
// family, solver/eigen tolerances, quadrature orders, output.  Every run
// artifact echoes the resolved spec.

#include <stdexcept>
#include <string>
#include <vector>

#include "pmix/eigensolve.hpp"
#include "pmix/forms.hpp"
#include "pmix/minimize.hpp"
#include "pmix/nonlinearity.hpp"

namespace pmix {

struct NonlinearityConfig {
  std::string family = "power";  // power | logistic | general
  double c = 1.0;
  double theta = 0.5;
  double lambda = 0.0;
  double b = 1.0;
  double q = 4.0;
  std::vector<double> c_values;  // optional nodal samples overriding c
  std::vector<double> b_values;  // optional nodal samples overriding b
};

struct WeightConfig {
  double a = 0.0;
  std::vector<double> a_values;
};

struct SolveConfig {
  double tol_res = 0.0;  // 0 = default by exponent
  int max_iters = 20000;
  int starts = 5;
  unsigned seed = 42;
};

struct EigenConfig {
  double tol_eig = 1e-8;
  int max_iters = 10000;
};

struct QuadConfig {
  int diag_order = 6;
  int far_order = 4;
};

struct OutputConfig {
  std::string directory = ".";
};

struct ProblemSpec {
  double p = 2.0;
  double s = 0.5;
  int n_cells = 64;
  NonlinearityConfig nonlinearity;
  WeightConfig weight;
  SolveConfig solve;
  EigenConfig eigen;
  QuadConfig quad;
  OutputConfig output;
};

inline FeSpace make_space(const ProblemSpec& spec) {
  return build_space(spec.n_cells, spec.p, spec.s);
}

inline FormContext make_form_context(const ProblemSpec& spec) {
  return make_context(make_space(spec), spec.quad.diag_order, spec.quad.far_order);
}

inline NonlinearityModel make_model(const ProblemSpec& spec) {
  const NonlinearityConfig& nc = spec.nonlinearity;
  auto coeff = [](double cval, const std::vector<double>& arr) {
    return arr.empty() ? Coefficient(cval) : Coefficient(arr);
  };
  if (nc.family == "power")
    return NonlinearityModel(coeff(nc.c, nc.c_values), nc.theta, 0.0, Coefficient(0.0),
                             spec.p + 1.0, spec.p);
  if (nc.family == "logistic")
    return NonlinearityModel(Coefficient(0.0), 0.0, nc.lambda, coeff(nc.b, nc.b_values),
                             nc.q, spec.p);
  if (nc.family == "general")
    return NonlinearityModel(coeff(nc.c, nc.c_values), nc.theta, nc.lambda,
                             coeff(nc.b, nc.b_values), nc.q, spec.p);
  throw std::invalid_argument("nonlinearity.family: unknown family '" + nc.family + "'");
}

inline WeightFn make_weight(const ProblemSpec& spec) {
  return spec.weight.a_values.empty() ? WeightFn(spec.weight.a)
                                      : WeightFn(spec.weight.a_values);
}

inline SolverOptions make_solver_options(const ProblemSpec& spec) {
  SolverOptions o;
  o.tol_res = spec.solve.tol_res;
  o.max_iters = spec.solve.max_iters;
  return o;
}

inline EigenOptions make_eigen_options(const ProblemSpec& spec) {
  EigenOptions o;
  o.tol_eig = spec.eigen.tol_eig;
  o.max_iters = spec.eigen.max_iters;
  return o;
}

}  // namespace pmix
