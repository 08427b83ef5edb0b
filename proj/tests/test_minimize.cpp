#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pmix/eigensolve.hpp"
#include "pmix/minimize.hpp"

using namespace pmix;
using Catch::Approx;

TEST_CASE("energy vanishes at zero") {
  FeSpace sp = build_space(16, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  CHECK(energy(ctx, power_model(2.0), CoeffVec::zeros(sp)) == 0.0);
  CHECK(energy(ctx, logistic_model(2.0, 10.0), CoeffVec::zeros(sp)) == 0.0);
}

TEST_CASE("power model minimization finds the positive solution") {
  FeSpace sp = build_space(64, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  NonlinearityModel m = power_model(2.0);
  SolveReport rep = minimize(ctx, m, CoeffVec::constant(sp, 0.1));

  CHECK(rep.converged);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.residual_inf <= rep.tol_res);
  CHECK(rep.is_nontrivial);
  CHECK(rep.min_interior_value > 0.0);
  CHECK(rep.energy < 0.0);
  CHECK(min_value(rep.u_star) >= 0.0);

  // independently recomputed weak residual agrees with the report
  auto r = residual(ctx, rep.u_star, m);
  double rmax = 0.0;
  for (double v : r) rmax = std::max(rmax, std::abs(v));
  CHECK(rmax <= rep.tol_res + 1e-10);

  // monotone descent
  for (size_t i = 1; i < rep.history.size(); ++i)
    CHECK(rep.history[i].energy <= rep.history[i - 1].energy);
  CHECK(rep.energy <= energy(ctx, m, CoeffVec::constant(sp, 0.1)));
}

TEST_CASE("subcritical logistic model has only the trivial minimizer") {
  FeSpace sp = build_space(64, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  double lam1 = lambda1_dense(ctx, WeightFn(0.0)).lambda1;
  NonlinearityModel m = logistic_model(2.0, lam1 - 1.0);
  SolveReport rep = minimize(ctx, m, CoeffVec::constant(sp, 0.1));
  CHECK(rep.converged);
  CHECK(rep.linf <= 10.0 * rep.tol_res);
  CHECK_FALSE(rep.is_nontrivial);
}

TEST_CASE("supercritical logistic model has a positive solution with negative energy") {
  FeSpace sp = build_space(64, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  double lam1 = lambda1_dense(ctx, WeightFn(0.0)).lambda1;
  NonlinearityModel m = logistic_model(2.0, lam1 + 1.0);
  SolveReport rep = minimize(ctx, m, CoeffVec::constant(sp, 0.1));
  CHECK(rep.converged);
  CHECK(rep.is_nontrivial);
  CHECK(rep.min_interior_value > 0.0);
  CHECK(rep.energy < 0.0);
}

TEST_CASE("negative minimum witnessed by a scaled eigenfunction") {
  FeSpace sp = build_space(64, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  EigenReport eig = lambda1_dense(ctx, WeightFn(0.0));
  NonlinearityModel m = logistic_model(2.0, eig.lambda1 + 1.0);

  // E(eps e1) = eps^2/2 (lambda1 - lambda) + O(eps^4) < 0 for small eps
  CoeffVec probe = eig.e1;
  for (auto& v : probe.values) v *= 1e-2;
  double witness = energy(ctx, m, probe);
  CHECK(witness < 0.0);

  SolveReport rep = minimize(ctx, m, CoeffVec::constant(sp, 0.1));
  REQUIRE(rep.converged);
  CHECK(rep.energy < witness);  // the minimizer does at least as well
}

TEST_CASE("iteration cap reports best-so-far") {
  FeSpace sp = build_space(32, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  NonlinearityModel m = power_model(2.0);
  SolverOptions opts;
  opts.max_iters = 1;
  SolveReport rep = minimize(ctx, m, CoeffVec::constant(sp, 0.9), opts);
  CHECK_FALSE(rep.converged);
  CHECK(rep.status == SolveStatus::MaxItersExceeded);
  CHECK(rep.history.size() == 1);
  CHECK(rep.iterations == 1);
}

TEST_CASE("p = 3 power model solve") {
  FeSpace sp = build_space(32, 3.0, 0.5);
  FormContext ctx = make_context(sp);
  NonlinearityModel m = power_model(3.0);
  SolveReport rep = minimize(ctx, m, CoeffVec::constant(sp, 0.1));
  CHECK(rep.converged);
  CHECK(rep.is_nontrivial);
  CHECK(rep.min_interior_value > 0.0);
  CHECK(rep.energy < 0.0);
  for (size_t i = 1; i < rep.history.size(); ++i)
    CHECK(rep.history[i].energy <= rep.history[i - 1].energy);
}

TEST_CASE("uniform bound is stable under mesh refinement") {
  NonlinearityModel m = power_model(2.0);
  double linf[2];
  int idx = 0;
  for (int n : {64, 128}) {
    FeSpace sp = build_space(n, 2.0, 0.5);
    FormContext ctx = make_context(sp);
    linf[idx++] = minimize(ctx, m, CoeffVec::constant(sp, 0.1)).linf;
  }
  CHECK(std::abs(linf[1] - linf[0]) / linf[1] < 0.05);
}

TEST_CASE("multi-start: agreement for the power model, verdict unique") {
  FeSpace sp = build_space(32, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  NonlinearityModel m = power_model(2.0);
  MultiStartResult ms = multi_start(ctx, m, 3, 42);
  CHECK(ms.verdict == UniquenessVerdict::Unique);
  CHECK(ms.max_pair_diff <= 1e-6);
  for (const auto& r : ms.runs) {
    CHECK(r.converged);
    CHECK(r.is_nontrivial);
  }
}

TEST_CASE("multi-start: subcritical model is inconclusive (only trivial)") {
  FeSpace sp = build_space(32, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  double lam1 = lambda1_dense(ctx, WeightFn(0.0)).lambda1;
  NonlinearityModel m = logistic_model(2.0, lam1 - 1.0);
  MultiStartResult ms = multi_start(ctx, m, 3, 42);
  CHECK(ms.verdict == UniquenessVerdict::Inconclusive);
  CHECK(ms.detail == "only trivial minimizer");
}

TEST_CASE("multi-start requires at least two starts") {
  FeSpace sp = build_space(32, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  CHECK_THROWS_AS(multi_start(ctx, power_model(2.0), 1, 42), std::invalid_argument);
}

TEST_CASE("invalid solver options are rejected") {
  FeSpace sp = build_space(32, 2.0, 0.5);
  FormContext ctx = make_context(sp);
  SolverOptions opts;
  opts.max_iters = 0;
  CHECK_THROWS_AS(minimize(ctx, power_model(2.0), CoeffVec::zeros(sp), opts),
                  std::invalid_argument);
}
