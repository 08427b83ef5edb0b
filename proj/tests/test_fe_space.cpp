#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "pmix/fe_space.hpp"

using namespace pmix;
using Catch::Approx;

TEST_CASE("build_space produces the uniform partition") {
  FeSpace sp = build_space(4, 2.0, 0.5);
  REQUIRE(sp.h == Approx(0.25));
  REQUIRE(sp.nodes.size() == 3);
  CHECK(sp.nodes[0] == Approx(0.25));
  CHECK(sp.nodes[1] == Approx(0.5));
  CHECK(sp.nodes[2] == Approx(0.75));
  CHECK(sp.h * sp.n_cells == Approx(1.0).margin(1e-15));

  FeSpace fine = build_space(128, 3.0, 0.3);
  CHECK(fine.nodes.size() == 127);
  CHECK(fine.h == Approx(1.0 / 128));
}

TEST_CASE("build_space rejects invalid input") {
  CHECK_THROWS_WITH(build_space(2, 2.0, 0.5), Catch::Matchers::ContainsSubstring("too coarse"));
  CHECK_THROWS_AS(build_space(64, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_space(64, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_space(64, 2.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(build_space(64, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("evaluate interpolates and extends by zero") {
  FeSpace sp = build_space(4, 2.0, 0.5);
  CoeffVec ones = CoeffVec::constant(sp, 1.0);
  CHECK(evaluate(sp, ones, 0.5) == Approx(1.0));
  CHECK(evaluate(sp, ones, -3.0) == 0.0);
  CHECK(evaluate(sp, ones, 0.125) == Approx(0.5));

  CoeffVec u = oracle::random_vec(sp, 3);
  for (double x : {-1.0, 0.0, 1.0, 2.5}) CHECK(evaluate(sp, u, x) == 0.0);
}

TEST_CASE("lp_norm: zero, hat closed form, homogeneity") {
  FeSpace sp = build_space(4, 2.0, 0.5);
  CHECK(lp_norm(sp, CoeffVec::zeros(sp), 2.0) == 0.0);

  CoeffVec hat(std::vector<double>{0.0, 1.0, 0.0});
  double exact = std::sqrt(oracle::p1_l2_sq(sp, hat));
  CHECK(lp_norm(sp, hat, 2.0) == Approx(exact).epsilon(1e-14));
  CHECK(exact == Approx(std::sqrt(1.0 / 6.0)).epsilon(1e-14));

  CoeffVec scaled = hat;
  for (auto& v : scaled.values) v *= -2.0;
  CHECK(lp_norm(sp, scaled, 2.0) == Approx(2.0 * lp_norm(sp, hat, 2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(lp_norm(sp, hat, 0.5), std::invalid_argument);
}

TEST_CASE("lp_norm homogeneity for random data and exponents") {
  FeSpace sp = build_space(16, 2.5, 0.4);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> cdist(-3.0, 3.0);
  for (int rep = 0; rep < 10; ++rep) {
    CoeffVec u = oracle::random_vec(sp, 100 + rep);
    double c = cdist(rng);
    if (c == 0.0) continue;
    for (double q : {1.0, 2.0, 3.5}) {
      CoeffVec cu = u;
      for (auto& v : cu.values) v *= c;
      double lhs = lp_norm(sp, cu, q);
      double rhs = std::abs(c) * lp_norm(sp, u, q);
      CHECK(lhs == Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("lp_norm is invariant under refinement (P1 nesting)") {
  FeSpace coarse = build_space(8, 2.0, 0.5);
  FeSpace fine = build_space(16, 2.0, 0.5);

  CoeffVec upos = oracle::random_vec(coarse, 5, 0.1, 2.0);
  CoeffVec upos_f = interpolate(coarse, upos, fine);
  for (double q : {1.0, 2.0, 3.0}) {
    double a = lp_norm(coarse, upos, q);
    double b = lp_norm(fine, upos_f, q);
    CHECK(a == Approx(b).epsilon(1e-12));
  }

  CoeffVec umix = oracle::random_vec(coarse, 6);
  CoeffVec umix_f = interpolate(coarse, umix, fine);
  CHECK(lp_norm(coarse, umix, 2.0) == Approx(lp_norm(fine, umix_f, 2.0)).epsilon(1e-12));
}

TEST_CASE("profile CSV carries boundary rows and the x,value header") {
  FeSpace sp = build_space(4, 2.0, 0.5);
  CoeffVec hat(std::vector<double>{0.0, 1.0, 0.0});
  std::ostringstream os;
  write_profile_csv(sp, hat, os);
  std::string text = os.str();
  CHECK(text.rfind("x,value\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);  // header + 5 nodes
  CHECK(text.find("\n0,0\n") != std::string::npos);
  CHECK(text.find("\n1,0\n") != std::string::npos);
}

TEST_CASE("dimension mismatch is rejected") {
  FeSpace sp = build_space(8, 2.0, 0.5);
  CoeffVec bad(std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(lp_norm(sp, bad, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(sp, bad, 0.5), std::invalid_argument);
}
