#pragma once

// Gauss-Legendre rules mapped to the reference interval (0,1).

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pmix {

struct GaussRule {
  std::vector<double> nodes;    // in (0,1)
  std::vector<double> weights;  // sum to 1
  int size() const { return static_cast<int>(nodes.size()); }
};

// Nodes by Newton iteration on the Legendre recurrence; accurate to ~1 ulp
// for the orders used here.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);  // x descending -> nodes ascending
    rule.weights[i] = 0.5 * w;
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

// Fixed per-cell rule shared by every pointwise integral in the library
// (L^q norms, load vectors, mass matrices, level-set truncations).
inline const GaussRule& cell_rule() {
  static const GaussRule r = gauss_legendre(5);
  return r;
}

}  // namespace pmix
