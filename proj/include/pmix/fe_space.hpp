#pragma once

// Uniform P1 finite elements on (0,1) with homogeneous exterior condition:
// functions are continuous, piecewise linear, and identically zero outside
// the interval.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "pmix/quadrature.hpp"

namespace pmix {

struct FeSpace {
  int n_cells = 0;            // number of mesh cells
  double h = 0.0;             // mesh width, 1 / n_cells
  double p = 2.0;             // exponent in (1, inf)
  double s = 0.5;             // fractional order in (0,1)
  std::vector<double> nodes;  // interior nodes i*h, i = 1 .. n_cells-1
};

inline FeSpace build_space(int n_cells, double p, double s) {
  if (n_cells < 4)
    throw std::invalid_argument("build_space: mesh too coarse, n_cells must be >= 4");
  if (!(p > 1.0))
    throw std::invalid_argument("build_space: p must be > 1");
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("build_space: s must lie in (0,1)");
  FeSpace sp;
  sp.n_cells = n_cells;
  sp.h = 1.0 / n_cells;
  sp.p = p;
  sp.s = s;
  sp.nodes.resize(n_cells - 1);
  for (int i = 1; i < n_cells; ++i) sp.nodes[i - 1] = i * sp.h;
  return sp;
}

// Interior nodal coefficients; the boundary values at 0 and 1 are implicitly
// zero and the function vanishes outside [0,1].
struct CoeffVec {
  std::vector<double> values;

  CoeffVec() = default;
  explicit CoeffVec(std::vector<double> v) : values(std::move(v)) {}
  static CoeffVec zeros(const FeSpace& sp) {
    return CoeffVec(std::vector<double>(sp.n_cells - 1, 0.0));
  }
  static CoeffVec constant(const FeSpace& sp, double c) {
    return CoeffVec(std::vector<double>(sp.n_cells - 1, c));
  }
  int size() const { return static_cast<int>(values.size()); }
};

inline void check_dims(const FeSpace& sp, const CoeffVec& u) {
  if (u.size() != sp.n_cells - 1)
    throw std::invalid_argument("CoeffVec length does not match its FeSpace");
}

// Value at global node i = 0 .. n_cells (boundary nodes are zero).
inline double nodal_value(const FeSpace& sp, const CoeffVec& u, int i) {
  if (i <= 0 || i >= sp.n_cells) return 0.0;
  return u.values[i - 1];
}

// Constant slope of u on cell c = 0 .. n_cells-1.
inline double cell_slope(const FeSpace& sp, const CoeffVec& u, int c) {
  return (nodal_value(sp, u, c + 1) - nodal_value(sp, u, c)) / sp.h;
}

inline double evaluate(const FeSpace& sp, const CoeffVec& u, double x) {
  check_dims(sp, u);
  if (x <= 0.0 || x >= 1.0) return 0.0;
  int c = static_cast<int>(x / sp.h);
  if (c >= sp.n_cells) c = sp.n_cells - 1;
  double t = x / sp.h - c;
  return (1.0 - t) * nodal_value(sp, u, c) + t * nodal_value(sp, u, c + 1);
}

inline double max_abs(const CoeffVec& u) {
  double m = 0.0;
  for (double v : u.values) m = std::max(m, std::abs(v));
  return m;
}

inline double min_value(const CoeffVec& u) {
  double m = u.values.empty() ? 0.0 : u.values[0];
  for (double v : u.values) m = std::min(m, v);
  return m;
}

// (∫_Ω |u|^q dx)^{1/q} by the fixed per-cell Gauss rule (exact for integer
// q <= 9 on piecewise-linear u without interior sign changes).
inline double lp_norm(const FeSpace& sp, const CoeffVec& u, double q) {
  check_dims(sp, u);
  if (q < 1.0) throw std::invalid_argument("lp_norm: q must be >= 1");
  const GaussRule& gr = cell_rule();
  double sum = 0.0;
  for (int c = 0; c < sp.n_cells; ++c) {
    double vl = nodal_value(sp, u, c);
    double vr = nodal_value(sp, u, c + 1);
    double cell = 0.0;
    for (int k = 0; k < gr.size(); ++k) {
      double v = (1.0 - gr.nodes[k]) * vl + gr.nodes[k] * vr;
      cell += gr.weights[k] * std::pow(std::abs(v), q);
    }
    sum += sp.h * cell;
  }
  return std::pow(sum, 1.0 / q);
}

// Nodal interpolation onto another uniform space (exact on refinements).
inline CoeffVec interpolate(const FeSpace& from, const CoeffVec& u, const FeSpace& to) {
  check_dims(from, u);
  CoeffVec out = CoeffVec::zeros(to);
  for (int i = 1; i < to.n_cells; ++i)
    out.values[i - 1] = evaluate(from, u, i * to.h);
  return out;
}

// Profile CSV: header `x,value`, boundary rows included for plotting.
inline void write_profile_csv(const FeSpace& sp, const CoeffVec& u, std::ostream& os) {
  check_dims(sp, u);
  os << "x,value\n";
  char buf[64];
  for (int i = 0; i <= sp.n_cells; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", i * sp.h, nodal_value(sp, u, i));
    os << buf;
  }
}

}  // namespace pmix
