#pragma once

// Evaluation of the local p-Dirichlet form, the nonlocal Gagliardo form with
// singular kernel |x-y|^{-1-ps}, their sum, and the weak residual against
// the nodal hat basis.
//
// Since every discrete function vanishes outside (0,1), the plane integral
// splits as
//
//   ∬_{R^2} = ∬_{Ω×Ω} + 2 ∫_Ω |u(x)|^p ω(x) dx,
//   ω(x) = (x^{-ps} + (1-x)^{-ps}) / (ps),
//
// with ω the exact exterior-kernel integral.  Interior cell pairs fall into
// three regimes: identical cells in closed form, touching cells by a
// Duffy-type radial reduction (the radial direction integrates exactly, a
// split Gauss rule of order k_d handles the angular direction), separated
// cells by a tensor Gauss rule of order k_f (composite on the nearest
// gaps, where the kernel still varies strongly).  For p != 2 the integrands
// |z|^p and |z|^{p-2} z have algebraic kinks along the zero set of
// u(x)-u(y): the rules split at those kinks and absorb the endpoint power
// with a w^2 substitution, also when the zero set passes just outside an
// integration interval, which keeps the composite rules accurate to near
// machine precision and the residual consistent with the energy.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmix/fe_space.hpp"
#include "pmix/nonlinearity.hpp"
#include "pmix/quadrature.hpp"

namespace pmix {

// |z|^{p-2} z with the continuous extension J_p(0) = 0 (p > 1).  The
// exponents used by the canonical test problems avoid libm pow.
inline double jpow(double z, double p) {
  if (z == 0.0) return 0.0;
  if (p == 2.0) return z;
  if (p == 3.0) return std::abs(z) * z;
  if (p == 1.5) return std::copysign(std::sqrt(std::abs(z)), z);
  return std::copysign(std::pow(std::abs(z), p - 1.0), z);
}

inline double pow_abs(double z, double p) {
  if (p == 2.0) return z * z;
  double a = std::abs(z);
  if (p == 3.0) return a * a * a;
  if (p == 1.5) return a * std::sqrt(a);
  return std::pow(a, p);
}

// Exterior-kernel weight; diverges at the endpoints of (0,1).
inline double tail_weight(const FeSpace& sp, double x) {
  double ps = sp.p * sp.s;
  return (std::pow(x, -ps) + std::pow(1.0 - x, -ps)) / ps;
}

struct FarPoint {
  double tx, ty;  // reference coordinates in [0,1] within each cell
  double wk;      // tensor weight times kernel value
};

struct FormContext {
  FeSpace space;
  int diag_order = 6;  // k_d, angular rule on touching pairs
  int far_order = 4;   // k_f, tensor rule on separated pairs
  GaussRule gl_d, gl_f;
  GaussRule gl_f2;  // doubled order, used by the split rule on near gaps

  // kernel t^{-1-ps}: exponent doubled when 2(1+ps) is a small integer,
  // allowing sqrt/multiply instead of pow in the split rule
  int kern_twice = 0;  // 0 = generic

  double ps = 0.0;     // p*s, kernel exponent is 1 + ps
  double beta = 0.0;   // p - ps + 1, radial exponent after reduction
  double csame = 0.0;  // ∬_{K×K} |x-y|^{p-1-ps} dxdy per unit slope power
  double adj_c = 0.0;  // 2 h^beta / beta
  double s00 = 0.0, s01 = 0.0, s11 = 0.0;  // angular basis moments

  std::vector<std::vector<FarPoint>> far_pts;  // tensor points by gap-2

  // Exterior weight factors at the per-cell rule nodes. xpow is zero on
  // cell 0 and mxpow on the last cell; there the boundary singularity is
  // integrated in closed form against the linear profile.
  std::vector<double> xpow, mxpow;
  double bnd_tail = 0.0;  // ∫_0^h r^{p-ps} dr = h^beta / beta
};

namespace detail {

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Seg {
  double a, b;
  bool sing_a = false, sing_b = false;
};

// Visit the Gauss nodes of one segment, substituting t = end -/+ len w^2 at
// a flagged endpoint to absorb an algebraic kink there.
template <class Emit>
inline void seg_nodes(const Seg& sg, const GaussRule& gr, Emit&& emit) {
  double len = sg.b - sg.a;
  if (len <= 0.0) return;
  if (sg.sing_a && sg.sing_b) {
    double mid = 0.5 * (sg.a + sg.b);
    seg_nodes(Seg{sg.a, mid, true, false}, gr, emit);
    seg_nodes(Seg{mid, sg.b, false, true}, gr, emit);
    return;
  }
  if (sg.sing_a || sg.sing_b) {
    for (int k = 0; k < gr.size(); ++k) {
      double w = gr.nodes[k];
      double t = sg.sing_a ? sg.a + len * w * w : sg.b - len * w * w;
      emit(t, gr.weights[k] * 2.0 * len * w);
    }
  } else {
    for (int k = 0; k < gr.size(); ++k)
      emit(sg.a + len * gr.nodes[k], gr.weights[k] * len);
  }
}

template <class F>
inline double integrate_segs(const std::vector<Seg>& segs, const GaussRule& gr, F&& fn) {
  double total = 0.0;
  for (const Seg& sg : segs)
    seg_nodes(sg, gr, [&](double t, double w) { total += w * fn(t); });
  return total;
}

inline void split_at(std::vector<Seg>& segs, double t) {
  for (size_t i = 0; i < segs.size(); ++i) {
    if (t > segs[i].a && t < segs[i].b) {
      Seg right{t, segs[i].b, true, segs[i].sing_b};
      segs[i].b = t;
      segs[i].sing_b = true;
      segs.insert(segs.begin() + i + 1, right);
      return;
    }
  }
}

// Flag the endpoint nearest to a root lying just outside [lo,hi]: the
// integrand is analytic there but steep, and the clustered substitution
// keeps the Gauss error at noise level.
inline void flag_near(std::vector<Seg>& segs, double root, double lo, double hi,
                      double margin) {
  if (root <= lo && root > lo - margin) segs.front().sing_a = true;
  if (root >= hi && root < hi + margin) segs.back().sing_b = true;
}

inline double kernel_pow(const FormContext& ctx, double t) {
  if (ctx.kern_twice > 0) {
    double s = std::sqrt(t);
    double r = 1.0;
    for (int k = 0; k < ctx.kern_twice; ++k) r *= s;
    return 1.0 / r;
  }
  return std::pow(t, -1.0 - ctx.ps);
}

// Angular segments for a touching pair: the weight kinks at t = 1/2 and,
// for p != 2, |g|^p kinks at the root of g(t) = mL (1-t) + mR t.  Quartered
// base segments keep the Gauss error of the weight max(t,1-t)^{-beta} at
// noise level up to beta ~ 4.
inline std::vector<Seg> adj_segments(double mL, double mR, double p) {
  std::vector<Seg> segs{{0.0, 0.25}, {0.25, 0.5}, {0.5, 0.75}, {0.75, 1.0}};
  if (p != 2.0 && mL != mR) {
    double t = mL / (mL - mR);
    if (t > 0.0 && t < 1.0)
      split_at(segs, t);
    else
      flag_near(segs, t, 0.0, 1.0, 0.5);
  }
  return segs;
}

// Node visitor for the separated-pair rule.  A flagged endpoint marks an
// algebraic kink at or just beyond it: the quarter of the segment next to
// the flag takes the clustering w^2 substitution, the rest a plain rule.
// Keeping the substitution local preserves the kernel's analyticity margin;
// stretching it over the whole segment would drag the kernel pole close in
// the substituted variable.  Flagged parts use the doubled-order rule.
template <class Emit>
inline void far_seg_nodes(const Seg& sg, const GaussRule& plain, const GaussRule& sub,
                          Emit&& emit) {
  double len = sg.b - sg.a;
  if (len <= 0.0) return;
  if (sg.sing_a && sg.sing_b) {
    double mid = 0.5 * (sg.a + sg.b);
    far_seg_nodes(Seg{sg.a, mid, true, false}, plain, sub, emit);
    far_seg_nodes(Seg{mid, sg.b, false, true}, plain, sub, emit);
    return;
  }
  if (!sg.sing_a && !sg.sing_b) {
    for (int k = 0; k < plain.size(); ++k)
      emit(sg.a + len * plain.nodes[k], plain.weights[k] * len);
    return;
  }
  double q = 0.25 * len;
  Seg near = sg.sing_a ? Seg{sg.a, sg.a + q} : Seg{sg.b - q, sg.b};
  Seg rest = sg.sing_a ? Seg{sg.a + q, sg.b} : Seg{sg.a, sg.b - q};
  for (int k = 0; k < sub.size(); ++k) {
    double w = sub.nodes[k];
    double t = sg.sing_a ? near.a + q * w * w : near.b - q * w * w;
    emit(t, sub.weights[k] * 2.0 * q * w);
  }
  double rlen = rest.b - rest.a;
  for (int k = 0; k < sub.size(); ++k)
    emit(rest.a + rlen * sub.nodes[k], sub.weights[k] * rlen);
}

// ∬ over one separated ordered pair (x in cell ci, y in cell cj > ci) of
// fn(x, y) weighted by the kernel; splits along the zero set of the affine
// difference D(ξ,υ) = d0 + mi ξ - mj υ.
template <class Accum>
inline void far_pair_split(const FormContext& ctx, int ci, int cj, double d0, double mi,
                           double mj, Accum&& accum) {
  const double h = ctx.space.h;
  const double x0 = ci * h, y0 = cj * h;
  const double margin = 1.5 * h;
  const GaussRule& plain = (cj - ci <= 3) ? ctx.gl_f2 : ctx.gl_f;

  std::vector<Seg> outer{{0.0, h}};
  if (mi != 0.0) {
    double r0 = -d0 / mi;                // zero line meets υ = 0
    double r1 = (mj * h - d0) / mi;      // zero line meets υ = h
    for (double r : {r0, r1}) {
      if (r > 0.0 && r < h)
        split_at(outer, r);
      else
        flag_near(outer, r, 0.0, h, margin);
    }
  }
  for (const Seg& sg : outer) {
    far_seg_nodes(sg, plain, ctx.gl_f2, [&](double xi, double wx) {
      double x = x0 + xi;
      std::vector<Seg> inner{{0.0, h}};
      if (mj != 0.0) {
        double vstar = (d0 + mi * xi) / mj;
        if (vstar > 0.0 && vstar < h)
          split_at(inner, vstar);
        else
          flag_near(inner, vstar, 0.0, h, margin);
      }
      for (const Seg& in : inner) {
        far_seg_nodes(in, plain, ctx.gl_f2, [&](double v, double wv) {
          double y = y0 + v;
          accum(x, y, wx * wv * kernel_pow(ctx, y - x));
        });
      }
    });
  }
}

// Separated pair is kink-free when the zero set of D stays away from the
// (margin-extended) pair square.
inline bool far_pair_clean(double d0, double mi, double mj, double h) {
  const double m = 1.5 * h;
  double c00 = d0, c10 = d0 + mi * h, c01 = d0 - mj * h, c11 = d0 + mi * h - mj * h;
  double lo = std::min(std::min(c00, c10), std::min(c01, c11));
  double hi = std::max(std::max(c00, c10), std::max(c01, c11));
  if (lo <= 0.0 && hi >= 0.0) return !(lo < 0.0 || hi > 0.0);  // crossing (or all zero)
  // distance of the nearest corner to the zero set, in cell units
  double slope = std::abs(mi) + std::abs(mj);
  if (slope == 0.0) return true;
  double dist = std::min(std::abs(lo), std::abs(hi)) / slope;
  return dist > m;
}

}  // namespace detail

inline FormContext make_context(const FeSpace& sp, int diag_order = 6, int far_order = 4) {
  if (diag_order < 3 || far_order < 3)
    throw std::invalid_argument("make_context: quadrature orders must be >= 3");
  FormContext ctx;
  ctx.space = sp;
  ctx.diag_order = diag_order;
  ctx.far_order = far_order;
  ctx.gl_d = gauss_legendre(diag_order);
  ctx.gl_f = gauss_legendre(far_order);
  ctx.gl_f2 = gauss_legendre(2 * far_order);

  const double p = sp.p, h = sp.h;
  ctx.ps = p * sp.s;
  ctx.beta = p - ctx.ps + 1.0;
  {
    double twice = 2.0 * (1.0 + ctx.ps);
    if (twice == std::round(twice) && twice <= 16.0)
      ctx.kern_twice = static_cast<int>(twice);
  }
  double gamma = p - 1.0 - ctx.ps;
  ctx.csame = 2.0 * std::pow(h, gamma + 2.0) / ((gamma + 1.0) * (gamma + 2.0));
  ctx.adj_c = 2.0 * std::pow(h, ctx.beta) / ctx.beta;
  ctx.bnd_tail = std::pow(h, ctx.beta) / ctx.beta;

  // Angular moments on the same quartered segments as the kink-free energy
  // path, so the assembled p = 2 matrix reproduces q_form to rounding.
  {
    std::vector<detail::Seg> segs = detail::adj_segments(1.0, 1.0, p);
    auto mom = [&](auto basis) {
      return detail::integrate_segs(segs, ctx.gl_d, [&](double t) {
        return basis(t) * std::pow(std::max(t, 1.0 - t), -ctx.beta);
      });
    };
    ctx.s00 = mom([](double t) { return (1.0 - t) * (1.0 - t); });
    ctx.s01 = mom([](double t) { return (1.0 - t) * t; });
    ctx.s11 = mom([](double t) { return t * t; });
  }

  // Composite tensor points per gap; two subdivisions where the kernel
  // curvature is strongest.
  const int n = sp.n_cells;
  ctx.far_pts.resize(std::max(0, n - 2));
  for (int gap = 2; gap < n; ++gap) {
    int nsub = gap <= 3 ? 2 : 1;
    auto& pts = ctx.far_pts[gap - 2];
    pts.reserve(static_cast<size_t>(nsub * nsub) * far_order * far_order);
    for (int sx = 0; sx < nsub; ++sx)
      for (int sy = 0; sy < nsub; ++sy)
        for (int qx = 0; qx < far_order; ++qx)
          for (int qy = 0; qy < far_order; ++qy) {
            FarPoint pt;
            pt.tx = (sx + ctx.gl_f.nodes[qx]) / nsub;
            pt.ty = (sy + ctx.gl_f.nodes[qy]) / nsub;
            double dist = (gap + pt.ty - pt.tx) * h;
            pt.wk = ctx.gl_f.weights[qx] * ctx.gl_f.weights[qy] * (h * h) /
                    (nsub * nsub) * std::pow(dist, -1.0 - ctx.ps);
            pts.push_back(pt);
          }
  }

  const GaussRule& gc = cell_rule();
  ctx.xpow.assign(static_cast<size_t>(n) * gc.size(), 0.0);
  ctx.mxpow.assign(static_cast<size_t>(n) * gc.size(), 0.0);
  for (int c = 0; c < n; ++c)
    for (int k = 0; k < gc.size(); ++k) {
      double x = (c + gc.nodes[k]) * h;
      if (c >= 1) ctx.xpow[c * gc.size() + k] = std::pow(x, -ctx.ps);
      if (c <= n - 2) ctx.mxpow[c * gc.size() + k] = std::pow(1.0 - x, -ctx.ps);
    }
  return ctx;
}

inline double local_energy(const FormContext& ctx, const CoeffVec& u) {
  const FeSpace& sp = ctx.space;
  check_dims(sp, u);
  double sum = 0.0;
  for (int c = 0; c < sp.n_cells; ++c)
    sum += sp.h * pow_abs(cell_slope(sp, u, c), sp.p);
  return sum;
}

// ∬_{R^2} |u(x)-u(y)|^p / |x-y|^{1+ps} dx dy for the zero-extended u.
inline double nonlocal_energy(const FormContext& ctx, const CoeffVec& u) {
  const FeSpace& sp = ctx.space;
  check_dims(sp, u);
  const int n = sp.n_cells;
  const double p = sp.p, h = sp.h;

  std::vector<double> slope(n), lval(n), rval(n);
  for (int c = 0; c < n; ++c) {
    lval[c] = nodal_value(sp, u, c);
    rval[c] = nodal_value(sp, u, c + 1);
    slope[c] = (rval[c] - lval[c]) / h;
  }

  double sum = 0.0;
  // identical pairs, closed form
  for (int c = 0; c < n; ++c) sum += pow_abs(slope[c], p) * ctx.csame;

  // touching pairs: exact radial integral, split Gauss in the angle
  for (int c = 0; c + 1 < n; ++c) {
    double mL = slope[c], mR = slope[c + 1];
    if (mL == 0.0 && mR == 0.0) continue;
    auto segs = detail::adj_segments(mL, mR, p);
    double val = detail::integrate_segs(segs, ctx.gl_d, [&](double t) {
      double g = mL * (1.0 - t) + mR * t;
      return pow_abs(g, p) * std::pow(std::max(t, 1.0 - t), -ctx.beta);
    });
    sum += ctx.adj_c * val;
  }

  // separated pairs
  for (int ci = 0; ci + 2 < n; ++ci) {
    for (int cj = ci + 2; cj < n; ++cj) {
      double d0 = lval[ci] - lval[cj];
      double mi = slope[ci], mj = slope[cj];
      if (d0 == 0.0 && mi == 0.0 && mj == 0.0) continue;
      double part = 0.0;
      if (p == 2.0 || detail::far_pair_clean(d0, mi, mj, h)) {
        for (const FarPoint& pt : ctx.far_pts[cj - ci - 2]) {
          double d = (lval[ci] + mi * pt.tx * h) - (lval[cj] + mj * pt.ty * h);
          part += pt.wk * pow_abs(d, p);
        }
      } else {
        detail::far_pair_split(ctx, ci, cj, d0, mi, mj, [&](double x, double y, double w) {
          double d = (lval[ci] + mi * (x - ci * h)) - (lval[cj] + mj * (y - cj * h));
          part += w * pow_abs(d, p);
        });
      }
      sum += 2.0 * part;
    }
  }

  // exterior tail: 2 ∫ |u|^p ω, boundary-cell singular parts in closed form
  const GaussRule& gc = cell_rule();
  double tail = 0.0;
  for (int c = 0; c < n; ++c) {
    double cellv = 0.0;
    for (int k = 0; k < gc.size(); ++k) {
      double v = (1.0 - gc.nodes[k]) * lval[c] + gc.nodes[k] * rval[c];
      cellv += gc.weights[k] * pow_abs(v, p) *
               (ctx.xpow[c * gc.size() + k] + ctx.mxpow[c * gc.size() + k]);
    }
    tail += h * cellv;
  }
  tail += pow_abs(slope[0], p) * ctx.bnd_tail;
  tail += pow_abs(slope[n - 1], p) * ctx.bnd_tail;
  sum += 2.0 * tail / ctx.ps;

  return sum;
}

inline double q_form(const FormContext& ctx, const CoeffVec& u) {
  return local_energy(ctx, u) + nonlocal_energy(ctx, u);
}

// Gateaux derivative of (1/p) Q_{p,s} at u against every interior hat:
// out[i] = ∫ |u'|^{p-2} u' φ_i' + ∬ J_p(u(x)-u(y)) (φ_i(x)-φ_i(y)) K.
inline std::vector<double> q_gradient(const FormContext& ctx, const CoeffVec& u) {
  const FeSpace& sp = ctx.space;
  check_dims(sp, u);
  const int n = sp.n_cells;
  const double p = sp.p, h = sp.h;

  std::vector<double> slope(n), lval(n);
  for (int c = 0; c < n; ++c) {
    lval[c] = nodal_value(sp, u, c);
    slope[c] = cell_slope(sp, u, c);
  }
  std::vector<double> out(n - 1, 0.0);
  auto add = [&](int node, double w) {
    if (node >= 1 && node <= n - 1) out[node - 1] += w;
  };

  // local form, exact
  for (int c = 0; c < n; ++c) {
    double jm = jpow(slope[c], p);
    add(c, -jm);
    add(c + 1, jm);
  }

  // identical pairs
  for (int c = 0; c < n; ++c) {
    double jm = jpow(slope[c], p) * ctx.csame;
    add(c, -jm / h);
    add(c + 1, jm / h);
  }

  // touching pairs: moments against the two angular basis functions
  for (int c = 0; c + 1 < n; ++c) {
    double mL = slope[c], mR = slope[c + 1];
    if (mL == 0.0 && mR == 0.0) continue;
    auto segs = detail::adj_segments(mL, mR, p);
    double im = 0.0, ir = 0.0;
    for (const detail::Seg& sg : segs)
      detail::seg_nodes(sg, ctx.gl_d, [&](double t, double w) {
        double g = mL * (1.0 - t) + mR * t;
        double core = w * jpow(g, p) * std::pow(std::max(t, 1.0 - t), -ctx.beta);
        im += core * (1.0 - t);
        ir += core * t;
      });
    im *= ctx.adj_c;
    ir *= ctx.adj_c;
    // pairing with v = vL (1-t) + vR t, hat slopes on (cell c, cell c+1)
    add(c, -im / h);
    add(c + 1, im / h - ir / h);
    add(c + 2, ir / h);
  }

  // separated pairs
  for (int ci = 0; ci + 2 < n; ++ci) {
    for (int cj = ci + 2; cj < n; ++cj) {
      double d0 = lval[ci] - lval[cj];
      double mi = slope[ci], mj = slope[cj];
      if (d0 == 0.0 && mi == 0.0 && mj == 0.0) continue;
      double gi0 = 0.0, gi1 = 0.0, gj0 = 0.0, gj1 = 0.0;
      if (p == 2.0 || detail::far_pair_clean(d0, mi, mj, h)) {
        for (const FarPoint& pt : ctx.far_pts[cj - ci - 2]) {
          double val = pt.wk * jpow((lval[ci] + mi * pt.tx * h) -
                                        (lval[cj] + mj * pt.ty * h),
                                    p);
          gi0 += val * (1.0 - pt.tx);
          gi1 += val * pt.tx;
          gj0 -= val * (1.0 - pt.ty);
          gj1 -= val * pt.ty;
        }
      } else {
        detail::far_pair_split(ctx, ci, cj, d0, mi, mj, [&](double x, double y, double w) {
          double tx = (x - ci * h) / h, ty = (y - cj * h) / h;
          double val = w * jpow((lval[ci] + mi * (x - ci * h)) -
                                    (lval[cj] + mj * (y - cj * h)),
                                p);
          gi0 += val * (1.0 - tx);
          gi1 += val * tx;
          gj0 -= val * (1.0 - ty);
          gj1 -= val * ty;
        });
      }
      add(ci, 2.0 * gi0);
      add(ci + 1, 2.0 * gi1);
      add(cj, 2.0 * gj0);
      add(cj + 1, 2.0 * gj1);
    }
  }

  // exterior tail: 2 ∫ J_p(u) φ_i ω
  const GaussRule& gc = cell_rule();
  for (int c = 0; c < n; ++c) {
    double t0 = 0.0, t1 = 0.0;
    double vl = nodal_value(sp, u, c), vr = nodal_value(sp, u, c + 1);
    for (int k = 0; k < gc.size(); ++k) {
      double tk = gc.nodes[k];
      double v = (1.0 - tk) * vl + tk * vr;
      double wgt = gc.weights[k] * jpow(v, p) *
                   (ctx.xpow[c * gc.size() + k] + ctx.mxpow[c * gc.size() + k]);
      t0 += wgt * (1.0 - tk);
      t1 += wgt * tk;
    }
    add(c, 2.0 * h * t0 / ctx.ps);
    add(c + 1, 2.0 * h * t1 / ctx.ps);
  }
  add(1, 2.0 * jpow(slope[0], p) * ctx.bnd_tail / (h * ctx.ps));
  add(n - 1, -2.0 * jpow(slope[n - 1], p) * ctx.bnd_tail / (h * ctx.ps));

  return out;
}

// ∫_Ω f(x, u⁺) φ_i dx with f extended by 0 below t = 0.
inline std::vector<double> load_vector(const FormContext& ctx, const NonlinearityModel& m,
                                       const CoeffVec& u) {
  const FeSpace& sp = ctx.space;
  check_dims(sp, u);
  const GaussRule& gc = cell_rule();
  std::vector<double> out(sp.n_cells - 1, 0.0);
  for (int c = 0; c < sp.n_cells; ++c) {
    double vl = nodal_value(sp, u, c), vr = nodal_value(sp, u, c + 1);
    double t0 = 0.0, t1 = 0.0;
    for (int k = 0; k < gc.size(); ++k) {
      double tk = gc.nodes[k];
      double v = (1.0 - tk) * vl + tk * vr;
      if (v <= 0.0) continue;
      double x = (c + tk) * sp.h;
      double w = gc.weights[k] * m.f(x, v);
      t0 += w * (1.0 - tk);
      t1 += w * tk;
    }
    if (c >= 1) out[c - 1] += sp.h * t0;
    if (c + 1 <= sp.n_cells - 1) out[c] += sp.h * t1;
  }
  return out;
}

// Weak residual of the Dirichlet problem: zero at a discrete weak solution.
inline std::vector<double> residual(const FormContext& ctx, const CoeffVec& u,
                                    const NonlinearityModel& m) {
  std::vector<double> r = q_gradient(ctx, u);
  std::vector<double> l = load_vector(ctx, m, u);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= l[i];
  return r;
}

// --- elementary inequality oracles --------------------------------------

// A_p(v,w) = |v|^p + (p-1)|w|^p - p |w|^{p-2} <v,w>, nonnegative for p > 1.
inline double ap_gap(const std::vector<double>& v, const std::vector<double>& w, double p) {
  if (v.size() != w.size()) throw std::invalid_argument("ap_gap: dimension mismatch");
  double nv = 0.0, nw = 0.0, dot = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    nv += v[i] * v[i];
    nw += w[i] * w[i];
    dot += v[i] * w[i];
  }
  nv = std::sqrt(nv);
  nw = std::sqrt(nw);
  double cross = nw == 0.0 ? 0.0 : std::pow(nw, p - 2.0) * dot;
  return std::pow(nv, p) + (p - 1.0) * std::pow(nw, p) - p * cross;
}

// Discrete Picone gap |c-d|^p - J_p(a-b)(c^p/a^{p-1} - d^p/b^{p-1}); zero
// exactly when ad = bc.
inline double picone_gap(double a, double b, double c, double d, double p) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("picone_gap: a and b must be positive");
  if (c < 0.0 || d < 0.0)
    throw std::invalid_argument("picone_gap: c and d must be nonnegative");
  double lhs = std::pow(std::abs(c - d), p);
  double rhs = jpow(a - b, p) *
               (std::pow(c, p) / std::pow(a, p - 1.0) - std::pow(d, p) / std::pow(b, p - 1.0));
  return lhs - rhs;
}

// --- dense p = 2 assembly ------------------------------------------------

// Full Q_{2,s} stiffness (local + nonlocal + tail) on interior hats; only
// the linear case admits an assembled tensor.
inline Eigen::MatrixXd assemble_qform_p2(const FormContext& ctx) {
  const FeSpace& sp = ctx.space;
  if (sp.p != 2.0)
    throw std::invalid_argument("assemble_qform_p2: requires p == 2");
  const int n = sp.n_cells;
  const double h = sp.h;
  const int ni = n - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ni, ni);
  auto add = [&](int a, int b, double w) {
    if (a >= 1 && a <= ni && b >= 1 && b <= ni) A(a - 1, b - 1) += w;
  };

  // local stiffness
  for (int c = 0; c < n; ++c) {
    add(c, c, 1.0 / h);
    add(c + 1, c + 1, 1.0 / h);
    add(c, c + 1, -1.0 / h);
    add(c + 1, c, -1.0 / h);
  }

  // identical pairs: slopes of the two hats on the cell
  for (int c = 0; c < n; ++c) {
    double w = ctx.csame / (h * h);
    add(c, c, w);
    add(c + 1, c + 1, w);
    add(c, c + 1, -w);
    add(c + 1, c, -w);
  }

  // touching pairs via the angular moments
  for (int c = 0; c + 1 < n; ++c) {
    const int nodes[3] = {c, c + 1, c + 2};
    const double sl[3][2] = {{-1.0 / h, 0.0}, {1.0 / h, -1.0 / h}, {0.0, 1.0 / h}};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double w = ctx.adj_c * (sl[a][0] * sl[b][0] * ctx.s00 +
                                (sl[a][0] * sl[b][1] + sl[a][1] * sl[b][0]) * ctx.s01 +
                                sl[a][1] * sl[b][1] * ctx.s11);
        add(nodes[a], nodes[b], w);
      }
  }

  // separated pairs
  for (int ci = 0; ci + 2 < n; ++ci) {
    for (int cj = ci + 2; cj < n; ++cj) {
      double m[4][4] = {};
      for (const FarPoint& pt : ctx.far_pts[cj - ci - 2]) {
        double dphi[4] = {1.0 - pt.tx, pt.tx, -(1.0 - pt.ty), -pt.ty};
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) m[a][b] += pt.wk * dphi[a] * dphi[b];
      }
      const int nodes[4] = {ci, ci + 1, cj, cj + 1};
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) add(nodes[a], nodes[b], 2.0 * m[a][b]);
    }
  }

  // tail
  const GaussRule& gc = cell_rule();
  for (int c = 0; c < n; ++c) {
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    for (int k = 0; k < gc.size(); ++k) {
      double tk = gc.nodes[k];
      double w = gc.weights[k] *
                 (ctx.xpow[c * gc.size() + k] + ctx.mxpow[c * gc.size() + k]);
      m00 += w * (1.0 - tk) * (1.0 - tk);
      m01 += w * (1.0 - tk) * tk;
      m11 += w * tk * tk;
    }
    double f = 2.0 * h / ctx.ps;
    add(c, c, f * m00);
    add(c, c + 1, f * m01);
    add(c + 1, c, f * m01);
    add(c + 1, c + 1, f * m11);
  }
  double fb = 2.0 * ctx.bnd_tail / (h * h * ctx.ps);
  add(1, 1, fb);
  add(n - 1, n - 1, fb);

  return A;
}

// L^2 mass matrix by the shared per-cell rule (exact for P1 products).
inline Eigen::MatrixXd assemble_mass(const FormContext& ctx) {
  const FeSpace& sp = ctx.space;
  const int n = sp.n_cells, ni = n - 1;
  const GaussRule& gc = cell_rule();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ni, ni);
  auto add = [&](int a, int b, double w) {
    if (a >= 1 && a <= ni && b >= 1 && b <= ni) M(a - 1, b - 1) += w;
  };
  for (int c = 0; c < n; ++c) {
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    for (int k = 0; k < gc.size(); ++k) {
      double tk = gc.nodes[k];
      m00 += gc.weights[k] * (1.0 - tk) * (1.0 - tk);
      m01 += gc.weights[k] * (1.0 - tk) * tk;
      m11 += gc.weights[k] * tk * tk;
    }
    add(c, c, sp.h * m00);
    add(c, c + 1, sp.h * m01);
    add(c + 1, c, sp.h * m01);
    add(c + 1, c + 1, sp.h * m11);
  }
  return M;
}

}  // namespace pmix
