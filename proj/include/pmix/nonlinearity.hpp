#pragma once

// Parametric nonlinearity family
//
//   f(x,t) = c(x) t^theta + lambda t^{p-1} - b(x) t^{q-1},   t >= 0,
//
// with bounded nonnegative coefficients c, b, exponents 0 <= theta < p-1 and
// q > p.  The family keeps the ratio f(x,t)/t^{p-1} strictly decreasing in t
// and makes the t->0+ / t->inf limits of that ratio computable in closed
// form.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmix {

// Bounded coefficient on [0,1]: either a constant or uniform nodal samples
// (piecewise-linear interpolation, endpoints included).
struct Coefficient {
  std::vector<double> samples;

  Coefficient() : samples{0.0} {}
  Coefficient(double c) : samples{c} {}  // NOLINT: implicit by design
  explicit Coefficient(std::vector<double> nodal) : samples(std::move(nodal)) {
    if (samples.empty()) throw std::invalid_argument("Coefficient: empty sample set");
  }

  bool constant() const { return samples.size() == 1; }

  double eval(double x) const {
    if (constant()) return samples[0];
    int n = static_cast<int>(samples.size()) - 1;
    double z = std::clamp(x, 0.0, 1.0) * n;
    int i = std::min(static_cast<int>(z), n - 1);
    double t = z - i;
    return (1.0 - t) * samples[i] + t * samples[i + 1];
  }

  double min() const { return *std::min_element(samples.begin(), samples.end()); }
  double max() const { return *std::max_element(samples.begin(), samples.end()); }
  bool identically_zero() const { return max() == 0.0 && min() == 0.0; }
};

enum class ExtClass {
  Finite,    // bounded, uniformly equal to lambda
  PlusInf,   // +inf on all of (0,1)
  MinusInf,  // -inf on all of (0,1)
  Mixed      // infinite on a strict subset of positive measure
};

struct AsymptoticData {
  ExtClass a0_class = ExtClass::Finite;
  double a0_value = 0.0;  // valid when a0_class == Finite
  ExtClass ainf_class = ExtClass::Finite;
  double ainf_value = 0.0;
  double c_f = 0.0;                // ||f(.,1)||_inf
  std::optional<double> rho_f;     // positivity radius near t=0, capped at 1
};

class NonlinearityModel {
 public:
  NonlinearityModel(Coefficient c, double theta, double lambda, Coefficient b,
                    double q, double p)
      : c_(std::move(c)), b_(std::move(b)), theta_(theta), lambda_(lambda), q_(q), p_(p) {
    if (!(p_ > 1.0)) throw std::invalid_argument("NonlinearityModel: p must be > 1");
    if (!(theta_ >= 0.0 && theta_ < p_ - 1.0))
      throw std::invalid_argument("NonlinearityModel: theta must satisfy 0 <= theta < p-1");
    if (c_.min() < 0.0) throw std::invalid_argument("NonlinearityModel: c(x) must be >= 0");
    if (b_.min() < 0.0) throw std::invalid_argument("NonlinearityModel: b(x) must be >= 0");
    if (!b_.identically_zero() && !(q_ > p_))
      throw std::invalid_argument("NonlinearityModel: q must exceed p when b is active");
    if (c_.identically_zero() && b_.identically_zero())
      throw std::invalid_argument(
          "NonlinearityModel: f4 violated, f(x,t)/t^{p-1} is constant (c and b both zero)");
    if (!c_.constant() && !b_.constant() && c_.samples.size() != b_.samples.size())
      throw std::invalid_argument("NonlinearityModel: c and b sample grids must match");
  }

  double p() const { return p_; }
  double theta() const { return theta_; }
  double lambda_lin() const { return lambda_; }
  double q_exp() const { return q_; }
  const Coefficient& c_coeff() const { return c_; }
  const Coefficient& b_coeff() const { return b_; }

  double f(double x, double t) const {
    if (t < 0.0) throw std::invalid_argument("NonlinearityModel::f: t must be >= 0");
    double v = lambda_ * std::pow(t, p_ - 1.0);
    double cx = c_.eval(x);
    if (cx != 0.0) v += cx * std::pow(t, theta_);
    double bx = b_.eval(x);
    if (bx != 0.0) v -= bx * std::pow(t, q_ - 1.0);
    return v;
  }

  // Primitive F(x,t) = ∫_0^t f(x,r) dr in closed form.
  double F(double x, double t) const {
    if (t < 0.0) throw std::invalid_argument("NonlinearityModel::F: t must be >= 0");
    double v = lambda_ * std::pow(t, p_) / p_;
    double cx = c_.eval(x);
    if (cx != 0.0) v += cx * std::pow(t, theta_ + 1.0) / (theta_ + 1.0);
    double bx = b_.eval(x);
    if (bx != 0.0) v -= bx * std::pow(t, q_) / q_;
    return v;
  }

  // Extended-real value of lim_{t->0+} f(x,t)/t^{p-1} at a single point.
  double a0_at(double x) const {
    return c_.eval(x) > 0.0 ? std::numeric_limits<double>::infinity() : lambda_;
  }

  // Extended-real value of lim_{t->inf} f(x,t)/t^{p-1} at a single point.
  double ainf_at(double x) const {
    return b_.eval(x) > 0.0 ? -std::numeric_limits<double>::infinity() : lambda_;
  }

  AsymptoticData asymptotics() const {
    AsymptoticData out;
    out.a0_class = classify(c_, /*plus=*/true);
    out.a0_value = lambda_;
    out.ainf_class = classify(b_, /*plus=*/false);
    out.ainf_value = lambda_;

    const std::vector<double> xs = sample_points();
    double cf = 0.0;
    for (double x : xs) cf = std::max(cf, std::abs(f(x, 1.0)));
    out.c_f = cf;

    out.rho_f = positivity_radius(xs);
    return out;
  }

 private:
  static ExtClass classify(const Coefficient& w, bool plus) {
    if (w.identically_zero()) return ExtClass::Finite;
    if (w.min() > 0.0) return plus ? ExtClass::PlusInf : ExtClass::MinusInf;
    return ExtClass::Mixed;
  }

  std::vector<double> sample_points() const {
    size_t n = std::max(c_.samples.size(), b_.samples.size());
    if (n == 1) return {0.5};
    std::vector<double> xs(n);
    for (size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i) / (n - 1);
    return xs;
  }

  // Smallest first positive root of f(x,.) over the sample points, capped at
  // 1; empty when f fails to be positive near t = 0 at some sample.  The
  // ratio f/t^{p-1} is strictly decreasing, so f changes sign at most once.
  std::optional<double> positivity_radius(const std::vector<double>& xs) const {
    double rho = 1.0;
    for (double x : xs) {
      double t_lo = 1e-9;
      if (f(x, t_lo) <= 0.0) return std::nullopt;
      double root = 1.0;
      bool found = false;
      const int grid = 400;
      double prev = t_lo;
      for (int k = 1; k <= grid; ++k) {
        double t = t_lo * std::pow(1.0 / t_lo, static_cast<double>(k) / grid);
        if (f(x, t) <= 0.0) {
          double lo = prev, hi = t;
          for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            (f(x, mid) > 0.0 ? lo : hi) = mid;
          }
          root = 0.5 * (lo + hi);
          found = true;
          break;
        }
        prev = t;
      }
      if (!found) root = 1.0;  // positive on all of (0,1]
      rho = std::min(rho, root);
    }
    return rho;
  }

  Coefficient c_, b_;
  double theta_, lambda_, q_, p_;
};

// Canonical families used throughout the tests and the CLI.
inline NonlinearityModel power_model(double p, double c = 1.0, double theta = 0.5) {
  return NonlinearityModel(Coefficient(c), theta, 0.0, Coefficient(0.0), p + 1.0, p);
}

inline NonlinearityModel logistic_model(double p, double lambda, double b = 1.0, double q = 4.0) {
  return NonlinearityModel(Coefficient(0.0), 0.0, lambda, Coefficient(b), q, p);
}

}  // namespace pmix
