#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace certfp {

// A contractive gauge w(r; theta): nonnegative, w(0) = 0, nondecreasing, and
// w(r) < r for r > 0. It bounds how much one application of the operator can
// shrink (or fail to shrink) a control distance. Two closed-form families are
// built in; arbitrary gauges can be supplied with their own evaluation rule.
class Gauge {
 public:
  enum class Kind { Geometric, LinearDefect, Custom };

  // Whether r -> w(r)/r is declared nondecreasing on (0, R]. Without the
  // declaration a finite sample cannot bound the sup of the ratio, so
  // certification refuses instead of guessing.
  enum class RatioMonotonicity { Undeclared, Nondecreasing };

  // w(r) = q r.
  static Gauge geometric(double q) {
    if (!(q >= 0.0 && q < 1.0))
      throw std::domain_error("Gauge::geometric: require q in [0,1)");
    Gauge g;
    g.kind_ = Kind::Geometric;
    g.theta_ = q;
    g.name_ = "geometric";
    return g;
  }

  // w(r) = r - c r = (1-c) r, a linear defect of rate c.
  static Gauge linear_defect(double c) {
    if (!(c > 0.0 && c <= 1.0))
      throw std::domain_error("Gauge::linear_defect: require c in (0,1]");
    Gauge g;
    g.kind_ = Kind::LinearDefect;
    g.theta_ = c;
    g.name_ = "linear_defect";
    return g;
  }

  static Gauge custom(std::string name, std::function<double(double)> eval,
                      RatioMonotonicity declared) {
    Gauge g;
    g.kind_ = Kind::Custom;
    g.eval_ = std::move(eval);
    g.name_ = std::move(name);
    g.ratio_decl_ = declared;
    return g;
  }

  double eval(double r) const {
    if (!(r >= 0.0)) throw std::domain_error("Gauge::eval: require r >= 0");
    // Below the normal double range, rounding can stall the strict decrease
    // (a denormal times a ratio < 1 may round back to itself); flush to the
    // fixed point at 0.
    if (r < 1e-300) return 0.0;
    double w = 0.0;
    switch (kind_) {
      case Kind::Geometric: w = theta_ * r; break;
      case Kind::LinearDefect: w = (1.0 - theta_) * r; break;
      case Kind::Custom: w = eval_(r); break;
    }
    if (!(w >= 0.0) || !(w < r))
      throw std::domain_error("Gauge::eval: gauge violates 0 <= w(r) < r at r=" +
                              std::to_string(r));
    return w;
  }

  double operator()(double r) const { return eval(r); }

  Kind kind() const { return kind_; }
  double parameter() const { return theta_; }
  const std::string& name() const { return name_; }
  RatioMonotonicity ratio_monotonicity() const {
    if (kind_ == Kind::Custom) return ratio_decl_;
    return RatioMonotonicity::Nondecreasing;  // constant ratio for both built-ins
  }

 private:
  Gauge() = default;

  Kind kind_ = Kind::Geometric;
  double theta_ = 0.0;
  std::function<double(double)> eval_;
  std::string name_;
  RatioMonotonicity ratio_decl_ = RatioMonotonicity::Undeclared;
};

// kappa = sup_{0<r<=R} w(r)/r together with the radius it was certified on
// and how the sup was established.
struct CertifiedModulus {
  enum class Method { Analytic, GridSupWithMonotoneRatio };

  double kappa;
  double radius;
  Method method;
};

struct NotCertifiable {
  std::string reason;
};

using CertifyResult = std::variant<CertifiedModulus, NotCertifiable>;

inline bool certified(const CertifyResult& r) {
  return std::holds_alternative<CertifiedModulus>(r);
}
inline const CertifiedModulus& modulus_of(const CertifyResult& r) {
  return std::get<CertifiedModulus>(r);
}
inline const std::string& refusal_reason(const CertifyResult& r) {
  return std::get<NotCertifiable>(r).reason;
}

inline double eval_gauge(const Gauge& g, double r) { return g.eval(r); }

// Certify the local modulus kappa(R) < 1. Built-in families have constant
// ratio, so kappa is analytic (q, respectively 1-c). Custom gauges must
// declare a nondecreasing ratio; the sampled sup (a log-spaced grid down to
// R*1e-12 plus a uniform sweep, so false declarations whose ratio peaks at
// small r are still caught) gets a 1e-12 relative safety margin before the
// kappa < 1 test.
inline CertifyResult certify_modulus(const Gauge& g, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::domain_error("certify_modulus: require radius > 0");

  switch (g.kind()) {
    case Gauge::Kind::Geometric:
      return CertifiedModulus{g.parameter(), radius, CertifiedModulus::Method::Analytic};
    case Gauge::Kind::LinearDefect:
      return CertifiedModulus{1.0 - g.parameter(), radius, CertifiedModulus::Method::Analytic};
    case Gauge::Kind::Custom:
      break;
  }

  if (g.ratio_monotonicity() != Gauge::RatioMonotonicity::Nondecreasing)
    return NotCertifiable{"ratio monotonicity undeclared"};

  double sup_ratio = 0.0;
  for (int k = 0; k <= 12; ++k) {
    const double r = radius * std::pow(10.0, -k);
    sup_ratio = std::max(sup_ratio, g.eval(r) / r);
  }
  for (int j = 1; j <= 64; ++j) {
    const double r = radius * static_cast<double>(j) / 64.0;
    sup_ratio = std::max(sup_ratio, g.eval(r) / r);
  }

  const double kappa = sup_ratio * (1.0 + 1e-12);
  if (!(kappa < 1.0)) return NotCertifiable{"sup ratio reaches 1"};
  return CertifiedModulus{kappa, radius, CertifiedModulus::Method::GridSupWithMonotoneRatio};
}

// [w^(0)(r0), ..., w^(n)(r0)]; nonincreasing by the gauge axioms.
inline std::vector<double> gauge_orbit(const Gauge& g, double r0, std::size_t n) {
  if (!(r0 >= 0.0)) throw std::domain_error("gauge_orbit: require r0 >= 0");
  std::vector<double> orbit;
  orbit.reserve(n + 1);
  orbit.push_back(r0);
  double r = r0;
  for (std::size_t j = 0; j < n; ++j) {
    r = g.eval(r);
    orbit.push_back(r);
  }
  return orbit;
}

// Geometric a priori bound kappa^n * delta0 / (1 - kappa).
inline double phi_geo(std::size_t n, double kappa, double delta0) {
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::domain_error("phi_geo: require kappa in [0,1)");
  if (!(delta0 >= 0.0)) throw std::domain_error("phi_geo: require delta0 >= 0");
  return std::pow(kappa, static_cast<double>(n)) * delta0 / (1.0 - kappa);
}

// Upper bound on the gauge-iterate tail sum_{j>=n} w^(j)(delta0). Terms are
// accumulated explicitly until the current term drops below 1e-3 of the
// partial sum; the remainder is then dominated by the certified geometric
// tail term * kappa/(1-kappa), valid because w(r) <= kappa r on (0, radius]
// and the orbit is nonincreasing. Never exceeds phi_geo (up to rounding).
inline double phi_gauge(const Gauge& g, std::size_t n, double delta0,
                        const CertifiedModulus& mod) {
  if (!(delta0 >= 0.0)) throw std::domain_error("phi_gauge: require delta0 >= 0");
  if (delta0 > mod.radius)
    throw std::domain_error("phi_gauge: delta0 exceeds the certified radius");
  if (delta0 == 0.0) return 0.0;

  double term = delta0;
  for (std::size_t j = 0; j < n; ++j) term = g.eval(term);

  const std::size_t max_terms = 1000000;
  double partial = 0.0;
  for (std::size_t taken = 0;; ++taken) {
    partial += term;
    if (term <= 1e-3 * partial || term == 0.0 || taken >= max_terms) break;
    term = g.eval(term);
  }
  // partial covers the terms up to and including the last evaluated index m;
  // the geometric tail dominates everything past it wherever the loop stopped.
  return partial + term * mod.kappa / (1.0 - mod.kappa);
}

// Smallest n with phi_geo(n) <= eps, closed form with a local +-1 repair so
// minimality survives ln/ceil rounding.
inline std::size_t n_geo(double eps, double kappa, double delta0) {
  if (!(eps > 0.0)) throw std::domain_error("n_geo: require eps > 0");
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::domain_error("n_geo: require kappa in [0,1)");
  if (!(delta0 >= 0.0)) throw std::domain_error("n_geo: require delta0 >= 0");

  if (delta0 <= (1.0 - kappa) * eps) return 0;
  if (kappa == 0.0) return 1;

  const double q = (1.0 - kappa) * eps / delta0;
  double raw = std::ceil(std::log(q) / std::log(kappa));
  if (raw < 0.0) raw = 0.0;
  std::size_t n = static_cast<std::size_t>(raw);

  while (n > 0 && phi_geo(n - 1, kappa, delta0) <= eps) --n;
  while (phi_geo(n, kappa, delta0) > eps) ++n;
  return n;
}

// Smallest n with phi_gauge(n) <= eps, by incremental scan. Always <= n_geo
// for the same data. Scans are capped at 1e7 indices.
inline std::size_t n_gauge(const Gauge& g, double eps, double delta0,
                           const CertifiedModulus& mod) {
  if (!(eps > 0.0)) throw std::domain_error("n_gauge: require eps > 0");
  const std::size_t cap = 10000000;
  for (std::size_t n = 0; n <= cap; ++n) {
    if (phi_gauge(g, n, delta0, mod) <= eps) return n;
  }
  throw std::runtime_error("n_gauge: scan cap of 1e7 indices exceeded");
}

}  // namespace certfp
