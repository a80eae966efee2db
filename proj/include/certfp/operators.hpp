#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "certfp/expression.hpp"
#include "certfp/gauge.hpp"
#include "certfp/grid_function.hpp"
#include "certfp/random.hpp"

namespace certfp {

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

// K(t,s) in one of three representations: a sum of separable products
// phi_k(t) * psi_k(s) given as expressions, a table of node values, or the
// closed-form kernel of the second-derivative operator under homogeneous
// Dirichlet conditions. Expression-backed kernels can be evaluated at any
// point (needed to rebuild the operator on a refined grid); tabulated ones
// only at the node pairs they were given on.
class Kernel {
 public:
  enum class Form { Separable, Tabulated, DirichletGreen };

  struct SeparableTerm {
    expr::Expression phi;  // factor in t
    expr::Expression psi;  // factor in s
  };

  static Kernel separable(std::vector<SeparableTerm> terms) {
    Kernel k;
    k.form_ = Form::Separable;
    k.terms_ = std::move(terms);
    return k;
  }

  static Kernel tabulated(std::size_t m, std::vector<double> row_major) {
    if (row_major.size() != m * m)
      throw std::invalid_argument("Kernel::tabulated: need an m x m table");
    for (double v : row_major)
      if (!std::isfinite(v))
        throw std::domain_error("Kernel::tabulated: non-finite entry");
    Kernel k;
    k.form_ = Form::Tabulated;
    k.table_m_ = m;
    k.table_ = std::move(row_major);
    return k;
  }

  static Kernel dirichlet_green(Interval iv) {
    Kernel k;
    k.form_ = Form::DirichletGreen;
    k.green_interval_ = iv;
    return k;
  }

  Form form() const { return form_; }
  const std::vector<SeparableTerm>& terms() const { return terms_; }

  bool pointwise_evaluable() const { return form_ != Form::Tabulated; }

  // Value at arbitrary (t,s); tabulated kernels cannot do this.
  double value(double t, double s) const {
    switch (form_) {
      case Form::Separable: {
        double acc = 0.0;
        for (const auto& term : terms_)
          acc += term.phi.eval(t, s, 0.0) * term.psi.eval(t, s, 0.0);
        return acc;
      }
      case Form::DirichletGreen: {
        const double a = green_interval_->a, b = green_interval_->b;
        if (s <= t) return -(b - t) * (s - a) / (b - a);
        return -(t - a) * (b - s) / (b - a);
      }
      case Form::Tabulated:
        throw std::logic_error("Kernel: tabulated kernel has no off-node values");
    }
    throw std::logic_error("Kernel: corrupt form");
  }

  // Value at the node pair (t_i, s_j) of an m-node grid on iv.
  double value_at(std::size_t i, std::size_t j, const Interval& iv, std::size_t m) const {
    if (form_ == Form::Tabulated) {
      if (m != table_m_)
        throw std::invalid_argument("Kernel: tabulated size does not match grid");
      return table_[i * table_m_ + j];
    }
    const auto node = [&](std::size_t k) {
      return iv.a + iv.length() * (static_cast<double>(k) / static_cast<double>(m - 1));
    };
    return value(node(i), node(j));
  }

 private:
  Kernel() = default;

  Form form_ = Form::Separable;
  std::vector<SeparableTerm> terms_;
  std::size_t table_m_ = 0;
  std::vector<double> table_;
  std::optional<Interval> green_interval_;
};

inline Kernel dirichlet_green(Interval iv) { return Kernel::dirichlet_green(iv); }

// sup_t int_a^b |K(t,s)| ds, by trapezoid rows over the grid.
inline double kernel_bound_H(const Kernel& k, const Interval& iv, std::size_t m) {
  const double h = iv.length() / static_cast<double>(m - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    detail::KahanSum row;
    for (std::size_t j = 0; j < m; ++j) {
      const double w = (j == 0 || j + 1 == m) ? 0.5 : 1.0;
      row.add(w * std::abs(k.value_at(i, j, iv, m)));
    }
    best = std::max(best, h * row.value());
  }
  return best;
}

// sup_t int_a^t |K(t,s)| ds, trapezoid up to the diagonal node.
inline double kernel_bound_V(const Kernel& k, const Interval& iv, std::size_t m) {
  const double h = iv.length() / static_cast<double>(m - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i == 0) continue;
    detail::KahanSum row;
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 : 1.0;
      row.add(w * std::abs(k.value_at(i, j, iv, m)));
    }
    best = std::max(best, h * row.value());
  }
  return best;
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

// f(s,u) with a declared Lipschitz constant (in u) and a declared bound on
// |f(s,0)|. Declarations are cross-checked on a sampling lattice at packet
// build; a declaration the samples contradict is rejected.
class Nonlinearity {
 public:
  enum class Rule { Linear, ScaledSin, ScaledAtan, Affine, Expression };

  static Nonlinearity linear(double lambda) {
    return Nonlinearity(Rule::Linear, lambda, {}, std::abs(lambda), 0.0);
  }

  static Nonlinearity scaled_sin(double lambda) {
    return Nonlinearity(Rule::ScaledSin, lambda, {}, std::abs(lambda), 0.0);
  }

  static Nonlinearity scaled_atan(double lambda) {
    return Nonlinearity(Rule::ScaledAtan, lambda, {}, std::abs(lambda), 0.0);
  }

  // f(s,u) = lambda*u + h(s); zero_bound must dominate sup|h|.
  static Nonlinearity affine(double lambda, expr::Expression offset, double zero_bound) {
    return Nonlinearity(Rule::Affine, lambda, std::move(offset), std::abs(lambda), zero_bound);
  }

  static Nonlinearity expression(expr::Expression f, double declared_lip,
                                 double declared_zero_bound) {
    Nonlinearity n(Rule::Expression, 0.0, std::move(f), declared_lip, declared_zero_bound);
    return n;
  }

  double operator()(double s, double u) const {
    switch (rule_) {
      case Rule::Linear: return lambda_ * u;
      case Rule::ScaledSin: return lambda_ * std::sin(u);
      case Rule::ScaledAtan: return lambda_ * std::atan(u);
      case Rule::Affine: return lambda_ * u + body_->eval(0.0, s, u);
      case Rule::Expression: return body_->eval(0.0, s, u);
    }
    throw std::logic_error("Nonlinearity: corrupt rule");
  }

  Rule rule() const { return rule_; }
  double lambda() const { return lambda_; }
  double lip() const { return lip_; }
  double zero_bound() const { return zero_bound_; }

  // Override the auto-derived constants with user declarations (still
  // subject to the lattice check).
  void declare(std::optional<double> lip, std::optional<double> zero_bound) {
    if (lip) {
      if (*lip < 0.0) throw std::domain_error("Nonlinearity: lip must be >= 0");
      lip_ = *lip;
    }
    if (zero_bound) {
      if (*zero_bound < 0.0) throw std::domain_error("Nonlinearity: zero_bound must be >= 0");
      zero_bound_ = *zero_bound;
    }
  }

  struct VerifyResult {
    bool ok;
    double max_quotient;   // worst sampled |f(s,u)-f(s,v)| / |u-v|
    double max_at_zero;    // worst sampled |f(s,0)|
    std::string message;
  };

  // Sample difference quotients and |f(s,0)| over a 64 x 64 lattice with
  // u,v in [-span, span]. The declared constants must dominate the samples
  // up to 1e-9 relative slack.
  VerifyResult verify(const Interval& iv, double span) const {
    constexpr std::size_t ns = 64, nu = 64;
    double max_q = 0.0, max_z = 0.0;
    std::vector<double> us(nu);
    for (std::size_t k = 0; k < nu; ++k)
      us[k] = -span + 2.0 * span * static_cast<double>(k) / static_cast<double>(nu - 1);
    for (std::size_t is = 0; is < ns; ++is) {
      const double s =
          iv.a + iv.length() * static_cast<double>(is) / static_cast<double>(ns - 1);
      max_z = std::max(max_z, std::abs((*this)(s, 0.0)));
      std::vector<double> fu(nu);
      for (std::size_t k = 0; k < nu; ++k) fu[k] = (*this)(s, us[k]);
      for (std::size_t k = 0; k < nu; ++k)
        for (std::size_t l = k + 1; l < nu; ++l)
          max_q = std::max(max_q, std::abs(fu[k] - fu[l]) / (us[l] - us[k]));
    }
    VerifyResult res{true, max_q, max_z, ""};
    if (max_q > lip_ * (1.0 + 1e-9)) {
      res.ok = false;
      res.message = "sampled Lipschitz quotient " + std::to_string(max_q) +
                    " exceeds declared " + std::to_string(lip_);
    } else if (max_z > zero_bound_ * (1.0 + 1e-9)) {
      res.ok = false;
      res.message = "sampled |f(s,0)| " + std::to_string(max_z) +
                    " exceeds declared " + std::to_string(zero_bound_);
    }
    return res;
  }

  // Nondecreasing in u over the sampled lattice (used by order-interval
  // diagnostics).
  bool sampled_nondecreasing(const Interval& iv, double span) const {
    constexpr std::size_t ns = 32, nu = 64;
    for (std::size_t is = 0; is < ns; ++is) {
      const double s =
          iv.a + iv.length() * static_cast<double>(is) / static_cast<double>(ns - 1);
      double prev = (*this)(s, -span);
      for (std::size_t k = 1; k < nu; ++k) {
        const double u = -span + 2.0 * span * static_cast<double>(k) / static_cast<double>(nu - 1);
        const double cur = (*this)(s, u);
        if (cur < prev - 1e-12) return false;
        prev = cur;
      }
    }
    return true;
  }

 private:
  Nonlinearity(Rule rule, double lambda, std::optional<expr::Expression> body, double lip,
               double zero_bound)
      : rule_(rule), lambda_(lambda), body_(std::move(body)), lip_(lip),
        zero_bound_(zero_bound) {}

  Rule rule_;
  double lambda_;
  std::optional<expr::Expression> body_;
  double lip_;
  double zero_bound_;
};

// ---------------------------------------------------------------------------
// Fixed-point operators
// ---------------------------------------------------------------------------

// (Tx)(t) = g(t) + int K(t,s) f(s, x(s)) ds  (full interval or prefix), the
// boundary-value reduction with the Dirichlet kernel, or the scalar affine
// map slope*x + offset applied pointwise (constant grid functions make that
// the scalar model on the real line).
class FixedPointOperator {
 public:
  enum class Kind { Hammerstein, Volterra, Green, AffineScalar };

  static FixedPointOperator hammerstein(GridFunction g, Kernel k, Nonlinearity f) {
    return FixedPointOperator(Kind::Hammerstein, std::move(g), std::move(k), std::move(f));
  }

  static FixedPointOperator volterra(GridFunction g, Kernel k, Nonlinearity f) {
    return FixedPointOperator(Kind::Volterra, std::move(g), std::move(k), std::move(f));
  }

  // x'' = F(t,x), x(a)=alpha, x(b)=beta, as the fixed point of
  // l + int G(t,s) F(s,x(s)) ds with l the linear interpolant of the
  // boundary values.
  static FixedPointOperator green(Interval iv, std::size_t m, double alpha, double beta,
                                  Nonlinearity f) {
    GridFunction l = linear_interpolant(alpha, beta, iv, m);
    return FixedPointOperator(Kind::Green, std::move(l), Kernel::dirichlet_green(iv),
                              std::move(f));
  }

  static FixedPointOperator affine_scalar(double slope, double offset) {
    return affine_scalar_on(slope, offset, Interval(0.0, 1.0), 2);
  }

  static FixedPointOperator affine_scalar_on(double slope, double offset, Interval iv,
                                             std::size_t m) {
    if (!(slope >= 0.0) || !std::isfinite(slope))
      throw std::domain_error("affine_scalar: require slope >= 0");
    FixedPointOperator op(Kind::AffineScalar, GridFunction::constant(iv, m, offset),
                          Kernel::separable({}), Nonlinearity::linear(slope));
    op.slope_ = slope;
    op.offset_ = offset;
    return op;
  }

  static GridFunction linear_interpolant(double alpha, double beta, Interval iv,
                                         std::size_t m) {
    if (m < 2) throw std::domain_error("linear_interpolant: need at least 2 nodes");
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i)
      v[i] = alpha + (static_cast<double>(i) / static_cast<double>(m - 1)) * (beta - alpha);
    return GridFunction(iv, std::move(v));
  }

  Kind kind() const { return kind_; }
  const GridFunction& forcing() const { return forcing_; }
  const Kernel& kernel() const { return kernel_; }
  const Nonlinearity& nonlinearity() const { return f_; }
  double slope() const { return slope_; }
  double offset() const { return offset_; }
  const Interval& interval() const { return forcing_.interval(); }
  std::size_t grid_size() const { return forcing_.size(); }

  // Kernel norm in the role the operator kind demands: full-interval rows for
  // Hammerstein/Green, prefix rows for Volterra, and the convention M = 1 for
  // the scalar affine map (its Lipschitz constant is the slope itself).
  double kernel_bound() const {
    switch (kind_) {
      case Kind::Hammerstein:
      case Kind::Green:
        return kernel_bound_H(kernel_, interval(), grid_size());
      case Kind::Volterra:
        return kernel_bound_V(kernel_, interval(), grid_size());
      case Kind::AffineScalar:
        return 1.0;
    }
    throw std::logic_error("FixedPointOperator: corrupt kind");
  }

  GridFunction apply(const GridFunction& x) const {
    require_same_grid(forcing_, x, "FixedPointOperator::apply");
    switch (kind_) {
      case Kind::AffineScalar: return apply_affine(x);
      case Kind::Hammerstein:
      case Kind::Green: return apply_full(x);
      case Kind::Volterra: return apply_prefix(x);
    }
    throw std::logic_error("FixedPointOperator: corrupt kind");
  }

 private:
  FixedPointOperator(Kind kind, GridFunction forcing, Kernel kernel, Nonlinearity f)
      : kind_(kind), forcing_(std::move(forcing)), kernel_(std::move(kernel)),
        f_(std::move(f)) {}

  GridFunction apply_affine(const GridFunction& x) const {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = slope_ * x[i] + offset_;
    return GridFunction(x.interval(), std::move(v));
  }

  std::vector<double> transformed_values(const GridFunction& x) const {
    std::vector<double> w(x.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = f_(x.node(i), x[i]);
    return w;
  }

  GridFunction apply_full(const GridFunction& x) const {
    const std::size_t m = x.size();
    const double h = x.step();
    const std::vector<double> w = transformed_values(x);
    std::vector<double> y(m);

    if (kernel_.form() == Kernel::Form::Separable) {
      // y_i = g_i + sum_k phi_k(t_i) * int psi_k(s) f(s,x(s)) ds
      for (std::size_t i = 0; i < m; ++i) y[i] = forcing_[i];
      for (const auto& term : kernel_.terms()) {
        detail::KahanSum s;
        for (std::size_t j = 0; j < m; ++j) {
          const double wt = (j == 0 || j + 1 == m) ? 0.5 : 1.0;
          s.add(wt * term.psi.eval(0.0, x.node(j), 0.0) * w[j]);
        }
        const double coeff = h * s.value();
        for (std::size_t i = 0; i < m; ++i)
          y[i] += term.phi.eval(x.node(i), 0.0, 0.0) * coeff;
      }
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        detail::KahanSum s;
        for (std::size_t j = 0; j < m; ++j) {
          const double wt = (j == 0 || j + 1 == m) ? 0.5 : 1.0;
          s.add(wt * kernel_.value_at(i, j, x.interval(), m) * w[j]);
        }
        y[i] = forcing_[i] + h * s.value();
      }
    }
    return GridFunction(x.interval(), std::move(y));
  }

  GridFunction apply_prefix(const GridFunction& x) const {
    const std::size_t m = x.size();
    const double h = x.step();
    const std::vector<double> w = transformed_values(x);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = forcing_[i];

    if (kernel_.form() == Kernel::Form::Separable) {
      // Running trapezoid per separable term keeps the pass linear in m.
      for (const auto& term : kernel_.terms()) {
        std::vector<double> psi_w(m);
        for (std::size_t j = 0; j < m; ++j)
          psi_w[j] = term.psi.eval(0.0, x.node(j), 0.0) * w[j];
        double prefix = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          if (i > 0) prefix += 0.5 * h * (psi_w[i - 1] + psi_w[i]);
          y[i] += term.phi.eval(x.node(i), 0.0, 0.0) * prefix;
        }
      }
    } else {
      for (std::size_t i = 1; i < m; ++i) {
        detail::KahanSum s;
        for (std::size_t j = 0; j <= i; ++j) {
          const double wt = (j == 0 || j == i) ? 0.5 : 1.0;
          s.add(wt * kernel_.value_at(i, j, x.interval(), m) * w[j]);
        }
        y[i] += h * s.value();
      }
    }
    return GridFunction(x.interval(), std::move(y));
  }

  Kind kind_;
  GridFunction forcing_;
  Kernel kernel_;
  Nonlinearity f_;
  double slope_ = 0.0;
  double offset_ = 0.0;
};

inline GridFunction apply(const FixedPointOperator& op, const GridFunction& x) {
  return op.apply(x);
}

inline GridFunction linear_interpolant(double alpha, double beta, Interval iv, std::size_t m) {
  return FixedPointOperator::linear_interpolant(alpha, beta, iv, m);
}

// R = (||forcing|| + M * Mf0) / (1 - L): the smallest zero-centered sup-norm
// ball the operator provably maps into itself.
inline double invariant_radius(double forcing_norm, double kernel_bound, double zero_bound,
                               double lipschitz) {
  if (!(forcing_norm >= 0.0 && kernel_bound >= 0.0 && zero_bound >= 0.0))
    throw std::domain_error("invariant_radius: require nonnegative constants");
  if (!(lipschitz < 1.0))
    throw std::domain_error("invariant_radius: require L < 1");
  return (forcing_norm + kernel_bound * zero_bound) / (1.0 - lipschitz);
}

// ---------------------------------------------------------------------------
// Admissibility checklist and data packets
// ---------------------------------------------------------------------------

struct ChecklistItem {
  std::string id;      // "C1".."C6"
  std::string name;
  bool passed;
  double evidence;     // the decisive number for the verdict
  std::string note;
};

struct Checklist {
  std::vector<ChecklistItem> items;

  const ChecklistItem* find(const std::string& id) const {
    for (const auto& item : items)
      if (item.id == id) return &item;
    return nullptr;
  }
};

struct ChecklistFailure {
  std::string item;    // "C1".."C6"
  double value;
  std::string message;
};

// Everything the certificates need, bundled: the operator, the certified
// invariant ball (centered at the zero function), the gauge with its
// certified modulus, the starting point, and the initial defect
// delta0 = d(x0, Tx0).
struct DataPacket {
  FixedPointOperator op;
  BallRegion region;
  GridFunction x0;
  Gauge gauge;
  CertifiedModulus modulus;
  double delta0;
  Checklist checklist;

  // Constants block for reports.
  double lip_f;
  double kernel_bound;
  double zero_bound;
  double forcing_norm;
};

using PacketResult = std::variant<DataPacket, ChecklistFailure>;

inline bool packet_ok(const PacketResult& r) { return std::holds_alternative<DataPacket>(r); }
inline const DataPacket& packet_of(const PacketResult& r) { return std::get<DataPacket>(r); }
inline DataPacket packet_of(PacketResult&& r) { return std::get<DataPacket>(std::move(r)); }
inline const ChecklistFailure& failure_of(const PacketResult& r) {
  return std::get<ChecklistFailure>(r);
}

struct PacketOptions {
  std::size_t invariance_samples = 16;
  std::uint64_t seed = 0x5eedULL;
  double invariance_tol = 1e-9;
};

// Run the admissibility checklist and assemble the certified packet:
//   C1 space, C2 invariant region (analytic radius + sampled invariance and
//   x0 membership), C3 declared nonlinearity constants verified on a lattice,
//   C4 modulus kappa = L_f * M < 1, C5 perturbation slot (nothing to check at
//   build time), C6 initial defect.
// kappa is certified on radius 2R: the working distances the certificates
// consume are diameters of the ball, and for the geometric gauge the value is
// radius-independent anyway. Failure reports the first failed item. A
// modulus within 1e-12 of 1 is refused as numerically indistinguishable from
// nonexpansive. A degenerate radius R = 0 (no forcing, f(s,0) = 0) is
// inflated to 1 so the ball is nondegenerate; the zero function is then the
// fixed point.
inline PacketResult build_packet(const FixedPointOperator& op, const GridFunction& x0,
                                 const PacketOptions& opts = {}) {
  require_same_grid(op.forcing(), x0, "build_packet");

  Checklist list;
  const std::size_t m = op.grid_size();
  list.items.push_back({"C1", "space", true, static_cast<double>(m),
                        "C([a,b]) grid model with sup metric, complete"});

  const bool affine = op.kind() == FixedPointOperator::Kind::AffineScalar;
  const double M = op.kernel_bound();
  const double lip_f = affine ? op.slope() : op.nonlinearity().lip();
  const double zero_bound = affine ? 0.0 : op.nonlinearity().zero_bound();
  const double forcing_norm = affine ? std::abs(op.offset()) : sup_norm(op.forcing());
  const double L = affine ? op.slope() : lip_f * M;

  // C4 hinge first: without L < 1 no invariant radius exists.
  if (!(L < 1.0 - 1e-12)) {
    return ChecklistFailure{"C4", L,
                            "kappa=" + std::to_string(L) + " >= 1: modulus not certifiable"};
  }

  double radius = invariant_radius(forcing_norm, affine ? 0.0 : M, zero_bound, L);
  std::string region_note;
  if (radius == 0.0) {
    radius = 1.0;
    region_note = "degenerate radius inflated to 1";
  }
  BallRegion region(GridFunction::zero(op.interval(), m), radius);

  // C2: x0 in the ball, and the sampled invariance margin.
  bool c2_ok = true;
  double c2_evidence = 0.0;
  std::string c2_note = region_note;
  if (sup_distance(region.center, x0) > radius * (1.0 + opts.invariance_tol)) {
    c2_ok = false;
    c2_evidence = sup_distance(region.center, x0);
    c2_note = "x0 outside the working ball";
  } else {
    double worst = 0.0;
    for (const auto& x : sample_ball(region, opts.invariance_samples, opts.seed)) {
      worst = std::max(worst, sup_norm(op.apply(x)));
    }
    c2_evidence = worst;
    if (worst > radius * (1.0 + opts.invariance_tol)) {
      c2_ok = false;
      c2_note = "sampled image leaves the ball";
    }
  }
  list.items.push_back({"C2", "region", c2_ok, c2_evidence, c2_note});

  // C3: the declared constants must survive the sampling lattice.
  bool c3_ok = true;
  double c3_evidence = lip_f;
  std::string c3_note = "geometric gauge w(r) = L r with L = L_f * M";
  if (!affine) {
    const auto verdict = op.nonlinearity().verify(op.interval(), radius + 1.0);
    c3_evidence = verdict.max_quotient;
    if (!verdict.ok) {
      c3_ok = false;
      c3_note = verdict.message;
    }
  }
  list.items.push_back({"C3", "gauge", c3_ok, c3_evidence, c3_note});

  list.items.push_back({"C4", "modulus", true, L, "kappa = L < 1"});
  list.items.push_back(
      {"C5", "perturbation", true, 0.0, "no perturbed map declared at build time"});

  const double delta0 = sup_distance(x0, op.apply(x0));
  list.items.push_back({"C6", "initialization", true, delta0, "delta0 = d(x0, Tx0)"});

  for (const auto& item : list.items)
    if (!item.passed)
      return ChecklistFailure{item.id, item.evidence, item.note};

  Gauge gauge = Gauge::geometric(L);
  const CertifyResult cert = certify_modulus(gauge, 2.0 * radius);
  if (!certified(cert))
    return ChecklistFailure{"C4", L, refusal_reason(cert)};

  return DataPacket{op,     region,      x0,        gauge,       modulus_of(cert),
                    delta0, std::move(list), lip_f, M, zero_bound, forcing_norm};
}

// Re-certify an existing packet on a larger ball (radii only grow). The
// analytic invariance bound survives any enlargement; the sampled check is
// repeated on the new boundary.
inline PacketResult enlarge_region(const DataPacket& packet, double new_radius,
                                   const PacketOptions& opts = {}) {
  if (new_radius < packet.region.radius)
    throw std::domain_error("enlarge_region: radius may only grow");
  if (new_radius == packet.region.radius) return packet;

  DataPacket out = packet;
  out.region = BallRegion(packet.region.center, new_radius);

  double worst = 0.0;
  for (const auto& x : sample_ball(out.region, opts.invariance_samples, opts.seed))
    worst = std::max(worst, sup_norm(packet.op.apply(x)));
  if (worst > new_radius * (1.0 + opts.invariance_tol))
    return ChecklistFailure{"C2", worst, "sampled image leaves the enlarged ball"};

  for (auto& item : out.checklist.items)
    if (item.id == "C2") item.evidence = worst;

  const CertifyResult cert = certify_modulus(out.gauge, 2.0 * new_radius);
  if (!certified(cert))
    return ChecklistFailure{"C4", out.modulus.kappa, refusal_reason(cert)};
  out.modulus = modulus_of(cert);
  return out;
}

// Independently re-run every checklist item against the packet's own data.
inline bool verify_checklist(const DataPacket& packet, const PacketOptions& opts = {}) {
  if (packet.op.grid_size() < 2) return false;  // C1

  if (sup_distance(packet.region.center, packet.x0) >
      packet.region.radius * (1.0 + opts.invariance_tol))
    return false;  // C2: membership
  for (const auto& x : sample_ball(packet.region, opts.invariance_samples, opts.seed))
    if (sup_norm(packet.op.apply(x)) > packet.region.radius * (1.0 + opts.invariance_tol))
      return false;  // C2: invariance

  if (packet.op.kind() != FixedPointOperator::Kind::AffineScalar &&
      !packet.op.nonlinearity().verify(packet.op.interval(), packet.region.radius + 1.0).ok)
    return false;  // C3

  if (!(packet.modulus.kappa < 1.0 - 1e-12)) return false;  // C4

  const double d0 = sup_distance(packet.x0, packet.op.apply(packet.x0));
  return d0 == packet.delta0;  // C6
}

// max{ d(x,y), d(x,Tx), d(y,Ty), (d(x,Ty)+d(y,Tx))/2 }: the four-distance
// control quantity of the generalized contractive condition.
inline double proinov_control(const FixedPointOperator& op, const GridFunction& x,
                              const GridFunction& y) {
  const GridFunction tx = op.apply(x);
  const GridFunction ty = op.apply(y);
  const double dxy = sup_distance(x, y);
  const double dxtx = sup_distance(x, tx);
  const double dyty = sup_distance(y, ty);
  const double cross = 0.5 * (sup_distance(x, ty) + sup_distance(y, tx));
  return std::max(std::max(dxy, cross), std::max(dxtx, dyty));
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

enum class DominanceMode { TwoPoint, Proinov };

struct DominanceReport {
  bool consistent;
  double max_ratio;        // worst d(Tx,Ty) / w(control) over sampled pairs
  double witness_control;  // control value at the worst pair
  double witness_response; // d(Tx,Ty) at the worst pair
  std::size_t witness_i = 0;
  std::size_t witness_j = 0;
  std::size_t pairs_checked = 0;
};

// Sample pairs from the ball and compare d(Tx,Ty) against the gauge of the
// control distance. A ratio above 1 + 1e-9 disproves the gauge on this
// region; staying below it is consistency evidence, not proof.
inline DominanceReport gauge_dominance_check(const FixedPointOperator& op, const Gauge& gauge,
                                             const BallRegion& region, DominanceMode mode,
                                             std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::domain_error("gauge_dominance_check: need samples >= 2");
  const auto xs = sample_ball(region, samples, seed);
  std::vector<GridFunction> txs;
  txs.reserve(xs.size());
  for (const auto& x : xs) txs.push_back(op.apply(x));

  DominanceReport rep{true, 0.0, 0.0, 0.0, 0, 0, 0};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double control = (mode == DominanceMode::TwoPoint)
                                 ? sup_distance(xs[i], xs[j])
                                 : proinov_control(op, xs[i], xs[j]);
      if (control == 0.0) continue;
      const double bound = gauge.eval(control);
      if (bound == 0.0) continue;
      const double response = sup_distance(txs[i], txs[j]);
      const double ratio = response / bound;
      ++rep.pairs_checked;
      if (ratio > rep.max_ratio) {
        rep.max_ratio = ratio;
        rep.witness_control = control;
        rep.witness_response = response;
        rep.witness_i = i;
        rep.witness_j = j;
      }
    }
  }
  rep.consistent = rep.max_ratio <= 1.0 + 1e-9;
  return rep;
}

struct OrderIntervalReport {
  enum class Status {
    Invariant,
    NotVolterra,
    IntervalEmpty,
    KernelNegative,
    NonlinearityNotMonotone,
    LowerEndpointFails,
    UpperEndpointFails,
    SampleViolation,
  };

  Status status;
  double worst_margin;       // min over nodes of min(Tx - lower, upper - Tx)
  std::size_t violations;
  std::string detail;

  bool ok() const { return status == Status::Invariant; }
};

// For a Volterra operator with nonnegative kernel and nondecreasing f, an
// order interval [lower, upper] with lower <= T(lower) and T(upper) <= upper
// is invariant; check that on sampled members. Precondition breaches are
// reported as distinct failures.
inline OrderIntervalReport order_interval_check(const FixedPointOperator& op,
                                                const GridFunction& lower,
                                                const GridFunction& upper,
                                                std::size_t samples, std::uint64_t seed,
                                                double tol = 1e-12) {
  using Status = OrderIntervalReport::Status;
  if (op.kind() != FixedPointOperator::Kind::Volterra)
    return {Status::NotVolterra, 0.0, 0, "order-interval diagnostics need a Volterra operator"};
  require_same_grid(lower, upper, "order_interval_check");
  require_same_grid(lower, op.forcing(), "order_interval_check");

  const std::size_t m = lower.size();
  for (std::size_t i = 0; i < m; ++i)
    if (lower[i] > upper[i])
      return {Status::IntervalEmpty, lower[i] - upper[i], 1,
              "lower exceeds upper at node " + std::to_string(i)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (op.kernel().value_at(i, j, lower.interval(), m) < 0.0)
        return {Status::KernelNegative, 0.0, 1,
                "kernel negative at node pair (" + std::to_string(i) + "," +
                    std::to_string(j) + ")"};

  const double span = std::max(sup_norm(lower), sup_norm(upper)) + 1.0;
  if (!op.nonlinearity().sampled_nondecreasing(lower.interval(), span))
    return {Status::NonlinearityNotMonotone, 0.0, 1, "f(s,.) decreases on the sampled lattice"};

  const GridFunction t_lower = op.apply(lower);
  const GridFunction t_upper = op.apply(upper);
  for (std::size_t i = 0; i < m; ++i) {
    if (t_lower[i] < lower[i] - tol)
      return {Status::LowerEndpointFails, t_lower[i] - lower[i], 1,
              "lower endpoint condition fails at node " + std::to_string(i)};
    if (t_upper[i] > upper[i] + tol)
      return {Status::UpperEndpointFails, upper[i] - t_upper[i], 1,
              "upper endpoint condition fails at node " + std::to_string(i)};
  }

  SplitMix64 rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = rng.uniform(lower[i], upper[i]);
    const GridFunction tx = op.apply(GridFunction(lower.interval(), std::move(v)));
    for (std::size_t i = 0; i < m; ++i) {
      const double margin = std::min(tx[i] - lower[i], upper[i] - tx[i]);
      worst = std::min(worst, margin);
      if (margin < -tol) ++violations;
    }
  }
  if (violations > 0)
    return {Status::SampleViolation, worst, violations, "sampled image leaves the interval"};
  return {Status::Invariant, worst, 0, ""};
}

}  // namespace certfp
