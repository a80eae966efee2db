#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "certfp/gauge.hpp"
#include "certfp/grid_function.hpp"
#include "certfp/operators.hpp"
#include "certfp/random.hpp"

namespace certfp {

struct StopRule {
  enum class Kind { AprioriGeo, AprioriGauge, Residual, FixedCount };

  Kind kind;
  double eps = 0.0;
  std::size_t count = 0;

  static StopRule apriori_geo(double eps) {
    require_eps(eps);
    return {Kind::AprioriGeo, eps, 0};
  }
  static StopRule apriori_gauge(double eps) {
    require_eps(eps);
    return {Kind::AprioriGauge, eps, 0};
  }
  static StopRule residual(double eps) {
    require_eps(eps);
    return {Kind::Residual, eps, 0};
  }
  static StopRule fixed_count(std::size_t n) { return {Kind::FixedCount, 0.0, n}; }

 private:
  static void require_eps(double eps) {
    if (!(eps > 0.0)) throw std::domain_error("StopRule: require eps > 0");
  }
};

// Declared per-step evaluation error d(x_{n+1}, T x_n) <= eta_n. Injected
// budgets are realized with equality by a seeded random-sign perturbation of
// sup-norm exactly eta_n; quadrature budgets are estimated per step from a
// grid-refined application of the operator and nothing is injected.
struct NoiseBudget {
  enum class Kind { None, Constant, Sequence, Summable };
  enum class Source { Injected, QuadratureEstimated };

  Kind kind = Kind::None;
  Source source = Source::Injected;
  double eta_bar = 0.0;
  std::vector<double> etas;
  double eta0 = 0.0;
  double rho = 0.0;
  std::uint64_t seed = 0;

  static NoiseBudget none() { return {}; }

  static NoiseBudget constant(double eta_bar, std::uint64_t seed) {
    require_nonneg(eta_bar);
    NoiseBudget b;
    b.kind = Kind::Constant;
    b.eta_bar = eta_bar;
    b.seed = seed;
    return b;
  }

  static NoiseBudget sequence(std::vector<double> etas, std::uint64_t seed) {
    for (double e : etas) require_nonneg(e);
    NoiseBudget b;
    b.kind = Kind::Sequence;
    b.etas = std::move(etas);
    b.seed = seed;
    return b;
  }

  // eta_n = eta0 * rho^n with rho in [0,1): a summable budget.
  static NoiseBudget summable(double eta0, double rho, std::uint64_t seed) {
    require_nonneg(eta0);
    if (!(rho >= 0.0 && rho < 1.0))
      throw std::domain_error("NoiseBudget: require rho in [0,1)");
    NoiseBudget b;
    b.kind = Kind::Summable;
    b.eta0 = eta0;
    b.rho = rho;
    b.seed = seed;
    return b;
  }

  static NoiseBudget quadrature() {
    NoiseBudget b;
    b.source = Source::QuadratureEstimated;  // values come from the per-step estimate
    return b;
  }

  double eta(std::size_t n) const {
    switch (kind) {
      case Kind::None: return 0.0;
      case Kind::Constant: return eta_bar;
      case Kind::Sequence: return n < etas.size() ? etas[n] : 0.0;
      case Kind::Summable: return eta0 * std::pow(rho, static_cast<double>(n));
    }
    throw std::logic_error("NoiseBudget: corrupt kind");
  }

 private:
  static void require_nonneg(double e) {
    if (!(e >= 0.0)) throw std::domain_error("NoiseBudget: require eta >= 0");
  }
};

struct TraceStep {
  std::size_t n;
  double residual;        // r_n = d(x_n, x_{n+1})
  double phi_geo_bound;   // kappa^n * delta0 / (1 - kappa)
  double phi_gauge_bound; // gauge-iterate tail bound at n
  double residual_bound;  // (r_n + eta_n) / (1 - kappa)
  double eta;             // noise budget used at this step
};

struct IterationTrace {
  std::vector<TraceStep> steps;
  GridFunction final_iterate;
  double certified_error = 0.0;
  std::string stop_reason;
  std::size_t step_count = 0;
  bool complete = false;
};

// r / (1 - kappa): converts a residual into a true-error certificate.
inline double residual_to_error(double r, double kappa) {
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::domain_error("residual_to_error: require kappa in [0,1)");
  if (!(r >= 0.0)) throw std::domain_error("residual_to_error: require r >= 0");
  return r / (1.0 - kappa);
}

// kappa^n * d0 + sum_{j<n} kappa^(n-1-j) eta_j.
inline double inexact_apriori_bound(std::size_t n, double kappa, double d0,
                                    const NoiseBudget& budget) {
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::domain_error("inexact_apriori_bound: require kappa in [0,1)");
  if (!(d0 >= 0.0)) throw std::domain_error("inexact_apriori_bound: require d0 >= 0");
  double bound = std::pow(kappa, static_cast<double>(n)) * d0;
  for (std::size_t j = 0; j < n; ++j)
    bound += std::pow(kappa, static_cast<double>(n - 1 - j)) * budget.eta(j);
  return bound;
}

// eta_bar / (1 - kappa): the certified steady-state error floor under a
// uniformly bounded budget.
inline double error_floor(double kappa, double eta_bar) {
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::domain_error("error_floor: require kappa in [0,1)");
  if (!(eta_bar >= 0.0)) throw std::domain_error("error_floor: require eta_bar >= 0");
  return eta_bar / (1.0 - kappa);
}

namespace detail {

inline double recorded_apriori_bound(std::size_t n, double kappa, double d0,
                                     const std::vector<double>& etas) {
  double bound = std::pow(kappa, static_cast<double>(n)) * d0;
  for (std::size_t j = 0; j < n && j < etas.size(); ++j)
    bound += std::pow(kappa, static_cast<double>(n - 1 - j)) * etas[j];
  return bound;
}

// Random-sign node perturbation with sup norm exactly eta.
inline GridFunction sign_perturbation(const GridFunction& x, double eta, SplitMix64& rng) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] + rng.sign() * eta;
  return GridFunction(x.interval(), std::move(v));
}

}  // namespace detail

// Picard iteration from the packet's x0 with per-step certificates, optional
// noise, and the requested stop rule. Each trace row n records the residual
// r_n = d(x_n, x_{n+1}) together with every bound the certificates provide at
// index n; the final certified error is the minimum of the valid ones. The
// refined operator (same problem rebuilt on a 2m-1 grid) is consulted only by
// quadrature-estimated budgets.
inline IterationTrace inexact_run(const DataPacket& packet, const NoiseBudget& budget,
                                  const StopRule& rule, std::size_t max_iter,
                                  const FixedPointOperator* refined = nullptr,
                                  std::vector<GridFunction>* iterates_out = nullptr) {
  if (max_iter < 1) throw std::domain_error("inexact_run: require max_iter >= 1");
  const double kappa = packet.modulus.kappa;
  const double delta0 = packet.delta0;
  const bool quadrature = budget.source == NoiseBudget::Source::QuadratureEstimated;
  if (quadrature && refined == nullptr)
    throw std::invalid_argument(
        "inexact_run: quadrature-estimated budget needs the refined operator");

  std::size_t target = 0;
  if (rule.kind == StopRule::Kind::AprioriGeo)
    target = n_geo(rule.eps, kappa, delta0);
  else if (rule.kind == StopRule::Kind::AprioriGauge)
    target = n_gauge(packet.gauge, rule.eps, delta0, packet.modulus);
  else if (rule.kind == StopRule::Kind::FixedCount)
    target = rule.count;

  SplitMix64 rng(budget.seed);
  std::vector<double> etas_used;

  IterationTrace trace{std::vector<TraceStep>{}, packet.x0, 0.0, "", 0, false};
  GridFunction x = packet.x0;

  for (std::size_t n = 0; n <= max_iter; ++n) {
    if (iterates_out) iterates_out->push_back(x);
    GridFunction tx = packet.op.apply(x);

    double eta_n = 0.0;
    if (quadrature) {
      const GridFunction fine = refined->apply(refine_linear(x));
      for (std::size_t i = 0; i < x.size(); ++i)
        eta_n = std::max(eta_n, std::abs(tx[i] - fine[2 * i]));
    } else {
      eta_n = budget.eta(n);
    }

    GridFunction x_next = (!quadrature && eta_n > 0.0)
                              ? detail::sign_perturbation(tx, eta_n, rng)
                              : std::move(tx);
    const double r_n = sup_distance(x, x_next);
    etas_used.push_back(eta_n);

    trace.steps.push_back({n, r_n, phi_geo(n, kappa, delta0),
                           phi_gauge(packet.gauge, n, delta0, packet.modulus),
                           residual_to_error(r_n + eta_n, kappa), eta_n});

    bool stop = false;
    switch (rule.kind) {
      case StopRule::Kind::AprioriGeo:
      case StopRule::Kind::AprioriGauge:
      case StopRule::Kind::FixedCount:
        stop = n == target;
        break;
      case StopRule::Kind::Residual:
        stop = r_n + eta_n <= (1.0 - kappa) * rule.eps;
        break;
    }

    if (stop) {
      trace.final_iterate = std::move(x);
      trace.step_count = n;
      trace.complete = true;
      switch (rule.kind) {
        case StopRule::Kind::AprioriGeo: trace.stop_reason = "apriori_geo"; break;
        case StopRule::Kind::AprioriGauge: trace.stop_reason = "apriori_gauge"; break;
        case StopRule::Kind::Residual: trace.stop_reason = "residual"; break;
        case StopRule::Kind::FixedCount: trace.stop_reason = "fixed_count"; break;
      }
      break;
    }

    if (n == max_iter) {
      trace.final_iterate = std::move(x);
      trace.step_count = max_iter;
      trace.stop_reason = "max_iter_exhausted";
      break;
    }

    x = std::move(x_next);
  }

  // Certified error at the final index: the sharpest valid certificate.
  const std::size_t n_final = trace.step_count;
  const TraceStep& last = trace.steps.back();
  const bool noisy = quadrature || budget.kind != NoiseBudget::Kind::None;
  double certified = last.residual_bound;
  const double d0_bound = residual_to_error(delta0, kappa);
  certified = std::min(certified,
                       detail::recorded_apriori_bound(n_final, kappa, d0_bound, etas_used));
  if (!noisy) {
    certified = std::min(certified, last.phi_geo_bound);
    certified = std::min(certified, last.phi_gauge_bound);
  }
  trace.certified_error = certified;
  return trace;
}

// Exact Picard run: the zero-noise specialization.
inline IterationTrace picard_run(const DataPacket& packet, const StopRule& rule,
                                 std::size_t max_iter) {
  return inexact_run(packet, NoiseBudget::none(), rule, max_iter);
}

// CSV with one row per step; fixed column set, shortest-round-trip doubles,
// byte-identical for identical inputs and seeds.
inline void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
  out << "n,r_n,phi_geo,phi_gauge,residual_bound,eta_n\n";
  char buf[512];
  for (const auto& s : trace.steps) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.n, s.residual,
                  s.phi_geo_bound, s.phi_gauge_bound, s.residual_bound, s.eta);
    out << buf;
  }
}

}  // namespace certfp
