#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>

#include "certfp/engine.hpp"
#include "certfp/grid_function.hpp"
#include "certfp/operators.hpp"

namespace certfp {

// How far two fixed points can drift apart under a map perturbation: the
// perturbation size on the working ball, the certified modulus used for the
// (1-kappa)^{-1} factor, and (when both solves ran) the observed gap. The
// sampled sup is a lower estimate of the true perturbation size; certified
// claims should prefer the analytic model-level bound when one exists.
struct PerturbationReport {
  double eps_estimate = 0.0;
  std::optional<double> eps_analytic;
  double kappa = 0.0;
  double stab_bound = 0.0;
  std::optional<double> observed_gap;
};

// Sampled lower estimate of sup_{x in region} d(Tx, Sx). The structured
// extremes come first in sample_ball, which is where forcing- and
// kernel-type perturbations attain the sup.
inline double epsilon_sup(const FixedPointOperator& T, const FixedPointOperator& S,
                          const BallRegion& region, std::size_t samples,
                          std::uint64_t seed) {
  require_same_grid(T.forcing(), S.forcing(), "epsilon_sup");
  double worst = 0.0;
  for (const auto& x : sample_ball(region, samples, seed))
    worst = std::max(worst, sup_distance(T.apply(x), S.apply(x)));
  return worst;
}

// eps / (1 - kappa).
inline double stability_bound(double kappa, double eps) {
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::domain_error("stability_bound: require kappa in [0,1)");
  if (!(eps >= 0.0)) throw std::domain_error("stability_bound: require eps >= 0");
  return eps / (1.0 - kappa);
}

// sup_t int_a^b |K1(t,s) - K2(t,s)| ds over the grid: the kernel deviation
// feeding the model-level perturbation bounds.
inline double kernel_deviation_H(const Kernel& k1, const Kernel& k2, const Interval& iv,
                                 std::size_t m) {
  const double h = iv.length() / static_cast<double>(m - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    detail::KahanSum row;
    for (std::size_t j = 0; j < m; ++j) {
      const double w = (j == 0 || j + 1 == m) ? 0.5 : 1.0;
      row.add(w * std::abs(k1.value_at(i, j, iv, m) - k2.value_at(i, j, iv, m)));
    }
    best = std::max(best, h * row.value());
  }
  return best;
}

// Prefix-integral variant, sup_t int_a^t |K1 - K2| ds.
inline double kernel_deviation_V(const Kernel& k1, const Kernel& k2, const Interval& iv,
                                 std::size_t m) {
  const double h = iv.length() / static_cast<double>(m - 1);
  double best = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    detail::KahanSum row;
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 : 1.0;
      row.add(w * std::abs(k1.value_at(i, j, iv, m) - k2.value_at(i, j, iv, m)));
    }
    best = std::max(best, h * row.value());
  }
  return best;
}

// eps_C(T,S) <= ||g - g~|| + (sup_t int |K - K~| ds) * (Mf0 + Lf * R) for a
// shared nonlinearity.
inline double hammerstein_perturbation_bound(double dg, double dK, double Mf0, double Lf,
                                             double R) {
  if (!(dg >= 0.0 && dK >= 0.0 && Mf0 >= 0.0 && Lf >= 0.0 && R > 0.0))
    throw std::domain_error("hammerstein_perturbation_bound: bad arguments");
  return dg + dK * (Mf0 + Lf * R);
}

// Same shape for the boundary-value reduction: dl + dG * (MF0 + LF * R).
inline double bvp_perturbation_bound(double dl, double dG, double MF0, double LF, double R) {
  if (!(dl >= 0.0 && dG >= 0.0 && MF0 >= 0.0 && LF >= 0.0 && R > 0.0))
    throw std::domain_error("bvp_perturbation_bound: bad arguments");
  return dl + dG * (MF0 + LF * R);
}

struct SharpnessResult {
  double x_star;
  double y_star;
  double gap;
  double bound;
};

// The scalar pair T(x) = kappa*x, S(x) = kappa*x + eps attains the stability
// bound with equality: |T - S| = eps everywhere and |x* - y*| =
// eps/(1-kappa). Both fixed points are computed by Picard to a 1e-13
// certificate, so gap/bound sits within ~1e-12 of 1.
inline SharpnessResult sharpness_demo(double kappa, double eps) {
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::domain_error("sharpness_demo: require kappa in [0,1)");
  if (!(eps >= 0.0)) throw std::domain_error("sharpness_demo: require eps >= 0");

  const FixedPointOperator T = FixedPointOperator::affine_scalar(kappa, 0.0);
  const FixedPointOperator S = FixedPointOperator::affine_scalar(kappa, eps);
  const GridFunction start = GridFunction::zero(Interval(0.0, 1.0), 2);

  const auto solve = [&](const FixedPointOperator& op) {
    const PacketResult built = build_packet(op, start);
    if (!packet_ok(built))
      throw std::logic_error("sharpness_demo: scalar map failed the checklist");
    const IterationTrace trace =
        picard_run(packet_of(built), StopRule::residual(1e-13), 1000000);
    if (!trace.complete)
      throw std::logic_error("sharpness_demo: solve did not certify");
    return trace.final_iterate[0];
  };

  SharpnessResult res{};
  res.x_star = solve(T);
  res.y_star = solve(S);
  res.gap = std::abs(res.x_star - res.y_star);
  res.bound = stability_bound(kappa, eps);
  return res;
}

// Solve both packets (1e-10 residual certificates), estimate the perturbation
// size on the shared region, and report the stability bound with
// kappa = max{kappa_T, kappa_S}. Callers that know a model-level analytic
// perturbation bound pass it in; it then backs the certified stab_bound while
// the sampled value remains the estimate.
inline PerturbationReport two_sided_stability(const DataPacket& packet_T,
                                              const DataPacket& packet_S,
                                              std::size_t samples, std::uint64_t seed,
                                              std::optional<double> eps_analytic = {}) {
  require_same_grid(packet_T.region.center, packet_S.region.center, "two_sided_stability");
  if (packet_T.region.radius != packet_S.region.radius)
    throw std::invalid_argument("two_sided_stability: regions must match");

  const auto solve = [](const DataPacket& p) {
    const IterationTrace trace = picard_run(p, StopRule::residual(1e-10), 1000000);
    if (!trace.complete)
      throw std::runtime_error("two_sided_stability: fixed point solve did not certify");
    return trace.final_iterate;
  };

  PerturbationReport rep;
  rep.eps_estimate =
      epsilon_sup(packet_T.op, packet_S.op, packet_T.region, samples, seed);
  rep.eps_analytic = eps_analytic;
  rep.kappa = std::max(packet_T.modulus.kappa, packet_S.modulus.kappa);
  rep.stab_bound =
      stability_bound(rep.kappa, eps_analytic ? *eps_analytic : rep.eps_estimate);
  rep.observed_gap = sup_distance(solve(packet_T), solve(packet_S));
  return rep;
}

}  // namespace certfp
