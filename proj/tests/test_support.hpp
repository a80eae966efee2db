#pragma once

// Shared fixtures for the unit and acceptance suites: the worked model
// problems, their closed-form solutions, and a brute-force iteration oracle
// that stays independent of the engine under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "certfp/certfp.hpp"

#ifndef CERTFP_CLI_PATH
#define CERTFP_CLI_PATH ""
#endif
#ifndef CERTFP_PROBLEMS_DIR
#define CERTFP_PROBLEMS_DIR ""
#endif

namespace testsupport {

using namespace certfp;

inline std::string cli_path() { return CERTFP_CLI_PATH; }
inline std::string problems_dir() { return CERTFP_PROBLEMS_DIR; }
inline std::string problem_file(const std::string& name) {
  return problems_dir() + "/" + name;
}

// g(t) = t, K(t,s) = t + s, f(s,u) = u/3 on [0,1]: kernel bound 3/2,
// Lipschitz modulus 1/2, invariant radius 2.
inline FixedPointOperator hammerstein_linear(std::size_t m = 401) {
  std::vector<Kernel::SeparableTerm> terms;
  terms.push_back({expr::Expression::parse("t"), expr::Expression::parse("1")});
  terms.push_back({expr::Expression::parse("1"), expr::Expression::parse("s")});
  return FixedPointOperator::hammerstein(
      GridFunction::sampled(Interval(0.0, 1.0), m, [](double t) { return t; }),
      Kernel::separable(std::move(terms)), Nonlinearity::linear(1.0 / 3.0));
}

// Volterra variant of the same data (prefix integral).
inline FixedPointOperator volterra_linear(std::size_t m = 401) {
  std::vector<Kernel::SeparableTerm> terms;
  terms.push_back({expr::Expression::parse("t"), expr::Expression::parse("1")});
  terms.push_back({expr::Expression::parse("1"), expr::Expression::parse("s")});
  return FixedPointOperator::volterra(
      GridFunction::sampled(Interval(0.0, 1.0), m, [](double t) { return t; }),
      Kernel::separable(std::move(terms)), Nonlinearity::linear(1.0 / 3.0));
}

// The Hammerstein model's fixed point is affine: x(t) = alpha t + beta with
// alpha = 1 + (alpha/2 + beta)/3 and beta = alpha/9 + beta/6, which solves to
// x(t) = (90 t + 12) / 71.
inline double hammerstein_linear_solution(double t) { return (90.0 * t + 12.0) / 71.0; }

inline GridFunction hammerstein_linear_solution_grid(std::size_t m = 401) {
  return GridFunction::sampled(Interval(0.0, 1.0), m, hammerstein_linear_solution);
}

// x'' = x on [0,1] with x(0) = 0, x(1) = 1: solution sinh(t)/sinh(1).
inline FixedPointOperator bvp_linear(std::size_t m = 401) {
  return FixedPointOperator::green(Interval(0.0, 1.0), m, 0.0, 1.0,
                                   Nonlinearity::linear(1.0));
}

inline double bvp_linear_solution(double t) { return std::sinh(t) / std::sinh(1.0); }

inline DataPacket packet_or_throw(PacketResult result) {
  if (!packet_ok(result))
    throw std::runtime_error("packet build failed at " + failure_of(result).item + ": " +
                             failure_of(result).message);
  return packet_of(std::move(result));
}

// Brute-force full-kernel Picard oracle: direct trapezoid double loop on a
// caller-chosen grid, no Kernel/engine machinery involved.
inline std::vector<double> brute_force_hammerstein_fixed_point(
    std::size_t m, std::size_t iterations,
    const std::function<double(double, double)>& kernel,
    const std::function<double(double, double)>& f,
    const std::function<double(double)>& g) {
  const double h = 1.0 / static_cast<double>(m - 1);
  std::vector<double> node(m), x(m, 0.0), next(m);
  for (std::size_t i = 0; i < m; ++i)
    node[i] = static_cast<double>(i) / static_cast<double>(m - 1);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = (j == 0 || j + 1 == m) ? 0.5 : 1.0;
        acc += w * kernel(node[i], node[j]) * f(node[j], x[j]);
      }
      next[i] = g(node[i]) + h * acc;
    }
    x.swap(next);
  }
  return x;
}

}  // namespace testsupport
