#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "certfp/random.hpp"

namespace certfp {

struct Interval {
  double a;
  double b;

  Interval(double a_, double b_) : a(a_), b(b_) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
      throw std::domain_error("Interval: require finite endpoints with a < b");
  }

  double length() const { return b - a; }

  friend bool operator==(const Interval& lhs, const Interval& rhs) {
    return lhs.a == rhs.a && lhs.b == rhs.b;
  }
  friend bool operator!=(const Interval& lhs, const Interval& rhs) { return !(lhs == rhs); }
};

// A continuous function on [a,b] represented by its values at m uniform
// nodes t_i = a + (b-a)*i/(m-1). Values are immutable after construction;
// all operations build new objects. Binary operations require the two
// operands to live on exactly the same grid -- there is no implicit
// resampling, so discretization error never hides inside an operation.
class GridFunction {
 public:
  GridFunction(Interval interval, std::vector<double> values)
      : interval_(interval), values_(std::move(values)) {
    if (values_.size() < 2)
      throw std::domain_error("GridFunction: need at least 2 nodes");
    for (double v : values_)
      if (!std::isfinite(v))
        throw std::domain_error("GridFunction: non-finite value");
  }

  static GridFunction zero(Interval interval, std::size_t m) {
    return GridFunction(interval, std::vector<double>(m, 0.0));
  }

  static GridFunction constant(Interval interval, std::size_t m, double c) {
    return GridFunction(interval, std::vector<double>(m, c));
  }

  template <class F>
  static GridFunction sampled(Interval interval, std::size_t m, F&& f) {
    if (m < 2) throw std::domain_error("GridFunction: need at least 2 nodes");
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i)
      v[i] = f(node_at(interval, m, i));
    return GridFunction(interval, std::move(v));
  }

  std::size_t size() const { return values_.size(); }
  const Interval& interval() const { return interval_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  // i/(m-1) is exact at the endpoints, so node(m-1) == b exactly.
  double node(std::size_t i) const { return node_at(interval_, values_.size(), i); }

  double step() const { return interval_.length() / static_cast<double>(values_.size() - 1); }

  bool same_grid(const GridFunction& other) const {
    return interval_ == other.interval_ && values_.size() == other.values_.size();
  }

 private:
  static double node_at(const Interval& iv, std::size_t m, std::size_t i) {
    return iv.a + iv.length() * (static_cast<double>(i) / static_cast<double>(m - 1));
  }

  Interval interval_;
  std::vector<double> values_;
};

inline void require_same_grid(const GridFunction& x, const GridFunction& y, const char* where) {
  if (!x.same_grid(y))
    throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

inline GridFunction operator+(const GridFunction& x, const GridFunction& y) {
  require_same_grid(x, y, "GridFunction::operator+");
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] + y[i];
  return GridFunction(x.interval(), std::move(v));
}

inline GridFunction operator-(const GridFunction& x, const GridFunction& y) {
  require_same_grid(x, y, "GridFunction::operator-");
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] - y[i];
  return GridFunction(x.interval(), std::move(v));
}

inline GridFunction operator*(double c, const GridFunction& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * x[i];
  return GridFunction(x.interval(), std::move(v));
}

inline double sup_norm(const GridFunction& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

// Sup metric d(x,y) = max_i |x_i - y_i|.
inline double sup_distance(const GridFunction& x, const GridFunction& y) {
  require_same_grid(x, y, "sup_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

namespace detail {

// Compensated (Kahan) accumulator; keeps long trapezoid sums accurate to a
// few ulps instead of O(m) ulps.
class KahanSum {
 public:
  void add(double term) {
    const double y = term - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

// Composite trapezoid value of the integral over [a,b]; exact for affine
// functions up to rounding.
inline double integrate(const GridFunction& x) {
  const std::size_t m = x.size();
  detail::KahanSum s;
  for (std::size_t i = 0; i < m; ++i)
    s.add((i == 0 || i + 1 == m) ? 0.5 * x[i] : x[i]);
  return x.step() * s.value();
}

// Trapezoid value of the integral from a up to node t_k.
inline double integrate_prefix(const GridFunction& x, std::size_t k) {
  if (k >= x.size())
    throw std::out_of_range("integrate_prefix: node index out of range");
  if (k == 0) return 0.0;
  detail::KahanSum s;
  for (std::size_t i = 0; i <= k; ++i)
    s.add((i == 0 || i == k) ? 0.5 * x[i] : x[i]);
  return x.step() * s.value();
}

// Same grid refined to 2m-1 nodes; new midpoints take the piecewise-linear
// interpolant, which reproduces the function the coarse grid represents.
inline GridFunction refine_linear(const GridFunction& x) {
  const std::size_t m = x.size();
  std::vector<double> v(2 * m - 1);
  for (std::size_t i = 0; i < m; ++i) v[2 * i] = x[i];
  for (std::size_t i = 0; i + 1 < m; ++i) v[2 * i + 1] = 0.5 * (x[i] + x[i + 1]);
  return GridFunction(x.interval(), std::move(v));
}

struct BallRegion {
  GridFunction center;
  double radius;

  BallRegion(GridFunction center_, double radius_)
      : center(std::move(center_)), radius(radius_) {
    if (!(radius >= 0.0) || !std::isfinite(radius))
      throw std::domain_error("BallRegion: radius must be finite and >= 0");
  }

  bool contains(const GridFunction& x, double tol = 0.0) const {
    return sup_distance(center, x) <= radius * (1.0 + tol);
  }
};

// Deterministic draws from the closed sup-norm ball. The first draws are the
// structured extremes (center, constant offsets +-R, alternating-sign offsets
// +-R), which attain the sup for forcing-type and kernel-type perturbations;
// the remainder are random piecewise-linear offsets with breakpoint values in
// [-R, R], hence inside the ball by convexity.
inline std::vector<GridFunction> sample_ball(const BallRegion& region, std::size_t count,
                                             std::uint64_t seed) {
  if (count == 0) throw std::domain_error("sample_ball: need count >= 1");
  const GridFunction& c = region.center;
  const double r = region.radius;
  const std::size_t m = c.size();

  std::vector<GridFunction> out;
  out.reserve(count);

  if (r == 0.0) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(c);
    return out;
  }

  auto offset_by = [&](auto&& f) {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = c[i] + f(i);
    return GridFunction(c.interval(), std::move(v));
  };

  const GridFunction structured[5] = {
      c,
      offset_by([&](std::size_t) { return r; }),
      offset_by([&](std::size_t) { return -r; }),
      offset_by([&](std::size_t i) { return (i % 2 == 0) ? r : -r; }),
      offset_by([&](std::size_t i) { return (i % 2 == 0) ? -r : r; }),
  };
  for (std::size_t i = 0; i < 5 && out.size() < count; ++i) out.push_back(structured[i]);

  SplitMix64 rng(seed);
  while (out.size() < count) {
    // 2..9 breakpoints, linearly interpolated across the grid.
    const std::size_t nb = 2 + static_cast<std::size_t>(rng.below(8));
    std::vector<double> bp(nb);
    for (double& v : bp) v = rng.uniform(-r, r);
    out.push_back(offset_by([&](std::size_t i) {
      const double pos = static_cast<double>(i) / static_cast<double>(m - 1) *
                         static_cast<double>(nb - 1);
      const std::size_t k = std::min(nb - 2, static_cast<std::size_t>(pos));
      const double frac = pos - static_cast<double>(k);
      return bp[k] + frac * (bp[k + 1] - bp[k]);
    }));
  }
  return out;
}

}  // namespace certfp
