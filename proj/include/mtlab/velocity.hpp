#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "mtlab/core.hpp"
#include "mtlab/grid.hpp"

namespace mtlab {

/// How the per-step time average of a(s, x) over [t^n, t^{n+1}] is evaluated.
enum class TimeMode {
  constant,    ///< a does not depend on t; a(t^n, x) is exact
  affine,      ///< a is affine in t; the midpoint value is exact
  quadrature,  ///< 4-point Gauss-Legendre on each step
  sampled,     ///< Lipschitz-in-time fields: a(t^n, x) replaces the average
};

/// Bounded velocity field with a declared one-sided Lipschitz modulus.
///
/// `eval` must be total (the pointwise representative is part of the field's
/// definition) and pure. `a_inf` bounds every component and the Euclidean norm.
template <int D>
struct VelocityField {
  std::string name;
  std::function<Point<D>(double, const Point<D>&)> eval;
  double a_inf = 0.0;
  std::function<double(double)> alpha = [](double) { return 0.0; };
  TimeMode mode = TimeMode::constant;

  Point<D> operator()(double t, const Point<D>& x) const { return eval(t, x); }
};

/// (1/(t1-t0)) * integral of a(s, x) over [t0, t1], per the field's TimeMode.
template <int D>
Point<D> time_average(const VelocityField<D>& field, double t0, double t1, const Point<D>& x) {
  switch (field.mode) {
    case TimeMode::constant:
    case TimeMode::sampled:
      return field(t0, x);
    case TimeMode::affine:
      return field(0.5 * (t0 + t1), x);
    case TimeMode::quadrature: {
      static constexpr std::array<double, 4> nodes{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                   0.8611363115940526};
      static constexpr std::array<double, 4> weights{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                     0.3478548451374538};
      const double mid = 0.5 * (t0 + t1);
      const double half = 0.5 * (t1 - t0);
      Point<D> acc{};
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const Point<D> v = field(mid + half * nodes[q], x);
        for (int i = 0; i < D; ++i) acc[i] += 0.5 * weights[q] * v[i];
      }
      return acc;
    }
  }
  return field(t0, x);
}

/// Numerical velocity a^n_J at node J for step n.
template <int D>
Point<D> averaged_velocity(const VelocityField<D>& field, std::int64_t n, const Index<D>& j, const CartesianGrid<D>& grid) {
  return time_average(field, grid.time(n), grid.time(n + 1), grid.node(j));
}

/// Largest observed <a(t,x)-a(t,y), x-y>/|x-y|^2 - alpha(t) over random pairs
/// in the box [lo, hi] and times in [t_lo, t_hi]. Positive means the declared
/// modulus is violated.
template <int D>
double osl_probe(const VelocityField<D>& field, std::int64_t samples, const Point<D>& lo, const Point<D>& hi,
                 std::uint64_t seed, double t_lo = 0.0, double t_hi = 1.0) {
  if (samples < 2) throw RangeError("osl_probe needs at least two samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::int64_t s = 0; s < samples; ++s) {
    Point<D> x{}, y{};
    for (int i = 0; i < D; ++i) {
      x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
      y[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    }
    const double t = t_lo + (t_hi - t_lo) * unit(rng);
    double dist2 = 0.0;
    double inner = 0.0;
    const Point<D> ax = field(t, x);
    const Point<D> ay = field(t, y);
    for (int i = 0; i < D; ++i) {
      dist2 += (x[i] - y[i]) * (x[i] - y[i]);
      inner += (ax[i] - ay[i]) * (x[i] - y[i]);
    }
    if (dist2 == 0.0) continue;
    worst = std::max(worst, inner / dist2 - field.alpha(t));
  }
  return worst;
}

namespace fields {

template <int D>
VelocityField<D> constant(Point<D> c) {
  VelocityField<D> f;
  f.name = "constant";
  f.eval = [c](double, const Point<D>&) { return c; };
  f.a_inf = norm<D>(c);
  for (double v : c) f.a_inf = std::max(f.a_inf, std::abs(v));
  f.mode = TimeMode::constant;
  return f;
}

inline VelocityField<1> constant(double c) {
  auto f = constant<1>(Point<1>{c});
  return f;
}

/// a = 1 for x < 0, a = 1/2 for x >= 0.
inline VelocityField<1> example1() {
  VelocityField<1> f;
  f.name = "example1";
  f.eval = [](double, const Point<1>& x) { return Point<1>{x[0] < 0.0 ? 1.0 : 0.5}; };
  f.a_inf = 1.0;
  f.mode = TimeMode::constant;
  return f;
}

/// a = 2 for x < min(t,1), a = 1 for x >= min(t,1); sampled at t^n.
inline VelocityField<1> example3() {
  VelocityField<1> f;
  f.name = "example3";
  f.eval = [](double t, const Point<1>& x) { return Point<1>{x[0] < std::min(t, 1.0) ? 2.0 : 1.0}; };
  f.a_inf = 2.0;
  f.mode = TimeMode::sampled;
  return f;
}

/// Built-in 1D field by name: constant(c), example1, example2, example3, binomial.
inline VelocityField<1> by_name(const std::string& name) {
  if (name == "example1" || name == "example2") {
    auto f = example1();
    f.name = name;
    return f;
  }
  if (name == "example3") return example3();
  if (name == "binomial") {
    auto f = constant(1.0);
    f.name = "binomial";
    return f;
  }
  if (name.rfind("constant(", 0) == 0 && name.back() == ')') {
    const std::string arg = name.substr(9, name.size() - 10);
    std::size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != arg.size() || arg.empty()) throw ConfigError("bad constant field argument: " + arg);
    auto f = constant(c);
    f.name = name;
    return f;
  }
  throw ConfigError("unknown velocity field: " + name);
}

}  // namespace fields
}  // namespace mtlab
