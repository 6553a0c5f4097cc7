#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mtlab/core.hpp"
#include "mtlab/grid.hpp"
#include "mtlab/measure.hpp"
#include "mtlab/velocity.hpp"

namespace mtlab {

/// Explicit Euler approximation of the characteristic flow:
/// Y^{n+1} = Y^n + integral over [t^n, t^{n+1}] of a(s, Y^n) ds.
template <int D>
class EulerFlow {
 public:
  EulerFlow(VelocityField<D> field, double dt, std::vector<Point<D>> seeds)
      : field_(std::move(field)), dt_(dt), positions_(std::move(seeds)) {
    if (!(dt_ > 0.0)) throw RangeError("time step must be positive");
  }

  void step() {
    const double t0 = static_cast<double>(n_) * dt_;
    const double t1 = static_cast<double>(n_ + 1) * dt_;
    for (auto& y : positions_) {
      const Point<D> a = time_average(field_, t0, t1, y);
      for (int i = 0; i < D; ++i) y[i] += dt_ * a[i];
    }
    ++n_;
  }

  [[nodiscard]] const std::vector<Point<D>>& positions() const { return positions_; }
  [[nodiscard]] std::int64_t n() const { return n_; }
  [[nodiscard]] double time() const { return static_cast<double>(n_) * dt_; }
  [[nodiscard]] double dt() const { return dt_; }

 private:
  VelocityField<D> field_;
  double dt_;
  std::vector<Point<D>> positions_;
  std::int64_t n_ = 0;
};

template <int D>
EulerFlow<D> euler_step(EulerFlow<D> flow) {
  flow.step();
  return flow;
}

/// Exact characteristics of the built-in piecewise-constant fields.
namespace exact_flow {

/// a = 1 left of 0, 1/2 from 0 on.
inline double example1(double x0, double t) {
  if (x0 >= 0.0) return x0 + 0.5 * t;
  if (t < -x0) return x0 + t;
  return 0.5 * (t + x0);
}

/// a = 2 left of min(t,1), 1 from there on. Points behind the front catch it
/// and travel with it.
inline double example3(double x0, double t) {
  if (x0 >= 0.0) return x0 + t;
  if (x0 >= -1.0) return t < -x0 ? x0 + 2.0 * t : t;
  const double hit = 0.5 * (1.0 - x0);  // reaches x = 1 after the front has stopped
  return t < hit ? x0 + 2.0 * t : 1.0 + (t - hit);
}

}  // namespace exact_flow

/// Closed-form solutions of the built-in 1D test problems.
class ExactSolution {
 public:
  enum class Kind { example1, example2, example3, translation };

  /// Dirac at -1/2 under the example-1 field.
  static ExactSolution example1() { return ExactSolution(Kind::example1, "example1"); }
  /// Uniform probability density on [-1, 1] under the example-1 field.
  static ExactSolution example2() { return ExactSolution(Kind::example2, "example2"); }
  /// Indicator of [-1, 0] under the example-3 field (a Dirac forms).
  static ExactSolution example3() { return ExactSolution(Kind::example3, "example3"); }
  /// Any analytic datum transported rigidly by the constant field c.
  static ExactSolution translation(AnalyticMeasure<1> initial, double c) {
    ExactSolution s(Kind::translation, "translation");
    s.initial_ = std::move(initial);
    s.speed_ = c;
    return s;
  }

  static ExactSolution by_name(const std::string& name) {
    if (name == "example1") return example1();
    if (name == "example2") return example2();
    if (name == "example3") return example3();
    if (name == "binomial") return translation(AnalyticMeasure<1>::dirac({0.0}), 1.0);
    throw ConfigError("unknown example: " + name);
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const std::string& name() const { return name_; }

  /// Velocity field the solution is exact for.
  [[nodiscard]] VelocityField<1> field() const {
    switch (kind_) {
      case Kind::example1:
      case Kind::example2: {
        auto f = fields::example1();
        f.name = name_;
        return f;
      }
      case Kind::example3:
        return fields::example3();
      case Kind::translation:
        return fields::constant(speed_);
    }
    return fields::constant(0.0);
  }

  [[nodiscard]] AnalyticMeasure<1> initial() const { return measure(0.0); }

  [[nodiscard]] AnalyticMeasure<1> measure(double t) const {
    if (t < 0.0) throw RangeError("exact solutions are defined for t >= 0");
    AnalyticMeasure<1> m;
    switch (kind_) {
      case Kind::example1:
        return AnalyticMeasure<1>::dirac({exact_flow::example1(-0.5, t)});
      case Kind::example2:
        // Normalized to unit mass: half the indicator of [-1, 1].
        if (t <= 1.0) {
          add_interval(m, -1.0 + t, 0.0, 0.5);
          add_interval(m, 0.0, 0.5 * t, 1.0);
          add_interval(m, 0.5 * t, 1.0 + 0.5 * t, 0.5);
        } else {
          add_interval(m, 0.5 * (t - 1.0), 0.5 * t, 1.0);
          add_interval(m, 0.5 * t, 1.0 + 0.5 * t, 0.5);
        }
        return m;
      case Kind::example3:
        if (t >= 1.0) return AnalyticMeasure<1>::dirac({t});
        add_interval(m, -1.0 + 2.0 * t, t, 1.0);
        m.add_atom({t}, t);
        return m;
      case Kind::translation:
        m = initial_;
        for (auto& a : m.atoms) a.at[0] += speed_ * t;
        for (auto& b : m.boxes) {
          b.lo[0] += speed_ * t;
          b.hi[0] += speed_ * t;
        }
        return m;
    }
    return m;
  }

  [[nodiscard]] QuantileFunction quantile(double t) const { return mtlab::quantile(measure(t)); }

 private:
  ExactSolution(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}

  Kind kind_;
  std::string name_;
  AnalyticMeasure<1> initial_;
  double speed_ = 0.0;
};

inline AnalyticMeasure<1> exact_measure(const ExactSolution& sol, double t) { return sol.measure(t); }
inline QuantileFunction exact_quantile(const ExactSolution& sol, double t) { return sol.quantile(t); }

/// W_1 between the delta at k dx and the upwind solution after 2k steps of
/// a = 1 with dt/dx = 1/2: k dx C(2k,k) 4^{-k}.
///
/// C(2k,k) 4^{-k} is built by the ratio recurrence c_k = c_{k-1} (2k-1)/(2k),
/// which stays in (0, 1] and never overflows.
inline double binomial_w1_exact(std::int64_t k, double dx) {
  if (k < 1) throw RangeError("binomial_w1_exact needs k >= 1");
  if (!(dx > 0.0)) throw RangeError("binomial_w1_exact needs dx > 0");
  if (k > (std::int64_t{1} << 40)) throw RangeError("binomial_w1_exact: k too large");
  double c = 1.0;
  for (std::int64_t m = 1; m <= k; ++m) c *= static_cast<double>(2 * m - 1) / static_cast<double>(2 * m);
  return static_cast<double>(k) * dx * c;
}

}  // namespace mtlab
