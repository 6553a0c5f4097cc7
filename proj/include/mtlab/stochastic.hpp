#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "mtlab/core.hpp"
#include "mtlab/grid.hpp"
#include "mtlab/measure.hpp"
#include "mtlab/scheme.hpp"
#include "mtlab/velocity.hpp"

namespace mtlab {

/// One-step transition probabilities of the random characteristic.
///
/// Each row lists its targets in the fixed order (stay, +e_1, -e_1, ...,
/// +e_D, -e_D); sampling walks the row in this order, so it is part of the
/// reproducibility contract.
template <int D>
struct TransitionKernel {
  using Row = std::vector<std::pair<Index<D>, double>>;

  std::int64_t n = 0;
  std::map<Index<D>, Row> rows;

  [[nodiscard]] const Row& row(const Index<D>& j) const {
    auto it = rows.find(j);
    if (it == rows.end()) throw RangeError("transition kernel has no row for the requested state");
    return it->second;
  }
};

/// Kernel of step n restricted to the given states. Upwind rows are
/// stay = 1 - sum_i lambda_i |a_i|, right_i = lambda_i a_i^+, left_i = lambda_i a_i^-;
/// generalized rows use lambda_i zeta and lambda_i beta instead.
template <int D>
TransitionKernel<D> kernel_of(const SchemeSpec& spec, const VelocityField<D>& field, const CartesianGrid<D>& grid,
                              std::int64_t n, const std::set<Index<D>>& support) {
  const CflReport cfl = check_cfl(spec, field, grid);
  if (!cfl.satisfied) throw CflError(cfl);
  TransitionKernel<D> k;
  k.n = n;
  for (const auto& j : support) {
    const auto r = cell_rates(spec, field, grid, n, j);
    typename TransitionKernel<D>::Row row;
    row.reserve(2 * D + 1);
    row.emplace_back(j, r.stay);
    for (int i = 0; i < D; ++i) {
      row.emplace_back(shifted<D>(j, i, 1), r.right[i]);
      row.emplace_back(shifted<D>(j, i, -1), r.left[i]);
    }
    k.rows.emplace_hint(k.rows.end(), j, std::move(row));
  }
  return k;
}

template <int D>
std::set<Index<D>> support_of(const DiscreteMeasure<D>& mu) {
  std::set<Index<D>> s;
  for (const auto& [j, w] : mu.weights()) s.insert(s.end(), j);
  return s;
}

/// Law of K^{n+1} given the law of K^n: scatter every row, sources in
/// lexicographic order.
template <int D>
DiscreteMeasure<D> apply_kernel(const DiscreteMeasure<D>& mu, const TransitionKernel<D>& kernel) {
  typename DiscreteMeasure<D>::Weights out;
  for (const auto& [j, w] : mu.weights()) {
    for (const auto& [l, p] : kernel.row(j)) {
      if (p > 0.0) out[l] += w * p;
    }
  }
  return DiscreteMeasure<D>(mu.grid(), std::move(out));
}

template <int D>
DiscreteMeasure<D> propagate_law(const DiscreteMeasure<D>& mu, const std::vector<TransitionKernel<D>>& kernels) {
  DiscreteMeasure<D> law = mu;
  for (const auto& k : kernels) law = apply_kernel(law, k);
  return law;
}

/// Kernels for steps 0..steps-1, each built over the support of the law it
/// acts on.
template <int D>
std::vector<TransitionKernel<D>> kernels_for(const DiscreteMeasure<D>& mu0, const SchemeSpec& spec,
                                             const VelocityField<D>& field, std::int64_t steps) {
  std::vector<TransitionKernel<D>> ks;
  ks.reserve(static_cast<std::size_t>(steps));
  DiscreteMeasure<D> law = mu0;
  for (std::int64_t n = 0; n < steps; ++n) {
    ks.push_back(kernel_of(spec, field, mu0.grid(), n, support_of(law)));
    law = apply_kernel(law, ks.back());
  }
  return ks;
}

/// Counter-based uniform variates: the value for (seed, path, step) is a pure
/// function of the triple, so paths can be drawn in any order or in parallel.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  [[nodiscard]] double uniform(std::uint64_t path, std::uint64_t step) const {
    std::uint64_t h = mix(seed_ ^ 0x6a09e667f3bcc908ULL);
    h = mix(h ^ (path + 0x9e3779b97f4a7c15ULL));
    h = mix(h ^ (step + 0xbb67ae8584caa73bULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

template <int D>
struct TrajectoryBatch {
  std::uint64_t seed = 0;
  std::int64_t count = 0;
  std::int64_t steps = 0;
  CartesianGrid<D> grid;
  /// Row-major: path m occupies [m*(steps+1), (m+1)*(steps+1)).
  std::vector<Index<D>> states;

  [[nodiscard]] const Index<D>& at(std::int64_t path, std::int64_t n) const {
    return states[static_cast<std::size_t>(path * (steps + 1) + n)];
  }
};

namespace detail {

template <class Row>
const auto& pick(const Row& row, double u) {
  double cum = 0.0;
  for (const auto& entry : row) {
    cum += entry.second;
    if (u < cum) return entry.first;
  }
  // u landed in the rounding gap above the last partial sum.
  for (auto it = row.rbegin(); it != row.rend(); ++it) {
    if (it->second > 0.0) return it->first;
  }
  return row.front().first;
}

}  // namespace detail

/// i.i.d. trajectories K^0..K^N with K^0 ~ mu0 and transitions from `kernels`.
template <int D>
TrajectoryBatch<D> sample_paths(const DiscreteMeasure<D>& mu0, const std::vector<TransitionKernel<D>>& kernels,
                                std::int64_t count, std::uint64_t seed) {
  if (count < 1) throw RangeError("sample_paths needs at least one path");
  if (mu0.empty()) throw RangeError("initial law is empty");
  const CounterRng rng(seed);
  std::vector<std::pair<Index<D>, double>> initial(mu0.weights().begin(), mu0.weights().end());

  TrajectoryBatch<D> b{seed, count, static_cast<std::int64_t>(kernels.size()), mu0.grid(), {}};
  b.states.resize(static_cast<std::size_t>(count * (b.steps + 1)));
  for (std::int64_t m = 0; m < count; ++m) {
    const std::size_t base = static_cast<std::size_t>(m * (b.steps + 1));
    Index<D> state = detail::pick(initial, rng.uniform(static_cast<std::uint64_t>(m), 0));
    b.states[base] = state;
    for (std::int64_t n = 0; n < b.steps; ++n) {
      state = detail::pick(kernels[static_cast<std::size_t>(n)].row(state),
                           rng.uniform(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n + 1)));
      b.states[base + static_cast<std::size_t>(n + 1)] = state;
    }
  }
  return b;
}

/// Empirical law of K^n.
template <int D>
DiscreteMeasure<D> empirical_law(const TrajectoryBatch<D>& batch, std::int64_t n) {
  std::map<Index<D>, std::int64_t> counts;
  for (std::int64_t m = 0; m < batch.count; ++m) ++counts[batch.at(m, n)];
  typename DiscreteMeasure<D>::Weights w;
  for (const auto& [j, c] : counts) w.emplace_hint(w.end(), j, static_cast<double>(c) / static_cast<double>(batch.count));
  return DiscreteMeasure<D>(batch.grid, std::move(w));
}

template <int D>
double total_variation(const DiscreteMeasure<D>& mu, const DiscreteMeasure<D>& nu) {
  std::set<Index<D>> keys = support_of(mu);
  for (const auto& [j, w] : nu.weights()) keys.insert(j);
  CompensatedSum s;
  for (const auto& j : keys) s += std::abs(mu.at(j) - nu.at(j));
  return 0.5 * s.value();
}

/// Per-step summary of h^n = X^{n+1} - X^n - dt a^n_{K^n}.
struct IncrementStats {
  std::int64_t step = 0;
  std::int64_t states_tested = 0;    ///< states with at least min_visits paths
  std::int64_t states_excluded = 0;  ///< occupied states below the threshold
  double max_abs_mean = 0.0;         ///< max |per-state mean of h| (any component, tested states)
  double max_z = 0.0;                ///< max |mean| / standard error over tested states
  double max_abs_h = 0.0;            ///< max Euclidean |h| over all transitions
  double mean_abs_h = 0.0;           ///< E|h|
  double mean_sq_h = 0.0;            ///< E|h|^2
};

/// Variance of the displacement along `axis` for one step out of state j.
template <int D>
double jump_variance(const typename TransitionKernel<D>::Row& row, const CartesianGrid<D>& grid, const Index<D>& j,
                     int axis) {
  double m1 = 0.0, m2 = 0.0;
  for (const auto& [l, p] : row) {
    const double d = static_cast<double>(l[axis] - j[axis]) * grid.dx(axis);
    m1 += p * d;
    m2 += p * d * d;
  }
  return std::max(0.0, m2 - m1 * m1);
}

/// Martingale-increment statistics of a batch, one entry per step.
///
/// Standard errors use the exact one-step variance of the chain when the
/// kernels are supplied, and the sample variance otherwise.
template <int D>
std::vector<IncrementStats> increment_residual(const TrajectoryBatch<D>& batch, const VelocityField<D>& field,
                                               std::int64_t min_visits = 10,
                                               const std::vector<TransitionKernel<D>>* kernels = nullptr) {
  if (batch.count < 1) throw RangeError("empty trajectory batch");
  const auto& grid = batch.grid;
  std::vector<IncrementStats> out;
  for (std::int64_t n = 0; n < batch.steps; ++n) {
    struct Acc {
      std::int64_t visits = 0;
      Point<D> sum{};
      Point<D> sum_sq{};
    };
    std::map<Index<D>, Acc> per_state;
    std::map<Index<D>, Point<D>> drift;
    IncrementStats st;
    st.step = n;
    CompensatedSum abs_h, sq_h;
    for (std::int64_t m = 0; m < batch.count; ++m) {
      const Index<D>& j = batch.at(m, n);
      const Index<D>& l = batch.at(m, n + 1);
      auto dit = drift.find(j);
      if (dit == drift.end()) dit = drift.emplace(j, averaged_velocity(field, n, j, grid)).first;
      const Point<D> xj = grid.node(j);
      const Point<D> xl = grid.node(l);
      Point<D> h{};
      double h2 = 0.0;
      auto& acc = per_state[j];
      ++acc.visits;
      for (int i = 0; i < D; ++i) {
        h[i] = (xl[i] - xj[i]) - grid.dt() * dit->second[i];
        acc.sum[i] += h[i];
        acc.sum_sq[i] += h[i] * h[i];
        h2 += h[i] * h[i];
      }
      st.max_abs_h = std::max(st.max_abs_h, std::sqrt(h2));
      abs_h += std::sqrt(h2);
      sq_h += h2;
    }
    st.mean_abs_h = abs_h.value() / static_cast<double>(batch.count);
    st.mean_sq_h = sq_h.value() / static_cast<double>(batch.count);
    for (const auto& [j, acc] : per_state) {
      if (acc.visits < min_visits) {
        ++st.states_excluded;
        continue;
      }
      ++st.states_tested;
      const double cnt = static_cast<double>(acc.visits);
      for (int i = 0; i < D; ++i) {
        const double mean = acc.sum[i] / cnt;
        double var = std::max(0.0, (acc.sum_sq[i] - cnt * mean * mean) / std::max(1.0, cnt - 1.0));
        if (kernels != nullptr) var = jump_variance((*kernels)[static_cast<std::size_t>(n)].row(j), grid, j, i);
        const double se = std::sqrt(var / cnt);
        st.max_abs_mean = std::max(st.max_abs_mean, std::abs(mean));
        double z = 0.0;
        if (se > 0.0) {
          z = std::abs(mean) / se;
        } else if (std::abs(mean) > 1e-14 * std::max(1.0, grid.dx(i))) {
          z = std::numeric_limits<double>::infinity();
        }
        st.max_z = std::max(st.max_z, z);
      }
    }
    out.push_back(st);
  }
  return out;
}

}  // namespace mtlab
