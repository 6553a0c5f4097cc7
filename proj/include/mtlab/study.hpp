#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtlab/core.hpp"
#include "mtlab/flows.hpp"
#include "mtlab/grid.hpp"
#include "mtlab/measure.hpp"
#include "mtlab/measure_io.hpp"
#include "mtlab/scheme.hpp"
#include "mtlab/semi_lagrangian.hpp"
#include "mtlab/velocity.hpp"
#include "mtlab/wasserstein.hpp"

namespace mtlab {

inline constexpr const char* kVersion = "0.1.0";

/// How the per-step error e^n is measured against the exact solution.
struct DistanceSpec {
  enum class Kind { wp, l1 };
  Kind kind = Kind::wp;
  double p = 1.0;

  /// "w1", "wp(2.5)" or "l1".
  static DistanceSpec parse(const std::string& s) {
    if (s == "w1") return {Kind::wp, 1.0};
    if (s == "l1") return {Kind::l1, 1.0};
    if (s.size() > 4 && s.rfind("wp(", 0) == 0 && s.back() == ')') {
      std::size_t used = 0;
      double p = 0.0;
      const std::string arg = s.substr(3, s.size() - 4);
      try {
        p = std::stod(arg, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != arg.size() || !(p >= 1.0) || !std::isfinite(p)) throw ConfigError("distance: bad exponent in " + s);
      return {Kind::wp, p};
    }
    throw ConfigError("unknown distance: " + s + " (expected w1, wp(p) or l1)");
  }

  [[nodiscard]] std::string name() const {
    if (kind == Kind::l1) return "l1";
    if (p == 1.0) return "w1";
    return "wp(" + format_double(p) + ")";
  }
};

struct StudyConfig {
  std::string scheme = "upwind";
  std::string example = "example1";
  double T = 2.0;
  std::vector<std::int64_t> ladder{100, 200, 400, 800, 1600, 3200};
  double cfl = 0.5;  ///< lambda = dt / dx
  std::string distance = "w1";
  double domain_lo = -2.5;
  double domain_hi = 2.5;
  std::uint64_t seed = 0;
  /// Record wall-clock time per resolution; off gives fully byte-stable CSV.
  bool timing = true;
  std::string out;

  /// Throws ConfigError for structural problems and CflError when lambda is
  /// too large for the scheme and field.
  void validate() const {
    if (ladder.empty()) throw ConfigError("ladder must not be empty");
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      if (ladder[k] < 1) throw ConfigError("ladder entries must be positive");
      if (k > 0 && ladder[k] <= ladder[k - 1]) throw ConfigError("ladder must be strictly increasing");
    }
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be positive");
    if (!(cfl > 0.0) || !std::isfinite(cfl)) throw ConfigError("cfl must be positive");
    if (!(domain_hi > domain_lo)) throw ConfigError("domain must have positive length");
    if ((domain_hi - domain_lo) / static_cast<double>(ladder.front()) > 1.0) throw ConfigError("coarsest dx exceeds 1");
    const auto spec = SchemeSpec::by_name(scheme);
    const auto field = fields::by_name(example);
    const auto dist = DistanceSpec::parse(distance);
    const auto exact = ExactSolution::by_name(example);
    if (dist.kind == DistanceSpec::Kind::l1 && !exact.initial().atoms.empty()) {
      throw ConfigError("l1 distance needs an absolutely continuous example");
    }
    const CartesianGrid<1> probe(1.0, cfl);
    const CflReport r = check_cfl<1>(spec, field, probe);
    if (!r.satisfied) throw CflError(r);
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["scheme"] = scheme;
    j["example"] = example;
    j["T"] = T;
    j["ladder"] = ladder;
    j["cfl"] = cfl;
    j["distance"] = distance;
    j["domain"] = {domain_lo, domain_hi};
    j["seed"] = seed;
    j["timing"] = timing;
    return j;
  }

  /// Overwrites fields present in `j`; unknown keys are rejected.
  void merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
      for (const auto& [key, val] : j.items()) {
        if (key == "scheme") {
          scheme = val.get<std::string>();
        } else if (key == "example") {
          example = val.get<std::string>();
        } else if (key == "T") {
          T = val.get<double>();
        } else if (key == "ladder") {
          ladder = val.get<std::vector<std::int64_t>>();
        } else if (key == "cfl") {
          cfl = val.get<double>();
        } else if (key == "distance") {
          distance = val.get<std::string>();
        } else if (key == "domain") {
          const auto d = val.get<std::vector<double>>();
          if (d.size() != 2) throw ConfigError("domain must be [lo, hi]");
          domain_lo = d[0];
          domain_hi = d[1];
        } else if (key == "seed") {
          seed = val.get<std::uint64_t>();
        } else if (key == "timing") {
          timing = val.get<bool>();
        } else if (key == "out") {
          out = val.get<std::string>();
        } else {
          throw ConfigError("unknown config key: " + key);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  static StudyConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config " + path + ": " + e.what());
    }
    StudyConfig cfg;
    cfg.merge_json(j);
    return cfg;
  }
};

struct ResolutionRow {
  std::int64_t N = 0;
  double dx = 0.0;
  double dt = 0.0;
  std::int64_t steps = 0;
  double error = 0.0;       ///< max over n of e^n
  double envelope_c = 0.0;  ///< max over n of e^n / (sqrt(t^n dx) + dx)
  double runtime_s = 0.0;
};

struct ConvergenceReport {
  StudyConfig config;
  std::vector<ResolutionRow> rows;
  double order = 0.0;     ///< least-squares slope of log e against log dx
  double residual = 0.0;  ///< RMS residual of that fit
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

/// Least squares y = slope x + intercept with RMS residual. Needs two distinct x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw RangeError("fit_line needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw RangeError("fit_line needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (f.slope * x[k] + f.intercept);
    ss += r * r;
  }
  f.residual = x.size() == 2 ? 0.0 : std::sqrt(ss / n);
  return f;
}

/// Order of e ~ C h^order from (h, e) pairs; NaN when some error is not positive.
inline LineFit fit_order(const std::vector<double>& h, const std::vector<double>& e) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(e[k] > 0.0)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return {nan, nan, nan};
    }
    lx.push_back(std::log(h[k]));
    ly.push_back(std::log(e[k]));
  }
  if (lx.size() == 1) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  return fit_line(lx, ly);
}

/// Per-step error of a grid measure against the exact solution at time t.
inline double step_error(const DiscreteMeasure<1>& mu, const ExactSolution& exact, double t, const DistanceSpec& dist) {
  if (dist.kind == DistanceSpec::Kind::l1) return l1_distance(mu, exact.measure(t));
  return wp_1d(quantile(mu), exact.quantile(t), dist.p);
}

/// One resolution of a 1D study. Time steps are shortened, if needed, so an
/// integer number of them reaches T exactly; lambda never exceeds cfg.cfl.
inline ResolutionRow run_resolution(const StudyConfig& cfg, std::int64_t N) {
  const auto spec = SchemeSpec::by_name(cfg.scheme);
  const auto exact = ExactSolution::by_name(cfg.example);
  const auto field = fields::by_name(cfg.example);
  const auto dist = DistanceSpec::parse(cfg.distance);

  ResolutionRow row;
  row.N = N;
  row.dx = (cfg.domain_hi - cfg.domain_lo) / static_cast<double>(N);
  row.steps = static_cast<std::int64_t>(std::ceil(cfg.T / (cfg.cfl * row.dx) - 1e-9));
  row.dt = cfg.T / static_cast<double>(row.steps);
  const CartesianGrid<1> grid(row.dx, row.dt);
  const CflReport cfl = check_cfl<1>(spec, field, grid);
  if (!cfl.satisfied) throw CflError(cfl);

  const auto start = std::chrono::steady_clock::now();
  const auto mu0 = project_initial(exact.initial(), grid);
  run_observed(mu0, spec, field, row.steps, [&](std::int64_t n, const DiscreteMeasure<1>& mu) {
    const double t = grid.time(n);
    const double e = step_error(mu, exact, t, dist);
    row.error = std::max(row.error, e);
    row.envelope_c = std::max(row.envelope_c, e / (std::sqrt(t * row.dx) + row.dx));
  });
  if (cfg.timing) row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

inline ConvergenceReport run_study(const StudyConfig& cfg) {
  cfg.validate();
  ConvergenceReport rep;
  rep.config = cfg;
  std::vector<double> h, e;
  for (const auto N : cfg.ladder) {
    rep.rows.push_back(run_resolution(cfg, N));
    h.push_back(rep.rows.back().dx);
    e.push_back(rep.rows.back().error);
  }
  const LineFit fit = fit_order(h, e);
  rep.order = fit.slope;
  rep.residual = fit.residual;
  return rep;
}

struct EnvelopeCheck {
  double smallest_c = 0.0;         ///< smallest C valid for every step and resolution
  std::vector<double> per_resolution;
  bool holds = true;               ///< the requested C is sufficient
  [[nodiscard]] bool non_increasing_at_finest() const {
    return per_resolution.size() < 2 || per_resolution.back() <= per_resolution[per_resolution.size() - 2];
  }
};

/// Checks e^n <= C (sqrt(t^n dx) + dx) over a finished study.
inline EnvelopeCheck theorem_envelope_check(const ConvergenceReport& rep, double C) {
  EnvelopeCheck chk;
  for (const auto& r : rep.rows) {
    chk.per_resolution.push_back(r.envelope_c);
    chk.smallest_c = std::max(chk.smallest_c, r.envelope_c);
  }
  chk.holds = std::isfinite(chk.smallest_c) && chk.smallest_c <= C;
  return chk;
}

inline EnvelopeCheck theorem_envelope_check(const StudyConfig& cfg, double C) {
  return theorem_envelope_check(run_study(cfg), C);
}

namespace detail {

inline nlohmann::ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

/// Writes `content` to `path` through a sibling temporary file.
inline void write_file_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw IoError("write failed for " + path);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("cannot move " + tmp + " to " + path);
  }
}

}  // namespace detail

inline std::string report_csv(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << "N,dx,error,runtime_s\n";
  for (const auto& r : rep.rows) {
    os << r.N << ',' << format_double(r.dx) << ',' << format_double(r.error) << ',' << format_double(r.runtime_s) << '\n';
  }
  return os.str();
}

inline std::string report_json(const ConvergenceReport& rep) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["seed"] = rep.config.seed;
  j["config"] = rep.config.to_json();
  j["order"] = detail::number_or_null(rep.order);
  j["residual"] = detail::number_or_null(rep.residual);
  double c = 0.0;
  for (const auto& r : rep.rows) c = std::max(c, r.envelope_c);
  j["envelope_c"] = detail::number_or_null(c);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json jr;
    jr["N"] = r.N;
    jr["dx"] = r.dx;
    jr["dt"] = r.dt;
    jr["steps"] = r.steps;
    jr["error"] = r.error;
    jr["envelope_c"] = r.envelope_c;
    rows.push_back(jr);
  }
  j["rows"] = rows;
  j["conventions"] = "fields are evaluated pointwise with their right-continuous value at jumps; "
                     "error is the maximum over all steps up to T";
  return j.dump(2) + "\n";
}

/// Writes <stem>.csv and <stem>.json. On failure neither file is left behind.
inline void emit_report(const ConvergenceReport& rep, const std::string& stem) {
  if (stem.empty()) throw IoError("output path is empty");
  const std::string csv = stem + ".csv";
  const std::string json = stem + ".json";
  detail::write_file_atomically(csv, report_csv(rep));
  try {
    detail::write_file_atomically(json, report_json(rep));
  } catch (...) {
    std::remove(csv.c_str());
    throw;
  }
}

/// Constant-field transport of a Dirac on split-square meshes.
struct SlStudyConfig {
  Point2 velocity{0.8, 0.6};
  Point2 start{0.0, 0.0};
  double T = 1.0;
  /// Squares per unit length of the split-square mesh.
  std::vector<int> ladder{10, 20, 40, 80, 160};
  double courant = 0.5;  ///< a_inf dt / hbar
};

struct SlRow {
  double h = 0.0;
  double dt = 0.0;
  std::int64_t steps = 0;
  double error = 0.0;
  double max_off_diagonal = 0.0;
  double off_diagonal_bound = 0.0;  ///< 2 a_inf dt / hbar
  double mass_drift = 0.0;
};

struct SlStudyReport {
  std::vector<SlRow> rows;
  double order = 0.0;
  double residual = 0.0;
};

/// Split-square mesh of width 1/m that holds every node the semi-Lagrangian
/// chain can reach from `start` in `steps` steps of constant velocity, with
/// `start` on a node. Reach grows by one node per step along the direction of
/// motion (tiny weights, but they must stay on the mesh); half a unit of
/// margin covers the other directions.
struct DiracMesh {
  TriMesh mesh;
  std::size_t start_node;
};

inline DiracMesh dirac_transport_mesh(const Point2& start, const Point2& velocity, int m, std::int64_t steps) {
  if (m < 1) throw ConfigError("squares per unit length must be positive");
  const double h = 1.0 / m;
  const int ahead = static_cast<int>(steps) + 1;
  const int margin = m / 2 + 1;
  const int left = velocity[0] < 0.0 ? ahead : margin;
  const int right = velocity[0] > 0.0 ? ahead : margin;
  const int below = velocity[1] < 0.0 ? ahead : margin;
  const int above = velocity[1] > 0.0 ? ahead : margin;
  TriMesh mesh = TriMesh::structured(start[0] - left * h, start[1] - below * h, h, left + right, below + above);
  const auto node = static_cast<std::size_t>(below) * static_cast<std::size_t>(left + right + 1) + static_cast<std::size_t>(left);
  return {std::move(mesh), node};
}

/// Number of steps reaching T with a_inf dt <= courant * hbar on a mesh of width 1/m.
inline std::int64_t sl_steps(double T, double a_inf, double courant, int m) {
  const double hbar = 1.0 / (m * std::sqrt(2.0));
  const double speed = a_inf > 0.0 ? a_inf : 1.0;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(T * speed / (courant * hbar) - 1e-9)));
}

inline SlRow run_sl_resolution(const SlStudyConfig& cfg, int m) {
  if (m < 1) throw ConfigError("semi-Lagrangian ladder entries must be positive");
  const auto field = fields::constant<2>(cfg.velocity);
  SlRow row;
  row.h = 1.0 / m;
  row.steps = sl_steps(cfg.T, field.a_inf, cfg.courant, m);
  row.dt = cfg.T / static_cast<double>(row.steps);
  const DiracMesh dm = dirac_transport_mesh(cfg.start, cfg.velocity, m, row.steps);
  row.off_diagonal_bound = 2.0 * field.a_inf * row.dt / dm.mesh.hbar();
  const NodeMeasure mu0 = node_dirac(dm.mesh, dm.start_node);
  const Point2 x0 = dm.mesh.nodes()[dm.start_node];
  sl_run(mu0, field, row.dt, row.steps, [&](std::int64_t n, const NodeMeasure& mu, const SlKernel* k) {
    const double t = static_cast<double>(n) * row.dt;
    const Point2 exact{x0[0] + t * cfg.velocity[0], x0[1] + t * cfg.velocity[1]};
    row.error = std::max(row.error, w1_to_dirac(mu, exact));
    if (k != nullptr) row.max_off_diagonal = std::max(row.max_off_diagonal, k->max_off_diagonal);
    row.mass_drift = std::max(row.mass_drift, std::abs(mu.mass() - 1.0));
  });
  return row;
}

inline SlStudyReport run_sl_study(const SlStudyConfig& cfg) {
  SlStudyReport rep;
  std::vector<double> h, e;
  for (int m : cfg.ladder) {
    rep.rows.push_back(run_sl_resolution(cfg, m));
    h.push_back(rep.rows.back().h);
    e.push_back(rep.rows.back().error);
  }
  const LineFit fit = fit_order(h, e);
  rep.order = fit.slope;
  rep.residual = fit.residual;
  return rep;
}

}  // namespace mtlab
