// Command-line front end: single runs, convergence studies, Monte Carlo
// comparison of the random characteristic, triangle-mesh runs, distances
// between stored measures, and the interpolation-inequality check.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtlab/flows.hpp"
#include "mtlab/measure_io.hpp"
#include "mtlab/scheme.hpp"
#include "mtlab/semi_lagrangian.hpp"
#include "mtlab/stochastic.hpp"
#include "mtlab/study.hpp"
#include "mtlab/wasserstein.hpp"

namespace {

using namespace mtlab;

constexpr int kExitConfig = 2;
constexpr int kExitCfl = 3;
constexpr int kExitIo = 4;

// Shared study options; optionals stay empty unless given on the command line.
struct StudyOverrides {
  std::string config;
  std::optional<std::string> scheme, example, distance, out;
  std::optional<double> T, cfl;
  std::vector<std::int64_t> ladder;
  std::optional<std::uint64_t> seed;
  bool no_timing = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON study configuration");
    app->add_option("--scheme", scheme, "upwind | rusanov");
    app->add_option("--example", example, "example1 | example2 | example3 | binomial");
    app->add_option("--T", T, "final time");
    app->add_option("--cfl", cfl, "dt/dx ratio");
    app->add_option("--ladder", ladder, "node counts N")->delimiter(',');
    app->add_option("--seed", seed, "random seed");
    app->add_option("--distance", distance, "w1 | wp(p) | l1");
    app->add_option("--out", out, "output path");
    app->add_flag("--no-timing", no_timing, "write zero runtimes so reports are byte-stable");
  }

  [[nodiscard]] StudyConfig resolve() const {
    StudyConfig cfg = config.empty() ? StudyConfig{} : StudyConfig::load(config);
    if (scheme) cfg.scheme = *scheme;
    if (example) cfg.example = *example;
    if (distance) cfg.distance = *distance;
    if (out) cfg.out = *out;
    if (T) cfg.T = *T;
    if (cfl) cfg.cfl = *cfl;
    if (!ladder.empty()) cfg.ladder = ladder;
    if (seed) cfg.seed = *seed;
    if (no_timing) cfg.timing = false;
    cfg.validate();
    return cfg;
  }
};

// Runs `fn` with `path` (or stdout when empty) as destination; files are
// written to a temporary and renamed only on success.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ostringstream buf;
  fn(buf);
  detail::write_file_atomically(path, buf.str());
}

int cmd_run(const StudyOverrides& o) {
  const StudyConfig cfg = o.resolve();
  const auto N = cfg.ladder.front();
  const auto spec = SchemeSpec::by_name(cfg.scheme);
  const auto exact = ExactSolution::by_name(cfg.example);
  const auto field = fields::by_name(cfg.example);
  const ResolutionRow row = run_resolution(cfg, N);
  const CartesianGrid<1> grid(row.dx, row.dt);
  const auto final_mu = run_observed(project_initial(exact.initial(), grid), spec, field, row.steps,
                                     [](std::int64_t, const DiscreteMeasure<1>&) {});
  with_output(cfg.out, [&](std::ostream& os) { write_measure_table(os, final_mu); });
  std::cerr << "N=" << N << " steps=" << row.steps << " max error (" << cfg.distance << ")=" << format_double(row.error)
            << '\n';
  return 0;
}

int cmd_convergence(const StudyOverrides& o) {
  const StudyConfig cfg = o.resolve();
  const ConvergenceReport rep = run_study(cfg);
  if (!cfg.out.empty()) emit_report(rep, cfg.out);
  std::cout << report_csv(rep);
  std::cout << "order " << format_double(rep.order) << " residual " << format_double(rep.residual) << '\n';
  return 0;
}

struct McOptions {
  std::string scheme = "upwind";
  std::string example = "example1";
  std::int64_t N = 100;
  std::int64_t steps = 20;
  std::int64_t paths = 100000;
  std::uint64_t seed = 1;
  double cfl = 0.5;
  std::int64_t min_visits = 1000;
  std::string out;
};

int cmd_mc_compare(const McOptions& o) {
  const auto spec = SchemeSpec::by_name(o.scheme);
  const auto exact = ExactSolution::by_name(o.example);
  const auto field = fields::by_name(o.example);
  if (o.N < 1 || o.steps < 1 || o.paths < 1) throw ConfigError("N, steps and paths must be positive");
  const double dx = 5.0 / static_cast<double>(o.N);
  if (dx > 1.0) throw ConfigError("N too small: dx exceeds 1");
  const CartesianGrid<1> grid(dx, o.cfl * dx);
  const CflReport cfl = check_cfl<1>(spec, field, grid);
  if (!cfl.satisfied) throw CflError(cfl);
  const auto mu0 = project_initial(exact.initial(), grid);
  const auto kernels = kernels_for(mu0, spec, field, o.steps);
  const auto batch = sample_paths(mu0, kernels, o.paths, o.seed);
  const auto stats = increment_residual(batch, field, o.min_visits, &kernels);
  with_output(o.out, [&](std::ostream& os) {
    os << "step,tv,max_increment_residual,max_z\n";
    DiscreteMeasure<1> law = mu0;
    for (std::int64_t n = 0; n <= o.steps; ++n) {
      const double tv = total_variation(empirical_law(batch, n), law);
      os << n << ',' << format_double(tv);
      if (n < o.steps) {
        const auto& st = stats[static_cast<std::size_t>(n)];
        os << ',' << format_double(st.max_abs_mean) << ',' << format_double(st.max_z);
        law = apply_kernel(law, kernels[static_cast<std::size_t>(n)]);
      } else {
        os << ",,";
      }
      os << '\n';
    }
  });
  return 0;
}

struct TriOptions {
  std::string mesh;
  int squares = 20;
  std::vector<double> velocity{0.8, 0.6};
  std::vector<double> start{0.0, 0.0};
  double T = 1.0;
  double courant = 0.5;
  std::string out;
};

int cmd_tri_run(const TriOptions& o) {
  if (o.velocity.size() != 2 || o.start.size() != 2) throw ConfigError("--velocity and --start take two values");
  if (!(o.T > 0.0) || !(o.courant > 0.0)) throw ConfigError("--T and --courant must be positive");
  const Point2 velocity{o.velocity[0], o.velocity[1]};
  const Point2 start{o.start[0], o.start[1]};
  const auto field = fields::constant<2>(velocity);
  std::optional<TriMesh> mesh;
  std::size_t start_node = 0;
  std::int64_t steps = 0;
  if (!o.mesh.empty()) {
    std::ifstream in(o.mesh);
    if (!in) throw IoError("cannot open mesh " + o.mesh);
    try {
      mesh.emplace(TriMesh::read(in));
    } catch (const MeshError& e) {
      throw ConfigError(e.what());
    }
    const double speed = field.a_inf > 0.0 ? field.a_inf : 1.0;
    steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(o.T * speed / (o.courant * mesh->hbar()) - 1e-9)));
    start_node = mesh->nearest_node(start);
  } else {
    steps = sl_steps(o.T, field.a_inf, o.courant, o.squares);
    DiracMesh dm = dirac_transport_mesh(start, velocity, o.squares, steps);
    mesh.emplace(std::move(dm.mesh));
    start_node = dm.start_node;
  }
  const double dt = o.T / static_cast<double>(steps);
  const SlCfl cfl = check_sl_cfl(*mesh, field, dt);
  if (!cfl.satisfied) throw CflError(CflReport{cfl.lhs, cfl.bound, false});
  const NodeMeasure mu0 = node_dirac(*mesh, start_node);
  double worst_off = 0.0;
  const NodeMeasure mu = sl_run(mu0, field, dt, steps, [&](std::int64_t, const NodeMeasure&, const SlKernel* k) {
    if (k != nullptr) worst_off = std::max(worst_off, k->max_off_diagonal);
  });
  with_output(o.out, [&](std::ostream& os) {
    os << "# node x y weight\n";
    for (const auto& [i, w] : mu.weights) {
      const auto& p = mesh->nodes()[static_cast<std::size_t>(i)];
      os << i + 1 << ' ' << format_double(p[0]) << ' ' << format_double(p[1]) << ' ' << format_double(w) << '\n';
    }
  });
  std::cerr << "steps=" << steps << " dt=" << format_double(dt) << " hbar=" << format_double(mesh->hbar())
            << " max off-diagonal=" << format_double(worst_off)
            << " bound=" << format_double(2.0 * field.a_inf * dt / mesh->hbar()) << '\n';
  return 0;
}

MeasureTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_measure_table(in);
}

int cmd_distance(const std::string& a, const std::string& b, double p) {
  if (!(p >= 1.0)) throw ConfigError("--p must be at least 1");
  const MeasureTable ta = read_table(a);
  const MeasureTable tb = read_table(b);
  if (ta.header.dims != tb.header.dims) throw ConfigError("measure tables have different dimensions");
  double d = 0.0;
  switch (ta.header.dims) {
    case 1:
      d = wp_1d(ta.as<1>(), tb.as<1>(), p);
      break;
    case 2:
      d = wp_discrete(ta.as<2>(), tb.as<2>(), p);
      break;
    case 3:
      d = wp_discrete(ta.as<3>(), tb.as<3>(), p);
      break;
    default:
      throw ConfigError("unsupported dimension " + std::to_string(ta.header.dims));
  }
  std::cout << format_double(d) << '\n';
  return 0;
}

PiecewiseConstant random_density(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pieces(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int k = pieces(rng);
  std::vector<std::array<double, 3>> out;
  double x = -1.0 + 2.0 * unit(rng);
  for (int i = 0; i < k; ++i) {
    const double w = 0.05 + unit(rng);
    out.push_back({x, x + w, unit(rng) < 0.2 ? 0.0 : 0.1 + unit(rng)});
    x += w;
  }
  auto f = PiecewiseConstant::from_pieces(out);
  const double mass = f.integral();
  if (mass <= 0.0) return PiecewiseConstant::from_pieces({{{0.0, 1.0, 1.0}}});
  for (double& v : f.v) v /= mass;
  return f;
}

int cmd_interp_check(int samples, std::uint64_t seed, int kmax) {
  std::cout << "eps,ratio,sqrt_eps\n";
  for (int k = 1; k <= kmax; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const auto f = PiecewiseConstant::from_pieces({{{0.0, 1.0, 1.0}}});
    const auto g = PiecewiseConstant::from_pieces({{{eps, 1.0 + eps, 1.0}}});
    const auto r = interpolation_check(f, g, 1.0);
    std::cout << format_double(eps) << ',' << format_double(r.ratio) << ',' << format_double(std::sqrt(eps)) << '\n';
  }
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto r = interpolation_check(random_density(rng), random_density(rng), 1.0);
    worst = std::max(worst, r.ratio);
  }
  std::cout << "random_pairs " << samples << " max_ratio " << format_double(worst) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport of probability measures by upwind-type schemes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mtlab::kVersion));

  StudyOverrides run_opts, conv_opts;
  auto* run = app.add_subcommand("run", "evolve one resolution and write the final measure table");
  run_opts.attach(run);
  auto* conv = app.add_subcommand("convergence", "error ladder, fitted order, CSV and JSON report");
  conv_opts.attach(conv);

  McOptions mc;
  auto* mcc = app.add_subcommand("mc-compare", "Monte Carlo paths of the random characteristic versus the scheme");
  mcc->add_option("--scheme", mc.scheme);
  mcc->add_option("--example", mc.example);
  mcc->add_option("--N", mc.N, "cells across [-2.5, 2.5]");
  mcc->add_option("--steps", mc.steps);
  mcc->add_option("--paths", mc.paths);
  mcc->add_option("--seed", mc.seed);
  mcc->add_option("--cfl", mc.cfl);
  mcc->add_option("--min-visits", mc.min_visits);
  mcc->add_option("--out", mc.out);

  TriOptions tri;
  auto* trr = app.add_subcommand("tri-run", "semi-Lagrangian transport of a Dirac on a triangle mesh");
  trr->add_option("--mesh", tri.mesh, "mesh file with 'v x y' and 't i j k' lines");
  trr->add_option("--squares", tri.squares, "squares per unit length of the built-in mesh");
  trr->add_option("--velocity", tri.velocity)->delimiter(',')->expected(2);
  trr->add_option("--start", tri.start)->delimiter(',')->expected(2);
  trr->add_option("--T", tri.T);
  trr->add_option("--courant", tri.courant, "a_inf dt / hbar");
  trr->add_option("--out", tri.out);

  std::string dist_a, dist_b;
  double dist_p = 1.0;
  auto* dst = app.add_subcommand("distance", "Wasserstein distance between two measure tables");
  dst->add_option("first", dist_a)->required();
  dst->add_option("second", dist_b)->required();
  dst->add_option("--p", dist_p);

  int ic_samples = 10000, ic_kmax = 20;
  std::uint64_t ic_seed = 7;
  auto* icc = app.add_subcommand("interp-check", "L1 / (BV W1)^(1/2) ratio on shifted indicators and random pairs");
  icc->add_option("--samples", ic_samples);
  icc->add_option("--seed", ic_seed);
  icc->add_option("--kmax", ic_kmax);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*conv) return cmd_convergence(conv_opts);
    if (*mcc) return cmd_mc_compare(mc);
    if (*trr) return cmd_tri_run(tri);
    if (*dst) return cmd_distance(dist_a, dist_b, dist_p);
    if (*icc) return cmd_interp_check(ic_samples, ic_seed, ic_kmax);
  } catch (const mtlab::CflError& e) {
    std::cerr << "error: " << e.what() << " (lhs " << mtlab::format_double(e.report().lhs) << ", bound "
              << mtlab::format_double(e.report().bound) << ")\n";
    return kExitCfl;
  } catch (const mtlab::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const mtlab::Error& e) {
    // Remaining library errors stem from bad names, ranges or inputs.
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
