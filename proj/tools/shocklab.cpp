// Command-line laboratory driver.
//
//   shocklab simulate --kind cutoff --p 0.75 --t-grid 100,400 --replicas 500 --out r.csv
//   shocklab dist --p 0.75 --m 1,2,3 --s-grid -2,-1,0,1,2 --out tables/f
//   shocklab verify product --replicas 2000
//   shocklab report --in r.csv
//
// Exit codes: 0 all checks pass, 1 at least one gated check fails,
// 2 usage/config error, 3 numeric non-convergence.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "shocklab/experiments.hpp"

namespace {

using namespace shocklab;

struct Overrides {
  std::string config, out, kind, dump_paths;
  std::optional<double> p, nu, eps, tail_alpha;
  std::optional<std::string> m, r, t_grid, s_grid, c;
  std::optional<long long> replicas, seed, workers, pad, bin_width;
  std::optional<long long> num_m, num_n_lambda;
  std::optional<double> num_L, num_radius_scale, num_refine_tol;
  bool zero_walltime = false;
  bool no_refine = false;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key/value config file; flags override its fields");
  cmd->add_option("--p", o.p, "right-jump probability in (1/2, 1]");
  cmd->add_option("--m", o.m, "comma list of particle labels M");
  cmd->add_option("--r", o.r, "comma list of offsets R");
  cmd->add_option("--t-grid", o.t_grid, "comma list of horizons t");
  cmd->add_option("--s-grid", o.s_grid, "comma list of s values");
  cmd->add_option("--c", o.c, "comma list of recentring offsets C");
  cmd->add_option("--replicas", o.replicas, "Monte Carlo replicas per cell");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  cmd->add_option("--nu", o.nu, "two-time exponent in (1/2, 1)");
  cmd->add_option("--eps", o.eps, "slow-decorrelation deviation threshold");
  cmd->add_option("--pad", o.pad, "active-window safety pad (sites)");
  cmd->add_option("--bin-width", o.bin_width, "density histogram bin width (sites)");
  cmd->add_option("--tail-alpha", o.tail_alpha, "level of the exact tail intervals");
  cmd->add_option("--out", o.out, "output path");
  cmd->add_option("--dump-paths", o.dump_paths, "debug CSV of replica 0 moves (time,label,position)");
  cmd->add_flag("--zero-walltime", o.zero_walltime, "report wall_ms as 0 (reproducible bytes)");
  cmd->add_option("--numerics-m", o.num_m, "quadrature nodes");
  cmd->add_option("--numerics-L", o.num_L, "truncation length (0 = auto)");
  cmd->add_option("--numerics-n-lambda", o.num_n_lambda, "contour nodes");
  cmd->add_option("--numerics-radius-scale", o.num_radius_scale, "contour radius factor");
  cmd->add_flag("--numerics-no-refine", o.no_refine, "skip the refinement self-check");
  cmd->add_option("--numerics-refine-tol", o.num_refine_tol, "refinement tolerance");
}

ExperimentSpec build_spec(const Overrides& o) {
  ExperimentSpec spec;
  if (!o.config.empty()) spec = parse_config(o.config);
  if (!o.kind.empty()) spec.kind = experiment_kind_from(o.kind);
  if (o.p) spec.p = *o.p;
  if (o.m) spec.m_list = config_int_list("m", *o.m);
  if (o.r) spec.r_list = config_int_list("r", *o.r);
  if (o.t_grid) spec.t_grid = config_double_list("t_grid", *o.t_grid);
  if (o.s_grid) spec.s_grid = config_double_list("s_grid", *o.s_grid);
  if (o.c) spec.c_list = config_double_list("c", *o.c);
  if (o.replicas) spec.replicas = static_cast<int>(*o.replicas);
  if (o.seed) spec.seed = static_cast<std::uint64_t>(*o.seed);
  if (o.workers) spec.workers = static_cast<int>(*o.workers);
  if (o.nu) spec.nu = *o.nu;
  if (o.eps) spec.eps = *o.eps;
  if (o.pad) spec.pad = static_cast<int>(*o.pad);
  if (o.bin_width) spec.bin_width = static_cast<int>(*o.bin_width);
  if (o.tail_alpha) spec.tail_alpha = *o.tail_alpha;
  if (!o.out.empty()) spec.out_path = o.out;
  if (!o.dump_paths.empty()) spec.dump_paths = o.dump_paths;
  if (o.zero_walltime) spec.zero_walltime = true;
  if (o.num_m) spec.numerics.m = static_cast<int>(*o.num_m);
  if (o.num_L) spec.numerics.L = *o.num_L;
  if (o.num_n_lambda) spec.numerics.n_lambda = static_cast<int>(*o.num_n_lambda);
  if (o.num_radius_scale) spec.numerics.radius_scale = *o.num_radius_scale;
  if (o.no_refine) spec.numerics.refine = false;
  if (o.num_refine_tol) spec.numerics.refine_tol = *o.num_refine_tol;
  if (spec.workers == 0)
    spec.workers = std::max(1u, std::thread::hardware_concurrency());
  return spec;
}

int gated_failures(const std::vector<ReportRow>& rows) {
  int failures = 0;
  for (const auto& r : rows) failures += r.band.has_value() && !r.pass;
  return failures;
}

void print_summary(const std::vector<ReportRow>& rows) {
  int gated = 0, failed = 0;
  for (const auto& r : rows) {
    if (!r.band) continue;
    ++gated;
    if (!r.pass) {
      ++failed;
      std::cout << "FAIL " << r.kind;
      if (r.M) std::cout << " M=" << *r.M;
      if (r.R) std::cout << " R=" << *r.R;
      if (r.t) std::cout << " t=" << *r.t;
      if (r.s) std::cout << " s=" << *r.s;
      std::cout << ": estimate " << r.estimate << " vs reference " << r.reference.value_or(0.0)
                << " band " << *r.band << '\n';
    }
  }
  std::cout << (gated - failed) << "/" << gated << " gated checks pass, " << rows.size()
            << " rows\n";
}

void emit_report(const std::vector<ReportRow>& rows, const std::string& path) {
  if (path.empty()) {
    write_report_csv(std::cout, rows);
    return;
  }
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write report file '" + path + "'");
  write_report_csv(os, rows);
  std::cout << "wrote " << rows.size() << " rows to " << path << '\n';
}

int run_command(const Overrides& o, bool verify_mode) {
  ExperimentSpec spec = build_spec(o);
  auto rows = run_experiment(spec);
  if (verify_mode) {
    if (!spec.out_path.empty()) emit_report(rows, spec.out_path);
    print_summary(rows);
  } else {
    emit_report(rows, spec.out_path);
  }
  return gated_failures(rows) == 0 ? 0 : 1;
}

int run_report(const std::string& in_path) {
  std::ifstream is(in_path);
  if (!is) throw UsageError("cannot open report file '" + in_path + "'");
  auto rows = read_report_csv(is);
  int mismatches = 0;
  for (auto& r : rows) {
    const bool recomputed = row_pass(r.estimate, r.reference, r.band);
    if (recomputed != r.pass) {
      ++mismatches;
      std::cout << "MISMATCH " << r.kind << ": stored pass=" << r.pass << " recomputed "
                << recomputed << '\n';
    }
    r.pass = recomputed;
  }
  print_summary(rows);
  if (mismatches) std::cout << mismatches << " stored pass flags disagree\n";
  return (mismatches == 0 && gated_failures(rows) == 0) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale ASEP shock laboratory"};
  app.require_subcommand(1);

  Overrides sim_o, dist_o, verify_o;
  std::string report_in;

  CLI::App* sim = app.add_subcommand("simulate", "run one experiment and emit its report");
  sim->add_option("--kind", sim_o.kind, "experiment kind")->required(false);
  add_common_options(sim, sim_o);

  CLI::App* dist = app.add_subcommand("dist", "tabulate the limit distributions");
  add_common_options(dist, dist_o);

  CLI::App* verify = app.add_subcommand("verify", "run an experiment and gate on its checks");
  verify->add_option("kind", verify_o.kind, "experiment kind")->required();
  add_common_options(verify, verify_o);

  CLI::App* report = app.add_subcommand("report", "re-check the pass flags of a report file");
  report->add_option("--in", report_in, "report CSV to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) {
      if (sim_o.kind.empty() && sim_o.config.empty())
        throw shocklab::UsageError("simulate: need --kind or --config");
      return run_command(sim_o, false);
    }
    if (dist->parsed()) {
      dist_o.kind = "dist_table";
      return run_command(dist_o, true);
    }
    if (verify->parsed()) return run_command(verify_o, true);
    if (report->parsed()) return run_report(report_in);
  } catch (const shocklab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    if (!e.report().empty()) std::cerr << e.report() << '\n';
    return 3;
  } catch (const shocklab::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const shocklab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
