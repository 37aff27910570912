#pragma once

// Desk-scale experiments: each runner simulates seeded replicas of one of
// the coupled-configuration setups, aggregates observables, and reports rows
// against the computed limit laws. Replica r of a run with master seed S
// uses derive_seed(S, r); aggregation is per-replica slots merged in index
// order, so reports are identical regardless of the worker count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "asep.hpp"
#include "configfile.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "limit_laws.hpp"
#include "report.hpp"
#include "stats.hpp"

namespace shocklab {

enum class ExperimentKind {
  StepLaw,
  Cutoff,
  Product,
  CouplingSlack,
  Duality,
  SlowDecorrelation,
  BlockingTail,
  Independence,
  DensityProfile,
  DistTable,
};

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_kind_names() {
  static const std::vector<std::pair<std::string, ExperimentKind>> names = {
      {"step_law", ExperimentKind::StepLaw},
      {"cutoff", ExperimentKind::Cutoff},
      {"product", ExperimentKind::Product},
      {"coupling_slack", ExperimentKind::CouplingSlack},
      {"duality", ExperimentKind::Duality},
      {"slow_decorrelation", ExperimentKind::SlowDecorrelation},
      {"blocking_tail", ExperimentKind::BlockingTail},
      {"independence", ExperimentKind::Independence},
      {"density_profile", ExperimentKind::DensityProfile},
      {"dist_table", ExperimentKind::DistTable},
  };
  return names;
}

inline ExperimentKind experiment_kind_from(const std::string& s) {
  for (const auto& [name, kind] : experiment_kind_names())
    if (name == s) return kind;
  throw UsageError("unknown experiment kind '" + s + "'");
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [name, kind] : experiment_kind_names())
    if (kind == k) return name;
  return "?";
}

// Acceptance constants. The theorems are t -> infinity limits; these bands
// gate the largest t of a grid and are engineering choices, recorded as such
// in the reports.
inline constexpr double kDkwAlpha = 0.01;          // DKW level for CDF bands
inline constexpr double kModelAllowance = 0.03;    // finite-t allowance on top of DKW
inline constexpr double kStepLawKsBound = 0.05;    // KS bound at the largest t
inline constexpr double kTailBound = 0.05;         // cutoff tail upper-bound gate
inline constexpr double kSlowDecBound = 0.1;       // slow-decorrelation gate
inline constexpr double kBlockingBound = 0.02;     // blocking-tail upper-bound gate
inline constexpr double kTableTol = 1e-6;          // table monotonicity/bounds tolerance

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::StepLaw;
  double p = 0.75;
  std::vector<int> m_list = {1, 2, 3};
  std::vector<int> r_list;  // empty: per-M default {-2, 0, 1, M, M+2}
  std::vector<double> t_grid = {100.0, 400.0, 1600.0};
  int replicas = 4000;
  std::uint64_t seed = 20260809;
  int workers = 1;
  double nu = 0.75;
  std::vector<double> c_list = {0.0};
  double eps = 0.25;
  std::vector<double> s_grid = {-1.0, -0.5, 0.25, 0.5, 1.0, 1.5, 2.0};
  int pad = 2;
  int bin_width = 8;
  double tail_alpha = 0.05;
  NumericParams numerics;
  std::string out_path;
  std::string dump_paths;  // debug CSV of replica 0's member-0 moves
  bool zero_walltime = false;

  std::vector<int> r_for(int M) const {
    std::vector<int> r = r_list.empty() ? std::vector<int>{-2, 0, 1, M, M + 2} : r_list;
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
  }

  void validate() const {
    if (!(p > 0.5) || !(p <= 1.0)) throw UsageError("field 'p': must lie in (1/2, 1]");
    if (replicas < 1) throw UsageError("field 'replicas': must be >= 1");
    if (workers < 1) throw UsageError("field 'workers': must be >= 1");
    if (m_list.empty()) throw UsageError("field 'm_list': must be nonempty");
    for (int m : m_list)
      if (m < 1) throw UsageError("field 'm_list': labels must be >= 1");
    if (t_grid.empty()) throw UsageError("field 't_grid': must be nonempty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      if (!(t_grid[i] > 0)) throw UsageError("field 't_grid': times must be positive");
      if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
        throw UsageError("field 't_grid': must be strictly increasing");
    }
    if (!(nu > 0.5) || !(nu < 1.0)) throw UsageError("field 'nu': must lie in (1/2, 1)");
    if (!(eps > 0)) throw UsageError("field 'eps': must be positive");
    if (pad < 1) throw UsageError("field 'pad': must be >= 1");
    if (bin_width < 1) throw UsageError("field 'bin_width': must be >= 1");
    if (!(tail_alpha > 0) || !(tail_alpha < 1))
      throw UsageError("field 'tail_alpha': must lie in (0, 1)");
    if (c_list.empty()) throw UsageError("field 'c_list': must be nonempty");
  }
};

// Smallest integer >= x, as the integer threshold of the event {pos >= x}.
inline int threshold_ceil(double x) { return static_cast<int>(std::ceil(x)); }

template <class Fn>
void parallel_replicas(int n, int workers, Fn&& fn) {
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next.fetch_add(1, std::memory_order_relaxed)) < n;) fn(i);
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline void stamp(std::vector<ReportRow>& rows, const ExperimentSpec& spec, double wall_ms) {
  for (ReportRow& r : rows) {
    r.p = spec.p;
    r.n = spec.replicas;
    r.seed = spec.seed;
    r.wall_ms = spec.zero_walltime ? 0.0 : wall_ms;
  }
}

// Debug path dump for replica 0 at the first grid time.
inline void maybe_dump_paths(CoupledEnsemble& ens, const ExperimentSpec& spec, int replica,
                             int ti) {
  if (replica != 0 || ti != 0 || spec.dump_paths.empty()) return;
  auto os = std::make_shared<std::ofstream>(spec.dump_paths);
  if (!*os) throw UsageError("cannot write path dump '" + spec.dump_paths + "'");
  ens.dump_paths_csv(std::move(os));
}

// Cached reference evaluations of F_{M,p}(s).
class RefCache {
 public:
  RefCache(double p, const NumericParams& np) : p_(p), np_(np) {}
  double at(int M, double s) {
    const auto key = std::make_pair(M, s);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = p_ == 1.0 ? f_m1_gram(M, s) : f_mp(M, p_, s, np_).value;
    cache_.emplace(key, v);
    return v;
  }
  // clamped for reporting
  double reported(int M, double s) { return std::min(1.0, std::max(0.0, at(M, s))); }

 private:
  double p_;
  NumericParams np_;
  std::map<std::pair<int, double>, double> cache_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// step_law: step initial data; the rescaled observable
// S = (t - x_M(t)/(p-q)) / sqrt(t) has limit CDF F_{M,p}.
inline std::vector<ReportRow> run_step_law(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());
  const int nm = static_cast<int>(spec.m_list.size());
  const double drift = 2.0 * spec.p - 1.0;

  std::vector<std::vector<double>> slot(spec.replicas);
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    CoupledEnsemble ens(derive_seed(spec.seed, r), spec.p, spec.pad);
    ens.add_member(InitialKind::step(spec.p));
    detail::maybe_dump_paths(ens, spec, r, 0);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(nt) * nm);
    for (double t : spec.t_grid) {
      ens.evolve(t);
      for (int M : spec.m_list) {
        const double x = ens.member(0).particle_position(M);
        out.push_back((t - x / drift) / std::sqrt(t));
      }
    }
    slot[r] = std::move(out);
  });

  std::vector<ReportRow> rows;
  for (int mi = 0; mi < nm; ++mi) {
    const int M = spec.m_list[mi];
    // one reference table per M spanning every t's sample range
    std::optional<DistributionTable> table;
    if (spec.p != 1.0) {
      double lo = slot[0][mi], hi = lo;
      for (int r = 0; r < spec.replicas; ++r)
        for (int ti = 0; ti < nt; ++ti) {
          lo = std::min(lo, slot[r][ti * nm + mi]);
          hi = std::max(hi, slot[r][ti * nm + mi]);
        }
      std::vector<double> grid;
      for (double s = std::floor(lo) - 0.5; s <= std::ceil(hi) + 0.55; s += 0.05)
        grid.push_back(s);
      table = DistributionTable::build(M, spec.p, std::move(grid), spec.numerics);
    }
    std::vector<double> ks_by_t(nt);
    for (int ti = 0; ti < nt; ++ti) {
      std::vector<double> samples(spec.replicas);
      for (int r = 0; r < spec.replicas; ++r) samples[r] = slot[r][ti * nm + mi];
      EmpiricalCdf ecdf(std::move(samples));
      const double ks =
          spec.p == 1.0 ? ks_distance(ecdf, [&](double x) { return f_m1_gram(M, x); })
                        : ks_distance(ecdf, [&](double x) { return table->interpolate(x); });
      ks_by_t[ti] = ks;
      ReportRow row;
      row.kind = "step_law";
      row.M = M;
      row.t = spec.t_grid[ti];
      row.estimate = ks;
      row.reference = 0.0;
      if (ti == nt - 1) row.band = kStepLawKsBound;
      rows.push_back(finish_row(row));
    }
    if (nt >= 2) {
      ReportRow trend;
      trend.kind = "step_law_trend";
      trend.M = M;
      trend.t = spec.t_grid.back();
      trend.estimate = std::max(ks_by_t.back() - ks_by_t.front(), 0.0);
      trend.reference = 0.0;
      trend.band = 0.0;
      rows.push_back(finish_row(trend));
    }
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// cutoff: shock initial data; P(x_M(t) >= -(p-q) s sqrt(t)) tends to 0 for
// s < 0 and to F_{M,p}(s) for s > 0.
inline std::vector<ReportRow> run_cutoff(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());
  const int nm = static_cast<int>(spec.m_list.size());
  const double drift = 2.0 * spec.p - 1.0;

  std::vector<std::vector<int>> slot(spec.replicas);
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(nt) * nm);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::shock_ic(spec.p, t));
      detail::maybe_dump_paths(ens, spec, r, ti);
      ens.evolve(t);
      for (int M : spec.m_list) out.push_back(ens.member(0).particle_position(M));
    }
    slot[r] = std::move(out);
  });

  detail::RefCache ref(spec.p, spec.numerics);
  const double dkw = dkw_band(spec.replicas, kDkwAlpha);
  std::vector<ReportRow> rows;
  for (int mi = 0; mi < nm; ++mi) {
    const int M = spec.m_list[mi];
    std::map<double, std::vector<double>> tail_by_s;  // s < 0 point estimates per t
    std::vector<double> maxgap_by_t(nt, 0.0);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      const bool last = ti == nt - 1;
      for (double s : spec.s_grid) {
        const int thr = threshold_ceil(-drift * s * std::sqrt(t));
        long long k = 0;
        for (int r = 0; r < spec.replicas; ++r) k += slot[r][ti * nm + mi] >= thr;
        const double est = static_cast<double>(k) / spec.replicas;
        if (s < 0) {
          ReportRow info;
          info.kind = "cutoff_tail";
          info.M = M;
          info.t = t;
          info.s = s;
          info.estimate = est;
          info.reference = 0.0;
          rows.push_back(finish_row(info));

          ReportRow ub;
          ub.kind = "cutoff_tail_ub";
          ub.M = M;
          ub.t = t;
          ub.s = s;
          ub.estimate = binom_ci(k, spec.replicas, spec.tail_alpha).hi;
          ub.reference = 0.0;
          if (last) ub.band = kTailBound;
          rows.push_back(finish_row(ub));
          tail_by_s[s].push_back(est);
        } else {
          ReportRow gap;
          gap.kind = "cutoff_gap";
          gap.M = M;
          gap.t = t;
          gap.s = s;
          gap.estimate = est;
          gap.reference = ref.reported(M, s);
          if (last) gap.band = dkw + kModelAllowance;
          rows.push_back(finish_row(gap));
          maxgap_by_t[ti] = std::max(maxgap_by_t[ti], std::fabs(est - *gap.reference));
        }
      }
    }
    if (nt >= 2) {
      for (auto& [s, ests] : tail_by_s) {
        ReportRow trend;
        trend.kind = "cutoff_tail_trend";
        trend.M = M;
        trend.t = spec.t_grid.back();
        trend.s = s;
        trend.estimate = std::max(ests.back() - ests.front(), 0.0);
        trend.reference = 0.0;
        trend.band = 0.0;
        rows.push_back(finish_row(trend));
      }
      ReportRow trend;
      trend.kind = "cutoff_gap_trend";
      trend.M = M;
      trend.t = spec.t_grid.back();
      trend.estimate = std::max(maxgap_by_t.back() - maxgap_by_t.front(), 0.0);
      trend.reference = 0.0;
      trend.band = 0.0;
      rows.push_back(finish_row(trend));
    }
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// product: coupled triple (shock, block A, block B); P(Y_M >= -R) tends to
// the product law. For p = 1 the same holds with x_M itself; for p < 1 the
// empirical bound P(x_M >= -R) <= P(Y_M >= -R) is checked.
inline std::vector<ReportRow> run_product(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());
  const int nm = static_cast<int>(spec.m_list.size());

  std::vector<std::vector<std::pair<int, int>>> slot(spec.replicas);  // (x_IC, Y)
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(nt) * nm);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::shock_ic(spec.p, t));
      ens.add_member(InitialKind::block_a(spec.p, t));
      ens.add_member(InitialKind::block_b(spec.p, t));
      detail::maybe_dump_paths(ens, spec, r, ti);
      ens.evolve(t);
      for (int M : spec.m_list) {
        const int x = ens.member(0).particle_position(M);
        const int y = coupling_min(ens.member(1), ens.member(2), M);
        out.emplace_back(x, y);
      }
    }
    slot[r] = std::move(out);
  });

  const double dkw = dkw_band(spec.replicas, kDkwAlpha);
  std::vector<ReportRow> rows;
  for (int ti = 0; ti < nt; ++ti) {
    const double t = spec.t_grid[ti];
    const bool last = ti == nt - 1;
    for (int mi = 0; mi < nm; ++mi) {
      const int M = spec.m_list[mi];
      const std::vector<int> gate = {-2, 0, M, M + 2};
      for (int R : spec.r_for(M)) {
        long long ky = 0, kx = 0;
        for (int r = 0; r < spec.replicas; ++r) {
          ky += slot[r][ti * nm + mi].second >= -R;
          kx += slot[r][ti * nm + mi].first >= -R;
        }
        const double ey = static_cast<double>(ky) / spec.replicas;
        const double ex = static_cast<double>(kx) / spec.replicas;
        const double law = product_law(M, R, spec.p, spec.numerics);
        const bool gated =
            last && std::find(gate.begin(), gate.end(), R) != gate.end();

        ReportRow py;
        py.kind = "product";
        py.M = M;
        py.R = R;
        py.t = t;
        py.estimate = ey;
        py.reference = law;
        if (gated) py.band = dkw + kModelAllowance;
        rows.push_back(finish_row(py));

        if (spec.p == 1.0) {
          ReportRow px;
          px.kind = "product_tasep_x";
          px.M = M;
          px.R = R;
          px.t = t;
          px.estimate = ex;
          px.reference = law;
          if (gated) px.band = dkw + kModelAllowance;
          rows.push_back(finish_row(px));
        } else {
          ReportRow mono;
          mono.kind = "product_mono";
          mono.M = M;
          mono.R = R;
          mono.t = t;
          mono.estimate = std::max(ex - ey, 0.0);
          mono.reference = 0.0;
          if (last) mono.band = dkw;
          rows.push_back(finish_row(mono));
        }
      }
    }
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// coupling_slack: pathwise Y_n >= x_n (equality for p = 1), checked after
// every clock event; reports the violation count, which must be zero.
inline std::vector<ReportRow> run_coupling_slack(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());

  std::vector<std::vector<long long>> slot(spec.replicas);
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    std::vector<long long> out(nt, 0);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::shock_ic(spec.p, t));
      ens.add_member(InitialKind::block_a(spec.p, t));
      ens.add_member(InitialKind::block_b(spec.p, t));
      long long bad = 0;
      ens.evolve(t, [&](const ClockEvent&) {
        for (int n : spec.m_list) {
          const int y = coupling_min(ens.member(1), ens.member(2), n);
          const int x = ens.member(0).particle_position(n);
          if (spec.p == 1.0 ? y != x : y < x) ++bad;
        }
      });
      out[ti] = bad;
    }
    slot[r] = std::move(out);
  });

  std::vector<ReportRow> rows;
  for (int ti = 0; ti < nt; ++ti) {
    long long total = 0;
    for (int r = 0; r < spec.replicas; ++r) total += slot[r][ti];
    ReportRow row;
    row.kind = "coupling_slack";
    row.t = spec.t_grid[ti];
    row.estimate = static_cast<double>(total);
    row.reference = 0.0;
    row.band = 0.0;
    rows.push_back(finish_row(row));
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// duality: the hole/particle counting identity on block-B paths, evaluated
// on a checkpoint grid; reports the mismatch count, which must be zero.
inline std::vector<ReportRow> run_duality(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());
  const std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8, 1.0};

  std::vector<std::vector<long long>> slot(spec.replicas);
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    std::vector<long long> out(nt, 0);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::block_b(spec.p, t));
      long long bad = 0;
      for (double f : fractions) {
        ens.evolve(f * t);
        for (int M : spec.m_list) {
          for (int R : spec.r_for(M)) {
            if (R >= M) continue;
            const auto [left, right] = ens.member(0).duality_indicators(M, R);
            if (left != right) ++bad;
          }
        }
      }
      out[ti] = bad;
    }
    slot[r] = std::move(out);
  });

  std::vector<ReportRow> rows;
  for (int ti = 0; ti < nt; ++ti) {
    long long total = 0;
    for (int r = 0; r < spec.replicas; ++r) total += slot[r][ti];
    ReportRow row;
    row.kind = "duality";
    row.t = spec.t_grid[ti];
    row.estimate = static_cast<double>(total);
    row.reference = 0.0;
    row.band = 0.0;
    rows.push_back(finish_row(row));
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// slow_decorrelation: P(|x_M^A(t) - x_M^A(t - t^nu) - (p-q) t^nu| >= eps
// sqrt(t)) along the t grid.
inline std::vector<ReportRow> run_slow_decorrelation(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());
  const int nm = static_cast<int>(spec.m_list.size());
  const double drift = 2.0 * spec.p - 1.0;

  std::vector<std::vector<unsigned char>> slot(spec.replicas);
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    std::vector<unsigned char> out;
    out.reserve(static_cast<std::size_t>(nt) * nm);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      const double tnu = std::pow(t, spec.nu);
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::block_a(spec.p, t));
      ens.evolve(t - tnu);
      std::vector<int> early(nm);
      for (int mi = 0; mi < nm; ++mi)
        early[mi] = ens.member(0).particle_position(spec.m_list[mi]);
      ens.evolve(t);
      for (int mi = 0; mi < nm; ++mi) {
        const int late = ens.member(0).particle_position(spec.m_list[mi]);
        const double dev = std::fabs(late - early[mi] - drift * tnu);
        out.push_back(dev >= spec.eps * std::sqrt(t) ? 1 : 0);
      }
    }
    slot[r] = std::move(out);
  });

  std::vector<ReportRow> rows;
  for (int mi = 0; mi < nm; ++mi) {
    std::vector<double> est_by_t(nt);
    for (int ti = 0; ti < nt; ++ti) {
      long long k = 0;
      for (int r = 0; r < spec.replicas; ++r) k += slot[r][ti * nm + mi];
      est_by_t[ti] = static_cast<double>(k) / spec.replicas;
      ReportRow row;
      row.kind = "slowdec";
      row.M = spec.m_list[mi];
      row.t = spec.t_grid[ti];
      row.s = spec.eps;
      row.estimate = est_by_t[ti];
      row.reference = 0.0;
      if (ti == nt - 1) row.band = kSlowDecBound;
      rows.push_back(finish_row(row));
    }
    if (nt >= 2) {
      ReportRow trend;
      trend.kind = "slowdec_trend";
      trend.M = spec.m_list[mi];
      trend.t = spec.t_grid.back();
      trend.estimate = std::max(est_by_t.back() - est_by_t.front(), 0.0);
      trend.reference = 0.0;
      trend.band = 0.0;
      rows.push_back(finish_row(trend));
    }
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// blocking_tail: reversed step initial data; P(inf_{l<=t} x_0(l) < -t^{1/4}).
inline std::vector<ReportRow> run_blocking_tail(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());

  std::vector<std::vector<unsigned char>> slot(spec.replicas);
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    std::vector<unsigned char> out(nt);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::reversed_step(spec.p));
      detail::maybe_dump_paths(ens, spec, r, ti);
      ens.evolve(t);
      out[ti] = ens.member(0).running_min(0) < -std::pow(t, 0.25) ? 1 : 0;
    }
    slot[r] = std::move(out);
  });

  std::vector<ReportRow> rows;
  for (int ti = 0; ti < nt; ++ti) {
    long long k = 0;
    for (int r = 0; r < spec.replicas; ++r) k += slot[r][ti];
    ReportRow info;
    info.kind = "blocking_tail";
    info.t = spec.t_grid[ti];
    info.estimate = static_cast<double>(k) / spec.replicas;
    info.reference = 0.0;
    rows.push_back(finish_row(info));

    ReportRow ub;
    ub.kind = "blocking_tail_ub";
    ub.t = spec.t_grid[ti];
    ub.estimate = binom_ci(k, spec.replicas, spec.tail_alpha).hi;
    ub.reference = 0.0;
    if (ti == nt - 1) ub.band = kBlockingBound;
    rows.push_back(finish_row(ub));
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// independence: coupled (block A, block B); the joint law of the recentred
// x_M^A(t - t^nu) and x_M^B(t) factorizes in the limit.
inline std::vector<ReportRow> run_independence(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());
  const int nm = static_cast<int>(spec.m_list.size());
  const double drift = 2.0 * spec.p - 1.0;

  std::vector<std::vector<std::pair<int, int>>> slot(spec.replicas);  // (x_A early, x_B late)
  parallel_replicas(spec.replicas, spec.workers, [&](int r) {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(nt) * nm);
    for (int ti = 0; ti < nt; ++ti) {
      const double t = spec.t_grid[ti];
      const double tnu = std::pow(t, spec.nu);
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::block_a(spec.p, t));
      ens.add_member(InitialKind::block_b(spec.p, t));
      ens.evolve(t - tnu);
      std::vector<int> early(nm);
      for (int mi = 0; mi < nm; ++mi)
        early[mi] = ens.member(0).particle_position(spec.m_list[mi]);
      ens.evolve(t);
      for (int mi = 0; mi < nm; ++mi)
        out.emplace_back(early[mi], ens.member(1).particle_position(spec.m_list[mi]));
    }
    slot[r] = std::move(out);
  });

  detail::RefCache ref(spec.p, spec.numerics);
  const double dkw = dkw_band(spec.replicas, kDkwAlpha);
  std::vector<ReportRow> rows;
  for (int ti = 0; ti < nt; ++ti) {
    const double t = spec.t_grid[ti];
    const double tnu = std::pow(t, spec.nu);
    const bool last = ti == nt - 1;
    for (int mi = 0; mi < nm; ++mi) {
      const int M = spec.m_list[mi];
      for (int R : spec.r_for(M)) {
        for (double C : spec.c_list) {
          const int thr_a = threshold_ceil(-R - drift * (tnu + C * std::sqrt(t)));
          long long ka = 0, kb = 0, kj = 0;
          for (int r = 0; r < spec.replicas; ++r) {
            const auto [xa, xb] = slot[r][ti * nm + mi];
            const bool a = xa >= thr_a;
            const bool b = xb >= -R;
            ka += a;
            kb += b;
            kj += a && b;
          }
          const double ea = static_cast<double>(ka) / spec.replicas;
          const double eb = static_cast<double>(kb) / spec.replicas;
          const double ej = static_cast<double>(kj) / spec.replicas;
          const double flaw = R >= M ? ref.reported(M, C)
                                     : ref.reported(M, C) * ref.reported(M - R, 0.0);

          ReportRow joint;
          joint.kind = "indep_ref";
          joint.M = M;
          joint.R = R;
          joint.t = t;
          joint.s = C;
          joint.estimate = ej;
          joint.reference = flaw;
          if (last) joint.band = 2.0 * dkw + kModelAllowance;
          rows.push_back(finish_row(joint));

          ReportRow gap;
          gap.kind = "indep_gap";
          gap.M = M;
          gap.R = R;
          gap.t = t;
          gap.s = C;
          gap.estimate = ej;
          gap.reference = ea * eb;
          if (last) gap.band = 2.0 * dkw;
          rows.push_back(finish_row(gap));

          ReportRow ma;
          ma.kind = "indep_marg_a";
          ma.M = M;
          ma.R = R;
          ma.t = t;
          ma.s = C;
          ma.estimate = ea;
          ma.reference = ref.reported(M, C);
          rows.push_back(finish_row(ma));

          ReportRow mb;
          mb.kind = "indep_marg_b";
          mb.M = M;
          mb.R = R;
          mb.t = t;
          mb.s = C;
          mb.estimate = eb;
          mb.reference = R >= M ? 1.0 : ref.reported(M - R, 0.0);
          rows.push_back(finish_row(mb));
        }
      }
    }
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// density_profile: replica-averaged occupancy per bin around the shock,
// positions rescaled by t, against the two rarefaction-fan branches.
inline double shock_density_profile(double xi, double p) {
  const double v = 2.0 * (2.0 * p - 1.0);  // each fan spans 2(p-q) in xi
  if (xi <= -v) return 1.0;
  if (xi < 0.0) return -xi / v;
  if (xi < v) return 1.0 - xi / v;
  return 0.0;
}

inline std::vector<ReportRow> run_density_profile(const ExperimentSpec& spec) {
  spec.validate();
  detail::Stopwatch watch;
  const int nt = static_cast<int>(spec.t_grid.size());
  const double drift = 2.0 * spec.p - 1.0;

  std::vector<ReportRow> rows;
  for (int ti = 0; ti < nt; ++ti) {
    const double t = spec.t_grid[ti];
    const int span = static_cast<int>(2.0 * drift * t + 4.0 * std::sqrt(t)) + spec.bin_width;
    const int nbins = (2 * span) / spec.bin_width + 1;
    std::vector<std::vector<long long>> slot(spec.replicas);
    parallel_replicas(spec.replicas, spec.workers, [&](int r) {
      CoupledEnsemble ens(derive_seed(spec.seed, r) ^ static_cast<std::uint64_t>(ti), spec.p,
                          spec.pad);
      ens.add_member(InitialKind::shock_ic(spec.p, t));
      ens.evolve(t);
      std::vector<long long> counts(nbins, 0);
      for (int b = 0; b < nbins; ++b) {
        const int lo = -span + b * spec.bin_width;
        counts[b] = ens.member(0).occupied_in(lo, lo + spec.bin_width - 1);
      }
      slot[r] = std::move(counts);
    });
    for (int b = 0; b < nbins; ++b) {
      double mean = 0.0;
      for (int r = 0; r < spec.replicas; ++r) mean += static_cast<double>(slot[r][b]);
      mean /= static_cast<double>(spec.replicas) * spec.bin_width;
      const double center = -span + b * spec.bin_width + 0.5 * (spec.bin_width - 1);
      ReportRow row;
      row.kind = "density";
      row.t = t;
      row.s = center / t;
      row.estimate = mean;
      row.reference = shock_density_profile(center / t, spec.p);
      rows.push_back(finish_row(row));
    }
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

// ---------------------------------------------------------------------------
// dist_table: tabulate the limit laws over the s grid, write one CSV per M,
// and report the table diagnostics.
inline std::vector<ReportRow> run_dist_table(const ExperimentSpec& spec,
                                             std::vector<DistributionTable>* tables_out = nullptr) {
  spec.validate();
  detail::Stopwatch watch;
  if (spec.s_grid.size() < 2) throw UsageError("field 's_grid': need at least two points");

  std::vector<ReportRow> rows;
  for (int M : spec.m_list) {
    auto table = DistributionTable::build(M, spec.p, spec.s_grid, spec.numerics);

    ReportRow mono;
    mono.kind = "dist_table_monotone";
    mono.M = M;
    mono.estimate = table.max_monotonicity_violation;
    mono.reference = 0.0;
    mono.band = kTableTol;
    rows.push_back(finish_row(mono));

    ReportRow bounds;
    bounds.kind = "dist_table_bounds";
    bounds.M = M;
    bounds.estimate = table.max_bound_excess;
    bounds.reference = 0.0;
    bounds.band = kTableTol;
    rows.push_back(finish_row(bounds));

    if (!spec.out_path.empty()) {
      const std::string path = spec.out_path + "_M" + std::to_string(M) + ".csv";
      std::ofstream os(path);
      if (!os) throw UsageError("cannot write table file '" + path + "'");
      table.write_csv(os);
    }
    if (tables_out) tables_out->push_back(std::move(table));
  }
  detail::stamp(rows, spec, watch.ms());
  return rows;
}

inline std::vector<ReportRow> run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::StepLaw:
      return run_step_law(spec);
    case ExperimentKind::Cutoff:
      return run_cutoff(spec);
    case ExperimentKind::Product:
      return run_product(spec);
    case ExperimentKind::CouplingSlack:
      return run_coupling_slack(spec);
    case ExperimentKind::Duality:
      return run_duality(spec);
    case ExperimentKind::SlowDecorrelation:
      return run_slow_decorrelation(spec);
    case ExperimentKind::BlockingTail:
      return run_blocking_tail(spec);
    case ExperimentKind::Independence:
      return run_independence(spec);
    case ExperimentKind::DensityProfile:
      return run_density_profile(spec);
    case ExperimentKind::DistTable:
      return run_dist_table(spec);
  }
  throw UsageError("unknown experiment kind");
}

// Builds a spec from parsed config keys; unknown keys are usage errors.
inline ExperimentSpec spec_from_config(const std::map<std::string, std::string>& kv) {
  ExperimentSpec spec;
  for (const auto& [key, value] : kv) {
    if (key == "kind") {
      spec.kind = experiment_kind_from(value);
    } else if (key == "p") {
      spec.p = config_double(key, value);
    } else if (key == "m") {
      spec.m_list = config_int_list(key, value);
    } else if (key == "r") {
      spec.r_list = config_int_list(key, value);
    } else if (key == "t_grid") {
      spec.t_grid = config_double_list(key, value);
    } else if (key == "replicas") {
      spec.replicas = static_cast<int>(config_int(key, value));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(config_int(key, value));
    } else if (key == "workers") {
      spec.workers = static_cast<int>(config_int(key, value));
    } else if (key == "nu") {
      spec.nu = config_double(key, value);
    } else if (key == "c") {
      spec.c_list = config_double_list(key, value);
    } else if (key == "eps") {
      spec.eps = config_double(key, value);
    } else if (key == "s_grid") {
      spec.s_grid = config_double_list(key, value);
    } else if (key == "pad") {
      spec.pad = static_cast<int>(config_int(key, value));
    } else if (key == "bin_width") {
      spec.bin_width = static_cast<int>(config_int(key, value));
    } else if (key == "tail_alpha") {
      spec.tail_alpha = config_double(key, value);
    } else if (key == "out") {
      spec.out_path = value;
    } else if (key == "dump_paths") {
      spec.dump_paths = value;
    } else if (key == "zero_walltime") {
      spec.zero_walltime = config_bool(key, value);
    } else if (key == "numerics.m") {
      spec.numerics.m = static_cast<int>(config_int(key, value));
    } else if (key == "numerics.L") {
      spec.numerics.L = config_double(key, value);
    } else if (key == "numerics.n_lambda") {
      spec.numerics.n_lambda = static_cast<int>(config_int(key, value));
    } else if (key == "numerics.radius_scale") {
      spec.numerics.radius_scale = config_double(key, value);
    } else if (key == "numerics.refine") {
      spec.numerics.refine = config_bool(key, value);
    } else if (key == "numerics.refine_tol") {
      spec.numerics.refine_tol = config_double(key, value);
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  return spec;
}

inline ExperimentSpec parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file '" + path + "'");
  return spec_from_config(parse_config_stream(is, path));
}

}  // namespace shocklab
