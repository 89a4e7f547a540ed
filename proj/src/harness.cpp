#include "hlob/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "hlob/rng.hpp"
#include "hlob/stats.hpp"

namespace hlob {

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double x = std::min(a[0], b[0]);
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    double next;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      next = a[i];
    } else {
      next = b[j];
    }
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return total;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& f) {
  const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void ExperimentPlan::validate() const {
  if (replicates < 100) throw std::invalid_argument("ExperimentPlan: at least 100 replicates per level are required");
  if (limit_replicates < 100) throw std::invalid_argument("ExperimentPlan: at least 100 limit replicates are required");
  if (max_level < 2) throw std::invalid_argument("ExperimentPlan: at least three levels (max_level >= 2) are required");
  if (!(horizon > 0.0) || !(limit_dt > 0.0)) throw std::invalid_argument("ExperimentPlan: horizon and dt must be positive");
  if (!(delta_v0 <= delta_x0)) throw std::invalid_argument("ExperimentPlan: delta_v0 must not exceed delta_x0");
  if (bootstrap < 10) throw std::invalid_argument("ExperimentPlan: bootstrap needs at least 10 resamples");
}

bool nonincreasing_within_se(const std::vector<double>& error, const std::vector<double>& se, double factor) {
  for (std::size_t k = 0; k + 1 < error.size(); ++k)
    if (error[k + 1] - error[k] > factor * std::hypot(se[k], se[k + 1]) + 1e-12) return false;
  return true;
}

std::vector<ReplicateSample> run_micro_ensemble(const MicroParams& params, const ExperimentPlan& plan,
                                                 const std::vector<double>& checkpoints, std::uint64_t seed) {
  const BookState init = make_initial_book(params, plan.ask0, plan.bid0, plan.ask_init, plan.bid_init);
  MicroOptions opts;
  opts.sample_times = checkpoints;
  opts.record_path = false;
  opts.record_events = false;
  const double L = plan.half_width;
  std::vector<ReplicateSample> out(plan.replicates);
  parallel_for(plan.replicates, plan.threads, [&](std::size_t r) {
    const auto run = simulate_book(params, init, plan.horizon, seed, r, opts);
    ReplicateSample s;
    for (const auto& snap : run.snapshots) {
      s.pa.push_back(static_cast<double>(snap.ask) * params.delta_x);
      std::vector<double> vf;
      for (const auto& f : plan.tests) vf.push_back(snap.ask_profile.pair(f, -L, L));
      s.vf.push_back(std::move(vf));
    }
    s.J = run.J_final;
    s.sup_d_norm = run.sup_d_norm;
    out[r] = std::move(s);
  });
  return out;
}

std::vector<ReplicateSample> run_limit_ensemble(const LimitModel& model, const ExperimentPlan& plan,
                                                 const std::vector<double>& checkpoints, std::uint64_t seed) {
  const SpatialGrid grid(plan.half_width, plan.grid_nodes);
  const LimitState init = make_limit_state(grid, plan.ask0, plan.bid0, plan.ask_init, plan.bid_init);
  std::vector<std::size_t> idx;
  std::size_t cadence = 0;
  for (double c : checkpoints) {
    idx.push_back(static_cast<std::size_t>(std::llround(c / plan.limit_dt)));
    cadence = std::gcd(cadence, idx.back());
  }
  LimitOptions opts;
  opts.dt = plan.limit_dt;
  opts.horizon = plan.horizon;
  opts.cadence = std::max<std::size_t>(cadence, 1);
  opts.tests.ask = plan.tests;
  std::vector<ReplicateSample> out(plan.limit_replicates);
  parallel_for(plan.limit_replicates, plan.threads, [&](std::size_t r) {
    const auto path = solve_path(model, grid, init, opts, seed, r);
    ReplicateSample s;
    for (std::size_t m : idx) {
      const auto it = std::find_if(path.records.begin(), path.records.end(),
                                   [m](const LimitRecord& rec) { return rec.step == m; });
      if (it == path.records.end()) throw std::logic_error("run_limit_ensemble: checkpoint not recorded");
      s.pa.push_back(it->pa);
      s.vf.push_back(it->vf_a);
    }
    out[r] = std::move(s);
  });
  return out;
}

namespace {

std::vector<double> column(const std::vector<ReplicateSample>& s, std::size_t c, int test) {
  std::vector<double> v;
  v.reserve(s.size());
  for (const auto& r : s) v.push_back(test < 0 ? r.pa[c] : r.vf[c][static_cast<std::size_t>(test)]);
  return v;
}

double bootstrap_w1_se(const std::vector<double>& a, const std::vector<double>& b, std::size_t resamples, Rng& rng) {
  std::vector<double> w;
  std::vector<double> ra(a.size()), rb(b.size());
  for (std::size_t k = 0; k < resamples; ++k) {
    for (auto& x : ra) x = a[static_cast<std::size_t>(rng.uniform() * static_cast<double>(a.size()))];
    for (auto& x : rb) x = b[static_cast<std::size_t>(rng.uniform() * static_cast<double>(b.size()))];
    w.push_back(wasserstein1(ra, rb));
  }
  return std::sqrt(stats::summarize(w).variance);
}

}  // namespace

ConvergenceReport run_convergence(const ExperimentPlan& plan, const LimitModel& model, std::uint64_t seed) {
  plan.validate();
  model.validate();
  ConvergenceReport rep;
  rep.checkpoints = {0.5 * plan.horizon, plan.horizon};
  const auto limit = run_limit_ensemble(model, plan, rep.checkpoints, seed);
  const int n_tests = static_cast<int>(plan.tests.size());

  // series layout per checkpoint: mean, variance, w1, then one per test function
  const std::size_t per_cp = 3 + plan.tests.size();
  for (double t : rep.checkpoints) {
    for (std::size_t k = 0; k < per_cp; ++k) {
      StatisticSeries s;
      s.t = t;
      if (k == 0) s.name = "mean_pa";
      if (k == 1) s.name = "var_pa";
      if (k == 2) s.name = "w1_pa";
      if (k >= 3) s.name = "mean_vf" + std::to_string(k - 3);
      rep.series.push_back(s);
    }
  }
  for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
    const auto lp = stats::summarize(column(limit, c, -1));
    rep.series[c * per_cp + 0].limit_value = lp.mean;
    rep.series[c * per_cp + 1].limit_value = lp.variance;
    for (int j = 0; j < n_tests; ++j)
      rep.series[c * per_cp + 3 + static_cast<std::size_t>(j)].limit_value = stats::summarize(column(limit, c, j)).mean;
  }

  for (int level = 0; level <= plan.max_level; ++level) {
    const auto params = build_micro(model, plan.delta_x0, plan.delta_v0, level, plan.half_width);
    const auto micro = run_micro_ensemble(params, plan, rep.checkpoints, seed + 1 + static_cast<std::uint64_t>(level));
    LevelRuns lr;
    lr.level = level;
    for (const auto& s : micro) {
      lr.J.push_back(s.J);
      lr.sup_d_norm.push_back(s.sup_d_norm);
    }
    rep.levels.push_back(std::move(lr));
    Rng boot(seed, static_cast<std::uint64_t>(level), StreamRole::Bootstrap);
    for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
      const auto mp = column(micro, c, -1);
      const auto lpv = column(limit, c, -1);
      const auto ms = stats::summarize(mp), ls = stats::summarize(lpv);
      auto push = [&](std::size_t k, double value, double err, double se) {
        auto& s = rep.series[c * per_cp + k];
        s.micro_value.push_back(value);
        s.error.push_back(err);
        s.se.push_back(se);
      };
      push(0, ms.mean, std::abs(ms.mean - ls.mean), std::hypot(ms.se, ls.se));
      push(1, ms.variance, std::abs(ms.variance - ls.variance), std::hypot(ms.variance_se, ls.variance_se));
      push(2, 0.0, wasserstein1(mp, lpv), bootstrap_w1_se(mp, lpv, plan.bootstrap, boot));
      for (int j = 0; j < n_tests; ++j) {
        const auto mv = stats::summarize(column(micro, c, j));
        const auto lv = stats::summarize(column(limit, c, j));
        push(3 + static_cast<std::size_t>(j), mv.mean, std::abs(mv.mean - lv.mean), std::hypot(mv.se, lv.se));
      }
    }
  }
  for (auto& s : rep.series) {
    s.pass = nonincreasing_within_se(s.error, s.se, plan.tolerance_factor);
    rep.pass = rep.pass && s.pass;
    const double first = s.error.front(), last = s.error.back();
    rep.decay_slopes.push_back(first > 0.0 && last > 0.0 ? std::log2(first / last) / plan.max_level : 0.0);
  }
  return rep;
}

MomentTable moment_diagnostics(const std::vector<LevelRuns>& runs) {
  MomentTable t;
  const std::array<double, 4> powers{1.0, 2.0, 4.0, 0.0};
  for (double p : powers) {
    double prev = 0.0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      std::vector<double> v;
      for (std::size_t i = 0; i < runs[k].J.size(); ++i)
        v.push_back(p == 0.0 ? runs[k].sup_d_norm[i] : std::pow(runs[k].J[i], p));
      const auto s = stats::summarize(v);
      t.rows.push_back({runs[k].level, p, s.mean, s.se});
      if (k > 0 && s.mean > 2.0 * prev) {
        t.bounded = false;
        t.flags.push_back((p == 0.0 ? std::string("sup_d_norm") : "J^" + std::to_string(static_cast<int>(p))) +
                          " grows more than 2x at level " + std::to_string(runs[k].level));
      }
      prev = s.mean;
    }
  }
  return t;
}

TestFunctional TestFunctional::constant(double c) {
  return {"constant", [c](const LimitRecord&) { return c; }, [](const LimitRecord&) { return 0.0; }};
}

TestFunctional TestFunctional::ask_price() {
  return {"pa", [](const LimitRecord& r) { return r.pa; }, [](const LimitRecord& r) { return r.h[0]; }};
}

TestFunctional TestFunctional::ask_price_squared() {
  return {"pa^2", [](const LimitRecord& r) { return r.pa * r.pa; },
          [](const LimitRecord& r) { return 2.0 * r.pa * r.h[0] + 2.0 * r.sigma[0]; }};
}

TestFunctional TestFunctional::ask_price_times_volume(std::size_t k) {
  return {"pa*vf" + std::to_string(k), [k](const LimitRecord& r) { return r.pa * r.vf_a.at(k); },
          [k](const LimitRecord& r) { return r.vf_a.at(k) * r.h[0] + r.pa * r.eta_a.at(k); }};
}

MartingaleReport martingale_residual(const std::vector<LimitPath>& paths, const TestFunctional& g,
                                     const std::vector<double>& checkpoints) {
  if (paths.empty()) throw std::invalid_argument("martingale_residual: no paths");
  MartingaleReport rep;
  rep.name = g.name;
  std::vector<std::vector<double>> m(checkpoints.size());
  for (const auto& path : paths) {
    const auto& rec = path.records;
    if (rec.size() < 2) throw std::invalid_argument("martingale_residual: path too short");
    for (std::size_t i = 0; i < rec.size(); ++i)
      if (rec[i].step != i) throw std::invalid_argument("martingale_residual: paths must be recorded at every step");
    const double dt = rec[1].t - rec[0].t;
    std::vector<std::size_t> idx;
    for (double c : checkpoints) {
      const auto i = static_cast<std::size_t>(std::llround(c / dt));
      if (i >= rec.size()) throw std::invalid_argument("martingale_residual: checkpoint beyond the path");
      idx.push_back(i);
    }
    const double g0 = g.G(rec[0]);
    double integral = 0.0;
    double prev = g.AG(rec[0]);
    std::size_t next = 0;
    for (std::size_t i = 0; i < rec.size() && next < idx.size(); ++i) {
      if (i > 0) {
        const double cur = g.AG(rec[i]);
        integral += 0.5 * dt * (prev + cur);
        prev = cur;
      }
      while (next < idx.size() && idx[next] == i) {
        m[next].push_back(g.G(rec[i]) - g0 - integral);
        ++next;
      }
    }
  }
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const auto s = stats::summarize(m[c]);
    CheckpointResidual r{checkpoints[c], s.mean, s.se, std::abs(s.mean) <= 3.0 * s.se + 1e-12};
    rep.pass = rep.pass && r.pass;
    rep.checkpoints.push_back(r);
  }
  return rep;
}

}  // namespace hlob
