#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hlob/limit.hpp"
#include "hlob/micro.hpp"
#include "hlob/model.hpp"

namespace hlob {

/// Exact one-dimensional Wasserstein-1 distance between two empirical
/// distributions, the integral of |F_a - F_b|.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Runs f(i) for i in [0, n) on up to `threads` workers. Each index is handled
/// by exactly one worker, so results written by index do not depend on the
/// worker count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& f);

struct ExperimentPlan {
  int max_level = 3;
  std::size_t replicates = 400;
  std::size_t limit_replicates = 2000;
  double horizon = 1.0;
  double delta_x0 = 0.1;
  double delta_v0 = 0.05;
  double half_width = 1.0;  // spatial window for both the book and the limit grid
  int grid_nodes = 101;
  double limit_dt = 1e-3;
  double ask0 = 1.2;
  double bid0 = 1.0;
  ProfileFn ask_init{1.0, {}};
  ProfileFn bid_init{1.0, {}};
  std::vector<SpatialProfile> tests;  // paired with the ask side
  double tolerance_factor = 2.0;
  std::size_t bootstrap = 200;
  unsigned threads = 1;

  /// Throws std::invalid_argument when replicates < 100 or max_level < 2.
  void validate() const;
};

/// Terminal quantities of one micro or limit replicate at each checkpoint.
struct ReplicateSample {
  std::vector<double> pa;              // per checkpoint
  std::vector<std::vector<double>> vf;  // [checkpoint][test]
  double J = 1.0;
  double sup_d_norm = 0.0;
};

struct StatisticSeries {
  std::string name;
  double t = 0.0;
  double limit_value = 0.0;
  std::vector<double> micro_value;  // per level
  std::vector<double> error;        // per level
  std::vector<double> se;           // per level
  bool pass = true;
};

struct LevelRuns {
  int level = 0;
  std::vector<double> J;
  std::vector<double> sup_d_norm;
};

struct ConvergenceReport {
  std::vector<double> checkpoints;
  std::vector<StatisticSeries> series;
  std::vector<LevelRuns> levels;
  std::vector<double> decay_slopes;  // log2 error ratio from the first to the last level, per series
  bool pass = true;
};

/// Error sequences pass when e_{k+1} - e_k <= factor * sqrt(se_k^2 + se_{k+1}^2) for every k.
bool nonincreasing_within_se(const std::vector<double>& error, const std::vector<double>& se, double factor);

std::vector<ReplicateSample> run_micro_ensemble(const MicroParams& params, const ExperimentPlan& plan,
                                                 const std::vector<double>& checkpoints, std::uint64_t seed);
std::vector<ReplicateSample> run_limit_ensemble(const LimitModel& model, const ExperimentPlan& plan,
                                                 const std::vector<double>& checkpoints, std::uint64_t seed);

/// Micro levels 0..max_level against a limit ensemble; statistics at T/2 and T.
/// Micro replicates use seed + 1 + level, the limit ensemble uses seed.
ConvergenceReport run_convergence(const ExperimentPlan& plan, const LimitModel& model, std::uint64_t seed);

struct MomentRow {
  int level = 0;
  double p = 1.0;  // p = 0 marks the sup intensity norm row
  double mean = 0.0;
  double se = 0.0;
};

struct MomentTable {
  std::vector<MomentRow> rows;
  std::vector<std::string> flags;  // level-over-level growth above 2x
  bool bounded = true;
};

/// E[J(T)^p] for p in {1, 2, 4} and E[sup ||D||] per level.
MomentTable moment_diagnostics(const std::vector<LevelRuns>& runs);

/// A smooth functional G of (p_a, p_b, <V_a, f>, <V_b, f>) with its generator
/// evaluated from a limit record.
struct TestFunctional {
  std::string name;
  std::function<double(const LimitRecord&)> G;
  std::function<double(const LimitRecord&)> AG;

  static TestFunctional constant(double c);
  static TestFunctional ask_price();
  static TestFunctional ask_price_squared();
  /// p_a * <V_a, f_k>.
  static TestFunctional ask_price_times_volume(std::size_t k);
};

struct CheckpointResidual {
  double t = 0.0;
  double mean = 0.0;
  double se = 0.0;
  bool pass = true;
};

struct MartingaleReport {
  std::string name;
  std::vector<CheckpointResidual> checkpoints;
  bool pass = true;
};

/// M(t) = G(S(t)) - G(S(0)) - int_0^t A G ds by trapezoid over the records,
/// averaged over the paths. Paths must be recorded at every step.
MartingaleReport martingale_residual(const std::vector<LimitPath>& paths, const TestFunctional& g,
                                     const std::vector<double>& checkpoints);

}  // namespace hlob
