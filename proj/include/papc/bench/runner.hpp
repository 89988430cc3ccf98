#pragma once

#include "papc/bench/config.hpp"
#include "papc/bench/zoo.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace papc::bench {

/// Schedules from the config: gamma_n = limit + (gamma0 - limit)/(n+1)^decay with
/// gamma0 = gamma_scale * beta by default; tau rises from tau0 to the cap
/// tau_scale / lambda_max(U^{1/2} L P L* U^{1/2}) (blockwise maximum for composites).
Schedules<double> make_schedules(const ZooInstance& inst, const ScheduleConfig& cfg);

/// Variance schedule of a Gaussian noise model.
VarianceSchedule<double> make_variance(const NoiseConfig& noise, Regime regime);

/// Batch size b_n of a minibatch model: "constant:b" or "grow:b0:rate".
std::function<Index(Index)> make_batch_schedule(const std::string& spec, Index components);

/// Gradient oracle of the base h under the configured noise model.
StochasticOracle<double> make_oracle(const ZooInstance& inst, const NoiseConfig& noise, Regime regime,
                                     std::uint64_t seed);

/// Step-size hypotheses plus, for noisy runs, the summability condition of the regime.
HypothesisCertificate<double> validate_experiment(const ZooInstance& inst, const ExperimentConfig& cfg,
                                                  const Schedules<double>& sched);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<std::string> failure;
  Index steps = 0;
  double dist_x = 0;
  double dist_v = 0;
  KktResidual<double> kkt;
  /// asserted only for deterministic runs under a passing certificate
  std::optional<bool> fejer_monotone;
  double fejer_worst_excess = -std::numeric_limits<double>::infinity();
  double grad_gap_total = 0;
  double grad_gap_last_decile = 0;
  double noise_energy = 0;
  std::vector<GapRow<double>> gaps;
  /// every finite gap row at or below its bound
  bool gap_within_bound = true;
  double wall_seconds = 0;

  bool ok() const { return !failure.has_value(); }
};

struct SeedContext {
  const ZooInstance* instance;
  const ExperimentConfig* config;
  const Schedules<double>* schedules;
  const HypothesisCertificate<double>* certificate;
  std::vector<Index> checkpoints;
};

/// One seed; trace rows go to `trace` when given.
SeedOutcome run_seed(const SeedContext& ctx, std::uint64_t seed, std::ostream* trace);

/// Seed-averaged gap table with the trailing-decade slope of the mean gap.
struct GapTableRow {
  AveragedGapRow<double> row;
  double sum_gamma = 0;
  double slope_window = 0;
};

std::vector<GapTableRow> gap_table(const std::vector<SeedOutcome>& outcomes);

struct RunSettings {
  int jobs = 1;
  bool force = false;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::filesystem::path> out;
};

struct ExperimentResult {
  /// 0 success, 1 some seed failed, 2 rejected before running
  int exit_code = 0;
  std::filesystem::path directory;
  std::vector<SeedOutcome> outcomes;
  std::vector<GapTableRow> gaps;
  std::optional<double> gap_slope;
  std::string message;
};

inline constexpr const char* kTraceHeader =
    "n,gamma_n,tau_n,primal_res,dual_res,fejer_phi,dist_x_oracle,dist_v_oracle,grad_gap_partial_sum";

/// Writes config.ini, trace_seed<S>.csv per seed, gap.csv, summary.json and
/// timing.json under the output directory. Only timing.json depends on wall time.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunSettings& settings);

}  // namespace papc::bench
