#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stabilab/dataset.hpp"
#include "stabilab/learners.hpp"
#include "stabilab/losses.hpp"
#include "stabilab/rng.hpp"

namespace stabilab {

enum class Aggregate { Max, Mean };

/// Purpose tags fed to derive_task_seed as the index coordinate (actual
/// removal indices are >= 0). Part of the determinism contract: given the
/// master seed, every bootstrap draw and fit of the measurement grid can
/// be reproduced externally.
inline constexpr std::int64_t kBootstrapSeedTag = -1;
inline constexpr std::int64_t kBaseFitSeedTag = -2;
inline constexpr std::int64_t kOosSplitSeedTag = -3;

/// Bootstrap stability measurement setup. The defaults are the reference
/// experiment configuration: 30 bootstrap replicates, 10 trials, the ALL
/// evaluation set, classification loss, max over removal indices.
struct StabilityConfig {
  int B = 30;
  int trials = 10;
  EvalStrategy strategy;
  LossKind loss = LossKind::classification();
  std::uint64_t seed = 0;
  Aggregate aggregate_over_i = Aggregate::Max;
};

/// Per-fit statistics averaged over the full bootstrap fits: leaf counts
/// for trees, the smallest Hessian eigenvalue at the fitted parameters
/// for logistic models (min across fits kept as a worst-case proxy).
struct EffectiveStats {
  std::optional<double> mean_leaf_count;
  std::optional<double> mean_depth;
  std::optional<double> mean_lambda_min;
  std::optional<double> min_lambda_min;
};

/// Hypothesis and pointwise-hypothesis stability estimates with the
/// per-trial and per-index detail behind them. Entries of per_trial_*
/// are NaN for trials with no usable bootstrap sample. per_index_* have
/// length m; with the OOS strategy the held-out indices never enter a
/// training set and report exactly 0.
struct StabilityReport {
  double beta_h_hat = 0.0;
  double beta_ph_hat = 0.0;
  std::vector<double> per_trial_h;
  std::vector<double> per_trial_ph;
  std::vector<double> per_index_h;
  std::vector<double> per_index_ph;
  Eigen::Index argmax_h = 0;
  Eigen::Index argmax_ph = 0;
  EffectiveStats effective;
  int skipped_samples = 0;  // degenerate bootstrap draws (one distinct row)
  std::vector<int> eval_sizes;  // m' per trial
  // OOS only: which original indices formed each trial's training pool
  std::vector<std::vector<Eigen::Index>> train_indices_per_trial;
  Eigen::Index m = 0;
  StabilityConfig config;
  LearnerConfig learner;
};

/// Bootstrap estimate of hypothesis stability: for every removal index i
/// and replicate D_b, retrain with all copies of example i removed from
/// D_b and average the absolute loss difference over the evaluation set,
/// then aggregate over i and average across trials. Both estimators run
/// on one retraining grid, so the returned report carries the pointwise
/// figures as well.
StabilityReport estimate_hypothesis_stability(const Dataset& d,
                                              const LearnerConfig& learner,
                                              const StabilityConfig& cfg);

/// Pointwise variant: the loss difference is taken at the removed example
/// itself instead of over an evaluation set.
StabilityReport estimate_pointwise_hypothesis_stability(
    const Dataset& d, const LearnerConfig& learner, const StabilityConfig& cfg);

/// Shared measurement pass behind both estimators. The (trial, b, i) grid
/// is embarrassingly parallel; every task derives its own seed via
/// derive_task_seed and the reduction folds in canonical order, so serial
/// and threaded runs produce bit-identical reports.
StabilityReport measure_stability(const Dataset& d,
                                  const LearnerConfig& learner,
                                  const StabilityConfig& cfg);

nlohmann::json stability_config_to_json(const StabilityConfig& cfg);
nlohmann::json stability_report_to_json(const StabilityReport& r,
                                        bool include_h = true,
                                        bool include_ph = true);

/// Two-line CSV (header plus one row): algorithm, parameter, both beta
/// estimates, and the effective model statistic.
std::string stability_summary_csv(const StabilityReport& r);

const char* aggregate_name(Aggregate a);

}  // namespace stabilab
