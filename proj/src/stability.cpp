#include "stabilab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "stabilab/linalg.hpp"
#include "stabilab/parallel.hpp"
#include "stabilab/text.hpp"

namespace stabilab {

namespace {

struct TrialSetup {
  Dataset pool;                          // what bootstrap samples draw from
  std::vector<Eigen::Index> pool_orig;   // original index per pool row
  Dataset eval;
  std::vector<BootstrapSample> samples;  // B entries
};

struct TaskResult {
  bool used = false;
  // per distinct original index, in ascending index order
  std::vector<std::pair<Eigen::Index, double>> hyp_sums;
  std::vector<std::pair<Eigen::Index, double>> ph_terms;
  std::optional<double> leaf_count;
  std::optional<double> depth;
  std::optional<double> lambda_min;
};

TrialSetup build_trial(const Dataset& d, const StabilityConfig& cfg,
                       std::int64_t t) {
  TrialSetup setup;
  if (cfg.strategy.kind == EvalKind::Oos) {
    OosSplit split =
        oos_split(d, cfg.strategy.oos_fraction,
                  derive_task_seed(cfg.seed, t, kOosSplitSeedTag, kOosSplitSeedTag));
    setup.pool = std::move(split.train);
    setup.pool_orig = std::move(split.train_indices);
    setup.eval = std::move(split.eval);
  } else {
    setup.pool = d;
    setup.pool_orig.resize(static_cast<std::size_t>(d.size()));
    std::iota(setup.pool_orig.begin(), setup.pool_orig.end(), Eigen::Index{0});
  }

  setup.samples.reserve(static_cast<std::size_t>(cfg.B));
  for (std::int64_t b = 0; b < cfg.B; ++b) {
    setup.samples.push_back(bootstrap_sample(
        setup.pool, derive_task_seed(cfg.seed, t, b, kBootstrapSeedTag)));
  }

  if (cfg.strategy.kind == EvalKind::All) {
    setup.eval = d;
  } else if (cfg.strategy.kind == EvalKind::Oob) {
    setup.eval = build_eval_set(d, setup.samples, cfg.strategy, cfg.seed);
  }
  return setup;
}

TaskResult run_task(const Dataset& d, const LearnerConfig& learner,
                    const StabilityConfig& cfg, const TrialSetup& setup,
                    std::int64_t t, std::int64_t b) {
  const BootstrapSample& sample = setup.samples[static_cast<std::size_t>(b)];

  std::vector<Eigen::Index> distinct;
  distinct.reserve(sample.source_indices.size());
  for (const Eigen::Index pos : sample.source_indices) {
    distinct.push_back(setup.pool_orig[static_cast<std::size_t>(pos)]);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());

  TaskResult result;
  if (distinct.size() < 2) return result;  // degenerate sample, skipped
  result.used = true;

  const TrainedModel base =
      train(sample.data, learner, derive_task_seed(cfg.seed, t, b, kBaseFitSeedTag));

  const Eigen::Index m_eval = setup.eval.size();
  std::vector<double> base_eval(static_cast<std::size_t>(m_eval));
  for (Eigen::Index e = 0; e < m_eval; ++e) {
    base_eval[static_cast<std::size_t>(e)] =
        loss_at(base, setup.eval.feature_row(e).transpose(),
                setup.eval.label(e), cfg.loss);
  }

  if (const auto* tree = std::get_if<TreeModel>(&base)) {
    result.leaf_count = tree->leaf_count;
    result.depth = tree->depth;
  } else if (const auto* lr = std::get_if<LrModel>(&base)) {
    const auto& lr_cfg = std::get<LogisticRegressionConfig>(learner);
    result.lambda_min = smallest_eigenvalue(
        cross_entropy_hessian(sample.data, lr->theta, lr_cfg.lambda));
  }

  result.hyp_sums.reserve(distinct.size());
  result.ph_terms.reserve(distinct.size());
  for (const Eigen::Index orig_i : distinct) {
    std::vector<Eigen::Index> keep;
    keep.reserve(sample.source_indices.size());
    for (std::size_t j = 0; j < sample.source_indices.size(); ++j) {
      const Eigen::Index src = sample.source_indices[j];
      if (setup.pool_orig[static_cast<std::size_t>(src)] != orig_i) {
        keep.push_back(static_cast<Eigen::Index>(j));
      }
    }
    const Dataset reduced = select_examples(sample.data, keep);
    const TrainedModel retrained =
        train(reduced, learner, derive_task_seed(cfg.seed, t, b, orig_i));

    double hyp = 0.0;
    for (Eigen::Index e = 0; e < m_eval; ++e) {
      const double l2 =
          loss_at(retrained, setup.eval.feature_row(e).transpose(),
                  setup.eval.label(e), cfg.loss);
      hyp += std::abs(base_eval[static_cast<std::size_t>(e)] - l2);
    }
    result.hyp_sums.emplace_back(orig_i, hyp);

    const Eigen::VectorXd x_i = d.feature_row(orig_i).transpose();
    const int y_i = d.label(orig_i);
    const double ph = std::abs(loss_at(base, x_i, y_i, cfg.loss) -
                               loss_at(retrained, x_i, y_i, cfg.loss));
    result.ph_terms.emplace_back(orig_i, ph);
  }
  return result;
}

double aggregate_over(const std::vector<double>& per_index,
                      const std::vector<Eigen::Index>& removable,
                      Aggregate mode) {
  if (mode == Aggregate::Max) {
    double best = 0.0;
    for (const Eigen::Index i : removable) {
      best = std::max(best, per_index[static_cast<std::size_t>(i)]);
    }
    return best;
  }
  double sum = 0.0;
  for (const Eigen::Index i : removable) {
    sum += per_index[static_cast<std::size_t>(i)];
  }
  return sum / static_cast<double>(removable.size());
}

Eigen::Index argmax_index(const std::vector<double>& values) {
  Eigen::Index best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) {
      best = static_cast<Eigen::Index>(i);
    }
  }
  return best;
}

}  // namespace

StabilityReport measure_stability(const Dataset& d,
                                  const LearnerConfig& learner,
                                  const StabilityConfig& cfg) {
  if (d.size() < 2) {
    throw std::invalid_argument("stability: need at least two examples");
  }
  if (cfg.B < 1) throw std::invalid_argument("stability: B must be >= 1");
  if (cfg.trials < 1) {
    throw std::invalid_argument("stability: trials must be >= 1");
  }

  const Eigen::Index m = d.size();
  const auto trials = static_cast<std::size_t>(cfg.trials);
  const auto B = static_cast<std::size_t>(cfg.B);

  std::vector<TrialSetup> setups;
  setups.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    setups.push_back(build_trial(d, cfg, static_cast<std::int64_t>(t)));
  }

  // The (trial, b) grid is embarrassingly parallel; every task writes its
  // own slot, and the fold below runs in canonical order, so the result
  // does not depend on the execution schedule.
  std::vector<TaskResult> results(trials * B);
  parallel_for(trials * B, [&](std::size_t task) {
    const std::size_t t = task / B;
    const std::size_t b = task % B;
    results[task] =
        run_task(d, learner, cfg, setups[t], static_cast<std::int64_t>(t),
                 static_cast<std::int64_t>(b));
  });

  StabilityReport report;
  report.m = m;
  report.config = cfg;
  report.learner = learner;

  std::vector<Eigen::Index> all_indices(static_cast<std::size_t>(m));
  std::iota(all_indices.begin(), all_indices.end(), Eigen::Index{0});

  std::vector<double> index_sum_h(static_cast<std::size_t>(m), 0.0);
  std::vector<double> index_sum_ph(static_cast<std::size_t>(m), 0.0);
  std::vector<double> leaf_counts;
  std::vector<double> depths;
  std::vector<double> lambda_mins;
  int usable_trials = 0;
  double beta_h_sum = 0.0;
  double beta_ph_sum = 0.0;
  report.per_trial_h.assign(trials, std::numeric_limits<double>::quiet_NaN());
  report.per_trial_ph.assign(trials, std::numeric_limits<double>::quiet_NaN());
  report.eval_sizes.resize(trials);

  for (std::size_t t = 0; t < trials; ++t) {
    const Eigen::Index m_eval = setups[t].eval.size();
    report.eval_sizes[t] = static_cast<int>(m_eval);
    // the removal index only ranges over examples that can enter a
    // bootstrap sample: the OOS train part, or everything otherwise
    const std::vector<Eigen::Index>& removable =
        cfg.strategy.kind == EvalKind::Oos ? setups[t].pool_orig : all_indices;
    if (cfg.strategy.kind == EvalKind::Oos) {
      report.train_indices_per_trial.push_back(setups[t].pool_orig);
    }

    std::vector<double> val_h(static_cast<std::size_t>(m), 0.0);
    std::vector<double> val_ph(static_cast<std::size_t>(m), 0.0);
    int b_used = 0;
    for (std::size_t b = 0; b < B; ++b) {
      const TaskResult& r = results[t * B + b];
      if (!r.used) {
        ++report.skipped_samples;
        continue;
      }
      ++b_used;
      for (const auto& [i, s] : r.hyp_sums) {
        val_h[static_cast<std::size_t>(i)] += s;
      }
      for (const auto& [i, s] : r.ph_terms) {
        val_ph[static_cast<std::size_t>(i)] += s;
      }
      if (r.leaf_count) leaf_counts.push_back(*r.leaf_count);
      if (r.depth) depths.push_back(*r.depth);
      if (r.lambda_min) lambda_mins.push_back(*r.lambda_min);
    }
    if (b_used == 0) continue;  // trial unusable, noted via NaN

    const double h_norm =
        static_cast<double>(b_used) * static_cast<double>(m_eval);
    for (std::size_t i = 0; i < val_h.size(); ++i) {
      val_h[i] /= h_norm;
      val_ph[i] /= static_cast<double>(b_used);
    }

    const double beta_t_h = aggregate_over(val_h, removable, cfg.aggregate_over_i);
    const double beta_t_ph =
        aggregate_over(val_ph, removable, cfg.aggregate_over_i);
    report.per_trial_h[t] = beta_t_h;
    report.per_trial_ph[t] = beta_t_ph;
    beta_h_sum += beta_t_h;
    beta_ph_sum += beta_t_ph;
    for (std::size_t i = 0; i < val_h.size(); ++i) {
      index_sum_h[i] += val_h[i];
      index_sum_ph[i] += val_ph[i];
    }
    ++usable_trials;
  }

  if (usable_trials == 0) {
    throw std::runtime_error(
        "stability: every bootstrap sample was degenerate; no trial "
        "produced an estimate");
  }

  report.beta_h_hat = beta_h_sum / usable_trials;
  report.beta_ph_hat = beta_ph_sum / usable_trials;
  report.per_index_h.resize(static_cast<std::size_t>(m));
  report.per_index_ph.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
    report.per_index_h[i] = index_sum_h[i] / usable_trials;
    report.per_index_ph[i] = index_sum_ph[i] / usable_trials;
  }
  report.argmax_h = argmax_index(report.per_index_h);
  report.argmax_ph = argmax_index(report.per_index_ph);

  auto mean_of = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  };
  report.effective.mean_leaf_count = mean_of(leaf_counts);
  report.effective.mean_depth = mean_of(depths);
  report.effective.mean_lambda_min = mean_of(lambda_mins);
  if (!lambda_mins.empty()) {
    report.effective.min_lambda_min =
        *std::min_element(lambda_mins.begin(), lambda_mins.end());
  }
  return report;
}

StabilityReport estimate_hypothesis_stability(const Dataset& d,
                                              const LearnerConfig& learner,
                                              const StabilityConfig& cfg) {
  return measure_stability(d, learner, cfg);
}

StabilityReport estimate_pointwise_hypothesis_stability(
    const Dataset& d, const LearnerConfig& learner,
    const StabilityConfig& cfg) {
  return measure_stability(d, learner, cfg);
}

const char* aggregate_name(Aggregate a) {
  return a == Aggregate::Max ? "max" : "mean";
}

nlohmann::json stability_config_to_json(const StabilityConfig& cfg) {
  return {{"B", cfg.B},
          {"trials", cfg.trials},
          {"strategy", eval_kind_name(cfg.strategy.kind)},
          {"oos_fraction", cfg.strategy.oos_fraction},
          {"loss",
           {{"type", cfg.loss.name()},
            {"gamma", cfg.loss.gamma},
            {"tau", cfg.loss.tau}}},
          {"seed", cfg.seed},
          {"aggregate_over_i", aggregate_name(cfg.aggregate_over_i)}};
}

nlohmann::json stability_report_to_json(const StabilityReport& r,
                                        bool include_h, bool include_ph) {
  nlohmann::json j;
  j["m"] = r.m;
  j["config"] = stability_config_to_json(r.config);
  j["learner"] = learner_config_to_json(r.learner);
  if (include_h) {
    j["beta_h_hat"] = r.beta_h_hat;
    j["per_trial_h"] = r.per_trial_h;
    j["per_index_h"] = r.per_index_h;
    j["argmax_h"] = r.argmax_h;
  }
  if (include_ph) {
    j["beta_ph_hat"] = r.beta_ph_hat;
    j["per_trial_ph"] = r.per_trial_ph;
    j["per_index_ph"] = r.per_index_ph;
    j["argmax_ph"] = r.argmax_ph;
  }
  nlohmann::json eff;
  if (r.effective.mean_leaf_count) {
    eff["mean_leaf_count"] = *r.effective.mean_leaf_count;
  }
  if (r.effective.mean_depth) eff["mean_depth"] = *r.effective.mean_depth;
  if (r.effective.mean_lambda_min) {
    eff["mean_lambda_min"] = *r.effective.mean_lambda_min;
  }
  if (r.effective.min_lambda_min) {
    eff["min_lambda_min"] = *r.effective.min_lambda_min;
  }
  j["effective"] = eff;
  j["skipped_samples"] = r.skipped_samples;
  j["eval_sizes"] = r.eval_sizes;
  if (!r.train_indices_per_trial.empty()) {
    j["train_indices_per_trial"] = r.train_indices_per_trial;
  }
  return j;
}

std::string stability_summary_csv(const StabilityReport& r) {
  std::string parameter_name;
  double parameter_value = 0.0;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, DecisionTreeConfig>) {
          parameter_name = "v";
          parameter_value = c.max_leaves;
        } else if constexpr (std::is_same_v<T, LogisticRegressionConfig>) {
          if (c.lambda > 0.0) {
            parameter_name = "lambda";
            parameter_value = c.lambda;
          } else {
            parameter_name = "T";
            parameter_value = c.iterations;
          }
        } else if constexpr (std::is_same_v<T, KnnConfig>) {
          parameter_name = "k";
          parameter_value = c.k;
        } else {
          parameter_name = "label";
          parameter_value = c.label;
        }
      },
      r.learner);

  std::string effective;
  if (r.effective.mean_leaf_count) {
    effective = format_g17(*r.effective.mean_leaf_count);
  } else if (r.effective.mean_lambda_min) {
    effective = format_g17(*r.effective.mean_lambda_min);
  }

  std::ostringstream out;
  out << "algorithm,parameter_name,parameter_value,beta_h_hat,beta_ph_hat,"
         "effective_value\n";
  out << csv_escape(learner_name(r.learner)) << ',' << parameter_name << ','
      << format_g17(parameter_value) << ',' << format_g17(r.beta_h_hat) << ','
      << format_g17(r.beta_ph_hat) << ',' << effective << '\n';
  return out.str();
}

}  // namespace stabilab
