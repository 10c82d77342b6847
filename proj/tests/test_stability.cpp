#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <unordered_set>

#include "stabilab/stability.hpp"

using namespace stabilab;

namespace {

Dataset two_points() {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 10.0;
  Eigen::VectorXi y(2);
  y << 0, 1;
  return Dataset(x, y);
}

// test-local nearest-neighbor classifier (lowest index wins ties)
int nn1(const std::vector<double>& xs, const std::vector<int>& ys, double x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (std::abs(xs[i] - x) < std::abs(xs[best] - x)) best = i;
  }
  return ys[best];
}

struct HandEstimate {
  double beta_h = 0.0;
  double beta_ph = 0.0;
  std::vector<double> per_index_h;
  std::vector<double> per_index_ph;
};

// direct evaluation of the two estimator formulas for B=1, ALL strategy,
// classification loss, 1-NN, on a 1-d dataset
HandEstimate enumerate_1nn(const Dataset& d,
                           const std::vector<Eigen::Index>& sample_indices) {
  const Eigen::Index m = d.size();
  std::vector<double> xs;
  std::vector<int> ys;
  for (const Eigen::Index s : sample_indices) {
    xs.push_back(d.features()(s, 0));
    ys.push_back(d.label(s));
  }
  HandEstimate out;
  out.per_index_h.assign(static_cast<std::size_t>(m), 0.0);
  out.per_index_ph.assign(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool present =
        std::find(sample_indices.begin(), sample_indices.end(), i) !=
        sample_indices.end();
    if (!present) continue;  // removing an absent example changes nothing
    std::vector<double> xs_red;
    std::vector<int> ys_red;
    for (std::size_t j = 0; j < sample_indices.size(); ++j) {
      if (sample_indices[j] != i) {
        xs_red.push_back(xs[j]);
        ys_red.push_back(ys[j]);
      }
    }
    double sum = 0.0;
    for (Eigen::Index e = 0; e < m; ++e) {
      const double xe = d.features()(e, 0);
      const int l_full = nn1(xs, ys, xe) == d.label(e) ? 0 : 1;
      const int l_red = nn1(xs_red, ys_red, xe) == d.label(e) ? 0 : 1;
      sum += std::abs(l_full - l_red);
    }
    out.per_index_h[static_cast<std::size_t>(i)] =
        sum / static_cast<double>(m);  // B = 1, m' = m

    const double xi = d.features()(i, 0);
    const int l_full = nn1(xs, ys, xi) == d.label(i) ? 0 : 1;
    const int l_red = nn1(xs_red, ys_red, xi) == d.label(i) ? 0 : 1;
    out.per_index_ph[static_cast<std::size_t>(i)] = std::abs(l_full - l_red);
  }
  for (const double v : out.per_index_h) out.beta_h = std::max(out.beta_h, v);
  for (const double v : out.per_index_ph) {
    out.beta_ph = std::max(out.beta_ph, v);
  }
  return out;
}

}  // namespace

TEST_CASE("task seeds are stable, sensitive, and collision free") {
  CHECK(derive_task_seed(9, 1, 2, 3) == derive_task_seed(9, 1, 2, 3));
  CHECK(derive_task_seed(9, 0, 1, 0) != derive_task_seed(9, 1, 0, 0));
  CHECK(derive_task_seed(9, 1, 2, 3) != derive_task_seed(10, 1, 2, 3));
  CHECK(derive_task_seed(9, 1, 2, 3) != derive_task_seed(9, 1, 2, 4));
  CHECK(derive_task_seed(9, 1, 2, 3) != derive_task_seed(9, 1, 3, 3));

  SplitMix64 rng(1234);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2000000);
  for (int n = 0; n < 1000000; ++n) {
    const auto s = rng.next_u64();
    const auto t = static_cast<std::int64_t>(rng.next_below(1000));
    const auto b = static_cast<std::int64_t>(rng.next_below(1000));
    const auto i = static_cast<std::int64_t>(rng.next_below(1000)) - 3;
    const bool inserted = seen.insert(derive_task_seed(s, t, b, i)).second;
    CHECK(inserted);
    if (!inserted) break;
  }
}

TEST_CASE("a constant learner has exactly zero estimated instability") {
  const Dataset d = generate_hastie(6, 2);
  StabilityConfig cfg;
  cfg.B = 3;
  cfg.trials = 2;
  cfg.seed = 5;
  const StabilityReport h = estimate_hypothesis_stability(d, StubConfig{1}, cfg);
  CHECK(h.beta_h_hat == 0.0);
  const StabilityReport ph =
      estimate_pointwise_hypothesis_stability(d, StubConfig{1}, cfg);
  CHECK(ph.beta_ph_hat == 0.0);
  for (const double v : h.per_index_h) CHECK(v == 0.0);
}

TEST_CASE("both estimators match exhaustive enumeration for B=1, m=2") {
  const Dataset d = two_points();
  StabilityConfig cfg;
  cfg.B = 1;
  cfg.trials = 1;

  int checked = 0;
  for (std::uint64_t seed = 0; seed < 64 && checked < 4; ++seed) {
    cfg.seed = seed;
    const BootstrapSample sample = bootstrap_sample(
        d, derive_task_seed(seed, 0, 0, kBootstrapSeedTag));
    std::unordered_set<Eigen::Index> distinct(sample.source_indices.begin(),
                                              sample.source_indices.end());
    if (distinct.size() < 2) {
      // only one distinct row: the sample is skipped and, with B=1,
      // nothing remains to estimate from
      CHECK_THROWS_AS(measure_stability(d, KnnConfig{1}, cfg),
                      std::runtime_error);
      continue;
    }
    const StabilityReport r = measure_stability(d, KnnConfig{1}, cfg);
    const HandEstimate expected = enumerate_1nn(d, sample.source_indices);
    CHECK(r.beta_h_hat == expected.beta_h);
    CHECK(r.beta_ph_hat == expected.beta_ph);
    CHECK(r.per_index_h == expected.per_index_h);
    CHECK(r.per_index_ph == expected.per_index_ph);
    // for this dataset the values are known outright
    CHECK(r.beta_h_hat == 0.5);
    CHECK(r.beta_ph_hat == 1.0);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("skipping absent indices equals the unskipped computation") {
  // same enumeration, larger m: indices missing from the sample must
  // contribute exactly zero, as if the retraining had run on equal data
  Eigen::MatrixXd x(5, 1);
  x << 0.0, 1.0, 4.0, 9.0, 16.0;
  Eigen::VectorXi y(5);
  y << 0, 1, 0, 1, 1;
  const Dataset d(x, y);
  StabilityConfig cfg;
  cfg.B = 1;
  cfg.trials = 1;
  cfg.seed = 3;
  const BootstrapSample sample =
      bootstrap_sample(d, derive_task_seed(3, 0, 0, kBootstrapSeedTag));
  std::unordered_set<Eigen::Index> distinct(sample.source_indices.begin(),
                                            sample.source_indices.end());
  REQUIRE(distinct.size() >= 2);
  REQUIRE(distinct.size() < 5);  // some index is absent under this seed
  const StabilityReport r = measure_stability(d, KnnConfig{1}, cfg);
  const HandEstimate expected = enumerate_1nn(d, sample.source_indices);
  CHECK(r.per_index_h == expected.per_index_h);
  CHECK(r.per_index_ph == expected.per_index_ph);
  for (Eigen::Index i = 0; i < 5; ++i) {
    if (!distinct.count(i)) {
      CHECK(r.per_index_h[static_cast<std::size_t>(i)] == 0.0);
    }
  }
}

TEST_CASE("classification-loss estimates stay within [0,1]") {
  const Dataset d = generate_hastie(12, 9);
  StabilityConfig cfg;
  cfg.B = 5;
  cfg.trials = 2;
  cfg.seed = 8;
  const StabilityReport r = measure_stability(d, DecisionTreeConfig{4}, cfg);
  CHECK(r.beta_h_hat >= 0.0);
  CHECK(r.beta_h_hat <= 1.0);
  CHECK(r.beta_ph_hat >= 0.0);
  CHECK(r.beta_ph_hat <= 1.0);
  for (const double v : r.per_index_h) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("max aggregation dominates mean aggregation") {
  const Dataset d = generate_hastie(14, 21);
  for (const LearnerConfig& learner :
       {LearnerConfig(DecisionTreeConfig{6}), LearnerConfig(KnnConfig{3})}) {
    StabilityConfig cfg;
    cfg.B = 6;
    cfg.trials = 2;
    cfg.seed = 13;
    cfg.aggregate_over_i = Aggregate::Max;
    const StabilityReport mx = measure_stability(d, learner, cfg);
    cfg.aggregate_over_i = Aggregate::Mean;
    const StabilityReport mn = measure_stability(d, learner, cfg);
    CHECK(mx.beta_h_hat >= mn.beta_h_hat);
    CHECK(mx.beta_ph_hat >= mn.beta_ph_hat);
  }
}

TEST_CASE("reports are identical under serial and threaded execution") {
  const Dataset d = generate_hastie(10, 33);
  StabilityConfig cfg;
  cfg.B = 6;
  cfg.trials = 3;
  cfg.seed = 400;
  setenv("STABILITY_LAB_THREADS", "1", 1);
  const StabilityReport serial = measure_stability(d, DecisionTreeConfig{5}, cfg);
  setenv("STABILITY_LAB_THREADS", "4", 1);
  const StabilityReport threaded =
      measure_stability(d, DecisionTreeConfig{5}, cfg);
  unsetenv("STABILITY_LAB_THREADS");
  CHECK(serial.beta_h_hat == threaded.beta_h_hat);
  CHECK(serial.beta_ph_hat == threaded.beta_ph_hat);
  CHECK(serial.per_trial_h == threaded.per_trial_h);
  CHECK(serial.per_index_h == threaded.per_index_h);
  CHECK(serial.per_index_ph == threaded.per_index_ph);
  CHECK(stability_report_to_json(serial).dump() ==
        stability_report_to_json(threaded).dump());
}

TEST_CASE("out-of-bag evaluation works for small B and errors when empty") {
  const Dataset d = generate_hastie(30, 71);
  StabilityConfig cfg;
  cfg.B = 1;
  cfg.trials = 1;
  cfg.seed = 2;
  cfg.strategy.kind = EvalKind::Oob;
  const StabilityReport r = measure_stability(d, KnnConfig{1}, cfg);
  CHECK(r.eval_sizes[0] > 0);
  CHECK(r.eval_sizes[0] < 30);

  const Dataset tiny = two_points();
  StabilityConfig crowded;
  crowded.B = 20;
  crowded.trials = 1;
  crowded.seed = 0;
  crowded.strategy.kind = EvalKind::Oob;
  CHECK_THROWS_AS(measure_stability(tiny, KnnConfig{1}, crowded),
                  EmptyEvalSetError);
}

TEST_CASE("held-out split evaluation") {
  const Dataset d = generate_hastie(20, 55);
  StabilityConfig cfg;
  cfg.B = 4;
  cfg.trials = 2;
  cfg.seed = 19;
  cfg.strategy.kind = EvalKind::Oos;
  const StabilityReport r = measure_stability(d, DecisionTreeConfig{4}, cfg);
  REQUIRE(r.train_indices_per_trial.size() == 2);
  for (const int m_eval : r.eval_sizes) CHECK(m_eval == 6);
  for (const auto& train : r.train_indices_per_trial) {
    CHECK(train.size() == 14);
  }
  CHECK(r.beta_h_hat >= 0.0);
  CHECK(r.beta_h_hat <= 1.0);
}

TEST_CASE("degenerate bootstrap samples are skipped and noted") {
  const Dataset d = two_points();
  StabilityConfig cfg;
  cfg.trials = 1;
  cfg.B = 8;
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    cfg.seed = seed;
    int degenerate = 0;
    for (int b = 0; b < cfg.B; ++b) {
      const BootstrapSample s = bootstrap_sample(
          d, derive_task_seed(seed, 0, b, kBootstrapSeedTag));
      if (s.source_indices[0] == s.source_indices[1]) ++degenerate;
    }
    if (degenerate == 0 || degenerate == cfg.B) continue;
    const StabilityReport r = measure_stability(d, KnnConfig{1}, cfg);
    CHECK(r.skipped_samples == degenerate);
    // the usable samples all contain both points, so the estimate equals
    // the single-sample enumeration regardless of how many were skipped
    CHECK(r.beta_h_hat == 0.5);
    CHECK(r.beta_ph_hat == 1.0);
    return;
  }
  FAIL("no seed produced a mixed degenerate/usable draw");
}

TEST_CASE("1-NN mean-aggregated estimates track k/m") {
  double total = 0.0;
  const int runs = 20;
  for (int run = 0; run < runs; ++run) {
    const Dataset d = generate_hastie(20, 900 + static_cast<std::uint64_t>(run));
    StabilityConfig cfg;
    cfg.B = 10;
    cfg.trials = 1;
    cfg.seed = 1000 + static_cast<std::uint64_t>(run);
    cfg.aggregate_over_i = Aggregate::Mean;
    total += measure_stability(d, KnnConfig{1}, cfg).beta_h_hat;
  }
  CHECK(total / runs <= 1.0 / 20.0 + 0.05);
}

TEST_CASE("effective statistics reflect the fitted models") {
  const Dataset d = generate_hastie(20, 61);
  StabilityConfig cfg;
  cfg.B = 4;
  cfg.trials = 1;
  cfg.seed = 77;
  const StabilityReport tree =
      measure_stability(d, DecisionTreeConfig{256}, cfg);
  REQUIRE(tree.effective.mean_leaf_count.has_value());
  CHECK(*tree.effective.mean_leaf_count <= 20.0);
  CHECK(*tree.effective.mean_leaf_count >= 1.0);
  CHECK(!tree.effective.mean_lambda_min.has_value());

  const StabilityReport lr = measure_stability(
      d, LogisticRegressionConfig{50, 0.1, 1.0, true}, cfg);
  REQUIRE(lr.effective.mean_lambda_min.has_value());
  CHECK(*lr.effective.mean_lambda_min >= 1.0);  // penalty shifts the spectrum
  CHECK(*lr.effective.min_lambda_min <= *lr.effective.mean_lambda_min);
}

TEST_CASE("summary csv has one data row") {
  const Dataset d = generate_hastie(8, 3);
  StabilityConfig cfg;
  cfg.B = 2;
  cfg.trials = 1;
  const StabilityReport r = measure_stability(d, KnnConfig{1}, cfg);
  const std::string csv = stability_summary_csv(r);
  CHECK(csv.find("algorithm,") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.find("knn,k,1,") != std::string::npos);
}

TEST_CASE("estimator input validation") {
  const Dataset d = generate_hastie(2, 1);
  StabilityConfig cfg;
  cfg.B = 0;
  CHECK_THROWS_AS(measure_stability(d, KnnConfig{1}, cfg),
                  std::invalid_argument);
  cfg.B = 1;
  cfg.trials = 0;
  CHECK_THROWS_AS(measure_stability(d, KnnConfig{1}, cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(measure_stability(generate_hastie(1, 1), KnnConfig{1},
                                    StabilityConfig{}),
                  std::invalid_argument);
}
