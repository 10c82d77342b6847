#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stabilab/dataset.hpp"

namespace stabilab {

struct DecisionTreeConfig {
  int max_leaves = 8;
};

struct LogisticRegressionConfig {
  int iterations = 100;        // full-batch gradient steps
  double learning_rate = 0.1;
  double lambda = 0.0;  // L2 penalty on the coefficients; the intercept
                        // is exempt, the usual convention
  bool fit_bias = true;
};

struct KnnConfig {
  int k = 1;  // odd, so binary votes cannot tie
};

/// Constant predictor, used as a known-zero-stability oracle in tests.
struct StubConfig {
  int label = 1;
};

using LearnerConfig =
    std::variant<DecisionTreeConfig, LogisticRegressionConfig, KnnConfig,
                 StubConfig>;

/// Axis-aligned binary split node. feature == -1 marks a leaf; interior
/// nodes route x left when x[feature] <= threshold.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 1;       // leaf majority; ties predict 1
  double score = 1.0;  // fraction of class-1 training examples in the leaf
  int count = 0;       // training examples routed to this node
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  Eigen::Index dim = 0;
  int leaf_count = 0;
  int depth = 0;
};

struct LrModel {
  Eigen::VectorXd theta;  // d entries, or d+1 with the bias appended last
  bool fit_bias = true;
};

struct KnnModel {
  Dataset data;
  int k = 1;
};

struct StubModel {
  int label = 1;
};

using TrainedModel = std::variant<TreeModel, LrModel, KnnModel, StubModel>;

struct TreeStats {
  int leaf_count = 0;
  int depth = 0;
};

/// Fits the configured learner. Deterministic given (d, config, seed);
/// none of the four learners actually consumes randomness, the seed is
/// part of the contract so stochastic learners could slot in.
TrainedModel train(const Dataset& d, const LearnerConfig& config,
                   std::uint64_t seed);

/// Hard prediction in {0, 1}. Logistic ties at probability 0.5 resolve
/// to 1, matching the tree rule sign(0) := +1.
int predict_label(const TrainedModel& model,
                  const Eigen::Ref<const Eigen::VectorXd>& x);

/// Real-valued score in [0, 1]: the class-1 probability for logistic
/// models, and the signed vote mean mapped through (mean+1)/2 for the
/// vote-based models, so margin losses apply uniformly.
double predict_score(const TrainedModel& model,
                     const Eigen::Ref<const Eigen::VectorXd>& x);

/// Gradient of the (optionally L2-penalized) mean cross-entropy:
/// (1/m) sum_i (sigma(theta^T x_i) - y_i) x_i + lambda * theta.
/// theta of length d uses raw features, length d+1 appends the bias 1.
Eigen::VectorXd lr_gradient(const Dataset& d,
                            const Eigen::Ref<const Eigen::VectorXd>& theta,
                            double lambda);

/// Leaf count and depth of a trained tree; errors on other model kinds.
TreeStats tree_stats(const TrainedModel& model);

nlohmann::json model_to_json(const TrainedModel& model);
nlohmann::json learner_config_to_json(const LearnerConfig& config);
const char* learner_name(const LearnerConfig& config);

/// Feature matrix for the logistic learner; appends a constant-1 column
/// when with_bias is set (the bias then participates in norm bounds).
Eigen::MatrixXd design_matrix(const Dataset& d, bool with_bias);

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace stabilab
