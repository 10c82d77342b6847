#include "stabilab/learners.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>

namespace stabilab {

namespace {

// ---------------------------------------------------------------- trees

struct Split {
  double gain = -1.0;  // impurity decrease, comparable across leaves
  int feature = -1;
  double threshold = 0.0;
};

// Gini gain of splitting counts (c0,c1) into left (l0,l1) and the rest,
// written as sum-of-squares over part sizes so that equal configurations
// produce bit-identical values and ties break deterministically.
double gini_gain(double l0, double l1, double r0, double r1) {
  const double nl = l0 + l1;
  const double nr = r0 + r1;
  const double n = nl + nr;
  return (l0 * l0 + l1 * l1) / nl + (r0 * r0 + r1 * r1) / nr -
         ((l0 + r0) * (l0 + r0) + (l1 + r1) * (l1 + r1)) / n;
}

bool better_split(const Split& a, const Split& b) {
  if (a.gain != b.gain) return a.gain > b.gain;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

std::optional<Split> best_split(const Dataset& d,
                                const std::vector<Eigen::Index>& idx) {
  int c1 = 0;
  for (const Eigen::Index i : idx) c1 += d.label(i);
  const int n = static_cast<int>(idx.size());
  if (c1 == 0 || c1 == n) return std::nullopt;  // pure leaf

  std::optional<Split> best;
  std::vector<Eigen::Index> order(idx);
  for (int f = 0; f < static_cast<int>(d.dim()); ++f) {
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      const double va = d.features()(a, f);
      const double vb = d.features()(b, f);
      return va != vb ? va < vb : a < b;
    });
    int l0 = 0;
    int l1 = 0;
    for (int j = 0; j + 1 < n; ++j) {
      l1 += d.label(order[j]);
      l0 += 1 - d.label(order[j]);
      const double v = d.features()(order[j], f);
      const double next = d.features()(order[j + 1], f);
      if (v == next) continue;  // threshold only between distinct values
      Split s;
      s.feature = f;
      s.threshold = 0.5 * (v + next);
      s.gain = gini_gain(l0, l1, n - c1 - l0, c1 - l1);
      if (!best || better_split(s, *best)) best = s;
    }
  }
  return best;
}

struct FrontierLeaf {
  int node = -1;
  int depth = 0;
  int created = 0;  // creation order, last tie-break key
  std::vector<Eigen::Index> idx;
  std::optional<Split> split;
};

void fill_leaf_stats(TreeNode& node, const Dataset& d,
                     const std::vector<Eigen::Index>& idx) {
  int c1 = 0;
  for (const Eigen::Index i : idx) c1 += d.label(i);
  const int n = static_cast<int>(idx.size());
  node.count = n;
  node.score = static_cast<double>(c1) / n;
  node.label = 2 * c1 >= n ? 1 : 0;  // sign(0) := +1
}

TreeModel train_tree(const Dataset& d, const DecisionTreeConfig& cfg) {
  if (cfg.max_leaves < 1) {
    throw std::invalid_argument("tree: max_leaves must be >= 1");
  }
  TreeModel model;
  model.dim = d.dim();

  std::vector<Eigen::Index> all(d.size());
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  model.nodes.emplace_back();
  fill_leaf_stats(model.nodes[0], d, all);

  int created = 0;
  std::vector<FrontierLeaf> frontier;
  frontier.push_back({0, 0, created++, std::move(all), {}});
  frontier[0].split = best_split(d, frontier[0].idx);

  int leaves = 1;
  int max_depth = 0;
  while (leaves < cfg.max_leaves) {
    // best-first: largest gain, then feature, threshold, creation order
    int pick = -1;
    for (int j = 0; j < static_cast<int>(frontier.size()); ++j) {
      if (!frontier[j].split) continue;
      if (pick < 0 || better_split(*frontier[j].split, *frontier[pick].split))
        pick = j;
    }
    if (pick < 0) break;  // every remaining leaf is pure or unsplittable

    FrontierLeaf leaf = std::move(frontier[pick]);
    frontier.erase(frontier.begin() + pick);
    const Split s = *leaf.split;

    std::vector<Eigen::Index> left_idx;
    std::vector<Eigen::Index> right_idx;
    for (const Eigen::Index i : leaf.idx) {
      (d.features()(i, s.feature) <= s.threshold ? left_idx : right_idx)
          .push_back(i);
    }

    const int left_node = static_cast<int>(model.nodes.size());
    model.nodes.emplace_back();
    model.nodes.emplace_back();
    fill_leaf_stats(model.nodes[left_node], d, left_idx);
    fill_leaf_stats(model.nodes[left_node + 1], d, right_idx);

    TreeNode& parent = model.nodes[static_cast<std::size_t>(leaf.node)];
    parent.feature = s.feature;
    parent.threshold = s.threshold;
    parent.left = left_node;
    parent.right = left_node + 1;

    const int child_depth = leaf.depth + 1;
    max_depth = std::max(max_depth, child_depth);
    FrontierLeaf lhs{left_node, child_depth, created++, std::move(left_idx), {}};
    lhs.split = best_split(d, lhs.idx);
    FrontierLeaf rhs{left_node + 1, child_depth, created++,
                     std::move(right_idx), {}};
    rhs.split = best_split(d, rhs.idx);
    frontier.push_back(std::move(lhs));
    frontier.push_back(std::move(rhs));
    ++leaves;
  }

  model.leaf_count = leaves;
  model.depth = leaves == 1 ? 0 : max_depth;
  return model;
}

const TreeNode& route(const TreeModel& model,
                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.dim) {
    throw std::invalid_argument("tree: feature dimension mismatch");
  }
  int node = 0;
  while (model.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = model.nodes[static_cast<std::size_t>(node)];
    node = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return model.nodes[static_cast<std::size_t>(node)];
}

// ---------------------------------------------------- logistic regression

LrModel train_logistic(const Dataset& d, const LogisticRegressionConfig& cfg) {
  if (cfg.iterations < 0) {
    throw std::invalid_argument("logistic: iterations must be >= 0");
  }
  if (!(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("logistic: learning_rate must be > 0");
  }
  if (cfg.lambda < 0.0) {
    throw std::invalid_argument("logistic: lambda must be >= 0");
  }
  const Eigen::MatrixXd x = design_matrix(d, cfg.fit_bias);
  const Eigen::VectorXd y = d.labels().cast<double>();
  const double inv_m = 1.0 / static_cast<double>(d.size());
  // the intercept is exempt from the penalty, the usual convention
  Eigen::VectorXd penalty_mask = Eigen::VectorXd::Ones(x.cols());
  if (cfg.fit_bias) penalty_mask(x.cols() - 1) = 0.0;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(x.cols());
  for (int t = 0; t < cfg.iterations; ++t) {
    const Eigen::VectorXd p =
        (x * theta).unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd grad =
        x.transpose() * (p - y) * inv_m +
        cfg.lambda * penalty_mask.cwiseProduct(theta);
    theta -= cfg.learning_rate * grad;
  }
  if (!theta.allFinite()) {
    throw std::runtime_error(
        "logistic: gradient descent diverged; lower the learning rate");
  }
  return LrModel{std::move(theta), cfg.fit_bias};
}

double lr_raw_score(const LrModel& model,
                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index d = model.theta.size() - (model.fit_bias ? 1 : 0);
  if (x.size() != d) {
    throw std::invalid_argument("logistic: feature dimension mismatch");
  }
  double t = model.theta.head(d).dot(x);
  if (model.fit_bias) t += model.theta(d);
  return t;
}

// ------------------------------------------------------------------- knn

KnnModel train_knn(const Dataset& d, const KnnConfig& cfg) {
  if (cfg.k < 1 || cfg.k % 2 == 0) {
    throw std::invalid_argument("knn: k must be a positive odd integer");
  }
  if (cfg.k > d.size()) {
    throw std::invalid_argument("knn: k=" + std::to_string(cfg.k) +
                                " exceeds m=" + std::to_string(d.size()));
  }
  return KnnModel{d, cfg.k};
}

double knn_vote_fraction(const KnnModel& model,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.data.dim()) {
    throw std::invalid_argument("knn: feature dimension mismatch");
  }
  const Eigen::Index m = model.data.size();
  const Eigen::VectorXd d2 =
      (model.data.features().rowwise() - x.transpose()).rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return d2(a) != d2(b) ? d2(a) < d2(b) : a < b;
  });
  int c1 = 0;
  for (int j = 0; j < model.k; ++j) {
    c1 += model.data.label(order[static_cast<std::size_t>(j)]);
  }
  return static_cast<double>(c1) / model.k;
}

}  // namespace

Eigen::MatrixXd design_matrix(const Dataset& d, bool with_bias) {
  if (!with_bias) return d.features();
  Eigen::MatrixXd x(d.size(), d.dim() + 1);
  x.leftCols(d.dim()) = d.features();
  x.col(d.dim()).setOnes();
  return x;
}

TrainedModel train(const Dataset& d, const LearnerConfig& config,
                   std::uint64_t seed) {
  (void)seed;
  if (d.size() == 0) throw std::invalid_argument("train: empty dataset");
  return std::visit(
      [&](const auto& cfg) -> TrainedModel {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, DecisionTreeConfig>) {
          return train_tree(d, cfg);
        } else if constexpr (std::is_same_v<T, LogisticRegressionConfig>) {
          return train_logistic(d, cfg);
        } else if constexpr (std::is_same_v<T, KnnConfig>) {
          return train_knn(d, cfg);
        } else {
          if (cfg.label != 0 && cfg.label != 1) {
            throw std::invalid_argument("stub: label outside {0,1}");
          }
          return StubModel{cfg.label};
        }
      },
      config);
}

int predict_label(const TrainedModel& model,
                  const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::visit(
      [&](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
          return route(m, x).label;
        } else if constexpr (std::is_same_v<T, LrModel>) {
          return lr_raw_score(m, x) >= 0.0 ? 1 : 0;
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          return knn_vote_fraction(m, x) >= 0.5 ? 1 : 0;
        } else {
          return m.label;
        }
      },
      model);
}

double predict_score(const TrainedModel& model,
                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
          return route(m, x).score;
        } else if constexpr (std::is_same_v<T, LrModel>) {
          return sigmoid(lr_raw_score(m, x));
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          return knn_vote_fraction(m, x);
        } else {
          return static_cast<double>(m.label);
        }
      },
      model);
}

Eigen::VectorXd lr_gradient(const Dataset& d,
                            const Eigen::Ref<const Eigen::VectorXd>& theta,
                            double lambda) {
  if (d.size() == 0) throw std::invalid_argument("lr_gradient: empty dataset");
  bool with_bias = false;
  if (theta.size() == d.dim() + 1) {
    with_bias = true;
  } else if (theta.size() != d.dim()) {
    throw std::invalid_argument("lr_gradient: theta has length " +
                                std::to_string(theta.size()) +
                                ", expected d or d+1");
  }
  const Eigen::MatrixXd x = design_matrix(d, with_bias);
  const Eigen::VectorXd y = d.labels().cast<double>();
  const Eigen::VectorXd p =
      (x * theta).unaryExpr([](double v) { return sigmoid(v); });
  return x.transpose() * (p - y) / static_cast<double>(d.size()) +
         lambda * theta;
}

TreeStats tree_stats(const TrainedModel& model) {
  const auto* tree = std::get_if<TreeModel>(&model);
  if (tree == nullptr) {
    throw std::invalid_argument("tree_stats: model is not a decision tree");
  }
  return TreeStats{tree->leaf_count, tree->depth};
}

namespace {

nlohmann::json node_to_json(const TreeModel& model, int id) {
  const TreeNode& n = model.nodes[static_cast<std::size_t>(id)];
  if (n.feature < 0) {
    return {{"leaf_label", n.label}, {"score", n.score}, {"count", n.count}};
  }
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", node_to_json(model, n.left)},
          {"right", node_to_json(model, n.right)}};
}

}  // namespace

nlohmann::json model_to_json(const TrainedModel& model) {
  return std::visit(
      [](const auto& m) -> nlohmann::json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
          return {{"type", "tree"},
                  {"dim", m.dim},
                  {"leaf_count", m.leaf_count},
                  {"depth", m.depth},
                  {"root", node_to_json(m, 0)}};
        } else if constexpr (std::is_same_v<T, LrModel>) {
          return {{"type", "logistic"},
                  {"fit_bias", m.fit_bias},
                  {"theta", std::vector<double>(
                                m.theta.data(), m.theta.data() + m.theta.size())}};
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          nlohmann::json rows = nlohmann::json::array();
          for (Eigen::Index i = 0; i < m.data.size(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index j = 0; j < m.data.dim(); ++j) {
              row.push_back(m.data.features()(i, j));
            }
            rows.push_back(std::move(row));
          }
          std::vector<int> labels(m.data.labels().data(),
                                  m.data.labels().data() + m.data.size());
          return {{"type", "knn"},
                  {"k", m.k},
                  {"dataset", {{"features", rows}, {"labels", labels}}}};
        } else {
          return {{"type", "stub"}, {"label", m.label}};
        }
      },
      model);
}

nlohmann::json learner_config_to_json(const LearnerConfig& config) {
  return std::visit(
      [](const auto& c) -> nlohmann::json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, DecisionTreeConfig>) {
          return {{"learner", "tree"}, {"max_leaves", c.max_leaves}};
        } else if constexpr (std::is_same_v<T, LogisticRegressionConfig>) {
          return {{"learner", "logistic"},
                  {"iterations", c.iterations},
                  {"learning_rate", c.learning_rate},
                  {"lambda", c.lambda},
                  {"fit_bias", c.fit_bias}};
        } else if constexpr (std::is_same_v<T, KnnConfig>) {
          return {{"learner", "knn"}, {"k", c.k}};
        } else {
          return {{"learner", "stub"}, {"label", c.label}};
        }
      },
      config);
}

const char* learner_name(const LearnerConfig& config) {
  return std::visit(
      [](const auto& c) -> const char* {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, DecisionTreeConfig>) {
          return "tree";
        } else if constexpr (std::is_same_v<T, LogisticRegressionConfig>) {
          return c.lambda > 0.0 ? "l2lr" : "lr";
        } else if constexpr (std::is_same_v<T, KnnConfig>) {
          return "knn";
        } else {
          return "stub";
        }
      },
      config);
}

}  // namespace stabilab
