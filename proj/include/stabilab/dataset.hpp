#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stabilab {

/// One labeled point: a feature vector plus a binary class in {0, 1}.
struct Example {
  Eigen::VectorXd features;
  int label = 0;
};

/// Raised when an evaluation strategy yields no usable points (the
/// out-of-bag set is typically empty once B is large). Distinct from a
/// plain runtime error so callers can fall back to the ALL strategy.
class EmptyEvalSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered, immutable collection of labeled examples sharing one feature
/// dimension. Index i keeps referring to the same example; perturbation
/// operators (remove/replace/bootstrap) build new Dataset values instead
/// of mutating.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Eigen::MatrixXd features, Eigen::VectorXi labels);

  Eigen::Index size() const { return features_.rows(); }
  Eigen::Index dim() const { return features_.cols(); }
  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXi& labels() const { return labels_; }
  int label(Eigen::Index i) const { return labels_(i); }
  Eigen::MatrixXd::ConstRowXpr feature_row(Eigen::Index i) const {
    return features_.row(i);
  }
  Example example(Eigen::Index i) const {
    return Example{features_.row(i).transpose(), labels_(i)};
  }

 private:
  Eigen::MatrixXd features_;  // m x d, one row per example
  Eigen::VectorXi labels_;    // m entries in {0, 1}
};

bool operator==(const Dataset& a, const Dataset& b);
inline bool operator!=(const Dataset& a, const Dataset& b) { return !(a == b); }

/// Size-m resample of an origin dataset; source_indices[j] is the origin
/// row that data row j was copied from.
struct BootstrapSample {
  Dataset data;
  std::vector<Eigen::Index> source_indices;
};

enum class EvalKind { All, Oob, Oos };

/// How the evaluation set for the stability estimators is built.
struct EvalStrategy {
  EvalKind kind = EvalKind::All;
  double oos_fraction = 0.3;  // used only by Oos
};

/// Seeded split of a dataset into a held-out evaluation part and the
/// remainder used for training; indices refer to the origin and are kept
/// in ascending order.
struct OosSplit {
  Dataset eval;
  Dataset train;
  std::vector<Eigen::Index> eval_indices;
  std::vector<Eigen::Index> train_indices;
};

inline constexpr Eigen::Index kHastieDim = 10;
inline constexpr double kHastieThreshold = 9.34;

/// Label rule of the synthetic generator: 1 iff the squared feature norm
/// exceeds 9.34 (the chi-squared-10 median), else 0.
int hastie_label(const Eigen::Ref<const Eigen::VectorXd>& features);

/// m examples with 10 i.i.d. standard-normal features, labeled by
/// hastie_label. Deterministic in the seed (Box-Muller over SplitMix64).
Dataset generate_hastie(Eigen::Index m, std::uint64_t seed);

/// Applies the synthetic labeling rule to externally supplied features.
Dataset hastie_from_features(const Eigen::MatrixXd& features);

/// Reads `f0,...,f{d-1},label` CSV (one header row, labels 0/1). Errors
/// cite the 1-based data row and column.
Dataset load_csv(const std::string& path);

/// Writes the CSV format load_csv reads; features carry 17 significant
/// digits so a write/load round trip is exact.
void save_csv(const Dataset& d, const std::string& path);

/// Dataset without example i; relative order preserved.
Dataset remove_example(const Dataset& d, Eigen::Index i);

/// Dataset with example i replaced by z; size unchanged.
Dataset replace_example(const Dataset& d, Eigen::Index i, const Example& z);

/// Dataset made of the given rows of d, in the given order.
Dataset select_examples(const Dataset& d,
                        const std::vector<Eigen::Index>& rows);

/// m uniform draws with replacement from d, deterministic in the seed.
BootstrapSample bootstrap_sample(const Dataset& d, std::uint64_t seed);

/// Seeded shuffle split; the eval part has round(fraction * m) examples.
OosSplit oos_split(const Dataset& d, double fraction, std::uint64_t seed);

/// Evaluation set per strategy: ALL returns d itself; OOB returns the
/// examples absent from every sample (EmptyEvalSetError when none exist);
/// OOS returns the held-out part of a seeded split.
Dataset build_eval_set(const Dataset& d,
                       const std::vector<BootstrapSample>& samples,
                       const EvalStrategy& strategy, std::uint64_t seed);

const char* eval_kind_name(EvalKind kind);

}  // namespace stabilab
