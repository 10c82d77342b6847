#pragma once

#include <Eigen/Dense>

#include "stabilab/dataset.hpp"
#include "stabilab/learners.hpp"

namespace stabilab {

enum class LossType { Classification, Gamma, CrossEntropy };

/// Loss selector carrying the Lipschitz constant tau the bounds consume.
/// Classification carries tau = 1 by convention; the margin loss has
/// slope 1/gamma; cross-entropy is 1-Lipschitz in the score.
struct LossKind {
  LossType type = LossType::Classification;
  double gamma = 1.0;  // margin width, Gamma only
  double tau = 1.0;

  static LossKind classification() { return {LossType::Classification, 1.0, 1.0}; }
  static LossKind gamma_margin(double gamma);
  static LossKind cross_entropy() { return {LossType::CrossEntropy, 1.0, 1.0}; }

  const char* name() const;
  /// Largest value the loss can take (1 for the bounded losses, the
  /// clamped cross-entropy ceiling otherwise).
  double max_value() const;
};

/// 0-1 loss: 0 when the predicted label equals y.
int classification_loss(int predicted_label, int y);

/// Margin ramp on a signed score with y_sign in {-1,+1}: 1 below margin 0,
/// linear down to 0 at margin gamma.
double gamma_loss(double score, int y_sign, double gamma);

/// Negative Bernoulli log-likelihood with probabilities clamped at 1e-12,
/// so p in {0,1} stays finite.
double cross_entropy_loss(double p, int y);

/// Loss of a trained model at one example. Gamma loss sees the signed
/// score 2*predict_score(x) - 1 and the label mapped to {-1,+1};
/// cross-entropy sees predict_score(x) as the class-1 probability.
double loss_at(const TrainedModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& x, int y,
               const LossKind& loss);

/// Mean loss of the model over the dataset.
double empirical_error(const TrainedModel& model, const Dataset& d,
                       const LossKind& loss);

inline constexpr double kProbClamp = 1e-12;

}  // namespace stabilab
