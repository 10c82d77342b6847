#include "stabilab/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace stabilab {

LossKind LossKind::gamma_margin(double gamma) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("loss: gamma must be > 0");
  }
  return {LossType::Gamma, gamma, 1.0 / gamma};
}

const char* LossKind::name() const {
  switch (type) {
    case LossType::Classification: return "classification";
    case LossType::Gamma: return "gamma";
    case LossType::CrossEntropy: return "cross_entropy";
  }
  return "?";
}

double LossKind::max_value() const {
  return type == LossType::CrossEntropy ? -std::log(kProbClamp) : 1.0;
}

int classification_loss(int predicted_label, int y) {
  return predicted_label == y ? 0 : 1;
}

double gamma_loss(double score, int y_sign, double gamma) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("gamma_loss: gamma must be > 0");
  }
  const double margin = y_sign * score;
  if (margin < 0.0) return 1.0;
  if (margin <= gamma) return 1.0 - margin / gamma;
  return 0.0;
}

double cross_entropy_loss(double p, int y) {
  const double p1 = std::max(p, kProbClamp);
  const double p0 = std::max(1.0 - p, kProbClamp);
  return y == 1 ? -std::log(p1) : -std::log(p0);
}

double loss_at(const TrainedModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& x, int y,
               const LossKind& loss) {
  switch (loss.type) {
    case LossType::Classification:
      return classification_loss(predict_label(model, x), y);
    case LossType::Gamma:
      return gamma_loss(2.0 * predict_score(model, x) - 1.0,
                        y == 1 ? 1 : -1, loss.gamma);
    case LossType::CrossEntropy:
      return cross_entropy_loss(predict_score(model, x), y);
  }
  throw std::logic_error("loss_at: unknown loss type");
}

double empirical_error(const TrainedModel& model, const Dataset& d,
                       const LossKind& loss) {
  if (d.size() == 0) {
    throw std::invalid_argument("empirical_error: empty dataset");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    sum += loss_at(model, d.feature_row(i).transpose(), d.label(i), loss);
  }
  return sum / static_cast<double>(d.size());
}

}  // namespace stabilab
