#include "stabilab/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace stabilab {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string("bounds: ") + name +
                                " must be > 0");
  }
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("bounds: delta must lie in (0,1)");
  }
}

double confidence_term(int m, double delta) {
  return std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(m)));
}

}  // namespace

double knn_stability_bound(int k, int m) {
  if (k < 1) throw std::invalid_argument("bounds: k must be >= 1");
  if (k > m) {
    throw std::invalid_argument("bounds: k=" + std::to_string(k) +
                                " exceeds m=" + std::to_string(m));
  }
  return static_cast<double>(k) / static_cast<double>(m);
}

double dt_stability_bound(int v) {
  if (v < 1) throw std::invalid_argument("bounds: v must be >= 1");
  return 1.0 / static_cast<double>(v);
}

double l2lr_stability_bound(double rho, double tau, double lambda, int m,
                            double q) {
  require_positive(rho, "rho");
  require_positive(tau, "tau");
  require_positive(q, "q");
  if (m < 1) throw std::invalid_argument("bounds: m must be >= 1");
  if (!(lambda > 0.0)) {
    throw std::invalid_argument(
        "bounds: lambda must be > 0; use lr_stability_bound for the "
        "unregularized case");
  }
  return 2.0 * rho * tau * q / (lambda * static_cast<double>(m));
}

double lr_stability_bound(double rho, double tau, int m, double lambda_min,
                          double q) {
  require_positive(rho, "rho");
  require_positive(tau, "tau");
  require_positive(q, "q");
  if (m < 1) throw std::invalid_argument("bounds: m must be >= 1");
  if (!(lambda_min > 0.0)) {
    throw std::invalid_argument(
        "bounds: unbounded -- Hessian not positive definite at the optimum "
        "(lambda_min <= 0)");
  }
  return 2.0 * rho * tau * q / (static_cast<double>(m) * lambda_min);
}

double gen_bound_dt(double r_emp, int v, int m, double tau, double delta) {
  if (r_emp < 0.0) throw std::invalid_argument("bounds: R_emp must be >= 0");
  if (v < 1) throw std::invalid_argument("bounds: v must be >= 1");
  if (m < 1) throw std::invalid_argument("bounds: m must be >= 1");
  require_positive(tau, "tau");
  require_delta(delta);
  const double dv = static_cast<double>(v);
  const double dm = static_cast<double>(m);
  return r_emp + 2.0 / dv + (4.0 * dm / dv + tau) * confidence_term(m, delta);
}

double gen_bound_lr(double r_emp, double rho, double tau, double lambda_min,
                    int m, double delta) {
  if (r_emp < 0.0) throw std::invalid_argument("bounds: R_emp must be >= 0");
  require_positive(rho, "rho");
  require_positive(tau, "tau");
  if (m < 1) throw std::invalid_argument("bounds: m must be >= 1");
  require_delta(delta);
  if (!(lambda_min > 0.0)) {
    throw std::invalid_argument(
        "bounds: unbounded -- Hessian not positive definite at the optimum "
        "(lambda_min <= 0)");
  }
  return r_emp + 4.0 * rho * tau / (static_cast<double>(m) * lambda_min) +
         (8.0 * rho * tau / lambda_min + tau) * confidence_term(m, delta);
}

double gen_bound_l2lr(double r_emp, double rho, double tau, double lambda,
                      int m, double delta) {
  if (r_emp < 0.0) throw std::invalid_argument("bounds: R_emp must be >= 0");
  require_positive(rho, "rho");
  require_positive(tau, "tau");
  require_positive(lambda, "lambda");
  if (m < 1) throw std::invalid_argument("bounds: m must be >= 1");
  require_delta(delta);
  return r_emp + 4.0 * rho * tau / (lambda * static_cast<double>(m)) +
         (8.0 * rho * tau / lambda + tau) * confidence_term(m, delta);
}

DataConstants data_constants(const Dataset& d, bool fit_bias) {
  if (d.size() == 0) {
    throw std::invalid_argument("data_constants: empty dataset");
  }
  double q_sq = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    q_sq = std::max(q_sq,
                    d.feature_row(i).squaredNorm() + (fit_bias ? 1.0 : 0.0));
  }
  const double q = std::sqrt(q_sq);
  return DataConstants{q, q};
}

nlohmann::json bound_report_to_json(const BoundReport& r) {
  nlohmann::json j;
  j["algorithm"] = r.algorithm;
  j["stability_bound"] = r.stability_bound;
  j["generalization_bound"] =
      r.generalization_bound ? nlohmann::json(*r.generalization_bound)
                             : nlohmann::json(nullptr);
  nlohmann::json in;
  auto put = [&in](const char* key, const auto& opt) {
    if (opt) in[key] = *opt;
  };
  put("m", r.m);
  put("v", r.v);
  put("k", r.k);
  put("lambda", r.lambda);
  put("lambda_min", r.lambda_min);
  put("rho", r.rho);
  put("tau", r.tau);
  put("Q", r.q);
  put("delta", r.delta);
  put("R_emp", r.r_emp);
  j["inputs"] = in;
  if (r.warning) j["warning"] = *r.warning;
  return j;
}

}  // namespace stabilab
