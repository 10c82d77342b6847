#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "stabilab/dataset.hpp"

namespace stabilab {

/// k-NN hypothesis stability: k/m.
double knn_stability_bound(int k, int m);

/// Decision-tree hypothesis (and pointwise hypothesis) stability: 1/v.
double dt_stability_bound(int v);

/// L2-regularized logistic regression, hypothesis = pointwise = uniform
/// stability: 2*rho*tau*q / (lambda*m). lambda must be positive; use
/// lr_stability_bound for the unregularized case.
double l2lr_stability_bound(double rho, double tau, double lambda, int m,
                            double q);

/// Unregularized logistic regression via the smallest Hessian eigenvalue:
/// 2*rho*tau*q / (m*lambda_min). Errors when lambda_min <= 0 (the bound
/// is unbounded; the Hessian is not positive definite at the optimum).
double lr_stability_bound(double rho, double tau, int m, double lambda_min,
                          double q);

/// Generalization upper bound for trees with v leaves (the same formula
/// serves hypothesis and pointwise hypothesis stability):
/// R_emp + 2/v + (4m/v + tau) * sqrt(ln(1/delta) / (2m)).
double gen_bound_dt(double r_emp, int v, int m, double tau, double delta);

/// Generalization upper bound for logistic regression:
/// R_emp + 4*rho*tau/(m*lambda_min)
///       + (8*rho*tau/lambda_min + tau) * sqrt(ln(1/delta) / (2m)).
double gen_bound_lr(double r_emp, double rho, double tau, double lambda_min,
                    int m, double delta);

/// Same shape for the L2-regularized learner with lambda_min replaced by
/// the penalty lambda.
double gen_bound_l2lr(double r_emp, double rho, double tau, double lambda,
                      int m, double delta);

struct DataConstants {
  double q = 0.0;    // max feature norm, bias column included when fit
  double rho = 0.0;  // Lipschitz constant of the per-example objective
};

/// q = max_i ||x_i||_2 (with the bias coordinate when fit_bias). rho
/// defaults to q: the per-example gradient is (sigma - y) x with
/// |sigma - y| <= 1, so no tighter data-driven constant exists.
DataConstants data_constants(const Dataset& d, bool fit_bias);

/// Closed-form stability value plus generalization upper bound with every
/// input echoed, so the report alone reproduces the numbers.
struct BoundReport {
  std::string algorithm;
  double stability_bound = 0.0;
  std::optional<double> generalization_bound;
  std::optional<int> m;
  std::optional<int> v;
  std::optional<int> k;
  std::optional<double> lambda;
  std::optional<double> lambda_min;
  std::optional<double> rho;
  std::optional<double> tau;
  std::optional<double> q;
  std::optional<double> delta;
  std::optional<double> r_emp;
  std::optional<std::string> warning;
};

nlohmann::json bound_report_to_json(const BoundReport& r);

inline constexpr double kDefaultDelta = 0.05;

}  // namespace stabilab
