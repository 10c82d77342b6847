#pragma once

#include <Eigen/Dense>

#include "stabilab/dataset.hpp"

namespace stabilab {

/// Dense symmetric matrix in packed row-major upper-triangle storage, so
/// symmetry holds by construction rather than by discipline.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(Eigen::Index n);

  /// Packs a dense matrix; rejects non-finite entries and asymmetry
  /// beyond sym_tol * max(1, ||a||_F).
  static SymmetricMatrix from_dense(const Eigen::MatrixXd& a,
                                    double sym_tol = 1e-12);

  Eigen::Index order() const { return n_; }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return upper_(pack_index(i, j));
  }
  void set(Eigen::Index i, Eigen::Index j, double v) {
    upper_(pack_index(i, j)) = v;
  }
  Eigen::MatrixXd dense() const;
  double frobenius_norm() const;
  bool all_finite() const { return upper_.allFinite(); }

 private:
  Eigen::Index pack_index(Eigen::Index i, Eigen::Index j) const;
  Eigen::Index n_ = 0;
  Eigen::VectorXd upper_;  // n(n+1)/2 entries
};

/// Hessian of the (optionally L2-penalized) mean cross-entropy at theta:
/// (1/m) sum_i p_i (1 - p_i) x_i x_i^T + lambda I with p_i the predicted
/// class-1 probability. Positive semidefinite by construction. theta of
/// length d+1 appends the bias column, matching lr_gradient.
SymmetricMatrix cross_entropy_hessian(
    const Dataset& d, const Eigen::Ref<const Eigen::VectorXd>& theta,
    double lambda);

/// Smallest eigenvalue by cyclic Jacobi rotations, swept until the
/// off-diagonal Frobenius mass drops below tol * max(1, ||m||_F).
double smallest_eigenvalue(const SymmetricMatrix& m, double tol = 1e-10);

}  // namespace stabilab
