#include "stabilab/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "stabilab/learners.hpp"

namespace stabilab {

SymmetricMatrix::SymmetricMatrix(Eigen::Index n)
    : n_(n), upper_(Eigen::VectorXd::Zero(n * (n + 1) / 2)) {
  if (n < 1) throw std::invalid_argument("symmetric matrix: order must be >= 1");
}

Eigen::Index SymmetricMatrix::pack_index(Eigen::Index i, Eigen::Index j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) {
    throw std::out_of_range("symmetric matrix: index out of range");
  }
  if (i > j) std::swap(i, j);
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

SymmetricMatrix SymmetricMatrix::from_dense(const Eigen::MatrixXd& a,
                                            double sym_tol) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("symmetric matrix: input is not square");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument("symmetric matrix: non-finite entry");
  }
  const double scale = std::max(1.0, a.norm());
  if ((a - a.transpose()).norm() > sym_tol * scale) {
    throw std::invalid_argument("symmetric matrix: input is not symmetric");
  }
  SymmetricMatrix m(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i; j < a.cols(); ++j) m.set(i, j, a(i, j));
  }
  return m;
}

Eigen::MatrixXd SymmetricMatrix::dense() const {
  Eigen::MatrixXd a(n_, n_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    for (Eigen::Index j = i; j < n_; ++j) {
      a(i, j) = (*this)(i, j);
      a(j, i) = a(i, j);
    }
  }
  return a;
}

double SymmetricMatrix::frobenius_norm() const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n_; ++i) {
    for (Eigen::Index j = i; j < n_; ++j) {
      const double v = (*this)(i, j);
      sum += (i == j ? 1.0 : 2.0) * v * v;
    }
  }
  return std::sqrt(sum);
}

SymmetricMatrix cross_entropy_hessian(
    const Dataset& d, const Eigen::Ref<const Eigen::VectorXd>& theta,
    double lambda) {
  if (d.size() == 0) {
    throw std::invalid_argument("cross_entropy_hessian: empty dataset");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("cross_entropy_hessian: lambda must be >= 0");
  }
  bool with_bias = false;
  if (theta.size() == d.dim() + 1) {
    with_bias = true;
  } else if (theta.size() != d.dim()) {
    throw std::invalid_argument("cross_entropy_hessian: theta has length " +
                                std::to_string(theta.size()) +
                                ", expected d or d+1");
  }
  const Eigen::MatrixXd x = design_matrix(d, with_bias);
  const Eigen::Index p = x.cols();
  const double inv_m = 1.0 / static_cast<double>(d.size());
  const Eigen::VectorXd w =
      (x * theta)
          .unaryExpr([](double t) {
            const double s = sigmoid(t);
            return s * (1.0 - s);
          })
          .cwiseSqrt();

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
  h.selfadjointView<Eigen::Upper>().rankUpdate(
      (w.asDiagonal() * x).transpose(), inv_m);

  SymmetricMatrix out(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      out.set(i, j, i == j ? h(i, j) + lambda : h(i, j));
    }
  }
  return out;
}

double smallest_eigenvalue(const SymmetricMatrix& m, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("smallest_eigenvalue: tol must be > 0");
  }
  if (!m.all_finite()) {
    throw std::invalid_argument("smallest_eigenvalue: non-finite entry");
  }
  const Eigen::Index n = m.order();
  Eigen::MatrixXd a = m.dense();
  if (n == 1) return a(0, 0);

  const double threshold = tol * std::max(1.0, a.norm());
  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    }
    if (std::sqrt(off) <= threshold) break;

    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double diff = a(q, q) - a(p, p);
        double t;
        if (diff == 0.0) {
          t = 1.0;  // 45-degree rotation
        } else {
          const double theta = diff / (2.0 * apq);
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // rotate rows/columns p and q in place
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  return a.diagonal().minCoeff();
}

}  // namespace stabilab
