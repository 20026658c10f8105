#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>

#include "poal/order.hpp"

namespace poal {

struct LogisticParams {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-3;
};

/// Binary logistic regression; p(+1 | x) = sigmoid(w.x + b).
template <typename Scalar>
class LogisticModelT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  LogisticModelT() = default;
  LogisticModelT(Vector w, Scalar b) : w_(std::move(w)), b_(b) {}

  const Vector& weights() const { return w_; }
  Scalar bias() const { return b_; }
  std::size_t dim() const { return static_cast<std::size_t>(w_.size()); }

  template <typename Derived>
  Scalar predict_proba(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != w_.size()) throw std::invalid_argument("logistic: feature dimension mismatch");
    return sigmoid(x.derived().reshaped().dot(w_) + b_);
  }

  /// p(+1) for every row of X.
  Vector predict_proba_rows(const Matrix& X) const {
    if (X.cols() != w_.size()) throw std::invalid_argument("logistic: feature dimension mismatch");
    return ((X * w_).array() + b_).unaryExpr([](Scalar z) { return sigmoid(z); });
  }

  static Scalar sigmoid(Scalar z) {
    // Split on sign to avoid overflow in exp.
    if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
  }

 private:
  Vector w_;
  Scalar b_ = 0;
};

using LogisticModel = LogisticModelT<double>;

namespace detail {
template <typename Scalar>
Scalar softplus(Scalar z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}
}  // namespace detail

/// Mean negative log-likelihood plus l2/2 * |w|^2 (bias unpenalized).
/// y holds 0/1 targets.
template <typename Scalar>
Scalar logistic_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& w, Scalar b, Scalar l2) {
  const auto z = ((X * w).array() + b).eval();
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) sum += detail::softplus(z(i)) - y(i) * z(i);
  return sum / static_cast<Scalar>(X.rows()) + l2 / 2 * w.squaredNorm();
}

template <typename Scalar>
void logistic_gradient(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& w, Scalar b, Scalar l2,
                       Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad_w, Scalar& grad_b) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r =
      ((X * w).array() + b).unaryExpr([](Scalar z) { return LogisticModelT<Scalar>::sigmoid(z); }).matrix() - y;
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(X.rows());
  grad_w = X.transpose() * r * inv_n + l2 * w;
  grad_b = r.sum() * inv_n;
}

/// Full-batch gradient descent from zero weights. Single-class data is legal.
template <typename Scalar>
LogisticModelT<Scalar> fit_logistic(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                                    std::span<const Label> labels, const LogisticParams& prm = {}) {
  if (X.rows() == 0) throw std::invalid_argument("logistic: empty training set");
  if (X.cols() == 0) throw std::invalid_argument("logistic: zero-dimensional features");
  if (static_cast<std::size_t>(X.rows()) != labels.size())
    throw std::invalid_argument("logistic: label count mismatch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y(X.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = labels[static_cast<std::size_t>(i)] == Label::Positive;

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(X.cols());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gw(X.cols());
  Scalar b = 0, gb = 0;
  const auto lr = static_cast<Scalar>(prm.learning_rate);
  const auto l2 = static_cast<Scalar>(prm.l2);
  for (int e = 0; e < prm.epochs; ++e) {
    logistic_gradient<Scalar>(X, y, w, b, l2, gw, gb);
    w -= lr * gw;
    b -= lr * gb;
  }
  if (!w.allFinite() || !std::isfinite(b)) throw std::runtime_error("logistic: training diverged");
  return LogisticModelT<Scalar>(std::move(w), b);
}

}  // namespace poal
