#pragma once

#include "matchbandits/types.hpp"

#include <span>

namespace matchbandits {

/// Per-player ridge-regression state.
///
/// Holds the regularized Gram matrix V = ridge * I + sum x x^T, the response
/// b = sum x y and the estimate theta_hat = V^{-1} b. The estimate and the
/// Cholesky factor of V are refreshed on every update.
class GramState {
 public:
  GramState(int dim, double ridge);

  /// State with the given moments; `gram` must be symmetric positive definite.
  static GramState from_moments(Matrix gram, Vector response, double ridge);

  /// Adds one observation (x, y). Rejects non-finite input.
  void update(const Eigen::Ref<const Vector>& x, double y);

  /// sqrt(x^T V^{-1} x).
  double inverse_norm(const Eigen::Ref<const Vector>& x) const;

  /// Estimated utility theta_hat^T x.
  double predict(const Eigen::Ref<const Vector>& x) const { return estimate_.dot(x); }

  int dim() const noexcept { return static_cast<int>(estimate_.size()); }
  double ridge() const noexcept { return ridge_; }
  long samples_used() const noexcept { return samples_; }
  const Matrix& gram() const noexcept { return gram_; }
  const Vector& response() const noexcept { return response_; }
  const Vector& estimate() const noexcept { return estimate_; }

 private:
  GramState(Matrix gram, Vector response, double ridge, long samples);
  void refactor();

  Matrix gram_;
  Vector response_;
  Vector estimate_;
  Eigen::LLT<Matrix> cholesky_;
  double ridge_;
  long samples_ = 0;
};

struct RadiusInputs {
  double horizon = 1.0;  // T
  int dim = 1;           // d
  double b_x = 1.0;
  double b_theta = 1.0;
  double noise_r = 0.0;  // R
  double ridge = 1.0;    // lambda
  double delta = 0.01;   // failure probability
};

/// eta = R sqrt(d log((1 + T B_x^2 / lambda) / delta)) + sqrt(lambda) B_theta.
double confidence_radius(const RadiusInputs& in);

/// U_hat[i][j] = theta_hat_i . x_j.
Matrix estimated_utilities(std::span<const GramState> states, const Matrix& contexts);

/// N x K matrix of ||x_j||_{V_i^{-1}}.
Matrix inverse_norms(std::span<const GramState> states, const Matrix& contexts);

}  // namespace matchbandits
