#include "matchbandits/estimation.hpp"

#include <cmath>
#include <string>

namespace matchbandits {

GramState::GramState(int dim, double ridge)
    : GramState(ridge * Matrix::Identity(dim, dim), Vector::Zero(dim), ridge, 0) {}

GramState::GramState(Matrix gram, Vector response, double ridge, long samples)
    : gram_(std::move(gram)), response_(std::move(response)), ridge_(ridge), samples_(samples) {
  if (!(ridge_ > 0.0)) throw NumericalError("ridge must be positive");
  if (gram_.rows() != gram_.cols() || gram_.rows() != response_.size() || gram_.rows() < 1) {
    throw DimensionError("Gram matrix and response disagree on dimension");
  }
  refactor();
}

GramState GramState::from_moments(Matrix gram, Vector response, double ridge) {
  if (!gram.allFinite() || !response.allFinite()) throw NumericalError("non-finite moments");
  if (!gram.isApprox(gram.transpose(), 1e-12)) throw NumericalError("Gram matrix is not symmetric");
  return GramState(std::move(gram), std::move(response), ridge, 0);
}

void GramState::refactor() {
  cholesky_.compute(gram_);
  if (cholesky_.info() != Eigen::Success) throw NumericalError("Gram matrix is not positive definite");
  estimate_ = cholesky_.solve(response_);
}

void GramState::update(const Eigen::Ref<const Vector>& x, double y) {
  if (x.size() != dim()) {
    throw DimensionError("context has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(dim()));
  }
  if (!x.allFinite() || !std::isfinite(y)) throw NumericalError("non-finite observation");
  gram_.noalias() += x * x.transpose();
  response_.noalias() += y * x;
  ++samples_;
  refactor();
}

double GramState::inverse_norm(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) throw DimensionError("context dimension mismatch");
  // ||x||_{V^-1} = ||L^{-1} x|| for V = L L^T.
  const Vector z = cholesky_.matrixL().solve(x);
  return z.norm();
}

double confidence_radius(const RadiusInputs& in) {
  if (!(in.horizon > 0 && in.dim > 0 && in.b_x > 0 && in.b_theta > 0 && in.noise_r >= 0 && in.ridge > 0 &&
        in.delta > 0 && in.delta <= 1)) {
    throw NumericalError("confidence radius inputs out of range");
  }
  const double log_term = std::log((1.0 + in.horizon * in.b_x * in.b_x / in.ridge) / in.delta);
  return in.noise_r * std::sqrt(in.dim * log_term) + std::sqrt(in.ridge) * in.b_theta;
}

Matrix estimated_utilities(std::span<const GramState> states, const Matrix& contexts) {
  Matrix out(static_cast<Eigen::Index>(states.size()), contexts.rows());
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].dim() != contexts.cols()) throw DimensionError("context dimension mismatch");
    out.row(static_cast<Eigen::Index>(i)) = (contexts * states[i].estimate()).transpose();
  }
  return out;
}

Matrix inverse_norms(std::span<const GramState> states, const Matrix& contexts) {
  Matrix out(static_cast<Eigen::Index>(states.size()), contexts.rows());
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (Eigen::Index j = 0; j < contexts.rows(); ++j) {
      out(static_cast<Eigen::Index>(i), j) = states[i].inverse_norm(contexts.row(j).transpose());
    }
  }
  return out;
}

}  // namespace matchbandits
