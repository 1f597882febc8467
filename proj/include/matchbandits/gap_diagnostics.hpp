#pragma once

#include "matchbandits/environments.hpp"
#include "matchbandits/parallel.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace matchbandits {

struct CdfSlope {
  double delta0 = 0.0;
  /// Least-squares c in F(x) ~ c x over x in (0, delta0].
  double slope = 0.0;
};

struct GapDiagnostics {
  double horizon = 0.0;
  /// Sorted ascending.
  std::vector<double> delta_min_samples;
  /// sup { x : P(delta_min < x) <= log T / (T x^2) } under the empirical law.
  double min_gap = 0.0;
  /// Grid points where the scan saw g(x) = F(x-) - log T / (T x^2) turn positive.
  std::vector<double> crossings;
  /// Smallest eigenvalue of the mean of x x^T over sampled contexts.
  double eigen_floor = 0.0;
  std::vector<CdfSlope> cdf_slopes;

  /// Fraction of samples <= x.
  double cdf(double x) const;
};

inline constexpr long kMinGapSamples = 10000;
inline constexpr int kGapGridPoints = 512;

/// Fraction of `sorted` that is <= x (or < x with `strict`).
double empirical_cdf(const std::vector<double>& sorted, double x, bool strict = false);

/// Exact supremum of { x > 0 : F(x-) <= log T / (T x^2) } for the empirical law of
/// `sorted`. F(x-) is piecewise constant between sample values, so each piece is
/// solved in closed form.
double min_gap_from_samples(const std::vector<double>& sorted, double horizon);

/// Points of the 512-point log grid over [1e-4, 1] where g changes from <= 0 to > 0.
std::vector<double> scan_crossings(const std::vector<double>& sorted, double horizon);

/// Bisection for the crossing of a continuous nondecreasing CDF with log T / (T x^2).
double cdf_crossing(const std::function<double(double)>& cdf, double horizon, double lo = 1e-9, double hi = 1.0);

GapDiagnostics gap_diagnostics_from_samples(std::vector<double> samples, const Matrix& second_moment, double horizon);

/// Monte-Carlo diagnostics for a stochastic environment. Needs n_samples >= 10^4.
GapDiagnostics estimate_min_gap(const StochasticEnvSpec& env, const MarketInstance& market, double horizon,
                                long n_samples, std::uint64_t seed, Execution exec = Execution::kParallel);

}  // namespace matchbandits
