#include "matchbandits/gap_diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace matchbandits {

namespace {

double gap_bound(double horizon, double x) { return std::log(horizon) / (horizon * x * x); }

}  // namespace

double empirical_cdf(const std::vector<double>& sorted, double x, bool strict) {
  if (sorted.empty()) return 0.0;
  const auto it = strict ? std::lower_bound(sorted.begin(), sorted.end(), x)
                         : std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double GapDiagnostics::cdf(double x) const { return empirical_cdf(delta_min_samples, x); }

double min_gap_from_samples(const std::vector<double>& sorted, double horizon) {
  if (sorted.empty()) throw DimensionError("no samples");
  if (!(horizon >= 1.0)) throw DimensionError("horizon must be at least 1");
  const double n = static_cast<double>(sorted.size());
  const double log_t = std::log(horizon);
  const double inf = std::numeric_limits<double>::infinity();

  // On (left, right] the strict CDF equals below / n.
  double best = 0.0;
  double left = 0.0;
  std::size_t below = 0;
  while (true) {
    std::size_t next = below;
    while (next < sorted.size() && sorted[next] <= left) ++next;
    below = next;
    const double right = below < sorted.size() ? sorted[below] : inf;
    const double reach = below == 0 ? inf : std::sqrt(log_t * n / (horizon * static_cast<double>(below)));
    if (right > left && reach > left) best = std::max(best, std::min(right, reach));
    if (below == sorted.size()) break;
    left = right;
  }
  return best;
}

std::vector<double> scan_crossings(const std::vector<double>& sorted, double horizon) {
  std::vector<double> out;
  const double lo = std::log(1e-4);
  const double hi = 0.0;
  bool previous_ok = true;
  for (int k = 0; k < kGapGridPoints; ++k) {
    const double x = std::exp(lo + (hi - lo) * k / (kGapGridPoints - 1));
    const bool ok = empirical_cdf(sorted, x, true) - gap_bound(horizon, x) <= 0.0;
    if (previous_ok && !ok) out.push_back(x);
    previous_ok = ok;
  }
  return out;
}

double cdf_crossing(const std::function<double(double)>& cdf, double horizon, double lo, double hi) {
  const auto g = [&](double x) { return cdf(x) - gap_bound(horizon, x); };
  if (g(hi) <= 0.0) return hi;
  if (g(lo) > 0.0) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

GapDiagnostics gap_diagnostics_from_samples(std::vector<double> samples, const Matrix& second_moment,
                                            double horizon) {
  GapDiagnostics out;
  out.horizon = horizon;
  std::sort(samples.begin(), samples.end());
  out.delta_min_samples = std::move(samples);
  out.min_gap = min_gap_from_samples(out.delta_min_samples, horizon);
  out.crossings = scan_crossings(out.delta_min_samples, horizon);
  if (second_moment.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(second_moment, Eigen::EigenvaluesOnly);
    out.eigen_floor = std::max(0.0, eig.eigenvalues().minCoeff());
  }
  for (const double d0 : {1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0}) {
    double num = 0.0;
    double den = 0.0;
    for (int k = 1; k <= 64; ++k) {
      const double x = d0 * k / 64.0;
      num += out.cdf(x) * x;
      den += x * x;
    }
    out.cdf_slopes.push_back({d0, num / den});
  }
  return out;
}

GapDiagnostics estimate_min_gap(const StochasticEnvSpec& env, const MarketInstance& market, double horizon,
                                long n_samples, std::uint64_t seed, Execution exec) {
  if (n_samples < kMinGapSamples) {
    throw ConfigError("n_samples", "need at least " + std::to_string(kMinGapSamples) + " samples");
  }
  validate_env(EnvSpec{env}, market.n_arms(), market.dim(), market.bounds().b_x, "environment");
  GapSampleBatch batch = sample_gap_statistics(env.contexts, market.theta(), market.n_arms(), n_samples, seed, exec);
  return gap_diagnostics_from_samples(std::move(batch.delta_min), batch.second_moment, horizon);
}

}  // namespace matchbandits
