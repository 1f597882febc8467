#include "matchbandits/oracle.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace matchbandits {

MatchingDistribution::MatchingDistribution(std::vector<WeightedMatching> support) : support_(std::move(support)) {
  if (support_.empty()) throw Error("matching distribution needs a nonempty support");
  double total = 0.0;
  for (const auto& w : support_) {
    if (!(w.probability >= 0.0)) throw Error("negative probability in matching distribution");
    total += w.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error("matching distribution probabilities sum to " + std::to_string(total));
}

Vector MatchingDistribution::expected_utilities(const UtilityMatrix& u) const {
  Vector out = Vector::Zero(u.rows());
  for (const auto& w : support_) out += w.probability * w.matching.utilities(u);
  return out;
}

const Matching& MatchingDistribution::sample(RandomStream& rng) const {
  const double r = rng.uniform();
  double acc = 0.0;
  for (const auto& w : support_) {
    acc += w.probability;
    if (r < acc) return w.matching;
  }
  return support_.back().matching;
}

int replication_factor(int n_players) {
  if (n_players < 1) throw DimensionError("replication factor needs at least one player");
  // floor(log2 N) = bit_width(N) - 1
  return static_cast<int>(std::bit_width(static_cast<unsigned>(n_players))) + 1;
}

MatchingDistribution approx_oracle(const UtilityMatrix& u, const ArmPreferences& prefs, double tolerance,
                                   int replication) {
  if (replication < 1) throw DimensionError("replication must be at least 1");
  if (!(tolerance >= 0.0)) throw DimensionError("tolerance must be nonnegative");
  if (u.rows() != prefs.n_players() || u.cols() != prefs.n_arms()) throw DimensionError("utility/preference shape mismatch");
  const Eigen::Index n = u.rows();
  const Eigen::Index k = u.cols();

  UtilityMatrix enlarged(n, k * replication);
  for (int c = 0; c < replication; ++c) {
    enlarged.middleCols(c * k, k) = u.array() - c * tolerance;
  }
  const Matching joint = deferred_acceptance(enlarged, prefs.replicated(replication));

  std::vector<WeightedMatching> support;
  support.reserve(static_cast<std::size_t>(replication));
  const double weight = 1.0 / replication;
  for (int c = 0; c < replication; ++c) {
    Matching mu(static_cast<int>(n));
    for (int p = 0; p < n; ++p) {
      const int held = joint.arm(p);
      if (held != kUnmatched && held / k == c) mu.assign(p, static_cast<int>(held % k));
    }
    support.push_back({std::move(mu), weight});
  }
  return MatchingDistribution(std::move(support));
}

MatchingDistribution oracle_for_uncertainty(const UtilityMatrix& u_hat, const ArmPreferences& prefs, double gamma,
                                            double eps) {
  if (!(gamma >= 0.0) || !(eps >= 0.0)) throw DimensionError("gamma and eps must be nonnegative");
  return approx_oracle(u_hat, prefs, 2.0 * gamma + eps, replication_factor(static_cast<int>(u_hat.rows())));
}

}  // namespace matchbandits
