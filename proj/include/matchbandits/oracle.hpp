#pragma once

#include "matchbandits/market.hpp"
#include "matchbandits/random.hpp"

#include <vector>

namespace matchbandits {

struct WeightedMatching {
  Matching matching;
  double probability = 0.0;
};

/// Finite mixture of matchings. Probabilities are nonnegative and sum to 1.
class MatchingDistribution {
 public:
  MatchingDistribution() = default;
  explicit MatchingDistribution(std::vector<WeightedMatching> support);

  const std::vector<WeightedMatching>& support() const noexcept { return support_; }
  std::size_t size() const noexcept { return support_.size(); }

  /// Exact E[U(p, mu(p))] per player (unmatched contributes 0).
  Vector expected_utilities(const UtilityMatrix& u) const;

  const Matching& sample(RandomStream& rng) const;

 private:
  std::vector<WeightedMatching> support_;
};

/// floor(log2 N + 2), computed in integer arithmetic.
int replication_factor(int n_players);

/// Arm-replication oracle for approximately player-optimal stable matchings.
///
/// Each arm is copied `replication` times; copy c (0-based) of arm a gets player
/// utility U(p, a) - c * tolerance and arm a's ranking. Copies are laid out
/// copy-major, so equal penalized utilities go to the lower copy, then the lower
/// arm. Player-proposing deferred acceptance runs on the enlarged market, and
/// matching c assigns arm a to whoever holds copy c of a. Each of the
/// `replication` matchings has probability 1 / replication.
MatchingDistribution approx_oracle(const UtilityMatrix& u, const ArmPreferences& prefs, double tolerance,
                                   int replication);

/// Oracle call for a rectangular uncertainty set of radius `gamma` around `u_hat`:
/// approx_oracle with tolerance 2 * gamma + eps and replication floor(log2 N + 2).
MatchingDistribution oracle_for_uncertainty(const UtilityMatrix& u_hat, const ArmPreferences& prefs, double gamma,
                                            double eps);

}  // namespace matchbandits
