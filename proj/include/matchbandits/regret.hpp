#pragma once

#include "matchbandits/market.hpp"
#include "matchbandits/oracle.hpp"
#include "matchbandits/policies.hpp"
#include "matchbandits/random.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace matchbandits {

/// U*_i - U(i, chosen(i)) with U* the player-optimal stable share.
Vector stable_regret_increment(const UtilityMatrix& u, const ArmPreferences& prefs, const Matching& chosen);

/// Benchmark of the approximate regret: U*_i when delta_min(U) > gap, otherwise
/// alpha * U^eps_i (best utility over eps-stable matchings). A single arm counts
/// as the large-gap regime. Throws
/// EnumerationLimitError in the small-gap regime when the market is too large.
Vector approx_benchmark(const UtilityMatrix& u, const ArmPreferences& prefs, double gap, double eps, double alpha);

Vector approx_regret_increment(const UtilityMatrix& u, const ArmPreferences& prefs, const Matching& chosen,
                               double gap, double eps, double alpha);

enum class RegretMode { kStable, kApproximate };

struct RegretSpec {
  RegretMode mode = RegretMode::kStable;
  /// Approximate mode only; gap defaults to T^{-1/3}, tolerance to gap / 2 and
  /// alpha to 1 / floor(log2 N + 2).
  std::optional<double> gap;
  std::optional<double> tolerance;
  std::optional<double> alpha;
};

/// Regime of one ledger round.
enum class RegimeFlag {
  kLargeGap = 0,
  kSmallGap = 1,
  /// The benchmark was intractable; benchmark and regret are NaN from here on.
  kComparisonOnly = 2,
};

/// Per-round, per-player accounting for one run.
class RegretLedger {
 public:
  RegretLedger() = default;
  RegretLedger(int n_players, std::uint64_t stream_id);

  /// `benchmark` may hold NaN entries (comparison-only rounds).
  void record(const Vector& benchmark, const Vector& expected, const Vector& sampled, double delta_min,
              RegimeFlag flag, Phase phase);

  int n_players() const noexcept { return n_players_; }
  long rounds() const noexcept { return static_cast<long>(flags_.size()); }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Cumulative values after `round` (1-based) rounds.
  double cumulative_benchmark(long round, int player) const { return at(cum_benchmark_, round, player); }
  double cumulative_expected(long round, int player) const { return at(cum_expected_, round, player); }
  double cumulative_sampled(long round, int player) const { return at(cum_sampled_, round, player); }
  double cumulative_regret(long round, int player) const {
    return cumulative_benchmark(round, player) - cumulative_expected(round, player);
  }
  /// max over players of the cumulative regret after `round` rounds.
  double max_regret(long round) const;

  double delta_min(long round) const { return delta_min_.at(static_cast<std::size_t>(round - 1)); }
  RegimeFlag flag(long round) const { return flags_.at(static_cast<std::size_t>(round - 1)); }
  Phase phase(long round) const { return phases_.at(static_cast<std::size_t>(round - 1)); }

  /// Columns round, player, benchmark, expected_reward, regret, regime_flag,
  /// phase_tag with cumulative values. Players are 1-based.
  void write_csv(std::ostream& out) const;

 private:
  double at(const std::vector<double>& v, long round, int player) const {
    return v.at(static_cast<std::size_t>(round - 1) * static_cast<std::size_t>(n_players_) +
                static_cast<std::size_t>(player));
  }

  int n_players_ = 0;
  std::uint64_t stream_id_ = 0;
  std::vector<double> cum_benchmark_;
  std::vector<double> cum_expected_;
  std::vector<double> cum_sampled_;
  std::vector<double> delta_min_;
  std::vector<RegimeFlag> flags_;
  std::vector<Phase> phases_;
};

/// T x N matrix: entry (t, i) is run_a's minus run_b's cumulative expected reward
/// of player i after t + 1 rounds. Throws when horizons, player counts or
/// environment streams differ.
Matrix oracle_reward_comparison(const RegretLedger& run_a, const RegretLedger& run_b);

/// Baseline that sees the true utilities: deferred acceptance when every row's
/// adjacent sorted gaps exceed (gap + tolerance) / 2, otherwise a draw from the
/// approximation oracle with tolerance `tolerance`.
class OfflineOracle final : public Policy {
 public:
  OfflineOracle(MarketInstance market, double gap, double tolerance, std::uint64_t seed);

  PolicyStep step(const ContextSet& contexts, const Feedback& feedback) override;
  PolicyKind kind() const override { return PolicyKind::kOfflineOracle; }

 private:
  MarketInstance market_;
  double gap_;
  double tolerance_;
  RandomStream rng_;
};

}  // namespace matchbandits
