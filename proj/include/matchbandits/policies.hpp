#pragma once

#include "matchbandits/estimation.hpp"
#include "matchbandits/market.hpp"
#include "matchbandits/oracle.hpp"
#include "matchbandits/random.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace matchbandits {

/// kOfflineOracle is the full-information baseline from the regret module; it is
/// not built by make_policy.
enum class PolicyKind { kEtc, kBatchedEtc, kBarb, kAdeco, kOfflineOracle };

/// Which adjacent gaps of a sorted estimated row enter the overlap test:
/// the first min(N, K-1) (top-(N+1) arms) or all K-1.
enum class GapScope { kTopN, kAllArms };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kBarb;
  long horizon = 100000;
  double ridge = 1.0;
  /// Confidence radius; computed from the market bounds when unset.
  std::optional<double> eta;
  /// Failure probability for eta; defaults to T^-2 (BARB) or T^-1 (AdECO).
  std::optional<double> delta_conf;
  /// BARB: initial candidate gap.
  double initial_gap = 0.5;
  /// ETC: exploration length h.
  long explore_length = 5000;
  /// Batched-ETC: first batch's exploration length.
  long initial_explore_length = 100;
  /// AdECO: gap parameter, defaults to T^{-1/3}.
  std::optional<double> gap;
  /// AdECO: instability tolerance, defaults to gap / 2.
  std::optional<double> tolerance;
  /// Defaults to kTopN for the batched policies and kAllArms for AdECO.
  std::optional<GapScope> gap_scope;
  /// Seeds the policy's own random stream (AdECO oracle sampling).
  std::uint64_t seed = 0;
};

enum class Phase { kExplore, kExploitGs, kExploitOracle, kCommit };

std::string_view to_string(Phase phase);

struct StepDiagnostics {
  /// Per-player max_j ||x_j||_{V_i^{-1}}; empty when the policy did not compute norms.
  std::vector<double> max_inverse_norm;
  /// Current candidate gap (BARB), CI width (Batched-ETC) or gap parameter (AdECO).
  double gap = 0.0;
  long overlap_count = 0;
  int batch = 1;
  bool overlap = false;
  int support_size = 0;
};

struct PolicyStep {
  long round = 0;  // 1-based
  Matching chosen;
  Phase phase = Phase::kExplore;
  StepDiagnostics diagnostics;
};

/// Noisy reward of matching `player` to `arm` in the current round.
using Feedback = std::function<double(int player, int arm)>;

class Policy {
 public:
  virtual ~Policy() = default;

  /// Chooses the round's matching. Calls `feedback` only for pairs it matches
  /// and learns from.
  virtual PolicyStep step(const ContextSet& contexts, const Feedback& feedback) = 0;

  virtual PolicyKind kind() const = 0;

  long rounds_played() const noexcept { return round_; }

 protected:
  long round_ = 0;
};

/// Per-batch log for the batched policies.
struct BatchRecord {
  int batch = 1;
  double gap = 0.0;
  long start_round = 1;
  long explore_rounds = 0;
  long exploit_rounds = 0;
  long overlap_rounds = 0;
};

struct BarbState {
  int batch = 1;
  double candidate_gap = 0.5;
  double threshold = 0.0;  // candidate_gap / eta
  long overlap_counter = 0;
  std::vector<GramState> grams;
  std::vector<BatchRecord> batches;
};

/// Batched adaptive regret balancing for stochastic contexts.
class Barb final : public Policy {
 public:
  Barb(MarketView market, const PolicyConfig& config);
  /// Starts from a prepared state (e.g. planted estimates) in batch `state.batch`.
  Barb(MarketView market, const PolicyConfig& config, BarbState state);

  PolicyStep step(const ContextSet& contexts, const Feedback& feedback) override;
  PolicyKind kind() const override { return PolicyKind::kBarb; }

  const BarbState& state() const noexcept { return state_; }
  double eta() const noexcept { return eta_; }

  /// 3 log T / (16 gap^2); a batch ends once the overlap counter exceeds it.
  static double overlap_limit(double horizon, double gap);

 private:
  void start_batch(double gap);

  MarketView market_;
  PolicyConfig config_;
  double eta_;
  GapScope scope_;
  BarbState state_;
};

struct AdecoState {
  double gap = 0.0;
  double tolerance = 0.0;
  double threshold = 0.0;  // (gap - tolerance) / (4 eta)
  std::vector<GramState> grams;
  long explore_rounds = 0;
  long gs_rounds = 0;
  long oracle_rounds = 0;
};

/// Adaptive explore / choose-oracle policy for adversarial contexts.
class Adeco final : public Policy {
 public:
  Adeco(MarketView market, const PolicyConfig& config);
  Adeco(MarketView market, const PolicyConfig& config, AdecoState state);

  PolicyStep step(const ContextSet& contexts, const Feedback& feedback) override;
  PolicyKind kind() const override { return PolicyKind::kAdeco; }

  const AdecoState& state() const noexcept { return state_; }
  double eta() const noexcept { return eta_; }
  /// gamma = (gap - tolerance) / 4.
  double uncertainty_radius() const noexcept { return (state_.gap - state_.tolerance) / 4.0; }

 private:
  MarketView market_;
  PolicyConfig config_;
  double eta_;
  GapScope scope_;
  AdecoState state_;
  RandomStream rng_;
};

struct EtcState {
  std::vector<GramState> grams;
};

/// Explore-then-commit: round-robin exploration for h rounds, then deferred
/// acceptance on the frozen estimates.
class Etc final : public Policy {
 public:
  Etc(MarketView market, const PolicyConfig& config);

  PolicyStep step(const ContextSet& contexts, const Feedback& feedback) override;
  PolicyKind kind() const override { return PolicyKind::kEtc; }

  const EtcState& state() const noexcept { return state_; }

 private:
  MarketView market_;
  PolicyConfig config_;
  EtcState state_;
};

struct BatchedEtcState {
  int batch = 1;
  long explore_length = 100;  // T_k
  double ci_width = 0.0;      // sqrt(log T / T_k)
  long overlap_counter = 0;
  long round_in_batch = 0;
  std::vector<GramState> grams;
  std::vector<BatchRecord> batches;
};

/// Explore-then-commit in batches whose exploration length doubles whenever
/// the exploitation phase sees too many overlapping confidence intervals.
class BatchedEtc final : public Policy {
 public:
  BatchedEtc(MarketView market, const PolicyConfig& config);

  PolicyStep step(const ContextSet& contexts, const Feedback& feedback) override;
  PolicyKind kind() const override { return PolicyKind::kBatchedEtc; }

  const BatchedEtcState& state() const noexcept { return state_; }

 private:
  void start_batch(long explore_length);

  MarketView market_;
  PolicyConfig config_;
  GapScope scope_;
  BatchedEtcState state_;
};

std::unique_ptr<Policy> make_policy(const MarketView& market, const PolicyConfig& config);

/// Confidence radius the policy would use for this market and config.
double policy_eta(const MarketView& market, const PolicyConfig& config);

/// Smallest adjacent gap among the first `count` gaps of `row` sorted in
/// decreasing order; +infinity when count == 0.
double min_sorted_gap(const Eigen::Ref<const Vector>& row, int count);

/// Number of adjacent gaps inspected per row for the given scope.
int gap_count(GapScope scope, int n_players, int n_arms);

/// Per-batch exploration cap eta^2 N d log((T + d lambda) / (d lambda)) / gap^2.
double exploration_budget(double eta, int n_players, int dim, double horizon, double ridge, double gap);

/// Round-robin exploration assignment: player i takes arm (i + t) mod K.
Matching round_robin_matching(int n_players, int n_arms, long t);

}  // namespace matchbandits
