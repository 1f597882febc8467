#pragma once

#include "matchbandits/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace matchbandits {

/// Fixed, strict arm-side rankings over players.
///
/// Rankings are stored both as lists (most preferred first) and as a rank
/// table so that `prefers` is O(1).
class ArmPreferences {
 public:
  ArmPreferences() = default;
  ArmPreferences(std::vector<std::vector<int>> rankings, int n_players);

  /// Every arm ranks players 0, 1, ..., N-1 in that order.
  static ArmPreferences identity(int n_arms, int n_players);

  int n_arms() const noexcept { return static_cast<int>(rankings_.size()); }
  int n_players() const noexcept { return n_players_; }

  int rank(int arm, int player) const { return rank_[static_cast<std::size_t>(arm) * n_players_ + player]; }
  bool prefers(int arm, int player, int other) const { return rank(arm, player) < rank(arm, other); }
  const std::vector<int>& ranking(int arm) const { return rankings_.at(static_cast<std::size_t>(arm)); }
  const std::vector<std::vector<int>>& rankings() const noexcept { return rankings_; }

  /// Arm set of size K * copies, copy-major: copy c of arm a has index c * K + a
  /// and inherits arm a's ranking.
  ArmPreferences replicated(int copies) const;

  friend bool operator==(const ArmPreferences&, const ArmPreferences&) = default;

 private:
  std::vector<std::vector<int>> rankings_;
  std::vector<int> rank_;
  int n_players_ = 0;
};

/// Partial injective assignment of players to arms; kUnmatched marks a free player.
class Matching {
 public:
  Matching() = default;
  explicit Matching(int n_players) : arm_of_(static_cast<std::size_t>(n_players), kUnmatched) {}
  explicit Matching(std::vector<int> arm_of_player) : arm_of_(std::move(arm_of_player)) {}

  int n_players() const noexcept { return static_cast<int>(arm_of_.size()); }
  int arm(int player) const { return arm_of_.at(static_cast<std::size_t>(player)); }
  bool is_matched(int player) const { return arm(player) != kUnmatched; }
  void assign(int player, int arm) { arm_of_.at(static_cast<std::size_t>(player)) = arm; }
  const std::vector<int>& assignment() const noexcept { return arm_of_; }

  /// Number of matched players.
  int size() const;

  /// True when every matched arm id lies in [0, n_arms) and no arm is used twice.
  bool is_valid(int n_arms) const;

  /// Inverse map arm -> player (kUnmatched for free arms). Throws on invalid matchings.
  std::vector<int> player_of_arm(int n_arms) const;

  /// U[i][mu(i)] per player, 0 for unmatched players.
  Vector utilities(const UtilityMatrix& u) const;

  friend bool operator==(const Matching&, const Matching&) = default;
  friend auto operator<=>(const Matching& a, const Matching& b) { return a.arm_of_ <=> b.arm_of_; }

 private:
  std::vector<int> arm_of_;
};

struct Bounds {
  double b_x = 1.0;
  double b_theta = 1.0;
  double noise_r = 0.0;
};

/// What the platform knows about a market: sizes, arm rankings, and bounds.
/// Policies are built from this view and never see the latent parameters.
struct MarketView {
  int n_players = 0;
  int n_arms = 0;
  int dim = 0;
  ArmPreferences arm_prefs;
  Bounds bounds;
};

/// Static market description including the latent player parameters.
class MarketInstance {
 public:
  MarketInstance(ArmPreferences arm_prefs, Matrix theta, Bounds bounds);

  int n_players() const noexcept { return static_cast<int>(theta_.rows()); }
  int n_arms() const noexcept { return arm_prefs_.n_arms(); }
  int dim() const noexcept { return static_cast<int>(theta_.cols()); }
  const ArmPreferences& arm_prefs() const noexcept { return arm_prefs_; }
  /// N x d; row i is theta_i.
  const Matrix& theta() const noexcept { return theta_; }
  const Bounds& bounds() const noexcept { return bounds_; }

  /// B_y = 2 * B_theta * B_x.
  double reward_bound() const noexcept { return 2.0 * bounds_.b_theta * bounds_.b_x; }

  MarketView view() const;

 private:
  ArmPreferences arm_prefs_;
  Matrix theta_;
  Bounds bounds_;
};

/// U = theta * contexts^T.
UtilityMatrix compute_utilities(const MarketInstance& market, const ContextSet& contexts);

/// Pairs (player, arm) that block `mu` with tolerance `epsilon`: the arm is free or
/// prefers the player to its partner, and U[i][j] > U[i][mu(i)] + epsilon, where an
/// unmatched player's reference utility is 0.
std::vector<std::pair<int, int>> blocking_pairs(const UtilityMatrix& u, const ArmPreferences& prefs,
                                                const Matching& mu, double epsilon = 0.0);

bool is_stable(const UtilityMatrix& u, const ArmPreferences& prefs, const Matching& mu,
               double epsilon = 0.0);

/// Player-proposing deferred acceptance. Each player's list orders arms by
/// decreasing utility with ties broken toward the lower arm index.
struct ProposalTrace {
  std::vector<int> proposals;  // per player
  long total = 0;
};

Matching deferred_acceptance(const UtilityMatrix& u, const ArmPreferences& prefs,
                             ProposalTrace* trace = nullptr);

/// Arms of row `player` sorted by decreasing utility, lower index first on ties.
std::vector<int> preference_order(const UtilityMatrix& u, int player);

/// True when no row of `u` holds two equal entries.
bool rows_tie_free(const UtilityMatrix& u);

inline constexpr int kEnumerationLimit = 8;

/// Every (possibly partial) matching with no epsilon-blocking pair, in lexicographic
/// order of assignment vectors. Requires N, K <= kEnumerationLimit.
std::vector<Matching> enumerate_stable_set(const UtilityMatrix& u, const ArmPreferences& prefs,
                                           double epsilon = 0.0);

/// Entry i = max over the epsilon-stable set of U[i][mu(i)].
///
/// With epsilon == 0, tie-free rows and nonnegative utilities the player-optimal
/// stable matching attains every maximum, so deferred acceptance is used and no
/// size limit applies. Otherwise the stable set is enumerated.
Vector optimal_stable_share(const UtilityMatrix& u, const ArmPreferences& prefs, double epsilon = 0.0);

/// Maximum-cardinality matching on a bipartite graph given as (player, arm) edges.
/// Augmenting paths are searched player by player in index order, following each
/// player's edges in insertion order, so the result is deterministic.
Matching max_cardinality_matching(int n_players, int n_arms, std::span<const std::pair<int, int>> edges);

}  // namespace matchbandits
