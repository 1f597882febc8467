#include "matchbandits/market.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

namespace matchbandits {

namespace {

void require_shape(const UtilityMatrix& u, const ArmPreferences& prefs) {
  if (u.rows() != prefs.n_players() || u.cols() != prefs.n_arms()) {
    throw DimensionError("utility matrix is " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) +
                         " but preferences cover " + std::to_string(prefs.n_players()) + " players and " +
                         std::to_string(prefs.n_arms()) + " arms");
  }
}

}  // namespace

ArmPreferences::ArmPreferences(std::vector<std::vector<int>> rankings, int n_players)
    : rankings_(std::move(rankings)), n_players_(n_players) {
  if (n_players < 0) throw DimensionError("negative player count");
  rank_.assign(rankings_.size() * static_cast<std::size_t>(n_players), -1);
  for (std::size_t arm = 0; arm < rankings_.size(); ++arm) {
    const auto& order = rankings_[arm];
    if (static_cast<int>(order.size()) != n_players) {
      throw DimensionError("arm " + std::to_string(arm) + " ranks " + std::to_string(order.size()) +
                           " players, expected " + std::to_string(n_players));
    }
    for (int pos = 0; pos < n_players; ++pos) {
      const int player = order[static_cast<std::size_t>(pos)];
      if (player < 0 || player >= n_players) {
        throw DimensionError("arm " + std::to_string(arm) + " ranks unknown player " + std::to_string(player));
      }
      int& slot = rank_[arm * static_cast<std::size_t>(n_players) + static_cast<std::size_t>(player)];
      if (slot != -1) {
        throw DimensionError("arm " + std::to_string(arm) + " ranks player " + std::to_string(player) + " twice");
      }
      slot = pos;
    }
  }
}

ArmPreferences ArmPreferences::identity(int n_arms, int n_players) {
  std::vector<int> order(static_cast<std::size_t>(n_players));
  std::iota(order.begin(), order.end(), 0);
  return ArmPreferences(std::vector<std::vector<int>>(static_cast<std::size_t>(n_arms), order), n_players);
}

ArmPreferences ArmPreferences::replicated(int copies) const {
  std::vector<std::vector<int>> out;
  out.reserve(rankings_.size() * static_cast<std::size_t>(std::max(copies, 0)));
  for (int c = 0; c < copies; ++c) out.insert(out.end(), rankings_.begin(), rankings_.end());
  return ArmPreferences(std::move(out), n_players_);
}

int Matching::size() const {
  return static_cast<int>(std::count_if(arm_of_.begin(), arm_of_.end(), [](int a) { return a != kUnmatched; }));
}

bool Matching::is_valid(int n_arms) const {
  std::vector<char> used(static_cast<std::size_t>(std::max(n_arms, 0)), 0);
  for (int a : arm_of_) {
    if (a == kUnmatched) continue;
    if (a < 0 || a >= n_arms || used[static_cast<std::size_t>(a)]) return false;
    used[static_cast<std::size_t>(a)] = 1;
  }
  return true;
}

std::vector<int> Matching::player_of_arm(int n_arms) const {
  if (!is_valid(n_arms)) throw DimensionError("matching is not injective over " + std::to_string(n_arms) + " arms");
  std::vector<int> out(static_cast<std::size_t>(n_arms), kUnmatched);
  for (int p = 0; p < n_players(); ++p) {
    if (arm_of_[static_cast<std::size_t>(p)] != kUnmatched) out[static_cast<std::size_t>(arm_of_[static_cast<std::size_t>(p)])] = p;
  }
  return out;
}

Vector Matching::utilities(const UtilityMatrix& u) const {
  if (u.rows() != n_players()) throw DimensionError("matching and utility matrix disagree on player count");
  Vector out = Vector::Zero(n_players());
  for (int p = 0; p < n_players(); ++p) {
    const int a = arm(p);
    if (a != kUnmatched) out[p] = u(p, a);
  }
  return out;
}

MarketInstance::MarketInstance(ArmPreferences arm_prefs, Matrix theta, Bounds bounds)
    : arm_prefs_(std::move(arm_prefs)), theta_(std::move(theta)), bounds_(bounds) {
  const int n = static_cast<int>(theta_.rows());
  if (n < 1 || theta_.cols() < 1) throw DimensionError("market needs at least one player and one dimension");
  if (arm_prefs_.n_players() != n) throw DimensionError("arm preferences and theta disagree on player count");
  if (arm_prefs_.n_arms() < n) throw DimensionError("market requires n_players <= n_arms");
  if (!(bounds_.b_x > 0.0) || !(bounds_.b_theta > 0.0) || !(bounds_.noise_r >= 0.0)) {
    throw DimensionError("bounds must satisfy b_x > 0, b_theta > 0, noise_r >= 0");
  }
  if (!theta_.allFinite()) throw NumericalError("theta has non-finite entries");
  for (int i = 0; i < n; ++i) {
    if (theta_.row(i).norm() > bounds_.b_theta * (1.0 + 1e-12)) {
      throw DimensionError("||theta_" + std::to_string(i) + "|| exceeds b_theta");
    }
  }
}

MarketView MarketInstance::view() const {
  return MarketView{n_players(), n_arms(), dim(), arm_prefs_, bounds_};
}

UtilityMatrix compute_utilities(const MarketInstance& market, const ContextSet& contexts) {
  if (contexts.rows() != market.n_arms() || contexts.cols() != market.dim()) {
    throw DimensionError("context set is " + std::to_string(contexts.rows()) + "x" + std::to_string(contexts.cols()) +
                         ", expected " + std::to_string(market.n_arms()) + "x" + std::to_string(market.dim()));
  }
  return market.theta() * contexts.transpose();
}

std::vector<std::pair<int, int>> blocking_pairs(const UtilityMatrix& u, const ArmPreferences& prefs,
                                                const Matching& mu, double epsilon) {
  require_shape(u, prefs);
  const int n = static_cast<int>(u.rows());
  const int k = static_cast<int>(u.cols());
  const auto holder = mu.player_of_arm(k);
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) {
    const int current = mu.arm(i);
    const double reference = current == kUnmatched ? 0.0 : u(i, current);
    for (int j = 0; j < k; ++j) {
      if (j == current) continue;
      const int h = holder[static_cast<std::size_t>(j)];
      const bool arm_agrees = h == kUnmatched || prefs.prefers(j, i, h);
      if (arm_agrees && u(i, j) > reference + epsilon) out.emplace_back(i, j);
    }
  }
  return out;
}

bool is_stable(const UtilityMatrix& u, const ArmPreferences& prefs, const Matching& mu, double epsilon) {
  return blocking_pairs(u, prefs, mu, epsilon).empty();
}

std::vector<int> preference_order(const UtilityMatrix& u, int player) {
  std::vector<int> order(static_cast<std::size_t>(u.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u(player, a) > u(player, b); });
  return order;
}

bool rows_tie_free(const UtilityMatrix& u) {
  std::vector<double> row(static_cast<std::size_t>(u.cols()));
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) row[static_cast<std::size_t>(j)] = u(i, j);
    std::sort(row.begin(), row.end());
    if (std::adjacent_find(row.begin(), row.end()) != row.end()) return false;
  }
  return true;
}

Matching deferred_acceptance(const UtilityMatrix& u, const ArmPreferences& prefs, ProposalTrace* trace) {
  require_shape(u, prefs);
  if (!u.allFinite()) throw NumericalError("deferred acceptance on non-finite utilities");
  const int n = static_cast<int>(u.rows());
  const int k = static_cast<int>(u.cols());

  std::vector<std::vector<int>> lists(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) lists[static_cast<std::size_t>(i)] = preference_order(u, i);

  std::vector<std::size_t> next(static_cast<std::size_t>(n), 0);
  std::vector<int> holder(static_cast<std::size_t>(k), kUnmatched);
  std::vector<int> proposals(static_cast<std::size_t>(n), 0);
  std::deque<int> free_players(static_cast<std::size_t>(n));
  std::iota(free_players.begin(), free_players.end(), 0);

  while (!free_players.empty()) {
    const int p = free_players.front();
    free_players.pop_front();
    auto& cursor = next[static_cast<std::size_t>(p)];
    const auto& list = lists[static_cast<std::size_t>(p)];
    if (cursor >= list.size()) continue;  // exhausted, stays unmatched
    const int a = list[cursor++];
    ++proposals[static_cast<std::size_t>(p)];
    int& h = holder[static_cast<std::size_t>(a)];
    if (h == kUnmatched) {
      h = p;
    } else if (prefs.prefers(a, p, h)) {
      free_players.push_front(h);
      h = p;
    } else {
      free_players.push_front(p);
    }
  }

  Matching mu(n);
  for (int a = 0; a < k; ++a) {
    if (holder[static_cast<std::size_t>(a)] != kUnmatched) mu.assign(holder[static_cast<std::size_t>(a)], a);
  }
  if (trace != nullptr) {
    trace->total = std::accumulate(proposals.begin(), proposals.end(), 0L);
    trace->proposals = std::move(proposals);
  }
  return mu;
}

namespace {

struct StableSetSearch {
  const UtilityMatrix& u;
  const ArmPreferences& prefs;
  double epsilon;
  int n;
  int k;
  std::vector<int> assignment;
  std::vector<char> used;
  std::vector<Matching> found;

  void recurse(int player) {
    if (player == n) {
      Matching mu(assignment);
      if (is_stable(u, prefs, mu, epsilon)) found.push_back(std::move(mu));
      return;
    }
    assignment[static_cast<std::size_t>(player)] = kUnmatched;
    recurse(player + 1);
    for (int a = 0; a < k; ++a) {
      if (used[static_cast<std::size_t>(a)]) continue;
      used[static_cast<std::size_t>(a)] = 1;
      assignment[static_cast<std::size_t>(player)] = a;
      recurse(player + 1);
      used[static_cast<std::size_t>(a)] = 0;
    }
    assignment[static_cast<std::size_t>(player)] = kUnmatched;
  }
};

}  // namespace

std::vector<Matching> enumerate_stable_set(const UtilityMatrix& u, const ArmPreferences& prefs, double epsilon) {
  require_shape(u, prefs);
  if (u.rows() > kEnumerationLimit || u.cols() > kEnumerationLimit) {
    throw EnumerationLimitError("stable-set enumeration is limited to " + std::to_string(kEnumerationLimit) +
                                " players and arms, got " + std::to_string(u.rows()) + "x" +
                                std::to_string(u.cols()));
  }
  if (!(epsilon >= 0.0)) throw DimensionError("epsilon must be nonnegative");
  StableSetSearch search{u, prefs, epsilon, static_cast<int>(u.rows()), static_cast<int>(u.cols()),
                         std::vector<int>(static_cast<std::size_t>(u.rows()), kUnmatched),
                         std::vector<char>(static_cast<std::size_t>(u.cols()), 0), {}};
  search.recurse(0);
  return std::move(search.found);
}

Vector optimal_stable_share(const UtilityMatrix& u, const ArmPreferences& prefs, double epsilon) {
  require_shape(u, prefs);
  if (epsilon == 0.0 && (u.array() >= 0.0).all() && rows_tie_free(u)) {
    return deferred_acceptance(u, prefs).utilities(u);
  }
  const auto stable = enumerate_stable_set(u, prefs, epsilon);
  Vector best = Vector::Constant(u.rows(), -std::numeric_limits<double>::infinity());
  for (const auto& mu : stable) best = best.cwiseMax(mu.utilities(u));
  return best;
}

Matching max_cardinality_matching(int n_players, int n_arms, std::span<const std::pair<int, int>> edges) {
  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n_players));
  for (const auto& [p, a] : edges) {
    if (p < 0 || p >= n_players || a < 0 || a >= n_arms) throw DimensionError("edge endpoint out of range");
    adjacency[static_cast<std::size_t>(p)].push_back(a);
  }
  std::vector<int> holder(static_cast<std::size_t>(n_arms), kUnmatched);
  std::vector<int> visit_stamp(static_cast<std::size_t>(n_arms), -1);

  // Kuhn's augmenting-path search; recursion depth is bounded by n_players.
  auto augment = [&](auto&& self, int p, int stamp) -> bool {
    for (int a : adjacency[static_cast<std::size_t>(p)]) {
      if (visit_stamp[static_cast<std::size_t>(a)] == stamp) continue;
      visit_stamp[static_cast<std::size_t>(a)] = stamp;
      const int h = holder[static_cast<std::size_t>(a)];
      if (h == kUnmatched || self(self, h, stamp)) {
        holder[static_cast<std::size_t>(a)] = p;
        return true;
      }
    }
    return false;
  };
  for (int p = 0; p < n_players; ++p) augment(augment, p, p);

  Matching mu(n_players);
  for (int a = 0; a < n_arms; ++a) {
    if (holder[static_cast<std::size_t>(a)] != kUnmatched) mu.assign(holder[static_cast<std::size_t>(a)], a);
  }
  return mu;
}

}  // namespace matchbandits
