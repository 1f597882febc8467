#include "matchbandits/policies.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace matchbandits {

namespace {

std::vector<GramState> fresh_grams(const MarketView& market, double ridge) {
  return std::vector<GramState>(static_cast<std::size_t>(market.n_players), GramState(market.dim, ridge));
}

void check_common(const MarketView& market, const PolicyConfig& config) {
  if (market.n_players < 1 || market.n_arms < market.n_players || market.dim < 1) {
    throw DimensionError("policy needs 1 <= N <= K and d >= 1");
  }
  if (config.horizon < 1) throw ConfigError("policy.horizon", "must be at least 1");
  if (!(config.ridge > 0.0)) throw ConfigError("policy.ridge", "must be positive");
  if (config.eta && !(*config.eta > 0.0)) throw ConfigError("policy.eta", "must be positive");
}

void check_contexts(const MarketView& market, const ContextSet& contexts) {
  if (contexts.rows() != market.n_arms || contexts.cols() != market.dim) {
    throw DimensionError("context set must be K x d");
  }
}

void check_grams(const MarketView& market, const std::vector<GramState>& grams) {
  if (static_cast<int>(grams.size()) != market.n_players) throw DimensionError("need one Gram state per player");
  for (const auto& g : grams) {
    if (g.dim() != market.dim) throw DimensionError("Gram state dimension mismatch");
  }
}

struct ExploreOutcome {
  bool explored = false;
  Matching chosen;
};

/// Shared exploration test: every (player, arm) pair whose inverse norm exceeds
/// `threshold` becomes an edge; a maximum-cardinality matching over those edges is
/// played and only its matched players learn.
ExploreOutcome try_explore(const MarketView& market, std::vector<GramState>& grams, const ContextSet& contexts,
                           double threshold, const Feedback& feedback, StepDiagnostics& diag) {
  const Matrix norms = inverse_norms(grams, contexts);
  diag.max_inverse_norm.resize(static_cast<std::size_t>(market.n_players));
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < market.n_players; ++i) {
    diag.max_inverse_norm[static_cast<std::size_t>(i)] = norms.row(i).maxCoeff();
    for (int j = 0; j < market.n_arms; ++j) {
      if (norms(i, j) > threshold) edges.emplace_back(i, j);
    }
  }
  ExploreOutcome out;
  if (edges.empty()) return out;
  out.explored = true;
  out.chosen = max_cardinality_matching(market.n_players, market.n_arms, edges);
  for (int i = 0; i < market.n_players; ++i) {
    const int j = out.chosen.arm(i);
    if (j == kUnmatched) continue;
    grams[static_cast<std::size_t>(i)].update(contexts.row(j).transpose(), feedback(i, j));
  }
  return out;
}

bool any_overlap(const UtilityMatrix& u_hat, int count, double limit) {
  for (Eigen::Index i = 0; i < u_hat.rows(); ++i) {
    if (min_sorted_gap(u_hat.row(i).transpose(), count) <= limit) return true;
  }
  return false;
}

double default_delta(PolicyKind kind, long horizon) {
  const double t = static_cast<double>(horizon);
  return kind == PolicyKind::kAdeco ? 1.0 / t : 1.0 / (t * t);
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kEtc: return "etc";
    case PolicyKind::kBatchedEtc: return "batched-etc";
    case PolicyKind::kBarb: return "barb";
    case PolicyKind::kAdeco: return "adeco";
    case PolicyKind::kOfflineOracle: return "offline-oracle";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "etc") return PolicyKind::kEtc;
  if (name == "batched-etc") return PolicyKind::kBatchedEtc;
  if (name == "barb") return PolicyKind::kBarb;
  if (name == "adeco") return PolicyKind::kAdeco;
  if (name == "offline-oracle") return PolicyKind::kOfflineOracle;
  throw ConfigError("policy.kind", "unknown policy '" + std::string(name) + "'");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kExplore: return "explore";
    case Phase::kExploitGs: return "exploit-GS";
    case Phase::kExploitOracle: return "exploit-oracle";
    case Phase::kCommit: return "commit";
  }
  return "unknown";
}

double min_sorted_gap(const Eigen::Ref<const Vector>& row, int count) {
  count = std::min<int>(count, static_cast<int>(row.size()) - 1);
  if (count <= 0) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(row.data(), row.data() + row.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < count; ++j) best = std::min(best, sorted[static_cast<std::size_t>(j)] - sorted[static_cast<std::size_t>(j) + 1]);
  return best;
}

int gap_count(GapScope scope, int n_players, int n_arms) {
  return scope == GapScope::kTopN ? std::min(n_players, n_arms - 1) : n_arms - 1;
}

Matching round_robin_matching(int n_players, int n_arms, long t) {
  Matching mu(n_players);
  for (int i = 0; i < n_players; ++i) mu.assign(i, static_cast<int>((i + t) % n_arms));
  return mu;
}

double policy_eta(const MarketView& market, const PolicyConfig& config) {
  if (config.eta) return *config.eta;
  RadiusInputs in;
  in.horizon = static_cast<double>(config.horizon);
  in.dim = market.dim;
  in.b_x = market.bounds.b_x;
  in.b_theta = market.bounds.b_theta;
  in.noise_r = market.bounds.noise_r;
  in.ridge = config.ridge;
  in.delta = config.delta_conf.value_or(default_delta(config.kind, config.horizon));
  return confidence_radius(in);
}

double exploration_budget(double eta, int n_players, int dim, double horizon, double ridge, double gap) {
  const double dl = dim * ridge;
  return eta * eta * n_players * dim * std::log((horizon + dl) / dl) / (gap * gap);
}

// ---------------------------------------------------------------- BARB

double Barb::overlap_limit(double horizon, double gap) { return 3.0 * std::log(horizon) / (16.0 * gap * gap); }

Barb::Barb(MarketView market, const PolicyConfig& config)
    : market_(std::move(market)), config_(config), eta_(0.0), scope_(GapScope::kTopN) {
  check_common(market_, config_);
  if (!(config_.initial_gap > 0.0)) throw ConfigError("policy.initial_gap", "must be positive");
  eta_ = policy_eta(market_, config_);
  scope_ = config_.gap_scope.value_or(GapScope::kTopN);
  state_.batch = 0;
  start_batch(config_.initial_gap);
}

Barb::Barb(MarketView market, const PolicyConfig& config, BarbState state)
    : market_(std::move(market)), config_(config), eta_(0.0), scope_(GapScope::kTopN), state_(std::move(state)) {
  check_common(market_, config_);
  check_grams(market_, state_.grams);
  if (!(state_.candidate_gap > 0.0) || state_.batch < 1) throw ConfigError("policy.state", "invalid BARB state");
  eta_ = policy_eta(market_, config_);
  scope_ = config_.gap_scope.value_or(GapScope::kTopN);
  state_.threshold = state_.candidate_gap / eta_;
  if (state_.batches.empty()) state_.batches.push_back({state_.batch, state_.candidate_gap, 1, 0, 0, 0});
}

void Barb::start_batch(double gap) {
  ++state_.batch;
  state_.candidate_gap = gap;
  state_.threshold = gap / eta_;
  state_.overlap_counter = 0;
  state_.grams = fresh_grams(market_, config_.ridge);
  state_.batches.push_back({state_.batch, gap, round_ + 1, 0, 0, 0});
}

PolicyStep Barb::step(const ContextSet& contexts, const Feedback& feedback) {
  check_contexts(market_, contexts);
  PolicyStep out;
  out.round = ++round_;
  auto& diag = out.diagnostics;
  diag.gap = state_.candidate_gap;
  diag.batch = state_.batch;
  BatchRecord& record = state_.batches.back();

  auto explore = try_explore(market_, state_.grams, contexts, state_.threshold, feedback, diag);
  if (explore.explored) {
    out.phase = Phase::kExplore;
    out.chosen = std::move(explore.chosen);
    ++record.explore_rounds;
  } else {
    const UtilityMatrix u_hat = estimated_utilities(state_.grams, contexts);
    out.phase = Phase::kExploitGs;
    out.chosen = deferred_acceptance(u_hat, market_.arm_prefs);
    ++record.exploit_rounds;
    const int count = gap_count(scope_, market_.n_players, market_.n_arms);
    if (any_overlap(u_hat, count, 2.0 * state_.candidate_gap)) {
      diag.overlap = true;
      ++state_.overlap_counter;
      ++record.overlap_rounds;
    }
  }
  diag.overlap_count = state_.overlap_counter;

  if (static_cast<double>(state_.overlap_counter) >
      overlap_limit(static_cast<double>(config_.horizon), state_.candidate_gap)) {
    start_batch(state_.candidate_gap / std::sqrt(2.0));
  }
  return out;
}

// ---------------------------------------------------------------- AdECO

Adeco::Adeco(MarketView market, const PolicyConfig& config)
    : Adeco(market, config, [&] {
        AdecoState s;
        s.gap = config.gap.value_or(std::pow(static_cast<double>(config.horizon), -1.0 / 3.0));
        s.tolerance = config.tolerance.value_or(s.gap / 2.0);
        s.grams = fresh_grams(market, config.ridge);
        return s;
      }()) {}

Adeco::Adeco(MarketView market, const PolicyConfig& config, AdecoState state)
    : market_(std::move(market)),
      config_(config),
      eta_(0.0),
      scope_(GapScope::kAllArms),
      state_(std::move(state)),
      rng_(config.seed, Stream::kPolicy) {
  check_common(market_, config_);
  check_grams(market_, state_.grams);
  if (!(state_.gap > 0.0)) throw ConfigError("policy.gap", "must be positive");
  if (!(state_.tolerance >= 0.0 && state_.tolerance < state_.gap)) {
    throw ConfigError("policy.tolerance", "must lie in [0, gap)");
  }
  eta_ = policy_eta(market_, config_);
  scope_ = config_.gap_scope.value_or(GapScope::kAllArms);
  state_.threshold = (state_.gap - state_.tolerance) / (4.0 * eta_);
}

PolicyStep Adeco::step(const ContextSet& contexts, const Feedback& feedback) {
  check_contexts(market_, contexts);
  PolicyStep out;
  out.round = ++round_;
  auto& diag = out.diagnostics;
  diag.gap = state_.gap;

  auto explore = try_explore(market_, state_.grams, contexts, state_.threshold, feedback, diag);
  if (explore.explored) {
    out.phase = Phase::kExplore;
    out.chosen = std::move(explore.chosen);
    ++state_.explore_rounds;
    return out;
  }

  const UtilityMatrix u_hat = estimated_utilities(state_.grams, contexts);
  const int count = gap_count(scope_, market_.n_players, market_.n_arms);
  if (!any_overlap(u_hat, count, (state_.gap + state_.tolerance) / 2.0)) {
    out.phase = Phase::kExploitGs;
    out.chosen = deferred_acceptance(u_hat, market_.arm_prefs);
    ++state_.gs_rounds;
    return out;
  }
  diag.overlap = true;
  const MatchingDistribution dist =
      oracle_for_uncertainty(u_hat, market_.arm_prefs, uncertainty_radius(), state_.tolerance);
  out.phase = Phase::kExploitOracle;
  out.chosen = dist.sample(rng_);
  diag.support_size = static_cast<int>(dist.size());
  ++state_.oracle_rounds;
  return out;
}

// ---------------------------------------------------------------- ETC

Etc::Etc(MarketView market, const PolicyConfig& config) : market_(std::move(market)), config_(config) {
  check_common(market_, config_);
  if (config_.explore_length < 0) throw ConfigError("policy.explore_length", "must be nonnegative");
  state_.grams = fresh_grams(market_, config_.ridge);
}

PolicyStep Etc::step(const ContextSet& contexts, const Feedback& feedback) {
  check_contexts(market_, contexts);
  PolicyStep out;
  out.round = ++round_;
  if (round_ <= config_.explore_length) {
    out.phase = Phase::kExplore;
    out.chosen = round_robin_matching(market_.n_players, market_.n_arms, round_ - 1);
    for (int i = 0; i < market_.n_players; ++i) {
      const int j = out.chosen.arm(i);
      state_.grams[static_cast<std::size_t>(i)].update(contexts.row(j).transpose(), feedback(i, j));
    }
    return out;
  }
  out.phase = Phase::kCommit;
  out.chosen = deferred_acceptance(estimated_utilities(state_.grams, contexts), market_.arm_prefs);
  return out;
}

// ---------------------------------------------------------------- Batched-ETC

BatchedEtc::BatchedEtc(MarketView market, const PolicyConfig& config)
    : market_(std::move(market)), config_(config), scope_(GapScope::kTopN) {
  check_common(market_, config_);
  if (config_.initial_explore_length < 1) throw ConfigError("policy.initial_explore_length", "must be at least 1");
  if (config_.horizon < 2) throw ConfigError("policy.horizon", "batched ETC needs a horizon of at least 2");
  scope_ = config_.gap_scope.value_or(GapScope::kTopN);
  state_.batch = 0;
  start_batch(config_.initial_explore_length);
}

void BatchedEtc::start_batch(long explore_length) {
  ++state_.batch;
  state_.explore_length = explore_length;
  state_.ci_width = std::sqrt(std::log(static_cast<double>(config_.horizon)) / static_cast<double>(explore_length));
  state_.overlap_counter = 0;
  state_.round_in_batch = 0;
  state_.grams = fresh_grams(market_, config_.ridge);
  state_.batches.push_back({state_.batch, state_.ci_width, round_ + 1, 0, 0, 0});
}

PolicyStep BatchedEtc::step(const ContextSet& contexts, const Feedback& feedback) {
  check_contexts(market_, contexts);
  PolicyStep out;
  out.round = ++round_;
  auto& diag = out.diagnostics;
  diag.gap = state_.ci_width;
  diag.batch = state_.batch;
  BatchRecord& record = state_.batches.back();

  if (state_.round_in_batch < state_.explore_length) {
    out.phase = Phase::kExplore;
    out.chosen = round_robin_matching(market_.n_players, market_.n_arms, state_.round_in_batch);
    for (int i = 0; i < market_.n_players; ++i) {
      const int j = out.chosen.arm(i);
      state_.grams[static_cast<std::size_t>(i)].update(contexts.row(j).transpose(), feedback(i, j));
    }
    ++record.explore_rounds;
  } else {
    const UtilityMatrix u_hat = estimated_utilities(state_.grams, contexts);
    out.phase = Phase::kExploitGs;
    out.chosen = deferred_acceptance(u_hat, market_.arm_prefs);
    ++record.exploit_rounds;
    const int count = gap_count(scope_, market_.n_players, market_.n_arms);
    if (any_overlap(u_hat, count, 2.0 * state_.ci_width)) {
      diag.overlap = true;
      ++state_.overlap_counter;
      ++record.overlap_rounds;
    }
  }
  ++state_.round_in_batch;
  diag.overlap_count = state_.overlap_counter;

  if (static_cast<double>(state_.overlap_counter) >
      Barb::overlap_limit(static_cast<double>(config_.horizon), state_.ci_width)) {
    start_batch(2 * state_.explore_length);
  }
  return out;
}

std::unique_ptr<Policy> make_policy(const MarketView& market, const PolicyConfig& config) {
  switch (config.kind) {
    case PolicyKind::kEtc: return std::make_unique<Etc>(market, config);
    case PolicyKind::kBatchedEtc: return std::make_unique<BatchedEtc>(market, config);
    case PolicyKind::kBarb: return std::make_unique<Barb>(market, config);
    case PolicyKind::kAdeco: return std::make_unique<Adeco>(market, config);
    case PolicyKind::kOfflineOracle: break;
  }
  throw ConfigError("policy.kind", "make_policy builds learning policies only");
}

}  // namespace matchbandits
