#include "matchbandits/regret.hpp"

#include "matchbandits/environments.hpp"
#include "matchbandits/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace matchbandits {

Vector stable_regret_increment(const UtilityMatrix& u, const ArmPreferences& prefs, const Matching& chosen) {
  return optimal_stable_share(u, prefs, 0.0) - chosen.utilities(u);
}

Vector approx_benchmark(const UtilityMatrix& u, const ArmPreferences& prefs, double gap, double eps, double alpha) {
  if (!(gap > 0.0) || !(eps >= 0.0) || !(alpha > 0.0 && alpha <= 1.0)) {
    throw DimensionError("approximate benchmark needs gap > 0, eps >= 0 and alpha in (0, 1]");
  }
  if (u.cols() < 2 || delta_min(u) > gap) return optimal_stable_share(u, prefs, 0.0);
  if (u.rows() > kEnumerationLimit || u.cols() > kEnumerationLimit) {
    throw EnumerationLimitError("small-gap benchmark needs enumeration; use reward-comparison mode for markets larger than " +
                                std::to_string(kEnumerationLimit));
  }
  return alpha * optimal_stable_share(u, prefs, eps);
}

Vector approx_regret_increment(const UtilityMatrix& u, const ArmPreferences& prefs, const Matching& chosen,
                               double gap, double eps, double alpha) {
  return approx_benchmark(u, prefs, gap, eps, alpha) - chosen.utilities(u);
}

RegretLedger::RegretLedger(int n_players, std::uint64_t stream_id) : n_players_(n_players), stream_id_(stream_id) {
  if (n_players < 1) throw DimensionError("ledger needs at least one player");
}

void RegretLedger::record(const Vector& benchmark, const Vector& expected, const Vector& sampled, double delta_min,
                          RegimeFlag flag, Phase phase) {
  if (benchmark.size() != n_players_ || expected.size() != n_players_ || sampled.size() != n_players_) {
    throw DimensionError("ledger row has the wrong player count");
  }
  if (!expected.allFinite() || !sampled.allFinite()) throw NumericalError("non-finite reward in ledger");
  const std::size_t n = static_cast<std::size_t>(n_players_);
  const std::size_t base = cum_expected_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double prev_b = base == 0 ? 0.0 : cum_benchmark_[base - n + i];
    const double prev_e = base == 0 ? 0.0 : cum_expected_[base - n + i];
    const double prev_s = base == 0 ? 0.0 : cum_sampled_[base - n + i];
    cum_benchmark_.push_back(prev_b + benchmark(static_cast<Eigen::Index>(i)));
    cum_expected_.push_back(prev_e + expected(static_cast<Eigen::Index>(i)));
    cum_sampled_.push_back(prev_s + sampled(static_cast<Eigen::Index>(i)));
  }
  delta_min_.push_back(delta_min);
  flags_.push_back(flag);
  phases_.push_back(phase);
}

double RegretLedger::max_regret(long round) const {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_players_; ++i) {
    const double r = cumulative_regret(round, i);
    if (std::isnan(r)) return r;
    best = std::max(best, r);
  }
  return best;
}

void RegretLedger::write_csv(std::ostream& out) const {
  out << "round,player,benchmark,expected_reward,regret,regime_flag,phase_tag\n";
  for (long t = 1; t <= rounds(); ++t) {
    const int flag = static_cast<int>(this->flag(t));
    const std::string_view tag = to_string(phase(t));
    for (int i = 0; i < n_players_; ++i) {
      out << t << ',' << i + 1 << ',' << format_number(cumulative_benchmark(t, i)) << ','
          << format_number(cumulative_expected(t, i)) << ',' << format_number(cumulative_regret(t, i)) << ','
          << flag << ',' << tag << '\n';
    }
  }
}

Matrix oracle_reward_comparison(const RegretLedger& run_a, const RegretLedger& run_b) {
  if (run_a.rounds() != run_b.rounds()) throw Error("reward comparison needs equal horizons");
  if (run_a.n_players() != run_b.n_players()) throw Error("reward comparison needs equal player counts");
  if (run_a.stream_id() != run_b.stream_id()) throw Error("reward comparison needs the same environment stream");
  Matrix out(run_a.rounds(), run_a.n_players());
  for (long t = 1; t <= run_a.rounds(); ++t) {
    for (int i = 0; i < run_a.n_players(); ++i) {
      out(t - 1, i) = run_a.cumulative_expected(t, i) - run_b.cumulative_expected(t, i);
    }
  }
  return out;
}

OfflineOracle::OfflineOracle(MarketInstance market, double gap, double tolerance, std::uint64_t seed)
    : market_(std::move(market)), gap_(gap), tolerance_(tolerance), rng_(seed, Stream::kPolicy) {
  if (!(gap_ > 0.0) || !(tolerance_ >= 0.0 && tolerance_ < gap_)) {
    throw ConfigError("policy", "offline oracle needs gap > 0 and tolerance in [0, gap)");
  }
}

PolicyStep OfflineOracle::step(const ContextSet& contexts, const Feedback&) {
  PolicyStep out;
  out.round = ++round_;
  out.diagnostics.gap = gap_;
  const UtilityMatrix u = compute_utilities(market_, contexts);
  const int count = gap_count(GapScope::kAllArms, market_.n_players(), market_.n_arms());
  bool separated = true;
  for (Eigen::Index i = 0; i < u.rows() && separated; ++i) {
    separated = min_sorted_gap(u.row(i).transpose(), count) > (gap_ + tolerance_) / 2.0;
  }
  if (separated) {
    out.phase = Phase::kExploitGs;
    out.chosen = deferred_acceptance(u, market_.arm_prefs());
    return out;
  }
  const MatchingDistribution dist = oracle_for_uncertainty(u, market_.arm_prefs(), 0.0, tolerance_);
  out.phase = Phase::kExploitOracle;
  out.chosen = dist.sample(rng_);
  out.diagnostics.overlap = true;
  out.diagnostics.support_size = static_cast<int>(dist.size());
  return out;
}

}  // namespace matchbandits
