#include "matchbandits/policies.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mb = matchbandits;
using mbtest::Gen;

namespace {

mb::MarketView view(int n, int k, int d, double noise_r = 1.0) {
  return {n, k, d, mb::ArmPreferences::identity(k, n), {1.0, 1.0, noise_r}};
}

/// Gram c I with response c theta: estimate theta, unit inverse norms 1/sqrt(c).
std::vector<mb::GramState> planted(const mb::Matrix& theta, double c = 1e6) {
  std::vector<mb::GramState> out;
  const int d = static_cast<int>(theta.cols());
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    out.push_back(mb::GramState::from_moments(c * mb::Matrix::Identity(d, d), c * theta.row(i).transpose(), 1.0));
  }
  return out;
}

mb::Feedback exact(const mb::Matrix& theta, const mb::ContextSet& ctx) {
  return [&theta, &ctx](int i, int j) { return theta.row(i).dot(ctx.row(j)); };
}

mb::ContextSet unit_contexts(Gen& g, int k, int d) {
  mb::ContextSet x(k, d);
  for (int j = 0; j < k; ++j) x.row(j) = g.unit_vector(d).transpose();
  return x;
}

/// Two players, two arms on the coordinate axes; player 0 values both arms at 0.5.
struct TiedInstance {
  mb::Matrix theta{{0.5, 0.5}, {0.9, 0.1}};
  mb::ContextSet ctx = mb::Matrix::Identity(2, 2);
};

struct Trace {
  std::vector<mb::Matching> chosen;
  std::vector<mb::Phase> phases;
  bool operator==(const Trace&) const = default;
};

Trace run(mb::Policy& policy, const mb::Matrix& theta, int k, long rounds, std::uint64_t seed, double noise) {
  Gen g(seed);
  Trace t;
  for (long r = 0; r < rounds; ++r) {
    const auto ctx = unit_contexts(g, k, static_cast<int>(theta.cols()));
    std::vector<double> eps;
    for (int i = 0; i < theta.rows() * k; ++i) eps.push_back(g.uniform(-noise, noise));
    const auto step = policy.step(ctx, [&](int i, int j) { return theta.row(i).dot(ctx.row(j)) + eps[i * k + j]; });
    t.chosen.push_back(step.chosen);
    t.phases.push_back(step.phase);
  }
  return t;
}

mb::Matrix random_theta(Gen& g, int n, int d) {
  mb::Matrix theta(n, d);
  for (int i = 0; i < n; ++i) theta.row(i) = g.unit_vector(d).transpose();
  return theta;
}

}  // namespace

TEST(Helpers, MinSortedGapAndScope) {
  const mb::Vector row{{0.1, 0.9, 0.5, 0.45}};
  EXPECT_NEAR(mb::min_sorted_gap(row, 1), 0.4, 1e-12);
  EXPECT_NEAR(mb::min_sorted_gap(row, 2), 0.05, 1e-12);
  EXPECT_NEAR(mb::min_sorted_gap(row, 3), 0.05, 1e-12);
  EXPECT_TRUE(std::isinf(mb::min_sorted_gap(row, 0)));
  EXPECT_EQ(mb::gap_count(mb::GapScope::kTopN, 2, 5), 2);
  EXPECT_EQ(mb::gap_count(mb::GapScope::kTopN, 4, 4), 3);
  EXPECT_EQ(mb::gap_count(mb::GapScope::kAllArms, 2, 5), 4);
}

TEST(Helpers, RoundRobinCyclesThroughArms) {
  const auto mu = mb::round_robin_matching(3, 4, 2);
  EXPECT_EQ(mu.assignment(), (std::vector<int>{2, 3, 0}));
  for (long t = 0; t < 12; ++t) EXPECT_TRUE(mb::round_robin_matching(3, 4, t).is_valid(4));
}

TEST(Helpers, PolicyKindNamesRoundTrip) {
  for (auto k : {mb::PolicyKind::kEtc, mb::PolicyKind::kBatchedEtc, mb::PolicyKind::kBarb, mb::PolicyKind::kAdeco,
                 mb::PolicyKind::kOfflineOracle}) {
    EXPECT_EQ(mb::policy_kind_from_string(mb::to_string(k)), k);
  }
  EXPECT_THROW(mb::policy_kind_from_string("ucb"), mb::ConfigError);
}

TEST(Barb, FreshBatchExploresWithDerivedThreshold) {
  mb::PolicyConfig cfg;
  cfg.horizon = 10000;
  cfg.initial_gap = 0.5;
  mb::Barb barb(view(2, 2, 3), cfg);
  EXPECT_NEAR(barb.eta(), 10.105, 1e-2);
  EXPECT_NEAR(barb.state().threshold, 0.0495, 1e-4);
  const mb::Matrix theta = mb::Matrix::Constant(2, 3, 0.1);
  const mb::ContextSet ctx = mb::Matrix::Identity(2, 3);
  const auto step = barb.step(ctx, exact(theta, ctx));
  EXPECT_EQ(step.phase, mb::Phase::kExplore);
  EXPECT_EQ(step.chosen.size(), 2);
  EXPECT_EQ(barb.state().grams[0].samples_used(), 1);
}

TEST(Barb, OverlapLimitExample) {
  EXPECT_NEAR(mb::Barb::overlap_limit(1e4, 0.5), 6.908, 1e-3);
}

TEST(Barb, SeventhOverlapAdvancesTheBatch) {
  TiedInstance inst;
  mb::PolicyConfig cfg;
  cfg.horizon = 10000;
  cfg.eta = 1.0;
  mb::BarbState s;
  s.batch = 1;
  s.candidate_gap = 0.5;
  s.grams = planted(inst.theta);
  mb::Barb barb(view(2, 2, 2), cfg, s);
  for (int r = 1; r <= 6; ++r) {
    const auto step = barb.step(inst.ctx, exact(inst.theta, inst.ctx));
    ASSERT_EQ(step.phase, mb::Phase::kExploitGs);
    EXPECT_TRUE(step.diagnostics.overlap);
    EXPECT_EQ(barb.state().overlap_counter, r);
    EXPECT_EQ(barb.state().batch, 1);
  }
  barb.step(inst.ctx, exact(inst.theta, inst.ctx));
  EXPECT_EQ(barb.state().batch, 2);
  EXPECT_DOUBLE_EQ(barb.state().candidate_gap, 0.5 / std::sqrt(2.0));
  EXPECT_EQ(barb.state().overlap_counter, 0);
  EXPECT_EQ(barb.state().grams[0].samples_used(), 0);
  EXPECT_DOUBLE_EQ(barb.state().grams[0].inverse_norm(inst.ctx.row(0).transpose()), 1.0);
  ASSERT_EQ(barb.state().batches.size(), 2u);
  EXPECT_EQ(barb.state().batches[0].overlap_rounds, 7);
  EXPECT_EQ(barb.state().batches[1].start_round, 8);
}

TEST(Barb, OracleEstimatesExploitPlayerOptimalMatching) {
  Gen g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(2, 4);
    const auto rows = g.separated_utilities(n, n, 1.05);
    const mb::Matrix theta = mbtest::to_matrix(rows);
    const mb::ContextSet ctx = mb::Matrix::Identity(n, n);
    const mbtest::Rankings rk = g.rankings(n, n);
    mb::MarketView v{n, n, n, mb::ArmPreferences(rk, n), {1.0, 1.0, 1.0}};
    mb::PolicyConfig cfg;
    cfg.eta = 1.0;
    mb::BarbState s;
    s.candidate_gap = 0.5;
    s.grams = planted(theta);
    mb::Barb barb(v, cfg, s);
    const auto step = barb.step(ctx, exact(theta, ctx));
    ASSERT_EQ(step.phase, mb::Phase::kExploitGs);
    EXPECT_FALSE(step.diagnostics.overlap);
    EXPECT_EQ(barb.state().overlap_counter, 0);
    EXPECT_EQ(step.chosen.assignment(), *mbtest::player_optimal(rows, rk));
  }
}

TEST(Barb, ExplorationLeavesUnreachedPlayersUnmatchedAndUntouched) {
  // Player 0 is fully explored; only player 1 has edges, so player 0 sits out.
  mb::PolicyConfig cfg;
  cfg.eta = 1.0;
  const mb::Matrix theta{{0.2, 0.7}, {0.6, 0.3}};
  mb::BarbState s;
  s.candidate_gap = 0.5;
  s.grams = planted(theta);
  s.grams[1] = mb::GramState(2, 1.0);
  mb::Barb barb(view(2, 3, 2), cfg, s);
  const mb::ContextSet ctx{{1.0, 0.0}, {0.0, 1.0}, {0.6, 0.8}};
  const auto before = barb.state().grams[0].gram();
  const auto step = barb.step(ctx, exact(theta, ctx));
  EXPECT_EQ(step.phase, mb::Phase::kExplore);
  EXPECT_FALSE(step.chosen.is_matched(0));
  EXPECT_TRUE(step.chosen.is_matched(1));
  EXPECT_EQ(barb.state().grams[0].gram(), before);
  EXPECT_EQ(barb.state().grams[1].samples_used(), 1);
}

TEST(BarbProperty, ExplorationBudgetHoldsPerBatch) {
  Gen g(21);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = g.integer(2, 3);
    const int k = g.integer(n, 4);
    const int d = g.integer(2, 3);
    const mb::Matrix theta = random_theta(g, n, d);
    mb::PolicyConfig cfg;
    cfg.horizon = 3000;
    cfg.initial_gap = g.uniform(0.3, 1.0);
    mb::Barb barb(view(n, k, d, 0.1), cfg);
    run(barb, theta, k, cfg.horizon, 100 + trial, 0.1);
    for (const auto& b : barb.state().batches) {
      EXPECT_LE(static_cast<double>(b.explore_rounds),
                mb::exploration_budget(barb.eta(), n, d, static_cast<double>(cfg.horizon), cfg.ridge, b.gap))
          << "trial " << trial << " batch " << b.batch;
    }
  }
}

TEST(BarbProperty, BatchGapsShrinkGeometrically) {
  // Force overlaps from the start with a tiny radius so batches turn over fast.
  TiedInstance inst;
  mb::PolicyConfig cfg;
  cfg.horizon = 100;
  cfg.eta = 1e-9;
  cfg.initial_gap = 0.8;
  mb::Barb barb(view(2, 2, 2), cfg);
  for (int r = 0; r < 100; ++r) barb.step(inst.ctx, exact(inst.theta, inst.ctx));
  const auto& batches = barb.state().batches;
  ASSERT_GE(batches.size(), 3u);
  for (std::size_t k = 0; k < batches.size(); ++k) {
    EXPECT_NEAR(batches[k].gap, 0.8 * std::pow(2.0, -0.5 * static_cast<double>(k)), 1e-12);
  }
}

TEST(BatchDomination, SumOfInverseSquaredGapsIsBoundedByTheNext) {
  const double first = 0.5;
  for (int n = 2; n <= 40; ++n) {
    double sum = 0.0;
    double gap = first;
    for (int k = 1; k < n; ++k) {
      sum += 1.0 / (gap * gap);
      gap /= std::sqrt(2.0);
    }
    EXPECT_LE(sum, 1.0 / (gap * gap)) << "n = " << n;
  }
}

TEST(Etc, ZeroExplorationCommitsToIndexOrder) {
  mb::PolicyConfig cfg;
  cfg.kind = mb::PolicyKind::kEtc;
  cfg.explore_length = 0;
  mb::Etc etc(view(3, 3, 2), cfg);
  Gen g(1);
  const auto ctx = unit_contexts(g, 3, 2);
  const auto step = etc.step(ctx, [](int, int) -> double { ADD_FAILURE() << "no feedback expected"; return 0.0; });
  EXPECT_EQ(step.phase, mb::Phase::kCommit);
  EXPECT_EQ(step.chosen.assignment(), (std::vector<int>{0, 1, 2}));
}

TEST(Etc, ExploresRoundRobinThenCommits) {
  mb::PolicyConfig cfg;
  cfg.explore_length = 6;
  mb::Etc etc(view(2, 3, 3), cfg);
  Gen g(2);
  const mb::Matrix theta = random_theta(g, 2, 3);
  const auto trace = run(etc, theta, 3, 8, 5, 0.0);
  for (long t = 0; t < 6; ++t) {
    EXPECT_EQ(trace.phases[t], mb::Phase::kExplore);
    EXPECT_EQ(trace.chosen[t], mb::round_robin_matching(2, 3, t));
  }
  EXPECT_EQ(trace.phases[6], mb::Phase::kCommit);
  EXPECT_EQ(etc.state().grams[0].samples_used(), 6);
}

TEST(BatchedEtc, FirstBatchWidthAndThreshold) {
  mb::PolicyConfig cfg;
  cfg.horizon = 10000;
  cfg.initial_explore_length = 100;
  mb::BatchedEtc betc(view(2, 2, 2), cfg);
  EXPECT_NEAR(betc.state().ci_width, 0.3035, 1e-4);
  EXPECT_NEAR(mb::Barb::overlap_limit(1e4, betc.state().ci_width), 18.75, 1e-2);
}

TEST(BatchedEtc, NineteenthOverlapDoublesExploration) {
  TiedInstance inst;
  mb::PolicyConfig cfg;
  cfg.horizon = 10000;
  cfg.initial_explore_length = 100;
  mb::BatchedEtc betc(view(2, 2, 2), cfg);
  for (int r = 1; r <= 100; ++r) {
    ASSERT_EQ(betc.step(inst.ctx, exact(inst.theta, inst.ctx)).phase, mb::Phase::kExplore);
  }
  for (int o = 1; o <= 18; ++o) {
    const auto step = betc.step(inst.ctx, exact(inst.theta, inst.ctx));
    ASSERT_EQ(step.phase, mb::Phase::kExploitGs);
    ASSERT_TRUE(step.diagnostics.overlap);
    EXPECT_EQ(betc.state().batch, 1);
  }
  betc.step(inst.ctx, exact(inst.theta, inst.ctx));
  EXPECT_EQ(betc.state().batch, 2);
  EXPECT_EQ(betc.state().explore_length, 200);
  EXPECT_NEAR(betc.state().ci_width, std::sqrt(std::log(1e4) / 200.0), 1e-12);
  EXPECT_EQ(betc.state().grams[0].samples_used(), 0);
  EXPECT_EQ(betc.step(inst.ctx, exact(inst.theta, inst.ctx)).phase, mb::Phase::kExplore);
}

TEST(Adeco, FreshRoundExplores) {
  mb::PolicyConfig cfg;
  cfg.kind = mb::PolicyKind::kAdeco;
  cfg.horizon = 1000;
  cfg.gap = 0.2;
  cfg.tolerance = 0.1;
  mb::Adeco adeco(view(2, 2, 2), cfg);
  EXPECT_NEAR(adeco.state().threshold, 0.1 / (4.0 * adeco.eta()), 1e-15);
  EXPECT_NEAR(adeco.uncertainty_radius(), 0.025, 1e-15);
  TiedInstance inst;
  EXPECT_EQ(adeco.step(inst.ctx, exact(inst.theta, inst.ctx)).phase, mb::Phase::kExplore);
}

TEST(Adeco, DefaultsFollowHorizon) {
  mb::PolicyConfig cfg;
  cfg.horizon = 1000;
  mb::Adeco adeco(view(2, 2, 2), cfg);
  EXPECT_NEAR(adeco.state().gap, 0.1, 1e-12);
  EXPECT_NEAR(adeco.state().tolerance, 0.05, 1e-12);
  cfg.tolerance = 0.2;
  EXPECT_THROW(mb::Adeco(view(2, 2, 2), cfg), mb::ConfigError);
}

namespace {

mb::Adeco planted_adeco(const mb::MarketView& v, const mb::Matrix& theta_hat, std::uint64_t seed = 0) {
  mb::PolicyConfig cfg;
  cfg.kind = mb::PolicyKind::kAdeco;
  cfg.eta = 1.0;
  cfg.seed = seed;
  mb::AdecoState s;
  s.gap = 0.2;
  s.tolerance = 0.1;
  s.grams = planted(theta_hat);
  return mb::Adeco(v, cfg, s);
}

}  // namespace

TEST(Adeco, SeparatedEstimatesTakeTheGsBranch) {
  Gen g(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = g.integer(2, 4);
    const auto rows = g.separated_utilities(n, n, 0.16);
    const mb::Matrix theta = mbtest::to_matrix(rows);
    const mbtest::Rankings rk = g.rankings(n, n);
    const mb::MarketView v{n, n, n, mb::ArmPreferences(rk, n), {1.0, 1.0, 1.0}};
    auto adeco = planted_adeco(v, theta);
    const mb::ContextSet ctx = mb::Matrix::Identity(n, n);
    const auto step = adeco.step(ctx, exact(theta, ctx));
    ASSERT_EQ(step.phase, mb::Phase::kExploitGs);
    EXPECT_EQ(step.chosen.assignment(), *mbtest::player_optimal(rows, rk));
  }
}

TEST(Adeco, TiedEstimatesCallTheOracle) {
  for (int n : {2, 3, 4, 5}) {
    mb::Matrix theta = mb::Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) theta.row(i).setLinSpaced(n, 0.9, 0.1);
    theta(0, 1) = theta(0, 0);
    auto adeco = planted_adeco(view(n, n, n), theta, 7);
    const mb::ContextSet ctx = mb::Matrix::Identity(n, n);
    const auto step = adeco.step(ctx, exact(theta, ctx));
    ASSERT_EQ(step.phase, mb::Phase::kExploitOracle);
    EXPECT_EQ(step.diagnostics.support_size, mb::replication_factor(n));
    const auto dist = mb::oracle_for_uncertainty(theta, mb::ArmPreferences::identity(n, n), 0.025, 0.1);
    bool found = false;
    for (const auto& w : dist.support()) found = found || w.matching == step.chosen;
    EXPECT_TRUE(found);
  }
}

TEST(AdecoProperty, NoOracleCallsWhenTrueGapsExceedTheGapParameter) {
  // True gaps above 0.2 and estimates within gamma = 0.025 of the truth keep
  // every estimated gap above (0.2 + 0.1) / 2.
  Gen g(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = g.integer(1, 4);
    const int k = g.integer(n, 5);
    const auto rows = g.separated_utilities(n, k, 0.2 + 1e-6);
    // Orthonormal contexts so that theta_i = sum_j U_ij x_j reproduces U exactly.
    Eigen::HouseholderQR<mb::Matrix> qr(mb::Matrix::Random(k, k));
    const mb::ContextSet ctx = qr.householderQ();
    const mb::Matrix theta = mbtest::to_matrix(rows) * ctx;
    mb::Matrix theta_hat = theta;
    for (int i = 0; i < n; ++i) theta_hat.row(i) += 0.025 * g.uniform(0.0, 0.999) * g.unit_vector(k).transpose();
    auto adeco = planted_adeco(view(n, k, k), theta_hat);
    const auto step = adeco.step(ctx, exact(theta, ctx));
    EXPECT_EQ(step.phase, mb::Phase::kExploitGs) << "trial " << trial;
  }
}

TEST(PolicyProperty, DeterministicAndValidMatchings) {
  Gen g(51);
  for (auto kind : {mb::PolicyKind::kEtc, mb::PolicyKind::kBatchedEtc, mb::PolicyKind::kBarb, mb::PolicyKind::kAdeco}) {
    for (int trial = 0; trial < 4; ++trial) {
      const int n = g.integer(1, 3);
      const int k = g.integer(n, 4);
      const int d = g.integer(1, 3);
      const mb::Matrix theta = random_theta(g, n, d);
      mb::PolicyConfig cfg;
      cfg.kind = kind;
      cfg.horizon = 400;
      cfg.explore_length = 40;
      cfg.initial_explore_length = 10;
      cfg.seed = 9;
      const auto v = view(n, k, d, 0.1);
      auto a = mb::make_policy(v, cfg);
      auto b = mb::make_policy(v, cfg);
      const auto ta = run(*a, theta, k, cfg.horizon, 77 + trial, 0.1);
      const auto tb = run(*b, theta, k, cfg.horizon, 77 + trial, 0.1);
      EXPECT_EQ(ta, tb) << mb::to_string(kind);
      for (const auto& mu : ta.chosen) {
        ASSERT_TRUE(mu.is_valid(k));
        ASSERT_LE(mu.size(), n);
      }
      EXPECT_EQ(a->rounds_played(), cfg.horizon);
    }
  }
}

TEST(MakePolicy, RejectsBadConfigs) {
  mb::PolicyConfig cfg;
  cfg.kind = mb::PolicyKind::kOfflineOracle;
  EXPECT_THROW(mb::make_policy(view(2, 2, 2), cfg), mb::ConfigError);
  cfg.kind = mb::PolicyKind::kBarb;
  cfg.ridge = 0.0;
  EXPECT_THROW(mb::make_policy(view(2, 2, 2), cfg), mb::ConfigError);
  cfg.ridge = 1.0;
  EXPECT_THROW(mb::make_policy(view(3, 2, 2), cfg), mb::DimensionError);
  mb::Barb barb(view(2, 2, 2), cfg);
  EXPECT_THROW(barb.step(mb::Matrix::Identity(3, 2), [](int, int) { return 0.0; }), mb::DimensionError);
}
