#pragma once

#include "matchbandits/config.hpp"
#include "matchbandits/parallel.hpp"
#include "matchbandits/regret.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace matchbandits {

struct PhaseCounts {
  long explore = 0;
  long exploit_gs = 0;
  long exploit_oracle = 0;
  long commit = 0;
};

/// Check of one batch's exploration rounds against exploration_budget.
struct BudgetCheck {
  int batch = 0;
  long explore_rounds = 0;
  double budget = 0.0;
  bool ok = true;
};

struct ReplicaRun {
  std::uint64_t seed = 0;
  /// Empty when the replica finished; otherwise why it stopped.
  std::string failure;
  long rounds = 0;
  /// T x N cumulative regret and cumulative expected reward.
  Matrix regret;
  Matrix expected;
  /// Full ledger, kept for the first replica only.
  std::optional<RegretLedger> ledger;
  PhaseCounts phases;
  double eta = 0.0;
  std::vector<BatchRecord> batches;
  std::vector<BudgetCheck> budget;
  long comparison_rounds = 0;
};

struct Curve {
  std::string series;  // "1".."N" or "max"
  std::vector<double> mean;
  std::vector<double> stderr_;
};

struct PolicyOutcome {
  PolicySpec spec;
  std::vector<ReplicaRun> replicas;
  std::vector<Curve> curves;

  /// Replicas that completed all rounds.
  int completed() const;
  const Curve& max_curve() const { return curves.back(); }
  bool budget_ok() const;
};

struct Comparison {
  std::string a;
  std::string b;
  /// Per player and "max": mean and stderr of cum_expected(a) - cum_expected(b).
  std::vector<Curve> curves;
};

struct ExperimentResult {
  ExperimentConfig config;
  MarketInstance market;
  std::vector<PolicyOutcome> policies;
  std::vector<Comparison> comparisons;

  const PolicyOutcome& policy(const std::string& label) const;
};

/// Runs one replica of one policy. Never throws on mid-run failures; the replica
/// records the reason and the rounds completed.
ReplicaRun run_replica(const MarketInstance& market, const EnvSpec& env, const PolicySpec& policy,
                       const RegretSpec& regret, long horizon, std::uint64_t seed, bool keep_ledger);

/// All replicas of all policies; replica r uses seed config.seed + r for every
/// policy, so policies see identical context and noise streams.
ExperimentResult run_experiment(const ExperimentConfig& config, Execution exec = Execution::kParallel);

/// Writes <out>/<label>/{ledgers.csv, curves.csv, diagnostics.json, plot.svg} and
/// one comparison_<a>_vs_<b>.csv per comparison.
void write_artifacts(const ExperimentResult& result, const std::filesystem::path& out);

void write_curves_csv(const std::vector<Curve>& curves, const std::filesystem::path& file);

nlohmann::json diagnostics_json(const ExperimentResult& result, const PolicyOutcome& outcome);

/// One sweep value: a name for the subdirectory and the full config JSON.
struct SweepPoint {
  std::string name;
  nlohmann::json config;
};

struct SweepSummaryRow {
  std::string point;
  std::string policy;
  double final_max_regret = 0.0;
  double final_max_regret_stderr = 0.0;
};

/// Runs each point into <out>/<name>/ and writes <out>/summary.csv.
std::vector<SweepSummaryRow> run_sweep(const std::vector<SweepPoint>& points, const std::filesystem::path& out,
                                       Execution exec = Execution::kParallel);

/// Points produced by setting `param` (dotted path) to each value in turn.
std::vector<SweepPoint> sweep_points(const nlohmann::json& base, const std::string& param,
                                     const std::vector<nlohmann::json>& values);

}  // namespace matchbandits
