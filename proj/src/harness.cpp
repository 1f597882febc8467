#include "matchbandits/harness.hpp"

#include "matchbandits/format.hpp"
#include "matchbandits/market_io.hpp"
#include "matchbandits/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

namespace matchbandits {

using nlohmann::json;

namespace {

/// Non-finite values become null.
json number_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct ResolvedRegret {
  RegretMode mode;
  double gap;
  double tolerance;
  double alpha;
};

ResolvedRegret resolve(const RegretSpec& spec, long horizon, int n_players) {
  ResolvedRegret r;
  r.mode = spec.mode;
  r.gap = spec.gap.value_or(std::pow(static_cast<double>(horizon), -1.0 / 3.0));
  r.tolerance = spec.tolerance.value_or(r.gap / 2.0);
  r.alpha = spec.alpha.value_or(1.0 / replication_factor(n_players));
  return r;
}

void count_phase(PhaseCounts& c, Phase p) {
  switch (p) {
    case Phase::kExplore: ++c.explore; break;
    case Phase::kExploitGs: ++c.exploit_gs; break;
    case Phase::kExploitOracle: ++c.exploit_oracle; break;
    case Phase::kCommit: ++c.commit; break;
  }
}

std::unique_ptr<Policy> build_policy(const MarketInstance& market, const PolicySpec& spec, long horizon,
                                     std::uint64_t seed) {
  PolicyConfig cfg = spec.config;
  cfg.horizon = horizon;
  cfg.seed = seed;
  if (cfg.kind == PolicyKind::kOfflineOracle) {
    const double gap = cfg.gap.value_or(std::pow(static_cast<double>(horizon), -1.0 / 3.0));
    return std::make_unique<OfflineOracle>(market, gap, cfg.tolerance.value_or(gap / 2.0), seed);
  }
  return make_policy(market.view(), cfg);
}

/// Mean and standard error over rows of `samples` (one row per replica), folded in
/// row order.
void mean_stderr(const std::vector<const double*>& columns, long length, Curve& out) {
  const std::size_t n = columns.size();
  out.mean.assign(static_cast<std::size_t>(length), std::numeric_limits<double>::quiet_NaN());
  out.stderr_.assign(static_cast<std::size_t>(length), std::numeric_limits<double>::quiet_NaN());
  if (n == 0) return;
  for (long t = 0; t < length; ++t) {
    double sum = 0.0;
    for (const double* c : columns) sum += c[t];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const double* c : columns) ss += (c[t] - mean) * (c[t] - mean);
    out.mean[static_cast<std::size_t>(t)] = mean;
    out.stderr_[static_cast<std::size_t>(t)] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  }
}

/// Per-player curves plus a "max" curve from T x N per-replica matrices.
std::vector<Curve> aggregate(const std::vector<const Matrix*>& runs, int n_players, long horizon) {
  std::vector<Curve> curves;
  for (int i = 0; i < n_players; ++i) {
    Curve c;
    c.series = std::to_string(i + 1);
    std::vector<const double*> cols;
    for (const Matrix* m : runs) cols.push_back(m->col(i).data());
    mean_stderr(cols, horizon, c);
    curves.push_back(std::move(c));
  }
  std::vector<Vector> maxima;
  maxima.reserve(runs.size());
  for (const Matrix* m : runs) maxima.push_back(m->rowwise().maxCoeff());
  Curve c;
  c.series = "max";
  std::vector<const double*> cols;
  for (const auto& v : maxima) cols.push_back(v.data());
  mean_stderr(cols, horizon, c);
  curves.push_back(std::move(c));
  return curves;
}

json phases_json(const PhaseCounts& p) {
  return json{{"explore", p.explore}, {"exploit-GS", p.exploit_gs}, {"exploit-oracle", p.exploit_oracle},
              {"commit", p.commit}};
}

std::string point_name(const std::string& param, const json& value) {
  const auto dot = param.rfind('.');
  std::string name = (dot == std::string::npos ? param : param.substr(dot + 1)) + "=";
  name += value.is_string() ? value.get<std::string>() : value.dump();
  for (char& ch : name) {
    if (ch == '/' || ch == '\\' || ch == ' ' || ch == '"') ch = '_';
  }
  return name;
}

}  // namespace

int PolicyOutcome::completed() const {
  return static_cast<int>(std::count_if(replicas.begin(), replicas.end(), [](const ReplicaRun& r) { return r.failure.empty(); }));
}

bool PolicyOutcome::budget_ok() const {
  for (const auto& r : replicas) {
    for (const auto& b : r.budget) {
      if (!b.ok) return false;
    }
  }
  return true;
}

const PolicyOutcome& ExperimentResult::policy(const std::string& label) const {
  for (const auto& p : policies) {
    if (p.spec.label == label) return p;
  }
  throw Error("no policy labelled '" + label + "'");
}

ReplicaRun run_replica(const MarketInstance& market, const EnvSpec& env, const PolicySpec& spec,
                       const RegretSpec& regret_spec, long horizon, std::uint64_t seed, bool keep_ledger) {
  ReplicaRun run;
  run.seed = seed;
  const int n = market.n_players();
  const int k = market.n_arms();
  const ResolvedRegret regret = resolve(regret_spec, horizon, n);
  run.regret = Matrix::Zero(horizon, n);
  run.expected = Matrix::Zero(horizon, n);
  const std::uint64_t stream_id = fnv1a(env_to_json(env).dump()) ^ (seed * 0x9e3779b97f4a7c15ULL);
  if (keep_ledger) run.ledger.emplace(n, stream_id);

  std::unique_ptr<Policy> policy;
  try {
    policy = build_policy(market, spec, horizon, seed);
    Environment environment(env, n, k, market.dim(), seed);
    Vector cum_regret = Vector::Zero(n);
    Vector cum_expected = Vector::Zero(n);
    const Vector nan_row = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    for (long t = 1; t <= horizon; ++t) {
      const EnvRound round = environment.next();
      const UtilityMatrix u = compute_utilities(market, round.contexts);
      const Feedback feedback = [&](int i, int j) { return u(i, j) + round.noise(i, j); };
      const PolicyStep step = policy->step(round.contexts, feedback);
      if (step.chosen.n_players() != n || !step.chosen.is_valid(k)) {
        throw NumericalError("policy returned an invalid matching in round " + std::to_string(t));
      }
      const Vector expected = step.chosen.utilities(u);
      Vector sampled = expected;
      for (int i = 0; i < n; ++i) {
        if (step.chosen.is_matched(i)) sampled(i) += round.noise(i, step.chosen.arm(i));
      }
      const double dm = k >= 2 ? delta_min(u) : std::numeric_limits<double>::infinity();
      Vector benchmark;
      RegimeFlag flag = dm <= regret.gap ? RegimeFlag::kSmallGap : RegimeFlag::kLargeGap;
      try {
        benchmark = regret.mode == RegretMode::kStable
                        ? optimal_stable_share(u, market.arm_prefs(), 0.0)
                        : approx_benchmark(u, market.arm_prefs(), regret.gap, regret.tolerance, regret.alpha);
      } catch (const EnumerationLimitError&) {
        benchmark = nan_row;
        flag = RegimeFlag::kComparisonOnly;
        ++run.comparison_rounds;
      }
      cum_regret += benchmark - expected;
      cum_expected += expected;
      run.regret.row(t - 1) = cum_regret.transpose();
      run.expected.row(t - 1) = cum_expected.transpose();
      count_phase(run.phases, step.phase);
      if (run.ledger) run.ledger->record(benchmark, expected, sampled, dm, flag, step.phase);
      run.rounds = t;
    }
  } catch (const std::exception& e) {
    run.failure = e.what();
  }

  if (const auto* barb = dynamic_cast<const Barb*>(policy.get())) {
    run.eta = barb->eta();
    run.batches = barb->state().batches;
    for (const auto& b : run.batches) {
      const double budget = exploration_budget(barb->eta(), n, market.dim(), static_cast<double>(horizon),
                                               spec.config.ridge, b.gap);
      run.budget.push_back({b.batch, b.explore_rounds, budget, static_cast<double>(b.explore_rounds) <= budget});
    }
  } else if (const auto* betc = dynamic_cast<const BatchedEtc*>(policy.get())) {
    run.batches = betc->state().batches;
  } else if (const auto* adeco = dynamic_cast<const Adeco*>(policy.get())) {
    run.eta = adeco->eta();
  }
  return run;
}

ExperimentResult run_experiment(const ExperimentConfig& config, Execution exec) {
  ExperimentResult result{config, build_market(config), {}, {}};
  const int n_policies = static_cast<int>(config.policies.size());
  const int replicas = config.replicas;
  result.policies.resize(static_cast<std::size_t>(n_policies));
  for (int p = 0; p < n_policies; ++p) {
    result.policies[static_cast<std::size_t>(p)].spec = config.policies[static_cast<std::size_t>(p)];
    result.policies[static_cast<std::size_t>(p)].replicas.resize(static_cast<std::size_t>(replicas));
  }
  for_each_index(
      n_policies * replicas,
      [&](int job) {
        const int p = job / replicas;
        const int r = job % replicas;
        auto& outcome = result.policies[static_cast<std::size_t>(p)];
        outcome.replicas[static_cast<std::size_t>(r)] =
            run_replica(result.market, config.environment, outcome.spec, config.regret, config.horizon,
                        config.seed + static_cast<std::uint64_t>(r), r == 0);
      },
      exec);

  const int n = result.market.n_players();
  for (auto& outcome : result.policies) {
    std::vector<const Matrix*> runs;
    for (const auto& r : outcome.replicas) {
      if (r.failure.empty()) runs.push_back(&r.regret);
    }
    outcome.curves = aggregate(runs, n, config.horizon);
  }
  for (const auto& [a, b] : config.compare) {
    const auto& pa = result.policy(a);
    const auto& pb = result.policy(b);
    std::vector<Matrix> diffs;
    for (int r = 0; r < replicas; ++r) {
      const auto& ra = pa.replicas[static_cast<std::size_t>(r)];
      const auto& rb = pb.replicas[static_cast<std::size_t>(r)];
      if (ra.failure.empty() && rb.failure.empty()) diffs.push_back(ra.expected - rb.expected);
    }
    std::vector<const Matrix*> runs;
    for (const auto& d : diffs) runs.push_back(&d);
    result.comparisons.push_back({a, b, aggregate(runs, n, config.horizon)});
  }
  return result;
}

void write_curves_csv(const std::vector<Curve>& curves, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << "round,series,mean,stderr\n";
  const std::size_t length = curves.empty() ? 0 : curves.front().mean.size();
  for (std::size_t t = 0; t < length; ++t) {
    for (const auto& c : curves) {
      out << t + 1 << ',' << c.series << ',' << format_number(c.mean[t]) << ',' << format_number(c.stderr_[t]) << '\n';
    }
  }
}

json diagnostics_json(const ExperimentResult& result, const PolicyOutcome& outcome) {
  const auto& config = result.config;
  const ResolvedRegret regret = resolve(config.regret, config.horizon, result.market.n_players());
  json j;
  j["schema_version"] = kSchemaVersion;
  j["policy"] = outcome.spec.label;
  j["kind"] = std::string(to_string(outcome.spec.config.kind));
  j["config"] = experiment_to_json(config);
  j["defaults_ours"] = config.defaulted;
  j["market"] = market_to_json(result.market);
  j["horizon"] = config.horizon;
  j["replicas_requested"] = config.replicas;
  j["replicas_completed"] = outcome.completed();
  j["regret"] = json{{"mode", regret.mode == RegretMode::kStable ? "stable" : "approximate"},
                     {"gap", regret.gap},
                     {"tolerance", regret.tolerance},
                     {"alpha", regret.alpha}};
  if (!outcome.curves.empty() && !outcome.curves.front().mean.empty()) {
    json final_means = json::array();
    for (const auto& c : outcome.curves) {
      final_means.push_back(json{{"series", c.series},
                                 {"mean", number_json(c.mean.back())},
                                 {"stderr", number_json(c.stderr_.back())}});
    }
    j["final_regret"] = std::move(final_means);
  }
  j["exploration_budget_ok"] = outcome.budget_ok();
  json reps = json::array();
  for (const auto& r : outcome.replicas) {
    json rj{{"seed", r.seed},
            {"failure", r.failure.empty() ? json(nullptr) : json(r.failure)},
            {"rounds", r.rounds},
            {"phases", phases_json(r.phases)},
            {"comparison_rounds", r.comparison_rounds}};
    if (r.rounds > 0) {
      rj["final_max_regret"] = number_json(r.regret.row(r.rounds - 1).maxCoeff());
    }
    if (r.eta > 0.0) rj["eta"] = r.eta;
    if (!r.batches.empty()) {
      json batches = json::array();
      for (const auto& b : r.batches) {
        batches.push_back(json{{"batch", b.batch},
                               {"gap", b.gap},
                               {"start_round", b.start_round},
                               {"explore_rounds", b.explore_rounds},
                               {"exploit_rounds", b.exploit_rounds},
                               {"overlap_rounds", b.overlap_rounds}});
      }
      rj["batches"] = std::move(batches);
    }
    if (!r.budget.empty()) {
      json budget = json::array();
      for (const auto& b : r.budget) {
        budget.push_back(
            json{{"batch", b.batch}, {"explore_rounds", b.explore_rounds}, {"budget", b.budget}, {"ok", b.ok}});
      }
      rj["exploration_budget"] = std::move(budget);
    }
    reps.push_back(std::move(rj));
  }
  j["replicas"] = std::move(reps);
  return j;
}

void write_artifacts(const ExperimentResult& result, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  for (const auto& outcome : result.policies) {
    const auto dir = out / outcome.spec.label;
    std::filesystem::create_directories(dir);
    {
      std::ofstream ledger(dir / "ledgers.csv", std::ios::binary);
      if (!ledger) throw Error("cannot write " + (dir / "ledgers.csv").string());
      const auto& first = outcome.replicas.front();
      if (first.ledger) first.ledger->write_csv(ledger);
    }
    write_curves_csv(outcome.curves, dir / "curves.csv");
    {
      std::ofstream diag(dir / "diagnostics.json", std::ios::binary);
      diag << diagnostics_json(result, outcome).dump(2) << '\n';
    }
    plot_curves_file(dir / "curves.csv", dir / "plot.svg", outcome.spec.label + ": cumulative regret", "regret");
  }
  for (const auto& cmp : result.comparisons) {
    const auto file = out / ("comparison_" + cmp.a + "_vs_" + cmp.b + ".csv");
    write_curves_csv(cmp.curves, file);
    plot_curves_file(file, out / ("comparison_" + cmp.a + "_vs_" + cmp.b + ".svg"),
                     "cumulative reward: " + cmp.a + " minus " + cmp.b, "reward difference");
  }
  std::vector<std::pair<std::string, std::filesystem::path>> overlay;
  for (const auto& outcome : result.policies) overlay.emplace_back(outcome.spec.label, out / outcome.spec.label / "curves.csv");
  plot_overlay(overlay, "max", out / "max_regret.svg", "max-player cumulative regret", "regret");
}

std::vector<SweepPoint> sweep_points(const json& base, const std::string& param, const std::vector<json>& values) {
  std::vector<SweepPoint> points;
  for (const auto& v : values) {
    json cfg = base;
    set_json_path(cfg, param, v);
    points.push_back({point_name(param, v), std::move(cfg)});
  }
  return points;
}

std::vector<SweepSummaryRow> run_sweep(const std::vector<SweepPoint>& points, const std::filesystem::path& out,
                                       Execution exec) {
  std::vector<SweepSummaryRow> rows;
  std::filesystem::create_directories(out);
  std::vector<std::pair<std::string, std::filesystem::path>> overlay;
  for (const auto& point : points) {
    json cfg_json = point.config;
    cfg_json["output"] = (out / point.name).string();
    ExperimentConfig cfg;
    try {
      cfg = parse_experiment(cfg_json);
    } catch (const ConfigError& e) {
      throw ConfigError(e.path(), point.name + ": " + e.what());
    }
    const ExperimentResult result = run_experiment(cfg, exec);
    write_artifacts(result, cfg.output);
    for (const auto& p : result.policies) {
      const Curve& c = p.max_curve();
      rows.push_back({point.name, p.spec.label, c.mean.empty() ? std::nan("") : c.mean.back(),
                      c.stderr_.empty() ? std::nan("") : c.stderr_.back()});
      overlay.emplace_back(point.name + " " + p.spec.label, cfg.output / p.spec.label / "curves.csv");
    }
  }
  std::ofstream summary(out / "summary.csv", std::ios::binary);
  summary << "point,policy,final_max_regret,stderr\n";
  for (const auto& r : rows) {
    summary << r.point << ',' << r.policy << ',' << format_number(r.final_max_regret) << ','
            << format_number(r.final_max_regret_stderr) << '\n';
  }
  plot_overlay(overlay, "max", out / "max_regret.svg", "max-player cumulative regret", "regret");
  return rows;
}

}  // namespace matchbandits
