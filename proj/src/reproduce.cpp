#include "matchbandits/reproduce.hpp"

#include "matchbandits/environments.hpp"
#include "matchbandits/format.hpp"
#include "matchbandits/gap_diagnostics.hpp"
#include "matchbandits/harness.hpp"
#include "matchbandits/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace matchbandits {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json base_config(const ReproduceOptions& o, int n, int k, int d) {
  return json{{"schema_version", kSchemaVersion},
              {"seed", o.seed},
              {"horizon", o.horizon},
              {"replicas", o.replicas},
              {"market", {{"generate", {{"n_players", n}, {"n_arms", k}, {"dim", d}}}}},
              {"regret", {{"mode", "stable"}}}};
}

json gaussian_env() {
  return json{{"kind", "normalized-gaussian"},
              {"mean", 10.0},
              {"variance", 1.0},
              {"noise", {{"kind", "gaussian"}, {"scale", kDefaultNoiseScale}}}};
}

json degenerate_env() {
  return json{{"kind", "orthonormal-mixing"},
              {"rank", 2},
              {"mixing", 0.5},
              {"noise", {{"kind", "gaussian"}, {"scale", kDefaultNoiseScale}}}};
}

json stochastic_policies(double initial_gap = 0.5) {
  return json::array({json{{"kind", "etc"}, {"explore_length", 5000}},
                      json{{"kind", "batched-etc"}, {"initial_explore_length", 100}},
                      json{{"kind", "barb"}, {"initial_gap", initial_gap}}});
}

json adversarial_env(int k, int d, const std::string& mode, double p) {
  json env{{"kind", "adversarial"},
           {"mode", mode},
           {"large", {{"kind", "template-jitter"}, {"templates", matrix_json(large_gap_templates(k, d))}, {"jitter", 0.01}}},
           {"small", {{"kind", "template-jitter"}, {"templates", matrix_json(small_gap_templates(k, d))}, {"jitter", 0.002}}},
           {"noise", {{"kind", "gaussian"}, {"scale", kDefaultNoiseScale}}}};
  if (mode == "bernoulli") env["p"] = p;
  return env;
}

json adversarial_config(const ReproduceOptions& o, const std::string& mode, double p) {
  json cfg = base_config(o, 4, 4, 3);
  cfg["environment"] = adversarial_env(4, 3, mode, p);
  cfg["policies"] = json::array({json{{"kind", "adeco"}}, json{{"kind", "offline-oracle"}}});
  cfg["regret"] = json{{"mode", "approximate"}};
  cfg["compare"] = json::array({json::array({"offline-oracle", "adeco"})});
  return cfg;
}

}  // namespace

Matrix large_gap_templates(int n_arms, int dim) {
  const Vector u = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
  Matrix t(n_arms, dim);
  for (int j = 0; j < n_arms; ++j) {
    const double factor = n_arms == 1 ? 1.0 : 1.0 - 0.9 * j / (n_arms - 1);
    t.row(j) = factor * u.transpose();
  }
  return t;
}

Matrix small_gap_templates(int n_arms, int dim) {
  const Vector u = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
  const int pairs = (n_arms + 1) / 2;
  Matrix t(n_arms, dim);
  for (int j = 0; j < n_arms; ++j) {
    const double base = 0.9 - 0.4 * (j / 2) / std::max(1, pairs - 1);
    t.row(j) = (base - 0.01 * (j % 2)) * u.transpose();
  }
  return t;
}

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names{"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "figH"};
  return names;
}

std::vector<std::pair<std::string, json>> figure_configs(std::string_view figure, const ReproduceOptions& o) {
  std::vector<std::pair<std::string, json>> out;
  if (figure == "fig1" || figure == "fig2") {
    json cfg = base_config(o, 4, 4, 3);
    cfg["environment"] = figure == "fig1" ? gaussian_env() : degenerate_env();
    cfg["policies"] = stochastic_policies();
    out.emplace_back(std::string(figure), std::move(cfg));
  } else if (figure == "fig3") {
    for (int n : {3, 6, 9, 12}) {
      json cfg = base_config(o, n, n, 3);
      cfg["environment"] = gaussian_env();
      cfg["policies"] = json::array({json{{"kind", "barb"}, {"initial_gap", 0.5}}});
      out.emplace_back("size=" + std::to_string(n), std::move(cfg));
    }
  } else if (figure == "fig4") {
    for (double g : {0.4, 0.6, 0.8, 1.0}) {
      json cfg = base_config(o, 4, 4, 3);
      cfg["environment"] = gaussian_env();
      cfg["policies"] = json::array({json{{"kind", "barb"}, {"initial_gap", g}}});
      out.emplace_back("initial_gap=" + format_number(g), std::move(cfg));
    }
  } else if (figure == "fig5") {
    out.emplace_back("fig5", adversarial_config(o, "alternating", 0.0));
  } else if (figure == "fig6") {
    for (double p : {0.1, 0.5, 0.9}) out.emplace_back("p=" + format_number(p), adversarial_config(o, "bernoulli", p));
  } else {
    throw ConfigError("figure", "unknown figure '" + std::string(figure) + "'");
  }
  return out;
}

void reproduce_figure(std::string_view figure, const ReproduceOptions& o) {
  if (figure == "figH") {
    reproduce_gap_cdf(o);
    return;
  }
  const auto configs = figure_configs(figure, o);
  const auto dir = o.out / std::string(figure);
  if (configs.size() == 1) {
    json cfg = configs.front().second;
    cfg["output"] = dir.string();
    const ExperimentConfig parsed = parse_experiment(cfg);
    write_artifacts(run_experiment(parsed, o.exec), dir);
    return;
  }
  std::vector<SweepPoint> points;
  for (const auto& [name, cfg] : configs) points.push_back({name, cfg});
  run_sweep(points, dir, o.exec);
}

void reproduce_gap_cdf(const ReproduceOptions& o) {
  const auto dir = o.out / "figH";
  std::filesystem::create_directories(dir);
  const MarketInstance market = staggered_uniform_market();
  const StochasticEnvSpec env = staggered_uniform_env();
  const GapDiagnostics diag = estimate_min_gap(env, market, 1e4, o.gap_samples, o.seed, o.exec);
  const std::vector<double> horizons{1e3, 1e4, 1e5};

  std::ofstream csv(dir / "figH.csv", std::ios::binary);
  csv << "x,analytic_cdf,monte_carlo_cdf,bound_T1000,bound_T10000,bound_T100000\n";
  std::vector<PlotSeries> series{{"analytic CDF", {}, {}, {}}, {"Monte-Carlo CDF", {}, {}, {}}};
  for (double h : horizons) series.push_back({"log T/(T x^2), T=" + format_number(h), {}, {}, {}});
  constexpr int kPoints = 500;
  for (int k = 1; k <= kPoints; ++k) {
    const double x = 0.5 * k / kPoints;
    const double analytic = staggered_uniform_gap_cdf(x);
    const double mc = diag.cdf(x);
    csv << format_number(x) << ',' << format_number(analytic) << ',' << format_number(mc);
    series[0].x.push_back(x);
    series[0].mean.push_back(analytic);
    series[1].x.push_back(x);
    series[1].mean.push_back(mc);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const double b = std::log(horizons[h]) / (horizons[h] * x * x);
      csv << ',' << format_number(b);
      series[h + 2].x.push_back(x);
      series[h + 2].mean.push_back(std::min(b, 1.0));
    }
    csv << '\n';
  }
  for (auto& s : series) s.err.assign(s.x.size(), 0.0);

  std::ofstream cross(dir / "figH_crossings.csv", std::ios::binary);
  cross << "horizon,analytic_min_gap,monte_carlo_min_gap\n";
  for (double h : horizons) {
    const double analytic = cdf_crossing(staggered_uniform_gap_cdf, h);
    const double mc = min_gap_from_samples(diag.delta_min_samples, h);
    cross << format_number(h) << ',' << format_number(analytic) << ',' << format_number(mc) << '\n';
  }
  std::ofstream svg(dir / "figH.svg", std::ios::binary);
  svg << render_svg(series, "CDF of the minimum gap and log T/(T x^2)", "probability");
}

}  // namespace matchbandits
