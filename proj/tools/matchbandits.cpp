#include "matchbandits/config.hpp"
#include "matchbandits/format.hpp"
#include "matchbandits/gap_diagnostics.hpp"
#include "matchbandits/harness.hpp"
#include "matchbandits/oracle_check.hpp"
#include "matchbandits/plot.hpp"
#include "matchbandits/reproduce.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>

namespace mb = matchbandits;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kCommands{"run", "sweep", "diagnose-gap", "oracle-check", "reproduce",
                                                    "plot"};

constexpr std::string_view kUsage =
    "usage: matchbandits <command> [options]\n"
    "\n"
    "commands:\n"
    "  run <config.json>                              run an experiment\n"
    "  sweep <config.json> --param P --values V,...   run one experiment per value of P\n"
    "  diagnose-gap <env.json>                        Monte-Carlo minimum-gap diagnostics\n"
    "  oracle-check                                   brute-force check of the matching oracle\n"
    "  reproduce <fig1|...|fig6|figH>                 regenerate figure data\n"
    "  plot <curves.csv>                              render a curves file as SVG\n"
    "\n"
    "Run 'matchbandits <command> --help' for options.\n";

mb::Execution execution(bool serial) { return serial ? mb::Execution::kSerial : mb::Execution::kParallel; }

std::vector<json> parse_values(const std::string& list) {
  std::vector<json> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(json::parse(item));
    } catch (const json::parse_error&) {
      out.emplace_back(item);
    }
  }
  if (out.empty()) throw mb::ConfigError("--values", "no values given");
  return out;
}

int cmd_run(const std::string& file, const std::string& out, bool serial) {
  mb::ExperimentConfig cfg = mb::load_experiment(file);
  if (!out.empty()) cfg.output = out;
  const auto result = mb::run_experiment(cfg, execution(serial));
  mb::write_artifacts(result, cfg.output);
  for (const auto& p : result.policies) {
    std::cout << p.spec.label << ": final max regret " << mb::format_number(p.max_curve().mean.back()) << " +- "
              << mb::format_number(p.max_curve().stderr_.back()) << " (" << p.completed() << "/"
              << p.replicas.size() << " replicas completed)\n";
  }
  std::cout << "wrote " << cfg.output.string() << "\n";
  return 0;
}

int cmd_sweep(const std::string& file, const std::string& param, const std::string& values, const std::string& out,
              bool serial) {
  const json base = mb::read_json(file);
  (void)mb::parse_experiment(base);
  const auto points = mb::sweep_points(base, param, parse_values(values));
  for (const auto& p : points) (void)mb::parse_experiment(p.config);
  const std::filesystem::path dir = out.empty() ? std::filesystem::path(base.value("output", "out")) : std::filesystem::path(out);
  const auto rows = mb::run_sweep(points, dir, execution(serial));
  double lo = rows.front().final_max_regret;
  double hi = lo;
  for (const auto& r : rows) {
    std::cout << r.point << " " << r.policy << ": final max regret " << mb::format_number(r.final_max_regret) << " +- "
              << mb::format_number(r.final_max_regret_stderr) << "\n";
    lo = std::min(lo, r.final_max_regret);
    hi = std::max(hi, r.final_max_regret);
  }
  std::cout << "spread (max - min) " << mb::format_number(hi - lo) << "\nwrote " << (dir / "summary.csv").string()
            << "\n";
  return 0;
}

int cmd_diagnose(const std::string& file, const std::string& out, bool serial) {
  const mb::GapConfig cfg = mb::load_gap_config(file);
  const mb::MarketInstance market = mb::build_market(cfg);
  const auto diag =
      mb::estimate_min_gap(cfg.environment, market, static_cast<double>(cfg.horizon), cfg.samples, cfg.seed,
                           execution(serial));
  json slopes = json::array();
  for (const auto& s : diag.cdf_slopes) slopes.push_back({{"delta0", s.delta0}, {"slope", s.slope}});
  const json report{{"horizon", cfg.horizon},
                    {"samples", cfg.samples},
                    {"min_gap", diag.min_gap},
                    {"crossings", diag.crossings},
                    {"eigen_floor", diag.eigen_floor},
                    {"cdf_slopes", slopes}};
  std::cout << report.dump(2) << "\n";
  if (!out.empty()) {
    std::ofstream o(out, std::ios::binary);
    if (!o) throw mb::Error("cannot write " + out);
    o << report.dump(2) << "\n";
  }
  return 0;
}

int cmd_oracle_check(int instances, std::uint64_t seed) {
  const auto print = [](const std::string& name, const mb::OracleCheckReport& r) {
    std::cout << name << ": " << r.instances << " instances, " << r.checks << " player checks, " << r.violations
              << " violations, worst margin " << mb::format_number(r.worst_margin) << "\n";
    for (const auto& f : r.failures) std::cout << "  " << f << "\n";
    return r.violations == 0;
  };
  bool ok = print("approx_oracle", mb::check_approx_oracle(instances, seed));
  ok = print("oracle_for_uncertainty", mb::check_uncertainty_oracle(std::max(1, instances / 30), 200, 0.05, 0.1, seed)) &&
       ok;
  return ok ? 0 : 1;
}

int cmd_reproduce(const std::string& figure, const mb::ReproduceOptions& opts) {
  const auto& names = mb::figure_names();
  if (std::find(names.begin(), names.end(), figure) == names.end()) {
    throw mb::ConfigError("figure", "unknown figure '" + figure + "'");
  }
  mb::reproduce_figure(figure, opts);
  std::cout << "wrote " << (opts.out / figure).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || std::find(kCommands.begin(), kCommands.end(), std::string_view(argv[1])) == kCommands.end()) {
    const bool help = argc >= 2 && (std::string_view(argv[1]) == "--help" || std::string_view(argv[1]) == "-h");
    (help ? std::cout : std::cerr) << kUsage;
    return help ? 0 : 2;
  }

  CLI::App app{"Online learning in contextual matching markets", "matchbandits"};
  app.require_subcommand(1);
  app.fallthrough();
  bool serial = false;
  app.add_flag("--serial", serial, "run replicas and sampling on one thread");

  std::string config, out, param, values, figure, csv, title = "cumulative regret", y_label = "regret";
  int instances = 300;
  std::uint64_t seed = 1;
  mb::ReproduceOptions ropts;

  auto* run = app.add_subcommand("run", "run an experiment");
  run->add_option("config", config, "experiment JSON")->required();
  run->add_option("--out", out, "output directory (overrides the config)");

  auto* sweep = app.add_subcommand("sweep", "run one experiment per parameter value");
  sweep->add_option("config", config, "base experiment JSON")->required();
  sweep->add_option("--param", param, "dotted path, e.g. policies.0.initial_gap")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--out", out, "output directory");

  auto* diag = app.add_subcommand("diagnose-gap", "Monte-Carlo minimum-gap diagnostics");
  diag->add_option("env", config, "gap config JSON")->required();
  diag->add_option("--out", out, "also write the report to this file");

  auto* check = app.add_subcommand("oracle-check", "brute-force check of the matching oracle");
  check->add_option("--instances", instances, "random instances")->check(CLI::PositiveNumber);
  check->add_option("--seed", seed, "seed");

  auto* repro = app.add_subcommand("reproduce", "regenerate figure data");
  repro->add_option("figure", figure, "fig1 ... fig6 or figH")->required();
  repro->add_option("--horizon", ropts.horizon, "rounds per replica")->check(CLI::PositiveNumber);
  repro->add_option("--replicas", ropts.replicas, "replicas")->check(CLI::PositiveNumber);
  repro->add_option("--seed", ropts.seed, "base seed");
  repro->add_option("--out", ropts.out, "output root");
  repro->add_option("--gap-samples", ropts.gap_samples, "Monte-Carlo draws for figH")->check(CLI::PositiveNumber);

  auto* plot = app.add_subcommand("plot", "render a curves file as SVG");
  plot->add_option("csv", csv, "round,series,mean,stderr file")->required();
  plot->add_option("--out", out, "SVG path (default: next to the CSV)");
  plot->add_option("--title", title, "plot title");
  plot->add_option("--y-label", y_label, "y axis label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(config, out, serial);
    if (*sweep) return cmd_sweep(config, param, values, out, serial);
    if (*diag) return cmd_diagnose(config, out, serial);
    if (*check) return cmd_oracle_check(instances, seed);
    if (*repro) {
      ropts.exec = execution(serial);
      return cmd_reproduce(figure, ropts);
    }
    if (*plot) {
      const std::filesystem::path svg = out.empty() ? std::filesystem::path(csv).replace_extension(".svg") : std::filesystem::path(out);
      mb::plot_curves_file(csv, svg, title, y_label);
      std::cout << "wrote " << svg.string() << "\n";
      return 0;
    }
  } catch (const mb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
