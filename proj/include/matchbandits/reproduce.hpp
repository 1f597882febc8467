#pragma once

#include "matchbandits/config.hpp"
#include "matchbandits/parallel.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace matchbandits {

struct ReproduceOptions {
  long horizon = kDefaultHorizon;
  int replicas = kDefaultReplicas;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  /// Monte-Carlo draws for figH.
  long gap_samples = 1000000;
  Execution exec = Execution::kParallel;
};

/// fig1 ... fig6 and figH.
const std::vector<std::string>& figure_names();

/// Experiment configs behind a figure (one for fig1, fig2 and fig5; one per
/// sweep point for fig3, fig4 and fig6). Names become subdirectories.
std::vector<std::pair<std::string, nlohmann::json>> figure_configs(std::string_view figure,
                                                                   const ReproduceOptions& options);

/// Runs a figure and writes its data under options.out / figure.
void reproduce_figure(std::string_view figure, const ReproduceOptions& options);

/// figH: analytic and Monte-Carlo CDF of the three-uniform gap together with
/// log T / (T x^2) for T in {1e3, 1e4, 1e5}.
void reproduce_gap_cdf(const ReproduceOptions& options);

/// Templates for the adversarial experiments: K arms along (1, ..., 1) / sqrt(d)
/// scaled by evenly spread factors (large gap) or by pairs of nearly equal
/// factors (small gap).
Matrix large_gap_templates(int n_arms, int dim);
Matrix small_gap_templates(int n_arms, int dim);

}  // namespace matchbandits
