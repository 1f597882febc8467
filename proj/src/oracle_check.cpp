#include "matchbandits/oracle_check.hpp"

#include "matchbandits/format.hpp"
#include "matchbandits/oracle.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

namespace matchbandits {

namespace {

constexpr std::size_t kReportedFailures = 5;

ArmPreferences random_prefs(int n_arms, int n_players, RandomStream& rng) {
  std::vector<std::vector<int>> rankings;
  for (int a = 0; a < n_arms; ++a) {
    std::vector<int> r(static_cast<std::size_t>(n_players));
    std::iota(r.begin(), r.end(), 0);
    shuffle(r, rng);
    rankings.push_back(std::move(r));
  }
  return ArmPreferences(std::move(rankings), n_players);
}

UtilityMatrix random_utilities(int n, int k, RandomStream& rng) {
  UtilityMatrix u(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) u(i, j) = rng.uniform();
  }
  return u;
}

void tally(OracleCheckReport& report, const Vector& got, const Vector& share, double replication, double slack,
           long instance) {
  for (Eigen::Index p = 0; p < got.size(); ++p) {
    const double margin = got(p) - (share(p) / replication - slack);
    ++report.checks;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < -1e-12) {
      ++report.violations;
      if (report.failures.size() < kReportedFailures) {
        report.failures.push_back("instance " + std::to_string(instance) + " player " + std::to_string(p + 1) +
                                  ": margin " + format_number(margin));
      }
    }
  }
}

}  // namespace

OracleCheckReport check_approx_oracle(int instances, std::uint64_t seed) {
  constexpr std::array<double, 3> kTolerances{0.0, 0.05, 0.2};
  OracleCheckReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < instances; ++k) {
    RandomStream rng(seed, Stream::kDiagnostics, static_cast<std::uint64_t>(k));
    const int n = 2 + static_cast<int>(rng.below(3));
    const double tolerance = kTolerances[static_cast<std::size_t>(rng.below(kTolerances.size()))];
    const UtilityMatrix u = random_utilities(n, n, rng);
    const ArmPreferences prefs = random_prefs(n, n, rng);
    const int m = replication_factor(n);
    const auto dist = approx_oracle(u, prefs, tolerance, m);
    tally(report, dist.expected_utilities(u), optimal_stable_share(u, prefs, tolerance), m, tolerance, k);
    ++report.instances;
  }
  return report;
}

OracleCheckReport check_uncertainty_oracle(int instances, int truths, double gamma, double eps,
                                           std::uint64_t seed) {
  OracleCheckReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  constexpr int n = 3;
  const int m = replication_factor(n);
  for (int k = 0; k < instances; ++k) {
    RandomStream rng(seed, Stream::kDiagnostics, static_cast<std::uint64_t>(k));
    const UtilityMatrix u_hat = random_utilities(n, n, rng);
    const ArmPreferences prefs = random_prefs(n, n, rng);
    const auto dist = oracle_for_uncertainty(u_hat, prefs, gamma, eps);
    for (int s = 0; s < truths; ++s) {
      UtilityMatrix u = u_hat;
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) += rng.uniform(-gamma, gamma);
      tally(report, dist.expected_utilities(u), optimal_stable_share(u, prefs, eps), m, 2.0 * gamma + eps, k);
    }
    ++report.instances;
  }
  return report;
}

}  // namespace matchbandits
