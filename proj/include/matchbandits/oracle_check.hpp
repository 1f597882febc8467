#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace matchbandits {

struct OracleCheckReport {
  long instances = 0;
  /// One per (instance, player).
  long checks = 0;
  long violations = 0;
  /// Smallest E[U_D(p)] - (share / m - tolerance) seen.
  double worst_margin = 0.0;
  /// Human-readable description of the first few violations.
  std::vector<std::string> failures;
};

/// Brute-force check of the oracle guarantee: random square markets with
/// N in {2, 3, 4} and tolerance in {0, 0.05, 0.2}; for every player the exact
/// expectation over the support must reach the epsilon-optimal stable share
/// divided by m, minus the tolerance.
OracleCheckReport check_approx_oracle(int instances, std::uint64_t seed);

/// Same guarantee for oracle_for_uncertainty: each N = 3 estimate is paired with
/// `truths` random true matrices within max-distance gamma, and the bound uses the
/// true matrix's shares with slack 2 gamma + eps.
OracleCheckReport check_uncertainty_oracle(int instances, int truths, double gamma, double eps,
                                           std::uint64_t seed);

}  // namespace matchbandits
