#pragma once

#include "matchbandits/environments.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace matchbandits {

/// kSerial is the reference path; kParallel uses OpenMP and must give bitwise
/// identical results.
enum class Execution { kSerial, kParallel };

/// Thread count for kParallel: MATCHBANDITS_THREADS when set to a positive
/// integer, otherwise the OpenMP default.
int thread_limit();

/// Calls body(0), ..., body(n - 1). Under kParallel the calls run concurrently,
/// so `body` must only touch per-index state. An exception escaping any call is
/// rethrown after all calls finish (lowest index first).
void for_each_index(int n, const std::function<void(int)>& body, Execution exec);

struct GapSampleBatch {
  /// delta_min of theta * X^T for each sampled context set X, in sample order.
  std::vector<double> delta_min;
  /// Mean of x x^T over all sampled arms' contexts (d x d).
  Matrix second_moment;
};

inline constexpr long kGapSampleChunk = 4096;

/// Monte-Carlo draws of one round's contexts. Chunk c of kGapSampleChunk draws uses
/// RandomStream(seed, kDiagnostics, c); chunk sums are combined in chunk order.
GapSampleBatch sample_gap_statistics(const ContextGenerator& contexts, const Matrix& theta, int n_arms, long n_samples,
                                     std::uint64_t seed, Execution exec);

}  // namespace matchbandits
