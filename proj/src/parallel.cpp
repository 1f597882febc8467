#include "matchbandits/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <string>

namespace matchbandits {

int thread_limit() {
  if (const char* env = std::getenv("MATCHBANDITS_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

void for_each_index(int n, const std::function<void(int)>& body, Execution exec) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(n, 0)));
  const auto guarded = [&](int i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (exec == Execution::kSerial) {
    for (int i = 0; i < n; ++i) guarded(i);
  } else {
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_limit())
    for (int i = 0; i < n; ++i) guarded(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

struct ChunkResult {
  std::vector<double> delta_min;
  Matrix moment_sum;
};

ChunkResult sample_chunk(const ContextGenerator& contexts, const Matrix& theta, int n_arms, long begin, long end,
                         std::uint64_t seed, long chunk) {
  RandomStream rng(seed, Stream::kDiagnostics, static_cast<std::uint64_t>(chunk));
  const int dim = static_cast<int>(theta.cols());
  ChunkResult out;
  out.delta_min.reserve(static_cast<std::size_t>(end - begin));
  out.moment_sum = Matrix::Zero(dim, dim);
  for (long s = begin; s < end; ++s) {
    const ContextSet x = sample_contexts(contexts, n_arms, dim, rng);
    out.delta_min.push_back(delta_min(theta * x.transpose()));
    out.moment_sum.noalias() += x.transpose() * x;
  }
  return out;
}

}  // namespace

GapSampleBatch sample_gap_statistics(const ContextGenerator& contexts, const Matrix& theta, int n_arms, long n_samples,
                                     std::uint64_t seed, Execution exec) {
  if (n_samples < 1) throw DimensionError("need at least one sample");
  const long n_chunks = (n_samples + kGapSampleChunk - 1) / kGapSampleChunk;
  std::vector<ChunkResult> chunks(static_cast<std::size_t>(n_chunks));
  for_each_index(
      static_cast<int>(n_chunks),
      [&](int c) {
        const long begin = c * kGapSampleChunk;
        const long end = std::min(n_samples, begin + kGapSampleChunk);
        chunks[static_cast<std::size_t>(c)] = sample_chunk(contexts, theta, n_arms, begin, end, seed, c);
      },
      exec);

  GapSampleBatch out;
  out.delta_min.reserve(static_cast<std::size_t>(n_samples));
  out.second_moment = Matrix::Zero(theta.cols(), theta.cols());
  for (auto& chunk : chunks) {
    out.delta_min.insert(out.delta_min.end(), chunk.delta_min.begin(), chunk.delta_min.end());
    out.second_moment += chunk.moment_sum;
  }
  out.second_moment /= static_cast<double>(n_samples) * n_arms;
  return out;
}

}  // namespace matchbandits
