#pragma once

#include "matchbandits/market.hpp"
#include "matchbandits/random.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>

namespace matchbandits {

/// Entries i.i.d. N(mean, variance), then scaled to unit length.
struct NormalizedGaussian {
  double mean = 10.0;
  double variance = 1.0;
};

/// Arm j's context is uniform on the box [lo(j, :), hi(j, :)]. Both K x d.
struct UniformBox {
  Matrix lo;
  Matrix hi;
};

/// Contexts confined to the nonnegative orthant of span(e_1, ..., e_rank).
/// Arm j sits near e_{j mod rank}: x_j = normalize(|e_{j mod rank} + mixing * z|)
/// with z ~ N(0, I_rank). With rank < d the context covariance is singular.
struct OrthonormalMixing {
  int rank = 2;
  double mixing = 0.5;
};

/// x_j = templates(j, :) + jitter * z with z ~ N(0, I_d), scaled back into the
/// unit ball when it leaves it.
struct TemplateJitter {
  Matrix templates;
  double jitter = 0.0;
};

using ContextGenerator = std::variant<NormalizedGaussian, UniformBox, OrthonormalMixing, TemplateJitter>;

enum class NoiseKind { kGaussian, kUniform };

/// Gaussian noise has standard deviation `scale`; uniform noise is on [-scale, scale].
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kGaussian;
  double scale = 0.1;
};

struct StochasticEnvSpec {
  ContextGenerator contexts = NormalizedGaussian{};
  NoiseSpec noise;
};

enum class AdversarialMode { kAlternating, kBernoulli };

/// Alternating: odd rounds use the large-gap generator, even rounds the small-gap
/// one. Bernoulli: each round is small-gap with probability `small_gap_probability`.
struct AdversarialEnvSpec {
  AdversarialMode mode = AdversarialMode::kAlternating;
  double small_gap_probability = 0.5;
  ContextGenerator large_gap;
  ContextGenerator small_gap;
  NoiseSpec noise;
};

using EnvSpec = std::variant<StochasticEnvSpec, AdversarialEnvSpec>;

struct EnvRound {
  ContextSet contexts;
  /// N x K; entry (i, j) is added to player i's reward for arm j this round.
  Matrix noise;
  bool small_gap_regime = false;
};

/// Throws ConfigError (prefixed by `path`) when the generator cannot produce K x d
/// contexts of norm at most `b_x`.
void validate_generator(const ContextGenerator& gen, int n_arms, int dim, double b_x, const std::string& path);
void validate_env(const EnvSpec& env, int n_arms, int dim, double b_x, const std::string& path);

ContextSet sample_contexts(const ContextGenerator& gen, int n_arms, int dim, RandomStream& rng);

Matrix sample_noise(const NoiseSpec& noise, int n_players, int n_arms, RandomStream& rng);

/// One round of an environment. Contexts (and the adversarial regime) come from
/// `context_rng`, noise from `noise_rng`. `t` is 1-based.
EnvRound sample_round(const EnvSpec& env, int n_players, int n_arms, int dim, long t, RandomStream& context_rng,
                      RandomStream& noise_rng);

double noise_scale(const EnvSpec& env);

/// Owns the context and noise streams of one replica.
class Environment {
 public:
  Environment(EnvSpec spec, int n_players, int n_arms, int dim, std::uint64_t seed);

  EnvRound next();
  long rounds() const noexcept { return round_; }
  const EnvSpec& spec() const noexcept { return spec_; }

 private:
  EnvSpec spec_;
  int n_players_;
  int n_arms_;
  int dim_;
  RandomStream context_rng_;
  RandomStream noise_rng_;
  long round_ = 0;
};

/// Smallest |U(i, j) - U(i, j')| over players i and arm pairs j != j'.
double delta_min(const UtilityMatrix& u);

/// Closed-form CDF of the smallest pairwise gap among three independent uniforms
/// on [0, 1/2], [1/4, 3/4] and [1/2, 1] (one player, theta = 1).
double staggered_uniform_gap_cdf(double x);

/// The matching environment for `staggered_uniform_gap_cdf`: one player, d = 1,
/// three arms with the boxes above.
StochasticEnvSpec staggered_uniform_env(double noise_scale = 0.0);
MarketInstance staggered_uniform_market(double noise_scale = 0.0);

/// Random market: arm rankings are uniform permutations, theta entries U[0, 1].
/// Bounds are b_x = 1, b_theta = sqrt(d), noise_r = `noise_r`.
MarketInstance random_market(int n_players, int n_arms, int dim, double noise_r, std::uint64_t seed);

enum class LowerBoundVariant { kNu, kNuPrime };

/// Three-player, three-arm, d = 4 instance pair used in the lower-bound argument.
/// Every arm ranks p1 > p2 > p3.
struct LowerBoundInstance {
  LowerBoundVariant which = LowerBoundVariant::kNu;
  long horizon = 1000;

  static constexpr double kPhi = 0.5;
  static constexpr double kPsi = 0.125;

  double tau() const { return std::pow(static_cast<double>(horizon), -1.0 / 3.0); }
  double beta() const { return which == LowerBoundVariant::kNu ? 1.0 : 1.0 + tau(); }
  /// f(u) = 1 if u > 1 / (1 + tau), else phi.
  double switch_value(double u) const { return u > 1.0 / (1.0 + tau()) ? 1.0 : kPhi; }

  /// Rows (beta, 1, 0, 0), e3, e4.
  Matrix theta() const;
  /// Rows (u, 0, 1, psi), (0, 1, 0, f(u)), (0, 0, psi, 0).
  ContextSet contexts(double u) const;
  MarketInstance market() const;
};

struct LowerBoundRound {
  double draw = 0.0;
  UtilityMatrix utilities;
  ContextSet contexts;
};

/// Draws u ~ U[0, 1] and builds that round's contexts and utilities.
LowerBoundRound lower_bound_round(const LowerBoundInstance& inst, RandomStream& rng);

}  // namespace matchbandits
