#include "matchbandits/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace matchbandits {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_shape(const Matrix& m, int rows, int cols, const std::string& path) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(path, "expected a " + std::to_string(rows) + " x " + std::to_string(cols) + " matrix, got " +
                                std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ConfigError(path, "entries must be finite");
}

constexpr double kNormSlack = 1e-12;

}  // namespace

void validate_generator(const ContextGenerator& gen, int n_arms, int dim, double b_x, const std::string& path) {
  if (n_arms < 1 || dim < 1) throw ConfigError(path, "need at least one arm and one dimension");
  std::visit(Overloaded{
                 [&](const NormalizedGaussian& g) {
                   if (!(g.variance >= 0.0) || !std::isfinite(g.mean) || !std::isfinite(g.variance)) {
                     throw ConfigError(path + ".variance", "must be finite and nonnegative");
                   }
                   if (g.variance == 0.0 && g.mean == 0.0) throw ConfigError(path, "contexts would be zero vectors");
                   if (b_x < 1.0 - kNormSlack) throw ConfigError(path, "unit-norm contexts exceed b_x");
                 },
                 [&](const UniformBox& g) {
                   require_shape(g.lo, n_arms, dim, path + ".lo");
                   require_shape(g.hi, n_arms, dim, path + ".hi");
                   if ((g.lo.array() > g.hi.array()).any()) throw ConfigError(path, "lo must not exceed hi");
                   const Matrix corner = g.lo.cwiseAbs().cwiseMax(g.hi.cwiseAbs());
                   if (corner.rowwise().norm().maxCoeff() > b_x * (1.0 + kNormSlack)) {
                     throw ConfigError(path, "box corners exceed b_x");
                   }
                 },
                 [&](const OrthonormalMixing& g) {
                   if (g.rank < 1 || g.rank > dim) throw ConfigError(path + ".rank", "must lie in [1, dim]");
                   if (!(g.mixing >= 0.0) || !std::isfinite(g.mixing)) {
                     throw ConfigError(path + ".mixing", "must be finite and nonnegative");
                   }
                   if (b_x < 1.0 - kNormSlack) throw ConfigError(path, "unit-norm contexts exceed b_x");
                 },
                 [&](const TemplateJitter& g) {
                   require_shape(g.templates, n_arms, dim, path + ".templates");
                   if (!(g.jitter >= 0.0) || !std::isfinite(g.jitter)) {
                     throw ConfigError(path + ".jitter", "must be finite and nonnegative");
                   }
                   if (g.templates.rowwise().norm().maxCoeff() > 1.0 + kNormSlack) {
                     throw ConfigError(path + ".templates", "rows must lie in the unit ball");
                   }
                   if (b_x < 1.0 - kNormSlack) throw ConfigError(path, "unit-ball contexts exceed b_x");
                 },
             },
             gen);
}

void validate_env(const EnvSpec& env, int n_arms, int dim, double b_x, const std::string& path) {
  const auto check_noise = [&](const NoiseSpec& n) {
    if (!(n.scale >= 0.0) || !std::isfinite(n.scale)) throw ConfigError(path + ".noise.scale", "must be nonnegative");
  };
  std::visit(Overloaded{
                 [&](const StochasticEnvSpec& s) {
                   validate_generator(s.contexts, n_arms, dim, b_x, path);
                   check_noise(s.noise);
                 },
                 [&](const AdversarialEnvSpec& a) {
                   if (!(a.small_gap_probability >= 0.0 && a.small_gap_probability <= 1.0)) {
                     throw ConfigError(path + ".p", "must lie in [0, 1]");
                   }
                   validate_generator(a.large_gap, n_arms, dim, b_x, path + ".large");
                   validate_generator(a.small_gap, n_arms, dim, b_x, path + ".small");
                   check_noise(a.noise);
                 },
             },
             env);
}

ContextSet sample_contexts(const ContextGenerator& gen, int n_arms, int dim, RandomStream& rng) {
  ContextSet x(n_arms, dim);
  std::visit(Overloaded{
                 [&](const NormalizedGaussian& g) {
                   const double sd = std::sqrt(g.variance);
                   for (int j = 0; j < n_arms; ++j) {
                     for (int k = 0; k < dim; ++k) x(j, k) = g.mean + sd * rng.normal();
                     x.row(j) /= x.row(j).norm();
                   }
                 },
                 [&](const UniformBox& g) {
                   for (int j = 0; j < n_arms; ++j) {
                     for (int k = 0; k < dim; ++k) x(j, k) = rng.uniform(g.lo(j, k), g.hi(j, k));
                   }
                 },
                 [&](const OrthonormalMixing& g) {
                   x.setZero();
                   for (int j = 0; j < n_arms; ++j) {
                     for (int k = 0; k < g.rank; ++k) {
                       const double base = (k == j % g.rank) ? 1.0 : 0.0;
                       x(j, k) = std::abs(base + g.mixing * rng.normal());
                     }
                     x.row(j) /= x.row(j).norm();
                   }
                 },
                 [&](const TemplateJitter& g) {
                   for (int j = 0; j < n_arms; ++j) {
                     for (int k = 0; k < dim; ++k) x(j, k) = g.templates(j, k) + g.jitter * rng.normal();
                     const double n = x.row(j).norm();
                     if (n > 1.0) x.row(j) /= n;
                   }
                 },
             },
             gen);
  return x;
}

Matrix sample_noise(const NoiseSpec& noise, int n_players, int n_arms, RandomStream& rng) {
  Matrix out(n_players, n_arms);
  for (int i = 0; i < n_players; ++i) {
    for (int j = 0; j < n_arms; ++j) {
      out(i, j) = noise.kind == NoiseKind::kGaussian ? noise.scale * rng.normal()
                                                     : rng.uniform(-noise.scale, noise.scale);
    }
  }
  if (noise.scale == 0.0) out.setZero();
  return out;
}

EnvRound sample_round(const EnvSpec& env, int n_players, int n_arms, int dim, long t, RandomStream& context_rng,
                      RandomStream& noise_rng) {
  EnvRound round;
  std::visit(Overloaded{
                 [&](const StochasticEnvSpec& s) {
                   round.contexts = sample_contexts(s.contexts, n_arms, dim, context_rng);
                   round.noise = sample_noise(s.noise, n_players, n_arms, noise_rng);
                 },
                 [&](const AdversarialEnvSpec& a) {
                   round.small_gap_regime = a.mode == AdversarialMode::kAlternating
                                                ? t % 2 == 0
                                                : context_rng.bernoulli(a.small_gap_probability);
                   round.contexts = sample_contexts(round.small_gap_regime ? a.small_gap : a.large_gap, n_arms, dim,
                                                    context_rng);
                   round.noise = sample_noise(a.noise, n_players, n_arms, noise_rng);
                 },
             },
             env);
  return round;
}

double noise_scale(const EnvSpec& env) {
  return std::visit([](const auto& e) { return e.noise.scale; }, env);
}

Environment::Environment(EnvSpec spec, int n_players, int n_arms, int dim, std::uint64_t seed)
    : spec_(std::move(spec)),
      n_players_(n_players),
      n_arms_(n_arms),
      dim_(dim),
      context_rng_(seed, Stream::kContexts),
      noise_rng_(seed, Stream::kNoise) {}

EnvRound Environment::next() {
  ++round_;
  return sample_round(spec_, n_players_, n_arms_, dim_, round_, context_rng_, noise_rng_);
}

double delta_min(const UtilityMatrix& u) {
  if (u.cols() < 2) throw DimensionError("delta_min needs at least two arms");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      for (Eigen::Index k = j + 1; k < u.cols(); ++k) best = std::min(best, std::abs(u(i, j) - u(i, k)));
    }
  }
  return best;
}

double staggered_uniform_gap_cdf(double x) {
  if (x < 0.0) return 0.0;
  if (x >= 0.5) return 1.0;
  if (x <= 0.125) return 1.0 - 8.0 * (8.0 / 3.0 * x * x * x - x * x / 4.0 - x / 2.0 + 1.0 / 8.0);
  if (x <= 0.25) return 1.0 - 8.0 * (0.75 * x * x - 0.625 * x + 25.0 / 192.0);
  return 1.0 - 8.0 * (-4.0 / 3.0 * x * x * x + 2.0 * x * x - x + 1.0 / 6.0);
}

StochasticEnvSpec staggered_uniform_env(double noise_scale) {
  UniformBox box;
  box.lo = Matrix(3, 1);
  box.hi = Matrix(3, 1);
  box.lo << 0.0, 0.25, 0.5;
  box.hi << 0.5, 0.75, 1.0;
  return StochasticEnvSpec{box, NoiseSpec{NoiseKind::kGaussian, noise_scale}};
}

MarketInstance staggered_uniform_market(double noise_scale) {
  return MarketInstance(ArmPreferences::identity(3, 1), Matrix::Ones(1, 1), Bounds{1.0, 1.0, noise_scale});
}

MarketInstance random_market(int n_players, int n_arms, int dim, double noise_r, std::uint64_t seed) {
  if (n_players < 1 || n_arms < n_players || dim < 1) throw ConfigError("market", "need 1 <= N <= K and d >= 1");
  RandomStream rng(seed, Stream::kMarket);
  std::vector<std::vector<int>> rankings(static_cast<std::size_t>(n_arms));
  for (auto& order : rankings) {
    order.resize(static_cast<std::size_t>(n_players));
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
  }
  Matrix theta(n_players, dim);
  for (int i = 0; i < n_players; ++i) {
    for (int k = 0; k < dim; ++k) theta(i, k) = rng.uniform();
  }
  return MarketInstance(ArmPreferences(std::move(rankings), n_players), std::move(theta),
                        Bounds{1.0, std::sqrt(static_cast<double>(dim)), noise_r});
}

Matrix LowerBoundInstance::theta() const {
  Matrix t = Matrix::Zero(3, 4);
  t(0, 0) = beta();
  t(0, 1) = 1.0;
  t(1, 2) = 1.0;
  t(2, 3) = 1.0;
  return t;
}

ContextSet LowerBoundInstance::contexts(double u) const {
  ContextSet x = ContextSet::Zero(3, 4);
  x(0, 0) = u;
  x(0, 2) = 1.0;
  x(0, 3) = kPsi;
  x(1, 1) = 1.0;
  x(1, 3) = switch_value(u);
  x(2, 2) = kPsi;
  return x;
}

MarketInstance LowerBoundInstance::market() const {
  const double b = beta();
  const Bounds bounds{std::sqrt(2.0 + kPsi * kPsi), std::sqrt(b * b + 1.0), 1.0};
  return MarketInstance(ArmPreferences::identity(3, 3), theta(), bounds);
}

LowerBoundRound lower_bound_round(const LowerBoundInstance& inst, RandomStream& rng) {
  LowerBoundRound out;
  out.draw = rng.uniform();
  out.contexts = inst.contexts(out.draw);
  out.utilities = inst.theta() * out.contexts.transpose();
  return out;
}

}  // namespace matchbandits
