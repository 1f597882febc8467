#include "matchbandits/config.hpp"

#include "json_fields.hpp"
#include "matchbandits/gap_diagnostics.hpp"
#include "matchbandits/market_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace matchbandits {

using nlohmann::json;
using detail::Fields;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

NoiseSpec noise_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  f.allow({"kind", "scale"});
  NoiseSpec n;
  const std::string kind = f.string_or("kind", "gaussian");
  if (kind == "gaussian") {
    n.kind = NoiseKind::kGaussian;
  } else if (kind == "uniform") {
    n.kind = NoiseKind::kUniform;
  } else {
    throw ConfigError(f.at("kind"), "expected 'gaussian' or 'uniform'");
  }
  n.scale = f.number("scale");
  if (!(n.scale >= 0.0)) throw ConfigError(f.at("scale"), "must be nonnegative");
  return n;
}

json noise_to_json(const NoiseSpec& n) {
  return json{{"kind", n.kind == NoiseKind::kGaussian ? "gaussian" : "uniform"}, {"scale", n.scale}};
}

ContextGenerator generator_from_fields(const Fields& f, const std::string& kind) {
  if (kind == "normalized-gaussian") {
    return NormalizedGaussian{f.number_or("mean", 10.0), f.number_or("variance", 1.0)};
  }
  if (kind == "uniform-box") {
    return UniformBox{detail::matrix_from_json(f.raw("lo"), f.at("lo")), detail::matrix_from_json(f.raw("hi"), f.at("hi"))};
  }
  if (kind == "orthonormal-mixing") {
    const long long rank = f.integer_or("rank", 2);
    return OrthonormalMixing{static_cast<int>(rank), f.number_or("mixing", 0.5)};
  }
  if (kind == "template-jitter") {
    return TemplateJitter{detail::matrix_from_json(f.raw("templates"), f.at("templates")), f.number_or("jitter", 0.0)};
  }
  throw ConfigError(f.at("kind"), "unknown context generator '" + kind + "'");
}

std::set<std::string> generator_keys(const std::string& kind) {
  if (kind == "normalized-gaussian") return {"mean", "variance"};
  if (kind == "uniform-box") return {"lo", "hi"};
  if (kind == "orthonormal-mixing") return {"rank", "mixing"};
  if (kind == "template-jitter") return {"templates", "jitter"};
  return {};
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(path + "." + key, "unknown key");
  }
}

ContextGenerator generator_from_json(const json& j, const std::string& path, bool allow_noise) {
  Fields f(j, path);
  const std::string kind = f.string("kind");
  auto keys = generator_keys(kind);
  if (keys.empty()) throw ConfigError(f.at("kind"), "unknown context generator '" + kind + "'");
  keys.insert("kind");
  if (allow_noise) keys.insert("noise");
  reject_unknown(j, keys, path);
  return generator_from_fields(f, kind);
}

json generator_to_json(const ContextGenerator& gen) {
  return std::visit(Overloaded{
                        [](const NormalizedGaussian& g) {
                          return json{{"kind", "normalized-gaussian"}, {"mean", g.mean}, {"variance", g.variance}};
                        },
                        [](const UniformBox& g) {
                          return json{{"kind", "uniform-box"},
                                      {"lo", detail::matrix_to_json(g.lo)},
                                      {"hi", detail::matrix_to_json(g.hi)}};
                        },
                        [](const OrthonormalMixing& g) {
                          return json{{"kind", "orthonormal-mixing"}, {"rank", g.rank}, {"mixing", g.mixing}};
                        },
                        [](const TemplateJitter& g) {
                          return json{{"kind", "template-jitter"},
                                      {"templates", detail::matrix_to_json(g.templates)},
                                      {"jitter", g.jitter}};
                        },
                    },
                    gen);
}

std::optional<GapScope> gap_scope_from(const Fields& f) {
  if (!f.has("gap_scope")) return std::nullopt;
  const std::string s = f.string("gap_scope");
  if (s == "top-n") return GapScope::kTopN;
  if (s == "all-arms") return GapScope::kAllArms;
  throw ConfigError(f.at("gap_scope"), "expected 'top-n' or 'all-arms'");
}

PolicySpec policy_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  PolicySpec spec;
  PolicyConfig& c = spec.config;
  const std::string kind = f.string("kind");
  try {
    c.kind = policy_kind_from_string(kind);
  } catch (const ConfigError&) {
    throw ConfigError(f.at("kind"), "unknown policy '" + kind + "'");
  }
  std::set<std::string> keys{"kind", "label", "ridge", "eta", "delta_conf", "gap_scope"};
  switch (c.kind) {
    case PolicyKind::kEtc: keys.insert("explore_length"); break;
    case PolicyKind::kBatchedEtc: keys.insert("initial_explore_length"); break;
    case PolicyKind::kBarb: keys.insert("initial_gap"); break;
    case PolicyKind::kAdeco:
    case PolicyKind::kOfflineOracle:
      keys.insert("gap");
      keys.insert("tolerance");
      break;
  }
  reject_unknown(j, keys, path);
  spec.label = f.string_or("label", std::string(to_string(c.kind)));
  if (spec.label.empty() || spec.label.find_first_of("/\\") != std::string::npos || spec.label == "." ||
      spec.label == "..") {
    throw ConfigError(f.at("label"), "must be a plain directory name");
  }
  c.ridge = f.number_or("ridge", 1.0);
  if (!(c.ridge > 0.0)) throw ConfigError(f.at("ridge"), "must be positive");
  c.eta = f.optional_number("eta");
  if (c.eta && !(*c.eta > 0.0)) throw ConfigError(f.at("eta"), "must be positive");
  c.delta_conf = f.optional_number("delta_conf");
  if (c.delta_conf && !(*c.delta_conf > 0.0 && *c.delta_conf <= 1.0)) {
    throw ConfigError(f.at("delta_conf"), "must lie in (0, 1]");
  }
  c.gap_scope = gap_scope_from(f);
  c.initial_gap = f.number_or("initial_gap", 0.5);
  if (!(c.initial_gap > 0.0)) throw ConfigError(f.at("initial_gap"), "must be positive");
  c.explore_length = f.integer_or("explore_length", 5000);
  if (c.explore_length < 0) throw ConfigError(f.at("explore_length"), "must be nonnegative");
  c.initial_explore_length = f.integer_or("initial_explore_length", 100);
  if (c.initial_explore_length < 1) throw ConfigError(f.at("initial_explore_length"), "must be at least 1");
  c.gap = f.optional_number("gap");
  if (c.gap && !(*c.gap > 0.0)) throw ConfigError(f.at("gap"), "must be positive");
  c.tolerance = f.optional_number("tolerance");
  if (c.tolerance && !(*c.tolerance >= 0.0)) throw ConfigError(f.at("tolerance"), "must be nonnegative");
  return spec;
}

json policy_to_json(const PolicySpec& spec) {
  const PolicyConfig& c = spec.config;
  json j{{"kind", std::string(to_string(c.kind))}, {"label", spec.label}, {"ridge", c.ridge}};
  if (c.eta) j["eta"] = *c.eta;
  if (c.delta_conf) j["delta_conf"] = *c.delta_conf;
  if (c.gap_scope) j["gap_scope"] = *c.gap_scope == GapScope::kTopN ? "top-n" : "all-arms";
  switch (c.kind) {
    case PolicyKind::kEtc: j["explore_length"] = c.explore_length; break;
    case PolicyKind::kBatchedEtc: j["initial_explore_length"] = c.initial_explore_length; break;
    case PolicyKind::kBarb: j["initial_gap"] = c.initial_gap; break;
    case PolicyKind::kAdeco:
    case PolicyKind::kOfflineOracle:
      if (c.gap) j["gap"] = *c.gap;
      if (c.tolerance) j["tolerance"] = *c.tolerance;
      break;
  }
  return j;
}

RegretSpec regret_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  f.allow({"mode", "gap", "tolerance", "alpha"});
  RegretSpec r;
  const std::string mode = f.string_or("mode", "stable");
  if (mode == "stable") {
    r.mode = RegretMode::kStable;
  } else if (mode == "approximate") {
    r.mode = RegretMode::kApproximate;
  } else {
    throw ConfigError(f.at("mode"), "expected 'stable' or 'approximate'");
  }
  r.gap = f.optional_number("gap");
  if (r.gap && !(*r.gap > 0.0)) throw ConfigError(f.at("gap"), "must be positive");
  r.tolerance = f.optional_number("tolerance");
  if (r.tolerance && !(*r.tolerance >= 0.0)) throw ConfigError(f.at("tolerance"), "must be nonnegative");
  r.alpha = f.optional_number("alpha");
  if (r.alpha && !(*r.alpha > 0.0 && *r.alpha <= 1.0)) throw ConfigError(f.at("alpha"), "must lie in (0, 1]");
  return r;
}

json regret_to_json(const RegretSpec& r) {
  json j{{"mode", r.mode == RegretMode::kStable ? "stable" : "approximate"}};
  if (r.gap) j["gap"] = *r.gap;
  if (r.tolerance) j["tolerance"] = *r.tolerance;
  if (r.alpha) j["alpha"] = *r.alpha;
  return j;
}

MarketSpec market_spec_from_json(const json& j) {
  MarketSpec spec;
  Fields m(j, "market");
  m.allow({"generate", "instance", "seed"});
  if (m.has("generate") == m.has("instance")) throw ConfigError("market", "give exactly one of generate or instance");
  if (m.has("instance")) {
    if (m.has("seed")) throw ConfigError("market.seed", "only meaningful with generate");
    spec.instance = market_from_json(m.raw("instance"), "market.instance");
    return spec;
  }
  Fields g(m.raw("generate"), "market.generate");
  g.allow({"n_players", "n_arms", "dim"});
  spec.n_players = static_cast<int>(g.integer("n_players"));
  spec.n_arms = static_cast<int>(g.integer("n_arms"));
  spec.dim = static_cast<int>(g.integer("dim"));
  if (spec.n_players < 1 || spec.n_arms < spec.n_players || spec.dim < 1) {
    throw ConfigError("market.generate", "need 1 <= n_players <= n_arms and dim >= 1");
  }
  if (m.has("seed")) {
    const long long ms = m.integer("seed");
    if (ms < 0) throw ConfigError("market.seed", "must be nonnegative");
    spec.seed = static_cast<std::uint64_t>(ms);
  }
  return spec;
}

std::uint64_t seed_from(const Fields& f) {
  const long long seed = f.integer_or("seed", 1);
  if (seed < 0) throw ConfigError("seed", "must be nonnegative");
  return static_cast<std::uint64_t>(seed);
}

int schema_from(const Fields& f) {
  const int v = static_cast<int>(f.integer("schema_version"));
  if (v != kSchemaVersion) {
    throw ConfigError("schema_version",
                      "unsupported version " + std::to_string(v) + ", expected " + std::to_string(kSchemaVersion));
  }
  return v;
}

MarketInstance market_from_spec(const MarketSpec& spec, const EnvSpec& env, std::uint64_t seed) {
  if (spec.instance) return *spec.instance;
  return random_market(spec.n_players, spec.n_arms, spec.dim, noise_scale(env), spec.seed.value_or(seed));
}

}  // namespace

EnvSpec env_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  const std::string kind = f.string("kind");
  if (kind == "adversarial") {
    f.allow({"kind", "mode", "p", "large", "small", "noise"});
    AdversarialEnvSpec a;
    const std::string mode = f.string("mode");
    if (mode == "alternating") {
      a.mode = AdversarialMode::kAlternating;
    } else if (mode == "bernoulli") {
      a.mode = AdversarialMode::kBernoulli;
      a.small_gap_probability = f.number("p");
    } else {
      throw ConfigError(f.at("mode"), "expected 'alternating' or 'bernoulli'");
    }
    if (a.mode == AdversarialMode::kAlternating && f.has("p")) {
      throw ConfigError(f.at("p"), "only meaningful in bernoulli mode");
    }
    a.large_gap = generator_from_json(f.raw("large"), f.at("large"), false);
    a.small_gap = generator_from_json(f.raw("small"), f.at("small"), false);
    a.noise = f.has("noise") ? noise_from_json(f.raw("noise"), f.at("noise")) : NoiseSpec{};
    return a;
  }
  StochasticEnvSpec s;
  s.contexts = generator_from_json(j, path, true);
  s.noise = f.has("noise") ? noise_from_json(f.raw("noise"), f.at("noise")) : NoiseSpec{};
  return s;
}

json env_to_json(const EnvSpec& env) {
  return std::visit(Overloaded{
                        [](const StochasticEnvSpec& s) {
                          json j = generator_to_json(s.contexts);
                          j["noise"] = noise_to_json(s.noise);
                          return j;
                        },
                        [](const AdversarialEnvSpec& a) {
                          json j{{"kind", "adversarial"},
                                 {"mode", a.mode == AdversarialMode::kAlternating ? "alternating" : "bernoulli"},
                                 {"large", generator_to_json(a.large_gap)},
                                 {"small", generator_to_json(a.small_gap)},
                                 {"noise", noise_to_json(a.noise)}};
                          if (a.mode == AdversarialMode::kBernoulli) j["p"] = a.small_gap_probability;
                          return j;
                        },
                    },
                    env);
}

ExperimentConfig parse_experiment(const json& j) {
  Fields f(j, "");
  f.allow({"schema_version", "seed", "horizon", "replicas", "market", "environment", "policies", "regret", "compare",
           "output"});
  ExperimentConfig c;
  c.schema_version = schema_from(f);
  c.seed = seed_from(f);

  if (!f.has("horizon")) c.defaulted.push_back("horizon");
  c.horizon = static_cast<long>(f.integer_or("horizon", kDefaultHorizon));
  if (c.horizon < 1) throw ConfigError("horizon", "must be at least 1");
  if (!f.has("replicas")) c.defaulted.push_back("replicas");
  c.replicas = static_cast<int>(f.integer_or("replicas", kDefaultReplicas));
  if (c.replicas < 1) throw ConfigError("replicas", "must be at least 1");

  c.environment = f.has("environment") ? env_from_json(f.raw("environment"), "environment") : StochasticEnvSpec{};
  if (!f.has("environment")) c.defaulted.push_back("environment");
  if (!f.has("environment") || !f.raw("environment").contains("noise")) c.defaulted.push_back("environment.noise");

  if (f.has("market")) {
    c.market = market_spec_from_json(f.raw("market"));
  } else {
    c.defaulted.push_back("market");
  }

  const auto& policies = f.raw("policies");
  if (!policies.is_array() || policies.empty()) throw ConfigError("policies", "expected a nonempty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const std::string path = "policies[" + std::to_string(i) + "]";
    c.policies.push_back(policy_from_json(policies[i], path));
    if (!labels.insert(c.policies.back().label).second) throw ConfigError(path + ".label", "duplicate label");
  }

  c.regret = f.has("regret") ? regret_from_json(f.raw("regret"), "regret") : RegretSpec{};

  if (f.has("compare")) {
    const auto& cmp = f.raw("compare");
    if (!cmp.is_array()) throw ConfigError("compare", "expected an array of [label, label] pairs");
    for (std::size_t i = 0; i < cmp.size(); ++i) {
      const std::string path = "compare[" + std::to_string(i) + "]";
      const auto& pair = cmp[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw ConfigError(path, "expected [label, label]");
      }
      const auto a = pair[0].get<std::string>();
      const auto b = pair[1].get<std::string>();
      if (!labels.contains(a) || !labels.contains(b)) throw ConfigError(path, "unknown policy label");
      c.compare.emplace_back(a, b);
    }
  }

  c.output = f.string_or("output", "out");
  if (!f.has("output")) c.defaulted.push_back("output");

  // Cross-field checks against the concrete market.
  const MarketInstance market = build_market(c);
  validate_env(c.environment, market.n_arms(), market.dim(), market.bounds().b_x, "environment");
  for (std::size_t i = 0; i < c.policies.size(); ++i) {
    PolicyConfig pc = c.policies[i].config;
    pc.horizon = c.horizon;
    const std::string path = "policies[" + std::to_string(i) + "]";
    try {
      if (pc.kind == PolicyKind::kOfflineOracle) {
        const double gap = pc.gap.value_or(std::pow(static_cast<double>(c.horizon), -1.0 / 3.0));
        OfflineOracle probe(market, gap, pc.tolerance.value_or(gap / 2.0), 0);
      } else {
        (void)make_policy(market.view(), pc);
      }
    } catch (const ConfigError& e) {
      const std::string& p = e.path();
      const std::string suffix = p.rfind("policy", 0) == 0 ? p.substr(6) : "";
      const std::string what = e.what();
      const auto colon = what.find(": ");
      throw ConfigError(path + suffix, colon == std::string::npos ? what : what.substr(colon + 2));
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  }
  return c;
}

json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", file.string() + ": invalid JSON: " + e.what());
  }
}

ExperimentConfig load_experiment(const std::filesystem::path& file) { return parse_experiment(read_json(file)); }

json experiment_to_json(const ExperimentConfig& c) {
  json j{{"schema_version", c.schema_version},
         {"seed", c.seed},
         {"horizon", c.horizon},
         {"replicas", c.replicas},
         {"environment", env_to_json(c.environment)},
         {"regret", regret_to_json(c.regret)},
         {"output", c.output.string()}};
  if (c.market.instance) {
    j["market"] = json{{"instance", market_to_json(*c.market.instance)}};
  } else {
    j["market"] = json{{"generate", {{"n_players", c.market.n_players}, {"n_arms", c.market.n_arms}, {"dim", c.market.dim}}}};
    if (c.market.seed) j["market"]["seed"] = *c.market.seed;
  }
  json policies = json::array();
  for (const auto& p : c.policies) policies.push_back(policy_to_json(p));
  j["policies"] = std::move(policies);
  if (!c.compare.empty()) {
    json cmp = json::array();
    for (const auto& [a, b] : c.compare) cmp.push_back(json::array({a, b}));
    j["compare"] = std::move(cmp);
  }
  return j;
}

MarketInstance build_market(const ExperimentConfig& config) {
  return market_from_spec(config.market, config.environment, config.seed);
}

GapConfig parse_gap_config(const json& j) {
  Fields f(j, "");
  f.allow({"schema_version", "seed", "horizon", "samples", "market", "environment"});
  GapConfig c;
  c.schema_version = schema_from(f);
  c.seed = seed_from(f);
  c.horizon = static_cast<long>(f.integer_or("horizon", kDefaultHorizon));
  if (c.horizon < 2) throw ConfigError("horizon", "must be at least 2");
  c.samples = static_cast<long>(f.integer_or("samples", c.samples));
  if (c.samples < kMinGapSamples) {
    throw ConfigError("samples", "must be at least " + std::to_string(kMinGapSamples));
  }
  if (f.has("market")) c.market = market_spec_from_json(f.raw("market"));
  const EnvSpec env = env_from_json(f.raw("environment"), "environment");
  if (!std::holds_alternative<StochasticEnvSpec>(env)) {
    throw ConfigError("environment", "gap diagnostics need a stochastic environment");
  }
  c.environment = std::get<StochasticEnvSpec>(env);
  const MarketInstance market = build_market(c);
  validate_env(c.environment, market.n_arms(), market.dim(), market.bounds().b_x, "environment");
  return c;
}

GapConfig load_gap_config(const std::filesystem::path& file) { return parse_gap_config(read_json(file)); }

MarketInstance build_market(const GapConfig& config) {
  return market_from_spec(config.market, config.environment, config.seed);
}

void set_json_path(json& j, const std::string& path, json value) {
  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError(path, "empty parameter path");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& key = parts[i];
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw ConfigError(path, "'" + key + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError(path, "index " + key + " out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError(path, "'" + key + "' does not name an object member");
      node = &(*node)[key];
    }
    if (last) *node = std::move(value);
  }
}

}  // namespace matchbandits
