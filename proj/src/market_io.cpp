#include "matchbandits/market_io.hpp"

#include <set>

namespace matchbandits {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(path + "." + key, "unknown key");
  }
}

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "." + key, "missing field");
  return j.at(key);
}

int positive_int(const json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError(path + "." + key, "expected a positive integer");
  return v.get<int>();
}

double number(const json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

}  // namespace

json market_to_json(const MarketInstance& market) {
  json prefs = json::array();
  for (const auto& ranking : market.arm_prefs().rankings()) {
    json row = json::array();
    for (int p : ranking) row.push_back(p + 1);
    prefs.push_back(std::move(row));
  }
  json theta = json::array();
  for (int i = 0; i < market.n_players(); ++i) {
    json row = json::array();
    for (int c = 0; c < market.dim(); ++c) row.push_back(market.theta()(i, c));
    theta.push_back(std::move(row));
  }
  return json{{"n_players", market.n_players()},
              {"n_arms", market.n_arms()},
              {"dim", market.dim()},
              {"arm_prefs", std::move(prefs)},
              {"theta", std::move(theta)},
              {"bounds",
               {{"b_x", market.bounds().b_x},
                {"b_theta", market.bounds().b_theta},
                {"noise_r", market.bounds().noise_r}}}};
}

MarketInstance market_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  reject_unknown_keys(j, {"n_players", "n_arms", "dim", "arm_prefs", "theta", "bounds"}, path);
  const int n = positive_int(j, "n_players", path);
  const int k = positive_int(j, "n_arms", path);
  const int d = positive_int(j, "dim", path);

  const auto& prefs_json = field(j, "arm_prefs", path);
  if (!prefs_json.is_array() || static_cast<int>(prefs_json.size()) != k) {
    throw ConfigError(path + ".arm_prefs", "expected " + std::to_string(k) + " rankings");
  }
  std::vector<std::vector<int>> rankings;
  for (std::size_t a = 0; a < prefs_json.size(); ++a) {
    const std::string here = path + ".arm_prefs[" + std::to_string(a) + "]";
    const auto& row = prefs_json[a];
    if (!row.is_array() || static_cast<int>(row.size()) != n) throw ConfigError(here, "expected a permutation of 1..n_players");
    std::vector<int> ranking;
    std::set<int> seen;
    for (const auto& v : row) {
      if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > n || !seen.insert(v.get<int>()).second) {
        throw ConfigError(here, "expected a permutation of 1..n_players");
      }
      ranking.push_back(v.get<int>() - 1);
    }
    rankings.push_back(std::move(ranking));
  }

  const auto& theta_json = field(j, "theta", path);
  if (!theta_json.is_array() || static_cast<int>(theta_json.size()) != n) {
    throw ConfigError(path + ".theta", "expected " + std::to_string(n) + " vectors");
  }
  Matrix theta(n, d);
  for (int i = 0; i < n; ++i) {
    const auto& row = theta_json[static_cast<std::size_t>(i)];
    const std::string here = path + ".theta[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != d) throw ConfigError(here, "expected " + std::to_string(d) + " entries");
    for (int c = 0; c < d; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw ConfigError(here, "expected numbers");
      theta(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }

  const auto& bounds_json = field(j, "bounds", path);
  const std::string bpath = path + ".bounds";
  if (!bounds_json.is_object()) throw ConfigError(bpath, "expected an object");
  reject_unknown_keys(bounds_json, {"b_x", "b_theta", "noise_r"}, bpath);
  Bounds bounds{number(bounds_json, "b_x", bpath), number(bounds_json, "b_theta", bpath),
                number(bounds_json, "noise_r", bpath)};
  try {
    return MarketInstance(ArmPreferences(std::move(rankings), n), std::move(theta), bounds);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

json matching_to_json(const Matching& mu) {
  json out = json::array();
  for (int a : mu.assignment()) out.push_back(a == kUnmatched ? -1 : a + 1);
  return out;
}

Matching matching_from_json(const json& j, int n_arms, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of arm ids");
  std::vector<int> arms;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected integer arm ids");
    const int a = v.get<int>();
    if (a == -1) {
      arms.push_back(kUnmatched);
    } else if (a >= 1 && a <= n_arms) {
      arms.push_back(a - 1);
    } else {
      throw ConfigError(path, "arm id " + std::to_string(a) + " out of range");
    }
  }
  Matching mu(std::move(arms));
  if (!mu.is_valid(n_arms)) throw ConfigError(path, "arm assigned to two players");
  return mu;
}

}  // namespace matchbandits
