#pragma once

// JSON encoding of markets and matchings. Ids are 1-based on the wire and
// 0-based in memory; an unmatched player is written as -1.

#include "matchbandits/market.hpp"

#include <json.hpp>

#include <string>

namespace matchbandits {

nlohmann::json market_to_json(const MarketInstance& market);

/// `path` prefixes field names in ConfigError messages.
MarketInstance market_from_json(const nlohmann::json& j, const std::string& path = "market");

nlohmann::json matching_to_json(const Matching& mu);
Matching matching_from_json(const nlohmann::json& j, int n_arms, const std::string& path = "matching");

}  // namespace matchbandits
