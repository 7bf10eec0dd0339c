#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "arith/metalearn.hpp"

namespace arith {

/// Thrown for malformed or unrecognised configuration content.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejects any key of `obj` not listed in `allowed`.
void require_known_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                        std::string_view context);

nlohmann::json to_json(const NetworkSpec& spec);
nlohmann::json to_json(const WeightScheme& scheme);
nlohmann::json to_json(const MetaConfig& config);

NetworkSpec network_from_json(const nlohmann::json& j);

/// Scheme from {"kind": ..., "epsilon": e} / {"kind": "explicit", "weights": [...]}
/// or a preset {"kind": ..., "preset": "normalized"|"scaled"}, which needs n.
WeightScheme scheme_from_json(const nlohmann::json& j, std::optional<std::size_t> n_sources);

/// Overrides the fields of `config` present in `j`. Keys mirror the MetaConfig
/// field names; unknown keys raise ConfigError.
void apply_json(MetaConfig& config, const nlohmann::json& j,
                std::optional<std::size_t> n_sources = std::nullopt);

MetaConfig meta_config_from_json(const nlohmann::json& j,
                                 std::optional<std::size_t> n_sources = std::nullopt);

}  // namespace arith
