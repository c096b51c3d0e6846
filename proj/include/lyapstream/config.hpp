#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lyapstream/simulator.hpp"

namespace lyapstream {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every configuration key with its default value, grouped by section:
///
///   sim:        horizon_slots, seed, warmup_slots
///   channel:    bandwidth_hz, slot_seconds, snr_db, power_budget_w,
///               pathloss | (distance, gamma)
///   queue:      lambda_max, eta, xi
///   controller: v_weight, k_z, k_w, k_theta, u_max, p_bar, buffering_b, mode
///   quality:    table, base_size_bits, size_exponent, core_rate_hz, calibration
nlohmann::json default_config_json();

/// Merges `patch` into `doc`, rejecting keys that `doc` does not have.
void merge_config(nlohmann::json& doc, const nlohmann::json& patch);

/// Applies one `key=value` override. `key` is either `section.name` or a
/// bare `name` that occurs in exactly one section. `value` is read as JSON
/// when it parses as such and as a plain string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Builds a validated SimConfig from a full configuration document.
SimConfig config_from_json(const nlohmann::json& doc);

/// Defaults, then the file (if any), then overrides in order.
nlohmann::json load_config_json(const std::filesystem::path* file,
                                const std::vector<std::string>& overrides);

}  // namespace lyapstream
