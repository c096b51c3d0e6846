#include "lyapstream/config.hpp"

#include <fstream>

#include <fmt/format.h>

namespace lyapstream {

using nlohmann::json;

json default_config_json() {
    const SimConfig d;
    return json{
        {"sim", {{"horizon_slots", d.horizon_slots}, {"seed", d.seed}, {"warmup_slots", d.warmup_slots}}},
        {"channel",
         {{"bandwidth_hz", d.channel.bandwidth_hz},
          {"slot_seconds", d.channel.slot_seconds},
          {"snr_db", d.channel.snr_db},
          {"power_budget_w", d.channel.power_budget_w},
          {"pathloss", nullptr},
          {"distance", nullptr},
          {"gamma", nullptr}}},
        {"queue", {{"lambda_max", d.arrivals.lambda_max}, {"eta", d.eta}, {"xi", d.xi}}},
        {"controller",
         {{"v_weight", d.controller.v_weight},
          {"k_z", d.controller.k_z},
          {"k_w", d.controller.k_w},
          {"k_theta", d.controller.k_theta},
          {"u_max", d.controller.u_max},
          {"p_bar", nullptr},
          {"buffering_b", d.controller.buffering_b},
          {"mode", std::string(to_string(d.controller.mode))}}},
        {"quality",
         {{"table", d.table_path},
          {"base_size_bits", d.sizes.base_size_bits},
          {"size_exponent", d.sizes.exponent},
          {"core_rate_hz", d.compute.core_rate_hz},
          {"calibration", d.compute.calibration}}},
    };
}

void merge_config(json& doc, const json& patch) {
    if (!patch.is_object()) throw ConfigError("configuration must be a JSON object");
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (!doc.contains(it.key())) throw ConfigError(fmt::format("unknown configuration key '{}'", it.key()));
        json& target = doc[it.key()];
        if (target.is_object()) {
            if (!it.value().is_object())
                throw ConfigError(fmt::format("'{}' must be an object", it.key()));
            for (auto inner = it.value().begin(); inner != it.value().end(); ++inner) {
                if (!target.contains(inner.key()))
                    throw ConfigError(fmt::format("unknown configuration key '{}.{}'", it.key(), inner.key()));
                target[inner.key()] = inner.value();
            }
        } else {
            target = it.value();
        }
    }
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));

    std::string section;
    std::string name;
    if (auto dot = key.find('.'); dot != std::string::npos) {
        section = key.substr(0, dot);
        name = key.substr(dot + 1);
        if (!doc.contains(section) || !doc[section].is_object() || !doc[section].contains(name))
            throw ConfigError(fmt::format("unknown configuration key '{}'", key));
    } else {
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (it.value().is_object() && it.value().contains(key)) {
                if (!section.empty())
                    throw ConfigError(fmt::format("key '{}' is ambiguous; use section.{}", key, key));
                section = it.key();
            }
        }
        if (section.empty()) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
        name = key;
    }

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    doc[section][name] = std::move(value);
}

namespace {

template <typename T>
T field(const json& doc, const char* section, const char* name) {
    const json& v = doc.at(section).at(name);
    try {
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() && !v.is_number_unsigned())
                throw ConfigError(fmt::format("{}.{} must be an integer", section, name));
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(fmt::format("{}.{} must be a number", section, name));
        } else {
            if (!v.is_string()) throw ConfigError(fmt::format("{}.{} must be a string", section, name));
        }
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}.{}: {}", section, name, e.what()));
    }
}

template <typename T>
std::optional<T> optional_field(const json& doc, const char* section, const char* name) {
    if (doc.at(section).at(name).is_null()) return std::nullopt;
    return field<T>(doc, section, name);
}

}  // namespace

SimConfig config_from_json(const json& doc) {
    SimConfig c;
    try {
        c.horizon_slots = field<std::int64_t>(doc, "sim", "horizon_slots");
        c.seed = field<std::uint64_t>(doc, "sim", "seed");
        c.warmup_slots = field<std::int64_t>(doc, "sim", "warmup_slots");

        c.channel.bandwidth_hz = field<double>(doc, "channel", "bandwidth_hz");
        c.channel.slot_seconds = field<double>(doc, "channel", "slot_seconds");
        c.channel.snr_db = field<double>(doc, "channel", "snr_db");
        c.channel.power_budget_w = field<double>(doc, "channel", "power_budget_w");
        const auto pathloss = optional_field<double>(doc, "channel", "pathloss");
        const auto distance = optional_field<double>(doc, "channel", "distance");
        const auto gamma = optional_field<double>(doc, "channel", "gamma");
        if (distance || gamma) {
            if (pathloss) throw ConfigError("give either channel.pathloss or channel.distance+gamma, not both");
            if (!distance || !gamma) throw ConfigError("channel.distance and channel.gamma go together");
            c.channel.pathloss = pathloss_from_distance(*distance, *gamma);
        } else if (pathloss) {
            c.channel.pathloss = *pathloss;
        }

        c.arrivals.lambda_max = field<int>(doc, "queue", "lambda_max");
        c.eta = field<double>(doc, "queue", "eta");
        c.xi = field<double>(doc, "queue", "xi");

        c.controller.v_weight = field<double>(doc, "controller", "v_weight");
        c.controller.k_z = field<double>(doc, "controller", "k_z");
        c.controller.k_w = field<double>(doc, "controller", "k_w");
        c.controller.k_theta = field<double>(doc, "controller", "k_theta");
        c.controller.u_max = field<int>(doc, "controller", "u_max");
        c.controller.p_bar = optional_field<double>(doc, "controller", "p_bar");
        c.controller.buffering_b = field<double>(doc, "controller", "buffering_b");
        const auto mode_text = field<std::string>(doc, "controller", "mode");
        const auto mode = parse_mode(mode_text);
        if (!mode) throw ConfigError(fmt::format("controller.mode: unknown mode '{}'", mode_text));
        c.controller.mode = *mode;

        c.table_path = field<std::string>(doc, "quality", "table");
        c.sizes.base_size_bits = field<double>(doc, "quality", "base_size_bits");
        c.sizes.exponent = field<double>(doc, "quality", "size_exponent");
        c.compute.core_rate_hz = field<double>(doc, "quality", "core_rate_hz");
        c.compute.calibration = field<double>(doc, "quality", "calibration");

        c.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

json load_config_json(const std::filesystem::path* file, const std::vector<std::string>& overrides) {
    json doc = default_config_json();
    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", file->string()));
        json patch = json::parse(in, nullptr, false, true);
        if (patch.is_discarded()) throw ConfigError(fmt::format("'{}' is not valid JSON", file->string()));
        merge_config(doc, patch);
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return doc;
}

}  // namespace lyapstream
