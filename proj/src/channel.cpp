#include "lyapstream/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace lyapstream {

namespace {
constexpr int kChunkCeiling = 10'000'000;
}

ChannelModel::ChannelModel(const ChannelParams& params) : params_(params) {
    if (!(params_.bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth_hz must be positive");
    if (!(params_.slot_seconds > 0.0)) throw std::invalid_argument("slot_seconds must be positive");
    if (!(params_.power_budget_w > 0.0)) throw std::invalid_argument("power_budget_w must be positive");
    if (!(params_.pathloss > 0.0)) throw std::invalid_argument("pathloss must be positive");
    if (!std::isfinite(params_.snr_db)) throw std::invalid_argument("snr_db must be finite");
    noise_power_ = params_.pathloss / std::pow(10.0, params_.snr_db / 10.0);
}

double ChannelModel::capacity(double power_w, double gain_sq) const {
    if (power_w < 0.0 || power_w > params_.power_budget_w)
        throw std::invalid_argument(
            fmt::format("power {} W outside [0, {}]", power_w, params_.power_budget_w));
    return bits_per_slot_per_log2() * std::log1p(power_w * gain_sq / noise_power_) / std::numbers::ln2;
}

double ChannelModel::required_power(int n_chunks, double chunk_bits, double gain_sq) const noexcept {
    if (n_chunks <= 0) return 0.0;
    if (gain_sq <= 0.0) return std::numeric_limits<double>::infinity();
    const double spectral = n_chunks * chunk_bits / bits_per_slot_per_log2();
    return noise_power_ / gain_sq * std::expm1(spectral * std::numbers::ln2);
}

std::optional<double> ChannelModel::power_for(int n_chunks, double chunk_bits, double gain_sq) const {
    if (n_chunks < 0) throw std::invalid_argument("chunk count must be nonnegative");
    const double p = required_power(n_chunks, chunk_bits, gain_sq);
    if (p > params_.power_budget_w) return std::nullopt;
    return p;
}

int ChannelModel::max_chunks(double chunk_bits, double gain_sq) const {
    if (gain_sq <= 0.0) return 0;
    const double log_term =
        std::log1p(params_.power_budget_w * gain_sq / noise_power_) / std::numbers::ln2;
    const double estimate = std::floor(bits_per_slot_per_log2() / chunk_bits * log_term);
    int n = estimate >= kChunkCeiling ? kChunkCeiling : static_cast<int>(estimate);
    // The closed form can land one off after rounding; settle on the exact boundary.
    while (n > 0 && required_power(n, chunk_bits, gain_sq) > params_.power_budget_w) --n;
    while (n < kChunkCeiling && required_power(n + 1, chunk_bits, gain_sq) <= params_.power_budget_w) ++n;
    return n;
}

double pathloss_from_distance(double distance, double gamma) {
    if (!(distance > 0.0)) throw std::invalid_argument("distance must be positive");
    return 1.0 / std::pow(distance, gamma);
}

}  // namespace lyapstream
