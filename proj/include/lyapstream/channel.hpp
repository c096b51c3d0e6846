#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace lyapstream {

/// Realized squared channel gain |h(t)|^2 for one slot.
struct ChannelSample {
    double gain_sq = 0.0;
};

struct ChannelParams {
    double bandwidth_hz = 3.0e6;
    double slot_seconds = 1.0;
    double snr_db = 16.0;         // mean received SNR at 1 W transmit power
    double power_budget_w = 10.0;
    double pathloss = 1.0;        // L = 1 / distance^gamma
};

/// Rayleigh block-fading link with a static pathloss. Noise power is
/// derived from the nominal SNR: sigma^2 = pathloss * 1 W / snr.
class ChannelModel {
public:
    explicit ChannelModel(const ChannelParams& params = {});

    const ChannelParams& params() const noexcept { return params_; }
    double noise_power() const noexcept { return noise_power_; }
    double bits_per_slot_per_log2() const noexcept { return params_.slot_seconds * params_.bandwidth_hz; }

    /// Gain for a given unit-mean exponential fading draw.
    ChannelSample gain_from_fading(double fading) const noexcept { return {params_.pathloss * fading}; }

    template <typename Rng>
    ChannelSample sample_gain(Rng& rng) const {
        std::exponential_distribution<double> fading(1.0);
        return gain_from_fading(fading(rng));
    }

    /// Bits deliverable in one slot: t0 * B * log2(1 + P g / sigma^2).
    /// Throws std::invalid_argument unless 0 <= P <= P0.
    double capacity(double power_w, double gain_sq) const;

    /// Power that makes N chunks of `chunk_bits` exactly fill the slot
    /// capacity, without checking the budget. Infinite when gain_sq == 0
    /// and N > 0.
    double required_power(int n_chunks, double chunk_bits, double gain_sq) const noexcept;

    /// As required_power(), but empty when the result exceeds P0.
    std::optional<double> power_for(int n_chunks, double chunk_bits, double gain_sq) const;

    /// Largest N whose required power stays within P0.
    int max_chunks(double chunk_bits, double gain_sq) const;

private:
    ChannelParams params_;
    double noise_power_;
};

/// Pathloss 1/distance^gamma.
double pathloss_from_distance(double distance, double gamma);

}  // namespace lyapstream
