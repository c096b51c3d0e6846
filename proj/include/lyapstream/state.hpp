#pragma once

#include <cstdint>

namespace lyapstream {

/// Backlogs of the two physical queues and the two virtual queues.
struct SystemState {
    std::int64_t q_chunks = 0;   // transmitter queue Q, chunks
    double z_seconds = 0.0;      // receiver processing backlog Z, seconds
    double w_virtual = 0.0;      // average-power virtual queue W
    double theta_virtual = 0.0;  // average-core-usage virtual queue Theta

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// One slot's control: send N chunks at rate r with power P, enhance them
/// at SR depth d on u cores. N == 0 implies P == 0, d == 0, u == 0.
struct Decision {
    int n_chunks = 0;
    int rate = 0;
    double power_w = 0.0;
    int depth = 0;
    int cores = 0;

    friend bool operator==(const Decision&, const Decision&) = default;
};

}  // namespace lyapstream
