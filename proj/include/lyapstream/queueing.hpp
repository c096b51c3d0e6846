#pragma once

#include <random>
#include <stdexcept>

#include "lyapstream/state.hpp"

namespace lyapstream {

/// Chunk requests per slot, uniform on {0, ..., lambda_max}.
struct ArrivalProcess {
    int lambda_max = 6;

    template <typename Rng>
    int draw(Rng& rng) const {
        if (lambda_max <= 0) return 0;
        std::uniform_int_distribution<int> dist(0, lambda_max);
        return dist(rng);
    }
};

/// Long-run average targets and the slot length that drains Z.
struct QueueParams {
    double slot_seconds = 1.0;  // t0
    double eta = 2.5;           // average power target
    double xi = 2.5;            // average core-usage target
};

/// Advances all four backlogs by one slot:
///   Q' = max(Q - N + lambda, 0)    Z' = max(Z + a - t0, 0)
///   W' = max(W - eta + P, 0)       Theta' = max(Theta - xi + u, 0)
/// Throws std::invalid_argument on negative inputs.
SystemState step(const SystemState& state, const Decision& decision, int arrivals,
                 double sr_work_seconds, const QueueParams& params);

}  // namespace lyapstream
