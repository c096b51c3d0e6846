#include "lyapstream/queueing.hpp"

#include <algorithm>

namespace lyapstream {

SystemState step(const SystemState& state, const Decision& decision, int arrivals,
                 double sr_work_seconds, const QueueParams& params) {
    if (state.q_chunks < 0 || state.z_seconds < 0.0 || state.w_virtual < 0.0 ||
        state.theta_virtual < 0.0 || arrivals < 0 || sr_work_seconds < 0.0 || decision.n_chunks < 0 ||
        decision.power_w < 0.0 || decision.cores < 0 || params.eta < 0.0 || params.xi < 0.0 ||
        params.slot_seconds < 0.0)
        throw std::invalid_argument("queue step received a negative input");

    SystemState next;
    next.q_chunks = std::max<std::int64_t>(state.q_chunks - decision.n_chunks + arrivals, 0);
    next.z_seconds = std::max(state.z_seconds + sr_work_seconds - params.slot_seconds, 0.0);
    next.w_virtual = std::max(state.w_virtual - params.eta + decision.power_w, 0.0);
    next.theta_virtual = std::max(state.theta_virtual - params.xi + decision.cores, 0.0);
    return next;
}

}  // namespace lyapstream
