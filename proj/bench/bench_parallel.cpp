// Serial reference vs OpenMP kernels: sweep runs and oracle checks.

#include <chrono>
#include <cstdlib>
#include <string>

#include <fmt/format.h>
#include <omp.h>

#include "lyapstream/simulator.hpp"

using namespace lyapstream;

namespace {

template <typename F>
double time_it(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int jobs = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
    const std::int64_t horizon = argc > 2 ? std::atoll(argv[2]) : 20000;
    fmt::print("threads={} horizon={}\n", jobs, horizon);

    SimConfig cfg;
    cfg.horizon_slots = horizon;
    const std::vector<double> snr{8, 10, 12, 14, 16, 18, 20};
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4};

    std::vector<SweepRow> a, b;
    const double ts = time_it([&] { a = sweep_serial(cfg, SweepAxis::Snr, snr, seeds); });
    const double tp = time_it([&] { b = sweep(cfg, SweepAxis::Snr, snr, seeds, jobs); });
    fmt::print("sweep  ({} runs): serial {:.3f} s, parallel {:.3f} s, speedup {:.2f}x, identical={}\n", a.size(), ts,
               tp, ts / tp, a == b);

    const QualityModel quality(default_table());
    const ChannelModel channel;
    const Controller ctl(quality, channel, 1.0, {});
    const auto probes = random_probe_states(channel, 5000, 1);
    OracleCheckResult x, y;
    const double os = time_it([&] { x = oracle_check_serial(ctl, probes); });
    const double op = time_it([&] { y = oracle_check(ctl, probes, jobs); });
    fmt::print("oracle ({} states): serial {:.3f} s, parallel {:.3f} s, speedup {:.2f}x, identical={}\n", x.states,
               os, op, os / op, x.max_gap == y.max_gap && x.worst_index == y.worst_index);
    return a == b ? 0 : 1;
}
