#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lyapstream/channel.hpp"
#include "lyapstream/controller.hpp"
#include "lyapstream/quality_model.hpp"
#include "lyapstream/queueing.hpp"
#include "lyapstream/state.hpp"

namespace lyapstream {

struct SimConfig {
    std::int64_t horizon_slots = 100'000;
    std::uint64_t seed = 1;
    std::int64_t warmup_slots = 1'000;  // excluded from summaries, kept in traces

    ChannelParams channel;
    ArrivalProcess arrivals;
    double eta = 2.5;
    double xi = 2.5;
    ControllerConfig controller;

    std::string table_path;  // empty: compiled-in default table
    ChunkSizeModel sizes;
    ComputeModel compute;

    QueueParams queue_params() const { return {channel.slot_seconds, eta, xi}; }
    /// Throws std::invalid_argument on any invalid field.
    void validate() const;
};

/// One slot of a run. Backlogs are those observed when the decision was made.
struct SlotRecord {
    std::int64_t t = 0;
    double gain_sq = 0.0;
    int lambda = 0;
    Decision decision;
    double a_seconds = 0.0;
    SystemState state;
    double psnr_db = 0.0;  // 0 when nothing was sent

    friend bool operator==(const SlotRecord&, const SlotRecord&) = default;
};

struct SummaryMetrics {
    double avg_q_chunks = 0.0;
    double avg_z_seconds = 0.0;
    double avg_psnr_db = 0.0;  // chunk-weighted; 0 if nothing was sent
    double avg_power_w = 0.0;
    double avg_cores = 0.0;
    double delay_occurrence_rate = 0.0;
    double throughput_chunks_per_slot = 0.0;

    friend bool operator==(const SummaryMetrics&, const SummaryMetrics&) = default;
};

struct RunResult {
    std::vector<SlotRecord> trace;  // empty unless requested
    SummaryMetrics summary;
    SystemState final_state;
};

/// Simulates cfg.horizon_slots slots. Identical configs give identical results.
RunResult run(const SimConfig& cfg, bool keep_trace = true);

/// Time averages over records with t >= warmup (all records when the
/// warm-up would swallow the whole trace). Delay threshold is b.
SummaryMetrics summarize(const std::vector<SlotRecord>& trace, std::int64_t warmup, double b);

/// Re-applies each record's decision and arrivals through step() starting
/// from the empty state. Returns the index of the first record whose stored
/// backlogs differ, or nullopt if the whole trace reproduces exactly.
std::optional<std::size_t> replay_mismatch(const std::vector<SlotRecord>& trace,
                                           const QueueParams& params);

enum class SweepAxis { Snr, V };
std::optional<SweepAxis> parse_axis(std::string_view text);

struct SweepRow {
    double axis_value = 0.0;
    std::uint64_t seed = 0;
    SummaryMetrics summary;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepMean {
    double axis_value = 0.0;
    std::size_t runs = 0;
    SummaryMetrics mean;
    SummaryMetrics stddev;  // sample standard deviation, 0 for a single run
};

SimConfig with_axis_value(SimConfig cfg, SweepAxis axis, double value);

/// Reference implementation: one run after another, rows ordered by
/// (value, seed) position.
std::vector<SweepRow> sweep_serial(const SimConfig& cfg, SweepAxis axis,
                                   const std::vector<double>& values,
                                   const std::vector<std::uint64_t>& seeds);

/// Same rows as sweep_serial, with runs spread over `jobs` OpenMP threads.
std::vector<SweepRow> sweep(const SimConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, int jobs);

std::vector<SweepMean> sweep_means(const std::vector<SweepRow>& rows);

/// Random states for decide/oracle comparisons: Q uniform on {0..q_max},
/// Z on [0, z_max], W and Theta on [0, wt_max], gains from the channel sampler.
struct ProbeState {
    SystemState state;
    double gain_sq = 0.0;

    friend bool operator==(const ProbeState&, const ProbeState&) = default;
};
std::vector<ProbeState> random_probe_states(const ChannelModel& channel, std::size_t count,
                                            std::uint64_t seed, int q_max = 50,
                                            double z_max = 10.0, double wt_max = 20.0);

struct OracleCheckResult {
    std::size_t states = 0;
    double max_gap = 0.0;  // max of (decide - oracle) / (1 + |oracle|)
    std::size_t worst_index = 0;
};

/// Compares decide() against oracle_decide() on every probe state.
OracleCheckResult oracle_check_serial(const Controller& controller,
                                      const std::vector<ProbeState>& probes);
OracleCheckResult oracle_check(const Controller& controller, const std::vector<ProbeState>& probes,
                               int jobs);

// CSV surfaces.
inline constexpr const char* kTraceHeader = "t,gain_sq,lambda,N,r,P_w,d,u,a_s,Q,Z,W,Theta,psnr_db";
inline constexpr const char* kSummaryHeader =
    "axis_value,seed,avg_q,avg_z,avg_psnr,avg_p,avg_u,delay_rate,throughput";

void write_trace_csv(std::ostream& out, const std::vector<SlotRecord>& trace);
std::vector<SlotRecord> read_trace_csv(std::istream& in);
/// Summary row; an empty axis value is written as an empty field.
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, std::optional<double> axis_value, std::uint64_t seed,
                       const SummaryMetrics& m);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_means_csv(std::ostream& out, const std::vector<SweepMean>& means);

}  // namespace lyapstream
