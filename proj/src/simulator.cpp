#include "lyapstream/simulator.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <omp.h>

namespace lyapstream {

namespace {

enum : std::uint32_t { kChannelStream = 0xC4A7, kArrivalStream = 0xA771, kProbeStream = 0x9B0E };

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return std::mt19937_64(seq);
}

QualityTable table_for(const SimConfig& cfg) {
    return cfg.table_path.empty() ? default_table() : load_table(cfg.table_path);
}

class SummaryAccumulator {
public:
    explicit SummaryAccumulator(double b) : b_(b) {}

    void add(const SlotRecord& r) {
        ++count_;
        q_ += static_cast<double>(r.state.q_chunks);
        z_ += r.state.z_seconds;
        p_ += r.decision.power_w;
        u_ += r.decision.cores;
        sent_ += r.decision.n_chunks;
        weighted_psnr_ += r.psnr_db * r.decision.n_chunks;
        if (r.state.z_seconds > b_) ++delayed_;
    }

    SummaryMetrics finish() const {
        SummaryMetrics m;
        if (count_ == 0) return m;
        const double n = static_cast<double>(count_);
        m.avg_q_chunks = q_ / n;
        m.avg_z_seconds = z_ / n;
        m.avg_psnr_db = sent_ > 0 ? weighted_psnr_ / static_cast<double>(sent_) : 0.0;
        m.avg_power_w = p_ / n;
        m.avg_cores = u_ / n;
        m.delay_occurrence_rate = static_cast<double>(delayed_) / n;
        m.throughput_chunks_per_slot = static_cast<double>(sent_) / n;
        return m;
    }

private:
    double b_;
    std::int64_t count_ = 0;
    double q_ = 0.0, z_ = 0.0, p_ = 0.0, u_ = 0.0, weighted_psnr_ = 0.0;
    std::int64_t sent_ = 0;
    std::int64_t delayed_ = 0;
};

std::int64_t effective_warmup(std::int64_t warmup, std::int64_t horizon) {
    return warmup < horizon ? warmup : 0;
}

std::string fmt_double(double x) { return fmt::format("{}", x); }

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw std::runtime_error(fmt::format("trace line {}: bad field '{}'", line, field));
    return value;
}

void check_runs(const std::vector<double>& values, const std::vector<std::uint64_t>& seeds) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one axis value");
    if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
}

}  // namespace

void SimConfig::validate() const {
    if (horizon_slots < 1) throw std::invalid_argument("horizon_slots must be >= 1");
    if (warmup_slots < 0) throw std::invalid_argument("warmup_slots must be >= 0");
    if (arrivals.lambda_max < 0) throw std::invalid_argument("lambda_max must be >= 0");
    if (!(eta >= 0.0) || !(xi >= 0.0)) throw std::invalid_argument("eta and xi must be >= 0");
    ChannelModel{channel};
    controller.validate();
    if (!(sizes.base_size_bits > 0.0) || !(sizes.exponent > 0.0))
        throw std::invalid_argument("base_size_bits and size_exponent must be positive");
    if (!(compute.core_rate_hz > 0.0) || !(compute.calibration > 0.0))
        throw std::invalid_argument("core_rate_hz and calibration must be positive");
}

RunResult run(const SimConfig& cfg, bool keep_trace) {
    cfg.validate();
    const QualityModel quality(table_for(cfg), cfg.sizes, cfg.compute);
    const ChannelModel channel(cfg.channel);
    const Controller controller(quality, channel, cfg.channel.slot_seconds, cfg.controller);
    const QueueParams qp = cfg.queue_params();
    const std::int64_t warmup = effective_warmup(cfg.warmup_slots, cfg.horizon_slots);

    auto channel_rng = make_stream(cfg.seed, kChannelStream);
    auto arrival_rng = make_stream(cfg.seed, kArrivalStream);

    RunResult result;
    if (keep_trace) result.trace.reserve(static_cast<std::size_t>(cfg.horizon_slots));
    SummaryAccumulator acc(cfg.controller.buffering_b);
    SystemState state;
    for (std::int64_t t = 0; t < cfg.horizon_slots; ++t) {
        SlotRecord rec;
        rec.t = t;
        rec.state = state;
        rec.gain_sq = channel.sample_gain(channel_rng).gain_sq;
        rec.decision = controller(state, rec.gain_sq);
        const Decision& x = rec.decision;
        if (x.n_chunks > 0) {
            rec.a_seconds = x.n_chunks * quality.processing_time(x.rate, x.depth, x.cores);
            rec.psnr_db = quality.table().psnr(x.rate, x.depth);
        }
        rec.lambda = cfg.arrivals.draw(arrival_rng);
        state = step(state, x, rec.lambda, rec.a_seconds, qp);
        if (t >= warmup) acc.add(rec);
        if (keep_trace) result.trace.push_back(rec);
    }
    result.summary = acc.finish();
    result.final_state = state;
    return result;
}

SummaryMetrics summarize(const std::vector<SlotRecord>& trace, std::int64_t warmup, double b) {
    SummaryAccumulator acc(b);
    const std::int64_t w = effective_warmup(warmup, static_cast<std::int64_t>(trace.size()));
    for (const auto& rec : trace)
        if (rec.t >= w) acc.add(rec);
    return acc.finish();
}

std::optional<std::size_t> replay_mismatch(const std::vector<SlotRecord>& trace,
                                           const QueueParams& params) {
    SystemState state;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (!(trace[i].state == state)) return i;
        state = step(state, trace[i].decision, trace[i].lambda, trace[i].a_seconds, params);
    }
    return std::nullopt;
}

std::optional<SweepAxis> parse_axis(std::string_view text) {
    if (text == "snr") return SweepAxis::Snr;
    if (text == "v") return SweepAxis::V;
    return std::nullopt;
}

SimConfig with_axis_value(SimConfig cfg, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::Snr: cfg.channel.snr_db = value; break;
        case SweepAxis::V: cfg.controller.v_weight = value; break;
    }
    return cfg;
}

std::vector<SweepRow> sweep_serial(const SimConfig& cfg, SweepAxis axis,
                                   const std::vector<double>& values,
                                   const std::vector<std::uint64_t>& seeds) {
    check_runs(values, seeds);
    std::vector<SweepRow> rows;
    for (double v : values) {
        for (std::uint64_t seed : seeds) {
            SimConfig c = with_axis_value(cfg, axis, v);
            c.seed = seed;
            rows.push_back({v, seed, run(c, false).summary});
        }
    }
    return rows;
}

std::vector<SweepRow> sweep(const SimConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, int jobs) {
    check_runs(values, seeds);
    const std::int64_t n = static_cast<std::int64_t>(values.size() * seeds.size());
    std::vector<SweepRow> rows(static_cast<std::size_t>(n));
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1)
    for (std::int64_t k = 0; k < n; ++k) {
        const std::size_t vi = static_cast<std::size_t>(k) / seeds.size();
        const std::size_t si = static_cast<std::size_t>(k) % seeds.size();
        try {
            SimConfig c = with_axis_value(cfg, axis, values[vi]);
            c.seed = seeds[si];
            rows[static_cast<std::size_t>(k)] = {values[vi], seeds[si], run(c, false).summary};
        } catch (...) {
#pragma omp critical(lyapstream_sweep_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

std::vector<SweepMean> sweep_means(const std::vector<SweepRow>& rows) {
    using Field = double SummaryMetrics::*;
    static constexpr Field kFields[] = {
        &SummaryMetrics::avg_q_chunks,  &SummaryMetrics::avg_z_seconds,
        &SummaryMetrics::avg_psnr_db,   &SummaryMetrics::avg_power_w,
        &SummaryMetrics::avg_cores,     &SummaryMetrics::delay_occurrence_rate,
        &SummaryMetrics::throughput_chunks_per_slot,
    };
    std::vector<SweepMean> out;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].axis_value == rows[i].axis_value) ++j;
        SweepMean m;
        m.axis_value = rows[i].axis_value;
        m.runs = j - i;
        for (Field f : kFields) {
            double sum = 0.0;
            for (std::size_t k = i; k < j; ++k) sum += rows[k].summary.*f;
            const double mean = sum / static_cast<double>(m.runs);
            double sq = 0.0;
            for (std::size_t k = i; k < j; ++k) sq += (rows[k].summary.*f - mean) * (rows[k].summary.*f - mean);
            m.mean.*f = mean;
            m.stddev.*f = m.runs > 1 ? std::sqrt(sq / static_cast<double>(m.runs - 1)) : 0.0;
        }
        out.push_back(m);
        i = j;
    }
    return out;
}

std::vector<ProbeState> random_probe_states(const ChannelModel& channel, std::size_t count,
                                            std::uint64_t seed, int q_max, double z_max,
                                            double wt_max) {
    auto rng = make_stream(seed, kProbeStream);
    std::uniform_int_distribution<int> q_dist(0, q_max);
    std::uniform_real_distribution<double> z_dist(0.0, z_max);
    std::uniform_real_distribution<double> wt_dist(0.0, wt_max);
    std::vector<ProbeState> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ProbeState p;
        p.state.q_chunks = q_dist(rng);
        p.state.z_seconds = z_dist(rng);
        p.state.w_virtual = wt_dist(rng);
        p.state.theta_virtual = wt_dist(rng);
        p.gain_sq = channel.sample_gain(rng).gain_sq;
        out.push_back(p);
    }
    return out;
}

namespace {
double relative_gap(const Controller& controller, const ProbeState& p) {
    const double ours = controller.objective(controller.decide(p.state, p.gain_sq), p.state);
    const double best = controller.objective(controller.oracle_decide(p.state, p.gain_sq), p.state);
    return (ours - best) / (1.0 + std::abs(best));
}
}  // namespace

OracleCheckResult oracle_check_serial(const Controller& controller,
                                      const std::vector<ProbeState>& probes) {
    OracleCheckResult r;
    r.states = probes.size();
    r.max_gap = probes.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const double gap = relative_gap(controller, probes[i]);
        if (gap > r.max_gap) {
            r.max_gap = gap;
            r.worst_index = i;
        }
    }
    return r;
}

OracleCheckResult oracle_check(const Controller& controller, const std::vector<ProbeState>& probes,
                               int jobs) {
    const std::int64_t n = static_cast<std::int64_t>(probes.size());
    std::vector<double> gaps(probes.size());
#pragma omp parallel for schedule(static) num_threads(jobs > 0 ? jobs : 1)
    for (std::int64_t i = 0; i < n; ++i)
        gaps[static_cast<std::size_t>(i)] = relative_gap(controller, probes[static_cast<std::size_t>(i)]);

    OracleCheckResult r;
    r.states = probes.size();
    r.max_gap = probes.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (gaps[i] > r.max_gap) {
            r.max_gap = gaps[i];
            r.worst_index = i;
        }
    }
    return r;
}

void write_trace_csv(std::ostream& out, const std::vector<SlotRecord>& trace) {
    out << kTraceHeader << '\n';
    for (const auto& r : trace) {
        const Decision& x = r.decision;
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.t, fmt_double(r.gain_sq),
                   r.lambda, x.n_chunks, x.rate, fmt_double(x.power_w), x.depth, x.cores,
                   fmt_double(r.a_seconds), r.state.q_chunks, fmt_double(r.state.z_seconds),
                   fmt_double(r.state.w_virtual), fmt_double(r.state.theta_virtual),
                   fmt_double(r.psnr_db));
    }
}

std::vector<SlotRecord> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw std::runtime_error("trace: missing or unexpected header");
    std::vector<SlotRecord> out;
    std::size_t line_no = 1;
    std::vector<std::string_view> f;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        f.clear();
        std::string_view v(line);
        std::size_t start = 0;
        for (;;) {
            auto pos = v.find(',', start);
            f.push_back(v.substr(start, pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (f.size() != 14) throw std::runtime_error(fmt::format("trace line {}: expected 14 fields", line_no));
        SlotRecord r;
        r.t = parse_field<std::int64_t>(f[0], line_no);
        r.gain_sq = parse_field<double>(f[1], line_no);
        r.lambda = parse_field<int>(f[2], line_no);
        r.decision.n_chunks = parse_field<int>(f[3], line_no);
        r.decision.rate = parse_field<int>(f[4], line_no);
        r.decision.power_w = parse_field<double>(f[5], line_no);
        r.decision.depth = parse_field<int>(f[6], line_no);
        r.decision.cores = parse_field<int>(f[7], line_no);
        r.a_seconds = parse_field<double>(f[8], line_no);
        r.state.q_chunks = parse_field<std::int64_t>(f[9], line_no);
        r.state.z_seconds = parse_field<double>(f[10], line_no);
        r.state.w_virtual = parse_field<double>(f[11], line_no);
        r.state.theta_virtual = parse_field<double>(f[12], line_no);
        r.psnr_db = parse_field<double>(f[13], line_no);
        out.push_back(r);
    }
    return out;
}

void write_summary_header(std::ostream& out) { out << kSummaryHeader << '\n'; }

void write_summary_row(std::ostream& out, std::optional<double> axis_value, std::uint64_t seed,
                       const SummaryMetrics& m) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", axis_value ? fmt_double(*axis_value) : "", seed,
               fmt_double(m.avg_q_chunks), fmt_double(m.avg_z_seconds), fmt_double(m.avg_psnr_db),
               fmt_double(m.avg_power_w), fmt_double(m.avg_cores),
               fmt_double(m.delay_occurrence_rate), fmt_double(m.throughput_chunks_per_slot));
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    write_summary_header(out);
    for (const auto& r : rows) write_summary_row(out, r.axis_value, r.seed, r.summary);
}

void write_means_csv(std::ostream& out, const std::vector<SweepMean>& means) {
    out << "axis_value,runs,avg_q,avg_q_std,avg_z,avg_z_std,avg_psnr,avg_psnr_std,avg_p,avg_p_std,"
           "avg_u,avg_u_std,delay_rate,delay_rate_std,throughput,throughput_std\n";
    for (const auto& m : means) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", fmt_double(m.axis_value),
                   m.runs, fmt_double(m.mean.avg_q_chunks), fmt_double(m.stddev.avg_q_chunks),
                   fmt_double(m.mean.avg_z_seconds), fmt_double(m.stddev.avg_z_seconds),
                   fmt_double(m.mean.avg_psnr_db), fmt_double(m.stddev.avg_psnr_db),
                   fmt_double(m.mean.avg_power_w), fmt_double(m.stddev.avg_power_w),
                   fmt_double(m.mean.avg_cores), fmt_double(m.stddev.avg_cores),
                   fmt_double(m.mean.delay_occurrence_rate), fmt_double(m.stddev.delay_occurrence_rate),
                   fmt_double(m.mean.throughput_chunks_per_slot),
                   fmt_double(m.stddev.throughput_chunks_per_slot));
    }
}

}  // namespace lyapstream
