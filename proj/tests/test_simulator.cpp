#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "lyapstream/simulator.hpp"

using namespace lyapstream;

namespace {

SimConfig short_config(std::int64_t horizon = 3000, Mode mode = Mode::Proposed) {
    SimConfig cfg;
    cfg.horizon_slots = horizon;
    cfg.warmup_slots = 100;
    cfg.controller.mode = mode;
    return cfg;
}

std::string trace_csv(const RunResult& r) {
    std::ostringstream out;
    write_trace_csv(out, r.trace);
    return out.str();
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.horizon_slots = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.arrivals.lambda_max = -1;
    CHECK_THROWS_AS(run(cfg), std::invalid_argument);
    cfg = {};
    cfg.channel.bandwidth_hz = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("no demand means no activity") {
    auto cfg = short_config(2000);
    cfg.arrivals.lambda_max = 0;
    const auto r = run(cfg);
    CHECK(r.trace.size() == 2000);
    for (const auto& rec : r.trace) {
        CHECK(rec.decision.n_chunks == 0);
        CHECK(rec.decision.power_w == 0.0);
        CHECK(rec.decision.cores == 0);
        CHECK(rec.psnr_db == 0.0);
    }
    CHECK(r.summary == SummaryMetrics{});
}

TEST_CASE("identical configs give identical traces") {
    for (Mode mode : {Mode::Proposed, Mode::ProposedBuffered, Mode::Comp1, Mode::Comp2}) {
        const auto cfg = short_config(2000, mode);
        const auto a = run(cfg), b = run(cfg);
        CHECK(a.trace == b.trace);
        CHECK(trace_csv(a) == trace_csv(b));
        CHECK(a.summary == b.summary);
        CHECK(run(cfg, false).summary == a.summary);
    }
    auto other = short_config(2000);
    other.seed = 2;
    CHECK(run(other).trace != run(short_config(2000)).trace);
}

TEST_CASE("arrival draws do not disturb the channel sequence") {
    auto a = short_config(500), b = short_config(500);
    b.arrivals.lambda_max = 3;
    const auto ra = run(a), rb = run(b);
    for (std::size_t i = 0; i < ra.trace.size(); ++i) CHECK(ra.trace[i].gain_sq == rb.trace[i].gain_sq);
}

TEST_CASE("trace replay and csv round trip") {
    for (Mode mode : {Mode::Proposed, Mode::ProposedBuffered, Mode::Comp1, Mode::Comp2}) {
        const auto cfg = short_config(3000, mode);
        const auto r = run(cfg);
        CHECK_FALSE(replay_mismatch(r.trace, cfg.queue_params()).has_value());
        std::istringstream in(trace_csv(r));
        const auto back = read_trace_csv(in);
        CHECK(back == r.trace);
        CHECK_FALSE(replay_mismatch(back, cfg.queue_params()).has_value());
    }
    auto cfg = short_config(500);
    auto r = run(cfg);
    r.trace[200].lambda += 1;
    CHECK(replay_mismatch(r.trace, cfg.queue_params()) == std::optional<std::size_t>(201));
}

TEST_CASE("trace header") {
    std::ostringstream out;
    write_trace_csv(out, {});
    CHECK(out.str() == std::string(kTraceHeader) + "\n");
}

TEST_CASE("every slot is feasible") {
    for (Mode mode : {Mode::Proposed, Mode::ProposedBuffered, Mode::Comp1, Mode::Comp2}) {
        const auto cfg = short_config(5000, mode);
        const QualityModel q(default_table());
        const ChannelModel ch(cfg.channel);
        const auto r = run(cfg);
        for (const auto& rec : r.trace) {
            const auto& x = rec.decision;
            CHECK(x.power_w <= cfg.channel.power_budget_w);
            CHECK(x.cores <= cfg.controller.u_max);
            CHECK(x.n_chunks <= rec.state.q_chunks);
            if (x.n_chunks > 0)
                CHECK(x.n_chunks * q.chunk_size(x.rate) <= ch.capacity(x.power_w, rec.gain_sq) * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("chunks are conserved") {
    const auto r = run(short_config(20000));
    std::int64_t arrived = 0, sent = 0;
    for (const auto& rec : r.trace) {
        arrived += rec.lambda;
        sent += rec.decision.n_chunks;
    }
    CHECK(sent >= 0);
    CHECK(arrived - r.final_state.q_chunks == sent);
}

TEST_CASE("summary averages") {
    auto cfg = short_config(4000);
    const auto r = run(cfg);
    CHECK(summarize(r.trace, cfg.warmup_slots, cfg.controller.buffering_b) == r.summary);

    double q = 0.0, psnr_n = 0.0;
    std::int64_t sent = 0, delayed = 0;
    for (std::size_t i = 100; i < r.trace.size(); ++i) {
        const auto& rec = r.trace[i];
        q += rec.state.q_chunks;
        psnr_n += rec.psnr_db * rec.decision.n_chunks;
        sent += rec.decision.n_chunks;
        delayed += rec.state.z_seconds > cfg.controller.buffering_b;
    }
    CHECK(r.summary.avg_q_chunks == doctest::Approx(q / 3900));
    CHECK(r.summary.avg_psnr_db == doctest::Approx(psnr_n / sent));
    CHECK(r.summary.throughput_chunks_per_slot == doctest::Approx(sent / 3900.0));
    CHECK(r.summary.delay_occurrence_rate == doctest::Approx(delayed / 3900.0));
    CHECK(r.summary.delay_occurrence_rate >= 0.0);
    CHECK(r.summary.delay_occurrence_rate <= 1.0);

    // A warm-up that covers the whole run is ignored.
    CHECK(summarize(r.trace, 10000, 4.0) == summarize(r.trace, 0, 4.0));
}

TEST_CASE("buffered mode keeps the buffer bounded") {
    const auto r = run(short_config(20000, Mode::ProposedBuffered));
    for (const auto& rec : r.trace) CHECK(rec.state.z_seconds <= 4.0);
    CHECK(r.final_state.z_seconds <= 4.0);
}

TEST_CASE("parallel sweep matches the serial reference") {
    const auto cfg = short_config(1500);
    const std::vector<double> values{8.0, 12.0, 16.0};
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const auto serial = sweep_serial(cfg, SweepAxis::Snr, values, seeds);
    CHECK(serial.size() == 9);
    for (int jobs : {1, 2, 4}) CHECK(sweep(cfg, SweepAxis::Snr, values, seeds, jobs) == serial);
    CHECK(serial[4].axis_value == 12.0);
    CHECK(serial[4].seed == 2);
    CHECK_THROWS_AS(sweep(cfg, SweepAxis::V, {}, seeds, 1), std::invalid_argument);
}

TEST_CASE("single-run sweep equals the run summary") {
    auto cfg = short_config(1500);
    const auto rows = sweep(cfg, SweepAxis::V, {0.05}, {9}, 1);
    cfg.controller.v_weight = 0.05;
    cfg.seed = 9;
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].summary == run(cfg).summary);
    const auto means = sweep_means(rows);
    REQUIRE(means.size() == 1);
    CHECK(means[0].mean == rows[0].summary);
    CHECK(means[0].stddev == SummaryMetrics{});
}

TEST_CASE("sweep means and sample deviations") {
    std::vector<SweepRow> rows(4);
    const double q[4] = {1.0, 3.0, 10.0, 10.0};
    for (int i = 0; i < 4; ++i) {
        rows[i].axis_value = i < 2 ? 1.0 : 2.0;
        rows[i].seed = i;
        rows[i].summary.avg_q_chunks = q[i];
    }
    const auto m = sweep_means(rows);
    REQUIRE(m.size() == 2);
    CHECK(m[0].runs == 2);
    CHECK(m[0].mean.avg_q_chunks == 2.0);
    CHECK(m[0].stddev.avg_q_chunks == doctest::Approx(std::sqrt(2.0)));
    CHECK(m[1].stddev.avg_q_chunks == 0.0);
}

TEST_CASE("summary csv rows") {
    std::ostringstream out;
    write_summary_header(out);
    SummaryMetrics m;
    m.avg_q_chunks = 1.5;
    write_summary_row(out, std::nullopt, 7, m);
    write_summary_row(out, 16.0, 7, m);
    CHECK(out.str() == std::string(kSummaryHeader) + "\n,7,1.5,0,0,0,0,0,0\n16,7,1.5,0,0,0,0,0,0\n");
}

TEST_CASE("parallel oracle check matches the serial reference") {
    const QualityModel q(default_table());
    const ChannelModel ch;
    const Controller ctl(q, ch, 1.0, {});
    const auto probes = random_probe_states(ch, 300, 4);
    CHECK(probes == random_probe_states(ch, 300, 4));
    const auto a = oracle_check_serial(ctl, probes);
    const auto b = oracle_check(ctl, probes, 3);
    CHECK(a.states == 300);
    CHECK(a.max_gap == b.max_gap);
    CHECK(a.worst_index == b.worst_index);
    CHECK(a.max_gap <= 1e-6);
    for (const auto& p : probes) {
        CHECK(p.state.q_chunks <= 50);
        CHECK(p.state.z_seconds <= 10.0);
        CHECK(p.state.w_virtual <= 20.0);
        CHECK(p.state.theta_virtual <= 20.0);
    }
}

TEST_CASE("higher snr never lowers delivered quality") {
    auto cfg = short_config(20000);
    const std::vector<double> snr{8, 10, 12, 14, 16, 18, 20};
    const auto means = sweep_means(sweep(cfg, SweepAxis::Snr, snr, {1, 2, 3}, 2));
    for (std::size_t i = 1; i < means.size(); ++i) {
        CAPTURE(means[i].axis_value);
        CHECK(means[i].mean.avg_psnr_db >= means[i - 1].mean.avg_psnr_db - 0.01);
    }
    CHECK(means.back().mean.avg_psnr_db > means.front().mean.avg_psnr_db);
}

TEST_CASE("running means stay bounded" * doctest::timeout(300)) {
    SimConfig cfg;
    cfg.horizon_slots = 100000;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        cfg.seed = seed;
        const auto r = run(cfg);
        double q_short = 0.0, z_short = 0.0, q_long = 0.0, z_long = 0.0;
        for (const auto& rec : r.trace) {
            if (rec.t < 10000) {
                q_short += rec.state.q_chunks;
                z_short += rec.state.z_seconds;
            }
            q_long += rec.state.q_chunks;
            z_long += rec.state.z_seconds;
        }
        CAPTURE(seed);
        CHECK(q_long / 100000 <= 2.0 * q_short / 10000);
        CHECK(z_long / 100000 <= 2.0 * z_short / 10000);
    }
}

}  // TEST_SUITE
