#include "lyapstream/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace lyapstream {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxBisections = 200;

int floor_to_int(double x, int lo, int hi) {
    if (!(x > lo)) return lo;
    if (x >= hi) return hi;
    return static_cast<int>(std::floor(x));
}

int ceil_to_int(double x, int lo, int hi) {
    if (!(x > lo)) return lo;
    if (x >= hi) return hi;
    return static_cast<int>(std::ceil(x));
}

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Proposed: return "proposed";
        case Mode::ProposedBuffered: return "buffered";
        case Mode::Comp1: return "comp1";
        case Mode::Comp2: return "comp2";
        case Mode::Oracle: return "oracle";
    }
    return "unknown";
}

std::optional<Mode> parse_mode(std::string_view text) {
    for (Mode m : {Mode::Proposed, Mode::ProposedBuffered, Mode::Comp1, Mode::Comp2, Mode::Oracle})
        if (text == to_string(m)) return m;
    return std::nullopt;
}

void ControllerConfig::validate() const {
    if (!(v_weight >= 0.0)) throw std::invalid_argument("v_weight must be >= 0");
    if (!(k_z > 0.0) || !(k_w > 0.0) || !(k_theta > 0.0))
        throw std::invalid_argument("k_z, k_w and k_theta must be positive");
    if (u_max < 1) throw std::invalid_argument("u_max must be at least 1");
    if (!(buffering_b >= 0.0)) throw std::invalid_argument("buffering_b must be >= 0");
    if (p_bar && !std::isfinite(*p_bar)) throw std::invalid_argument("p_bar must be finite");
}

Controller::Controller(const QualityModel& quality, const ChannelModel& channel,
                       double slot_seconds, ControllerConfig cfg)
    : quality_(quality),
      channel_(channel),
      slot_seconds_(slot_seconds),
      cfg_(std::move(cfg)) {
    cfg_.validate();
    if (!(slot_seconds_ > 0.0)) throw std::invalid_argument("slot length must be positive");
    const auto& table = quality_.table();
    p_bar_ = quality_.max_quality(cfg_.p_bar);
    min_rate_ = table.min_rate();
    n_depths_ = table.depths().size();
    for (std::size_t ri = 0; ri < table.rates().size(); ++ri) {
        const int r = table.rates()[ri];
        chunk_bits_.push_back(quality_.chunk_size(r));
        for (std::size_t di = 0; di < n_depths_; ++di) {
            const int d = table.depths()[di];
            cells_.push_back({r, d, ri, di, table.psnr_at(ri, di), quality_.single_core_time(r, d)});
        }
    }
}

const Controller::Cell& Controller::cell_for(int rate, int depth) const {
    auto ri = quality_.table().rate_index(rate);
    auto di = quality_.table().depth_index(depth);
    if (!ri || !di)
        throw std::out_of_range(fmt::format("no table entry for (r={}, d={})", rate, depth));
    return cell(*ri, *di);
}

double Controller::objective(const Decision& x, const SystemState& s) const {
    const double power_term = cfg_.k_w * s.w_virtual * x.power_w;
    const double core_term = cfg_.k_theta * s.theta_virtual * x.cores;
    if (x.n_chunks == 0) return power_term + core_term;
    const Cell& c = cell_for(x.rate, x.depth);
    const double n = x.n_chunks;
    const double sr_term = x.cores > 0 ? cfg_.k_z * s.z_seconds * n * c.t1 / x.cores : 0.0;
    return -static_cast<double>(s.q_chunks) * n + sr_term + power_term + core_term +
           cfg_.v_weight * n * (p_bar_ - c.psnr);
}

InnerSolution Controller::solve_inner(int rate, int depth, const SystemState& s,
                                      double gain_sq) const {
    if (depth <= 0) throw std::invalid_argument("solve_inner requires a positive SR depth");
    const Cell& c = cell_for(rate, depth);
    const double chunk_bits = chunk_bits_[c.rate_index];
    const double q = static_cast<double>(s.q_chunks);
    const double beta = cfg_.v_weight * (p_bar_ - c.psnr) - q;

    // The per-chunk coefficient is smallest at u = u_max; if even that is
    // nonnegative every N > 0 costs at least as much as staying idle.
    if (cfg_.k_z * s.z_seconds * c.t1 / cfg_.u_max + beta >= 0.0) return {};
    if (gain_sq <= 0.0) return {};
    const int n_hi_int = channel_.max_chunks(chunk_bits, gain_sq);
    if (n_hi_int == 0) return {};
    if (s.z_seconds == 0.0 || s.theta_virtual == 0.0)
        return {InnerSolution::Kind::Degenerate, 0.0, 0.0};

    const double n_hi = n_hi_int;
    const double alpha = chunk_bits / channel_.bits_per_slot_per_log2();
    const double amp = cfg_.k_w * s.w_virtual * channel_.noise_power() / gain_sq;
    const double coupling = cfg_.k_theta * s.theta_virtual * cfg_.k_z * s.z_seconds * c.t1;
    const double ln2 = std::numbers::ln2;

    // Reduced objective g(N) = amp (2^{alpha N} - 1) + 2 sqrt(coupling N) + beta N.
    auto reduced = [&](double n) {
        return amp * std::expm1(alpha * n * ln2) + 2.0 * std::sqrt(coupling * n) + beta * n;
    };
    auto slope = [&](double n) {
        return amp * alpha * ln2 * std::exp2(alpha * n) + std::sqrt(coupling / n) + beta;
    };
    auto curvature = [&](double n) {
        return amp * alpha * alpha * ln2 * ln2 * std::exp2(alpha * n) -
               0.5 * std::sqrt(coupling) * std::pow(n, -1.5);
    };

    double n_star = n_hi;
    if (amp > 0.0) {
        // slope() is convex with a single minimum; the local minimizer of g
        // is the larger root of slope(), to the right of that minimum.
        double n_turn = n_hi;
        if (curvature(n_hi) > 0.0) {
            double lo = 0.0, hi = n_hi;
            for (int i = 0; i < kMaxBisections && hi - lo > 1e-12 * n_hi; ++i) {
                const double mid = 0.5 * (lo + hi);
                (curvature(mid) > 0.0 ? hi : lo) = mid;
            }
            n_turn = hi;
        }
        if (slope(n_turn) >= 0.0) return {};
        if (slope(n_hi) > 0.0) {
            const double tol = 1e-9 * (1.0 + std::abs(beta));
            double lo = n_turn, hi = n_hi;
            for (int i = 0; i < kMaxBisections; ++i) {
                const double mid = 0.5 * (lo + hi);
                const double f = slope(mid);
                if (std::abs(f) <= tol || hi - lo <= 1e-12 * n_hi) {
                    lo = hi = mid;
                    break;
                }
                (f > 0.0 ? hi : lo) = mid;
            }
            n_star = 0.5 * (lo + hi);
        }
    }
    // With no power cost g is concave, so its minimum sits at an endpoint.
    if (!(reduced(n_star) < 0.0)) return {};
    const double u_star =
        std::sqrt(cfg_.k_z * s.z_seconds * c.t1 * n_star / (cfg_.k_theta * s.theta_virtual));
    return {InnerSolution::Kind::Stationary, n_star, u_star};
}

double Controller::buffering_nmax(const SystemState& s, double b, int rate, int depth) const {
    const Cell& c = cell_for(rate, depth);
    if (depth == 0 || s.theta_virtual == 0.0) return kInf;
    const double slack = b + slot_seconds_ - s.z_seconds;
    if (slack <= 0.0) return 0.0;
    return slack * slack * cfg_.k_z * s.z_seconds / (c.t1 * cfg_.k_theta * s.theta_virtual);
}

int Controller::n_cap(const Cell& c, const SystemState& s, double gain_sq) const {
    std::int64_t cap = std::min<std::int64_t>(s.q_chunks, channel_.max_chunks(chunk_bits_[c.rate_index], gain_sq));
    if (buffered() && c.depth > 0) {
        const double limit = buffering_nmax(s, cfg_.buffering_b, c.rate, c.depth);
        if (limit < static_cast<double>(cap)) cap = static_cast<std::int64_t>(std::floor(limit));
    }
    return static_cast<int>(std::max<std::int64_t>(cap, 0));
}

bool Controller::within_buffer(const Decision& x, const SystemState& s) const {
    if (!buffered() || x.n_chunks == 0 || x.depth == 0) return true;
    const Cell& c = cell_for(x.rate, x.depth);
    const double work = x.n_chunks * (c.t1 / x.cores);
    return std::max(s.z_seconds + work - slot_seconds_, 0.0) <= cfg_.buffering_b;
}

Decision Controller::make(const Cell& c, int n, int u, double gain_sq) const {
    if (n == 0) return idle();
    return {n, c.rate, channel_.required_power(n, chunk_bits_[c.rate_index], gain_sq), c.depth, u};
}

std::vector<int> Controller::convex_n_candidates(double slope, double alpha, double power_scale,
                                                 int cap) const {
    if (cap <= 0 || slope >= 0.0) return {0};
    if (power_scale <= 0.0) return {cap};
    const double n = std::log2(-slope / (power_scale * alpha * std::numbers::ln2)) / alpha;
    if (!(n > 0.0)) return {0};
    if (n >= cap) return {cap};
    return {floor_to_int(n, 0, cap), ceil_to_int(n, 0, cap)};
}

std::vector<Decision> Controller::enumerate_candidates(const InnerSolution& inner, int rate,
                                                       int depth, const SystemState& s,
                                                       double gain_sq) const {
    const Cell& c = cell_for(rate, depth);
    std::vector<Decision> out{idle()};
    auto add = [&](int n, int u) {
        if (n <= 0) return;
        Decision x = make(c, n, depth == 0 ? 0 : u, gain_sq);
        if (!within_buffer(x, s)) return;
        if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    };
    const int cap = n_cap(c, s, gain_sq);
    const double alpha = chunk_bits_[c.rate_index] / channel_.bits_per_slot_per_log2();
    const double amp = gain_sq > 0.0 ? cfg_.k_w * s.w_virtual * channel_.noise_power() / gain_sq : kInf;
    const double beta = cfg_.v_weight * (p_bar_ - c.psnr) - static_cast<double>(s.q_chunks);

    if (depth == 0) {
        for (int n : convex_n_candidates(beta, alpha, amp, cap)) add(n, 0);
        return out;
    }
    switch (inner.kind) {
        case InnerSolution::Kind::Idle:
            break;
        case InnerSolution::Kind::Stationary:
            for (int n : {floor_to_int(inner.n_real, 0, cap), ceil_to_int(inner.n_real, 0, cap)})
                for (int u : {floor_to_int(inner.u_real, 1, cfg_.u_max),
                              ceil_to_int(inner.u_real, 1, cfg_.u_max)})
                    add(n, u);
            // A clipped N moves the best core count: u is convex for fixed N.
            if (inner.n_real > cap && cap > 0 && s.theta_virtual > 0.0) {
                const double u_cap =
                    std::sqrt(cfg_.k_z * s.z_seconds * c.t1 * cap / (cfg_.k_theta * s.theta_virtual));
                add(cap, floor_to_int(u_cap, 1, cfg_.u_max));
                add(cap, ceil_to_int(u_cap, 1, cfg_.u_max));
            }
            break;
        case InnerSolution::Kind::Degenerate:
            // No interior u: for each core count the N-problem is convex.
            for (int u = 1; u <= cfg_.u_max; ++u) {
                const double per_chunk = cfg_.k_z * s.z_seconds * c.t1 / u + beta;
                for (int n : convex_n_candidates(per_chunk, alpha, amp, cap)) add(n, u);
            }
            break;
    }
    return out;
}

bool Controller::better(const Decision& a, double obj_a, const Decision& b, double obj_b) const {
    if (obj_a != obj_b) return obj_a < obj_b;
    const double qa = cell_for(a.rate, a.depth).psnr;
    const double qb = cell_for(b.rate, b.depth).psnr;
    if (qa != qb) return qa > qb;
    if (a.power_w != b.power_w) return a.power_w < b.power_w;
    if (a.cores != b.cores) return a.cores < b.cores;
    if (a.n_chunks != b.n_chunks) return a.n_chunks < b.n_chunks;
    if (a.rate != b.rate) return a.rate < b.rate;
    return a.depth < b.depth;
}

bool Controller::admissible(const Decision& x, const SystemState& s, double gain_sq) const {
    if (x.n_chunks < 0 || x.cores < 0 || x.power_w < 0.0) return false;
    if (x.n_chunks == 0) return x.power_w == 0.0 && x.cores == 0;
    const auto& table = quality_.table();
    if (!table.has_rate(x.rate) || !table.has_depth(x.depth)) return false;
    if (x.cores > cfg_.u_max || (x.depth == 0) != (x.cores == 0)) return false;
    if (x.n_chunks > s.q_chunks) return false;
    if (x.power_w > channel_.params().power_budget_w) return false;
    const double bits = x.n_chunks * chunk_bits_[*table.rate_index(x.rate)];
    if (bits > channel_.capacity(x.power_w, gain_sq) * (1.0 + 1e-9)) return false;
    return within_buffer(x, s);
}

Decision Controller::decide_over(const SystemState& s, double gain_sq, bool only_max_depth) const {
    Decision best = idle();
    double best_obj = objective(best, s);
    const int d_max = quality_.table().max_depth();
    for (const Cell& c : cells_) {
        if (only_max_depth && c.depth != d_max) continue;
        const InnerSolution inner =
            c.depth == 0 ? InnerSolution{} : solve_inner(c.rate, c.depth, s, gain_sq);
        auto consider = [&](const Decision& x) {
            const double obj = objective(x, s);
            if (better(x, obj, best, best_obj)) {
                best = x;
                best_obj = obj;
            }
        };
        for (const Decision& x : enumerate_candidates(inner, c.rate, c.depth, s, gain_sq)) consider(x);
        if (buffered() && c.depth > 0)
            for (const Decision& x : buffer_boundary_candidates(c, s, gain_sq)) consider(x);
    }
    return best;
}

std::vector<Decision> Controller::buffer_boundary_candidates(const Cell& c, const SystemState& s,
                                                             double gain_sq) const {
    std::vector<Decision> out;
    const double slack = cfg_.buffering_b + slot_seconds_ - s.z_seconds;
    if (slack <= 0.0 || gain_sq <= 0.0) return out;
    const int base_cap = static_cast<int>(
        std::min<std::int64_t>(s.q_chunks, channel_.max_chunks(chunk_bits_[c.rate_index], gain_sq)));
    const double alpha = chunk_bits_[c.rate_index] / channel_.bits_per_slot_per_log2();
    const double amp = cfg_.k_w * s.w_virtual * channel_.noise_power() / gain_sq;
    const double beta = cfg_.v_weight * (p_bar_ - c.psnr) - static_cast<double>(s.q_chunks);
    for (int u = 1; u <= cfg_.u_max; ++u) {
        // For fixed u the work limit is linear in N and the objective convex.
        int cap = static_cast<int>(std::min<double>(base_cap, std::floor(slack * u / c.t1)));
        while (cap > 0 && !within_buffer(make(c, cap, u, gain_sq), s)) --cap;
        const double per_chunk = cfg_.k_z * s.z_seconds * c.t1 / u + beta;
        for (int n : convex_n_candidates(per_chunk, alpha, amp, cap))
            if (n > 0) out.push_back(make(c, n, u, gain_sq));
    }
    return out;
}

Decision Controller::decide(const SystemState& s, double gain_sq) const {
    return decide_over(s, gain_sq, false);
}

Decision Controller::decide_comp2(const SystemState& s, double gain_sq) const {
    return decide_over(s, gain_sq, true);
}

Decision Controller::decide_comp1(const SystemState& s, double gain_sq) const {
    const auto& table = quality_.table();
    const std::size_t d0 = *table.depth_index(table.depths().front());
    const double q = static_cast<double>(s.q_chunks);

    // Transmitter: (N, r, P) against the undecorated (lowest-depth) quality.
    int best_n = 0;
    std::size_t best_ri = 0;
    double best_p = 0.0;
    double best_obj = 0.0;
    for (std::size_t ri = 0; ri < table.rates().size(); ++ri) {
        const double psnr = table.psnr_at(ri, d0);
        const int cap = static_cast<int>(
            std::min<std::int64_t>(s.q_chunks, channel_.max_chunks(chunk_bits_[ri], gain_sq)));
        for (int n = 1; n <= cap; ++n) {
            const double p = channel_.required_power(n, chunk_bits_[ri], gain_sq);
            const double obj = -q * n + cfg_.k_w * s.w_virtual * p + cfg_.v_weight * (p_bar_ - psnr) * n;
            bool take = obj < best_obj;
            if (!take && obj == best_obj) {
                const double best_psnr = best_n == 0 ? -kInf : table.psnr_at(best_ri, d0);
                take = psnr > best_psnr || (psnr == best_psnr && p < best_p);
            }
            if (take) {
                best_n = n;
                best_ri = ri;
                best_p = p;
                best_obj = obj;
            }
        }
    }
    if (best_n == 0) return idle();

    // Receiver: (d, u) given what was sent.
    const double n = best_n;
    Decision pick{best_n, table.rates()[best_ri], best_p, 0, 0};
    double pick_obj = kInf;
    double pick_psnr = -kInf;
    for (std::size_t di = 0; di < n_depths_; ++di) {
        const Cell& c = cell(best_ri, di);
        const int u_lo = c.depth == 0 ? 0 : 1;
        const int u_hi = c.depth == 0 ? 0 : cfg_.u_max;
        for (int u = u_lo; u <= u_hi; ++u) {
            const double sr = u > 0 ? cfg_.k_z * s.z_seconds * n * c.t1 / u : 0.0;
            const double obj = sr + cfg_.k_theta * s.theta_virtual * u + cfg_.v_weight * (p_bar_ - c.psnr) * n;
            if (obj < pick_obj || (obj == pick_obj && (c.psnr > pick_psnr || (c.psnr == pick_psnr && u < pick.cores)))) {
                pick.depth = c.depth;
                pick.cores = u;
                pick_obj = obj;
                pick_psnr = c.psnr;
            }
        }
    }
    return pick;
}

Decision Controller::oracle_decide(const SystemState& s, double gain_sq) const {
    Decision best = idle();
    double best_obj = objective(best, s);
    for (std::size_t ri = 0; ri < chunk_bits_.size(); ++ri) {
        const int cap = static_cast<int>(
            std::min<std::int64_t>(s.q_chunks, channel_.max_chunks(chunk_bits_[ri], gain_sq)));
        for (int n = 1; n <= cap; ++n) {
            const double p = channel_.required_power(n, chunk_bits_[ri], gain_sq);
            for (std::size_t di = 0; di < n_depths_; ++di) {
                const Cell& c = cell(ri, di);
                const int u_lo = c.depth == 0 ? 0 : 1;
                const int u_hi = c.depth == 0 ? 0 : cfg_.u_max;
                for (int u = u_lo; u <= u_hi; ++u) {
                    const Decision x{n, c.rate, p, c.depth, u};
                    if (!within_buffer(x, s)) continue;
                    const double obj = objective(x, s);
                    if (better(x, obj, best, best_obj)) {
                        best = x;
                        best_obj = obj;
                    }
                }
            }
        }
    }
    return best;
}

Decision Controller::operator()(const SystemState& s, double gain_sq) const {
    switch (cfg_.mode) {
        case Mode::Proposed:
        case Mode::ProposedBuffered: return decide(s, gain_sq);
        case Mode::Comp1: return decide_comp1(s, gain_sq);
        case Mode::Comp2: return decide_comp2(s, gain_sq);
        case Mode::Oracle: return oracle_decide(s, gain_sq);
    }
    return idle();
}

}  // namespace lyapstream
