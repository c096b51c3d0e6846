#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lyapstream/channel.hpp"
#include "lyapstream/quality_model.hpp"
#include "lyapstream/state.hpp"

namespace lyapstream {

enum class Mode { Proposed, ProposedBuffered, Comp1, Comp2, Oracle };

std::string_view to_string(Mode mode);
/// Accepts proposed|buffered|comp1|comp2|oracle (case-sensitive).
std::optional<Mode> parse_mode(std::string_view text);

struct ControllerConfig {
    double v_weight = 0.01;
    double k_z = 1.0;
    double k_w = 1.0;
    double k_theta = 1.0;
    int u_max = 10;
    std::optional<double> p_bar;  // defaults to the table maximum
    double buffering_b = 4.0;     // seconds; hard cap only in ProposedBuffered
    Mode mode = Mode::Proposed;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

/// Continuous stationary point of the per-(r, d) subproblem.
struct InnerSolution {
    enum class Kind {
        Idle,        // transmitting is never profitable in this cell
        Stationary,  // (n_real, u_real) from the first-order conditions
        Degenerate,  // Z == 0 or Theta == 0: u has no interior optimum
    };
    Kind kind = Kind::Idle;
    double n_real = 0.0;
    double u_real = 0.0;
};

/// Per-slot decision engines. Holds references to the models, which must
/// outlive it. All member functions are const and thread-safe.
class Controller {
public:
    Controller(const QualityModel& quality, const ChannelModel& channel, double slot_seconds,
               ControllerConfig cfg);

    const ControllerConfig& config() const noexcept { return cfg_; }
    double p_bar() const noexcept { return p_bar_; }

    /// Drift-plus-penalty value of a decision:
    ///   -Q N + kz Z N T1/u + kw W P + ktheta Theta u + V N (P̄ - psnr(r, d)).
    double objective(const Decision& decision, const SystemState& state) const;

    /// Stationary point of the (r, d) subproblem with P eliminated through
    /// the tight rate constraint and u eliminated through its own optimality
    /// condition. Requires d > 0.
    InnerSolution solve_inner(int rate, int depth, const SystemState& state, double gain_sq) const;

    /// Integer decisions around an inner solution: floor/ceil of N and u
    /// clipped to the feasible box, plus the idle decision. Powers are set
    /// from the rate constraint. Candidates over the power budget, or over
    /// the buffering limit in ProposedBuffered mode, are dropped.
    std::vector<Decision> enumerate_candidates(const InnerSolution& inner, int rate, int depth,
                                               const SystemState& state, double gain_sq) const;

    /// Largest N compatible with the buffering slack b + t0 - Z when u
    /// follows its stationary value. Infinite for d == 0 or Theta == 0.
    double buffering_nmax(const SystemState& state, double b, int rate, int depth) const;

    /// Joint controller: sweeps every (r, d) cell and keeps the best
    /// candidate. In ProposedBuffered mode each SR cell also contributes
    /// the optimum of every core count under the exact work limit.
    Decision decide(const SystemState& state, double gain_sq) const;

    /// Transmitter and receiver optimized one after the other.
    Decision decide_comp1(const SystemState& state, double gain_sq) const;

    /// Joint controller with SR depth pinned to the deepest setting.
    Decision decide_comp2(const SystemState& state, double gain_sq) const;

    /// Exhaustive minimizer over every feasible integer decision.
    Decision oracle_decide(const SystemState& state, double gain_sq) const;

    /// Dispatches on config().mode.
    Decision operator()(const SystemState& state, double gain_sq) const;

    /// The canonical do-nothing decision.
    Decision idle() const noexcept { return {0, min_rate_, 0.0, 0, 0}; }

    /// True if `decision` respects the budget, core limit and (in buffered
    /// mode) the buffering limit.
    bool admissible(const Decision& decision, const SystemState& state, double gain_sq) const;

    /// Strict ordering used to pick among equal-objective decisions: higher
    /// quality, then lower power, then fewer cores.
    bool better(const Decision& a, double obj_a, const Decision& b, double obj_b) const;

private:
    struct Cell {
        int rate;
        int depth;
        std::size_t rate_index;
        std::size_t depth_index;
        double psnr;
        double t1;  // single-core seconds per chunk
    };

    const Cell& cell(std::size_t ri, std::size_t di) const { return cells_[ri * n_depths_ + di]; }
    const Cell& cell_for(int rate, int depth) const;

    /// Best integer N for a fixed per-chunk linear coefficient, i.e. the
    /// minimizer of kw W (sigma^2/g)(2^{alpha N} - 1) + slope * N on [0, cap].
    std::vector<int> convex_n_candidates(double slope, double alpha, double power_scale, int cap) const;

    int n_cap(const Cell& c, const SystemState& state, double gain_sq) const;
    bool buffered() const noexcept { return cfg_.mode == Mode::ProposedBuffered; }
    bool within_buffer(const Decision& decision, const SystemState& state) const;
    Decision make(const Cell& c, int n, int u, double gain_sq) const;
    /// Buffered mode: per core count, the best N under the exact work limit
    /// N T1 / u <= b + t0 - Z.
    std::vector<Decision> buffer_boundary_candidates(const Cell& c, const SystemState& s,
                                                     double gain_sq) const;
    Decision decide_over(const SystemState& state, double gain_sq, bool only_max_depth) const;

    const QualityModel& quality_;
    const ChannelModel& channel_;
    double slot_seconds_;
    ControllerConfig cfg_;
    double p_bar_;
    int min_rate_;
    std::size_t n_depths_;
    std::vector<Cell> cells_;
    std::vector<double> chunk_bits_;  // per rate index
};

}  // namespace lyapstream
