#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "popelect/agent.hpp"
#include "popelect/params.hpp"
#include "popelect/rng.hpp"
#include "popelect/rules.hpp"

namespace popelect {

// Cached per-role counters, updated incrementally each step and periodically
// verified against a full rescan in debug builds.
struct Census {
    std::array<std::uint64_t, 6> role{};
    std::uint64_t leader_active = 0;
    std::uint64_t leader_passive = 0;
    std::uint64_t leader_withdrawn = 0;
    std::uint64_t active_cnt_pos = 0; // active leaders with cnt > 0

    bool operator==(const Census&) const = default;

    std::uint64_t alive() const { return leader_active + leader_passive; }
    std::uint64_t active() const { return leader_active; }
    std::uint64_t zeros() const { return role[static_cast<int>(Role::Zero)]; }

    void add(const AgentState& a, std::int64_t sign) {
        role[static_cast<int>(a.role)] += static_cast<std::uint64_t>(sign);
        if (a.role == Role::Leader) {
            switch (a.leader.leadermode) {
            case LeaderMode::Active:
                leader_active += static_cast<std::uint64_t>(sign);
                if (a.leader.cnt > 0)
                    active_cnt_pos += static_cast<std::uint64_t>(sign);
                break;
            case LeaderMode::Passive:
                leader_passive += static_cast<std::uint64_t>(sign);
                break;
            case LeaderMode::Withdrawn:
                leader_withdrawn += static_cast<std::uint64_t>(sign);
                break;
            }
        }
    }

    static Census scan(std::span<const AgentState> agents) {
        Census c;
        for (const auto& a : agents)
            c.add(a, 1);
        return c;
    }
};

struct TraceEvent {
    enum class Kind : std::uint8_t {
        RoundBoundary,
        EpochTransition,
        Elimination,
        DragAdvance,
        SafetyViolation,
    };
    Kind kind;
    std::uint64_t interaction;
    std::uint32_t agent;
    std::int64_t payload;
};

using TraceSink = std::function<void(const TraceEvent&)>;

struct StopCondition {
    enum class Kind : std::uint8_t {
        SingleAlive,        // one alive candidate left (and no Zero agents)
        SingleActive,       // one active candidate left
        AllPassiveResolved, // one alive candidate and no passives left
        MaxInteractions,    // budget only
        Composite,          // single alive AND leader drag reached drag_target
        Epoch2Done,         // instrumentation: stop once epoch 2 concludes
        SecondBoundary,     // instrumentation: stop at the second boundary cluster
    };
    Kind kind = Kind::SingleAlive;
    std::uint64_t max_interactions = std::numeric_limits<std::uint64_t>::max();
    std::uint32_t drag_target = 0;

    static StopCondition single_alive(std::uint64_t budget) {
        return {Kind::SingleAlive, budget, 0};
    }
    static StopCondition budget_only(std::uint64_t budget) {
        return {Kind::MaxInteractions, budget, 0};
    }
};

// Per-trial outcome. Interaction-index fields use 0 as "never happened".
struct TrialRecord {
    // parameter echo
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::uint32_t gamma = 0, phi = 0, psi = 0;
    bool phi_overridden = false;
    bool backup_only = false;
    bool drag_advance_on_noncoin = false;

    std::uint64_t interactions = 0;
    bool exhausted = false;
    bool safety_violation = false;

    std::uint64_t single_active_at = 0;
    std::uint64_t single_alive_at = 0;
    std::uint64_t resolved_at = 0; // single alive, all passives withdrawn
    std::uint64_t epoch1_end = 0;  // first global round boundary
    std::uint64_t epoch2_end = 0;  // all active candidates first at cnt = 0
    std::uint32_t epoch2_survivors = 0;
    std::uint32_t epoch2_alive = 0; // not-yet-withdrawn candidates at that point
    std::uint64_t round_boundaries = 0;
    std::uint64_t epoch3_rounds = 0; // rounds from epoch 2 end to single active

    // census snapshot taken at the start of the second boundary cluster
    std::uint64_t snap_at = 0;
    std::uint64_t snap_coins = 0, snap_inhibitors = 0, snap_leaders = 0;
    std::uint64_t snap_deactivated = 0, snap_uninitialized = 0;

    // final-state histograms (levels/drags are frozen early in a run)
    std::vector<std::uint64_t> coin_reach; // C_l: coins at level >= l
    std::vector<std::uint64_t> drag_reach; // D'_l: inhibitors with drag >= l
    std::uint64_t n_coins = 0, n_inhibitors = 0, n_deactivated = 0;
    std::uint64_t n_uninitialized = 0;
    std::uint64_t inhibitors_stopped = 0;

    std::array<std::uint64_t, 16> drag_first{}; // first leader at drag l
    std::uint64_t final_alive = 0, final_active = 0;

    double parallel_time() const {
        return static_cast<double>(interactions) / static_cast<double>(n);
    }
};

struct StepOutcome {
    InteractionClass cls = InteractionClass::Other;
    std::uint32_t responder = 0;
    std::uint32_t initiator = 0;
    bool leader_created = false;
    bool elimination = false;    // alive count decreased
    bool drag_advanced = false;  // some leader's drag increased
    std::uint8_t new_drag = 0;
    std::uint32_t drag_agent = 0;
    std::uint32_t eliminated_agent = 0;
};

class SimState {
public:
    static SimState create(const ProtocolParams& params, std::uint64_t seed);

    StepOutcome step();

    const ProtocolParams& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t interactions() const { return interactions_; }
    const Census& census() const { return census_; }
    std::span<const AgentState> agents() const { return agents_; }

    bool operator==(const SimState& o) const {
        return agents_ == o.agents_ && interactions_ == o.interactions_ &&
               rng_ == o.rng_;
    }

    // Resumable per-run bookkeeping maintained by run_until.
    struct Monitor {
        std::uint64_t last_pass0 = 0;
        bool any_pass0 = false;
        std::uint64_t boundary_count = 0;
        std::uint64_t epoch1_end = 0;
        std::uint64_t snap_at = 0;
        std::uint64_t snap_coins = 0, snap_inhibitors = 0, snap_leaders = 0;
        std::uint64_t snap_deactivated = 0, snap_uninitialized = 0;
        std::uint64_t epoch2_end = 0;
        std::uint64_t epoch2_boundaries = 0;
        std::uint32_t epoch2_survivors = 0;
        std::uint32_t epoch2_alive = 0;
        std::uint64_t single_active_at = 0;
        std::uint64_t single_active_boundaries = 0;
        std::uint64_t single_alive_at = 0;
        std::uint64_t resolved_at = 0;
        std::uint8_t max_leader_drag = 0;
        bool leader_seen = false;
        bool safety_violation = false;
        std::array<std::uint64_t, 16> drag_first{};
    };
    Monitor& monitor() { return monitor_; }
    const Monitor& monitor() const { return monitor_; }

    // Interactions of Pass0 silence that split boundary clusters. Within a
    // round the zero-passes of the population are dense (mean spacing well
    // under a constant number of interactions), while consecutive rounds are
    // separated by roughly half a round of silence, which grows like
    // n log n. A quarter of n log2 n sits safely between the straggler tail
    // of one cluster and the onset of the next.
    std::uint64_t boundary_gap() const {
        std::uint64_t lg = 1;
        while ((params_.n >> lg) > 1)
            ++lg;
        return static_cast<std::uint64_t>(params_.n) * lg / 4;
    }

private:
    SimState() = default;
    ProtocolParams params_;
    std::uint64_t seed_ = 0;
    std::vector<AgentState> agents_;
    std::uint64_t interactions_ = 0;
    Xoshiro256 rng_;
    Census census_;
    Monitor monitor_;
};

struct StabilizationStatus {
    std::uint64_t alive = 0;
    std::uint64_t active = 0;
    bool stabilized = false;
};

// Omniscient simulator oracle (not a protocol capability).
StabilizationStatus detect_stabilization(const SimState& state);

TrialRecord run_until(SimState& state, const StopCondition& cond,
                      const TraceSink& sink = nullptr);

} // namespace popelect
