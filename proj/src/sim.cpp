#include "popelect/sim.hpp"

#include <cassert>

namespace popelect {

SimState SimState::create(const ProtocolParams& params, std::uint64_t seed) {
    params.validate();
    SimState s;
    s.params_ = params;
    s.seed_ = seed;
    s.rng_ = Xoshiro256(seed);
    s.agents_.resize(params.n);
    if (params.backup_only) {
        ClockState clk;
        for (auto& a : s.agents_)
            a = AgentState::fresh_leader(clk, params);
        s.monitor_.leader_seen = true;
    }
    s.census_ = Census::scan(s.agents_);
    return s;
}

StepOutcome SimState::step() {
    const std::uint64_t n = params_.n;
    std::uint64_t r = rng_.bounded(n * (n - 1));
    auto ri = static_cast<std::uint32_t>(r / (n - 1));
    auto k = static_cast<std::uint32_t>(r % (n - 1));
    std::uint32_t ii = k + (k >= ri);

    AgentState& resp = agents_[ri];
    AgentState& init = agents_[ii];
    AgentState pre_r = resp;
    AgentState pre_i = init;

    InteractionResult res = interact(pre_r, pre_i, params_);
    ++interactions_;

    StepOutcome out;
    out.cls = res.cls;
    out.responder = ri;
    out.initiator = ii;

    if (!(res.responder == pre_r)) {
        census_.add(pre_r, -1);
        census_.add(res.responder, 1);
        resp = res.responder;
        if (pre_r.role == Role::Leader) {
            if (pre_r.leader.alive() && !res.responder.leader.alive()) {
                out.elimination = true;
                out.eliminated_agent = ri;
            }
            if (res.responder.leader.drag > pre_r.leader.drag &&
                res.responder.leader.alive()) {
                out.drag_advanced = true;
                out.new_drag = res.responder.leader.drag;
                out.drag_agent = ri;
            }
        }
    }
    if (!(res.initiator == pre_i)) {
        census_.add(pre_i, -1);
        census_.add(res.initiator, 1);
        init = res.initiator;
        if (pre_i.role != Role::Leader && res.initiator.role == Role::Leader)
            out.leader_created = true;
        if (pre_i.role == Role::Leader && pre_i.leader.alive() &&
            !res.initiator.leader.alive()) {
            out.elimination = true;
            out.eliminated_agent = ii;
        }
    }
    return out;
}

StabilizationStatus detect_stabilization(const SimState& state) {
    const Census& c = state.census();
    StabilizationStatus s;
    s.alive = c.alive();
    s.active = c.active();
    s.stabilized = c.zeros() == 0 && s.alive == 1;
    return s;
}

namespace {

bool condition_met(const SimState& state, const StopCondition& cond) {
    const Census& c = state.census();
    bool zeros_gone = c.zeros() == 0;
    switch (cond.kind) {
    case StopCondition::Kind::SingleAlive:
        return zeros_gone && c.alive() == 1;
    case StopCondition::Kind::SingleActive:
        return zeros_gone && c.active() == 1;
    case StopCondition::Kind::AllPassiveResolved:
        return zeros_gone && c.alive() == 1 && c.leader_passive == 0;
    case StopCondition::Kind::MaxInteractions:
        return false; // budget handled by the loop
    case StopCondition::Kind::Composite:
        // drag only advances on an active candidate, so once the lone
        // survivor is passive there is nothing left to wait for
        return zeros_gone && c.alive() == 1 &&
               (state.monitor().max_leader_drag >= cond.drag_target ||
                c.active() == 0);
    case StopCondition::Kind::Epoch2Done:
        // Counters keep draining as long as any active candidate remains, so
        // the boundary fires within a few rounds even when a single alive
        // candidate is left early. Only an all-passive field (a rare clock
        // mishap) leaves nothing to count down, and then there is nothing
        // left to measure.
        return state.monitor().epoch2_end != 0 ||
               (zeros_gone && state.monitor().leader_seen && c.active() == 0);
    case StopCondition::Kind::SecondBoundary:
        return state.monitor().snap_at != 0;
    }
    return false;
}

void fill_record(const SimState& state, TrialRecord& rec) {
    const ProtocolParams& p = state.params();
    rec.n = p.n;
    rec.seed = state.seed();
    rec.gamma = p.gamma;
    rec.phi = p.phi;
    rec.psi = p.psi;
    rec.phi_overridden = p.phi_overridden;
    rec.backup_only = p.backup_only;
    rec.drag_advance_on_noncoin = p.drag_advance_on_noncoin;
    rec.interactions = state.interactions();

    const auto& m = state.monitor();
    rec.single_active_at = m.single_active_at;
    rec.single_alive_at = m.single_alive_at;
    rec.resolved_at = m.resolved_at;
    rec.epoch1_end = m.epoch1_end;
    rec.epoch2_end = m.epoch2_end;
    rec.epoch2_survivors = m.epoch2_survivors;
    rec.epoch2_alive = m.epoch2_alive;
    rec.round_boundaries = m.boundary_count;
    if (m.epoch2_end != 0 && m.single_active_at != 0 &&
        m.single_active_at >= m.epoch2_end)
        rec.epoch3_rounds = m.single_active_boundaries - m.epoch2_boundaries + 1;
    rec.snap_at = m.snap_at;
    rec.snap_coins = m.snap_coins;
    rec.snap_inhibitors = m.snap_inhibitors;
    rec.snap_leaders = m.snap_leaders;
    rec.snap_deactivated = m.snap_deactivated;
    rec.snap_uninitialized = m.snap_uninitialized;
    rec.safety_violation = m.safety_violation;
    rec.drag_first = m.drag_first;

    const Census& c = state.census();
    rec.final_alive = c.alive();
    rec.final_active = c.active();
    rec.n_coins = c.role[static_cast<int>(Role::Coin)];
    rec.n_inhibitors = c.role[static_cast<int>(Role::Inhibitor)];
    rec.n_deactivated = c.role[static_cast<int>(Role::Deactivated)];
    rec.n_uninitialized = c.role[static_cast<int>(Role::Zero)] +
                          c.role[static_cast<int>(Role::X)];

    rec.coin_reach.assign(p.phi + 1, 0);
    rec.drag_reach.assign(p.psi + 1, 0);
    for (const AgentState& a : state.agents()) {
        if (a.role == Role::Coin) {
            for (std::uint32_t l = 0; l <= a.coin.level; ++l)
                ++rec.coin_reach[l];
        } else if (a.role == Role::Inhibitor) {
            for (std::uint32_t l = 0; l <= a.inh.drag; ++l)
                ++rec.drag_reach[l];
            if (a.inh.mode == AdvMode::Stop)
                ++rec.inhibitors_stopped;
        }
    }
}

} // namespace

TrialRecord run_until(SimState& state, const StopCondition& cond, const TraceSink& sink) {
    auto& m = state.monitor();
    const std::uint64_t gap = state.boundary_gap();
    const bool tracing = static_cast<bool>(sink);
    TrialRecord rec;

    auto emit = [&](TraceEvent::Kind k, std::uint32_t agent, std::int64_t payload) {
        if (tracing)
            sink(TraceEvent{k, state.interactions(), agent, payload});
    };

    while (true) {
        if (condition_met(state, cond))
            break;
        if (state.interactions() >= cond.max_interactions) {
            rec.exhausted = true;
            break;
        }

        StepOutcome out = state.step();
        const Census& c = state.census();
        const std::uint64_t now = state.interactions();

        if (out.cls == InteractionClass::Pass0) {
            if (!m.any_pass0 || now - m.last_pass0 > gap) {
                ++m.boundary_count;
                if (m.boundary_count == 1)
                    m.epoch1_end = now;
                if (m.boundary_count == 2 && m.snap_at == 0) {
                    m.snap_at = now;
                    m.snap_coins = c.role[static_cast<int>(Role::Coin)];
                    m.snap_inhibitors = c.role[static_cast<int>(Role::Inhibitor)];
                    m.snap_leaders = c.role[static_cast<int>(Role::Leader)];
                    m.snap_deactivated = c.role[static_cast<int>(Role::Deactivated)];
                    m.snap_uninitialized = c.role[static_cast<int>(Role::Zero)] +
                                           c.role[static_cast<int>(Role::X)];
                }
                emit(TraceEvent::Kind::RoundBoundary, out.responder,
                     static_cast<std::int64_t>(m.boundary_count));
            }
            m.any_pass0 = true;
            m.last_pass0 = now;
        }

        if (out.leader_created)
            m.leader_seen = true;
        if (out.drag_advanced) {
            if (out.new_drag > m.max_leader_drag) {
                m.max_leader_drag = out.new_drag;
                if (out.new_drag < m.drag_first.size() &&
                    m.drag_first[out.new_drag] == 0)
                    m.drag_first[out.new_drag] = now;
            }
            emit(TraceEvent::Kind::DragAdvance, out.drag_agent, out.new_drag);
        }
        if (m.leader_seen && m.drag_first[0] == 0)
            m.drag_first[0] = now;
        if (out.elimination)
            emit(TraceEvent::Kind::Elimination, out.eliminated_agent,
                 static_cast<std::int64_t>(c.alive()));

        const bool zeros_gone = c.zeros() == 0;
        if (m.epoch2_end == 0 && c.active() > 0 && c.active_cnt_pos == 0) {
            m.epoch2_end = now;
            m.epoch2_boundaries = m.boundary_count;
            m.epoch2_survivors = static_cast<std::uint32_t>(c.active());
            m.epoch2_alive = static_cast<std::uint32_t>(c.alive());
            emit(TraceEvent::Kind::EpochTransition, 0, 2);
        }
        if (m.single_active_at == 0 && zeros_gone && c.active() == 1) {
            m.single_active_at = now;
            m.single_active_boundaries = m.boundary_count;
            emit(TraceEvent::Kind::EpochTransition, 0, 3);
        }
        if (m.single_alive_at == 0 && zeros_gone && c.alive() == 1)
            m.single_alive_at = now;
        if (m.resolved_at == 0 && zeros_gone && c.alive() == 1 &&
            c.leader_passive == 0)
            m.resolved_at = now;

        if (m.leader_seen && c.alive() == 0 && !m.safety_violation) {
            m.safety_violation = true;
            emit(TraceEvent::Kind::SafetyViolation, 0, 0);
            break; // must never happen; abort the trial with the flag set
        }

#ifndef NDEBUG
        if ((now & ((1u << 18) - 1)) == 0)
            assert(c == Census::scan(state.agents()));
#endif
    }

    fill_record(state, rec);
    return rec;
}

} // namespace popelect
