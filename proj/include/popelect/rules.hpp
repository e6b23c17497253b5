#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <utility>

#include "popelect/agent.hpp"
#include "popelect/params.hpp"

// Pure state-machine logic for one ordered (responder, initiator) interaction.
// Every rule guard matches the *pre-interaction* fields of both agents; the
// stages then write into working copies in a fixed order, so later stages win
// on the documented overlapping fields (withdrawal overrides passivation).

namespace popelect {

inline std::uint32_t mod_add(std::uint32_t x, std::uint32_t y, std::uint32_t gamma) {
    std::uint32_t s = x + y;
    return s >= gamma ? s - gamma : s;
}

// Wrap-aware maximum: plain max within half the circle, else the wrapped min.
inline std::uint32_t mod_max(std::uint32_t x, std::uint32_t y, std::uint32_t gamma) {
    std::uint32_t d = x > y ? x - y : y - x;
    if (d <= gamma / 2)
        return x > y ? x : y;
    return x < y ? x : y;
}

struct ClockResult {
    ClockState clock;
    InteractionClass cls;
};

inline ClockResult clock_update(ClockState responder, std::uint32_t initiator_phase,
                                std::uint32_t gamma) {
    std::uint32_t t1 = responder.phase;
    std::uint32_t t2 = initiator_phase;
    std::uint32_t t = responder.timemode == TimeMode::InJunta
                          ? mod_max(t1, mod_add(t2, 1, gamma), gamma)
                          : mod_max(t1, t2, gamma);
    InteractionClass cls;
    std::uint32_t half = gamma / 2;
    if (t < t1)
        cls = InteractionClass::Pass0;
    else if (t1 < half && t >= half)
        cls = InteractionClass::PassHalf;
    else if (t1 < half) // and t < half
        cls = InteractionClass::Early;
    else // t1 >= half, hence t >= t1 >= half
        cls = InteractionClass::Late;
    responder.phase = static_cast<std::uint8_t>(t);
    return {responder, cls};
}

// Symmetry-breaking split: 0 + 0 -> X + L, X + X -> C + I.
inline std::pair<AgentState, AgentState>
apply_init_rules(const AgentState& responder, const AgentState& initiator,
                 const ProtocolParams& params) {
    if (responder.role == Role::Zero && initiator.role == Role::Zero) {
        AgentState r = responder;
        r.role = Role::X;
        return {r, AgentState::fresh_leader(initiator.clock, params)};
    }
    if (responder.role == Role::X && initiator.role == Role::X) {
        return {AgentState::fresh_coin(responder.clock),
                AgentState::fresh_inhibitor(initiator.clock)};
    }
    return {responder, initiator};
}

// A 0/X agent reaching the end of the first round deactivates itself.
inline AgentState apply_deactivation(AgentState responder, InteractionClass cls) {
    if (cls == InteractionClass::Pass0 &&
        (responder.role == Role::Zero || responder.role == Role::X))
        responder.role = Role::Deactivated;
    return responder;
}

// Coin level incrementation (junta-forming rules). Reaching phi freezes the
// level; the caller promotes the agent's timemode to injunta.
inline CoinState apply_coin_rules(CoinState responder, const AgentState& initiator,
                                  std::uint32_t phi) {
    if (responder.mode == AdvMode::Stop)
        return responder;
    if (initiator.role != Role::Coin || initiator.coin.level < responder.level) {
        responder.mode = AdvMode::Stop;
        return responder;
    }
    if (responder.level < phi) {
        ++responder.level;
        if (responder.level == phi)
            responder.mode = AdvMode::Stop;
    }
    return responder;
}

// Inhibitor drag counting in the late half of a round. Default semantics:
// drag advances on meeting a coin (a successful synthetic coin flip of
// probability n_C/n) and stops otherwise; advance_on_noncoin selects the
// inverted variant for comparison runs.
inline InhibitorState apply_inhibitor_drag(InhibitorState responder,
                                           const AgentState& initiator,
                                           InteractionClass cls, std::uint32_t psi,
                                           bool advance_on_noncoin = false) {
    if (responder.mode != AdvMode::Adv || cls != InteractionClass::Late)
        return responder;
    bool success = (initiator.role == Role::Coin) != advance_on_noncoin;
    if (success) {
        ++responder.drag;
        if (responder.drag >= psi) {
            responder.drag = static_cast<std::uint8_t>(psi);
            responder.mode = AdvMode::Stop;
        }
    } else {
        responder.mode = AdvMode::Stop;
    }
    return responder;
}

// Elevation trigger and one-way epidemic between inhibitors of equal drag.
// Only settled inhibitors (mode == Stop) take part: an inhibitor still
// counting its way through the lower levels must not pick up High in passing
// and smuggle it upward, or the per-level communication delay collapses.
// Leader-side seeding requires cnt == 0 for the same reason the drag counter
// itself does: the certification machinery belongs to the final epoch, and a
// candidate that is still running its elimination schedule has not yet
// "reached" any drag level in the operative sense.
inline InhibitorState apply_inhibitor_signal(InhibitorState responder,
                                             const AgentState& initiator) {
    if (responder.elev == Elevation::High || responder.mode != AdvMode::Stop)
        return responder;
    if (initiator.role == Role::Leader &&
        initiator.leader.leadermode == LeaderMode::Active &&
        initiator.leader.cnt == 0 &&
        initiator.leader.drag == responder.drag)
        responder.elev = Elevation::High;
    else if (initiator.role == Role::Inhibitor &&
             initiator.inh.elev == Elevation::High &&
             initiator.inh.mode == AdvMode::Stop &&
             initiator.inh.drag == responder.drag)
        responder.elev = Elevation::High;
    return responder;
}

// Round-boundary reset: clear flip/void, decrement cnt while it lasts.
inline LeaderState apply_leader_reset(LeaderState responder, InteractionClass cls) {
    if (cls != InteractionClass::Pass0)
        return responder;
    responder.flip = Flip::None;
    responder.voided = true;
    if (responder.cnt >= 1)
        --responder.cnt;
    return responder;
}

// Coin level flipped at a given cnt: [1,1,2,2,...,phi-1,phi-1,phi,phi,phi,phi]
// read at position cnt, i.e. min(ceil(cnt/2), phi); cnt = 0 is the symmetric
// level-0 coin of the final epoch. No flip happens at cnt = 2*phi+3.
inline std::uint32_t gamma_schedule(std::uint32_t cnt, std::uint32_t phi) {
    assert(cnt <= 2 * phi + 2);
    if (cnt == 0)
        return 0;
    std::uint32_t g = (cnt + 1) / 2;
    return g > phi ? phi : g;
}

// One synthetic coin flip per round in the early half: heads iff the
// initiator is a coin of sufficient level.
inline LeaderState apply_leader_flip(LeaderState responder, const AgentState& initiator,
                                     InteractionClass cls, std::uint32_t phi) {
    if (cls != InteractionClass::Early || responder.leadermode != LeaderMode::Active ||
        responder.flip != Flip::None || responder.cnt == 2 * phi + 3)
        return responder;
    std::uint32_t t = gamma_schedule(responder.cnt, phi);
    if (initiator.role == Role::Coin && initiator.coin.level >= t) {
        responder.flip = Flip::Heads;
        responder.voided = false;
    } else {
        responder.flip = Flip::Tails;
    }
    return responder;
}

// Late-half broadcast of "somebody drew heads": active tails candidates that
// learn of it become passive, everyone clears the void bit.
inline LeaderState apply_void_epidemic(LeaderState responder, const LeaderState& initiator,
                                       InteractionClass cls) {
    if (cls != InteractionClass::Late || initiator.voided)
        return responder;
    if (responder.leadermode == LeaderMode::Active && responder.flip == Flip::Tails &&
        responder.voided) {
        responder.leadermode = LeaderMode::Passive;
        responder.voided = false;
    } else if (responder.voided) {
        responder.voided = false;
    }
    return responder;
}

// Drag certification point: an active heads-holder meeting an elevated
// inhibitor of its own drag advances. The counter only ticks once the
// candidate has exhausted its elimination schedule (cnt == 0): before that
// the field is still being thinned by the scheduled coin rounds, and the
// very first increment is what flushes the candidates passivated during
// those rounds.
inline LeaderState apply_drag_advance(LeaderState responder, const AgentState& initiator,
                                      std::uint32_t psi) {
    if (responder.leadermode == LeaderMode::Active && responder.cnt == 0 &&
        responder.flip == Flip::Heads && responder.drag < psi &&
        initiator.role == Role::Inhibitor &&
        initiator.inh.elev == Elevation::High &&
        initiator.inh.drag == responder.drag)
        ++responder.drag;
    return responder;
}

// A candidate seeing strictly higher drag in another candidate withdraws and
// adopts that drag.
inline LeaderState apply_drag_kill(LeaderState responder, const LeaderState& initiator) {
    if (responder.drag < initiator.drag) {
        responder.leadermode = LeaderMode::Withdrawn;
        responder.drag = initiator.drag;
    }
    return responder;
}

enum class Seniority : std::uint8_t { ASenior, BSenior, Tie };

// Total preorder on alive candidates: higher drag, then A over P, then
// smaller cnt, then heads > none > tails.
inline Seniority seniority_compare(const LeaderState& a, const LeaderState& b) {
    if (a.drag != b.drag)
        return a.drag > b.drag ? Seniority::ASenior : Seniority::BSenior;
    bool a_active = a.leadermode == LeaderMode::Active;
    bool b_active = b.leadermode == LeaderMode::Active;
    if (a_active != b_active)
        return a_active ? Seniority::ASenior : Seniority::BSenior;
    if (a.cnt != b.cnt)
        return a.cnt < b.cnt ? Seniority::ASenior : Seniority::BSenior;
    auto rank = [](Flip f) { return f == Flip::Heads ? 2 : f == Flip::None ? 1 : 0; };
    if (rank(a.flip) != rank(b.flip))
        return rank(a.flip) > rank(b.flip) ? Seniority::ASenior : Seniority::BSenior;
    return Seniority::Tie;
}

// Slow backup rule: of two alive candidates exactly one withdraws, the less
// senior one; the responder withdraws on a tie.
inline std::pair<LeaderState, LeaderState> apply_backup(LeaderState responder,
                                                        LeaderState initiator) {
    switch (seniority_compare(responder, initiator)) {
    case Seniority::ASenior:
        initiator.leadermode = LeaderMode::Withdrawn;
        break;
    case Seniority::BSenior:
    case Seniority::Tie:
        responder.leadermode = LeaderMode::Withdrawn;
        break;
    }
    return {responder, initiator};
}

enum class Stage : std::uint8_t {
    Clock,
    Init,
    Deactivate,
    CoinRules,
    InhibitorDrag,
    InhibitorSignal,
    LeaderReset,
    LeaderFlip,
    VoidEpidemic,
    DragAdvance,
    DragKill,
    Backup,
};

inline constexpr Stage kDefaultStageOrder[12] = {
    Stage::Clock,        Stage::Init,         Stage::Deactivate, Stage::CoinRules,
    Stage::InhibitorDrag, Stage::InhibitorSignal, Stage::LeaderReset, Stage::LeaderFlip,
    Stage::VoidEpidemic, Stage::DragAdvance,  Stage::DragKill,   Stage::Backup,
};

struct InteractionResult {
    AgentState responder;
    AgentState initiator;
    InteractionClass cls = InteractionClass::Other;
};

namespace detail {

inline void apply_stage(Stage s, AgentState& r, AgentState& i, const AgentState& pre_r,
                        const AgentState& pre_i, InteractionClass& cls,
                        const ProtocolParams& p) {
    switch (s) {
    case Stage::Clock: {
        auto [clk, c] = clock_update(pre_r.clock, pre_i.clock.phase, p.gamma);
        r.clock.phase = clk.phase;
        cls = c;
        break;
    }
    case Stage::Init:
        if (pre_r.role == Role::Zero && pre_i.role == Role::Zero) {
            r.role = Role::X;
            i = AgentState::fresh_leader(i.clock, p);
        } else if (pre_r.role == Role::X && pre_i.role == Role::X) {
            AgentState c = AgentState::fresh_coin(r.clock);
            c.clock.timemode = r.clock.timemode;
            r = c;
            AgentState inh = AgentState::fresh_inhibitor(i.clock);
            inh.clock.timemode = i.clock.timemode;
            i = inh;
        }
        break;
    case Stage::Deactivate:
        if (cls == InteractionClass::Pass0 &&
            (pre_r.role == Role::Zero || pre_r.role == Role::X))
            r.role = Role::Deactivated;
        break;
    case Stage::CoinRules:
        if (pre_r.role == Role::Coin) {
            r.coin = apply_coin_rules(pre_r.coin, pre_i, p.phi);
            if (r.coin.level == p.phi)
                r.clock.timemode = TimeMode::InJunta;
        }
        break;
    case Stage::InhibitorDrag:
        if (pre_r.role == Role::Inhibitor) {
            InhibitorState s = apply_inhibitor_drag(pre_r.inh, pre_i, cls, p.psi,
                                                    p.drag_advance_on_noncoin);
            r.inh.drag = s.drag;
            r.inh.mode = s.mode;
        }
        break;
    case Stage::InhibitorSignal:
        if (pre_r.role == Role::Inhibitor)
            r.inh.elev = apply_inhibitor_signal(pre_r.inh, pre_i).elev;
        break;
    case Stage::LeaderReset:
        if (pre_r.role == Role::Leader && cls == InteractionClass::Pass0) {
            LeaderState l = apply_leader_reset(pre_r.leader, cls);
            r.leader.flip = l.flip;
            r.leader.voided = l.voided;
            r.leader.cnt = l.cnt;
        }
        break;
    case Stage::LeaderFlip:
        if (pre_r.role == Role::Leader) {
            LeaderState l = apply_leader_flip(pre_r.leader, pre_i, cls, p.phi);
            if (l.flip != pre_r.leader.flip) {
                r.leader.flip = l.flip;
                r.leader.voided = l.voided;
            }
        }
        break;
    case Stage::VoidEpidemic:
        if (pre_r.role == Role::Leader && pre_i.role == Role::Leader) {
            LeaderState l = apply_void_epidemic(pre_r.leader, pre_i.leader, cls);
            if (l.leadermode == LeaderMode::Passive &&
                pre_r.leader.leadermode == LeaderMode::Active)
                r.leader.leadermode = LeaderMode::Passive;
            if (!l.voided && pre_r.leader.voided)
                r.leader.voided = false;
        }
        break;
    case Stage::DragAdvance:
        if (pre_r.role == Role::Leader) {
            LeaderState l = apply_drag_advance(pre_r.leader, pre_i, p.psi);
            if (l.drag != pre_r.leader.drag)
                r.leader.drag = l.drag;
        }
        break;
    case Stage::DragKill:
        if (pre_r.role == Role::Leader && pre_i.role == Role::Leader &&
            pre_r.leader.drag < pre_i.leader.drag) {
            r.leader.leadermode = LeaderMode::Withdrawn;
            r.leader.drag = pre_i.leader.drag;
        }
        break;
    case Stage::Backup:
        if (pre_r.role == Role::Leader && pre_i.role == Role::Leader &&
            pre_r.leader.alive() && pre_i.leader.alive() &&
            pre_r.leader.leadermode != LeaderMode::Withdrawn &&
            pre_i.leader.leadermode != LeaderMode::Withdrawn) {
            if (seniority_compare(pre_r.leader, pre_i.leader) == Seniority::ASenior)
                i.leader.leadermode = LeaderMode::Withdrawn;
            else
                r.leader.leadermode = LeaderMode::Withdrawn;
        }
        break;
    }
}

} // namespace detail

// Full composed transition with an explicit stage order (used by the
// commutation tests).
inline InteractionResult interact_with_order(const AgentState& responder,
                                             const AgentState& initiator,
                                             const ProtocolParams& params,
                                             std::span<const Stage> order) {
    AgentState r = responder;
    AgentState i = initiator;
    InteractionClass cls = InteractionClass::Other;
    for (Stage s : order)
        detail::apply_stage(s, r, i, responder, initiator, cls, params);
    return {r, i, cls};
}

// The complete deterministic pipeline for one ordered interaction. In
// backup_only mode only the backup rule runs and the class stays Other.
// Straight-line equivalent of interact_with_order(kDefaultStageOrder),
// branching once on the responder's pre-state role; the equivalence is
// enforced by a randomized test.
inline InteractionResult interact(const AgentState& responder, const AgentState& initiator,
                                  const ProtocolParams& params) {
    if (params.backup_only) {
        constexpr Stage only_backup[1] = {Stage::Backup};
        return interact_with_order(responder, initiator, params, only_backup);
    }

    InteractionResult out{responder, initiator, InteractionClass::Other};
    AgentState& r = out.responder;
    AgentState& i = out.initiator;

    auto [clk, cls] = clock_update(responder.clock, initiator.clock.phase, params.gamma);
    r.clock.phase = clk.phase;
    out.cls = cls;

    switch (responder.role) {
    case Role::Zero:
        if (initiator.role == Role::Zero) {
            r.role = Role::X;
            i = AgentState::fresh_leader(i.clock, params);
        }
        if (cls == InteractionClass::Pass0)
            r.role = Role::Deactivated;
        break;
    case Role::X:
        if (initiator.role == Role::X) {
            AgentState c = AgentState::fresh_coin(r.clock);
            c.clock.timemode = r.clock.timemode;
            r = c;
            AgentState inh = AgentState::fresh_inhibitor(i.clock);
            inh.clock.timemode = i.clock.timemode;
            i = inh;
        }
        if (cls == InteractionClass::Pass0)
            r.role = Role::Deactivated;
        break;
    case Role::Deactivated:
        break;
    case Role::Coin:
        r.coin = apply_coin_rules(responder.coin, initiator, params.phi);
        if (r.coin.level == params.phi)
            r.clock.timemode = TimeMode::InJunta;
        break;
    case Role::Inhibitor: {
        InhibitorState s = apply_inhibitor_drag(responder.inh, initiator, cls,
                                                params.psi,
                                                params.drag_advance_on_noncoin);
        r.inh.drag = s.drag;
        r.inh.mode = s.mode;
        r.inh.elev = apply_inhibitor_signal(responder.inh, initiator).elev;
        break;
    }
    case Role::Leader: {
        if (cls == InteractionClass::Pass0) {
            LeaderState l = apply_leader_reset(responder.leader, cls);
            r.leader.flip = l.flip;
            r.leader.voided = l.voided;
            r.leader.cnt = l.cnt;
        } else if (cls == InteractionClass::Early) {
            LeaderState l = apply_leader_flip(responder.leader, initiator, cls,
                                              params.phi);
            if (l.flip != responder.leader.flip) {
                r.leader.flip = l.flip;
                r.leader.voided = l.voided;
            }
        }
        if (initiator.role == Role::Leader) {
            if (cls == InteractionClass::Late) {
                LeaderState l = apply_void_epidemic(responder.leader,
                                                    initiator.leader, cls);
                if (l.leadermode == LeaderMode::Passive &&
                    responder.leader.leadermode == LeaderMode::Active)
                    r.leader.leadermode = LeaderMode::Passive;
                if (!l.voided && responder.leader.voided)
                    r.leader.voided = false;
            }
            if (responder.leader.drag < initiator.leader.drag) {
                r.leader.leadermode = LeaderMode::Withdrawn;
                r.leader.drag = initiator.leader.drag;
            }
            if (responder.leader.alive() && initiator.leader.alive()) {
                if (seniority_compare(responder.leader, initiator.leader) ==
                    Seniority::ASenior)
                    i.leader.leadermode = LeaderMode::Withdrawn;
                else
                    r.leader.leadermode = LeaderMode::Withdrawn;
            }
        } else if (initiator.role == Role::Inhibitor) {
            LeaderState l = apply_drag_advance(responder.leader, initiator,
                                               params.psi);
            if (l.drag != responder.leader.drag)
                r.leader.drag = l.drag;
        }
        break;
    }
    }
    return out;
}

} // namespace popelect
