#pragma once

#include <cstdint>

#include "popelect/params.hpp"

namespace popelect {

// Roles. Zero and X are pre-initialisation stages, Deactivated agents only
// relay clock state. Role transitions: Zero -> {X, Leader, Deactivated},
// X -> {Coin, Inhibitor, Deactivated}; the rest are terminal.
enum class Role : std::uint8_t { Zero, X, Deactivated, Coin, Inhibitor, Leader };

enum class TimeMode : std::uint8_t { Follower, InJunta };
enum class AdvMode : std::uint8_t { Adv, Stop };
enum class Elevation : std::uint8_t { Low, High };
enum class LeaderMode : std::uint8_t { Active, Passive, Withdrawn };
enum class Flip : std::uint8_t { None, Heads, Tails };

// Classification of one interaction relative to the responder's clock,
// computed from the phase before and after the update.
enum class InteractionClass : std::uint8_t { Pass0, PassHalf, Early, Late, Other };

struct ClockState {
    std::uint8_t phase = 0;
    TimeMode timemode = TimeMode::Follower;
    bool operator==(const ClockState&) const = default;
};

struct CoinState {
    std::uint8_t level = 0;
    AdvMode mode = AdvMode::Adv;
    bool operator==(const CoinState&) const = default;
};

struct InhibitorState {
    std::uint8_t drag = 0;
    AdvMode mode = AdvMode::Adv;
    Elevation elev = Elevation::Low;
    bool operator==(const InhibitorState&) const = default;
};

struct LeaderState {
    std::uint8_t cnt = 0;
    LeaderMode leadermode = LeaderMode::Active;
    Flip flip = Flip::None;
    bool voided = true; // "void" bit: no heads observed this round yet
    std::uint8_t drag = 0;
    bool operator==(const LeaderState&) const = default;

    bool alive() const { return leadermode != LeaderMode::Withdrawn; }
};

// Flat packed agent state. Only the payload matching the role is meaningful;
// the others stay at their default values so bitwise equality works for
// replay checks.
struct AgentState {
    Role role = Role::Zero;
    ClockState clock;
    CoinState coin;
    InhibitorState inh;
    LeaderState leader;

    bool operator==(const AgentState&) const = default;

    static AgentState zero() { return AgentState{}; }

    static AgentState fresh_coin(const ClockState& clk) {
        AgentState a;
        a.role = Role::Coin;
        a.clock = clk;
        return a;
    }

    static AgentState fresh_inhibitor(const ClockState& clk) {
        AgentState a;
        a.role = Role::Inhibitor;
        a.clock = clk;
        return a;
    }

    static AgentState fresh_leader(const ClockState& clk, const ProtocolParams& p) {
        AgentState a;
        a.role = Role::Leader;
        a.clock = clk;
        a.leader.cnt = static_cast<std::uint8_t>(p.leader_cnt_init());
        a.leader.leadermode = LeaderMode::Active;
        a.leader.flip = Flip::None;
        a.leader.voided = true;
        a.leader.drag = 0;
        return a;
    }

    bool alive() const { return role == Role::Leader && leader.alive(); }
    bool active() const {
        return role == Role::Leader && leader.leadermode == LeaderMode::Active;
    }
};

} // namespace popelect
