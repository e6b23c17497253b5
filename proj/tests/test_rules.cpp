#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <vector>

#include "popelect/rng.hpp"
#include "popelect/rules.hpp"

using namespace popelect;

namespace {

ProtocolParams test_params(std::uint32_t gamma = 16, std::uint32_t phi = 4,
                           std::uint32_t psi = 4) {
    ProtocolParams p;
    p.n = 64;
    p.gamma = gamma;
    p.phi = phi;
    p.psi = psi;
    p.validate();
    return p;
}

AgentState coin(std::uint8_t level, AdvMode mode = AdvMode::Adv,
                std::uint8_t phase = 0, TimeMode tm = TimeMode::Follower) {
    AgentState a;
    a.role = Role::Coin;
    a.coin = {level, mode};
    a.clock = {phase, tm};
    return a;
}

AgentState inhibitor(std::uint8_t drag, AdvMode mode, Elevation elev,
                     std::uint8_t phase = 0) {
    AgentState a;
    a.role = Role::Inhibitor;
    a.inh = {drag, mode, elev};
    a.clock.phase = phase;
    return a;
}

AgentState leader(LeaderMode lm, std::uint8_t cnt, Flip flip = Flip::None,
                  bool voided = true, std::uint8_t drag = 0,
                  std::uint8_t phase = 0) {
    AgentState a;
    a.role = Role::Leader;
    a.leader = {cnt, lm, flip, voided, drag};
    a.clock.phase = phase;
    return a;
}

} // namespace

TEST_CASE("mod_add") {
    CHECK(mod_add(3, 1, 16) == 4);
    CHECK(mod_add(15, 1, 16) == 0);
    CHECK(mod_add(0, 0, 16) == 0);
}

TEST_CASE("mod_max is wrap-aware") {
    CHECK(mod_max(3, 5, 16) == 5);
    CHECK(mod_max(15, 1, 16) == 1);
    CHECK(mod_max(7, 7, 16) == 7);
}

TEST_CASE("clock_update follower and injunta rules") {
    auto [c1, k1] = clock_update({3, TimeMode::Follower}, 5, 16);
    CHECK(c1.phase == 5);
    CHECK(k1 == InteractionClass::Early);

    auto [c2, k2] = clock_update({0, TimeMode::InJunta}, 0, 16);
    CHECK(c2.phase == 1);
    CHECK(k2 == InteractionClass::Early);

    auto [c3, k3] = clock_update({14, TimeMode::Follower}, 2, 16);
    CHECK(c3.phase == 2);
    CHECK(k3 == InteractionClass::Pass0);

    auto [c4, k4] = clock_update({7, TimeMode::Follower}, 9, 16);
    CHECK(c4.phase == 9);
    CHECK(k4 == InteractionClass::PassHalf);

    auto [c5, k5] = clock_update({9, TimeMode::Follower}, 12, 16);
    CHECK(c5.phase == 12);
    CHECK(k5 == InteractionClass::Late);
}

TEST_CASE("init rules split the population") {
    auto p = test_params();

    auto [r1, i1] = apply_init_rules(AgentState::zero(), AgentState::zero(), p);
    CHECK(r1.role == Role::X);
    CHECK(i1.role == Role::Leader);
    CHECK(i1.leader.cnt == 2 * p.phi + 3);
    CHECK(i1.leader.leadermode == LeaderMode::Active);
    CHECK(i1.leader.flip == Flip::None);
    CHECK(i1.leader.voided == true);
    CHECK(i1.leader.drag == 0);

    AgentState x;
    x.role = Role::X;
    auto [r2, i2] = apply_init_rules(x, x, p);
    CHECK(r2.role == Role::Coin);
    CHECK(r2.coin == CoinState{0, AdvMode::Adv});
    CHECK(i2.role == Role::Inhibitor);
    CHECK(i2.inh == InhibitorState{0, AdvMode::Adv, Elevation::Low});

    auto [r3, i3] = apply_init_rules(AgentState::zero(), x, p);
    CHECK(r3 == AgentState::zero());
    CHECK(i3 == x);
}

TEST_CASE("deactivation fires only on pass through 0") {
    AgentState z = AgentState::zero();
    CHECK(apply_deactivation(z, InteractionClass::Pass0).role == Role::Deactivated);
    AgentState x;
    x.role = Role::X;
    CHECK(apply_deactivation(x, InteractionClass::Pass0).role == Role::Deactivated);
    CHECK(apply_deactivation(z, InteractionClass::Early) == z);
    AgentState c = coin(1);
    CHECK(apply_deactivation(c, InteractionClass::Pass0) == c);
}

TEST_CASE("coin level rules") {
    CHECK(apply_coin_rules({2, AdvMode::Adv}, coin(3), 4) == CoinState{3, AdvMode::Adv});
    CHECK(apply_coin_rules({2, AdvMode::Adv}, coin(1), 4) == CoinState{2, AdvMode::Stop});
    CHECK(apply_coin_rules({2, AdvMode::Adv}, leader(LeaderMode::Active, 5), 4) ==
          CoinState{2, AdvMode::Stop});
    CHECK(apply_coin_rules({3, AdvMode::Adv}, coin(3), 4) == CoinState{4, AdvMode::Stop});
    // stopped coins freeze
    CHECK(apply_coin_rules({2, AdvMode::Stop}, coin(3), 4) == CoinState{2, AdvMode::Stop});
}

TEST_CASE("inhibitor drag counts successful coin flips in the late half") {
    InhibitorState i0{0, AdvMode::Adv, Elevation::Low};
    CHECK(apply_inhibitor_drag(i0, coin(0), InteractionClass::Late, 4) ==
          InhibitorState{1, AdvMode::Adv, Elevation::Low});
    InhibitorState i2{2, AdvMode::Adv, Elevation::Low};
    CHECK(apply_inhibitor_drag(i2, leader(LeaderMode::Active, 5),
                               InteractionClass::Late, 4) ==
          InhibitorState{2, AdvMode::Stop, Elevation::Low});
    InhibitorState i1{1, AdvMode::Adv, Elevation::Low};
    CHECK(apply_inhibitor_drag(i1, coin(0), InteractionClass::Early, 4) == i1);
    // saturation at psi stops the counter
    InhibitorState i3{3, AdvMode::Adv, Elevation::Low};
    CHECK(apply_inhibitor_drag(i3, coin(0), InteractionClass::Late, 4) ==
          InhibitorState{4, AdvMode::Stop, Elevation::Low});
    // printed-rule variant inverts the success condition
    CHECK(apply_inhibitor_drag(i0, leader(LeaderMode::Active, 5),
                               InteractionClass::Late, 4, true) ==
          InhibitorState{1, AdvMode::Adv, Elevation::Low});
    CHECK(apply_inhibitor_drag(i0, coin(0), InteractionClass::Late, 4, true) ==
          InhibitorState{0, AdvMode::Stop, Elevation::Low});
}

TEST_CASE("inhibitor elevation trigger and epidemic") {
    InhibitorState low{3, AdvMode::Stop, Elevation::Low};
    CHECK(apply_inhibitor_signal(low, leader(LeaderMode::Active, 0, Flip::None, true, 3))
              .elev == Elevation::High);
    CHECK(apply_inhibitor_signal(low, inhibitor(3, AdvMode::Stop, Elevation::High))
              .elev == Elevation::High);
    CHECK(apply_inhibitor_signal(low, inhibitor(2, AdvMode::Stop, Elevation::High))
              .elev == Elevation::Low);
    // passive leaders do not trigger
    CHECK(apply_inhibitor_signal(low, leader(LeaderMode::Passive, 0, Flip::None, true, 3))
              .elev == Elevation::Low);
    // an advancing inhibitor is not triggered by a leader
    InhibitorState adv{3, AdvMode::Adv, Elevation::Low};
    CHECK(apply_inhibitor_signal(adv, leader(LeaderMode::Active, 0, Flip::None, true, 3))
              .elev == Elevation::Low);
    // a candidate still on its elimination schedule does not seed
    CHECK(apply_inhibitor_signal(low, leader(LeaderMode::Active, 2, Flip::None, true, 3))
              .elev == Elevation::Low);
    // an inhibitor passing through a level does not catch or spread elevation
    CHECK(apply_inhibitor_signal(adv, inhibitor(3, AdvMode::Stop, Elevation::High))
              .elev == Elevation::Low);
    CHECK(apply_inhibitor_signal(low, inhibitor(3, AdvMode::Adv, Elevation::High))
              .elev == Elevation::Low);
}

TEST_CASE("leader reset at pass through 0") {
    LeaderState l{5, LeaderMode::Active, Flip::Heads, false, 2};
    LeaderState r = apply_leader_reset(l, InteractionClass::Pass0);
    CHECK(r.cnt == 4);
    CHECK(r.flip == Flip::None);
    CHECK(r.voided == true);
    CHECK(r.drag == 2);
    CHECK(r.leadermode == LeaderMode::Active);

    LeaderState z{0, LeaderMode::Active, Flip::Tails, false, 1};
    LeaderState rz = apply_leader_reset(z, InteractionClass::Pass0);
    CHECK(rz.cnt == 0);
    CHECK(rz.flip == Flip::None);
    CHECK(rz.voided == true);

    CHECK(apply_leader_reset(l, InteractionClass::Early) == l);
}

TEST_CASE("gamma schedule matches the printed sequence") {
    CHECK(gamma_schedule(10, 4) == 4);
    CHECK(gamma_schedule(5, 4) == 3);
    CHECK(gamma_schedule(1, 4) == 1);
    CHECK(gamma_schedule(0, 4) == 0);

    // oracle: levels 1..phi-1 twice each, then phi four times, read at cnt
    for (std::uint32_t phi = 1; phi <= 6; ++phi) {
        std::vector<std::uint32_t> seq(2 * phi + 3, 0);
        std::uint32_t pos = 1;
        for (std::uint32_t level = 1; level < phi; ++level) {
            seq[pos++] = level;
            seq[pos++] = level;
        }
        for (int k = 0; k < 4; ++k)
            seq[pos++] = phi;
        REQUIRE(pos == 2 * phi + 3);
        for (std::uint32_t cnt = 1; cnt <= 2 * phi + 2; ++cnt)
            CHECK(gamma_schedule(cnt, phi) == seq[cnt]);
    }
}

TEST_CASE("leader coin flip") {
    LeaderState a{9, LeaderMode::Active, Flip::None, true, 0};

    LeaderState heads = apply_leader_flip(a, coin(4), InteractionClass::Early, 4);
    CHECK(heads.flip == Flip::Heads);
    CHECK(heads.voided == false);

    LeaderState tails = apply_leader_flip(a, coin(2), InteractionClass::Early, 4);
    CHECK(tails.flip == Flip::Tails);
    CHECK(tails.voided == true);

    LeaderState tails2 = apply_leader_flip(a, inhibitor(0, AdvMode::Adv, Elevation::Low),
                                           InteractionClass::Early, 4);
    CHECK(tails2.flip == Flip::Tails);

    LeaderState flipped{9, LeaderMode::Active, Flip::Heads, false, 0};
    CHECK(apply_leader_flip(flipped, coin(1), InteractionClass::Early, 4) == flipped);

    // no flip in the very first round or outside the early half
    LeaderState fresh{11, LeaderMode::Active, Flip::None, true, 0};
    CHECK(apply_leader_flip(fresh, coin(4), InteractionClass::Early, 4) == fresh);
    CHECK(apply_leader_flip(a, coin(4), InteractionClass::Late, 4) == a);

    // cnt = 0 rounds use the symmetric level-0 coin: any coin is heads
    LeaderState last{0, LeaderMode::Active, Flip::None, true, 2};
    CHECK(apply_leader_flip(last, coin(0), InteractionClass::Early, 4).flip == Flip::Heads);
    CHECK(apply_leader_flip(last, inhibitor(0, AdvMode::Stop, Elevation::Low),
                            InteractionClass::Early, 4)
              .flip == Flip::Tails);
}

TEST_CASE("void epidemic in the late half") {
    LeaderState tails_active{5, LeaderMode::Active, Flip::Tails, true, 0};
    LeaderState informed{5, LeaderMode::Active, Flip::Heads, false, 0};

    LeaderState r = apply_void_epidemic(tails_active, informed, InteractionClass::Late);
    CHECK(r.leadermode == LeaderMode::Passive);
    CHECK(r.voided == false);

    LeaderState passive{5, LeaderMode::Passive, Flip::None, true, 0};
    LeaderState r2 = apply_void_epidemic(passive, informed, InteractionClass::Late);
    CHECK(r2.leadermode == LeaderMode::Passive);
    CHECK(r2.voided == false);

    LeaderState heads_nonvoid{5, LeaderMode::Active, Flip::Heads, false, 0};
    CHECK(apply_void_epidemic(heads_nonvoid, informed, InteractionClass::Late) ==
          heads_nonvoid);

    CHECK(apply_void_epidemic(tails_active, informed, InteractionClass::Early) ==
          tails_active);
    LeaderState uninformed{5, LeaderMode::Active, Flip::Heads, true, 0};
    CHECK(apply_void_epidemic(tails_active, uninformed, InteractionClass::Late) ==
          tails_active);
}

TEST_CASE("drag advance") {
    LeaderState l{0, LeaderMode::Active, Flip::Heads, false, 2};
    CHECK(apply_drag_advance(l, inhibitor(2, AdvMode::Stop, Elevation::High), 4).drag == 3);

    LeaderState tails{0, LeaderMode::Active, Flip::Tails, false, 2};
    CHECK(apply_drag_advance(tails, inhibitor(2, AdvMode::Stop, Elevation::High), 4) ==
          tails);

    LeaderState sat{0, LeaderMode::Active, Flip::Heads, false, 4};
    CHECK(apply_drag_advance(sat, inhibitor(4, AdvMode::Stop, Elevation::High), 4) == sat);

    CHECK(apply_drag_advance(l, inhibitor(2, AdvMode::Stop, Elevation::Low), 4) == l);
    CHECK(apply_drag_advance(l, inhibitor(1, AdvMode::Stop, Elevation::High), 4) == l);

    // the counter is quiescent while the elimination schedule is running
    LeaderState counting{3, LeaderMode::Active, Flip::Heads, false, 2};
    CHECK(apply_drag_advance(counting, inhibitor(2, AdvMode::Stop, Elevation::High), 4) ==
          counting);
}

TEST_CASE("drag kill") {
    LeaderState a{5, LeaderMode::Active, Flip::None, true, 1};
    LeaderState other{5, LeaderMode::Active, Flip::None, true, 3};
    LeaderState r = apply_drag_kill(a, other);
    CHECK(r.leadermode == LeaderMode::Withdrawn);
    CHECK(r.drag == 3);

    LeaderState p{5, LeaderMode::Passive, Flip::None, true, 2};
    LeaderState same{5, LeaderMode::Active, Flip::None, true, 2};
    CHECK(apply_drag_kill(p, same) == p);

    LeaderState w{5, LeaderMode::Withdrawn, Flip::None, true, 0};
    LeaderState one{5, LeaderMode::Active, Flip::None, true, 1};
    LeaderState rw = apply_drag_kill(w, one);
    CHECK(rw.leadermode == LeaderMode::Withdrawn);
    CHECK(rw.drag == 1);
}

TEST_CASE("seniority order") {
    LeaderState a{5, LeaderMode::Active, Flip::None, true, 2};
    LeaderState b{5, LeaderMode::Active, Flip::None, true, 1};
    CHECK(seniority_compare(a, b) == Seniority::ASenior);

    LeaderState a2{3, LeaderMode::Active, Flip::None, true, 1};
    LeaderState b2{2, LeaderMode::Passive, Flip::None, true, 1};
    CHECK(seniority_compare(a2, b2) == Seniority::ASenior);

    CHECK(seniority_compare(a, a) == Seniority::Tie);

    // smaller cnt wins, flips rank heads > none > tails
    LeaderState c1{2, LeaderMode::Active, Flip::None, true, 0};
    LeaderState c2{4, LeaderMode::Active, Flip::None, true, 0};
    CHECK(seniority_compare(c1, c2) == Seniority::ASenior);
    LeaderState f1{2, LeaderMode::Active, Flip::Heads, false, 0};
    LeaderState f2{2, LeaderMode::Active, Flip::None, true, 0};
    LeaderState f3{2, LeaderMode::Active, Flip::Tails, true, 0};
    CHECK(seniority_compare(f1, f2) == Seniority::ASenior);
    CHECK(seniority_compare(f2, f3) == Seniority::ASenior);
    CHECK(seniority_compare(f3, f1) == Seniority::BSenior);
}

TEST_CASE("backup withdraws exactly the less senior candidate") {
    LeaderState r{5, LeaderMode::Active, Flip::None, true, 0};
    LeaderState i{5, LeaderMode::Active, Flip::None, true, 1};
    auto [r1, i1] = apply_backup(r, i);
    CHECK(r1.leadermode == LeaderMode::Withdrawn);
    CHECK(i1.leadermode == LeaderMode::Active);

    LeaderState r2{5, LeaderMode::Active, Flip::None, true, 1};
    LeaderState i2{5, LeaderMode::Passive, Flip::None, true, 0};
    auto [r3, i3] = apply_backup(r2, i2);
    CHECK(r3.leadermode == LeaderMode::Active);
    CHECK(i3.leadermode == LeaderMode::Withdrawn);

    // tie-break: the responder withdraws
    auto [r4, i4] = apply_backup(r, r);
    CHECK(r4.leadermode == LeaderMode::Withdrawn);
    CHECK(i4.leadermode == LeaderMode::Active);
}

TEST_CASE("interact composes the full pipeline") {
    auto p = test_params(16, 4, 4);

    SUBCASE("double zero split, clock stays put without a junta") {
        auto res = interact(AgentState::zero(), AgentState::zero(), p);
        CHECK(res.responder.role == Role::X);
        CHECK(res.initiator.role == Role::Leader);
        CHECK(res.initiator.leader.cnt == 2 * p.phi + 3);
        CHECK(res.responder.clock.phase == 0);
        CHECK(res.initiator.clock.phase == 0);
    }

    SUBCASE("clock update composes with the coin rule") {
        AgentState r = coin(0, AdvMode::Adv, 14);
        AgentState i = coin(4, AdvMode::Adv, 2, TimeMode::InJunta);
        auto res = interact(r, i, p);
        CHECK(res.cls == InteractionClass::Pass0);
        CHECK(res.responder.clock.phase == 2);
        CHECK(res.responder.coin.level == 1);
        CHECK(res.responder.coin.mode == AdvMode::Adv);
        CHECK(res.initiator == i);
    }

    SUBCASE("reaching the top level promotes the coin into the junta") {
        AgentState r = coin(3, AdvMode::Adv, 0);
        auto res = interact(r, coin(3), p);
        CHECK(res.responder.coin.level == 4);
        CHECK(res.responder.coin.mode == AdvMode::Stop);
        CHECK(res.responder.clock.timemode == TimeMode::InJunta);
    }

    SUBCASE("backup_only runs only the backup rule") {
        auto bp = p;
        bp.backup_only = true;
        AgentState l = AgentState::fresh_leader(ClockState{}, bp);
        auto res = interact(l, l, bp);
        CHECK(res.responder.leader.leadermode == LeaderMode::Withdrawn);
        CHECK(res.initiator.leader.leadermode == LeaderMode::Active);
        CHECK(res.cls == InteractionClass::Other);
        // no clock movement, no role changes
        CHECK(res.responder.clock.phase == 0);
    }
}

namespace {

AgentState random_agent(Xoshiro256& rng, const ProtocolParams& p) {
    AgentState a;
    a.role = static_cast<Role>(rng.bounded(6));
    a.clock.phase = static_cast<std::uint8_t>(rng.bounded(p.gamma));
    a.clock.timemode = TimeMode::Follower;
    switch (a.role) {
    case Role::Coin:
        a.coin.level = static_cast<std::uint8_t>(rng.bounded(p.phi + 1));
        a.coin.mode = a.coin.level == p.phi ? AdvMode::Stop
                                            : static_cast<AdvMode>(rng.bounded(2));
        if (a.coin.level == p.phi)
            a.clock.timemode = TimeMode::InJunta;
        break;
    case Role::Inhibitor:
        a.inh.drag = static_cast<std::uint8_t>(rng.bounded(p.psi + 1));
        a.inh.mode = a.inh.drag == p.psi ? AdvMode::Stop
                                         : static_cast<AdvMode>(rng.bounded(2));
        a.inh.elev = static_cast<Elevation>(rng.bounded(2));
        break;
    case Role::Leader:
        a.leader.cnt = static_cast<std::uint8_t>(rng.bounded(2 * p.phi + 4));
        a.leader.leadermode = static_cast<LeaderMode>(rng.bounded(3));
        a.leader.flip = static_cast<Flip>(rng.bounded(3));
        a.leader.voided = rng.bounded(2) == 0;
        a.leader.drag = static_cast<std::uint8_t>(rng.bounded(p.psi + 1));
        break;
    default:
        break;
    }
    return a;
}

int leader_mode_rank(LeaderMode m) {
    return m == LeaderMode::Active ? 0 : m == LeaderMode::Passive ? 1 : 2;
}

bool role_transition_ok(Role from, Role to) {
    if (from == to)
        return true;
    switch (from) {
    case Role::Zero:
        return to == Role::X || to == Role::Leader || to == Role::Deactivated;
    case Role::X:
        return to == Role::Coin || to == Role::Inhibitor || to == Role::Deactivated;
    default:
        return false;
    }
}

} // namespace

TEST_CASE("monotonicity and purity over random interaction streams") {
    auto p = test_params(16, 3, 3);
    Xoshiro256 rng(20260826);

    std::vector<AgentState> pop(64);
    for (auto& a : pop)
        a = random_agent(rng, p);

    for (int step = 0; step < 200000; ++step) {
        auto ri = static_cast<std::size_t>(rng.bounded(pop.size()));
        auto ii = static_cast<std::size_t>(rng.bounded(pop.size() - 1));
        if (ii >= ri)
            ++ii;
        AgentState pre_r = pop[ri], pre_i = pop[ii];
        InteractionResult res = interact(pre_r, pre_i, p);

        // purity
        InteractionResult res2 = interact(pre_r, pre_i, p);
        REQUIRE(res.responder == res2.responder);
        REQUIRE(res.initiator == res2.initiator);
        REQUIRE(res.cls == res2.cls);

        for (auto [pre, post] : {std::pair{pre_r, res.responder},
                                 std::pair{pre_i, res.initiator}}) {
            REQUIRE(role_transition_ok(pre.role, post.role));
            if (pre.role == post.role && pre.role == Role::Coin) {
                REQUIRE(post.coin.level >= pre.coin.level);
                if (pre.coin.mode == AdvMode::Stop)
                    REQUIRE(post.coin == pre.coin);
                REQUIRE(post.coin.level <= p.phi);
            }
            if (pre.role == post.role && pre.role == Role::Inhibitor) {
                REQUIRE(post.inh.drag >= pre.inh.drag);
                if (pre.inh.mode == AdvMode::Stop)
                    REQUIRE(post.inh.drag == pre.inh.drag);
                REQUIRE((pre.inh.elev == Elevation::Low ||
                         post.inh.elev == Elevation::High));
                REQUIRE(post.inh.drag <= p.psi);
            }
            if (pre.role == post.role && pre.role == Role::Leader) {
                REQUIRE(post.leader.cnt <= pre.leader.cnt);
                REQUIRE(post.leader.drag >= pre.leader.drag);
                REQUIRE(leader_mode_rank(post.leader.leadermode) >=
                        leader_mode_rank(pre.leader.leadermode));
            }
        }
        pop[ri] = res.responder;
        pop[ii] = res.initiator;
    }
}

TEST_CASE("flip changes away from none at most once per round") {
    auto p = test_params(16, 3, 3);
    Xoshiro256 rng(42);

    std::vector<AgentState> pop(128, AgentState::zero());
    std::vector<bool> flipped(pop.size(), false);

    for (int step = 0; step < 600000; ++step) {
        auto ri = static_cast<std::size_t>(rng.bounded(pop.size()));
        auto ii = static_cast<std::size_t>(rng.bounded(pop.size() - 1));
        if (ii >= ri)
            ++ii;
        AgentState pre_r = pop[ri];
        InteractionResult res = interact(pre_r, pop[ii], p);

        if (res.cls == InteractionClass::Pass0)
            flipped[ri] = false;
        if (pre_r.role == Role::Leader && res.responder.role == Role::Leader &&
            pre_r.leader.flip == Flip::None &&
            res.responder.leader.flip != Flip::None) {
            REQUIRE(!flipped[ri]);
            flipped[ri] = true;
        }
        pop[ri] = res.responder;
        pop[ii] = res.initiator;
    }
}

TEST_CASE("interact matches the staged pipeline on random states") {
    auto p = test_params(16, 3, 3);
    Xoshiro256 rng(99);
    for (int t = 0; t < 300000; ++t) {
        AgentState r = random_agent(rng, p);
        AgentState i = random_agent(rng, p);
        auto fast = interact(r, i, p);
        auto staged = interact_with_order(r, i, p, kDefaultStageOrder);
        REQUIRE(fast.responder == staged.responder);
        REQUIRE(fast.initiator == staged.initiator);
        REQUIRE(fast.cls == staged.cls);
    }
}

TEST_CASE("commuting stages permute without effect; backup overrides passivation") {
    auto p = test_params(16, 3, 3);
    Xoshiro256 rng(7);

    // swaps of stages that touch disjoint fields or have role-disjoint guards
    const std::array<Stage, 12> base{
        Stage::Clock,        Stage::Init,         Stage::Deactivate, Stage::CoinRules,
        Stage::InhibitorDrag, Stage::InhibitorSignal, Stage::LeaderReset, Stage::LeaderFlip,
        Stage::VoidEpidemic, Stage::DragAdvance,  Stage::DragKill,   Stage::Backup};
    std::vector<std::pair<int, int>> commuting = {
        {3, 4},  // coin rules vs inhibitor drag: different responder roles
        {4, 5},  // drag counting vs elevation: disjoint fields
        {6, 7},  // reset vs flip: class-exclusive triggers
        {9, 10}, // drag advance vs drag kill: role-disjoint initiator guards
    };
    for (int t = 0; t < 20000; ++t) {
        AgentState r = random_agent(rng, p);
        AgentState i = random_agent(rng, p);
        auto ref = interact_with_order(r, i, p, base);
        for (auto [x, y] : commuting) {
            auto order = base;
            std::swap(order[static_cast<std::size_t>(x)],
                      order[static_cast<std::size_t>(y)]);
            auto alt = interact_with_order(r, i, p, order);
            REQUIRE(alt.responder == ref.responder);
            REQUIRE(alt.initiator == ref.initiator);
        }
    }

    // non-commuting pair: the void epidemic would passivate the responder in
    // the same interaction in which the backup rule withdraws it; the
    // documented order makes withdrawal win.
    AgentState r = leader(LeaderMode::Active, 5, Flip::Tails, true, 0, 9);
    AgentState i = leader(LeaderMode::Active, 3, Flip::Heads, false, 0, 9);
    auto ref = interact(r, i, p);
    CHECK(ref.responder.leader.leadermode == LeaderMode::Withdrawn);

    auto order = base;
    std::swap(order[8], order[11]); // backup before the epidemic
    auto alt = interact_with_order(r, i, p, order);
    CHECK(alt.responder.leader.leadermode == LeaderMode::Passive);
}
