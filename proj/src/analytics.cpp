#include "popelect/analytics.hpp"

#include <stdexcept>

#include "popelect/rng.hpp"
#include "popelect/stats.hpp"

namespace popelect {

LevelHistogram coin_census(const SimState& state) {
    LevelHistogram h;
    h.reach.assign(state.params().phi + 1, 0);
    for (const AgentState& a : state.agents()) {
        if (a.role != Role::Coin)
            continue;
        ++h.subpopulation;
        for (std::uint32_t l = 0; l <= a.coin.level; ++l)
            ++h.reach[l];
    }
    return h;
}

LevelHistogram drag_census(const SimState& state) {
    LevelHistogram h;
    h.reach.assign(state.params().psi + 1, 0);
    for (const AgentState& a : state.agents()) {
        if (a.role != Role::Inhibitor)
            continue;
        ++h.subpopulation;
        for (std::uint32_t l = 0; l <= a.inh.drag; ++l)
            ++h.reach[l];
        if (a.inh.mode == AdvMode::Stop)
            ++h.stopped;
    }
    return h;
}

double backup_expected_interactions(std::uint64_t n, std::uint64_t k0) {
    if (k0 < 1 || k0 > n || n < 2)
        throw std::invalid_argument("backup_expected_interactions: need 1 <= k0 <= n");
    if (k0 == 1)
        return 0.0;
    double dn = static_cast<double>(n);
    return dn * (dn - 1.0) * (1.0 - 1.0 / static_cast<double>(k0));
}

std::vector<std::uint32_t> round_model_oracle(std::uint32_t f0, double p,
                                              std::uint32_t trials,
                                              std::uint64_t seed) {
    if (p <= 0.0 || p >= 1.0)
        throw std::invalid_argument("round_model_oracle: need 0 < p < 1");
    if (f0 < 1)
        throw std::invalid_argument("round_model_oracle: need F0 >= 1");
    std::vector<std::uint32_t> out;
    out.reserve(trials);
    for (std::uint32_t t = 0; t < trials; ++t) {
        Xoshiro256 rng(derive_seed(seed, t));
        std::uint32_t f = f0;
        std::uint32_t b = 0;
        while (f > 1) {
            std::uint32_t heads = 0;
            for (std::uint32_t i = 0; i < f; ++i)
                heads += rng.uniform() < p;
            // all-tails is a void round: F stays put
            if (heads > 0)
                f = heads;
            ++b;
        }
        out.push_back(b);
    }
    return out;
}

EpochBoundaries epoch_boundaries(const TrialRecord& trial) {
    EpochBoundaries e;
    if (trial.epoch1_end != 0)
        e.epoch1_end = trial.epoch1_end;
    if (trial.epoch2_end != 0)
        e.epoch2_end = trial.epoch2_end;
    if (trial.single_active_at != 0)
        e.epoch3_end = trial.single_active_at;
    e.desynchronized = !trial.backup_only &&
                       (!e.epoch1_end || !e.epoch2_end || !e.epoch3_end);
    return e;
}

AggregateStats aggregate(std::span<const TrialRecord> trials) {
    if (trials.empty())
        throw std::invalid_argument("aggregate: empty trial list");
    const TrialRecord& first = trials.front();
    AggregateStats s;
    s.n = first.n;
    s.trial_count = trials.size();

    std::vector<double> ptimes, survivors;
    ptimes.reserve(trials.size());
    double interaction_sum = 0;
    for (const TrialRecord& t : trials) {
        if (t.n != first.n || t.gamma != first.gamma || t.phi != first.phi ||
            t.psi != first.psi || t.backup_only != first.backup_only ||
            t.drag_advance_on_noncoin != first.drag_advance_on_noncoin)
            throw std::invalid_argument("aggregate: mixed-parameter trial list");
        ptimes.push_back(t.parallel_time());
        interaction_sum += static_cast<double>(t.interactions);
        if (t.epoch2_end != 0)
            survivors.push_back(static_cast<double>(t.epoch2_survivors));
        s.exhausted_count += t.exhausted;
        s.safety_violation_count += t.safety_violation;
    }
    s.mean_interactions = interaction_sum / static_cast<double>(trials.size());
    s.mean_parallel_time = stats::mean(ptimes);
    s.median_parallel_time = stats::median(ptimes);
    s.q05_parallel_time = stats::quantile(ptimes, 0.05);
    s.q95_parallel_time = stats::quantile(ptimes, 0.95);
    if (!survivors.empty())
        s.median_epoch2_survivors = stats::median(survivors);
    return s;
}

} // namespace popelect
