#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "popelect/sim.hpp"

namespace popelect {

// Cumulative census over coin levels or inhibitor drags: reach[l] counts the
// members of the sub-population at value l or higher.
struct LevelHistogram {
    std::vector<std::uint64_t> reach;
    std::uint64_t subpopulation = 0;
    std::uint64_t stopped = 0; // inhibitors with mode = stop (0 for coins)

    std::uint64_t exact(std::size_t l) const {
        return l + 1 < reach.size() ? reach[l] - reach[l + 1] : reach[l];
    }
};

LevelHistogram coin_census(const SimState& state);
LevelHistogram drag_census(const SimState& state);

// Expected interactions for the backup rule alone to go from k0 alive
// candidates to one: n(n-1) * sum_{k=2..k0} 1/(k(k-1)) = n(n-1)(1 - 1/k0).
double backup_expected_interactions(std::uint64_t n, std::uint64_t k0);

// Abstract final-epoch chain: each round is void with probability (1-p)^F,
// otherwise F becomes Binomial(F, p) conditioned on at least one success.
// Returns the sampled distribution of B = rounds until F = 1.
std::vector<std::uint32_t> round_model_oracle(std::uint32_t f0, double p,
                                              std::uint32_t trials,
                                              std::uint64_t seed);

struct EpochBoundaries {
    std::optional<std::uint64_t> epoch1_end;
    std::optional<std::uint64_t> epoch2_end;
    std::optional<std::uint64_t> epoch3_end;
    bool desynchronized = false; // boundaries undefined, resolved by backup
};

EpochBoundaries epoch_boundaries(const TrialRecord& trial);

struct AggregateStats {
    std::uint64_t n = 0;
    std::uint64_t trial_count = 0;
    double mean_interactions = 0;
    double mean_parallel_time = 0;
    double median_parallel_time = 0;
    double q05_parallel_time = 0;
    double q95_parallel_time = 0;
    double median_epoch2_survivors = 0;
    std::uint64_t exhausted_count = 0;
    std::uint64_t safety_violation_count = 0;
};

// Rejects trial lists with heterogeneous parameters.
AggregateStats aggregate(std::span<const TrialRecord> trials);

} // namespace popelect
