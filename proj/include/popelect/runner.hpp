#pragma once

#include <cstdint>
#include <vector>

#include "popelect/sim.hpp"

namespace popelect {

// Runs `trials` independent seeded trials across a worker pool and returns
// the records in trial-index order. Seeds derive positionally from the
// master seed, so extending a batch never reshuffles earlier trials.
std::vector<TrialRecord> run_trials(const ProtocolParams& params, std::uint32_t trials,
                                    std::uint64_t master_seed, const StopCondition& stop,
                                    unsigned workers = 0);

unsigned default_workers();

} // namespace popelect
