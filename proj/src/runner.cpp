#include "popelect/runner.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace popelect {

unsigned default_workers() {
    if (const char* env = std::getenv("POPELECT_WORKERS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            return static_cast<unsigned>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

std::vector<TrialRecord> run_trials(const ProtocolParams& params, std::uint32_t trials,
                                    std::uint64_t master_seed, const StopCondition& stop,
                                    unsigned workers) {
    params.validate();
    if (workers == 0)
        workers = default_workers();
    if (workers > trials)
        workers = trials == 0 ? 1 : trials;

    std::vector<TrialRecord> records(trials);
    std::atomic<std::uint32_t> next{0};

    auto work = [&] {
        while (true) {
            std::uint32_t idx = next.fetch_add(1, std::memory_order_relaxed);
            if (idx >= trials)
                return;
            SimState sim = SimState::create(params, derive_seed(master_seed, idx));
            records[idx] = run_until(sim, stop);
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    return records;
}

} // namespace popelect
