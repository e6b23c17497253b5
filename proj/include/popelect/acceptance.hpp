#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace popelect::accept {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteOptions {
    std::vector<int> criteria;            // empty = all; ids are 1-based
    std::uint64_t seed = 0xACCE97ED2026ULL; // reference seed set
    unsigned workers = 0;                 // 0 = default pool size
    bool drag_advance_on_noncoin = false; // run the variant rule everywhere
};

struct SuiteResult {
    std::vector<CriterionResult> criteria;
    bool all_passed() const;
};

inline constexpr int kCriterionCount = 11;

const char* criterion_name(int id);

// Executes the selected validation criteria at reference scale, streaming one
// "criterion <id> <name>: PASS|FAIL (<detail>)" line per criterion to `log`.
// Trial batches are shared between criteria that measure the same runs.
SuiteResult run_acceptance_suite(const SuiteOptions& opts, std::ostream& log);

} // namespace popelect::accept
