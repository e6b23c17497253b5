#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace popelect {

/// Protocol-wide constants. Gamma/Phi/Psi default from the population size
/// and may be overridden (overrides are echoed into every output record).
struct ProtocolParams {
    std::uint64_t n = 0;
    std::uint32_t gamma = 32;     // clock modulus, divisible by 4
    std::uint32_t phi = 0;        // coin-level cap
    std::uint32_t psi = 0;        // drag cap
    bool phi_overridden = false;
    bool backup_only = false;             // run only the pairwise backup rule
    bool drag_advance_on_noncoin = false; // printed-rule variant of inhibitor drag

    // The clock's phase front advances in roughly constant parallel time per
    // phase, so the modulus has to grow with log2 n for a round to span the
    // order n log n interactions the boundary-separation guarantee needs.
    // Rounded up to a multiple of 4 so the half- and quarter-phase windows
    // stay aligned; floored at 32 so small populations keep comfortable
    // headroom for the within-round epidemics.
    static std::uint32_t default_gamma(std::uint64_t n) {
        std::uint32_t lg = 0;
        while ((1ull << lg) < n)
            ++lg;
        std::uint32_t g = 4 * lg;
        return g < 32 ? 32u : g;
    }

    static std::uint32_t default_phi(std::uint64_t n) {
        double ll = std::log2(std::log2(static_cast<double>(n)));
        auto v = static_cast<std::int64_t>(std::floor(ll)) - 3;
        return v < 1 ? 1u : static_cast<std::uint32_t>(v);
    }

    static std::uint32_t default_psi(std::uint64_t n) {
        double ll = std::log2(std::log2(static_cast<double>(n)));
        auto v = static_cast<std::int64_t>(std::ceil(ll));
        return v < 1 ? 1u : static_cast<std::uint32_t>(v);
    }

    static ProtocolParams for_population(std::uint64_t n) {
        ProtocolParams p;
        p.n = n;
        if (n >= 2) {
            p.gamma = default_gamma(n);
            p.phi = default_phi(n);
            p.psi = default_psi(n);
        }
        p.validate();
        return p;
    }

    std::uint32_t leader_cnt_init() const { return 2 * phi + 3; }

    void validate() const {
        if (n < 2)
            throw std::invalid_argument("population size must be at least 2");
        if (gamma < 8 || gamma % 4 != 0)
            throw std::invalid_argument("gamma must be >= 8 and divisible by 4");
        if (phi < 1)
            throw std::invalid_argument("phi must be >= 1");
        if (psi < 1)
            throw std::invalid_argument("psi must be >= 1");
        if (2 * phi + 3 > 255 || psi > 254 || gamma > 255)
            throw std::invalid_argument("parameter exceeds packed-state range");
    }

    bool same_shape(const ProtocolParams& o) const {
        return n == o.n && gamma == o.gamma && phi == o.phi && psi == o.psi &&
               backup_only == o.backup_only &&
               drag_advance_on_noncoin == o.drag_advance_on_noncoin;
    }
};

} // namespace popelect
