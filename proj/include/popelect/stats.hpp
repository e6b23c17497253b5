#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

// Small statistics toolbox: moments, quantiles, a chi-square tail and a
// Mann-Whitney U location test. Accuracy targets are test gates, not
// publication-grade p-values.

namespace popelect::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty())
        throw std::invalid_argument("mean of empty sample");
    double s = 0;
    for (double x : xs)
        s += x;
    return s / static_cast<double>(xs.size());
}

// Linear-interpolation quantile on a copy of the sample.
inline double quantile(std::span<const double> xs, double q) {
    if (xs.empty())
        throw std::invalid_argument("quantile of empty sample");
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size())
        return v.back();
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

inline double median(std::span<const double> xs) { return quantile(xs, 0.5); }

namespace detail {

// Regularized upper incomplete gamma Q(a, x), series + continued fraction.
inline double gamma_q(double a, double x) {
    if (x < 0 || a <= 0)
        throw std::invalid_argument("gamma_q domain");
    if (x == 0)
        return 1.0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // P(a,x) by series, Q = 1 - P
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15)
                break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    // Q(a,x) by Lentz continued fraction
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300)
            d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300)
            c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15)
            break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

} // namespace detail

// Survival function of the chi-square distribution.
inline double chi_square_pvalue(double statistic, double dof) {
    return detail::gamma_q(dof / 2.0, statistic / 2.0);
}

// Chi-square goodness-of-fit p-value against a uniform distribution over
// `bins` categories.
inline double chi_square_uniform_pvalue(std::span<const std::uint64_t> counts) {
    std::uint64_t total = 0;
    for (auto c : counts)
        total += c;
    double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0;
    for (auto c : counts) {
        double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return chi_square_pvalue(stat, static_cast<double>(counts.size() - 1));
}

// Two-sided Mann-Whitney U test p-value, normal approximation with tie
// correction. Suitable for the sample sizes used in the acceptance suite.
inline double mann_whitney_pvalue(std::span<const double> a, std::span<const double> b) {
    std::size_t n1 = a.size(), n2 = b.size();
    if (n1 == 0 || n2 == 0)
        throw std::invalid_argument("mann_whitney on empty sample");
    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(n1 + n2);
    for (double x : a)
        pooled.emplace_back(x, 0);
    for (double x : b)
        pooled.emplace_back(x, 1);
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });

    double rank_sum_a = 0;
    double tie_term = 0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first)
            ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second == 0)
                rank_sum_a += avg_rank;
        i = j;
    }

    double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
    double u = rank_sum_a - dn1 * (dn1 + 1) / 2.0;
    double mu = dn1 * dn2 / 2.0;
    double nn = dn1 + dn2;
    double var = dn1 * dn2 / 12.0 * (nn + 1 - tie_term / (nn * (nn - 1)));
    if (var <= 0)
        return 1.0; // all values tied
    double z = (u - mu) / std::sqrt(var);
    double p = std::erfc(std::fabs(z) / std::sqrt(2.0));
    return p > 1.0 ? 1.0 : p;
}

} // namespace popelect::stats
