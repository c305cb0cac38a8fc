#pragma once

// Inequality, concentration, turnover and crisis indices.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace abm::analytics {

/// Gini coefficient of nonnegative wealth (sorted ascending internally):
/// G = (N + 1 - 2 sum_h (N + 1 - h) M_h / sum M) / N.
inline double gini(std::span<const double> wealth) {
    const std::size_t n = wealth.size();
    if (n == 0) throw std::invalid_argument("gini: empty wealth vector");
    std::vector<double> w(wealth.begin(), wealth.end());
    std::sort(w.begin(), w.end());
    if (w.front() < 0.0) throw std::invalid_argument("gini: negative wealth");
    double total = 0.0, weighted = 0.0;
    const double N = static_cast<double>(n);
    for (std::size_t h = 0; h < n; ++h) {
        total += w[h];
        weighted += (N - static_cast<double>(h)) * w[h];  // N + 1 - (h + 1)
    }
    if (!(total > 0.0)) throw std::invalid_argument("gini: all wealth is zero");
    return (N + 1.0 - 2.0 * weighted / total) / N;
}

/// Hymer-Pashigian instability: sum |ms_t - ms_{t-1}|, in [0, 2].
inline double hpi(std::span<const double> shares_t, std::span<const double> shares_prev) {
    if (shares_t.size() != shares_prev.size()) throw std::invalid_argument("hpi: length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < shares_t.size(); ++k) s += std::abs(shares_t[k] - shares_prev[k]);
    return s;
}

inline double hhi(std::span<const double> shares) {
    double s = 0.0;
    for (double x : shares) s += x * x;
    return s;
}

/// (HHI - 1/N) / (1 - 1/N), in [0, 1].
inline double hhi_normalized(std::span<const double> shares) {
    const std::size_t n = shares.size();
    if (n < 2) throw std::invalid_argument("hhi_normalized: needs at least two agents");
    const double inv = 1.0 / static_cast<double>(n);
    return (hhi(shares) - inv) / (1.0 - inv);
}

/// Plain shares x_k / sum x (uniform when the total is zero).
inline std::vector<double> shares_of(std::span<const double> x) {
    std::vector<double> s(x.size(), 0.0);
    double total = 0.0;
    for (double v : x) total += std::max(v, 0.0);
    for (std::size_t k = 0; k < x.size(); ++k)
        s[k] = total > 0.0 ? std::max(x[k], 0.0) / total : 1.0 / static_cast<double>(x.size());
    return s;
}

/// BR_t = (1/N_A) sum of the trailing `window` counts (window = 1/dt).
/// Early periods sum over what is available.
inline std::vector<double> bankruptcy_rate(std::span<const double> counts, double population, int window) {
    if (!(population > 0.0)) throw std::invalid_argument("bankruptcy_rate: population must be positive");
    if (window < 1) throw std::invalid_argument("bankruptcy_rate: window must be >= 1");
    std::vector<double> out(counts.size());
    double run = 0.0;
    for (std::size_t t = 0; t < counts.size(); ++t) {
        run += counts[t];
        if (t >= static_cast<std::size_t>(window)) run -= counts[t - static_cast<std::size_t>(window)];
        out[t] = run / population;
    }
    return out;
}

struct CrisisFlags {
    std::vector<bool> flags;
    int count = 0;
};

inline CrisisFlags crisis_flags(std::span<const double> annual_growth, double threshold = -0.03) {
    CrisisFlags c;
    c.flags.reserve(annual_growth.size());
    for (double g : annual_growth) {
        const bool f = g < threshold;
        c.flags.push_back(f);
        c.count += f ? 1 : 0;
    }
    return c;
}

}  // namespace abm::analytics
