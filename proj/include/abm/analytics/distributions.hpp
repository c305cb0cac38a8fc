#pragma once

// Subbotin (exponential power) MLE, power-law / log-normal tail fits, and a
// KS normality test.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "timeseries.hpp"

namespace abm::analytics {

/// f(x) = beta / (2 alpha Gamma(1/beta)) exp(-|(x - mu)/alpha|^beta).
/// beta = 1 is Laplace, beta = 2 is normal with alpha = sqrt(2) sigma.
struct SubbotinFit {
    double beta = 0.0;
    double alpha = 0.0;
    double mu = 0.0;
    double log_likelihood = 0.0;
    bool converged = true;
};

inline double subbotin_log_density(double x, double beta, double alpha, double mu) {
    return std::log(beta) - std::log(2.0 * alpha) - std::lgamma(1.0 / beta) - std::pow(std::abs((x - mu) / alpha), beta);
}

namespace detail {

inline double abs_power_sum(std::span<const double> x, double mu, double beta) {
    double s = 0.0;
    for (double v : x) s += std::pow(std::abs(v - mu), beta);
    return s;
}

// Location minimising sum |x - mu|^beta over sorted data.
inline double subbotin_location(const std::vector<double>& sorted, double beta) {
    const std::size_t n = sorted.size();
    if (beta == 2.0) return mean(sorted);
    if (beta == 1.0) return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const double lo = sorted.front(), hi = sorted.back();
    if (lo == hi) return lo;
    auto S = [&](double m) { return abs_power_sum(sorted, m, beta); };
    double best = boost::math::tools::brent_find_minima(S, lo, hi, 40).first;
    if (beta < 1.0) {
        // concave between data points: the minimum sits on a sample value
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), best);
        const auto mid = static_cast<std::ptrdiff_t>(it - sorted.begin());
        const std::ptrdiff_t w = 64;
        double bestS = S(best);
        for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, mid - w);
             k < std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), mid + w); ++k) {
            const double s = S(sorted[static_cast<std::size_t>(k)]);
            if (s < bestS) {
                bestS = s;
                best = sorted[static_cast<std::size_t>(k)];
            }
        }
    }
    return best;
}

// Profile: for fixed beta, mu minimises S and alpha^beta = (beta/n) S.
inline SubbotinFit subbotin_profile(const std::vector<double>& sorted, double beta) {
    const double n = static_cast<double>(sorted.size());
    SubbotinFit f;
    f.beta = beta;
    f.mu = subbotin_location(sorted, beta);
    const double S = abs_power_sum(sorted, f.mu, beta);
    f.alpha = std::pow(beta * S / n, 1.0 / beta);
    if (!(f.alpha > 0.0)) {
        f.log_likelihood = -INFINITY;
        return f;
    }
    f.log_likelihood = n * (std::log(beta) - std::log(2.0 * f.alpha) - std::lgamma(1.0 / beta)) - n / beta;
    return f;
}

}  // namespace detail

/// Maximum likelihood. With `fixed_beta` only alpha and mu are estimated.
inline SubbotinFit fit_subbotin(std::span<const double> data, std::optional<double> fixed_beta = std::nullopt) {
    if (data.size() < 3) throw std::invalid_argument("fit_subbotin: needs at least 3 observations");
    std::vector<double> x(data.begin(), data.end());
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("fit_subbotin: non-finite observation");
    std::sort(x.begin(), x.end());
    if (x.front() == x.back()) throw std::invalid_argument("fit_subbotin: data are constant");
    if (fixed_beta) {
        if (!(*fixed_beta > 0.0)) throw std::invalid_argument("fit_subbotin: beta must be positive");
        return detail::subbotin_profile(x, *fixed_beta);
    }
    auto negll = [&](double b) { return -detail::subbotin_profile(x, b).log_likelihood; };
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::brent_find_minima(negll, 0.2, 5.0, 30, iters);
    SubbotinFit f = detail::subbotin_profile(x, r.first);
    f.converged = iters < 200;
    return f;
}

struct TailFit {
    double exponent = 0.0;     // density ~ x^-exponent above x_min
    double x_min = 0.0;
    std::size_t n_tail = 0;
    double ks_distance = 0.0;
    double lognormal_mu = 0.0;
    double lognormal_sigma = 0.0;
    double powerlaw_tail_ll = 0.0;
    double lognormal_tail_ll = 0.0;
    std::vector<std::pair<double, double>> ccdf;  // (x, P(X >= x)) on a log grid
};

/// Continuous power-law MLE above x_min; x_min minimises the KS distance
/// between the empirical and fitted tail CDFs. The log-normal is fitted to
/// all data by ML on logs and scored on the same tail (truncated density).
inline TailFit fit_tail(std::span<const double> data, std::size_t min_tail = 10, std::size_t max_candidates = 400) {
    std::vector<double> x(data.begin(), data.end());
    for (double v : x)
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("fit_tail: data must be positive and finite");
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    if (n < min_tail || x.front() == x.back()) throw std::invalid_argument("fit_tail: too few distinct points");

    std::vector<double> logs(n);
    for (std::size_t k = 0; k < n; ++k) logs[k] = std::log(x[k]);

    // candidate x_min: distinct values leaving at least min_tail points
    std::vector<std::size_t> cand;
    const std::size_t last = n - min_tail;
    const std::size_t stride = std::max<std::size_t>(1, (last + 1) / max_candidates);
    for (std::size_t k = 0; k <= last; k += stride)
        if (k == 0 || x[k] != x[k - 1]) cand.push_back(k);

    TailFit best;
    best.ks_distance = INFINITY;
    for (std::size_t k0 : cand) {
        const double xm = x[k0];
        const std::size_t m = n - k0;
        double sl = 0.0;
        for (std::size_t k = k0; k < n; ++k) sl += logs[k] - std::log(xm);
        if (!(sl > 0.0)) continue;
        const double a = 1.0 + static_cast<double>(m) / sl;
        double D = 0.0;
        for (std::size_t k = k0; k < n; ++k) {
            const double F = 1.0 - std::pow(x[k] / xm, 1.0 - a);
            const double lo = static_cast<double>(k - k0) / static_cast<double>(m);
            const double hi = static_cast<double>(k - k0 + 1) / static_cast<double>(m);
            D = std::max({D, std::abs(F - lo), std::abs(F - hi)});
        }
        if (D < best.ks_distance) {
            best.ks_distance = D;
            best.exponent = a;
            best.x_min = xm;
            best.n_tail = m;
        }
    }
    if (!std::isfinite(best.ks_distance)) throw std::invalid_argument("fit_tail: no admissible x_min");

    best.lognormal_mu = mean(logs);
    double v = 0.0;
    for (double l : logs) v += (l - best.lognormal_mu) * (l - best.lognormal_mu);
    best.lognormal_sigma = std::sqrt(v / static_cast<double>(n));

    const double a = best.exponent, xm = best.x_min;
    const double s = best.lognormal_sigma, mu = best.lognormal_mu;
    const boost::math::normal stdn;
    const double tail_mass = boost::math::cdf(boost::math::complement(stdn, (std::log(xm) - mu) / s));
    const double log_norm = std::log(std::sqrt(2.0 * M_PI) * s);
    for (std::size_t k = n - best.n_tail; k < n; ++k) {
        best.powerlaw_tail_ll += std::log((a - 1.0) / xm) - a * (logs[k] - std::log(xm));
        const double z = (logs[k] - mu) / s;
        best.lognormal_tail_ll += -logs[k] - log_norm - 0.5 * z * z - std::log(tail_mass);
    }

    const int grid = 50;
    const double l0 = logs.front(), l1 = logs.back();
    for (int g = 0; g < grid; ++g) {
        const double xv = std::exp(l0 + (l1 - l0) * g / (grid - 1));
        const auto it = std::lower_bound(x.begin(), x.end(), xv);
        best.ccdf.emplace_back(xv, static_cast<double>(x.end() - it) / static_cast<double>(n));
    }
    return best;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample KS against a normal with the sample mean and standard deviation.
inline KsResult ks_normality(std::span<const double> data) {
    if (data.size() < 8) throw std::invalid_argument("ks_normality: needs at least 8 observations");
    std::vector<double> x(data.begin(), data.end());
    std::sort(x.begin(), x.end());
    const double m = mean(x), sd = stddev(x);
    if (!(sd > 0.0)) throw std::domain_error("ks_normality: zero variance");
    const boost::math::normal dist(m, sd);
    const double n = static_cast<double>(x.size());
    KsResult r;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double F = boost::math::cdf(dist, x[k]);
        r.statistic = std::max({r.statistic, F - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - F});
    }
    const double sn = std::sqrt(n);
    r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * r.statistic);
    return r;
}

}  // namespace abm::analytics
