#pragma once

// Growth rates, HP filter, correlations and OLS.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace abm::analytics {

/// g_t = ln x_t - ln x_{t-step}; length N - step.
inline std::vector<double> growth_rate(std::span<const double> x, int step = 1) {
    if (step < 1) throw std::invalid_argument("growth_rate: step must be >= 1");
    for (std::size_t t = 0; t < x.size(); ++t)
        if (!(x[t] > 0.0)) throw std::domain_error("growth_rate: nonpositive value at index " + std::to_string(t));
    const auto s = static_cast<std::size_t>(step);
    std::vector<double> g;
    if (x.size() <= s) return g;
    g.reserve(x.size() - s);
    for (std::size_t t = s; t < x.size(); ++t) g.push_back(std::log(x[t]) - std::log(x[t - s]));
    return g;
}

inline double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean: empty series");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("stddev: needs at least two values");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

/// Population standard deviation (n denominator).
inline double pstddev(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size()));
}

struct CycleDecomposition {
    std::vector<double> trend;
    std::vector<double> cycle;
    double lambda = 0.0;
};

/// Trend minimises sum (x - tau)^2 + lambda sum (second difference of tau)^2,
/// i.e. (I + lambda D'D) tau = x with D the (n-2) x n second-difference
/// operator. The system is pentadiagonal and solved by sparse LDL'.
inline CycleDecomposition hp_filter(std::span<const double> x, double lambda = 1600.0) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 4) throw std::invalid_argument("hp_filter: series needs at least 4 points");
    if (!(lambda > 0.0)) throw std::invalid_argument("hp_filter: lambda must be positive");

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(5 * n));
    Eigen::VectorXd diag = Eigen::VectorXd::Ones(n);
    // accumulate lambda D'D row by row of D: coefficients (1, -2, 1) at k, k+1, k+2
    const double c[3] = {1.0, -2.0, 1.0};
    for (Eigen::Index k = 0; k + 2 < n; ++k)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) trip.emplace_back(k + a, k + b, lambda * c[a] * c[b]);
    for (Eigen::Index k = 0; k < n; ++k) trip.emplace_back(k, k, 1.0);
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw std::runtime_error("hp_filter: factorisation failed");
    Eigen::VectorXd rhs(n);
    for (Eigen::Index k = 0; k < n; ++k) rhs[k] = x[static_cast<std::size_t>(k)];
    const Eigen::VectorXd tau = solver.solve(rhs);

    CycleDecomposition out;
    out.lambda = lambda;
    out.trend.assign(tau.data(), tau.data() + n);
    out.cycle.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out.cycle[k] = x[k] - out.trend[k];
    return out;
}

/// Sample autocorrelation at lags 0..max_lag (full-sample mean and variance).
inline std::vector<double> autocorrelation(std::span<const double> x, int max_lag) {
    if (max_lag < 0) throw std::invalid_argument("autocorrelation: negative lag");
    const double m = mean(x);
    double s0 = 0.0;
    for (double v : x) s0 += (v - m) * (v - m);
    if (!(s0 > 0.0)) throw std::domain_error("autocorrelation: zero variance");
    std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (std::size_t k = 0; k < r.size() && k < x.size(); ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t + k < x.size(); ++t) s += (x[t] - m) * (x[t + k] - m);
        r[k] = s / s0;
    }
    return r;
}

/// corr(x_t, y_{t+lag}) for lag = -L..L, element L is lag 0. A positive peak
/// lag means y follows x.
inline std::vector<double> cross_correlation(std::span<const double> x, std::span<const double> y, int max_lag) {
    if (x.size() != y.size()) throw std::invalid_argument("cross_correlation: length mismatch");
    if (max_lag < 0) throw std::invalid_argument("cross_correlation: negative lag");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, syy = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        sxx += (x[t] - mx) * (x[t] - mx);
        syy += (y[t] - my) * (y[t] - my);
    }
    if (!(sxx > 0.0 && syy > 0.0)) throw std::domain_error("cross_correlation: zero variance");
    const double den = std::sqrt(sxx) * std::sqrt(syy);
    const auto n = static_cast<long>(x.size());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2 * max_lag + 1));
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        double s = 0.0;
        for (long t = std::max(0L, -lag); t < n && t + lag < n; ++t)
            s += (x[static_cast<std::size_t>(t)] - mx) * (y[static_cast<std::size_t>(t + lag)] - my);
        out.push_back(s / den);
    }
    return out;
}

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double p_value = 1.0;   // two-sided, H0: slope = 0
    double r2 = 0.0;
    std::size_t n = 0;
};

inline OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("ols_fit: length mismatch");
    if (x.size() < 3) throw std::invalid_argument("ols_fit: needs at least 3 points");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (!(sxx > 0.0)) throw std::domain_error("ols_fit: x has zero variance");
    OlsFit f;
    f.n = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double sse = std::max(syy - f.slope * sxy, 0.0);
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    const double dof = static_cast<double>(x.size()) - 2.0;
    const double se = std::sqrt(sse / dof / sxx);
    if (se == 0.0) {
        f.p_value = f.slope == 0.0 ? 1.0 : 0.0;
    } else {
        const boost::math::students_t t(dof);
        f.p_value = 2.0 * boost::math::cdf(boost::math::complement(t, std::abs(f.slope / se)));
    }
    return f;
}

struct TTest {
    double t = 0.0;
    double dof = 0.0;
    double p_value = 1.0;  // two-sided
};

/// Welch two-sample t-test of mean(a) - mean(b).
inline TTest welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test: each sample needs 2+ values");
    const double va = stddev(a) * stddev(a) / static_cast<double>(a.size());
    const double vb = stddev(b) * stddev(b) / static_cast<double>(b.size());
    TTest r;
    const double diff = mean(a) - mean(b);
    if (va + vb == 0.0) {
        r.t = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
        r.dof = static_cast<double>(a.size() + b.size() - 2);
        r.p_value = diff == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.dof = (va + vb) * (va + vb) /
            (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    const boost::math::students_t dist(r.dof);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

}  // namespace abm::analytics
