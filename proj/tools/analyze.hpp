#pragma once

// Trace analysis behind `abm analyze`: tables, fitted statistics and figures.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "abm/analytics/distributions.hpp"
#include "abm/analytics/summary.hpp"
#include "abm/analytics/timeseries.hpp"
#include "abm/plot.hpp"
#include "abm/trace.hpp"

namespace abm::tools {

namespace fs = std::filesystem;
namespace an = abm::analytics;

struct AnalyzeOptions {
    std::string out_dir = "analysis";
    int steps_per_year = 4;
    int max_lag = 20;
    double hp_lambda = 1600.0;
    bool per_run_standardize = false;
    std::string empirical_csv;            // date,value
    std::vector<std::string> agent_files; // snapshot CSVs
};

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return NAN;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct BandSeries {
    std::vector<double> median, lo, hi;
};

/// Per-index median and 95% interval over rows of equal length.
inline BandSeries band_of(const std::vector<std::vector<double>>& rows) {
    BandSeries b;
    if (rows.empty()) return b;
    const std::size_t n = rows.front().size();
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> col;
        for (const auto& r : rows)
            if (k < r.size()) col.push_back(r[k]);
        b.median.push_back(quantile(col, 0.5));
        b.lo.push_back(quantile(col, 0.025));
        b.hi.push_back(quantile(col, 0.975));
    }
    return b;
}

inline std::vector<double> column(const std::vector<PeriodRecord>& w, double PeriodRecord::*f) {
    std::vector<double> v;
    v.reserve(w.size());
    for (const auto& r : w) v.push_back(r.*f);
    return v;
}

/// HP cycle of the log series; empty when the series is not strictly positive.
inline std::vector<double> log_cycle(const std::vector<double>& x, double lambda) {
    std::vector<double> l;
    l.reserve(x.size());
    for (double v : x) {
        if (!(v > 0.0)) return {};
        l.push_back(std::log(v));
    }
    if (l.size() < 4) return {};
    return an::hp_filter(l, lambda).cycle;
}

/// Runs of at least two consecutive negative quarterly growth rates, as x-spans.
inline std::vector<std::pair<double, double>> recession_spans(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<std::pair<double, double>> spans;
    std::size_t k = 1;
    while (k < y.size()) {
        if (y[k] < y[k - 1]) {
            std::size_t e = k;
            while (e + 1 < y.size() && y[e + 1] < y[e]) ++e;
            if (e - k + 1 >= 2) spans.emplace_back(t[k - 1], t[e]);
            k = e + 1;
        } else {
            ++k;
        }
    }
    return spans;
}

inline std::vector<double> read_empirical(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read empirical series " + path);
    std::string line;
    std::getline(is, line);
    std::vector<double> v;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = split_csv(line);
        if (c.size() < 2) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected date,value");
        v.push_back(parse_double(c[1], path + ":" + std::to_string(lineno)));
    }
    return v;
}

inline void write_band_csv(const std::string& path, int first_lag, const BandSeries& b,
                           const std::vector<double>& empirical = {}) {
    std::ofstream os(path);
    os << "lag,median,lo95,hi95" << (empirical.empty() ? "" : ",empirical") << '\n';
    for (std::size_t k = 0; k < b.median.size(); ++k) {
        os << first_lag + static_cast<int>(k) << ',' << fmt(b.median[k]) << ',' << fmt(b.lo[k]) << ',' << fmt(b.hi[k]);
        if (!empirical.empty()) os << ',' << (k < empirical.size() ? fmt(empirical[k]) : "");
        os << '\n';
    }
}

inline plot::Figure band_figure(const std::string& title, const std::string& xl, const std::string& yl, int first,
                                const BandSeries& b, const std::vector<double>& empirical = {}) {
    plot::Figure f;
    f.title = title;
    f.xlabel = xl;
    f.ylabel = yl;
    std::vector<double> x;
    for (std::size_t k = 0; k < b.median.size(); ++k) x.push_back(first + static_cast<double>(k));
    f.bands.push_back({x, b.lo, b.hi, "#1f77b4"});
    f.lines.push_back({x, b.median, "#1f77b4", false, false, false, "median"});
    if (!empirical.empty()) f.lines.push_back({x, empirical, "black", true, false, false, "empirical"});
    return f;
}

struct AgentPools {
    std::vector<double> c_output, k_output, household_wealth, bank_loans;
};

inline AgentPools read_agent_pools(const std::vector<std::string>& files) {
    AgentPools p;
    for (const auto& path : files) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot read agent snapshot " + path);
        std::string line;
        std::getline(is, line);
        int lineno = 1;
        while (std::getline(is, line)) {
            ++lineno;
            const auto c = split_csv(line);
            if (c.size() < 8 || c[1].empty()) continue;
            const std::string where = path + ":" + std::to_string(lineno);
            switch (c[1][0]) {
            case 'C': p.c_output.push_back(parse_double(c[3], where)); break;
            case 'K': p.k_output.push_back(parse_double(c[3], where)); break;
            case 'B': p.bank_loans.push_back(parse_double(c[3], where)); break;
            case 'H': p.household_wealth.push_back(parse_double(c[7], where)); break;
            default: break;
            }
        }
    }
    return p;
}

/// Writes tables, statistics and SVG figures for traces grouped by scenario.
/// Returns a short text report.
inline std::string analyze(const std::vector<Trace>& traces, const AnalyzeOptions& opt) {
    if (traces.empty()) throw std::invalid_argument("analyze: no traces");
    fs::create_directories(opt.out_dir);
    const auto path = [&](const std::string& name) { return (fs::path(opt.out_dir) / name).string(); };
    const int spy = opt.steps_per_year;
    std::ostringstream report;

    std::map<std::string, std::vector<Trace>> by;
    for (const auto& t : traces) by[t.scenario].push_back(t);

    std::vector<an::ScenarioSummary> sums;
    for (const auto& [name, ts] : by) sums.push_back(an::summarize_scenario(ts, spy));
    {
        std::ofstream os(path("summary_macro.csv"));
        an::write_summary_csv(os, sums, false);
    }
    {
        std::ofstream os(path("summary_micro.csv"));
        an::write_summary_csv(os, sums, true);
    }

    std::vector<double> empirical_acf;
    if (!opt.empirical_csv.empty()) {
        const auto emp = read_empirical(opt.empirical_csv);
        const auto cyc = log_cycle(emp, opt.hp_lambda);
        if (cyc.empty()) throw std::runtime_error("empirical series must be positive with at least 4 points");
        empirical_acf = an::autocorrelation(cyc, opt.max_lag);
    }

    std::ofstream stats(path("statistics.csv"));
    stats << "scenario,statistic,value\n";
    auto stat = [&](const std::string& sc, const std::string& k, double v) {
        stats << sc << ',' << k << ',' << fmt(v) << '\n';
    };

    for (const auto& [name, ts] : by) {
        const std::string pre = name + "_";
        report << "scenario " << name << " (" << ts.size() << " runs)\n";

        // time series of the first run with recession shading
        {
            const auto w = ts.front().window();
            const auto t = column(w, &PeriodRecord::t);
            std::vector<double> years;
            for (double v : t) years.push_back(v / spy);
            const auto gdp = column(w, &PeriodRecord::real_gdp);
            std::vector<double> lg;
            for (double v : gdp) lg.push_back(v > 0 ? std::log(v) : NAN);
            plot::Figure f;
            f.title = "Real output, " + name;
            f.xlabel = "Years";
            f.ylabel = "log real GDP";
            f.spans = recession_spans(years, gdp);
            f.lines.push_back({years, lg, "#1f77b4", false, false, false, ""});
            plot::save_svg(path(pre + "real_gdp.svg"), f);

            plot::Figure r;
            r.title = "Rates, " + name;
            r.xlabel = "Years";
            r.ylabel = "Rate";
            const auto rs = an::derive_series(ts.front(), spy);
            std::vector<double> ya(years.begin() + spy, years.end());
            r.lines.push_back({years, column(w, &PeriodRecord::unemployment), "#d62728", false, false, false, "unemployment"});
            r.lines.push_back({ya, rs.at("inflation"), "#2ca02c", false, false, false, "inflation"});
            r.lines.push_back({ya, rs.at("wage_inflation"), "#9467bd", true, false, false, "wage inflation"});
            plot::save_svg(path(pre + "rates.svg"), r);

            plot::Figure s;
            s.title = "Debt ratio and wage share, " + name;
            s.xlabel = "Years";
            s.ylabel = "Ratio";
            s.lines.push_back({years, column(w, &PeriodRecord::debt_ratio), "black", false, false, false, "debt ratio"});
            s.lines.push_back({years, column(w, &PeriodRecord::wage_share), "#ff7f0e", true, false, false, "wage share"});
            plot::save_svg(path(pre + "shares.svg"), s);
        }

        // Phillips, Okun and credit relationships (annual rates pooled over runs)
        std::vector<double> u, winf, gy, du, cr;
        std::vector<double> pool_growth;
        std::vector<double> c_growth_sd, i_growth_sd;
        for (const auto& tr : ts) {
            const auto rs = an::derive_series(tr, spy);
            const auto w = tr.window();
            const auto un = column(w, &PeriodRecord::unemployment);
            const auto& g = rs.at("real_gdp_growth");
            const auto& wi = rs.at("wage_inflation");
            const auto& c = rs.at("credit_rate");
            for (std::size_t k = 0; k < g.size(); ++k) {
                const std::size_t t = k + static_cast<std::size_t>(spy);
                u.push_back(un[t]);
                winf.push_back(wi[k]);
                gy.push_back(g[k]);
                du.push_back(un[t] - un[t - static_cast<std::size_t>(spy)]);
                cr.push_back(c[k]);
            }
            std::vector<double> gz = g;
            if (opt.per_run_standardize && gz.size() >= 2) {
                const double m = an::mean(gz), sd = an::stddev(gz);
                for (double& v : gz) v = sd > 0 ? (v - m) / sd : 0.0;
            }
            pool_growth.insert(pool_growth.end(), gz.begin(), gz.end());
            const auto rc = column(w, &PeriodRecord::real_consumption);
            const auto ri = column(w, &PeriodRecord::real_investment);
            try {
                c_growth_sd.push_back(an::stddev(an::growth_rate(rc, spy)));
                i_growth_sd.push_back(an::stddev(an::growth_rate(ri, spy)));
            } catch (const std::exception&) {
            }
        }
        auto scatter = [&](const std::string& key, const std::string& title, const std::string& xl,
                           const std::string& yl, const std::vector<double>& x, const std::vector<double>& y) {
            plot::Figure f;
            f.title = title + ", " + name;
            f.xlabel = xl;
            f.ylabel = yl;
            f.lines.push_back({x, y, "#1f77b4", false, false, true, ""});
            try {
                const auto fit = an::ols_fit(x, y);
                const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
                f.lines.push_back({{*mn, *mx},
                                   {fit.intercept + fit.slope * *mn, fit.intercept + fit.slope * *mx},
                                   "#d62728", false, false, false,
                                   "slope " + plot::detail::num(fit.slope) + ", p " + plot::detail::num(fit.p_value)});
                stat(name, key + "_slope", fit.slope);
                stat(name, key + "_p", fit.p_value);
                report << "  " << key << " slope " << fit.slope << " (p=" << fit.p_value << ")\n";
            } catch (const std::exception& e) {
                report << "  " << key << ": " << e.what() << "\n";
            }
            plot::save_svg(path(pre + key + ".svg"), f);
        };
        scatter("phillips", "Phillips curve", "Unemployment", "Wage inflation", u, winf);
        scatter("okun", "Okun curve", "Real GDP growth", "Change in unemployment", gy, du);
        scatter("credit", "Credit and output", "Real GDP growth", "Credit growth", gy, cr);

        if (!c_growth_sd.empty()) {
            stat(name, "consumption_growth_sd", an::mean(c_growth_sd));
            stat(name, "investment_growth_sd", an::mean(i_growth_sd));
        }

        // ACF of the HP cycles, CCF of components against GDP
        std::map<std::string, std::vector<std::vector<double>>> acf, ccf;
        const std::pair<const char*, double PeriodRecord::*> comps[] = {
            {"gdp", &PeriodRecord::real_gdp},
            {"consumption", &PeriodRecord::real_consumption},
            {"investment", &PeriodRecord::real_investment},
            {"unemployment", &PeriodRecord::unemployment},
        };
        for (const auto& tr : ts) {
            const auto w = tr.window();
            const auto gc = log_cycle(column(w, &PeriodRecord::real_gdp), opt.hp_lambda);
            if (gc.empty()) continue;
            for (const auto& [cname, field] : comps) {
                const auto cyc = std::string(cname) == "unemployment"
                                     ? an::hp_filter(column(w, field), opt.hp_lambda).cycle
                                     : log_cycle(column(w, field), opt.hp_lambda);
                if (cyc.empty()) continue;
                try {
                    acf[cname].push_back(an::autocorrelation(cyc, opt.max_lag));
                    ccf[cname].push_back(an::cross_correlation(gc, cyc, opt.max_lag));
                } catch (const std::exception&) {
                }
            }
        }
        for (const auto& [cname, rows] : acf) {
            const auto b = band_of(rows);
            const auto& emp = cname == "gdp" ? empirical_acf : std::vector<double>{};
            write_band_csv(path(pre + "acf_" + cname + ".csv"), 0, b, emp);
            plot::save_svg(path(pre + "acf_" + cname + ".svg"),
                           band_figure("Autocorrelation, " + cname + ", " + name, "Lag", "ACF", 0, b, emp));
        }
        for (const auto& [cname, rows] : ccf) {
            const auto b = band_of(rows);
            write_band_csv(path(pre + "ccf_" + cname + ".csv"), -opt.max_lag, b);
            plot::save_svg(path(pre + "ccf_" + cname + ".svg"),
                           band_figure("Cross-correlation with GDP, " + cname + ", " + name, "Lag", "CCF",
                                       -opt.max_lag, b));
        }

        // growth-rate distribution
        if (pool_growth.size() >= 8) {
            // pooled standardisation is affine, so beta is unchanged and only
            // alpha is rescaled (reported separately)
            const std::vector<double>& pool = pool_growth;
            try {
                const auto ep = an::fit_subbotin(pool);
                const auto lap = an::fit_subbotin(pool, 1.0);
                const auto nor = an::fit_subbotin(pool, 2.0);
                const auto ks = an::ks_normality(pool);
                stat(name, "subbotin_beta", ep.beta);
                stat(name, "subbotin_alpha", ep.alpha);
                stat(name, "subbotin_mu", ep.mu);
                stat(name, "subbotin_alpha_standardized", ep.alpha / an::stddev(pool));
                stat(name, "laplace_alpha", lap.alpha);
                stat(name, "normal_alpha", nor.alpha);
                stat(name, "ks_statistic", ks.statistic);
                stat(name, "ks_p", ks.p_value);
                report << "  growth distribution: beta=" << ep.beta << " alpha=" << ep.alpha << " mu=" << ep.mu
                       << " KS p=" << ks.p_value << "\n";

                const auto [mn, mx] = std::minmax_element(pool.begin(), pool.end());
                const int bins = 40;
                const double wdt = (*mx - *mn) / bins;
                std::vector<double> hx, hy;
                if (wdt > 0) {
                    std::vector<double> cnt(bins, 0.0);
                    for (double v : pool) cnt[std::min(bins - 1, static_cast<int>((v - *mn) / wdt))] += 1.0;
                    for (int k = 0; k < bins; ++k) {
                        hx.push_back(*mn + (k + 0.5) * wdt);
                        hy.push_back(cnt[static_cast<std::size_t>(k)] / (static_cast<double>(pool.size()) * wdt));
                    }
                }
                plot::Figure f;
                f.title = "Real GDP growth distribution, " + name;
                f.xlabel = "Growth rate";
                f.ylabel = "Density";
                f.logy = true;
                f.lines.push_back({hx, hy, "black", false, false, true, ""});
                auto curve = [&](const an::SubbotinFit& fit, bool dashed, bool dotted, const std::string& label,
                                 const std::string& colour) {
                    std::vector<double> x, y;
                    for (int k = 0; k <= 200; ++k) {
                        const double v = *mn + (*mx - *mn) * k / 200.0;
                        x.push_back(v);
                        y.push_back(std::exp(an::subbotin_log_density(v, fit.beta, fit.alpha, fit.mu)));
                    }
                    f.lines.push_back({x, y, colour, dashed, dotted, false, label});
                };
                curve(ep, false, false, "Subbotin b=" + plot::detail::num(ep.beta), "#d62728");
                curve(lap, true, false, "Laplace", "#1f77b4");
                curve(nor, false, true, "Normal", "#2ca02c");
                plot::save_svg(path(pre + "growth_distribution.svg"), f);
            } catch (const std::exception& e) {
                report << "  growth distribution: " << e.what() << "\n";
            }
        }

        // DebtRank over time
        {
            std::vector<std::vector<double>> rows;
            for (const auto& tr : ts) rows.push_back(column(tr.window(), &PeriodRecord::debtrank));
            const auto b = band_of(rows);
            write_band_csv(path(pre + "debtrank.csv"), 0, b);
            auto f = band_figure("DebtRank, " + name, "Period", "DebtRank", 0, b);
            plot::save_svg(path(pre + "debtrank.svg"), f);
        }
    }

    if (!opt.agent_files.empty()) {
        const auto pools = read_agent_pools(opt.agent_files);
        const std::pair<const char*, const std::vector<double>*> sets[] = {
            {"cfirm_output", &pools.c_output},
            {"kfirm_output", &pools.k_output},
            {"household_wealth", &pools.household_wealth},
            {"bank_loans", &pools.bank_loans},
        };
        for (const auto& [key, data] : sets) {
            std::vector<double> pos;
            for (double v : *data)
                if (v > 0) pos.push_back(v);
            try {
                const auto tf = an::fit_tail(pos);
                stat("agents", std::string(key) + "_powerlaw_exponent", tf.exponent);
                stat("agents", std::string(key) + "_xmin", tf.x_min);
                stat("agents", std::string(key) + "_lognormal_mu", tf.lognormal_mu);
                stat("agents", std::string(key) + "_lognormal_sigma", tf.lognormal_sigma);
                stat("agents", std::string(key) + "_powerlaw_tail_ll", tf.powerlaw_tail_ll);
                stat("agents", std::string(key) + "_lognormal_tail_ll", tf.lognormal_tail_ll);
                plot::Figure f;
                f.title = std::string("CCDF, ") + key;
                f.xlabel = "Value";
                f.ylabel = "P(X >= x)";
                f.logx = f.logy = true;
                std::vector<double> x, y, px, py;
                for (const auto& [a, b] : tf.ccdf) {
                    x.push_back(a);
                    y.push_back(b);
                }
                const double frac = static_cast<double>(tf.n_tail) / static_cast<double>(pos.size());
                for (double v : x)
                    if (v >= tf.x_min) {
                        px.push_back(v);
                        py.push_back(frac * std::pow(v / tf.x_min, 1.0 - tf.exponent));
                    }
                f.lines.push_back({x, y, "black", false, false, true, ""});
                f.lines.push_back({px, py, "#2ca02c", false, false, false, "power law"});
                plot::save_svg(path(std::string("ccdf_") + key + ".svg"), f);
                report << "  " << key << ": power-law exponent " << tf.exponent << " above " << tf.x_min << "\n";
            } catch (const std::exception& e) {
                report << "  " << key << ": tail fit refused (" << e.what() << ")\n";
            }
        }
    }
    return report.str();
}

}  // namespace abm::tools
