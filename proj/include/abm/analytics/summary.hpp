#pragma once

// Per-run statistics and cross-run scenario tables (macro and micro rows).

#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "../trace.hpp"
#include "indices.hpp"
#include "timeseries.hpp"

namespace abm::analytics {

inline constexpr const char* kMacroRows[] = {"real_gdp_growth", "unemployment", "inflation", "wage_inflation",
                                             "credit_rate", "debt_ratio", "profit_share", "wage_share", "gini",
                                             "crises"};
inline constexpr const char* kMicroRows[] = {"hpi_c", "hpi_k", "hpi_b", "hhi_c", "hhi_k",
                                             "hhi_b", "br_c", "br_k", "br_b", "debtrank"};

struct Populations {
    double cfirms = 200, kfirms = 50, banks = 10;
};

/// Named series derived from one run's recorded window. Annual rates are
/// log differences over `steps_per_year` periods.
struct RunSeries {
    std::vector<std::string> names;
    std::vector<std::vector<double>> series;

    const std::vector<double>& at(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return series[k];
        throw std::out_of_range("no series named '" + name + "'");
    }
};

inline RunSeries derive_series(const Trace& tr, int steps_per_year = 4, const Populations& pop = {},
                               double crisis_threshold = -0.03) {
    const auto w = tr.window();
    if (w.size() < static_cast<std::size_t>(steps_per_year) + 2)
        throw std::invalid_argument("derive_series: recorded window shorter than a year plus one period");
    auto col = [&](double PeriodRecord::*f) {
        std::vector<double> v;
        v.reserve(w.size());
        for (const auto& r : w) v.push_back(r.*f);
        return v;
    };
    auto annual = [&](const char* what, double PeriodRecord::*f) {
        try {
            return growth_rate(col(f), steps_per_year);
        } catch (const std::domain_error& e) {
            throw std::domain_error(std::string("derive_series: ") + what + ": " + e.what());
        }
    };
    RunSeries s;
    auto add = [&](const char* n, std::vector<double> v) {
        s.names.emplace_back(n);
        s.series.push_back(std::move(v));
    };
    const auto gdp_growth = annual("real GDP", &PeriodRecord::real_gdp);
    const auto crises = crisis_flags(gdp_growth, crisis_threshold);
    std::vector<double> crisis01(crises.flags.begin(), crises.flags.end());

    add("real_gdp_growth", gdp_growth);
    add("unemployment", col(&PeriodRecord::unemployment));
    add("inflation", annual("consumer price index", &PeriodRecord::cpi));
    add("wage_inflation", annual("average wage", &PeriodRecord::avg_wage));
    add("credit_rate", annual("debt", &PeriodRecord::debt));
    add("debt_ratio", col(&PeriodRecord::debt_ratio));
    add("profit_share", col(&PeriodRecord::profit_share));
    add("wage_share", col(&PeriodRecord::wage_share));
    add("gini", col(&PeriodRecord::gini));
    add("crises", crisis01);
    add("hpi_c", col(&PeriodRecord::hpi_c));
    add("hpi_k", col(&PeriodRecord::hpi_k));
    add("hpi_b", col(&PeriodRecord::hpi_b));
    add("hhi_c", col(&PeriodRecord::hhi_c));
    add("hhi_k", col(&PeriodRecord::hhi_k));
    add("hhi_b", col(&PeriodRecord::hhi_b));
    add("br_c", bankruptcy_rate(col(&PeriodRecord::bankrupt_c), pop.cfirms, steps_per_year));
    add("br_k", bankruptcy_rate(col(&PeriodRecord::bankrupt_k), pop.kfirms, steps_per_year));
    add("br_b", bankruptcy_rate(col(&PeriodRecord::bankrupt_b), pop.banks, steps_per_year));
    add("debtrank", col(&PeriodRecord::debtrank));
    add("productivity_growth", annual("average productivity", &PeriodRecord::avg_productivity));
    return s;
}

struct SummaryRow {
    std::string variable;
    double avg = 0.0, avg_se = NAN;   // mean over runs of per-run averages
    double std = 0.0, std_se = NAN;   // mean over runs of per-run standard deviations
    std::vector<double> run_avgs;
    std::vector<double> run_stds;
};

struct ScenarioSummary {
    std::string scenario;
    std::size_t runs = 0;
    std::vector<SummaryRow> rows;

    const SummaryRow& row(const std::string& v) const {
        for (const auto& r : rows)
            if (r.variable == v) return r;
        throw std::out_of_range("summary has no row '" + v + "'");
    }
};

/// Standard errors are the dispersion of the per-run values across runs
/// (population form) over sqrt(runs); undefined (NaN) for one run.
inline ScenarioSummary summarize_scenario(std::span<const Trace> traces, int steps_per_year = 4,
                                          const Populations& pop = {}) {
    if (traces.empty()) throw std::invalid_argument("summarize_scenario: no traces");
    ScenarioSummary out;
    out.scenario = traces.front().scenario;
    out.runs = traces.size();
    std::vector<RunSeries> all;
    all.reserve(traces.size());
    for (const auto& t : traces) all.push_back(derive_series(t, steps_per_year, pop));
    for (const auto& name : all.front().names) {
        SummaryRow row;
        row.variable = name;
        for (const auto& rs : all) {
            const auto& v = rs.at(name);
            row.run_avgs.push_back(mean(v));
            row.run_stds.push_back(v.size() >= 2 ? stddev(v) : 0.0);
        }
        row.avg = mean(row.run_avgs);
        row.std = mean(row.run_stds);
        if (row.run_avgs.size() >= 2) {
            const double rn = std::sqrt(static_cast<double>(row.run_avgs.size()));
            row.avg_se = pstddev(row.run_avgs) / rn;
            row.std_se = pstddev(row.run_stds) / rn;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

/// One block per scenario: variable,avg,avg_se,std,std_se,runs.
inline void write_summary_csv(std::ostream& os, std::span<const ScenarioSummary> sums, bool micro) {
    os << "scenario,variable,avg,avg_se,std,std_se,runs\n";
    for (const auto& s : sums) {
        auto emit = [&](const char* v) {
            const auto& r = s.row(v);
            os << s.scenario << ',' << v << ',' << fmt(r.avg) << ',' << fmt(r.avg_se) << ',' << fmt(r.std) << ','
               << fmt(r.std_se) << ',' << s.runs << '\n';
        };
        if (micro)
            for (const char* v : kMicroRows) emit(v);
        else
            for (const char* v : kMacroRows) emit(v);
    }
}

}  // namespace abm::analytics
