#pragma once

// Simulation trace: one record per period plus optional agent snapshots,
// with CSV serialisation. Numbers are written in shortest round-trip form so
// identical runs give identical bytes.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "debtrank.hpp"

namespace abm {

inline constexpr int kTraceSchemaVersion = 1;

struct PeriodRecord {
    double t = 0;
    double nominal_gdp = 0, real_gdp = 0, consumption = 0, investment = 0;
    double real_consumption = 0, real_investment = 0;
    double cpi = 0, kpi = 0, avg_wage = 0, wage_bill = 0, avg_productivity = 0;
    double employment = 0, unemployment = 0;
    double debt = 0, new_credit = 0, credit_demand = 0, deposits = 0;
    double profits_c = 0, profits_k = 0, profits_b = 0;
    double wage_share = 0, profit_share = 0, debt_ratio = 0;
    double gini = 0;
    double hpi_c = 0, hpi_k = 0, hpi_b = 0;
    double hhi_c = 0, hhi_k = 0, hhi_b = 0;
    double bankrupt_c = 0, bankrupt_k = 0, bankrupt_b = 0;
    double debtrank = 0, debtrank_b = 0, debtrank_f = 0;
    double sfc_residual = 0;
};

struct TraceColumn {
    const char* name;
    double PeriodRecord::*field;
};

inline constexpr std::array<TraceColumn, 38> kTraceColumns = {{
    {"t", &PeriodRecord::t},
    {"nominal_gdp", &PeriodRecord::nominal_gdp},
    {"real_gdp", &PeriodRecord::real_gdp},
    {"consumption", &PeriodRecord::consumption},
    {"investment", &PeriodRecord::investment},
    {"real_consumption", &PeriodRecord::real_consumption},
    {"real_investment", &PeriodRecord::real_investment},
    {"cpi", &PeriodRecord::cpi},
    {"kpi", &PeriodRecord::kpi},
    {"avg_wage", &PeriodRecord::avg_wage},
    {"wage_bill", &PeriodRecord::wage_bill},
    {"avg_productivity", &PeriodRecord::avg_productivity},
    {"employment", &PeriodRecord::employment},
    {"unemployment", &PeriodRecord::unemployment},
    {"debt", &PeriodRecord::debt},
    {"new_credit", &PeriodRecord::new_credit},
    {"credit_demand", &PeriodRecord::credit_demand},
    {"deposits", &PeriodRecord::deposits},
    {"profits_c", &PeriodRecord::profits_c},
    {"profits_k", &PeriodRecord::profits_k},
    {"profits_b", &PeriodRecord::profits_b},
    {"wage_share", &PeriodRecord::wage_share},
    {"profit_share", &PeriodRecord::profit_share},
    {"debt_ratio", &PeriodRecord::debt_ratio},
    {"gini", &PeriodRecord::gini},
    {"hpi_c", &PeriodRecord::hpi_c},
    {"hpi_k", &PeriodRecord::hpi_k},
    {"hpi_b", &PeriodRecord::hpi_b},
    {"hhi_c", &PeriodRecord::hhi_c},
    {"hhi_k", &PeriodRecord::hhi_k},
    {"hhi_b", &PeriodRecord::hhi_b},
    {"bankrupt_c", &PeriodRecord::bankrupt_c},
    {"bankrupt_k", &PeriodRecord::bankrupt_k},
    {"bankrupt_b", &PeriodRecord::bankrupt_b},
    {"debtrank", &PeriodRecord::debtrank},
    {"debtrank_b", &PeriodRecord::debtrank_b},
    {"debtrank_f", &PeriodRecord::debtrank_f},
    {"sfc_residual", &PeriodRecord::sfc_residual},
}};

struct FirmRow {
    char cls = 'C';        // 'C' or 'K'
    int id = 0;
    double output = 0, price = 0, wage = 0, workers = 0, deposits = 0, debt = 0, equity = 0, capital = 0, leverage = 0;
    int loans = 0;
};

struct BankRow {
    int id = 0;
    double loans = 0, deposits = 0, reserves = 0, advances = 0, equity = 0, rate = 0;
};

struct Snapshot {
    std::int64_t t = 0;
    std::vector<FirmRow> firms;
    std::vector<BankRow> banks;
    std::vector<double> household_wealth;
    CreditNetwork network;
};

struct Trace {
    std::string scenario;
    std::uint64_t seed = 0;
    int burn_in = 0;                    // first `burn_in` records are transient
    std::vector<PeriodRecord> records;  // includes burn-in only when requested
    bool includes_burn_in = false;
    std::vector<Snapshot> snapshots;

    /// Records in the recorded (post burn-in) window.
    std::vector<PeriodRecord> window() const {
        if (!includes_burn_in) return records;
        const auto skip = std::min<std::size_t>(static_cast<std::size_t>(burn_in), records.size());
        return {records.begin() + static_cast<std::ptrdiff_t>(skip), records.end()};
    }
};

// ------------------------------------------------------------------- numbers

inline std::string fmt(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto* b = s.data();
    const auto* e = s.data() + s.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) {
        // from_chars rejects inf/nan spellings written by other tools
        if (s == "inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        if (s == "nan") return NAN;
        throw std::runtime_error(where + ": cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().remove_suffix(1);
    return out;
}

// --------------------------------------------------------------- trace CSVs

inline void write_trace_csv(std::ostream& os, const Trace& tr) {
    os << "# abm-trace schema=" << kTraceSchemaVersion << " scenario=" << tr.scenario << " seed=" << tr.seed
       << " burn_in=" << tr.burn_in << " includes_burn_in=" << (tr.includes_burn_in ? 1 : 0) << '\n';
    bool first = true;
    for (const auto& c : kTraceColumns) {
        os << (first ? "" : ",") << c.name;
        first = false;
    }
    os << '\n';
    for (const auto& r : tr.records) {
        first = true;
        for (const auto& c : kTraceColumns) {
            os << (first ? "" : ",") << fmt(r.*(c.field));
            first = false;
        }
        os << '\n';
    }
}

inline Trace read_trace_csv(std::istream& is, const std::string& origin) {
    Trace tr;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error(origin + ": empty trace file");
    if (line.rfind("# abm-trace", 0) != 0) throw std::runtime_error(origin + ": missing trace header");
    {
        std::istringstream hs(line.substr(11));
        std::string tok;
        int schema = -1;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "schema") schema = std::stoi(v);
            else if (k == "scenario") tr.scenario = v;
            else if (k == "seed") tr.seed = std::stoull(v);
            else if (k == "burn_in") tr.burn_in = std::stoi(v);
            else if (k == "includes_burn_in") tr.includes_burn_in = v == "1";
        }
        if (schema != kTraceSchemaVersion)
            throw std::runtime_error(origin + ": unsupported trace schema " + std::to_string(schema));
    }
    if (!std::getline(is, line)) throw std::runtime_error(origin + ": missing column header");
    const auto names = split_csv(line);
    std::vector<double PeriodRecord::*> fields;
    for (auto n : names) {
        double PeriodRecord::*f = nullptr;
        for (const auto& c : kTraceColumns)
            if (n == c.name) f = c.field;
        fields.push_back(f);  // unknown columns are skipped
    }
    for (const auto& c : kTraceColumns) {
        bool found = false;
        for (auto n : names) found = found || n == c.name;
        if (!found) throw std::runtime_error(origin + ": missing column '" + c.name + "'");
    }
    int lineno = 2;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != fields.size())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(fields.size()) + " cells");
        PeriodRecord r;
        for (std::size_t k = 0; k < cells.size(); ++k)
            if (fields[k]) r.*(fields[k]) = parse_double(cells[k], origin + ":" + std::to_string(lineno));
        tr.records.push_back(r);
    }
    return tr;
}

inline void write_trace_file(const std::string& path, const Trace& tr) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_trace_csv(os, tr);
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline Trace read_trace_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_trace_csv(is, path);
}

// ----------------------------------------------------------- snapshot CSVs

inline void write_agents_csv(std::ostream& os, const Snapshot& s) {
    os << "t,class,id,output,price,wage,workers,deposits,debt,equity,capital,leverage,loans\n";
    for (const auto& f : s.firms)
        os << s.t << ',' << f.cls << ',' << f.id << ',' << fmt(f.output) << ',' << fmt(f.price) << ',' << fmt(f.wage)
           << ',' << fmt(f.workers) << ',' << fmt(f.deposits) << ',' << fmt(f.debt) << ',' << fmt(f.equity) << ','
           << fmt(f.capital) << ',' << fmt(f.leverage) << ',' << f.loans << '\n';
    for (const auto& b : s.banks)
        os << s.t << ",B," << b.id << ',' << fmt(b.loans) << ",,,," << fmt(b.deposits) << ",," << fmt(b.equity)
           << ",,," << '\n';
    for (std::size_t h = 0; h < s.household_wealth.size(); ++h)
        os << s.t << ",H," << h << ",,,,," << fmt(s.household_wealth[h]) << ",,,,,\n";
}

/// Edge list: bank_id,firm_id,outstanding (firm ids are global slots).
inline void write_edges_csv(std::ostream& os, const CreditNetwork& net) {
    os << "bank_id,firm_id,outstanding\n";
    for (int b = 0; b < net.n_banks; ++b)
        for (int f = 0; f < net.n_firms; ++f)
            if (net.at(b, f) > 0.0) os << b << ',' << f << ',' << fmt(net.at(b, f)) << '\n';
}

/// Node list: kind (B, C or K),id,assets.
inline void write_nodes_csv(std::ostream& os, const CreditNetwork& net) {
    os << "kind,id,assets\n";
    for (int b = 0; b < net.n_banks; ++b) os << "B," << b << ',' << fmt(net.bank_assets[static_cast<std::size_t>(b)]) << '\n';
    for (int f = 0; f < net.n_firms; ++f)
        os << (net.firm_is_c[static_cast<std::size_t>(f)] ? 'C' : 'K') << ',' << f << ','
           << fmt(net.firm_assets[static_cast<std::size_t>(f)]) << '\n';
}

/// Builds a network from an edge list and an optional node list. Without
/// nodes every node gets unit assets and firms count as C-firms.
inline CreditNetwork read_network(std::istream& edges, std::istream* nodes, const std::string& origin) {
    struct Edge {
        int b, f;
        double v;
    };
    std::vector<Edge> es;
    std::string line;
    if (!std::getline(edges, line)) throw std::runtime_error(origin + ": empty edge list");
    int max_b = -1, max_f = -1, lineno = 1;
    while (std::getline(edges, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto c = split_csv(line);
        if (c.size() != 3) throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected bank_id,firm_id,outstanding");
        const std::string where = origin + ":" + std::to_string(lineno);
        Edge e{static_cast<int>(parse_double(c[0], where)), static_cast<int>(parse_double(c[1], where)), parse_double(c[2], where)};
        if (e.b < 0 || e.f < 0 || !(e.v >= 0.0)) throw std::runtime_error(where + ": invalid edge");
        max_b = std::max(max_b, e.b);
        max_f = std::max(max_f, e.f);
        es.push_back(e);
    }
    std::map<std::pair<char, int>, double> assets;
    if (nodes) {
        if (!std::getline(*nodes, line)) throw std::runtime_error(origin + ": empty node list");
        lineno = 1;
        while (std::getline(*nodes, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto c = split_csv(line);
            const std::string where = origin + " nodes:" + std::to_string(lineno);
            if (c.size() != 3 || c[0].size() != 1) throw std::runtime_error(where + ": expected kind,id,assets");
            const char kind = c[0][0];
            const int id = static_cast<int>(parse_double(c[1], where));
            assets[{kind, id}] = parse_double(c[2], where);
            if (kind == 'B') max_b = std::max(max_b, id);
            else max_f = std::max(max_f, id);
        }
    }
    CreditNetwork net(max_b + 1, max_f + 1);
    for (const auto& e : es) net.at(e.b, e.f) += e.v;
    for (int b = 0; b < net.n_banks; ++b) {
        auto it = assets.find({'B', b});
        net.bank_assets[static_cast<std::size_t>(b)] = nodes ? (it != assets.end() ? it->second : 0.0) : 1.0;
    }
    for (int f = 0; f < net.n_firms; ++f) {
        auto ic = assets.find({'C', f});
        auto ik = assets.find({'K', f});
        if (ik != assets.end()) {
            net.firm_is_c[static_cast<std::size_t>(f)] = false;
            net.firm_assets[static_cast<std::size_t>(f)] = ik->second;
        } else {
            net.firm_assets[static_cast<std::size_t>(f)] = nodes ? (ic != assets.end() ? ic->second : 0.0) : 1.0;
        }
    }
    return net;
}

}  // namespace abm
