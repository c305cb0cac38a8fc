#pragma once

// Exogenous parameters, scenario definitions and the flat key-value config
// format. Values in config files are given in annual units; load_config
// converts them to per-step units once, so the engine never sees annual rates.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace abm {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// How the bank turns expected bad loans into the ratio feeding CR^d.
enum class BadLoanRatio {
    ExpectedOverLoans,  // B^e / L  (risk rises with expected bad loans)
    LoansOverExpected,  // L / B^e  (literal equation text)
};

/// All model constants in per-step units.
struct Params {
    double years_T = 100.0;
    double dt = 0.25;
    int n_households = 2000;
    int n_cfirms = 200;
    int n_kfirms = 50;
    int n_banks = 10;

    int n_C = 2;           // C-firms visited per household
    int n_K = 2;           // K-firms visited per C-firm
    int n_F = 4;           // job applications per unemployed household
    int n_B_visits = 1;    // banks visited per borrowing firm

    double g = 0.005;
    double sigma_a = 0.015;
    double sigma_P = 0.015;
    double sigma_w = 0.015;
    double sigma_r = 0.015;
    double gamma_Z = 0.025;
    double gamma_P = 0.025;
    double gamma_w = 0.025;
    double gamma_r = 0.025;
    double c = 0.1;
    double nu = 3.0;
    double d0 = 0.5;
    double d1 = 3.0;
    double d2 = 2.0;
    double delta = 0.0175;
    double xi = 0.1;
    int n_repay = 40;
    double rho = 1.0 / 40.0;
    double kappa1 = 0.06;
    double kappa2 = 1.0;
    double r_M = 0.00025;
    double r_N = 0.005;

    // Implementation knobs.
    double positivity_floor = 1e-6;   // fraction of the initial value
    int default_window = 40;          // periods of default observations kept
    double cold_theta0 = -3.0;
    double cold_theta1 = 4.0;
    bool cold_start_zero_risk = false; // true: p = 0 until the first fit
    double logit_ridge = 1e-4;        // L2 penalty on the slope
    BadLoanRatio bad_loan_ratio = BadLoanRatio::ExpectedOverLoans;
    bool literal_goods_demand = false; // Z_i from E^d_h instead of remaining budget
    bool audit = true;
    double audit_tolerance = 1e-6;    // relative to nominal GDP

    int steps() const { return static_cast<int>(std::lround(years_T / dt)); }
};

struct Scenario {
    std::string name;
    double g_override = 0.02;   // annual
    double d1_override = 3.0;
    double d2_override = 2.0;
    int burn_in_steps = 200;
    int recorded_steps = 400;
    int n_mc_runs = 50;
    std::uint64_t master_seed = 42;
};

struct LoadedConfig {
    Params params;
    std::vector<Scenario> scenarios;

    const Scenario* find(const std::string& name) const {
        for (const auto& s : scenarios)
            if (s.name == name) return &s;
        return nullptr;
    }
};

/// Returns `base` with the scenario's g, d1 and d2 applied (g converted to per-step).
inline Params apply_scenario(Params base, const Scenario& s) {
    base.g = s.g_override * base.dt;
    base.d1 = s.d1_override;
    base.d2 = s.d2_override;
    return base;
}

inline void validate(const Params& p) {
    auto open_unit = [](const char* key, double v) {
        if (!(v > 0.0 && v < 1.0)) throw ConfigError(key, "must lie strictly in (0,1), got " + std::to_string(v));
    };
    auto nonneg = [](const char* key, double v) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be nonnegative, got " + std::to_string(v));
    };
    auto positive_count = [](const char* key, int v) {
        if (v < 1) throw ConfigError(key, "must be >= 1, got " + std::to_string(v));
    };
    if (!(p.dt > 0.0)) throw ConfigError("dt", "must be positive");
    const double n = p.years_T / p.dt;
    if (std::abs(n - std::round(n)) > 1e-9 || n < 1) throw ConfigError("years", "years / dt must be a positive integer");
    positive_count("households", p.n_households);
    positive_count("cfirms", p.n_cfirms);
    positive_count("kfirms", p.n_kfirms);
    positive_count("banks", p.n_banks);
    positive_count("n_C", p.n_C);
    positive_count("n_K", p.n_K);
    positive_count("n_F", p.n_F);
    positive_count("n_B", p.n_B_visits);
    positive_count("n_repay_years", p.n_repay);
    if (std::abs(p.rho * p.n_repay - 1.0) > 1e-12) throw ConfigError("n_repay_years", "rho * n must equal 1");
    open_unit("gamma_Z", p.gamma_Z);
    open_unit("gamma_P", p.gamma_P);
    open_unit("gamma_w", p.gamma_w);
    open_unit("gamma_r", p.gamma_r);
    open_unit("c", p.c);
    open_unit("xi", p.xi);
    nonneg("g", p.g);
    nonneg("sigma_a", p.sigma_a);
    nonneg("sigma_P", p.sigma_P);
    nonneg("sigma_w", p.sigma_w);
    nonneg("sigma_r", p.sigma_r);
    nonneg("delta", p.delta);
    nonneg("r_M", p.r_M);
    nonneg("r_N", p.r_N);
    nonneg("kappa1", p.kappa1);
    nonneg("kappa2", p.kappa2);
    nonneg("d0", p.d0);
    nonneg("d1", p.d1);
    nonneg("d2", p.d2);
    if (!(p.nu > 0.0)) throw ConfigError("nu", "must be positive");
    if (p.default_window < 1) throw ConfigError("default_window", "must be >= 1");
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat TOML subset: `[section]` headers, `key = value`, `#` comments,
// values are numbers, booleans or double-quoted strings.
using Table = std::map<std::string, std::map<std::string, std::string>>;

inline Table parse_tables(std::istream& in, const std::string& origin) {
    Table t;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("", origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            t[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("", origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) throw ConfigError(key, origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (val.front() == '"') {
            if (val.size() < 2 || val.back() != '"') throw ConfigError(key, "unterminated string");
            val = val.substr(1, val.size() - 2);
        }
        t[section][key] = val;
    }
    return t;
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, "not a number: '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError(key, "not a number: '" + v + "'");
    return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d)) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return static_cast<long long>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

}  // namespace detail

inline constexpr const char* kModelKeys[] = {
    "years", "dt", "households", "cfirms", "kfirms", "banks", "n_C", "n_K", "n_F", "n_B",
    "g", "sigma_a", "sigma_P", "sigma_w", "sigma_r", "gamma_Z", "gamma_P", "gamma_w", "gamma_r",
    "c", "nu", "d0", "d1", "d2", "delta", "xi", "n_repay_years", "kappa1", "kappa2", "r_M", "r_N"};

/// Parses a config document. All model keys listed in kModelKeys are required
/// in the [model] section; [run] holds batch defaults; each [scenario.<name>]
/// overrides g, d1, d2 (and optionally the run lengths and seed).
inline LoadedConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
    using namespace detail;
    Table t = parse_tables(in, origin);
    auto model_it = t.find("model");
    if (model_it == t.end()) throw ConfigError("model", "missing [model] section");
    const auto& m = model_it->second;
    for (const char* k : kModelKeys)
        if (!m.count(k)) throw ConfigError(k, "missing required key in [model]");
    for (const auto& [k, v] : m) {
        bool known = false;
        for (const char* kk : kModelKeys) known = known || k == kk;
        static const char* extra[] = {"positivity_floor", "default_window", "cold_theta0", "cold_theta1",
                                      "cold_start_zero_risk", "logit_ridge", "bad_loan_ratio",
                                      "literal_goods_demand", "audit", "audit_tolerance"};
        for (const char* kk : extra) known = known || k == kk;
        if (!known) throw ConfigError(k, "unknown key in [model]");
    }
    auto num = [&](const char* k) { return to_double(k, m.at(k)); };
    auto cnt = [&](const char* k) { return static_cast<int>(to_int(k, m.at(k))); };

    Params p;
    p.years_T = num("years");
    p.dt = num("dt");
    if (!(p.dt > 0.0)) throw ConfigError("dt", "must be positive");
    const double dt = p.dt;
    const double sdt = std::sqrt(dt);
    p.n_households = cnt("households");
    p.n_cfirms = cnt("cfirms");
    p.n_kfirms = cnt("kfirms");
    p.n_banks = cnt("banks");
    p.n_C = cnt("n_C");
    p.n_K = cnt("n_K");
    p.n_F = cnt("n_F");
    p.n_B_visits = cnt("n_B");
    p.g = num("g") * dt;
    p.sigma_a = num("sigma_a") * sdt;
    p.sigma_P = num("sigma_P") * sdt;
    p.sigma_w = num("sigma_w") * sdt;
    p.sigma_r = num("sigma_r") * sdt;
    p.gamma_Z = num("gamma_Z") * dt;
    p.gamma_P = num("gamma_P") * dt;
    p.gamma_w = num("gamma_w") * dt;
    p.gamma_r = num("gamma_r") * dt;
    p.c = num("c") * dt;
    p.nu = num("nu");
    p.d0 = num("d0");
    p.d1 = num("d1");
    p.d2 = num("d2");
    p.delta = num("delta") * dt;
    p.xi = num("xi");
    const double n_years = num("n_repay_years");
    const double n_steps = n_years / dt;
    if (std::abs(n_steps - std::round(n_steps)) > 1e-9) throw ConfigError("n_repay_years", "n_repay_years / dt must be an integer");
    p.n_repay = static_cast<int>(std::lround(n_steps));
    p.rho = 1.0 / p.n_repay;
    p.kappa1 = num("kappa1");
    p.kappa2 = num("kappa2");
    p.r_M = num("r_M") * dt;
    p.r_N = num("r_N") * dt;

    if (m.count("positivity_floor")) p.positivity_floor = num("positivity_floor");
    if (m.count("default_window")) p.default_window = cnt("default_window");
    if (m.count("cold_theta0")) p.cold_theta0 = num("cold_theta0");
    if (m.count("cold_theta1")) p.cold_theta1 = num("cold_theta1");
    if (m.count("cold_start_zero_risk")) p.cold_start_zero_risk = to_bool("cold_start_zero_risk", m.at("cold_start_zero_risk"));
    if (m.count("logit_ridge")) p.logit_ridge = num("logit_ridge");
    if (m.count("bad_loan_ratio")) {
        const auto& v = m.at("bad_loan_ratio");
        if (v == "expected_over_loans") p.bad_loan_ratio = BadLoanRatio::ExpectedOverLoans;
        else if (v == "loans_over_expected") p.bad_loan_ratio = BadLoanRatio::LoansOverExpected;
        else throw ConfigError("bad_loan_ratio", "expected expected_over_loans or loans_over_expected");
    }
    if (m.count("literal_goods_demand")) p.literal_goods_demand = to_bool("literal_goods_demand", m.at("literal_goods_demand"));
    if (m.count("audit")) p.audit = to_bool("audit", m.at("audit"));
    if (m.count("audit_tolerance")) p.audit_tolerance = num("audit_tolerance");
    validate(p);

    LoadedConfig out;
    out.params = p;

    Scenario defaults;
    defaults.g_override = num("g");
    defaults.d1_override = p.d1;
    defaults.d2_override = p.d2;
    defaults.recorded_steps = p.steps();
    if (auto it = t.find("run"); it != t.end()) {
        for (const auto& [k, v] : it->second) {
            if (k == "burn_in") defaults.burn_in_steps = static_cast<int>(to_int(k, v));
            else if (k == "recorded") defaults.recorded_steps = static_cast<int>(to_int(k, v));
            else if (k == "runs") defaults.n_mc_runs = static_cast<int>(to_int(k, v));
            else if (k == "seed") defaults.master_seed = static_cast<std::uint64_t>(to_int(k, v));
            else throw ConfigError(k, "unknown key in [run]");
        }
    }

    const std::string prefix = "scenario.";
    for (const auto& [section, kv] : t) {
        if (section.rfind(prefix, 0) != 0) {
            if (section != "model" && section != "run") throw ConfigError(section, "unknown section");
            continue;
        }
        Scenario s = defaults;
        s.name = section.substr(prefix.size());
        if (s.name.empty()) throw ConfigError(section, "scenario needs a name");
        for (const auto& [k, v] : kv) {
            const std::string full = section + "." + k;
            if (k == "g") s.g_override = to_double(full, v);
            else if (k == "d1") s.d1_override = to_double(full, v);
            else if (k == "d2") s.d2_override = to_double(full, v);
            else if (k == "burn_in") s.burn_in_steps = static_cast<int>(to_int(full, v));
            else if (k == "recorded") s.recorded_steps = static_cast<int>(to_int(full, v));
            else if (k == "runs") s.n_mc_runs = static_cast<int>(to_int(full, v));
            else if (k == "seed") s.master_seed = static_cast<std::uint64_t>(to_int(full, v));
            else throw ConfigError(full, "scenarios may only override g, d1, d2, burn_in, recorded, runs, seed");
        }
        if (s.g_override < 0) throw ConfigError(section + ".g", "must be nonnegative");
        if (s.recorded_steps < 2) throw ConfigError(section + ".recorded", "must be >= 2");
        if (s.burn_in_steps < 0) throw ConfigError(section + ".burn_in", "must be >= 0");
        if (s.n_mc_runs < 1) throw ConfigError(section + ".runs", "must be >= 1");
        out.scenarios.push_back(s);
    }
    if (out.scenarios.empty()) {
        defaults.name = "default";
        out.scenarios.push_back(defaults);
    }
    return out;
}

inline LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    return parse_config(in, path);
}

/// Model parameters and the four canonical scenarios in annual units.
inline constexpr const char* kDefaultConfig = R"(# Minskyan growth vs zero-growth model, annual units.
[model]
years = 100
dt = 0.25
households = 2000
cfirms = 200
kfirms = 50
banks = 10
n_C = 2
n_K = 2
n_F = 4
n_B = 1
g = 0.02
sigma_a = 0.03
sigma_P = 0.03
sigma_w = 0.03
sigma_r = 0.03
gamma_Z = 0.1
gamma_P = 0.1
gamma_w = 0.1
gamma_r = 0.1
c = 0.4
nu = 3
d0 = 0.5
d1 = 3
d2 = 2
delta = 0.07
xi = 0.1
n_repay_years = 10
kappa1 = 0.06
kappa2 = 1
r_M = 0.001
r_N = 0.02

[run]
burn_in = 200
recorded = 400
runs = 50
seed = 42

[scenario.growth_s1]
g = 0.02
d1 = 3
d2 = 2

[scenario.growth_s2]
g = 0.02
d1 = 5
d2 = 3

[scenario.zero_growth_s1]
g = 0
d1 = 3
d2 = 2

[scenario.zero_growth_s2]
g = 0
d1 = 5
d2 = 3
)";

inline LoadedConfig default_config() {
    std::istringstream in(kDefaultConfig);
    return parse_config(in, "<builtin>");
}

}  // namespace abm
