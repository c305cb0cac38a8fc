#pragma once

// Run manifests: the effective parameters, scenario, seed and options that
// reproduce an output, plus a parameter hash.

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "trace.hpp"

namespace abm {

inline constexpr const char* kEngineVersion = "1.0.0";

NLOHMANN_JSON_SERIALIZE_ENUM(BadLoanRatio, {{BadLoanRatio::ExpectedOverLoans, "expected_over_loans"},
                                            {BadLoanRatio::LoansOverExpected, "loans_over_expected"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Params, years_T, dt, n_households, n_cfirms, n_kfirms, n_banks, n_C, n_K, n_F,
                                   n_B_visits, g, sigma_a, sigma_P, sigma_w, sigma_r, gamma_Z, gamma_P, gamma_w,
                                   gamma_r, c, nu, d0, d1, d2, delta, xi, n_repay, rho, kappa1, kappa2, r_M, r_N,
                                   positivity_floor, default_window, cold_theta0, cold_theta1, cold_start_zero_risk,
                                   logit_ridge, bad_loan_ratio, literal_goods_demand, audit, audit_tolerance)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Scenario, name, g_override, d1_override, d2_override, burn_in_steps,
                                   recorded_steps, n_mc_runs, master_seed)

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Hash of the effective (scenario-applied) parameters. Doubles are printed
/// in shortest round-trip form, so any change in value changes the text.
inline std::string params_hash(const Params& p) {
    const nlohmann::json j = p;
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(j.dump());
    return os.str();
}

struct RunManifest {
    std::string scenario;
    std::uint64_t seed = 0;
    Params base;             // before the scenario is applied
    Scenario scenario_def;
    int burn_in = 0;
    int recorded = 0;
    bool record_burn_in = false;
    std::vector<std::int64_t> snapshot_periods;
    std::string params_hash;  // of apply_scenario(base, scenario_def)
    std::vector<std::string> outputs;
    std::string engine_version = kEngineVersion;
    int trace_schema = kTraceSchemaVersion;
    std::string created_utc;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RunManifest, scenario, seed, base, scenario_def, burn_in, recorded,
                                   record_burn_in, snapshot_periods, params_hash, outputs, engine_version,
                                   trace_schema, created_utc)

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write manifest " + path);
    os << nlohmann::json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read manifest " + path);
    try {
        return nlohmann::json::parse(is).get<RunManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed manifest " + path + ": " + e.what());
    }
}

}  // namespace abm
