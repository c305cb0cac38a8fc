// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed below.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "abm/analytics/distributions.hpp"
#include "abm/analytics/indices.hpp"
#include "abm/analytics/summary.hpp"
#include "abm/analytics/timeseries.hpp"
#include "abm/batch.hpp"
#include "abm/config.hpp"
#include "abm/debtrank.hpp"
#include "abm/engine.hpp"

using namespace abm;
namespace an = abm::analytics;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- tolerances

constexpr double kSfcRelTol = 1e-6;
constexpr double kSfcSeconds = 300.0;
constexpr double kGrowthTarget = 0.022;
constexpr double kZeroGrowthTarget = 0.004;
constexpr double kGrowthTol50 = 0.006;
constexpr double kGrowthTol10 = 0.010;
constexpr double kAlpha = 0.05;
constexpr double kIdentityTol = 0.005;
constexpr double kBetaTol = 0.05;
constexpr double kHpTol = 1e-8;
constexpr double kTailTol = 0.1;
constexpr int kKsTrials = 100;
constexpr int kKsMinCorrect = 95;
constexpr double kKsLevel = 0.01;
constexpr double kIndexTol = 1e-12;
constexpr double kSubbotinMaxBeta = 1.3;

const std::vector<std::string> kScenarios{"growth_s1", "growth_s2", "zero_growth_s1", "zero_growth_s2"};

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
    if (!ok) ++failures;
}

// Runs a check, turning an exception into a failure with its message.
void criterion(int n, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [ok, detail] = body();
        report(n, ok, detail);
    } catch (const std::exception& e) {
        report(n, false, std::string("error: ") + e.what());
    }
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// Traces per scenario, in seed order.
std::map<std::string, std::vector<Trace>> traces;

void collect(const std::vector<BatchResult>& results, const std::vector<Scenario>& scs, std::string& errors) {
    for (const auto& r : results) {
        if (r.trace)
            traces[scs[r.task.scenario].name].push_back(*r.trace);
        else
            errors += scs[r.task.scenario].name + " seed " + std::to_string(r.task.seed) + ": " + r.error + "; ";
    }
}

std::vector<Scenario> scenario_list(const LoadedConfig& cfg) {
    std::vector<Scenario> v;
    for (const auto& n : kScenarios) v.push_back(*cfg.find(n));
    return v;
}

// ------------------------------------------------------------- criterion 1

std::pair<bool, std::string> sfc_audit_batch(const LoadedConfig& cfg) {
    const auto scs = scenario_list(cfg);
    RunOptions opt;
    opt.record_burn_in = true;
    const auto start = std::chrono::steady_clock::now();
    const auto results = run_batch(cfg.params, scs, plan_batch(scs, 5, 42), opt, 1);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string errors;
    collect(results, scs, errors);
    double worst = 0.0;
    std::size_t periods = 0;
    for (const auto& [name, ts] : traces)
        for (const auto& tr : ts)
            for (const auto& r : tr.records) {
                worst = std::max(worst, r.sfc_residual / std::max(std::abs(r.nominal_gdp), 1.0));
                ++periods;
            }
    const bool ok = errors.empty() && worst <= kSfcRelTol && secs < kSfcSeconds;
    return {ok, "20 runs, " + std::to_string(periods) + " periods, worst residual/GDP " + num(worst) + ", " +
                    num(secs) + " s" + (errors.empty() ? "" : ", failures: " + errors)};
}

// ---------------------------------------------------------- criteria 2 to 4

std::map<std::string, an::ScenarioSummary> summaries;

void extend_to_ten_runs(const LoadedConfig& cfg) {
    const auto scs = scenario_list(cfg);
    auto tasks = plan_batch(scs, 5, 47);
    const auto results = run_batch(cfg.params, scs, tasks, RunOptions{}, 1);
    std::string errors;
    collect(results, scs, errors);
    if (!errors.empty()) std::cout << "note: failed runs: " << errors << std::endl;
    for (const auto& [name, ts] : traces) summaries.emplace(name, an::summarize_scenario(ts));
}

const an::SummaryRow& row(const std::string& sc, const std::string& v) { return summaries.at(sc).row(v); }

std::pair<bool, std::string> growth_rates() {
    const auto& g = row("growth_s1", "real_gdp_growth");
    const auto& z = row("zero_growth_s1", "real_gdp_growth");
    const std::size_t n = std::min(summaries.at("growth_s1").runs, summaries.at("zero_growth_s1").runs);
    const double tol = n >= 50 ? kGrowthTol50 : kGrowthTol10;
    if (n < 10) return {false, "fewer than 10 completed runs"};
    const bool ok = std::abs(g.avg - kGrowthTarget) <= tol && std::abs(z.avg - kZeroGrowthTarget) <= tol;
    return {ok, "growth_s1 " + num(g.avg) + " (target " + num(kGrowthTarget) + "), zero_growth_s1 " + num(z.avg) +
                    " (target " + num(kZeroGrowthTarget) + "), tolerance " + num(tol) + " at " + std::to_string(n) +
                    " runs"};
}

// Welch test that mean(a) > mean(b) at level kAlpha.
bool greater(const std::vector<double>& a, const std::vector<double>& b, std::string& detail, const std::string& what) {
    const auto t = an::welch_t_test(a, b);
    const bool ok = t.t > 0.0 && t.p_value < kAlpha;
    detail += what + (ok ? " ok" : " NO") + " (t " + num(t.t) + ", p " + num(t.p_value) + "); ";
    return ok;
}

std::pair<bool, std::string> welch_comparisons() {
    std::string d;
    bool ok = true;
    for (const char* s : {"s1", "s2"}) {
        const std::string g = std::string("growth_") + s, z = std::string("zero_growth_") + s;
        ok &= greater(row(g, "real_gdp_growth").run_stds, row(z, "real_gdp_growth").run_stds, d,
                      std::string("std growth G>ZG ") + s);
        ok &= greater(row(g, "unemployment").run_avgs, row(z, "unemployment").run_avgs, d,
                      std::string("unemployment G>ZG ") + s);
        ok &= greater(row(z, "inflation").run_avgs, row(g, "inflation").run_avgs, d,
                      std::string("inflation ZG>G ") + s);
        ok &= greater(row(z, "wage_share").run_avgs, row(g, "wage_share").run_avgs, d,
                      std::string("wage share ZG>G ") + s);
    }
    for (const char* r : {"growth", "zero_growth"}) {
        const std::string s1 = std::string(r) + "_s1", s2 = std::string(r) + "_s2";
        ok &= greater(row(s2, "crises").run_avgs, row(s1, "crises").run_avgs, d, "crises S2>S1 " + std::string(r));
    }
    return {ok, d};
}

std::pair<bool, std::string> inflation_identity() {
    std::string d;
    bool ok = true;
    for (const auto& sc : kScenarios) {
        const double gap = row(sc, "inflation").avg - (row(sc, "wage_inflation").avg - row(sc, "real_gdp_growth").avg);
        ok &= std::abs(gap) <= kIdentityTol;
        d += sc + " gap " + num(gap) + "; ";
    }
    return {ok, d};
}

// ------------------------------------------------------------- criterion 5

std::vector<double> draws(std::size_t n, std::uint64_t seed, bool laplace) {
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> e(1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = laplace ? e(gen) - e(gen) : z(gen);
    return x;
}

std::vector<double> hp_dense(const std::vector<double>& x, double lambda) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        a[i][i] = 1.0;
        a[i][n] = x[i];
    }
    const double d[3] = {1.0, -2.0, 1.0};
    for (std::size_t r = 0; r + 2 < n; ++r)
        for (std::size_t p = 0; p < 3; ++p)
            for (std::size_t q = 0; q < 3; ++q) a[r + p][r + q] += lambda * d[p] * d[q];
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= n; ++k) a[r][k] -= m * a[c][k];
        }
    }
    std::vector<double> tau(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = a[i][n];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * tau[k];
        tau[i] = s / a[i][i];
    }
    return tau;
}

std::pair<bool, std::string> fitter_oracles() {
    std::string d;
    bool ok = true;
    const double bl = an::fit_subbotin(draws(100000, 1, true)).beta;
    const double bn = an::fit_subbotin(draws(100000, 2, false)).beta;
    ok &= std::abs(bl - 1.0) <= kBetaTol && std::abs(bn - 2.0) <= kBetaTol;
    d += "Subbotin beta Laplace " + num(bl) + ", normal " + num(bn) + "; ";

    const auto x = draws(200, 3, false);
    std::vector<double> walk(x.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) walk[k] = acc += x[k];
    const auto hp = an::hp_filter(walk, 1600.0);
    const auto tau = hp_dense(walk, 1600.0);
    double hp_err = 0.0;
    for (std::size_t k = 0; k < tau.size(); ++k) hp_err = std::max(hp_err, std::abs(hp.trend[k] - tau[k]));
    ok &= hp_err <= kHpTol;
    d += "HP max error " + num(hp_err) + "; ";

    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> pareto(50000);
    for (auto& v : pareto) v = std::pow(1.0 - u(gen), -1.0 / 1.5);
    const double alpha = an::fit_tail(pareto).exponent;
    ok &= std::abs(alpha - 2.5) <= kTailTol;
    d += "power-law exponent " + num(alpha) + "; ";

    int rejected = 0, accepted = 0;
    for (int k = 0; k < kKsTrials; ++k) {
        rejected += an::ks_normality(draws(10000, 1000 + static_cast<std::uint64_t>(k), true)).p_value < kKsLevel;
        accepted += an::ks_normality(draws(10000, 5000 + static_cast<std::uint64_t>(k), false)).p_value >= kKsLevel;
    }
    ok &= rejected >= kKsMinCorrect && accepted >= kKsMinCorrect;
    d += "KS rejects Laplace " + std::to_string(rejected) + "/100, accepts normal " + std::to_string(accepted) + "/100";
    return {ok, d};
}

// ------------------------------------------------------------- criterion 6

std::pair<bool, std::string> debtrank_checks() {
    bool ok = true;
    std::string d;
    // toy networks
    CreditNetwork star(1, 2);
    star.at(0, 0) = star.at(0, 1) = 10.0;
    star.bank_assets = {100.0};
    star.firm_assets = {5.0, 5.0};
    const auto rs = propagate(build_propagation(star), {0}, 1.0, DebtRankConvention::Exposure);
    const auto drs = debtrank_total(star, {0}, 1.0, DebtRankConvention::Exposure);
    ok &= rs.h[1] == 1.0 && rs.h[2] == 1.0 && rs.T == 2 && drs.firms == 1.0;
    CreditNetwork chain(2, 1);
    chain.at(0, 0) = chain.at(1, 0) = 10.0;
    chain.bank_assets = {50.0, 50.0};
    chain.firm_assets = {30.0};
    const auto rc = propagate(build_propagation(chain), {0}, 1.0, DebtRankConvention::Literal);
    ok &= rc.h[2] == 1.0 && rc.h[1] == 0.5;
    CreditNetwork split(1, 2);
    split.at(0, 0) = 6.0;
    split.at(0, 1) = 4.0;
    const auto ps = build_propagation(split);
    ok &= ps.wb(0, 0) == 0.6 && ps.wb(0, 1) == 0.4;
    d += std::string("toy networks ") + (ok ? "exact" : "WRONG") + "; ";

    std::mt19937_64 gen(99);
    std::uniform_int_distribution<int> nb_d(1, 8), nf_d(1, 40);
    std::uniform_real_distribution<double> amt(0.0, 10.0), assets(1.0, 100.0), coin(0.0, 1.0);
    int bad_rows = 0, bad_mono = 0, bad_scale = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        CreditNetwork net(nb_d(gen), nf_d(gen));
        for (auto& c : net.credit) c = coin(gen) < 0.3 ? amt(gen) : 0.0;
        for (auto& a : net.bank_assets) a = assets(gen);
        for (auto& a : net.firm_assets) a = assets(gen);
        const auto pr = build_propagation(net);
        for (int b = 0; b < net.n_banks; ++b) {
            double s = 0.0;
            for (int f = 0; f < net.n_firms; ++f) s += pr.wb(b, f);
            if (net.bank_total(b) > 0.0 && std::abs(s - 1.0) > 1e-12) ++bad_rows;
        }
        for (int f = 0; f < net.n_firms; ++f) {
            double s = 0.0;
            for (int b = 0; b < net.n_banks; ++b) s += pr.wf(f, b);
            if (net.firm_total(f) > 0.0 && std::abs(s - 1.0) > 1e-12) ++bad_rows;
        }
        const auto full = debtrank_total(net, {0}, 1.0);
        const auto half = debtrank_total(net, {0}, 0.5);
        if (half.total() > full.total() + 1e-12) ++bad_mono;
        CreditNetwork scaled = net;
        for (auto& c : scaled.credit) c *= 1000.0;
        for (auto& a : scaled.bank_assets) a *= 7.0;
        for (auto& a : scaled.firm_assets) a *= 7.0;
        const auto sc = debtrank_total(scaled, {0}, 1.0);
        if (std::abs(sc.total() - full.total()) > 1e-12) ++bad_scale;
    }
    ok &= bad_rows == 0 && bad_mono == 0 && bad_scale == 0;
    d += "1000 random networks: row-sum violations " + std::to_string(bad_rows) + ", monotonicity " +
         std::to_string(bad_mono) + ", scale " + std::to_string(bad_scale);
    return {ok, d};
}

// ------------------------------------------------------------- criterion 7

std::pair<bool, std::string> index_checks() {
    const std::vector<double> w{0.0, 0.0, 0.0, 12.5};
    const std::vector<double> s{0.75, 0.25}, now{0.5, 0.5}, prev{0.6, 0.4};
    const double g = an::gini(w), h = an::hhi_normalized(s), p = an::hpi(now, prev);
    const bool ok = std::abs(g - 0.75) <= kIndexTol && std::abs(h - 0.25) <= kIndexTol && std::abs(p - 0.2) <= kIndexTol;
    return {ok, "Gini " + num(g) + ", HHI* " + num(h) + ", HPI " + num(p)};
}

// ------------------------------------------------------------- criterion 8

std::pair<bool, std::string> stylised_facts() {
    const auto& ts = traces.at("growth_s1");
    std::vector<double> c_sd, i_sd, gy, du, pool;
    std::size_t used = 0;
    for (const auto& tr : ts) {
        if (tr.seed > 46) continue;
        ++used;
        const auto rs = an::derive_series(tr, 4);
        const auto w = tr.window();
        std::vector<double> un, rc, ri;
        for (const auto& r : w) {
            un.push_back(r.unemployment);
            rc.push_back(r.real_consumption);
            ri.push_back(r.real_investment);
        }
        const auto& g = rs.at("real_gdp_growth");
        for (std::size_t k = 0; k < g.size(); ++k) {
            gy.push_back(g[k]);
            du.push_back(un[k + 4] - un[k]);
        }
        pool.insert(pool.end(), g.begin(), g.end());
        try {
            c_sd.push_back(an::stddev(an::growth_rate(rc, 4)));
            i_sd.push_back(an::stddev(an::growth_rate(ri, 4)));
        } catch (const std::exception&) {
        }
    }
    std::string d = std::to_string(used) + " runs; ";
    bool ok = true;
    if (i_sd.empty()) {
        ok = false;
        d += "no run has positive consumption and investment throughout; ";
    } else {
        const double is = an::mean(i_sd), cs = an::mean(c_sd);
        ok &= is > cs;
        d += "sd investment growth " + num(is) + " vs consumption " + num(cs) + "; ";
    }
    const auto okun = an::ols_fit(gy, du);
    ok &= okun.slope < 0.0 && okun.p_value < kAlpha;
    d += "Okun slope " + num(okun.slope) + " (p " + num(okun.p_value) + "); ";
    const auto ks = an::ks_normality(pool);
    ok &= ks.p_value < kKsLevel;
    d += "KS p " + num(ks.p_value) + "; ";
    const double beta = an::fit_subbotin(pool).beta;
    ok &= beta < kSubbotinMaxBeta;
    d += "Subbotin beta " + num(beta);
    return {ok, d};
}

// ------------------------------------------------------------- criterion 9

int cli(const std::string& args) {
    const std::string cmd = std::string(ABM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("missing output " + p.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::pair<bool, std::string> determinism() {
    const fs::path root = fs::temp_directory_path() / ("abm_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string run = "run --scenario growth_s1 --seed 42 --burn-in 50 --recorded 100 --out ";
    if (cli(run + (root / "a").string()) != 0 || cli(run + (root / "b").string()) != 0)
        return {false, "CLI run failed"};
    const bool same_run = slurp(root / "a" / "trace_growth_s1_42.csv") == slurp(root / "b" / "trace_growth_s1_42.csv");
    const std::string batch = "batch --scenarios growth_s1,zero_growth_s2 --runs 3 --seed 42 --burn-in 20 --recorded 60 ";
    if (cli(batch + "-j 1 --out " + (root / "j1").string()) != 0 || cli(batch + "-j 3 --out " + (root / "j3").string()) != 0)
        return {false, "CLI batch failed"};
    bool same_batch = true;
    for (const char* f : {"summary_macro.csv", "summary_micro.csv"})
        same_batch &= slurp(root / "j1" / f) == slurp(root / "j3" / f);
    fs::remove_all(root);
    return {same_run && same_batch, std::string("run twice ") + (same_run ? "identical" : "DIFFERENT") +
                                        ", batch -j1 vs -j3 summaries " + (same_batch ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
    const auto cfg = default_config();
    criterion(1, [&] { return sfc_audit_batch(cfg); });
    bool have_summaries = true;
    try {
        extend_to_ten_runs(cfg);
    } catch (const std::exception& e) {
        have_summaries = false;
        std::cout << "note: summaries unavailable: " << e.what() << std::endl;
    }
    criterion(2, [&] { return have_summaries ? growth_rates() : std::pair{false, std::string("no summaries")}; });
    criterion(3, [&] { return have_summaries ? welch_comparisons() : std::pair{false, std::string("no summaries")}; });
    criterion(4, [&] { return have_summaries ? inflation_identity() : std::pair{false, std::string("no summaries")}; });
    criterion(5, fitter_oracles);
    criterion(6, debtrank_checks);
    criterion(7, index_checks);
    criterion(8, stylised_facts);
    criterion(9, determinism);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
