// abm: run, batch, analyze and debtrank subcommands.
//
// Exit codes: 0 success, 2 configuration error, 3 audit failure,
// 4 partial batch failure, 1 anything else.

#include <CLI11.hpp>
#include <glob.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abm/analytics/summary.hpp"
#include "abm/batch.hpp"
#include "abm/config.hpp"
#include "abm/debtrank.hpp"
#include "abm/engine.hpp"
#include "abm/manifest.hpp"
#include "abm/trace.hpp"
#include "analyze.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAudit = 3;
constexpr int kExitPartial = 4;

struct ExitError {
    int code;
    std::string message;
};

abm::LoadedConfig load(const std::string& path) {
    try {
        return path.empty() ? abm::default_config() : abm::load_config(path);
    } catch (const abm::ConfigError& e) {
        throw ExitError{kExitConfig, e.what()};
    }
}

const abm::Scenario& pick(const abm::LoadedConfig& cfg, const std::string& name) {
    if (const auto* s = cfg.find(name)) return *s;
    std::ostringstream os;
    os << "unknown scenario '" << name << "'; available:";
    for (const auto& s : cfg.scenarios) os << ' ' << s.name;
    throw ExitError{kExitConfig, os.str()};
}

std::vector<std::string> expand(const std::vector<std::string>& patterns) {
    std::vector<std::string> out;
    for (const auto& p : patterns) {
        if (fs::is_directory(p)) {
            std::vector<std::string> dir;
            for (const auto& e : fs::recursive_directory_iterator(p)) {
                const auto n = e.path().filename().string();
                if (e.is_regular_file() && n.rfind("trace_", 0) == 0 && e.path().extension() == ".csv")
                    dir.push_back(e.path().string());
            }
            std::sort(dir.begin(), dir.end());
            out.insert(out.end(), dir.begin(), dir.end());
            continue;
        }
        glob_t g{};
        if (::glob(p.c_str(), 0, nullptr, &g) == 0)
            for (std::size_t k = 0; k < g.gl_pathc; ++k) out.emplace_back(g.gl_pathv[k]);
        globfree(&g);
    }
    return out;
}

std::string trace_name(const std::string& scenario, std::uint64_t seed) {
    return "trace_" + scenario + "_" + std::to_string(seed) + ".csv";
}

// ------------------------------------------------------------------- run

struct RunArgs {
    std::string config, scenario, out = "out", manifest;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int burn_in = -1, recorded = -1;
    bool record_burn_in = false, no_debtrank = false;
    std::vector<std::int64_t> snapshots;
};

int cmd_run(const RunArgs& a) {
    abm::RunManifest m;
    if (!a.manifest.empty()) {
        m = abm::read_manifest(a.manifest);
    } else {
        if (a.scenario.empty()) throw ExitError{kExitConfig, "run: --scenario is required"};
        const auto cfg = load(a.config);
        m.base = cfg.params;
        m.scenario_def = pick(cfg, a.scenario);
        m.scenario = a.scenario;
        m.seed = a.seed_set ? a.seed : m.scenario_def.master_seed;
        m.burn_in = a.burn_in >= 0 ? a.burn_in : m.scenario_def.burn_in_steps;
        m.recorded = a.recorded >= 0 ? a.recorded : m.scenario_def.recorded_steps;
        m.record_burn_in = a.record_burn_in;
        m.snapshot_periods = a.snapshots;
    }
    try {
        abm::validate(abm::apply_scenario(m.base, m.scenario_def));
    } catch (const abm::ConfigError& e) {
        throw ExitError{kExitConfig, e.what()};
    }
    abm::RunOptions opt;
    opt.burn_in = m.burn_in;
    opt.recorded = m.recorded;
    opt.record_burn_in = m.record_burn_in;
    opt.engine.debtrank = !a.no_debtrank;
    opt.engine.snapshot_periods.insert(m.snapshot_periods.begin(), m.snapshot_periods.end());

    abm::Trace tr;
    try {
        tr = abm::run(m.base, m.scenario_def, m.seed, opt);
    } catch (const abm::AuditFailure& e) {
        throw ExitError{kExitAudit, e.what()};
    }
    fs::create_directories(a.out);
    m.outputs.clear();
    const auto tpath = (fs::path(a.out) / trace_name(m.scenario, m.seed)).string();
    abm::write_trace_file(tpath, tr);
    m.outputs.push_back(tpath);
    for (const auto& s : tr.snapshots) {
        const std::string stem = m.scenario + "_" + std::to_string(m.seed) + "_t" + std::to_string(s.t);
        const auto ap = (fs::path(a.out) / ("agents_" + stem + ".csv")).string();
        const auto ep = (fs::path(a.out) / ("edges_" + stem + ".csv")).string();
        const auto np = (fs::path(a.out) / ("nodes_" + stem + ".csv")).string();
        std::ofstream(ap) << [&] { std::ostringstream o; abm::write_agents_csv(o, s); return o.str(); }();
        std::ofstream(ep) << [&] { std::ostringstream o; abm::write_edges_csv(o, s.network); return o.str(); }();
        std::ofstream(np) << [&] { std::ostringstream o; abm::write_nodes_csv(o, s.network); return o.str(); }();
        m.outputs.insert(m.outputs.end(), {ap, ep, np});
    }
    m.params_hash = abm::params_hash(abm::apply_scenario(m.base, m.scenario_def));
    m.created_utc = abm::utc_now();
    const auto mpath = (fs::path(a.out) / ("manifest_" + m.scenario + "_" + std::to_string(m.seed) + ".json")).string();
    abm::write_manifest(mpath, m);
    std::cout << "wrote " << tpath << " (" << tr.records.size() << " periods)\n";
    return 0;
}

// ----------------------------------------------------------------- batch

struct BatchArgs {
    std::string config, out = "batch";
    std::vector<std::string> scenarios;
    int runs = -1, jobs = 1, burn_in = -1, recorded = -1;
    std::uint64_t seed = 0;
    bool seed_set = false, no_traces = false, no_debtrank = false;
};

int cmd_batch(const BatchArgs& a) {
    const auto cfg = load(a.config);
    std::vector<abm::Scenario> scs;
    if (a.scenarios.empty()) scs = cfg.scenarios;
    else
        for (const auto& n : a.scenarios) scs.push_back(pick(cfg, n));
    if (scs.empty()) throw ExitError{kExitConfig, "batch: no scenarios"};
    const int runs = a.runs > 0 ? a.runs : scs.front().n_mc_runs;
    const std::uint64_t master = a.seed_set ? a.seed : scs.front().master_seed;
    try {
        for (const auto& s : scs) abm::validate(abm::apply_scenario(cfg.params, s));
    } catch (const abm::ConfigError& e) {
        throw ExitError{kExitConfig, e.what()};
    }

    abm::RunOptions opt;
    opt.burn_in = a.burn_in;
    opt.recorded = a.recorded;
    opt.engine.debtrank = !a.no_debtrank;
    const auto tasks = abm::plan_batch(scs, runs, master);
    std::size_t done = 0;
    const auto results = abm::run_batch(cfg.params, scs, tasks, opt, a.jobs, [&](const abm::BatchResult& r) {
        ++done;
        std::cerr << "[" << done << "/" << tasks.size() << "] " << scs[r.task.scenario].name << " run " << r.task.run
                  << (r.trace ? " ok" : " FAILED: " + r.error) << "\n";
    });

    fs::create_directories(a.out);
    const auto tdir = fs::path(a.out) / "traces";
    if (!a.no_traces) fs::create_directories(tdir);
    std::vector<abm::analytics::ScenarioSummary> sums;
    std::size_t failures = 0;
    bool audit = false;
    std::ofstream flog(fs::path(a.out) / "failures.csv");
    flog << "scenario,run,seed,error\n";
    for (std::size_t s = 0; s < scs.size(); ++s) {
        std::vector<abm::Trace> ok;
        for (const auto& r : results) {
            if (r.task.scenario != s) continue;
            if (!r.trace) {
                ++failures;
                audit = audit || r.audit_failure;
                std::string msg = r.error;
                std::replace(msg.begin(), msg.end(), ',', ';');
                flog << scs[s].name << ',' << r.task.run << ',' << r.task.seed << ',' << msg << '\n';
                continue;
            }
            if (!a.no_traces) abm::write_trace_file((tdir / trace_name(scs[s].name, r.task.seed)).string(), *r.trace);
            ok.push_back(*r.trace);
        }
        if (!ok.empty()) sums.push_back(abm::analytics::summarize_scenario(ok));
    }
    {
        std::ofstream os(fs::path(a.out) / "summary_macro.csv");
        abm::analytics::write_summary_csv(os, sums, false);
    }
    {
        std::ofstream os(fs::path(a.out) / "summary_micro.csv");
        abm::analytics::write_summary_csv(os, sums, true);
    }
    nlohmann::json man;
    man["base"] = cfg.params;
    man["scenarios"] = scs;
    man["runs"] = runs;
    man["master_seed"] = master;
    man["burn_in"] = a.burn_in;
    man["recorded"] = a.recorded;
    man["failures"] = failures;
    man["engine_version"] = abm::kEngineVersion;
    man["trace_schema"] = abm::kTraceSchemaVersion;
    man["created_utc"] = abm::utc_now();
    std::ofstream(fs::path(a.out) / "batch_manifest.json") << man.dump(2) << '\n';

    for (const auto& s : sums)
        std::cout << s.scenario << ": " << s.runs << " runs, real GDP growth " << s.row("real_gdp_growth").avg
                  << ", unemployment " << s.row("unemployment").avg << "\n";
    if (failures) {
        std::cerr << failures << " of " << tasks.size() << " runs failed; see failures.csv\n";
        return audit ? kExitAudit : kExitPartial;
    }
    return 0;
}

// --------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::vector<std::string> traces, agents;
    std::string out = "analysis", empirical;
    int steps_per_year = 4, max_lag = 20;
    bool per_run = false;
};

int cmd_analyze(const AnalyzeArgs& a) {
    const auto files = expand(a.traces);
    if (files.empty()) throw ExitError{1, "analyze: no trace files matched"};
    std::vector<abm::Trace> traces;
    for (const auto& f : files) traces.push_back(abm::read_trace_file(f));
    abm::tools::AnalyzeOptions opt;
    opt.out_dir = a.out;
    opt.steps_per_year = a.steps_per_year;
    opt.max_lag = a.max_lag;
    opt.per_run_standardize = a.per_run;
    opt.empirical_csv = a.empirical;
    opt.agent_files = expand(a.agents);
    std::cout << abm::tools::analyze(traces, opt);
    std::cout << "outputs in " << a.out << "\n";
    return 0;
}

// -------------------------------------------------------------- debtrank

struct DebtRankArgs {
    std::string edges, nodes, policy = "each-bank-mean", convention = "literal";
    std::vector<int> initial;
    double psi = 1.0;
};

int cmd_debtrank(const DebtRankArgs& a) {
    std::ifstream es(a.edges);
    if (!es) throw ExitError{1, "cannot read " + a.edges};
    std::ifstream ns;
    if (!a.nodes.empty()) {
        ns.open(a.nodes);
        if (!ns) throw ExitError{1, "cannot read " + a.nodes};
    }
    abm::InitialSetPolicy pol;
    abm::DebtRankConvention conv;
    try {
        pol = abm::parse_initial_set_policy(a.policy);
        conv = abm::parse_debtrank_convention(a.convention);
    } catch (const std::invalid_argument& e) {
        throw ExitError{kExitConfig, e.what()};
    }
    const auto net = abm::read_network(es, a.nodes.empty() ? nullptr : &ns, a.edges);
    if (pol == abm::InitialSetPolicy::Custom && a.initial.empty())
        throw ExitError{kExitConfig, "debtrank: custom policy needs --initial node ids"};
    const auto dr = abm::debtrank_policy(net, pol, a.initial, a.psi, conv);
    std::cout << "banks " << net.n_banks << ", firms " << net.n_firms << "\n"
              << "DR_B " << dr.banks << "\nDR_F " << dr.firms << "\nDR " << dr.total() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agent-based macro simulator: growth vs zero-growth with Minskyan credit"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "run one simulation and write its trace");
    run->add_option("--config", ra.config, "TOML config (default: built-in parameters)");
    run->add_option("--scenario", ra.scenario, "scenario name");
    auto* seed_opt = run->add_option("--seed", ra.seed, "seed (default: scenario master seed)");
    run->add_option("--out", ra.out, "output directory")->capture_default_str();
    run->add_option("--burn-in", ra.burn_in, "override burn-in periods");
    run->add_option("--recorded", ra.recorded, "override recorded periods");
    run->add_flag("--record-burn-in", ra.record_burn_in, "also write burn-in periods");
    run->add_option("--snapshot", ra.snapshots, "periods at which to write agent and network snapshots");
    run->add_flag("--no-debtrank", ra.no_debtrank, "skip per-period DebtRank");
    run->add_option("--manifest", ra.manifest, "re-run exactly from a manifest");

    BatchArgs ba;
    auto* batch = app.add_subcommand("batch", "Monte Carlo batch over scenarios");
    batch->add_option("--config", ba.config, "TOML config (default: built-in parameters)");
    batch->add_option("--scenarios", ba.scenarios, "scenario names (default: all)")->delimiter(',');
    batch->add_option("--runs", ba.runs, "runs per scenario (default: from config)");
    auto* bseed = batch->add_option("--seed", ba.seed, "master seed; run k uses master + k");
    batch->add_option("--out", ba.out, "output directory")->capture_default_str();
    batch->add_option("-j,--jobs", ba.jobs, "parallel runs")->capture_default_str();
    batch->add_option("--burn-in", ba.burn_in, "override burn-in periods");
    batch->add_option("--recorded", ba.recorded, "override recorded periods");
    batch->add_flag("--no-traces", ba.no_traces, "write only the summaries");
    batch->add_flag("--no-debtrank", ba.no_debtrank, "skip per-period DebtRank");

    AnalyzeArgs aa;
    auto* an = app.add_subcommand("analyze", "tables and figures from traces");
    an->add_option("--traces", aa.traces, "trace files, globs or directories")->required();
    an->add_option("--out", aa.out, "output directory")->capture_default_str();
    an->add_option("--agents", aa.agents, "agent snapshot CSVs for tail fits");
    an->add_option("--empirical", aa.empirical, "empirical GDP series CSV (date,value) for ACF overlay");
    an->add_option("--steps-per-year", aa.steps_per_year)->capture_default_str();
    an->add_option("--max-lag", aa.max_lag)->capture_default_str();
    an->add_flag("--per-run-standardize", aa.per_run, "standardise growth rates per run before pooling");

    DebtRankArgs da;
    auto* dr = app.add_subcommand("debtrank", "DebtRank of a credit-network edge list");
    dr->add_option("--edges", da.edges, "edge list: bank_id,firm_id,outstanding")->required();
    dr->add_option("--nodes", da.nodes, "node list: kind,id,assets");
    dr->add_option("--policy", da.policy, "each-bank-mean | single-largest-bank | custom")->capture_default_str();
    dr->add_option("--initial", da.initial, "node ids for the custom policy (banks first, then firms)");
    dr->add_option("--psi", da.psi, "initial distress")->capture_default_str();
    dr->add_option("--convention", da.convention, "literal | exposure")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        ra.seed_set = seed_opt->count() > 0;
        ba.seed_set = bseed->count() > 0;
        if (*run) return cmd_run(ra);
        if (*batch) return cmd_batch(ba);
        if (*an) return cmd_analyze(aa);
        if (*dr) return cmd_debtrank(da);
    } catch (const ExitError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
