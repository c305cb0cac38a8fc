#pragma once

// The simulation loop. Economy owns every agent and advances one period per
// call to step(); run() drives burn-in plus the recorded window and collects
// the trace.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "agents.hpp"
#include "analytics/indices.hpp"
#include "config.hpp"
#include "debtrank.hpp"
#include "markets.hpp"
#include "rng.hpp"
#include "sfc.hpp"
#include "trace.hpp"

namespace abm {

class AuditFailure : public std::runtime_error {
public:
    AuditFailure(const AuditReport& r, std::int64_t t) : std::runtime_error(describe(r, t)), report_(r), t_(t) {}
    const AuditReport& report() const noexcept { return report_; }
    std::int64_t period() const noexcept { return t_; }

private:
    AuditReport report_;
    std::int64_t t_;
};

/// Steady-state initial ratios implied by the parameters.
struct InitialRatios {
    double d = 0.0;      // debt / output
    double pi = 0.0;     // profit share
    double omega = 0.0;  // wage share (= initial wage with a = P = 1)
};

inline InitialRatios initial_ratios(const Params& p) {
    InitialRatios r;
    const double gk = p.nu * (p.g + p.delta);
    r.d = (p.d0 + p.g * p.d1 + gk * p.d2) / (1.0 + p.g * p.d2);
    r.pi = gk - p.g * r.d;
    r.omega = 1.0 - r.pi - p.r_N * r.d;
    if (!(r.omega > 0.0)) throw ConfigError("", "parameters give a nonpositive initial wage share");
    return r;
}

/// Fraction of each depositor's balance taken to fund a bank's equity
/// injection, and the part of the injection the deposits cannot cover.
struct BailoutShare {
    double fraction = 0.0;
    double shortfall = 0.0;
};

inline BailoutShare bailout_share(double required, double deposits) noexcept {
    BailoutShare s;
    if (!(required > 0.0)) return s;
    if (!(deposits > 0.0)) {
        s.shortfall = required;
        return s;
    }
    s.fraction = std::min(required / deposits, 1.0);
    s.shortfall = std::max(required - deposits, 0.0);
    return s;
}

struct EngineOptions {
    bool debtrank = true;
    InitialSetPolicy dr_policy = InitialSetPolicy::EachBankMean;
    DebtRankConvention dr_convention = DebtRankConvention::Literal;
    std::set<std::int64_t> snapshot_periods;  // absolute period numbers
};

/// Counters that are not part of the trace but help diagnose a run.
struct EngineStats {
    int logit_failures = 0;
    int bailout_shortfalls = 0;
    double bailout_shortfall = 0.0;
    int entrants_without_worker = 0;
};

class Economy {
public:
    Economy(const Params& p, std::uint64_t seed, EngineOptions opt = {})
        : p_(p), opt_(std::move(opt)), rng_{seed} {
        validate(p_);
        init_ = initial_ratios(p_);
        initialise();
    }

    /// Advances one period and returns its record.
    const PeriodRecord& step();

    std::int64_t t() const noexcept { return t_; }
    const PeriodRecord& last() const noexcept { return last_; }
    const FlowLedger& ledger() const noexcept { return flows_; }
    const AuditReport& audit() const noexcept { return audit_; }
    const EngineStats& stats() const noexcept { return stats_; }
    const Params& params() const noexcept { return p_; }

    const std::vector<Household>& households() const noexcept { return hh_; }
    const std::vector<CFirm>& cfirms() const noexcept { return cf_; }
    const std::vector<KFirm>& kfirms() const noexcept { return kf_; }
    const std::vector<Bank>& banks() const noexcept { return banks_; }
    const DefaultModel& default_model_c() const noexcept { return dm_c_; }
    const DefaultModel& default_model_k() const noexcept { return dm_k_; }

    CreditNetwork credit_network() const;
    BalanceSheet balance_sheet() const;
    Snapshot snapshot() const;

private:
    void initialise();
    FirmSlots slots() { return FirmSlots{&cf_, &kf_}; }
    Substream stream(AgentKind k, std::size_t idx, Purpose pu) const {
        return derive_stream(rng_, k, static_cast<std::uint32_t>(idx), t_, pu);
    }
    double floor_P() const { return p_.positivity_floor; }
    double floor_w() const { return p_.positivity_floor * init_.omega; }
    double floor_r() const { return p_.positivity_floor * p_.r_N; }

    void spawn_entrants(std::vector<int>& unemployed);
    void plan_cfirm(CFirm& f) const;
    void plan_kfirm(KFirm& f) const;
    void write_off(FirmBase& f, bool c_class, std::vector<double>& bad_loans);
    void bail_out(int b);

    Params p_;
    EngineOptions opt_;
    RngPolicy rng_;
    InitialRatios init_;
    std::int64_t t_ = 0;

    std::vector<Household> hh_;
    std::vector<CFirm> cf_;
    std::vector<KFirm> kf_;
    std::vector<Bank> banks_;
    CFirm c_template_;
    KFirm k_template_;
    DefaultModel dm_c_, dm_k_;

    double Pbar_c_ = 1.0, Pbar_k_ = 1.0, wbar_ = 1.0;
    std::vector<double> prev_share_c_, prev_share_k_, prev_share_b_;

    FlowLedger flows_;
    AuditReport audit_;
    EngineStats stats_;
    PeriodRecord last_;
};

// ------------------------------------------------------------------ set-up

inline void Economy::initialise() {
    const Params& p = p_;
    Substream s = derive_stream(rng_, AgentKind::Market, 0, 0, Purpose::Init);
    const int nh = p.n_households, nc = p.n_cfirms, nk = p.n_kfirms, nb = p.n_banks;
    const int nf = nc + nk;

    hh_.assign(static_cast<std::size_t>(nh), Household{});
    cf_.assign(static_cast<std::size_t>(nc), CFirm{});
    kf_.assign(static_cast<std::size_t>(nk), KFirm{});
    banks_.assign(static_cast<std::size_t>(nb), Bank{});

    // Households are spread as evenly as possible, in random order.
    const auto order = random_permutation(nh, s);
    auto employer_of = [&](int k) { return k % nf; };
    for (int k = 0; k < nh; ++k) {
        const int h = order[static_cast<std::size_t>(k)];
        const int f = employer_of(k);
        hh_[static_cast<std::size_t>(h)].employer = f;
        FirmSlots fs{&cf_, &kf_};
        fs[f].workers.push_back(h);
    }
    for (auto& h : hh_) {
        h.bank = static_cast<int>(s.below(static_cast<std::uint64_t>(nb)));
        h.M = h.employed() ? init_.omega : 0.0;
        h.Y = h.M;
    }
    wbar_ = init_.omega;

    for (int i = 0; i < nc; ++i) {
        CFirm& f = cf_[static_cast<std::size_t>(i)];
        const double N = f.N();
        f.a = f.a_prev = 1.0;
        f.P = 1.0;
        f.w = init_.omega;
        f.Y = f.Z = f.Ze = f.Q = f.Yd = N;
        f.Nd = N;
        f.K = f.KE = p.nu * f.Y;
        f.W = f.w * N;
        f.D = init_.d * f.Y;
        f.Pi = init_.pi * f.Y;
        f.M = f.Pi + f.D;
        f.E = f.KE + f.M - f.D;
        f.dd = init_.d;
        f.bank = static_cast<int>(s.below(static_cast<std::uint64_t>(nb)));
        if (f.D > 0.0) {
            f.loans.push_back(make_loan(f.bank, i, f.D, p.r_N, p, 0));
            banks_[static_cast<std::size_t>(f.bank)].L += f.D;
        }
        plan_cfirm(f);
    }
    for (int j = 0; j < nk; ++j) {
        KFirm& f = kf_[static_cast<std::size_t>(j)];
        const double N = f.N();
        f.a = f.a_prev = 1.0;
        f.P = 1.0;
        f.w = init_.omega;
        f.Y = f.Z = f.Ze = f.Q = f.Yd = N;
        f.Nd = N;
        f.W = f.w * N;
        f.Pi = f.Y - f.W;
        f.M = f.Pi;
        f.E = f.M;
        f.Vd = p.xi * f.Y;
        f.bank = static_cast<int>(s.below(static_cast<std::uint64_t>(nb)));
        plan_kfirm(f);
    }
    c_template_ = nc > 0 ? cf_.front() : CFirm{};
    k_template_ = nk > 0 ? kf_.front() : KFirm{};

    for (auto& b : banks_) {
        b.rL = p.r_N;
        b.E = p.kappa1 * b.L;
        b.CRd = p.kappa1;
    }
    for (const auto& h : hh_) banks_[static_cast<std::size_t>(h.bank)].M += h.M;
    for (const auto& f : cf_) banks_[static_cast<std::size_t>(f.bank)].M += f.M;
    for (const auto& f : kf_) banks_[static_cast<std::size_t>(f.bank)].M += f.M;
    for (auto& b : banks_) {
        b.CR = bank_capital_ratio(b.E, b.L);
        bank_settle_reserves(b);
    }

    dm_c_ = DefaultModel(p.cold_theta0, p.cold_theta1, p.cold_start_zero_risk, p.default_window, p.logit_ridge);
    dm_k_ = dm_c_;

    std::vector<double> y(cf_.size()), yk(kf_.size()), l(banks_.size());
    for (std::size_t i = 0; i < cf_.size(); ++i) y[i] = cf_[i].Y;
    for (std::size_t j = 0; j < kf_.size(); ++j) yk[j] = kf_[j].Y;
    for (std::size_t b = 0; b < banks_.size(); ++b) l[b] = banks_[b].L;
    prev_share_c_ = analytics::shares_of(y);
    prev_share_k_ = analytics::shares_of(yk);
    prev_share_b_ = analytics::shares_of(l);
}

inline void Economy::plan_cfirm(CFirm& f) const {
    f.Yd = f.Ze;
    const LabourPlan lp = cfirm_labour_plan(f.Yd, f.K, p_.nu, f.a * std::exp(p_.g), f.N());
    f.Nd = lp.Nd;
    f.eta = lp.eta;
    f.upsilon_d = lp.upsilon_d;
}

inline void Economy::plan_kfirm(KFirm& f) const {
    f.Yd = kfirm_desired_output(f.Ze, f.V, p_.xi, p_.delta);
    const LabourPlan lp = kfirm_labour_plan(f.Yd, f.a * std::exp(p_.g), f.N());
    f.Nd = lp.Nd;
    f.eta = lp.eta;
}

// ------------------------------------------------------------------- entry

inline void Economy::spawn_entrants(std::vector<int>& unemployed) {
    auto spawn = [&](auto& pool, std::size_t i, AgentKind kind, const auto& tmpl, double Pbar) {
        auto& f = pool[i];
        Substream s = stream(kind, i, Purpose::Entry);
        std::vector<std::size_t> incumbents;
        for (std::size_t k = 0; k < pool.size(); ++k)
            if (!pool[k].bankrupt && !pool[k].entrant) incumbents.push_back(k);
        const auto& src = incumbents.empty() ? tmpl : pool[incumbents[s.below(incumbents.size())]];
        using F = std::decay_t<decltype(f)>;
        F e{};
        e.a = e.a_prev = src.a;
        e.Ze = src.Ze;
        if constexpr (std::is_same_v<F, CFirm>) {
            e.K = src.K;
            e.KE = src.KE;
            e.E = e.KE;
        }
        e.P = Pbar;
        e.w = wbar_;
        e.bank = static_cast<int>(s.below(banks_.size()));
        e.entrant = true;
        const int slot = kind == AgentKind::CFirm ? static_cast<int>(i) : p_.n_cfirms + static_cast<int>(i);
        if (!unemployed.empty()) {
            const auto k = static_cast<std::size_t>(s.below(unemployed.size()));
            const int h = unemployed[k];
            unemployed[k] = unemployed.back();
            unemployed.pop_back();
            hh_[static_cast<std::size_t>(h)].employer = slot;
            e.workers.push_back(h);
        } else {
            ++stats_.entrants_without_worker;
        }
        f = std::move(e);
    };
    for (std::size_t i = 0; i < cf_.size(); ++i)
        if (cf_[i].bankrupt) {
            spawn(cf_, i, AgentKind::CFirm, c_template_, Pbar_c_);
            plan_cfirm(cf_[i]);
        }
    for (std::size_t j = 0; j < kf_.size(); ++j)
        if (kf_[j].bankrupt) {
            spawn(kf_, j, AgentKind::KFirm, k_template_, Pbar_k_);
            plan_kfirm(kf_[j]);
        }
}

// --------------------------------------------------------------- exit

/// Closes a bankrupt firm: workers leave, an overdraft is absorbed by the
/// deposit bank, outstanding principal is written off by each lender.
inline void Economy::write_off(FirmBase& f, bool c_class, std::vector<double>& bad_loans) {
    for (int h : f.workers) hh_[static_cast<std::size_t>(h)].employer = kNoEmployer;
    f.workers.clear();
    for (auto& l : f.loans) {
        if (!(l.outstanding > 0.0)) continue;
        banks_[static_cast<std::size_t>(l.bank)].L -= l.outstanding;
        bad_loans[static_cast<std::size_t>(l.bank)] += l.outstanding;
        f.D -= l.outstanding;
        f.E += l.outstanding;
    }
    f.loans.clear();
    if (f.M < 0.0) {
        const double over = -f.M;
        bad_loans[static_cast<std::size_t>(f.bank)] += over;
        (c_class ? flows_.defaults_C : flows_.defaults_K) += over;
        flows_.defaults_B += over;
        f.E += over;
        f.M = 0.0;
    }
    // Remaining equity is the scrapped capital.
    f.D = 0.0;
    f.E = 0.0;
    f.bankrupt = true;
}

/// Recapitalises bank b to its desired ratio from its depositors.
inline void Economy::bail_out(int b) {
    Bank& bank = banks_[static_cast<std::size_t>(b)];
    const double R_pre = std::max(bank.M + bank.E - bank.L, 0.0);
    const double target = std::max(bank.CRd * (bank.L + R_pre), 0.0);
    double X = target - bank.E;
    double base = 0.0;
    for (const auto& h : hh_)
        if (h.bank == b) base += h.M;
    for (const auto& f : cf_)
        if (f.bank == b && !f.bankrupt) base += f.M;
    for (const auto& f : kf_)
        if (f.bank == b && !f.bankrupt) base += f.M;
    const BailoutShare share = bailout_share(X, base);
    if (share.shortfall > 0.0) {
        ++stats_.bailout_shortfalls;
        stats_.bailout_shortfall += share.shortfall;
    }
    const double frac = share.fraction;
    if (!(frac > 0.0)) return;
    double taken = 0.0;
    for (auto& h : hh_)
        if (h.bank == b && h.M > 0.0) {
            const double cut = h.M * frac;
            h.M -= cut;
            flows_.bailout_H += cut;
            taken += cut;
        }
    auto firms = [&](auto& pool, double& row) {
        for (auto& f : pool)
            if (f.bank == b && !f.bankrupt && f.M > 0.0) {
                const double cut = f.M * frac;
                f.M -= cut;
                f.E -= cut;
                row += cut;
                taken += cut;
            }
    };
    firms(cf_, flows_.bailout_C);
    firms(kf_, flows_.bailout_K);
    X = taken;
    bank.E += X;
    bank.M -= X;
    flows_.bailout_B += X;
}

// -------------------------------------------------------------------- step

inline const PeriodRecord& Economy::step() {
    ++t_;
    const Params& p = p_;
    const MarketContext ctx{&p_, rng_, t_};
    flows_ = FlowLedger{};
    const std::size_t nb = banks_.size();

    for (auto& f : cf_) f.entrant = false;
    for (auto& f : kf_) f.entrant = false;

    // 1. entry
    std::vector<int> unemployed;
    for (std::size_t h = 0; h < hh_.size(); ++h)
        if (!hh_[h].employed()) unemployed.push_back(static_cast<int>(h));
    spawn_entrants(unemployed);

    // Opening stocks.
    double MH0 = 0.0, MC0 = 0.0, MK0 = 0.0, MB0 = 0.0, R0 = 0.0, A0 = 0.0;
    std::vector<double> dep_start(nb, 0.0);
    for (const auto& h : hh_) {
        MH0 += h.M;
        dep_start[static_cast<std::size_t>(h.bank)] += h.M;
    }
    for (const auto& f : cf_) {
        MC0 += f.M;
        dep_start[static_cast<std::size_t>(f.bank)] += f.M;
    }
    for (const auto& f : kf_) {
        MK0 += f.M;
        dep_start[static_cast<std::size_t>(f.bank)] += f.M;
    }
    for (auto& b : banks_) {
        MB0 += b.M;
        R0 += b.R;
        A0 += b.A;
        b.B = 0.0;
    }

    // 2. labour market
    FirmSlots fs = slots();
    for (int k = 0; k < fs.size(); ++k) {
        FirmBase& f = fs[k];
        Substream s = stream(fs.kind(k), fs.local(k), Purpose::Wage);
        f.w = wage_update(f.w, hiring_target(f.eta), wbar_, p.sigma_w, p.gamma_w, s.normal(), floor_w());
    }
    labour_market(fs, hh_, ctx);

    // 3. production, prices and household income
    double wage_bill = 0.0, employment = 0.0;
    for (std::size_t i = 0; i < cf_.size(); ++i) {
        CFirm& f = cf_[i];
        f.a_prev = f.a;
        f.a = productivity_step(f.a, p.g, p.sigma_a, stream(AgentKind::CFirm, i, Purpose::Productivity).normal());
        f.Y = std::min(f.a * f.N(), f.K / p.nu);
        f.W = f.w * f.N();
        f.P = cfirm_price_update(f.P, f.V, Pbar_c_, p.sigma_P, p.gamma_P, stream(AgentKind::CFirm, i, Purpose::Price).normal(),
                                 floor_P());
        f.Z = f.Q = f.revenue = 0.0;
        wage_bill += f.W;
        employment += f.N();
    }
    for (std::size_t j = 0; j < kf_.size(); ++j) {
        KFirm& f = kf_[j];
        f.a_prev = f.a;
        f.a = productivity_step(f.a, p.g, p.sigma_a, stream(AgentKind::KFirm, j, Purpose::Productivity).normal());
        f.Y = f.a * f.N();
        f.W = f.w * f.N();
        f.P = kfirm_price_update(f.P, f.V, f.Vd, Pbar_k_, p.sigma_P, p.gamma_P,
                                 stream(AgentKind::KFirm, j, Purpose::Price).normal(), floor_P());
        f.Z = f.Q = f.revenue = 0.0;
        wage_bill += f.W;
        employment += f.N();
    }
    for (const auto& f : cf_) flows_.wages_C += f.W;
    for (const auto& f : kf_) flows_.wages_K += f.W;
    for (auto& h : hh_) {
        const double wage = h.employed() ? fs[h.employer].w : 0.0;
        h.Y = household_income(h.employed(), wage, h.M, p.r_M);
        h.Ed = household_desired_expenditure(h.Y, h.M, p.c);
        flows_.wages_H += wage;
        flows_.dep_interest_H += p.r_M * h.M;
    }

    // 4. consumption
    consumption_market(cf_, hh_, ctx);

    // 5. investment
    for (auto& f : cf_) {
        f.IP = firm_interest_and_principal(f.loans, p.rho).interest;
        const double Pi = firm_profit(f.P, f.Q, p.r_M, f.M, f.W, f.IP);
        const double alpha = std::log(f.a) - std::log(f.a_prev);
        const double PY = f.P * f.Y;
        const double pi_share = PY > 0.0 ? Pi / PY : 0.0;
        f.dd = cfirm_desired_debt(alpha, pi_share, p.d0, p.d1, p.d2);
        const InvestmentPlan plan = cfirm_investment_plan(f.dd, PY, f.D, Pi, f.M, f.W);
        f.ILd = plan.ILd;
        f.IEd = plan.IEd;
        f.Pi = Pi;
    }
    capital_market(cf_, kf_, ctx);

    // 6. credit
    for (auto& f : cf_) {
        f.Ld = std::max(f.IE + f.W - f.Pi - f.M, 0.0);
        f.lambda_e = expected_leverage(f.D, f.Ld, f.M, f.Pi, p.rho);
    }
    for (auto& f : kf_) {
        f.IP = firm_interest_and_principal(f.loans, p.rho).interest;
        f.Pi = firm_profit(f.P, f.Q, p.r_M, f.M, f.W, f.IP);
        f.Ld = std::max(f.W - f.Pi - f.M, 0.0);
        f.lambda_e = expected_leverage(f.D, f.Ld, f.M, f.Pi, p.rho);
    }
    {
        std::vector<std::vector<std::pair<double, double>>> exposure(nb);
        for (const auto& f : cf_)
            for (const auto& l : f.loans)
                if (l.active()) exposure[static_cast<std::size_t>(l.bank)].emplace_back(dm_c_.probability(f.lambda_e), l.outstanding);
        for (const auto& f : kf_)
            for (const auto& l : f.loans)
                if (l.active()) exposure[static_cast<std::size_t>(l.bank)].emplace_back(dm_k_.probability(f.lambda_e), l.outstanding);
        for (std::size_t b = 0; b < nb; ++b) {
            const CapitalPolicy cp = bank_capital_policy(exposure[b], p.kappa1, p.kappa2, p.bad_loan_ratio);
            banks_[b].CRd = cp.CRd;
            banks_[b].Be = cp.Be;
            banks_[b].CR = bank_capital_ratio(banks_[b].E, banks_[b].L);
        }
    }
    double credit_demand = 0.0;
    for (int k = 0; k < fs.size(); ++k) credit_demand += fs[k].Ld;
    credit_market(fs, banks_, ctx);

    // 7. firm accounting and exit
    std::vector<double> interest(nb, 0.0), bad(nb, 0.0);
    auto service = [&](FirmBase& f) {
        DebtService total;
        for (auto& l : f.loans) {
            if (l.origination >= t_) continue;
            const DebtService s = service_loan(l, p.rho);
            total.interest += s.interest;
            total.principal += s.principal;
            interest[static_cast<std::size_t>(l.bank)] += s.interest;
            banks_[static_cast<std::size_t>(l.bank)].L -= s.principal;
            flows_.repay_B += s.principal;
            flows_.interest_B += s.interest;
        }
        std::erase_if(f.loans, [](const Loan& l) { return !l.active(); });
        f.IP = total.interest;
        f.repaid = total.principal;
        return total;
    };
    std::vector<std::pair<double, bool>> obs_c, obs_k;
    int bankrupt_c = 0, bankrupt_k = 0;
    for (auto& f : cf_) {
        const double M0 = f.M;
        const DebtService ds = service(f);
        FirmFlows fl{f.revenue, f.W, ds.interest, ds.principal, f.L_new, f.IE, f.I};
        cfirm_accounting(f, fl, p);
        flows_.sales_C += f.revenue;
        flows_.investment_C += f.IE;
        flows_.repay_C += ds.principal;
        flows_.interest_C += ds.interest;
        flows_.dep_interest_C += p.r_M * M0;
        flows_.profit_C += f.Pi;
        flows_.loans_C += f.L_new;
    }
    for (auto& f : kf_) {
        const double M0 = f.M;
        const DebtService ds = service(f);
        FirmFlows fl{f.revenue, f.W, ds.interest, ds.principal, f.L_new, 0.0, 0.0};
        kfirm_accounting(f, fl, p);
        flows_.sales_K += f.revenue;
        flows_.repay_K += ds.principal;
        flows_.interest_K += ds.interest;
        flows_.dep_interest_K += p.r_M * M0;
        flows_.profit_K += f.Pi;
        flows_.loans_K += f.L_new;
    }
    for (const auto& f : cf_)
        for (const auto& l : f.loans)
            if (l.origination == t_) flows_.loans_B += l.principal;
    for (const auto& f : kf_)
        for (const auto& l : f.loans)
            if (l.origination == t_) flows_.loans_B += l.principal;

    // Snapshot shares before exits zero the output of failed firms.
    std::vector<double> y_c(cf_.size()), y_k(kf_.size());
    double real_consumption = 0.0, real_investment = 0.0, consumption = 0.0, investment = 0.0;
    double avg_a = 0.0, profits_c = 0.0, profits_k = 0.0, new_credit = 0.0;
    std::vector<double> pc(cf_.size()), pk(kf_.size());
    for (std::size_t i = 0; i < cf_.size(); ++i) {
        const CFirm& f = cf_[i];
        y_c[i] = f.Y;
        pc[i] = f.P;
        real_consumption += f.Q;
        real_investment += f.I;
        consumption += f.revenue;
        investment += f.IE;
        avg_a += f.a;
        profits_c += f.Pi;
        new_credit += f.L_new;
    }
    for (std::size_t j = 0; j < kf_.size(); ++j) {
        y_k[j] = kf_[j].Y;
        pk[j] = kf_[j].P;
        profits_k += kf_[j].Pi;
        new_credit += kf_[j].L_new;
    }
    if (!cf_.empty()) avg_a /= static_cast<double>(cf_.size());

    for (auto& f : cf_) {
        const bool bust = !(f.M > 0.0);
        obs_c.emplace_back(f.lambda_e, bust);
        if (bust) {
            write_off(f, true, bad);
            f.K = f.KE = 0.0;
            ++bankrupt_c;
        } else {
            f.Ze = update_expected_demand(f.Ze, f.Z, p.gamma_Z);
            plan_cfirm(f);
        }
    }
    for (auto& f : kf_) {
        const bool bust = !(f.M > 0.0);
        obs_k.emplace_back(f.lambda_e, bust);
        if (bust) {
            write_off(f, false, bad);
            ++bankrupt_k;
        } else {
            f.Ze = update_expected_demand(f.Ze, f.Z, p.gamma_Z);
            plan_kfirm(f);
            f.Vd = p.xi * f.Y;
        }
    }
    dm_c_.record_period(std::move(obs_c));
    dm_k_.record_period(std::move(obs_k));
    if (!dm_c_.refit()) ++stats_.logit_failures;
    if (!dm_k_.refit()) ++stats_.logit_failures;

    for (auto& h : hh_) {
        flows_.consumption_H += h.E;
        h.M = household_settle(h.M, h.Y, h.E);
    }

    // 8. banks
    for (auto& b : banks_) b.M = 0.0;
    for (const auto& h : hh_) banks_[static_cast<std::size_t>(h.bank)].M += h.M;
    for (const auto& f : cf_) banks_[static_cast<std::size_t>(f.bank)].M += f.M;
    for (const auto& f : kf_) banks_[static_cast<std::size_t>(f.bank)].M += f.M;
    int bankrupt_b = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        Bank& bank = banks_[b];
        bank_accounting(bank, interest[b], dep_start[b], p.r_M, bad[b]);
        flows_.dep_interest_B += bank.deposit_interest;
        flows_.profit_B += bank.Pi;
        bank.bankrupt = !(bank.E > 0.0);
        if (bank.bankrupt) {
            ++bankrupt_b;
            bail_out(static_cast<int>(b));
        }
    }
    double MB1 = 0.0, R1 = 0.0, A1 = 0.0, profits_b = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        Bank& bank = banks_[b];
        bank_settle_reserves(bank);
        bank.rL = bank_rate_update(bank.rL, bank.CRd, bank.CR, p.r_N, p.sigma_r, p.gamma_r,
                                   stream(AgentKind::Bank, b, Purpose::LoanRate).normal(), floor_r());
        MB1 += bank.M;
        R1 += bank.R;
        A1 += bank.A;
        profits_b += bank.Pi;
    }

    double MH1 = 0.0, MC1 = 0.0, MK1 = 0.0;
    for (const auto& h : hh_) MH1 += h.M;
    for (const auto& f : cf_) MC1 += f.M;
    for (const auto& f : kf_) MK1 += f.M;
    flows_.dM_H = MH1 - MH0;
    flows_.dM_C = MC1 - MC0;
    flows_.dM_K = MK1 - MK0;
    flows_.dM_B = MB1 - MB0;
    flows_.dR = R1 - R0;
    flows_.dA = A1 - A0;

    // Market indices for the next period.
    double ysum_c = 0.0, ysum_k = 0.0;
    for (double v : y_c) ysum_c += v;
    for (double v : y_k) ysum_k += v;
    if (ysum_c > 0.0) Pbar_c_ = weighted_mean_price(pc, y_c);
    else if (!pc.empty()) Pbar_c_ = std::accumulate(pc.begin(), pc.end(), 0.0) / static_cast<double>(pc.size());
    if (ysum_k > 0.0) Pbar_k_ = weighted_mean_price(pk, y_k);
    else if (!pk.empty()) Pbar_k_ = std::accumulate(pk.begin(), pk.end(), 0.0) / static_cast<double>(pk.size());
    if (employment > 0.0) wbar_ = wage_bill / employment;

    PeriodRecord r;
    r.t = static_cast<double>(t_);
    r.nominal_gdp = consumption + investment;
    r.consumption = consumption;
    r.investment = investment;
    r.real_consumption = real_consumption;
    r.real_investment = real_investment;
    r.cpi = Pbar_c_;
    r.kpi = Pbar_k_;
    r.real_gdp = r.nominal_gdp / Pbar_c_;
    r.avg_wage = wbar_;
    r.wage_bill = wage_bill;
    r.avg_productivity = avg_a;
    r.employment = employment;
    r.unemployment = 1.0 - employment / static_cast<double>(hh_.size());
    for (const auto& f : cf_) r.debt += f.D;
    for (const auto& f : kf_) r.debt += f.D;
    r.new_credit = new_credit;
    r.credit_demand = credit_demand;
    r.deposits = MB1;
    r.profits_c = profits_c;
    r.profits_k = profits_k;
    r.profits_b = profits_b;
    if (r.nominal_gdp > 0.0) {
        r.wage_share = wage_bill / r.nominal_gdp;
        r.profit_share = (profits_c + profits_k) / r.nominal_gdp;
        r.debt_ratio = r.debt / r.nominal_gdp;
    }
    {
        std::vector<double> wealth(hh_.size());
        for (std::size_t h = 0; h < hh_.size(); ++h) wealth[h] = hh_[h].M;
        double total = 0.0;
        for (double v : wealth) total += v;
        r.gini = total > 0.0 ? analytics::gini(wealth) : 0.0;
    }
    std::vector<double> lb(nb);
    for (std::size_t b = 0; b < nb; ++b) lb[b] = banks_[b].L;
    const auto sc = analytics::shares_of(y_c), sk = analytics::shares_of(y_k), sb = analytics::shares_of(lb);
    r.hpi_c = analytics::hpi(sc, prev_share_c_);
    r.hpi_k = analytics::hpi(sk, prev_share_k_);
    r.hpi_b = analytics::hpi(sb, prev_share_b_);
    r.hhi_c = sc.size() > 1 ? analytics::hhi_normalized(sc) : 1.0;
    r.hhi_k = sk.size() > 1 ? analytics::hhi_normalized(sk) : 1.0;
    r.hhi_b = sb.size() > 1 ? analytics::hhi_normalized(sb) : 1.0;
    prev_share_c_ = sc;
    prev_share_k_ = sk;
    prev_share_b_ = sb;
    r.bankrupt_c = bankrupt_c;
    r.bankrupt_k = bankrupt_k;
    r.bankrupt_b = bankrupt_b;
    if (opt_.debtrank) {
        const DebtRankValue dr = debtrank_policy(credit_network(), opt_.dr_policy, {}, 1.0, opt_.dr_convention);
        r.debtrank = dr.total();
        r.debtrank_b = dr.banks;
        r.debtrank_f = dr.firms;
    }
    audit_ = sfc_audit(flows_, balance_sheet(), r.nominal_gdp, p.audit_tolerance);
    r.sfc_residual = audit_.max_residual;
    if (p.audit && !audit_.ok()) throw AuditFailure(audit_, t_);
    last_ = r;
    return last_;
}

// ------------------------------------------------------------------- views

inline CreditNetwork Economy::credit_network() const {
    const int nc = static_cast<int>(cf_.size());
    CreditNetwork net(static_cast<int>(banks_.size()), nc + static_cast<int>(kf_.size()));
    for (int i = 0; i < nc; ++i) {
        const CFirm& f = cf_[static_cast<std::size_t>(i)];
        for (const auto& l : f.loans) net.at(l.bank, i) += l.outstanding;
        net.firm_assets[static_cast<std::size_t>(i)] = std::max(f.M, 0.0) + f.KE;
    }
    for (std::size_t j = 0; j < kf_.size(); ++j) {
        const int slot = nc + static_cast<int>(j);
        for (const auto& l : kf_[j].loans) net.at(l.bank, slot) += l.outstanding;
        net.firm_assets[static_cast<std::size_t>(slot)] = std::max(kf_[j].M, 0.0);
        net.firm_is_c[static_cast<std::size_t>(slot)] = false;
    }
    for (std::size_t b = 0; b < banks_.size(); ++b) net.bank_assets[b] = banks_[b].L + banks_[b].R;
    return net;
}

inline BalanceSheet Economy::balance_sheet() const {
    BalanceSheet bs;
    for (const auto& h : hh_) bs.M_H += h.M;
    std::vector<double> by_bank(banks_.size(), 0.0);
    double loan_total = 0.0;
    auto loans_of = [&](const FirmBase& f) {
        for (const auto& l : f.loans) {
            by_bank[static_cast<std::size_t>(l.bank)] += l.outstanding;
            loan_total += l.outstanding;
        }
    };
    for (const auto& f : cf_) {
        bs.KE += f.KE;
        bs.M_C += f.M;
        bs.D_C += f.D;
        bs.E_C += f.E;
        bs.firm_identity = std::max(bs.firm_identity, std::abs(f.KE + f.M - f.D - f.E));
        loans_of(f);
    }
    for (const auto& f : kf_) {
        bs.M_K += f.M;
        bs.D_K += f.D;
        bs.E_K += f.E;
        bs.firm_identity = std::max(bs.firm_identity, std::abs(f.M - f.D - f.E));
        loans_of(f);
    }
    for (std::size_t b = 0; b < banks_.size(); ++b) {
        const Bank& bank = banks_[b];
        bs.M_B += bank.M;
        bs.L_B += bank.L;
        bs.R += bank.R;
        bs.A += bank.A;
        bs.E_B += bank.E;
        bs.loan_records = std::max(bs.loan_records, std::abs(bank.L - by_bank[b]));
    }
    bs.loan_records = std::max(bs.loan_records, std::abs(loan_total - bs.D_C - bs.D_K));
    return bs;
}

inline Snapshot Economy::snapshot() const {
    Snapshot s;
    s.t = t_;
    int id = 0;
    for (const auto& f : cf_) {
        FirmRow r;
        r.cls = 'C';
        r.id = id++;
        r.output = f.Y;
        r.price = f.P;
        r.wage = f.w;
        r.workers = f.N();
        r.deposits = f.M;
        r.debt = f.D;
        r.equity = f.E;
        r.capital = f.K;
        const double den = f.KE + f.M;
        r.leverage = den > 0.0 ? f.D / den : 0.0;
        r.loans = static_cast<int>(f.loans.size());
        s.firms.push_back(r);
    }
    for (const auto& f : kf_) {
        FirmRow r;
        r.cls = 'K';
        r.id = id++;
        r.output = f.Y;
        r.price = f.P;
        r.wage = f.w;
        r.workers = f.N();
        r.deposits = f.M;
        r.debt = f.D;
        r.equity = f.E;
        r.leverage = f.M > 0.0 ? f.D / f.M : 0.0;
        r.loans = static_cast<int>(f.loans.size());
        s.firms.push_back(r);
    }
    for (std::size_t b = 0; b < banks_.size(); ++b) {
        const Bank& bank = banks_[b];
        s.banks.push_back({static_cast<int>(b), bank.L, bank.M, bank.R, bank.A, bank.E, bank.rL});
    }
    for (const auto& h : hh_) s.household_wealth.push_back(h.M);
    s.network = credit_network();
    return s;
}

// --------------------------------------------------------------------- run

struct RunOptions {
    EngineOptions engine;
    bool record_burn_in = false;
    int burn_in = -1;    // <0: the scenario's value
    int recorded = -1;   // <0: the scenario's value
};

/// One complete run. Real GDP is rebased so the first recorded period is
/// valued at that period's consumer price index.
inline Trace run(const Params& base, const Scenario& sc, std::uint64_t seed, const RunOptions& opt = {}) {
    const Params p = apply_scenario(base, sc);
    const int burn = opt.burn_in >= 0 ? opt.burn_in : sc.burn_in_steps;
    const int rec = opt.recorded >= 0 ? opt.recorded : sc.recorded_steps;
    Economy eco(p, seed, opt.engine);
    Trace tr;
    tr.scenario = sc.name;
    tr.seed = seed;
    tr.burn_in = burn;
    tr.includes_burn_in = opt.record_burn_in;
    double cpi_base = 0.0;
    for (int k = 1; k <= burn + rec; ++k) {
        const PeriodRecord& r = eco.step();
        if (k == burn + 1 || (k == 1 && burn == 0)) cpi_base = r.cpi;
        if (k > burn || opt.record_burn_in) tr.records.push_back(r);
        if (opt.engine.snapshot_periods.count(k)) tr.snapshots.push_back(eco.snapshot());
    }
    if (cpi_base > 0.0)
        for (auto& r : tr.records) r.real_gdp *= cpi_base;
    return tr;
}

}  // namespace abm
