#pragma once

// Agent records and the behavioural rules each agent applies on its own,
// before any market interaction.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "config.hpp"

namespace abm {

inline constexpr int kNoEmployer = -1;

struct Household {
    double M = 0.0;          // deposits
    int employer = kNoEmployer;  // firm slot: [0, N_C) C-firms, [N_C, N_C + N_K) K-firms
    int bank = 0;            // deposit bank
    double Y = 0.0;          // income this period
    double Ed = 0.0;         // desired expenditure
    double E = 0.0;          // actual expenditure
    bool employed() const noexcept { return employer != kNoEmployer; }
};

struct Loan {
    int bank = 0;
    int firm = 0;
    double principal = 0.0;    // original amount
    double outstanding = 0.0;
    double payment = 0.0;      // amortisation cost A per period
    double rate = 0.0;
    int periods_remaining = 0;
    std::int64_t origination = 0;

    double principal_payment(double rho) const noexcept { return std::min(rho * principal, outstanding); }
    double interest(double rho) const noexcept { return payment - rho * principal; }
    bool active() const noexcept { return periods_remaining > 0 && outstanding > 0.0; }
};

/// State shared by both firm classes.
struct FirmBase {
    double a = 1.0;          // labour productivity
    double a_prev = 1.0;
    std::vector<int> workers;    // household ids
    double Y = 0.0;          // output
    double Z = 0.0;          // demand
    double Ze = 0.0;         // expected demand
    double V = 0.0;          // inventories (end of period)
    double Q = 0.0;          // quantity sold
    double P = 1.0;          // price
    double w = 1.0;          // wage
    double W = 0.0;          // wage bill
    double Pi = 0.0;         // profits
    double M = 0.0;          // deposits
    double D = 0.0;          // debt
    double E = 0.0;          // equity
    double Yd = 0.0;
    double Nd = 0.0;
    double eta = 0.0;
    double Ld = 0.0;         // desired loan
    double L_new = 0.0;      // loan obtained this period
    double lambda_e = 0.0;   // expected leverage
    double revenue = 0.0;
    double IP = 0.0;         // interest paid this period
    double repaid = 0.0;     // principal repaid this period
    int bank = 0;            // deposit bank
    bool bankrupt = false;
    bool entrant = false;
    std::vector<Loan> loans;

    int N() const noexcept { return static_cast<int>(workers.size()); }
};

struct CFirm : FirmBase {
    double K = 0.0;          // capital stock (goods)
    double KE = 0.0;         // capital expenditure stock (money)
    double dd = 0.0;         // desired debt ratio
    double ILd = 0.0;        // desired investment loan
    double IEd = 0.0;        // desired investment expenditure
    double I = 0.0;          // investment bought (goods)
    double IE = 0.0;         // investment expenditure (money)
    double upsilon_d = 1.0;  // desired utilisation
};

struct KFirm : FirmBase {
    double Vd = 0.0;         // desired inventories
};

struct Bank {
    double L = 0.0;          // loans outstanding
    double M = 0.0;          // deposits held
    double R = 0.0;          // reserves
    double A = 0.0;          // central-bank advances
    double E = 0.0;          // equity
    double rL = 0.0;         // loan rate
    double CRd = 0.0;        // desired capital ratio
    double CR = 0.0;         // actual capital ratio
    double Be = 0.0;         // expected bad loans
    double B = 0.0;          // bad loans this period
    double Pi = 0.0;         // profits
    double interest_received = 0.0;
    double deposit_interest = 0.0;
    bool bankrupt = false;
};

// ---------------------------------------------------------------- households

inline double household_income(bool employed, double wage, double M, double r_M) noexcept {
    return (employed ? wage : 0.0) + r_M * M;
}

inline double household_desired_expenditure(double Y, double M, double c) noexcept { return Y + c * M; }

inline double household_settle(double M, double Y, double E) {
    const double next = M + Y - E;
    // Spending is capped by the budget, so only rounding can push this below 0.
    assert(next >= -1e-9 * std::max(1.0, M + Y));
    return std::max(next, 0.0);
}

// --------------------------------------------------------------------- firms

inline double productivity_step(double a, double g, double sigma_a, double eps) noexcept {
    return a * std::exp(g - 0.5 * sigma_a * sigma_a + sigma_a * eps);
}

inline double update_expected_demand(double Ze, double Z, double gamma_Z) noexcept { return Ze + gamma_Z * (Z - Ze); }

/// x(1 +- sigma|eps|) + gamma(target - x), floored at `floor`.
inline double drift_toward(double x, bool up, double target, double sigma, double gamma, double eps,
                           double floor) noexcept {
    const double shock = sigma * std::abs(eps);
    const double next = x * (up ? 1.0 + shock : 1.0 - shock) + gamma * (target - x);
    return std::max(next, floor);
}

inline double cfirm_price_update(double P, double V_prev, double mean_price, double sigma_P, double gamma_P,
                                 double eps, double floor = 0.0) noexcept {
    return drift_toward(P, V_prev <= 0.0, mean_price, sigma_P, gamma_P, eps, floor);
}

inline double kfirm_price_update(double P, double V_prev, double Vd, double mean_price, double sigma_P,
                                 double gamma_P, double eps, double floor = 0.0) noexcept {
    return drift_toward(P, V_prev <= Vd, mean_price, sigma_P, gamma_P, eps, floor);
}

inline double wage_update(double w, double eta, double mean_wage, double sigma_w, double gamma_w, double eps,
                          double floor = 0.0) noexcept {
    return drift_toward(w, eta >= 0.0, mean_wage, sigma_w, gamma_w, eps, floor);
}

/// Output-weighted mean price. Throws when every weight is zero.
inline double weighted_mean_price(std::span<const double> prices, std::span<const double> outputs) {
    if (prices.size() != outputs.size()) throw std::invalid_argument("weighted_mean_price: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < prices.size(); ++k) {
        assert(outputs[k] >= 0.0);
        num += prices[k] * outputs[k];
        den += outputs[k];
    }
    if (!(den > 0.0)) throw std::domain_error("weighted_mean_price: all outputs are zero");
    return num / den;
}

inline double cfirm_desired_debt(double alpha, double pi_share, double d0, double d1, double d2) noexcept {
    return d0 + d1 * alpha + d2 * pi_share;
}

struct InvestmentPlan {
    double ILd = 0.0;
    double IEd = 0.0;
};

/// dd: desired debt ratio, PY: nominal output, D: current debt.
inline InvestmentPlan cfirm_investment_plan(double dd, double PY, double D, double Pi, double M, double W) noexcept {
    InvestmentPlan plan;
    plan.ILd = std::max(dd * PY - D, 0.0);
    plan.IEd = std::max(plan.ILd + Pi + M - W, 0.0);
    return plan;
}

inline void cfirm_capital_update(CFirm& f, double I, double IE, double delta) noexcept {
    assert(I >= 0.0 && IE >= 0.0);
    f.K = f.K * (1.0 - delta) + I;
    f.KE = f.KE * (1.0 - delta) + IE;
}

struct LabourPlan {
    double Nd = 0.0;
    double eta = 0.0;
    double upsilon_d = 1.0;
};

inline LabourPlan cfirm_labour_plan(double Yd, double K, double nu, double a_expected, int N) noexcept {
    LabourPlan plan;
    if (K > 0.0) {
        plan.upsilon_d = std::min(nu * Yd / K, 1.0);
        plan.Nd = plan.upsilon_d * K / (nu * a_expected);
    } else {
        plan.upsilon_d = 0.0;
        plan.Nd = 0.0;
    }
    plan.eta = plan.Nd - N;
    return plan;
}

inline LabourPlan kfirm_labour_plan(double Yd, double a_expected, int N) noexcept {
    LabourPlan plan;
    plan.Nd = Yd / a_expected;
    plan.eta = plan.Nd - N;
    return plan;
}

/// Whole workers to hire (>0) or fire (<0): eta truncated toward zero.
inline int hiring_target(double eta) noexcept {
    if (!std::isfinite(eta)) return 0;
    const double t = std::trunc(eta);
    constexpr double cap = 1e9;
    return static_cast<int>(std::clamp(t, -cap, cap));
}

inline double kfirm_desired_output(double Ze, double V, double xi, double delta) noexcept {
    return std::max(Ze * (1.0 + xi) - V * (1.0 - delta), 0.0);
}

inline double amortisation_payment(double L, double r, int n) {
    if (n < 1) throw std::invalid_argument("amortisation_payment: n must be >= 1");
    if (r == 0.0) return L / n;
    const double f = std::pow(1.0 + r, n);
    return L * r * f / (f - 1.0);
}

inline Loan make_loan(int bank, int firm, double amount, double rate, const Params& p, std::int64_t t) {
    Loan loan;
    loan.bank = bank;
    loan.firm = firm;
    loan.principal = amount;
    loan.outstanding = amount;
    loan.rate = rate;
    loan.payment = amortisation_payment(amount, rate, p.n_repay);
    loan.periods_remaining = p.n_repay;
    loan.origination = t;
    return loan;
}

struct DebtService {
    double interest = 0.0;
    double principal = 0.0;
};

/// Interest and principal due this period over active loans.
inline DebtService firm_interest_and_principal(std::span<const Loan> loans, double rho) noexcept {
    DebtService s;
    for (const auto& l : loans) {
        if (!l.active()) continue;
        s.interest += l.interest(rho);
        s.principal += l.periods_remaining == 1 ? l.outstanding : l.principal_payment(rho);
    }
    return s;
}

/// Applies one period of payments to a loan; returns (interest, principal).
inline DebtService service_loan(Loan& l, double rho) noexcept {
    DebtService s;
    if (!l.active()) return s;
    s.interest = l.interest(rho);
    s.principal = l.periods_remaining == 1 ? l.outstanding : l.principal_payment(rho);
    l.outstanding -= s.principal;
    --l.periods_remaining;
    if (l.periods_remaining == 0) l.outstanding = 0.0;
    return s;
}

inline double firm_profit(double P, double Q, double r_M, double M, double W, double IP) noexcept {
    return P * Q + r_M * M - W - IP;
}

/// Flows feeding one period of firm accounting.
struct FirmFlows {
    double revenue = 0.0;   // P * Q
    double W = 0.0;
    double IP = 0.0;
    double principal = 0.0; // repaid this period
    double L_new = 0.0;
    double IE = 0.0;        // C-firms only
    double I = 0.0;         // C-firms only
};

/// Profit, equity, deposits and debt after one period. Depreciation of the
/// capital-expenditure stock is charged to equity so the balance identity
/// KE + M = D + E survives KE decaying.
inline void cfirm_accounting(CFirm& f, const FirmFlows& fl, const Params& p) {
    const double M0 = f.M;
    const double KE_dep = p.delta * f.KE;
    f.Pi = fl.revenue + p.r_M * M0 - fl.W - fl.IP;
    f.E = f.E + f.Pi - KE_dep;
    f.M = M0 + f.Pi + fl.L_new - fl.principal - fl.IE;
    f.D = f.D + fl.L_new - fl.principal;
    cfirm_capital_update(f, fl.I, fl.IE, p.delta);
    assert(std::abs(f.KE + f.M - f.D - f.E) <= 1e-9 * std::max({1.0, std::abs(f.KE), std::abs(f.M), std::abs(f.D)}));
}

inline void kfirm_accounting(KFirm& f, const FirmFlows& fl, const Params& p) {
    const double M0 = f.M;
    f.Pi = fl.revenue + p.r_M * M0 - fl.W - fl.IP;
    f.E = f.E + f.Pi;
    f.M = M0 + f.Pi + fl.L_new - fl.principal;
    f.D = f.D + fl.L_new - fl.principal;
    assert(std::abs(f.M - f.D - f.E) <= 1e-9 * std::max({1.0, std::abs(f.M), std::abs(f.D)}));
}

/// V' = V(1 - delta) + Y - Q.
inline double kfirm_inventory(double V, double Y, double Q, double delta) noexcept {
    return std::max(V * (1.0 - delta) + Y - Q, 0.0);
}

inline double expected_debt(double D, double Ld, double rho) noexcept { return D * (1.0 - rho) + Ld; }

/// lambda^e = D^e / (M + Pi + D^e); a nonpositive denominator counts as maximal risk.
inline double expected_leverage(double D, double Ld, double M, double Pi, double rho) noexcept {
    const double De = expected_debt(D, Ld, rho);
    const double den = M + Pi + De;
    if (!(den > 0.0)) return 1.0;
    return De / den;
}

// --------------------------------------------------------------------- banks

inline double default_probability(double lambda_e, double theta0, double theta1) noexcept {
    const double z = theta0 + theta1 * lambda_e;
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double ez = std::exp(z);
    return ez / (1.0 + ez);
}

struct LogitFit {
    double theta0 = 0.0;
    double theta1 = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Penalised negative log-likelihood: -sum log p(y|x) + ridge/2 * theta1^2.
inline double logit_objective(std::span<const std::pair<double, bool>> data, double t0, double t1, double ridge) {
    double f = 0.5 * ridge * t1 * t1;
    for (const auto& [x, y] : data) {
        const double z = t0 + t1 * x;
        // log(1 + e^z) computed stably
        const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        f += softplus - (y ? z : 0.0);
    }
    return f;
}

/// Damped Newton on the penalised likelihood. The slope penalty keeps the
/// estimate finite when the classes are separable.
inline LogitFit fit_logit(std::span<const std::pair<double, bool>> data, double ridge, double t0 = 0.0,
                          double t1 = 0.0, int max_iter = 100) {
    LogitFit fit{t0, t1, false, 0};
    double f = logit_objective(data, t0, t1, ridge);
    for (int it = 0; it < max_iter; ++it) {
        double g0 = 0.0, g1 = ridge * fit.theta1;
        double h00 = 0.0, h01 = 0.0, h11 = ridge;
        for (const auto& [x, y] : data) {
            const double p = default_probability(x, fit.theta0, fit.theta1);
            const double r = p - (y ? 1.0 : 0.0);
            const double wgt = p * (1.0 - p);
            g0 += r;
            g1 += r * x;
            h00 += wgt;
            h01 += wgt * x;
            h11 += wgt * x * x;
        }
        const double det = h00 * h11 - h01 * h01;
        double s0, s1;
        if (det > 1e-300 && h00 > 0.0) {
            s0 = -(h11 * g0 - h01 * g1) / det;
            s1 = -(-h01 * g0 + h00 * g1) / det;
        } else {
            s0 = -g0;
            s1 = -g1;
        }
        double step = 1.0;
        double fn = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            fn = logit_objective(data, fit.theta0 + step * s0, fit.theta1 + step * s1, ridge);
            if (fn <= f + 1e-4 * step * (g0 * s0 + g1 * s1)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        fit.iterations = it + 1;
        if (!accepted) break;
        fit.theta0 += step * s0;
        fit.theta1 += step * s1;
        const double gnorm = std::hypot(g0, g1);
        const bool small_step = std::abs(step * s0) + std::abs(step * s1) < 1e-12 * (1.0 + std::abs(fit.theta0) + std::abs(fit.theta1));
        f = fn;
        if (gnorm < 1e-9 * std::max<std::size_t>(1, data.size()) || small_step) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) {
        // The last step may have stalled right at the optimum; accept a tiny gradient.
        double g0 = 0.0, g1 = ridge * fit.theta1;
        for (const auto& [x, y] : data) {
            const double r = default_probability(x, fit.theta0, fit.theta1) - (y ? 1.0 : 0.0);
            g0 += r;
            g1 += r * x;
        }
        fit.converged = std::hypot(g0, g1) < 1e-6 * std::max<std::size_t>(1, data.size());
    }
    return fit;
}

/// Logistic default model for one firm class, refitted on a rolling window
/// of (expected leverage, defaulted) observations.
class DefaultModel {
public:
    DefaultModel() = default;
    DefaultModel(double cold0, double cold1, bool zero_risk_until_fit, int window, double ridge)
        : theta0_(cold0), theta1_(cold1), zero_risk_(zero_risk_until_fit), window_(window), ridge_(ridge) {}

    double probability(double lambda_e) const noexcept {
        if (!fitted_ && zero_risk_) return 0.0;
        return default_probability(lambda_e, theta0_, theta1_);
    }

    void record_period(std::vector<std::pair<double, bool>> obs) {
        history_.push_back(std::move(obs));
        while (static_cast<int>(history_.size()) > window_) history_.pop_front();
    }

    /// Refits when the window holds both outcomes; otherwise keeps the current
    /// coefficients. Returns false when the optimiser fails to converge.
    bool refit() {
        std::vector<std::pair<double, bool>> data;
        bool any0 = false, any1 = false;
        for (const auto& period : history_)
            for (const auto& o : period) {
                data.push_back(o);
                (o.second ? any1 : any0) = true;
            }
        if (!any0 || !any1) return true;
        const LogitFit fit = fit_logit(data, ridge_, fitted_ ? theta0_ : 0.0, fitted_ ? theta1_ : 0.0);
        if (!fit.converged || !std::isfinite(fit.theta0) || !std::isfinite(fit.theta1)) {
            ++failures_;
            return false;
        }
        theta0_ = fit.theta0;
        theta1_ = fit.theta1;
        fitted_ = true;
        return true;
    }

    double theta0() const noexcept { return theta0_; }
    double theta1() const noexcept { return theta1_; }
    bool fitted() const noexcept { return fitted_; }
    int failures() const noexcept { return failures_; }

private:
    double theta0_ = -3.0;
    double theta1_ = 4.0;
    bool zero_risk_ = false;
    bool fitted_ = false;
    int window_ = 40;
    double ridge_ = 1e-4;
    int failures_ = 0;
    std::deque<std::vector<std::pair<double, bool>>> history_;
};

/// Fits (theta0, theta1); returns `cold` unchanged when either label is absent.
inline std::pair<double, double> fit_default_model(std::span<const std::pair<double, bool>> history,
                                                   std::pair<double, double> cold, double ridge = 1e-4) {
    bool any0 = false, any1 = false;
    for (const auto& o : history) (o.second ? any1 : any0) = true;
    if (!any0 || !any1) return cold;
    const LogitFit fit = fit_logit(history, ridge);
    if (!fit.converged) return cold;
    return {fit.theta0, fit.theta1};
}

struct CapitalPolicy {
    double CRd = 0.0;
    double Be = 0.0;
    double beta_e = 0.0;
};

/// exposures: (default probability, outstanding) per borrower.
inline CapitalPolicy bank_capital_policy(std::span<const std::pair<double, double>> exposures, double kappa1,
                                         double kappa2, BadLoanRatio mode = BadLoanRatio::ExpectedOverLoans) {
    CapitalPolicy cp;
    double L = 0.0;
    for (const auto& [prob, out] : exposures) {
        cp.Be += prob * out;
        L += out;
    }
    if (cp.Be > 0.0 && L > 0.0)
        cp.beta_e = mode == BadLoanRatio::ExpectedOverLoans ? cp.Be / L : L / cp.Be;
    cp.CRd = kappa1 + kappa2 * cp.beta_e;
    return cp;
}

inline double loan_supply_decision(double CRd, double CR, double Ld) noexcept { return CRd < CR ? Ld : 0.0; }

inline double bank_rate_update(double rL, double CRd, double CR, double r_N, double sigma_r, double gamma_r,
                               double eps, double floor = 0.0) noexcept {
    return drift_toward(rL, CRd >= CR, r_N, sigma_r, gamma_r, eps, floor);
}

inline double bank_capital_ratio(double E, double L) noexcept {
    return L > 0.0 ? E / L : std::numeric_limits<double>::infinity();
}

/// Bank profit and equity for the period. Bailouts are handled by the engine.
inline void bank_accounting(Bank& b, double interest_received, double deposits_start, double r_M, double bad_loans) {
    b.interest_received = interest_received;
    b.deposit_interest = r_M * deposits_start;
    b.Pi = interest_received - b.deposit_interest;
    b.B = bad_loans;
    b.E = b.E + b.Pi - bad_loans;
}

/// Advances cover any reserve shortfall; reserves close the balance sheet.
inline void bank_settle_reserves(Bank& b) noexcept {
    b.A = std::max(b.L - b.M - b.E, 0.0);
    b.R = b.A + b.M + b.E - b.L;
}

}  // namespace abm
