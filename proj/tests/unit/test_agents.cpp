#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "abm/agents.hpp"
#include "abm/rng.hpp"

using namespace abm;

namespace {

// Plain full-batch gradient descent on the same penalised likelihood, written
// independently of the Newton solver.
std::pair<double, double> logit_by_gradient_descent(const std::vector<std::pair<double, bool>>& d, double ridge,
                                                    int iters, double lr) {
    double b0 = 0.0, b1 = 0.0;
    const double n = static_cast<double>(d.size());
    for (int it = 0; it < iters; ++it) {
        double g0 = 0.0, g1 = ridge * b1;
        for (const auto& [x, y] : d) {
            const double p = 1.0 / (1.0 + std::exp(-(b0 + b1 * x)));
            g0 += p - y;
            g1 += (p - y) * x;
        }
        b0 -= lr * g0 / n;
        b1 -= lr * g1 / n;
    }
    return {b0, b1};
}

}  // namespace

// ---------------------------------------------------------------- households

TEST(Household, Income) {
    EXPECT_NEAR(household_income(false, 0.0, 100.0, 0.00025), 0.025, 1e-15);
    EXPECT_NEAR(household_income(true, 0.9, 100.0, 0.00025), 0.925, 1e-15);
    EXPECT_EQ(household_income(false, 5.0, 0.0, 0.00025), 0.0);
}

TEST(Household, DesiredExpenditure) {
    EXPECT_DOUBLE_EQ(household_desired_expenditure(1.0, 10.0, 0.1), 2.0);
    EXPECT_DOUBLE_EQ(household_desired_expenditure(2.0, 5.0, 0.1), 2.5);
    EXPECT_EQ(household_desired_expenditure(0.0, 0.0, 0.1), 0.0);
}

TEST(Household, Settle) {
    EXPECT_DOUBLE_EQ(household_settle(10.0, 1.0, 2.0), 9.0);
    EXPECT_DOUBLE_EQ(household_settle(5.0, 0.5, 0.0), 5.5);
}

// A household that spends its full desired amount never goes negative.
TEST(Household, DepositsStayNonnegative) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int k = 0; k < 1000; ++k) {
        const double M = u(gen), Y = u(gen);
        const double Ed = household_desired_expenditure(Y, M, 0.1);
        EXPECT_GE(household_settle(M, Y, Ed), -1e-12);
    }
}

// ------------------------------------------------------------------ firms

TEST(Firm, ProductivityStep) {
    EXPECT_NEAR(productivity_step(1.0, 0.005, 0.015, 1.0), std::exp(0.0198875), 1e-15);
    EXPECT_NEAR(productivity_step(1.0, 0.005, 0.015, 1.0), 1.020087, 1e-6);
    EXPECT_NEAR(productivity_step(2.0, 0.0, 0.0, 3.0), 2.0, 1e-15);
}

// E[a'] = a e^g with the -sigma^2/2 correction.
TEST(Firm, ProductivityMomentsOverAgents) {
    const double g = 0.005, s = 0.015;
    const int n = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        Substream st = derive_stream(RngPolicy{5}, AgentKind::CFirm, static_cast<std::uint32_t>(i), 1, Purpose::Productivity);
        const double a = productivity_step(1.0, g, s, st.normal());
        sum += a;
        sumsq += a * a;
    }
    const double m = sum / n;
    const double sd = std::sqrt(sumsq / n - m * m);
    EXPECT_NEAR(m, std::exp(g), 3.0 * sd / std::sqrt(n));
    EXPECT_NEAR(sd, std::exp(g) * std::sqrt(std::exp(s * s) - 1.0), 0.05 * s);
}

TEST(Firm, ExpectedDemand) {
    EXPECT_DOUBLE_EQ(update_expected_demand(10.0, 20.0, 0.025), 10.25);
    EXPECT_DOUBLE_EQ(update_expected_demand(7.0, 7.0, 0.025), 7.0);
}

TEST(Firm, CPriceUpdate) {
    EXPECT_NEAR(cfirm_price_update(1.0, 0.0, 1.0, 0.015, 0.025, 1.0), 1.015, 1e-15);
    EXPECT_NEAR(cfirm_price_update(1.0, 0.0, 1.0, 0.015, 0.025, -1.0), 1.015, 1e-15);
    EXPECT_NEAR(cfirm_price_update(1.0, 2.0, 1.0, 0.015, 0.025, 1.0), 0.985, 1e-15);
    // drift toward the market mean
    EXPECT_NEAR(cfirm_price_update(1.0, 0.0, 2.0, 0.015, 0.025, 0.0), 1.025, 1e-15);
}

TEST(Firm, KPriceUpdate) {
    EXPECT_NEAR(kfirm_price_update(1.0, 1.0, 2.0, 1.0, 0.015, 0.025, 1.0), 1.015, 1e-15);
    EXPECT_NEAR(kfirm_price_update(1.0, 3.0, 2.0, 1.0, 0.015, 0.025, 1.0), 0.985, 1e-15);
}

TEST(Firm, PriceFloorHolds) {
    EXPECT_EQ(cfirm_price_update(1e-7, 5.0, 1e-7, 0.5, 0.025, 10.0, 1e-6), 1e-6);
}

TEST(Firm, FixedPointsAtZeroShock) {
    EXPECT_EQ(cfirm_price_update(1.3, 0.0, 1.3, 0.015, 0.025, 0.0), 1.3);
    EXPECT_EQ(cfirm_price_update(1.3, 1.0, 1.3, 0.015, 0.025, 0.0), 1.3);
    EXPECT_EQ(wage_update(0.8, 1.0, 0.8, 0.015, 0.025, 0.0), 0.8);
    EXPECT_EQ(bank_rate_update(0.005, 0.1, 0.2, 0.005, 0.015, 0.025, 0.0), 0.005);
    EXPECT_EQ(update_expected_demand(4.0, 4.0, 0.025), 4.0);
}

TEST(Firm, WeightedMeanPrice) {
    const std::vector<double> P{1.0, 3.0}, Y{3.0, 1.0};
    EXPECT_DOUBLE_EQ(weighted_mean_price(P, Y), 1.5);
    const std::vector<double> Z{0.0, 0.0};
    EXPECT_THROW(weighted_mean_price(P, Z), std::domain_error);
    const std::vector<double> one{1.0};
    EXPECT_THROW(weighted_mean_price(P, one), std::invalid_argument);
}

TEST(Firm, DesiredDebt) {
    EXPECT_NEAR(cfirm_desired_debt(0.02, 0.1, 0.5, 3.0, 2.0), 0.76, 1e-15);
    EXPECT_NEAR(cfirm_desired_debt(0.02, 0.1, 0.5, 5.0, 3.0), 0.9, 1e-15);
}

TEST(Firm, InvestmentPlan) {
    const auto a = cfirm_investment_plan(0.76, 100.0, 50.0, 0.0, 0.0, 0.0);
    EXPECT_NEAR(a.ILd, 26.0, 1e-12);
    const auto b = cfirm_investment_plan(0.76, 100.0, 50.0, 5.0, 10.0, 50.0);
    EXPECT_NEAR(b.ILd, 26.0, 1e-12);
    EXPECT_EQ(b.IEd, 0.0);
    const auto c = cfirm_investment_plan(0.5, 100.0, 80.0, 1.0, 2.0, 1.0);
    EXPECT_EQ(c.ILd, 0.0);
    EXPECT_NEAR(c.IEd, 2.0, 1e-15);
}

TEST(Firm, CapitalUpdate) {
    CFirm f;
    f.K = 30.0;
    f.KE = 30.0;
    cfirm_capital_update(f, 1.0, 2.0, 0.0175);
    EXPECT_NEAR(f.K, 30.475, 1e-12);
    EXPECT_NEAR(f.KE, 31.475, 1e-12);
}

TEST(Firm, LabourPlan) {
    const auto c = cfirm_labour_plan(8.0, 30.0, 3.0, 1.0, 5);
    EXPECT_NEAR(c.upsilon_d, 0.8, 1e-15);
    EXPECT_NEAR(c.Nd, 8.0, 1e-12);
    EXPECT_NEAR(c.eta, 3.0, 1e-12);
    // demand above capacity is capped at full utilisation
    const auto cap = cfirm_labour_plan(20.0, 30.0, 3.0, 1.0, 0);
    EXPECT_EQ(cap.upsilon_d, 1.0);
    EXPECT_NEAR(cap.Nd, 10.0, 1e-12);
    const auto k = kfirm_labour_plan(12.0, 1.2, 4);
    EXPECT_NEAR(k.Nd, 10.0, 1e-12);
    EXPECT_NEAR(k.eta, 6.0, 1e-12);
}

TEST(Firm, HiringTargetTruncates) {
    EXPECT_EQ(hiring_target(2.9), 2);
    EXPECT_EQ(hiring_target(-2.9), -2);
    EXPECT_EQ(hiring_target(0.4), 0);
    EXPECT_EQ(hiring_target(NAN), 0);
}

TEST(Firm, WageUpdate) {
    EXPECT_NEAR(wage_update(1.0, 1.0, 1.2, 0.015, 0.025, 2.0), 1.035, 1e-15);
    EXPECT_NEAR(wage_update(1.0, -1.0, 1.2, 0.015, 0.025, 2.0), 0.975, 1e-15);
    // eta = 0 counts as a vacancy-free firm that still raises
    EXPECT_NEAR(wage_update(1.0, 0.0, 1.0, 0.015, 0.025, 1.0), 1.015, 1e-15);
}

TEST(Firm, KDesiredOutputAndInventory) {
    EXPECT_NEAR(kfirm_desired_output(10.0, 0.0, 0.1, 0.0175), 11.0, 1e-12);
    EXPECT_EQ(kfirm_desired_output(1.0, 100.0, 0.1, 0.0175), 0.0);
    EXPECT_NEAR(kfirm_inventory(4.0, 10.0, 9.0, 0.0175), 4.93, 1e-12);
}

// ------------------------------------------------------------------ loans

TEST(Loan, Amortisation) {
    const double A = amortisation_payment(1000.0, 0.005, 40);
    EXPECT_NEAR(A, 27.6455, 1e-4);
    EXPECT_DOUBLE_EQ(amortisation_payment(100.0, 0.0, 4), 25.0);
    EXPECT_THROW(amortisation_payment(1.0, 0.01, 0), std::invalid_argument);
}

TEST(Loan, InterestAndPrincipal) {
    Params p;
    const Loan l = make_loan(0, 0, 1000.0, 0.005, p, 0);
    const std::vector<Loan> v{l};
    const auto s = firm_interest_and_principal(v, p.rho);
    EXPECT_NEAR(s.interest, 2.6455, 1e-4);
    EXPECT_NEAR(s.principal, 25.0, 1e-12);
    EXPECT_NEAR(s.interest + s.principal, l.payment, 1e-12);
}

TEST(Loan, PrincipalSumsToOriginal) {
    Params p;
    for (double amount : {1.0, 1000.0, 123.456}) {
        Loan l = make_loan(0, 0, amount, 0.0073, p, 0);
        double repaid = 0.0;
        int periods = 0;
        while (l.active()) {
            repaid += service_loan(l, p.rho).principal;
            ++periods;
        }
        EXPECT_EQ(periods, p.n_repay);
        EXPECT_NEAR(repaid, amount, 1e-12 * amount);
        EXPECT_EQ(l.outstanding, 0.0);
        const auto after = service_loan(l, p.rho);
        EXPECT_EQ(after.principal, 0.0);
        EXPECT_EQ(after.interest, 0.0);
    }
}

// --------------------------------------------------------------- accounting

TEST(Accounting, CFirm) {
    Params p;
    p.r_M = 0.01;
    EXPECT_NEAR(firm_profit(1.0, 10.0, 0.01, 10.0, 8.0, 0.5), 1.6, 1e-12);
    CFirm f;
    f.M = 10.0;
    f.D = 20.0;
    f.KE = 30.0;
    f.K = 30.0;
    f.E = f.KE + f.M - f.D;
    FirmFlows fl;
    fl.revenue = 10.0;
    fl.W = 8.0;
    fl.IP = 0.5;
    fl.principal = 2.0;
    fl.L_new = 5.0;
    fl.IE = 3.0;
    fl.I = 3.0;
    cfirm_accounting(f, fl, p);
    EXPECT_NEAR(f.Pi, 1.6, 1e-12);
    EXPECT_NEAR(f.M, 11.6, 1e-12);
    EXPECT_NEAR(f.D, 23.0, 1e-12);
    EXPECT_NEAR(f.KE + f.M - f.D - f.E, 0.0, 1e-12);
}

TEST(Accounting, KFirm) {
    Params p;
    p.r_M = 0.0;
    KFirm f;
    f.M = 4.0;
    f.E = 4.0;
    FirmFlows fl;
    fl.revenue = 10.0;
    fl.W = 7.0;
    kfirm_accounting(f, fl, p);
    EXPECT_NEAR(f.Pi, 3.0, 1e-12);
    EXPECT_NEAR(f.M, 7.0, 1e-12);
    EXPECT_NEAR(f.M - f.D - f.E, 0.0, 1e-12);
}

// ------------------------------------------------------------------ banks

TEST(Bank, CapitalPolicy) {
    const std::vector<std::pair<double, double>> ex{{0.1, 100.0}};
    const auto cp = bank_capital_policy(ex, 0.06, 1.0);
    EXPECT_NEAR(cp.beta_e, 0.1, 1e-15);
    EXPECT_NEAR(cp.CRd, 0.16, 1e-15);
    EXPECT_NEAR(cp.Be, 10.0, 1e-12);
    const auto lit = bank_capital_policy(ex, 0.06, 1.0, BadLoanRatio::LoansOverExpected);
    EXPECT_NEAR(lit.beta_e, 10.0, 1e-12);
    const std::vector<std::pair<double, double>> none;
    EXPECT_EQ(bank_capital_policy(none, 0.06, 1.0).CRd, 0.06);
}

TEST(Bank, DefaultProbability) {
    EXPECT_NEAR(default_probability(1.0, -2.0, 4.0), 0.880797, 1e-6);
    EXPECT_NEAR(default_probability(0.5, -2.0, 4.0), 0.5, 1e-15);
    EXPECT_GT(default_probability(-1000.0, 0.0, 1.0), 0.0 - 1e-300);
    EXPECT_EQ(default_probability(1000.0, 0.0, 1.0), 1.0);
}

TEST(Bank, ExpectedLeverage) {
    EXPECT_NEAR(expected_leverage(100.0, 0.0, 40.0, 10.0, 0.025), 97.5 / 147.5, 1e-15);
    EXPECT_EQ(expected_leverage(10.0, 0.0, -50.0, -20.0, 0.025), 1.0);
}

TEST(Bank, LoanSupply) {
    EXPECT_EQ(loan_supply_decision(0.1, 0.2, 50.0), 50.0);
    EXPECT_EQ(loan_supply_decision(0.2, 0.2, 50.0), 0.0);
    EXPECT_EQ(loan_supply_decision(0.3, 0.2, 50.0), 0.0);
}

TEST(Bank, RateUpdate) {
    EXPECT_NEAR(bank_rate_update(0.005, 0.2, 0.2, 0.005, 0.015, 0.025, 1.0), 0.005075, 1e-15);
    EXPECT_NEAR(bank_rate_update(0.006, 0.1, 0.2, 0.005, 0.015, 0.025, 0.0), 0.005975, 1e-15);
}

TEST(Bank, AccountingAndReserves) {
    Bank b;
    b.L = 100.0;
    b.M = 90.0;
    b.E = 6.0;
    bank_accounting(b, 2.0, 80.0, 0.001, 1.0);
    EXPECT_NEAR(b.Pi, 2.0 - 0.08, 1e-15);
    EXPECT_NEAR(b.E, 6.0 + 1.92 - 1.0, 1e-12);
    bank_settle_reserves(b);
    EXPECT_NEAR(b.A, 100.0 - 90.0 - b.E, 1e-12);
    EXPECT_NEAR(b.R, 0.0, 1e-12);
    EXPECT_NEAR(b.R + b.L - b.A - b.M - b.E, 0.0, 1e-12);
    EXPECT_TRUE(std::isinf(bank_capital_ratio(1.0, 0.0)));
}

// ------------------------------------------------------------ default model

TEST(Logit, SeparableDataCentred) {
    std::vector<std::pair<double, bool>> d;
    for (int k = 0; k < 50; ++k) d.emplace_back(0.0, false);
    for (int k = 0; k < 50; ++k) d.emplace_back(1.0, true);
    const auto fit = fit_logit(d, 1e-4);
    EXPECT_TRUE(fit.converged);
    EXPECT_GT(fit.theta1, 0.0);
    EXPECT_NEAR(default_probability(0.5, fit.theta0, fit.theta1), 0.5, 1e-6);
}

TEST(Logit, SymmetricDataZeroIntercept) {
    std::vector<std::pair<double, bool>> d;
    for (int k = 0; k < 30; ++k) d.emplace_back(-1.0, false), d.emplace_back(1.0, true);
    for (int k = 0; k < 10; ++k) d.emplace_back(-1.0, true), d.emplace_back(1.0, false);
    const auto fit = fit_logit(d, 1e-4);
    EXPECT_NEAR(fit.theta0, 0.0, 1e-9);
    EXPECT_NEAR(fit.theta1, std::log(3.0), 1e-4);
}

TEST(Logit, MatchesGradientDescentOracle) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<double, bool>> d;
    for (int k = 0; k < 300; ++k) {
        const double x = u(gen);
        d.emplace_back(x, u(gen) < 1.0 / (1.0 + std::exp(-(-2.0 + 3.0 * x))));
    }
    const auto fit = fit_logit(d, 1e-4);
    ASSERT_TRUE(fit.converged);
    const auto [b0, b1] = logit_by_gradient_descent(d, 1e-4, 60000, 4.0);
    EXPECT_NEAR(fit.theta0, b0, 1e-4);
    EXPECT_NEAR(fit.theta1, b1, 1e-4);
}

TEST(Logit, ColdStartKeptWithoutBothLabels) {
    std::vector<std::pair<double, bool>> d{{0.3, false}, {0.9, false}};
    const auto th = fit_default_model(d, {-3.0, 4.0});
    EXPECT_EQ(th.first, -3.0);
    EXPECT_EQ(th.second, 4.0);
}

TEST(Logit, DefaultModelZeroRiskUntilFitted) {
    DefaultModel m(-3.0, 4.0, true, 2, 1e-4);
    EXPECT_EQ(m.probability(0.9), 0.0);
    m.record_period({{0.2, false}, {0.3, false}});
    EXPECT_TRUE(m.refit());
    EXPECT_FALSE(m.fitted());
    m.record_period({{0.9, true}, {0.1, false}});
    EXPECT_TRUE(m.refit());
    EXPECT_TRUE(m.fitted());
    EXPECT_GT(m.probability(0.9), m.probability(0.1));

    DefaultModel cold(-3.0, 4.0, false, 2, 1e-4);
    EXPECT_NEAR(cold.probability(0.5), default_probability(0.5, -3.0, 4.0), 1e-15);
}

TEST(Logit, WindowDropsOldPeriods) {
    DefaultModel m(-3.0, 4.0, true, 1, 1e-4);
    m.record_period({{0.9, true}, {0.1, false}});
    m.record_period({{0.5, false}});
    EXPECT_TRUE(m.refit());
    EXPECT_FALSE(m.fitted());
}
