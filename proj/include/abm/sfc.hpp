#pragma once

// Stock-flow consistency audit. The engine records each flow twice, once
// from the payer's books and once from the receiver's, plus stock changes
// measured directly from balances. The transaction-flow matrix built from
// those records must balance along every row and column.

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace abm {

/// One period of flows. *_H household side, *_C / *_K firm side, *_B bank side.
struct FlowLedger {
    // households
    double wages_H = 0.0, consumption_H = 0.0, dep_interest_H = 0.0, dM_H = 0.0, bailout_H = 0.0;
    // C-firms
    double wages_C = 0.0, sales_C = 0.0, investment_C = 0.0, repay_C = 0.0, interest_C = 0.0;
    double dep_interest_C = 0.0, profit_C = 0.0, dM_C = 0.0, loans_C = 0.0, defaults_C = 0.0, bailout_C = 0.0;
    // K-firms
    double wages_K = 0.0, sales_K = 0.0, repay_K = 0.0, interest_K = 0.0;
    double dep_interest_K = 0.0, profit_K = 0.0, dM_K = 0.0, loans_K = 0.0, defaults_K = 0.0, bailout_K = 0.0;
    double dV_K = 0.0;  // K-goods inventories carry no book value
    // banks
    double interest_B = 0.0, dep_interest_B = 0.0, repay_B = 0.0, profit_B = 0.0, dM_B = 0.0, loans_B = 0.0;
    double dR = 0.0, dA = 0.0, defaults_B = 0.0, bailout_B = 0.0;
};

enum TfmColumn { kHouseholds, kCCurrent, kCCapital, kKCurrent, kKCapital, kBCurrent, kBCapital, kCentralBank, kTfmCols };

enum TfmRow {
    kWages,
    kConsumption,
    kInvestment,
    kLoanRepayments,
    kLoanInterest,
    kDepositInterest,
    kProfits,
    kInventories,
    kChangeDeposits,
    kChangeDebt,
    kChangeReserves,
    kChangeAdvances,
    kLoanDefaults,
    kBailouts,
    kTfmRows
};

inline const char* tfm_row_name(int r) {
    static constexpr std::array<const char*, kTfmRows> names = {
        "Wages", "Consumption", "Investment", "Loan Repayments", "Loan Interest", "Deposit Interest", "Profits",
        "Inventories", "Change in Deposits", "Change in Debt", "Change in Reserves", "Change in Advances",
        "Loan Defaults", "Bailout Transfers"};
    return names[static_cast<std::size_t>(r)];
}

inline const char* tfm_col_name(int c) {
    static constexpr std::array<const char*, kTfmCols> names = {
        "Households", "C-Firms Current", "C-Firms Capital", "K-Firms Current", "K-Firms Capital",
        "Banks Current", "Banks Capital", "Central Bank"};
    return names[static_cast<std::size_t>(c)];
}

using Tfm = std::array<std::array<double, kTfmCols>, kTfmRows>;

/// Sign convention: sources of funds positive, uses negative.
inline Tfm build_tfm(const FlowLedger& f) {
    Tfm m{};
    m[kWages][kHouseholds] = f.wages_H;
    m[kWages][kCCurrent] = -f.wages_C;
    m[kWages][kKCurrent] = -f.wages_K;

    m[kConsumption][kHouseholds] = -f.consumption_H;
    m[kConsumption][kCCurrent] = f.sales_C;

    m[kInvestment][kCCapital] = -f.investment_C;
    m[kInvestment][kKCurrent] = f.sales_K;

    m[kLoanRepayments][kCCapital] = -f.repay_C;
    m[kLoanRepayments][kKCapital] = -f.repay_K;
    m[kLoanRepayments][kBCapital] = f.repay_B;

    m[kLoanInterest][kCCurrent] = -f.interest_C;
    m[kLoanInterest][kKCurrent] = -f.interest_K;
    m[kLoanInterest][kBCurrent] = f.interest_B;

    m[kDepositInterest][kHouseholds] = f.dep_interest_H;
    m[kDepositInterest][kCCurrent] = f.dep_interest_C;
    m[kDepositInterest][kKCurrent] = f.dep_interest_K;
    m[kDepositInterest][kBCurrent] = -f.dep_interest_B;

    m[kProfits][kCCurrent] = -f.profit_C;
    m[kProfits][kCCapital] = f.profit_C;
    m[kProfits][kKCurrent] = -f.profit_K;
    m[kProfits][kKCapital] = f.profit_K;
    m[kProfits][kBCurrent] = -f.profit_B;
    m[kProfits][kBCapital] = f.profit_B;

    m[kInventories][kKCurrent] = f.dV_K;
    m[kInventories][kKCapital] = -f.dV_K;

    m[kChangeDeposits][kHouseholds] = -f.dM_H;
    m[kChangeDeposits][kCCapital] = -f.dM_C;
    m[kChangeDeposits][kKCapital] = -f.dM_K;
    m[kChangeDeposits][kBCapital] = f.dM_B;

    m[kChangeDebt][kCCapital] = f.loans_C;
    m[kChangeDebt][kKCapital] = f.loans_K;
    m[kChangeDebt][kBCapital] = -f.loans_B;

    m[kChangeReserves][kBCapital] = -f.dR;
    m[kChangeReserves][kCentralBank] = f.dR;

    m[kChangeAdvances][kBCapital] = f.dA;
    m[kChangeAdvances][kCentralBank] = -f.dA;

    m[kLoanDefaults][kCCapital] = f.defaults_C;
    m[kLoanDefaults][kKCapital] = f.defaults_K;
    m[kLoanDefaults][kBCapital] = -f.defaults_B;

    m[kBailouts][kHouseholds] = -f.bailout_H;
    m[kBailouts][kCCapital] = -f.bailout_C;
    m[kBailouts][kKCapital] = -f.bailout_K;
    m[kBailouts][kBCapital] = f.bailout_B;
    return m;
}

/// Aggregate stocks for the balance-sheet matrix. Equities are the values
/// carried on each agent's books, not recomputed from the identity.
struct BalanceSheet {
    double KE = 0.0;                        // capital (book value)
    double M_H = 0.0, M_C = 0.0, M_K = 0.0, M_B = 0.0;  // deposits held / owed
    double D_C = 0.0, D_K = 0.0, L_B = 0.0;              // debt owed / loans held
    double R = 0.0, A = 0.0;
    double E_C = 0.0, E_K = 0.0, E_B = 0.0;
    double firm_identity = 0.0;             // max |assets - debt - equity| over firms
    double loan_records = 0.0;              // |sum of loan records - sum of firm debt|
};

struct AuditReport {
    double tolerance = 0.0;
    double max_residual = 0.0;
    std::string worst;
    bool ok() const noexcept { return max_residual <= tolerance; }
};

inline AuditReport sfc_audit(const FlowLedger& flows, const BalanceSheet& bs, double nominal_gdp, double rel_tol) {
    AuditReport rep;
    rep.tolerance = rel_tol * std::max(std::abs(nominal_gdp), 1.0);
    auto note = [&](double v, const std::string& what) {
        const double a = std::abs(v);
        if (!(a <= rep.max_residual)) {  // also catches NaN
            rep.max_residual = std::isnan(a) ? INFINITY : a;
            rep.worst = what;
        }
    };
    const Tfm m = build_tfm(flows);
    for (int r = 0; r < kTfmRows; ++r) {
        double s = 0.0;
        for (int c = 0; c < kTfmCols; ++c) s += m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        note(s, std::string("row '") + tfm_row_name(r) + "'");
    }
    for (int c = 0; c < kTfmCols; ++c) {
        double s = 0.0;
        for (int r = 0; r < kTfmRows; ++r) s += m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        note(s, std::string("column '") + tfm_col_name(c) + "'");
    }
    // Balance-sheet matrix: financial rows net to zero, equities sum to capital.
    note(bs.M_H + bs.M_C + bs.M_K - bs.M_B, "balance sheet row 'Deposits'");
    note(bs.L_B - bs.D_C - bs.D_K, "balance sheet row 'Debt'");
    const double E_H = bs.M_H;
    const double E_CB = bs.A - bs.R;
    note(E_H + bs.E_C + bs.E_K + bs.E_B + E_CB - bs.KE, "balance sheet row 'Equity' (sum of equities - K)");
    note(bs.R + bs.L_B - bs.A - bs.M_B - bs.E_B, "balance sheet column 'Banks'");
    note(bs.firm_identity, "firm balance-sheet identity");
    note(bs.loan_records, "loan records vs firm debt");
    return rep;
}

inline std::string describe(const AuditReport& r, long long t) {
    std::ostringstream os;
    os << "SFC audit failed at t=" << t << ": " << r.worst << " residual " << r.max_residual << " exceeds "
       << r.tolerance;
    return os.str();
}

}  // namespace abm
