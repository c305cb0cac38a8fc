#pragma once

// DebtRank on the bipartite bank-firm credit network.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace abm {

/// Which propagation matrix carries distress along each edge direction.
enum class DebtRankConvention {
    // h_firm += W_B[b][firm] h_b and h_bank += W_F[firm][b] h_firm:
    // the indices as the update rule is written.
    Literal,
    // h_firm += W_F[firm][b] h_b (firm's funding share from b) and
    // h_bank += W_B[b][firm] h_firm (bank's exposure share to the firm).
    Exposure,
};

enum class InitialSetPolicy { EachBankMean, SingleLargestBank, Custom };

/// Banks x firms credit matrix with asset weights.
struct CreditNetwork {
    int n_banks = 0;
    int n_firms = 0;
    std::vector<double> credit;        // row-major, credit[b * n_firms + f]
    std::vector<double> bank_assets;   // L + R
    std::vector<double> firm_assets;   // M + KE for C-firms, M for K-firms
    std::vector<bool> firm_is_c;       // false: K-firm

    CreditNetwork() = default;
    CreditNetwork(int nb, int nf)
        : n_banks(nb), n_firms(nf), credit(static_cast<std::size_t>(nb) * static_cast<std::size_t>(nf), 0.0),
          bank_assets(static_cast<std::size_t>(nb), 0.0), firm_assets(static_cast<std::size_t>(nf), 0.0),
          firm_is_c(static_cast<std::size_t>(nf), true) {}

    double& at(int b, int f) { return credit[static_cast<std::size_t>(b) * static_cast<std::size_t>(n_firms) + static_cast<std::size_t>(f)]; }
    double at(int b, int f) const { return credit[static_cast<std::size_t>(b) * static_cast<std::size_t>(n_firms) + static_cast<std::size_t>(f)]; }

    double bank_total(int b) const {
        double s = 0.0;
        for (int f = 0; f < n_firms; ++f) s += at(b, f);
        return s;
    }
    double firm_total(int f) const {
        double s = 0.0;
        for (int b = 0; b < n_banks; ++b) s += at(b, f);
        return s;
    }

    void validate() const {
        if (n_banks < 0 || n_firms < 0) throw std::invalid_argument("CreditNetwork: negative size");
        if (credit.size() != static_cast<std::size_t>(n_banks) * static_cast<std::size_t>(n_firms) ||
            bank_assets.size() != static_cast<std::size_t>(n_banks) ||
            firm_assets.size() != static_cast<std::size_t>(n_firms) || firm_is_c.size() != static_cast<std::size_t>(n_firms))
            throw std::invalid_argument("CreditNetwork: inconsistent sizes");
        for (double c : credit)
            if (!(c >= 0.0)) throw std::invalid_argument("CreditNetwork: credit entries must be nonnegative");
    }
};

/// W_B (banks x firms, rows C_bf / C_b) and W_F (firms x banks, rows C_bf / C_f).
/// Rows of isolated nodes stay zero.
struct Propagation {
    int n_banks = 0;
    int n_firms = 0;
    std::vector<double> WB;
    std::vector<double> WF;

    double wb(int b, int f) const { return WB[static_cast<std::size_t>(b) * static_cast<std::size_t>(n_firms) + static_cast<std::size_t>(f)]; }
    double wf(int f, int b) const { return WF[static_cast<std::size_t>(f) * static_cast<std::size_t>(n_banks) + static_cast<std::size_t>(b)]; }
};

inline Propagation build_propagation(const CreditNetwork& net) {
    net.validate();
    Propagation pr;
    pr.n_banks = net.n_banks;
    pr.n_firms = net.n_firms;
    pr.WB.assign(net.credit.size(), 0.0);
    pr.WF.assign(net.credit.size(), 0.0);
    for (int b = 0; b < net.n_banks; ++b) {
        const double cb = net.bank_total(b);
        if (!(cb > 0.0)) continue;
        for (int f = 0; f < net.n_firms; ++f)
            pr.WB[static_cast<std::size_t>(b) * static_cast<std::size_t>(net.n_firms) + static_cast<std::size_t>(f)] = net.at(b, f) / cb;
    }
    for (int f = 0; f < net.n_firms; ++f) {
        const double cf = net.firm_total(f);
        if (!(cf > 0.0)) continue;
        for (int b = 0; b < net.n_banks; ++b)
            pr.WF[static_cast<std::size_t>(f) * static_cast<std::size_t>(net.n_banks) + static_cast<std::size_t>(b)] = net.at(b, f) / cf;
    }
    return pr;
}

enum class NodeState : std::uint8_t { U, D, I };

/// Node ids: banks are [0, n_banks), firms are n_banks + f.
struct PropagationResult {
    std::vector<double> h;
    std::vector<NodeState> state;
    int T = 0;
};

inline PropagationResult propagate(const Propagation& pr, const std::vector<int>& initial, double psi = 1.0,
                                   DebtRankConvention conv = DebtRankConvention::Literal) {
    const int nb = pr.n_banks, nf = pr.n_firms, n = nb + nf;
    if (initial.empty()) throw std::invalid_argument("propagate: initial distressed set is empty");
    if (!(psi > 0.0 && psi <= 1.0)) throw std::invalid_argument("propagate: psi must lie in (0, 1]");
    PropagationResult res;
    res.h.assign(static_cast<std::size_t>(n), 0.0);
    res.state.assign(static_cast<std::size_t>(n), NodeState::U);
    for (int k : initial) {
        if (k < 0 || k >= n) throw std::out_of_range("propagate: node id " + std::to_string(k));
        res.h[static_cast<std::size_t>(k)] = psi;
        res.state[static_cast<std::size_t>(k)] = NodeState::D;
    }
    // weight of the edge carrying distress from bank b to firm f, and back
    auto bank_to_firm = [&](int b, int f) { return conv == DebtRankConvention::Literal ? pr.wb(b, f) : pr.wf(f, b); };
    auto firm_to_bank = [&](int f, int b) { return conv == DebtRankConvention::Literal ? pr.wf(f, b) : pr.wb(b, f); };

    std::vector<double> next(static_cast<std::size_t>(n));
    for (;;) {
        bool any_d = false;
        for (auto s : res.state) any_d = any_d || s == NodeState::D;
        if (!any_d) break;
        next = res.h;
        for (int b = 0; b < nb; ++b) {
            if (res.state[static_cast<std::size_t>(b)] != NodeState::D) continue;
            const double hb = res.h[static_cast<std::size_t>(b)];
            for (int f = 0; f < nf; ++f) next[static_cast<std::size_t>(nb + f)] += bank_to_firm(b, f) * hb;
        }
        for (int f = 0; f < nf; ++f) {
            if (res.state[static_cast<std::size_t>(nb + f)] != NodeState::D) continue;
            const double hf = res.h[static_cast<std::size_t>(nb + f)];
            for (int b = 0; b < nb; ++b) next[static_cast<std::size_t>(b)] += firm_to_bank(f, b) * hf;
        }
        for (int k = 0; k < n; ++k) {
            auto& s = res.state[static_cast<std::size_t>(k)];
            const double hk = std::min(1.0, next[static_cast<std::size_t>(k)]);
            res.h[static_cast<std::size_t>(k)] = hk;
            if (s == NodeState::D)
                s = NodeState::I;
            else if (s == NodeState::U && hk > 0.0)
                s = NodeState::D;
        }
        ++res.T;
    }
    return res;
}

struct DebtRankValue {
    double banks = 0.0;
    double firms = 0.0;
    double total() const noexcept { return banks + firms; }
};

/// Asset-weighted final distress over nodes outside the initial set. Isolated
/// nodes carry no weight.
inline DebtRankValue debtrank_total(const CreditNetwork& net, const std::vector<int>& initial, double psi = 1.0,
                                    DebtRankConvention conv = DebtRankConvention::Literal) {
    const Propagation pr = build_propagation(net);
    const PropagationResult res = propagate(pr, initial, psi, conv);
    const int nb = net.n_banks;
    std::vector<bool> in_init(res.h.size(), false);
    for (int k : initial) in_init[static_cast<std::size_t>(k)] = true;

    DebtRankValue dr;
    double num = 0.0, den = 0.0;
    for (int b = 0; b < nb; ++b) {
        if (in_init[static_cast<std::size_t>(b)] || !(net.bank_total(b) > 0.0)) continue;
        const double wgt = std::max(net.bank_assets[static_cast<std::size_t>(b)], 0.0);
        num += res.h[static_cast<std::size_t>(b)] * wgt;
        den += wgt;
    }
    if (den > 0.0) dr.banks = num / den;

    for (const bool c_class : {true, false}) {
        double fn = 0.0, fd = 0.0;
        for (int f = 0; f < net.n_firms; ++f) {
            if (net.firm_is_c[static_cast<std::size_t>(f)] != c_class) continue;
            if (in_init[static_cast<std::size_t>(nb + f)] || !(net.firm_total(f) > 0.0)) continue;
            const double wgt = std::max(net.firm_assets[static_cast<std::size_t>(f)], 0.0);
            fn += res.h[static_cast<std::size_t>(nb + f)] * wgt;
            fd += wgt;
        }
        if (fd > 0.0) dr.firms += fn / fd;
    }
    return dr;
}

/// DebtRank under an initial-set policy. EachBankMean averages over every
/// bank that lends; SingleLargestBank seeds the bank with the largest assets.
inline DebtRankValue debtrank_policy(const CreditNetwork& net, InitialSetPolicy policy,
                                     const std::vector<int>& custom = {}, double psi = 1.0,
                                     DebtRankConvention conv = DebtRankConvention::Literal) {
    switch (policy) {
    case InitialSetPolicy::Custom:
        return debtrank_total(net, custom, psi, conv);
    case InitialSetPolicy::SingleLargestBank: {
        int best = -1;
        for (int b = 0; b < net.n_banks; ++b) {
            if (!(net.bank_total(b) > 0.0)) continue;
            if (best < 0 || net.bank_assets[static_cast<std::size_t>(b)] > net.bank_assets[static_cast<std::size_t>(best)]) best = b;
        }
        if (best < 0) return {};
        return debtrank_total(net, {best}, psi, conv);
    }
    case InitialSetPolicy::EachBankMean: {
        DebtRankValue acc;
        int count = 0;
        for (int b = 0; b < net.n_banks; ++b) {
            if (!(net.bank_total(b) > 0.0)) continue;
            const DebtRankValue v = debtrank_total(net, {b}, psi, conv);
            acc.banks += v.banks;
            acc.firms += v.firms;
            ++count;
        }
        if (count > 0) {
            acc.banks /= count;
            acc.firms /= count;
        }
        return acc;
    }
    }
    return {};
}

inline InitialSetPolicy parse_initial_set_policy(const std::string& s) {
    if (s == "each-bank-mean") return InitialSetPolicy::EachBankMean;
    if (s == "single-largest-bank") return InitialSetPolicy::SingleLargestBank;
    if (s == "custom") return InitialSetPolicy::Custom;
    throw std::invalid_argument("unknown DebtRank policy '" + s + "' (each-bank-mean, single-largest-bank, custom)");
}

inline DebtRankConvention parse_debtrank_convention(const std::string& s) {
    if (s == "literal") return DebtRankConvention::Literal;
    if (s == "exposure") return DebtRankConvention::Exposure;
    throw std::invalid_argument("unknown DebtRank convention '" + s + "' (literal, exposure)");
}

}  // namespace abm
