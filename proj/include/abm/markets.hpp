#pragma once

// Decentralised search-and-matching for labour, consumption goods, capital
// goods and credit. Every random choice comes from a keyed substream, so a
// market's outcome is a pure function of agent state, the seed and t.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "agents.hpp"
#include "config.hpp"
#include "rng.hpp"

namespace abm {

/// Shares with a floor for zero-weight agents: a zero share becomes
/// 1/(10 n) before renormalising. All-zero weights give uniform shares.
inline std::vector<double> market_shares(std::span<const double> weights, bool floor_zero = true) {
    const std::size_t n = weights.size();
    std::vector<double> s(n, 0.0);
    if (n == 0) return s;
    double total = 0.0;
    for (double w : weights) total += std::max(w, 0.0);
    if (!(total > 0.0)) {
        std::fill(s.begin(), s.end(), 1.0 / static_cast<double>(n));
        return s;
    }
    for (std::size_t k = 0; k < n; ++k) s[k] = std::max(weights[k], 0.0) / total;
    if (!floor_zero) return s;
    const double fl = 1.0 / (10.0 * static_cast<double>(n));
    bool any = false;
    for (auto& x : s)
        if (x == 0.0) {
            x = fl;
            any = true;
        }
    if (any) {
        const double z = std::accumulate(s.begin(), s.end(), 0.0);
        for (auto& x : s) x /= z;
    }
    return s;
}

/// Categorical sampling by inverse CDF over a cumulative table.
class ShareSampler {
public:
    ShareSampler() = default;
    explicit ShareSampler(std::span<const double> shares) : cdf_(shares.size()) {
        double acc = 0.0;
        for (std::size_t k = 0; k < shares.size(); ++k) {
            acc += shares[k];
            cdf_[k] = acc;
        }
        if (!cdf_.empty()) total_ = acc;
    }

    std::size_t size() const noexcept { return cdf_.size(); }

    std::size_t draw(Substream& s) const {
        assert(!cdf_.empty());
        const double u = s.uniform() * total_;
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<std::size_t>(it - cdf_.begin());
    }

    /// `count` draws with replacement, deduplicated, in first-drawn order.
    std::vector<int> draw_distinct(Substream& s, int count) const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int k = 0; k < count; ++k) {
            const int v = static_cast<int>(draw(s));
            if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
        }
        return out;
    }

private:
    std::vector<double> cdf_;
    double total_ = 1.0;
};

/// Uniform random permutation of [0, n).
inline std::vector<int> random_permutation(int n, Substream s) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(s.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

/// Moves k uniformly chosen elements of v to its front (partial Fisher-Yates).
template <class T>
void choose_front(std::vector<T>& v, std::size_t k, Substream& s) {
    k = std::min(k, v.size());
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(s.below(v.size() - i));
        std::swap(v[i], v[j]);
    }
}

/// Maps a unified firm slot to its class and class-local index.
struct FirmSlots {
    std::vector<CFirm>* c = nullptr;
    std::vector<KFirm>* k = nullptr;

    int size() const noexcept { return static_cast<int>(c->size() + k->size()); }
    int n_c() const noexcept { return static_cast<int>(c->size()); }
    FirmBase& operator[](int slot) const {
        return slot < n_c() ? static_cast<FirmBase&>((*c)[static_cast<std::size_t>(slot)])
                            : static_cast<FirmBase&>((*k)[static_cast<std::size_t>(slot - n_c())]);
    }
    AgentKind kind(int slot) const noexcept { return slot < n_c() ? AgentKind::CFirm : AgentKind::KFirm; }
    std::uint32_t local(int slot) const noexcept {
        return static_cast<std::uint32_t>(slot < n_c() ? slot : slot - n_c());
    }
};

struct MarketContext {
    const Params* p = nullptr;
    RngPolicy rng{};
    std::int64_t t = 0;

    Substream stream(AgentKind kind, std::uint32_t idx, Purpose purpose) const {
        return derive_stream(rng, kind, idx, t, purpose);
    }
};

// -------------------------------------------------------------------- labour

struct LabourOutcome {
    int hired = 0;
    int fired = 0;
    int applications = 0;
};

/// Firing, applications and hiring for one period. Each firm's `eta` must be
/// current; `workers` lists and household employers are updated in place.
inline LabourOutcome labour_market(FirmSlots firms, std::vector<Household>& hh, const MarketContext& ctx) {
    const Params& p = *ctx.p;
    const int nf = firms.size();
    LabourOutcome out;

    std::vector<double> employment(static_cast<std::size_t>(nf));
    std::vector<int> vacancies(static_cast<std::size_t>(nf), 0);
    for (int f = 0; f < nf; ++f) {
        employment[static_cast<std::size_t>(f)] = firms[f].N();
        vacancies[static_cast<std::size_t>(f)] = std::max(hiring_target(firms[f].eta), 0);
    }
    const ShareSampler sampler(market_shares(employment));

    // Households unemployed at market open send applications.
    std::vector<std::vector<int>> pool(static_cast<std::size_t>(nf));
    for (int h = 0; h < static_cast<int>(hh.size()); ++h) {
        if (hh[static_cast<std::size_t>(h)].employed()) continue;
        Substream s = ctx.stream(AgentKind::Household, static_cast<std::uint32_t>(h), Purpose::JobSearch);
        std::vector<int> visits = sampler.draw_distinct(s, p.n_F);
        std::sort(visits.begin(), visits.end(), [&](int x, int y) {
            const double wx = firms[x].w, wy = firms[y].w;
            return wx != wy ? wx > wy : x < y;
        });
        for (int f : visits)
            if (vacancies[static_cast<std::size_t>(f)] > 0) {
                pool[static_cast<std::size_t>(f)].push_back(h);
                ++out.applications;
            }
    }

    // Firing: min(|eta|, N - 1) chosen uniformly.
    for (int f = 0; f < nf; ++f) {
        FirmBase& firm = firms[f];
        const int target = hiring_target(firm.eta);
        if (target >= 0) continue;
        const int n_fire = std::min(-target, std::max(firm.N() - 1, 0));
        if (n_fire <= 0) continue;
        Substream s = ctx.stream(firms.kind(f), firms.local(f), Purpose::Firing);
        choose_front(firm.workers, static_cast<std::size_t>(n_fire), s);
        for (int k = 0; k < n_fire; ++k) hh[static_cast<std::size_t>(firm.workers[static_cast<std::size_t>(k)])].employer = kNoEmployer;
        firm.workers.erase(firm.workers.begin(), firm.workers.begin() + n_fire);
        out.fired += n_fire;
    }

    // Hiring: best-paying firms choose first among still-unemployed applicants.
    std::vector<int> order(static_cast<std::size_t>(nf));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        const double wx = firms[x].w, wy = firms[y].w;
        return wx != wy ? wx > wy : x < y;
    });
    for (int f : order) {
        const int v = vacancies[static_cast<std::size_t>(f)];
        if (v <= 0) continue;
        auto& apps = pool[static_cast<std::size_t>(f)];
        std::erase_if(apps, [&](int h) { return hh[static_cast<std::size_t>(h)].employed(); });
        if (apps.empty()) continue;
        Substream s = ctx.stream(firms.kind(f), firms.local(f), Purpose::Hiring);
        const auto n_hire = std::min<std::size_t>(static_cast<std::size_t>(v), apps.size());
        choose_front(apps, n_hire, s);
        for (std::size_t k = 0; k < n_hire; ++k) {
            const int h = apps[k];
            hh[static_cast<std::size_t>(h)].employer = f;
            firms[f].workers.push_back(h);
        }
        out.hired += static_cast<int>(n_hire);
    }
    return out;
}

// --------------------------------------------------------------- consumption

struct GoodsOutcome {
    double buyer_spend = 0.0;    // sum over buyers
    double seller_revenue = 0.0; // sum over sellers
    double quantity = 0.0;
};

/// Sequential purchase from a price-sorted list. Returns money spent.
/// `avail` is decremented; demand and sales are accumulated on the seller.
template <class Seller>
double shop(double budget, const std::vector<int>& visits, std::vector<Seller>& sellers, std::vector<double>& avail,
            bool literal_demand, double& bought) {
    const double desired = budget;
    double spent = 0.0;
    bought = 0.0;
    for (int k : visits) {
        if (!(budget > 0.0)) break;
        Seller& s = sellers[static_cast<std::size_t>(k)];
        const double q = budget / s.P;
        s.Z += literal_demand ? desired / s.P : q;
        double& v = avail[static_cast<std::size_t>(k)];
        if (!(v > 0.0)) continue;
        double buy, cost;
        if (q <= v) {
            buy = q;
            cost = budget;
        } else {
            buy = v;
            cost = std::min(v * s.P, budget);
        }
        v -= buy;
        if (v <= 1e-12 * buy) v = 0.0;  // sold out, not a rounding remnant
        s.Q += buy;
        s.revenue += cost;
        budget -= cost;
        spent += cost;
        bought += buy;
    }
    return spent;
}

/// Households buy C-goods. C-firms must have Y set and Z, Q, revenue zeroed;
/// households must have Ed set. Sets E on households and the unsold stock V
/// on C-firms.
inline GoodsOutcome consumption_market(std::vector<CFirm>& cf, std::vector<Household>& hh, const MarketContext& ctx) {
    const Params& p = *ctx.p;
    GoodsOutcome out;
    std::vector<double> output(cf.size());
    std::vector<double> avail(cf.size());
    for (std::size_t i = 0; i < cf.size(); ++i) {
        output[i] = cf[i].Y;
        avail[i] = cf[i].Y;
    }
    const ShareSampler sampler(market_shares(output));
    const auto order = random_permutation(static_cast<int>(hh.size()), ctx.stream(AgentKind::Market, 0, Purpose::ShopOrder));
    for (int h : order) {
        Household& H = hh[static_cast<std::size_t>(h)];
        H.E = 0.0;
        if (!(H.Ed > 0.0) || cf.empty()) continue;
        Substream s = ctx.stream(AgentKind::Household, static_cast<std::uint32_t>(h), Purpose::ShopVisit);
        std::vector<int> visits = sampler.draw_distinct(s, p.n_C);
        std::sort(visits.begin(), visits.end(), [&](int x, int y) {
            const double px = cf[static_cast<std::size_t>(x)].P, py = cf[static_cast<std::size_t>(y)].P;
            return px != py ? px < py : x < y;
        });
        double bought = 0.0;
        H.E = shop(H.Ed, visits, cf, avail, p.literal_goods_demand, bought);
        out.buyer_spend += H.E;
        out.quantity += bought;
    }
    for (std::size_t i = 0; i < cf.size(); ++i) {
        cf[i].V = avail[i];
        out.seller_revenue += cf[i].revenue;
    }
    return out;
}

// ------------------------------------------------------------------- capital

/// C-firms with IEd > 0 buy K-goods. K-firm stock on offer is last period's
/// inventory after depreciation plus this period's output. Sets I and IE on
/// C-firms; accumulates Z, Q and revenue on K-firms (zeroed by the caller)
/// and leaves the carried-over stock in V.
inline GoodsOutcome capital_market(std::vector<CFirm>& cf, std::vector<KFirm>& kf, const MarketContext& ctx) {
    const Params& p = *ctx.p;
    GoodsOutcome out;
    std::vector<double> output(kf.size());
    std::vector<double> avail(kf.size());
    for (std::size_t j = 0; j < kf.size(); ++j) {
        output[j] = kf[j].Y;
        avail[j] = kf[j].V * (1.0 - p.delta) + kf[j].Y;
    }
    const ShareSampler sampler(market_shares(output));
    const auto order = random_permutation(static_cast<int>(cf.size()), ctx.stream(AgentKind::Market, 0, Purpose::CapitalOrder));
    for (int i : order) {
        CFirm& f = cf[static_cast<std::size_t>(i)];
        f.I = 0.0;
        f.IE = 0.0;
        if (!(f.IEd > 0.0) || kf.empty()) continue;
        Substream s = ctx.stream(AgentKind::CFirm, static_cast<std::uint32_t>(i), Purpose::CapitalVisit);
        std::vector<int> visits = sampler.draw_distinct(s, p.n_K);
        std::sort(visits.begin(), visits.end(), [&](int x, int y) {
            const double px = kf[static_cast<std::size_t>(x)].P, py = kf[static_cast<std::size_t>(y)].P;
            return px != py ? px < py : x < y;
        });
        double bought = 0.0;
        f.IE = shop(f.IEd, visits, kf, avail, p.literal_goods_demand, bought);
        f.I = bought;
        out.buyer_spend += f.IE;
        out.quantity += bought;
    }
    for (std::size_t j = 0; j < kf.size(); ++j) {
        kf[j].V = avail[j];
        out.seller_revenue += kf[j].revenue;
    }
    return out;
}

// -------------------------------------------------------------------- credit

struct CreditOutcome {
    double granted = 0.0;
    double demanded = 0.0;
    int loans = 0;
    int refusals = 0;
};

/// Firms with Ld > 0 ask banks picked by credit-market share. Banks must
/// have CRd and CR current. New loans are pushed onto the firm and added to
/// the bank's loan stock; the firm's deposit is credited in its accounting.
inline CreditOutcome credit_market(FirmSlots firms, std::vector<Bank>& banks, const MarketContext& ctx) {
    const Params& p = *ctx.p;
    CreditOutcome out;
    std::vector<double> loans(banks.size());
    for (std::size_t b = 0; b < banks.size(); ++b) loans[b] = banks[b].L;
    const ShareSampler sampler(market_shares(loans));
    const int nf = firms.size();
    const auto order = random_permutation(nf, ctx.stream(AgentKind::Market, 0, Purpose::CreditOrder));
    for (int f : order) {
        FirmBase& firm = firms[f];
        firm.L_new = 0.0;
        if (!(firm.Ld > 0.0) || banks.empty()) continue;
        out.demanded += firm.Ld;
        Substream s = ctx.stream(firms.kind(f), firms.local(f), Purpose::BankVisit);
        std::vector<int> visits = sampler.draw_distinct(s, p.n_B_visits);
        std::sort(visits.begin(), visits.end(), [&](int x, int y) {
            const double rx = banks[static_cast<std::size_t>(x)].rL, ry = banks[static_cast<std::size_t>(y)].rL;
            return rx != ry ? rx < ry : x < y;
        });
        bool granted = false;
        for (int b : visits) {
            Bank& bank = banks[static_cast<std::size_t>(b)];
            const double amount = loan_supply_decision(bank.CRd, bank.CR, firm.Ld);
            if (!(amount > 0.0)) continue;
            firm.loans.push_back(make_loan(b, f, amount, bank.rL, p, ctx.t));
            firm.L_new = amount;
            bank.L += amount;
            out.granted += amount;
            ++out.loans;
            granted = true;
            break;
        }
        if (!granted) ++out.refusals;
    }
    return out;
}

}  // namespace abm
