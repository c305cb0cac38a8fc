#pragma once

// Counter-based random streams. Every draw is addressed by
// (master seed, agent kind, agent index, period, purpose, counter), so the
// k-th draw for a given agent/period/purpose does not depend on how many
// draws other agents consumed. Two scenarios run with the same seed therefore
// see identical shocks, which is what makes cross-scenario comparisons fair.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace abm {

enum class AgentKind : std::uint8_t { Household = 0, CFirm = 1, KFirm = 2, Bank = 3, Market = 4 };

enum class Purpose : std::uint8_t {
    Productivity = 0,
    Price,
    Wage,
    LoanRate,
    JobSearch,
    Firing,
    Hiring,
    HiringOrder,
    ShopVisit,
    ShopOrder,
    CapitalVisit,
    CapitalOrder,
    BankVisit,
    CreditOrder,
    Entry,
    Init,
};

struct RngPolicy {
    std::uint64_t master_seed = 0;
};

namespace detail {

// splitmix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// One independent stream of draws. Satisfies UniformRandomBitGenerator.
class Substream {
public:
    using result_type = std::uint64_t;

    constexpr explicit Substream(std::uint64_t key) noexcept : state_(detail::mix64(key ^ 0x6A09E667F3BCC909ULL)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return detail::mix64(state_ + counter_ * detail::kGolden);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() noexcept { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal by Box-Muller; consumes exactly two raw draws.
    double normal() noexcept {
        const double u1 = uniform_open0();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's multiply-shift; bias is < n / 2^64, negligible here.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
};

/// Packs the key fields into one word (injective for idx < 2^24, t < 2^31)
/// and combines it with the seed.
constexpr std::uint64_t stream_key(const RngPolicy& policy, AgentKind kind, std::uint32_t idx, std::int64_t t,
                                   Purpose purpose) noexcept {
    const std::uint64_t packed = (static_cast<std::uint64_t>(kind) << 61) |
                                 (static_cast<std::uint64_t>(purpose) << 56) |
                                 ((static_cast<std::uint64_t>(idx) & 0xFFFFFFULL) << 32) |
                                 (static_cast<std::uint64_t>(t + 1) & 0xFFFFFFFFULL);
    return detail::mix64(policy.master_seed * detail::kGolden + 0x243F6A8885A308D3ULL) ^ packed;
}

inline Substream derive_stream(const RngPolicy& policy, AgentKind kind, std::uint32_t idx, std::int64_t t,
                               Purpose purpose) noexcept {
    return Substream(stream_key(policy, kind, idx, t, purpose));
}

}  // namespace abm
