#pragma once

// Shared vocabulary: error types, deterministic RNG, seed derivation and
// UTC timestamp helpers used by every module.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace farmintel {

/// Input or configuration that violates a documented invariant.
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while doing otherwise valid work (I/O, numerics, network).
/// The CLI maps this to exit code 2.
class RuntimeFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic random source.
///
/// Uses mt19937_64 for the bit stream and converts to uniform/normal variates
/// by hand so results do not depend on the standard library's distribution
/// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal()
    {
        if (cached_) {
            double v = *cached_;
            cached_.reset();
            return v;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(a);
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n)
    {
        if (n == 0) throw std::invalid_argument("Rng::index: empty range");
        // rejection sampling keeps the draw unbiased
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = 0;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    std::optional<double> cached_;
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable per-module seed derived from the global seed and a module name.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view module)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    for (unsigned char c : module) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(seed ^ h);
}

// ---------------------------------------------------------------------------
// Time helpers. All timestamps are UTC seconds since the Unix epoch.
// ---------------------------------------------------------------------------

using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerMinute = 60;
inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

/// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d)
{
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

constexpr CivilDate civil_from_days(std::int64_t z)
{
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

constexpr Timestamp floor_div(Timestamp a, Timestamp b)
{
    Timestamp q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

constexpr Timestamp hour_start(Timestamp t) { return floor_div(t, kSecondsPerHour) * kSecondsPerHour; }
constexpr std::int64_t day_index(Timestamp t) { return floor_div(t, kSecondsPerDay); }
constexpr int minute_of_day(Timestamp t)
{
    return static_cast<int>((t - day_index(t) * kSecondsPerDay) / kSecondsPerMinute);
}
constexpr int hour_of_day(Timestamp t) { return minute_of_day(t) / 60; }

namespace detail {

inline bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out)
{
    if (pos + len > s.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    auto res = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return res.ec == std::errc{};
}

}  // namespace detail

/// Parses `YYYY-MM-DD` into days since epoch.
inline std::optional<std::int64_t> parse_date(std::string_view s)
{
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!detail::parse_fixed_int(s, 0, 4, y) || !detail::parse_fixed_int(s, 5, 2, m) ||
        !detail::parse_fixed_int(s, 8, 2, d))
        return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    const auto days = days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    const auto back = civil_from_days(days);
    if (back.month != static_cast<unsigned>(m) || back.day != static_cast<unsigned>(d)) return std::nullopt;
    return days;
}

/// Parses ISO-8601 date-times of the form `YYYY-MM-DDTHH:MM[:SS[.fff]][Z|+hh:mm|-hh:mm]`.
/// A missing zone designator is read as UTC. A space may replace the `T`.
inline std::optional<Timestamp> parse_iso8601(std::string_view s)
{
    if (s.size() < 16) return std::nullopt;
    auto date = parse_date(s.substr(0, 10));
    if (!date || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!detail::parse_fixed_int(s, 11, 2, hh) || s[13] != ':' || !detail::parse_fixed_int(s, 14, 2, mm))
        return std::nullopt;
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        if (!detail::parse_fixed_int(s, pos + 1, 2, ss)) return std::nullopt;
        pos += 3;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    Timestamp offset = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            // UTC
        } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
            int oh = 0, om = 0;
            if (!detail::parse_fixed_int(s, pos + 1, 2, oh) || !detail::parse_fixed_int(s, pos + 4, 2, om))
                return std::nullopt;
            offset = (oh * 60 + om) * kSecondsPerMinute;
            if (s[pos] == '-') offset = -offset;
        } else {
            return std::nullopt;
        }
    }
    return *date * kSecondsPerDay + hh * kSecondsPerHour + mm * kSecondsPerMinute + ss - offset;
}

inline std::string format_date(std::int64_t days)
{
    const auto c = civil_from_days(days);
    std::array<char, 48> buf{};
    std::snprintf(buf.data(), buf.size(), "%04lld-%02u-%02u", static_cast<long long>(c.year), c.month, c.day);
    return buf.data();
}

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
inline std::string format_iso8601(Timestamp t)
{
    const auto days = day_index(t);
    const auto secs = t - days * kSecondsPerDay;
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%sT%02lld:%02lld:%02lldZ", format_date(days).c_str(),
                  static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                  static_cast<long long>(secs % 60));
    return buf.data();
}

}  // namespace farmintel
