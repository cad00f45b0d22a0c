#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace marketbench {

// Money is integer minor units (US cents). Timestamps and durations are
// integer seconds on the workbench's virtual clock; dates are whole days
// since the epoch.
using Money = std::int64_t;
using Timestamp = std::int64_t;
using Duration = std::int64_t;
using Date = std::int32_t;

inline constexpr Duration kSecondsPerDay = 86400;
inline constexpr int kDaysPerWeek = 7;

// Bad configuration or usage; reported before any side effects.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data that violates a contract mid-pipeline (empty series, unknown
// target, unresolvable reference).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A page template could not be rendered against the given state.
struct RenderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- time ----

std::string format_timestamp(Timestamp t);              // 2001-03-15T12:34:56Z
std::optional<Timestamp> parse_timestamp(std::string_view s);
std::string format_date(Date d);                        // 2001-03-15
std::optional<Date> parse_date(std::string_view s);

inline Date day_of(Timestamp t) {
    // floor division so pre-epoch times land on the right day
    Timestamp d = t / kSecondsPerDay;
    if (t % kSecondsPerDay < 0) --d;
    return static_cast<Date>(d);
}
inline Timestamp start_of_day(Date d) { return static_cast<Timestamp>(d) * kSecondsPerDay; }

// ---- money ----

std::string format_money(Money cents);                  // $1,234.56
std::optional<Money> parse_money(std::string_view s);   // accepts $, commas, bare decimals
inline double money_to_dollars(Money cents) { return static_cast<double>(cents) / 100.0; }

// ---- hashing ----

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);
inline std::string digest_hex(std::string_view data) { return hex64(fnv1a64(data)); }

std::uint64_t splitmix64(std::uint64_t x);

// ---- seeded randomness ----
//
// All draws go through hand-rolled mappings from the raw mt19937_64 stream
// so that a seed yields the same sequence on every platform and compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // uniform in [0, n)
    std::uint64_t below(std::uint64_t n);
    // uniform integer in [lo, hi]
    std::int64_t range_int(std::int64_t lo, std::int64_t hi);
    // uniform in [0, 1)
    double unit() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }
    double range_real(double lo, double hi) { return lo + unit() * (hi - lo); }
    bool chance(double p) { return unit() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(below(v.size()))];
    }

    // Independent stream derived from this generator's seed and a tag;
    // forking does not disturb the parent stream.
    Rng fork(std::uint64_t tag) const { return Rng(splitmix64(seed_ ^ splitmix64(tag))); }
    Rng fork(std::string_view tag) const { return fork(fnv1a64(tag)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// ---- small string helpers ----

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);
std::string sanitize_path_component(std::string_view s);

}  // namespace marketbench
