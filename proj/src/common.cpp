#include "marketbench/common.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace marketbench {

namespace {

// Howard Hinnant's civil-date algorithms, specialized to int64 days.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yr + (m <= 2));
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

std::string format_timestamp(Timestamp t) {
    Date days = day_of(t);
    Timestamp sec = t - start_of_day(days);
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(sec / 3600), static_cast<int>(sec / 60 % 60),
                  static_cast<int>(sec % 60));
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    // 2001-03-15T12:34:56Z
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
        s[16] != ':' || s[19] != 'Z')
        return std::nullopt;
    auto num = [&](int off, int len) -> std::optional<int> {
        std::string_view part = s.substr(off, len);
        if (!all_digits(part)) return std::nullopt;
        int v = 0;
        for (char c : part) v = v * 10 + (c - '0');
        return v;
    };
    auto y = num(0, 4), mo = num(5, 2), d = num(8, 2);
    auto h = num(11, 2), mi = num(14, 2), se = num(17, 2);
    if (!y || !mo || !d || !h || !mi || !se) return std::nullopt;
    if (*mo < 1 || *mo > 12 || *d < 1 || *d > 31 || *h > 23 || *mi > 59 || *se > 59)
        return std::nullopt;
    std::int64_t days = days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d));
    return days * kSecondsPerDay + *h * 3600 + *mi * 60 + *se;
}

std::string format_date(Date d) {
    int y;
    unsigned m, dd;
    civil_from_days(d, y, m, dd);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, dd);
    return buf;
}

std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    std::string with_time = std::string(s) + "T00:00:00Z";
    auto t = parse_timestamp(with_time);
    if (!t) return std::nullopt;
    return day_of(*t);
}

std::string format_money(Money cents) {
    bool neg = cents < 0;
    std::uint64_t abs = neg ? static_cast<std::uint64_t>(-(cents + 1)) + 1
                            : static_cast<std::uint64_t>(cents);
    std::uint64_t dollars = abs / 100;
    unsigned frac = static_cast<unsigned>(abs % 100);
    std::string digits = std::to_string(dollars);
    std::string grouped;
    int count = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (count && count % 3 == 0) grouped.push_back(',');
        grouped.push_back(*it);
        ++count;
    }
    std::string out = neg ? "-$" : "$";
    out.append(grouped.rbegin(), grouped.rend());
    char fracbuf[8];
    std::snprintf(fracbuf, sizeof(fracbuf), ".%02u", frac);
    out += fracbuf;
    return out;
}

std::optional<Money> parse_money(std::string_view s) {
    std::string_view v = s;
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    bool neg = false;
    if (!v.empty() && (v.front() == '-' || v.front() == '+')) {
        neg = v.front() == '-';
        v.remove_prefix(1);
    }
    if (!v.empty() && v.front() == '$') v.remove_prefix(1);
    if (v.empty()) return std::nullopt;

    std::string intpart, fracpart;
    bool in_frac = false;
    for (char c : v) {
        if (c == ',') {
            if (in_frac) return std::nullopt;
            continue;  // grouping separator, US locale
        }
        if (c == '.') {
            if (in_frac) return std::nullopt;
            in_frac = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        (in_frac ? fracpart : intpart).push_back(c);
    }
    if (intpart.empty()) return std::nullopt;
    if (in_frac && (fracpart.empty() || fracpart.size() > 2)) return std::nullopt;
    while (fracpart.size() < 2) fracpart.push_back('0');
    if (intpart.size() > 16) return std::nullopt;

    Money value = 0;
    for (char c : intpart) value = value * 10 + (c - '0');
    value = value * 100 + (fracpart[0] - '0') * 10 + (fracpart[1] - '0');
    return neg ? -value : value;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    // rejection sampling keeps the mapping unbiased and reproducible
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = raw();
    } while (x >= limit);
    return x % n;
}

std::int64_t Rng::range_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("Rng::range_int: lo > hi");
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string sanitize_path_component(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_')
            out.push_back(c);
        else
            out.push_back('_');
    }
    return out;
}

}  // namespace marketbench
