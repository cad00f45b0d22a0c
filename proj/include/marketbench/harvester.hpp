#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <variant>
#include <vector>

#include "marketbench/common.hpp"
#include "marketbench/constants.hpp"

namespace marketbench::harvest {

enum class FetchStatus { OK, Timeout, ServerError, Garbled };

std::string to_string(FetchStatus s);
std::optional<FetchStatus> fetch_status_from_string(std::string_view s);

struct RawDocument {
    std::string target;          // archive-safe identifier
    Timestamp capture_time = 0;  // market clock, seconds
    std::string bytes;
    FetchStatus status = FetchStatus::OK;
    int attempt = 1;  // attempts consumed to get this document
};

struct GapRecord {
    std::string target;
    Timestamp window_start = 0;
    Timestamp window_end = 0;  // always > window_start
    std::string reason;
};

// Items are never removed; once tracked, tracked forever.
struct Watchlist {
    std::map<std::string, Date> added_on;

    bool contains(const std::string& item) const { return added_on.count(item) > 0; }
    std::size_t size() const { return added_on.size(); }
    bool empty() const { return added_on.empty(); }
    std::vector<std::string> items() const;  // sorted
};

Watchlist update_watchlist(Watchlist wl, const std::vector<std::string>& chart, Date day);

struct SchedulePlan {
    Date day = 0;
    Timestamp trigger_time = 0;  // absolute
    std::vector<std::string> item_order;
    std::uint64_t seed = 0;
};

// window_start/window_end are second-of-day offsets, [start, end) within one day
SchedulePlan plan_schedule(Date day, Duration window_start, Duration window_end,
                           const Watchlist& watchlist, std::uint64_t seed);

// Wall or simulated milliseconds; the limiter only needs deltas and sleeps.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock : public Clock {
public:
    std::int64_t now_ms() override;
    void sleep_ms(std::int64_t ms) override;
};

class ManualClock : public Clock {
public:
    explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
    std::int64_t now_ms() override { return now_; }
    void sleep_ms(std::int64_t ms) override { now_ += ms; }

private:
    std::int64_t now_;
};

// Token bucket. The default capacity of one token forces a hard minimum
// spacing of 1/rate between grants, which keeps any trailing window at or
// under the configured rate.
class RateLimiter {
public:
    explicit RateLimiter(double per_second, double capacity = 1.0);
    void acquire(Clock& clock);

private:
    double rate_;
    double capacity_;
    double tokens_;
    std::int64_t last_ms_ = -1;
    std::mutex mu_;
};

struct RetryPolicy {
    int max_attempts = constants::kMaxFetchAttempts;
    std::int64_t initial_backoff_ms = 1000;
    double factor = constants::kBackoffFactor;
};

struct FetchResult {
    FetchStatus status = FetchStatus::OK;
    std::string bytes;
    std::optional<Timestamp> market_time;  // server-reported capture clock
};

class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual FetchResult get(const std::string& path) = 0;
};

struct FetchContext {
    Fetcher& fetcher;
    RateLimiter& limiter;
    Clock& clock;
    RetryPolicy retry;
    // capture clock used when the server does not report one
    std::function<Timestamp()> market_now;

    Timestamp now();
};

// Exactly one of RawDocument (possibly Garbled, still archived) or GapRecord
// per call; Timeout/ServerError retry with exponential backoff first.
std::variant<RawDocument, GapRecord> fetch(const std::string& target, const std::string& path,
                                           FetchContext& ctx);

// Append-only store: <root>/<target>/<ISO capture time>.raw, with one
// metadata JSON line per document in meta.jsonl and gaps in gaps.jsonl.
class Archive {
public:
    explicit Archive(std::filesystem::path root);

    std::filesystem::path store(const RawDocument& doc);
    void store_gap(const GapRecord& gap);

    std::vector<std::string> targets() const;
    std::vector<RawDocument> load_target(const std::string& target) const;
    std::vector<GapRecord> load_gaps(const std::string& target) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path target_dir(const std::string& target) const;
    std::filesystem::path root_;
    mutable std::mutex mu_;
};

// Simulated-market capture plumbing: the harvester can steer a virtual clock
// and, in snapshot-per-event mode, ask what the next capture-worthy moment is.
class ClockControl {
public:
    virtual ~ClockControl() = default;
    virtual Timestamp now() = 0;
    virtual void advance_to(Timestamp t) = 0;
};

class EventFeed {
public:
    virtual ~EventFeed() = default;
    virtual std::optional<Timestamp> next_event_after(const std::string& target, Timestamp t) = 0;
};

struct CaptureOutcome {
    std::vector<RawDocument> docs;
    std::vector<GapRecord> gaps;
};

using StopCondition = std::function<bool(const RawDocument&)>;

// Fixed-interval snapshots from the control clock's current time until
// stop_on fires, the hard stop passes, or the clock cannot advance.
CaptureOutcome capture_interval_series(const std::string& target, const std::string& path,
                                       FetchContext& ctx, ClockControl& ctl, Archive* archive,
                                       Duration interval, Timestamp hard_stop,
                                       const StopCondition& stop_on);

// One snapshot per event the feed reports (plus a baseline at the start).
CaptureOutcome capture_event_series(const std::string& target, const std::string& path,
                                    FetchContext& ctx, ClockControl& ctl, EventFeed& feed,
                                    Archive* archive, Timestamp hard_stop,
                                    const StopCondition& stop_on);

}  // namespace marketbench::harvest
