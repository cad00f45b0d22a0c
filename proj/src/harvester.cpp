#include "marketbench/harvester.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace marketbench::harvest {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(FetchStatus s) {
    switch (s) {
        case FetchStatus::OK: return "OK";
        case FetchStatus::Timeout: return "Timeout";
        case FetchStatus::ServerError: return "ServerError";
        case FetchStatus::Garbled: return "Garbled";
    }
    return "OK";
}

std::optional<FetchStatus> fetch_status_from_string(std::string_view s) {
    if (s == "OK") return FetchStatus::OK;
    if (s == "Timeout") return FetchStatus::Timeout;
    if (s == "ServerError") return FetchStatus::ServerError;
    if (s == "Garbled") return FetchStatus::Garbled;
    return std::nullopt;
}

std::vector<std::string> Watchlist::items() const {
    std::vector<std::string> out;
    out.reserve(added_on.size());
    for (const auto& [item, day] : added_on) out.push_back(item);
    return out;
}

Watchlist update_watchlist(Watchlist wl, const std::vector<std::string>& chart, Date day) {
    for (const auto& item : chart) wl.added_on.emplace(item, day);  // keeps the first date
    return wl;
}

SchedulePlan plan_schedule(Date day, Duration window_start, Duration window_end,
                           const Watchlist& watchlist, std::uint64_t seed) {
    if (watchlist.empty()) throw ConfigError("plan_schedule: watchlist is empty");
    if (window_start < 0 || window_end > kSecondsPerDay || window_start >= window_end)
        throw ConfigError("plan_schedule: window must be a nonempty range within one day");

    Rng rng = Rng(seed).fork("schedule").fork(static_cast<std::uint64_t>(day));
    SchedulePlan plan;
    plan.day = day;
    plan.seed = seed;
    plan.trigger_time = start_of_day(day) + rng.range_int(window_start, window_end - 1);
    plan.item_order = watchlist.items();
    rng.shuffle(plan.item_order);
    return plan;
}

std::int64_t SystemClock::now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void SystemClock::sleep_ms(std::int64_t ms) {
    if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

RateLimiter::RateLimiter(double per_second, double capacity)
    : rate_(per_second), capacity_(capacity), tokens_(capacity) {
    if (per_second <= 0 || capacity < 1.0)
        throw ConfigError("RateLimiter needs a positive rate and capacity >= 1");
}

void RateLimiter::acquire(Clock& clock) {
    std::lock_guard<std::mutex> lock(mu_);
    std::int64_t now = clock.now_ms();
    if (last_ms_ < 0) last_ms_ = now;
    tokens_ = std::min(capacity_, tokens_ + static_cast<double>(now - last_ms_) * rate_ / 1000.0);
    last_ms_ = now;
    if (tokens_ < 1.0) {
        // ceil so rounding never grants a token early
        auto wait = static_cast<std::int64_t>((1.0 - tokens_) * 1000.0 / rate_) + 1;
        clock.sleep_ms(wait);
        std::int64_t after = clock.now_ms();
        tokens_ = std::min(capacity_,
                           tokens_ + static_cast<double>(after - last_ms_) * rate_ / 1000.0);
        last_ms_ = after;
    }
    tokens_ -= 1.0;
}

Timestamp FetchContext::now() {
    if (market_now) return market_now();
    return clock.now_ms() / 1000;
}

std::variant<RawDocument, GapRecord> fetch(const std::string& target, const std::string& path,
                                           FetchContext& ctx) {
    Timestamp first_attempt_at = ctx.now();
    std::int64_t backoff = ctx.retry.initial_backoff_ms;
    std::string last_failure = "no attempt made";

    for (int attempt = 1; attempt <= ctx.retry.max_attempts; ++attempt) {
        ctx.limiter.acquire(ctx.clock);
        FetchResult res = ctx.fetcher.get(path);

        if (res.status == FetchStatus::OK || res.status == FetchStatus::Garbled) {
            RawDocument doc;
            doc.target = target;
            doc.capture_time = res.market_time.value_or(ctx.now());
            doc.bytes = std::move(res.bytes);
            doc.status = res.status;
            // a nominal success with no usable body is a garbled capture
            if (doc.status == FetchStatus::OK &&
                (doc.bytes.empty() || doc.bytes.find('\0') != std::string::npos))
                doc.status = FetchStatus::Garbled;
            doc.attempt = attempt;
            return doc;
        }

        last_failure = to_string(res.status);
        if (attempt < ctx.retry.max_attempts) {
            ctx.clock.sleep_ms(backoff);
            backoff = static_cast<std::int64_t>(static_cast<double>(backoff) * ctx.retry.factor);
        }
    }

    GapRecord gap;
    gap.target = target;
    gap.window_start = first_attempt_at;
    gap.window_end = std::max(ctx.now(), first_attempt_at + 1);
    gap.reason = last_failure + " after " + std::to_string(ctx.retry.max_attempts) + " attempts";
    return gap;
}

Archive::Archive(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path Archive::target_dir(const std::string& target) const {
    return root_ / sanitize_path_component(target);
}

fs::path Archive::store(const RawDocument& doc) {
    std::lock_guard<std::mutex> lock(mu_);
    fs::path dir = target_dir(doc.target);
    fs::create_directories(dir);

    std::string stem = sanitize_path_component(format_timestamp(doc.capture_time));
    std::string digest = digest_hex(doc.bytes);

    // Append-only: never rewrite an existing capture. An identical re-store
    // is a no-op; different bytes for the same instant get a versioned name
    // and are left for the flagger to call out.
    fs::path file = dir / (stem + ".raw");
    for (int version = 2; fs::exists(file); ++version) {
        std::ifstream in(file, std::ios::binary);
        std::string existing((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
        if (digest_hex(existing) == digest) return file;
        file = dir / (stem + "." + std::to_string(version) + ".raw");
    }

    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("archive: cannot write " + file.string());
    out.write(doc.bytes.data(), static_cast<std::streamsize>(doc.bytes.size()));
    out.close();

    json meta = {{"target", doc.target},
                 {"capture_time", format_timestamp(doc.capture_time)},
                 {"status", to_string(doc.status)},
                 {"attempt", doc.attempt},
                 {"digest", digest},
                 {"file", file.filename().string()}};
    std::ofstream metaout(dir / "meta.jsonl", std::ios::app);
    metaout << meta.dump() << "\n";
    return file;
}

void Archive::store_gap(const GapRecord& gap) {
    std::lock_guard<std::mutex> lock(mu_);
    fs::path dir = target_dir(gap.target);
    fs::create_directories(dir);
    json rec = {{"target", gap.target},
                {"window_start", format_timestamp(gap.window_start)},
                {"window_end", format_timestamp(gap.window_end)},
                {"reason", gap.reason}};
    std::ofstream out(dir / "gaps.jsonl", std::ios::app);
    out << rec.dump() << "\n";
}

std::vector<std::string> Archive::targets() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    if (!fs::exists(root_)) return out;
    for (const auto& entry : fs::directory_iterator(root_))
        if (entry.is_directory()) out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<RawDocument> Archive::load_target(const std::string& target) const {
    std::lock_guard<std::mutex> lock(mu_);
    fs::path dir = target_dir(target);
    std::vector<RawDocument> out;
    std::ifstream meta(dir / "meta.jsonl");
    if (!meta) return out;

    std::string line;
    while (std::getline(meta, line)) {
        if (trim(line).empty()) continue;
        json rec = json::parse(line);
        RawDocument doc;
        doc.target = rec.at("target").get<std::string>();
        auto t = parse_timestamp(rec.at("capture_time").get<std::string>());
        if (!t) throw DataError("archive meta: bad capture_time for " + target);
        doc.capture_time = *t;
        auto status = fetch_status_from_string(rec.at("status").get<std::string>());
        doc.status = status.value_or(FetchStatus::Garbled);
        doc.attempt = rec.at("attempt").get<int>();

        std::ifstream in(dir / rec.at("file").get<std::string>(), std::ios::binary);
        doc.bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        out.push_back(std::move(doc));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const RawDocument& a, const RawDocument& b) {
                         return a.capture_time < b.capture_time;
                     });
    return out;
}

std::vector<GapRecord> Archive::load_gaps(const std::string& target) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<GapRecord> out;
    std::ifstream in(target_dir(target) / "gaps.jsonl");
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json rec = json::parse(line);
        GapRecord gap;
        gap.target = rec.at("target").get<std::string>();
        gap.window_start = parse_timestamp(rec.at("window_start").get<std::string>()).value_or(0);
        gap.window_end = parse_timestamp(rec.at("window_end").get<std::string>()).value_or(0);
        gap.reason = rec.at("reason").get<std::string>();
        out.push_back(std::move(gap));
    }
    return out;
}

namespace {

void record_outcome(std::variant<RawDocument, GapRecord>&& result, Archive* archive,
                    CaptureOutcome& out) {
    if (std::holds_alternative<RawDocument>(result)) {
        auto& doc = std::get<RawDocument>(result);
        if (archive) archive->store(doc);
        out.docs.push_back(std::move(doc));
    } else {
        auto& gap = std::get<GapRecord>(result);
        if (archive) archive->store_gap(gap);
        out.gaps.push_back(std::move(gap));
    }
}

}  // namespace

CaptureOutcome capture_interval_series(const std::string& target, const std::string& path,
                                       FetchContext& ctx, ClockControl& ctl, Archive* archive,
                                       Duration interval, Timestamp hard_stop,
                                       const StopCondition& stop_on) {
    if (interval <= 0) throw ConfigError("capture interval must be positive");
    CaptureOutcome out;
    while (true) {
        Timestamp t = ctl.now();
        auto result = fetch(target, path, ctx);
        bool got_doc = std::holds_alternative<RawDocument>(result);
        bool done = got_doc && stop_on && stop_on(std::get<RawDocument>(result));
        record_outcome(std::move(result), archive, out);
        if (done) break;
        if (t + interval > hard_stop) break;
        ctl.advance_to(t + interval);
    }
    return out;
}

CaptureOutcome capture_event_series(const std::string& target, const std::string& path,
                                    FetchContext& ctx, ClockControl& ctl, EventFeed& feed,
                                    Archive* archive, Timestamp hard_stop,
                                    const StopCondition& stop_on) {
    CaptureOutcome out;
    // baseline snapshot at the current clock
    {
        auto result = fetch(target, path, ctx);
        bool got_doc = std::holds_alternative<RawDocument>(result);
        bool done = got_doc && stop_on && stop_on(std::get<RawDocument>(result));
        record_outcome(std::move(result), archive, out);
        if (done) return out;
    }
    while (true) {
        auto next = feed.next_event_after(target, ctl.now());
        if (!next || *next > hard_stop) break;
        ctl.advance_to(*next);
        auto result = fetch(target, path, ctx);
        bool got_doc = std::holds_alternative<RawDocument>(result);
        bool done = got_doc && stop_on && stop_on(std::get<RawDocument>(result));
        record_outcome(std::move(result), archive, out);
        if (done) break;
    }
    return out;
}

}  // namespace marketbench::harvest
