#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "httplib.h"
#include "marketbench/extractor.hpp"
#include "marketbench/service_http.hpp"

using namespace marketbench;

namespace {

sim::SimMarket small_market(std::uint64_t seed) {
    sim::ScenarioConfig config;
    config.auctions.auctions = 2;
    config.auctions.bidders_per_auction = 8;
    config.albums = {"alpha"};
    config.results_per_album = 3;
    config.with_retail = true;
    config.retail.categories = 1;
    config.retail.retailers = 4;
    config.retail.products_per_category = 2;
    return sim::build_market(config, seed);
}

constexpr Timestamp kStart = 951912000 - 100;

}  // namespace

TEST_CASE("pages round-trip over the socket") {
    sim::Service svc(small_market(7), kStart);
    sim::HttpService http(svc);
    http.start();
    REQUIRE(http.port() > 0);

    sim::HttpFetcher fetcher("127.0.0.1", http.port());

    for (const auto& target : svc.targets()) {
        auto res = fetcher.get(sim::Service::path_of_target(target));
        CHECK(res.status == harvest::FetchStatus::OK);
        CHECK(!res.bytes.empty());
        CHECK(res.market_time == kStart);
    }

    auto page = fetcher.get("/auction/lot-001");
    REQUIRE(page.status == harvest::FetchStatus::OK);
    CHECK(page.bytes.find("lot-001") != std::string::npos);

    // served bytes are the same page the in-process service renders
    CHECK(page.bytes == svc.get("/auction/lot-001").body);

    CHECK(fetcher.get("/auction/lot-999").status == harvest::FetchStatus::ServerError);
    CHECK(fetcher.get("/nothing/here").status == harvest::FetchStatus::ServerError);

    httplib::Client ctl("127.0.0.1", http.port());
    auto listed = ctl.Get("/ctl/targets");
    REQUIRE((listed && listed->status == 200));
    std::string joined;
    for (const auto& t : svc.targets()) joined += t + "\n";
    CHECK(listed->body == joined);

    CHECK(http.page_hits_ms().size() >= svc.targets().size());
}

TEST_CASE("control endpoints drive the virtual clock and event feed") {
    sim::Service svc(small_market(19), kStart);
    sim::HttpService http(svc);
    http.start();

    sim::HttpClockControl clock("127.0.0.1", http.port());
    CHECK(clock.now() == kStart);
    clock.advance_to(kStart + 500);
    CHECK(clock.now() == kStart + 500);
    CHECK(svc.now() == kStart + 500);
    clock.advance_to(kStart);  // never rewinds
    CHECK(clock.now() == kStart + 500);

    sim::HttpEventFeed feed("127.0.0.1", http.port());
    auto direct = svc.next_event_after("auction/lot-001", kStart);
    auto remote = feed.next_event_after("auction/lot-001", kStart);
    REQUIRE(direct.has_value());
    CHECK(remote == direct);
    CHECK(!feed.next_event_after("search/alpha", kStart).has_value());
    const auto& log = svc.market().auctions.front();
    CHECK(!feed.next_event_after("auction/lot-001", log.end_time + 1).has_value());

    httplib::Client ctl("127.0.0.1", http.port());
    auto bad = ctl.Get("/ctl/advance?to=soon");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    auto armed = ctl.Get("/ctl/inject?mode=error&count=1");
    REQUIRE(armed);
    CHECK(armed->status == 200);
    auto refused = ctl.Get("/ctl/inject?mode=melt&count=1");
    REQUIRE(refused);
    CHECK(refused->status == 400);

    // the armed error is consumed by the next page request
    sim::HttpFetcher fetcher("127.0.0.1", http.port());
    CHECK(fetcher.get("/auction/lot-001").status == harvest::FetchStatus::ServerError);
    CHECK(fetcher.get("/auction/lot-001").status == harvest::FetchStatus::OK);
}

TEST_CASE("injected failures surface as transport outcomes") {
    sim::Service svc(small_market(3), kStart);
    sim::HttpService http(svc, 600);  // drops stall well past the client timeout
    http.start();
    sim::HttpFetcher fetcher("127.0.0.1", http.port(), 250);

    svc.inject("garble", 1);
    auto garbled = fetcher.get("/auction/lot-001");
    CHECK(garbled.status == harvest::FetchStatus::OK);  // transport succeeded
    CHECK(garbled.bytes.find('\0') != std::string::npos);

    svc.inject("drop", 1);
    CHECK(fetcher.get("/auction/lot-001").status == harvest::FetchStatus::Timeout);
    CHECK(fetcher.get("/auction/lot-001").status == harvest::FetchStatus::OK);

    // the harvester's classifier turns a mangled 200 into a Garbled document
    svc.inject("garble", 1);
    harvest::RateLimiter limiter(10000.0);
    harvest::ManualClock clock(0);
    harvest::FetchContext ctx{fetcher, limiter, clock, harvest::RetryPolicy{},
                              [&svc] { return svc.now(); }};
    auto fetched = harvest::fetch("auction/lot-001", "/auction/lot-001", ctx);
    REQUIRE(std::holds_alternative<harvest::RawDocument>(fetched));
    CHECK(std::get<harvest::RawDocument>(fetched).status == harvest::FetchStatus::Garbled);
}

TEST_CASE("event capture over the socket matches in-process capture") {
    auto market = small_market(23);
    const auto& log = market.auctions.front();
    auto accepted = log.accepted_times();
    auto end_time = log.end_time;
    auto final_alloc = log.final_allocation;
    REQUIRE(accepted.size() >= 3);

    sim::Service svc(std::move(market), kStart);
    sim::HttpService http(svc);
    http.start();

    sim::HttpFetcher fetcher("127.0.0.1", http.port());
    sim::HttpClockControl ctl("127.0.0.1", http.port());
    sim::HttpEventFeed feed("127.0.0.1", http.port());
    harvest::RateLimiter limiter(10000.0);
    harvest::ManualClock clock(0);
    harvest::FetchContext ctx{fetcher, limiter, clock, harvest::RetryPolicy{},
                              [&ctl] { return ctl.now(); }};

    auto outcome = harvest::capture_event_series(
        "auction/lot-001", "/auction/lot-001", ctx, ctl, feed, nullptr, end_time + 10,
        [](const harvest::RawDocument& doc) {
            return doc.bytes.find(">closed<") != std::string::npos;
        });

    CHECK(outcome.gaps.empty());
    REQUIRE(outcome.docs.size() == accepted.size() + 2);
    CHECK(outcome.docs.front().capture_time == kStart);
    for (std::size_t i = 0; i < accepted.size(); ++i)
        CHECK(outcome.docs[i + 1].capture_time == accepted[i]);
    CHECK(outcome.docs.back().capture_time == end_time);

    auto rules = extract::compile_rules(extract::default_auction_rules());
    auto last = extract::extract_auction(outcome.docs.back(), rules);
    REQUIRE(std::holds_alternative<extract::AuctionSnapshot>(last));
    const auto& snap = std::get<extract::AuctionSnapshot>(last);
    CHECK(snap.closed);
    REQUIRE(snap.winners.size() == final_alloc.winners.size());
    for (std::size_t i = 0; i < snap.winners.size(); ++i)
        CHECK(snap.winners[i].bidder_id == final_alloc.winners[i].bidder_id);
}
