#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "marketbench/common.hpp"
#include "marketbench/constants.hpp"
#include "marketbench/extractor.hpp"
#include "marketbench/harvester.hpp"
#include "marketbench/market.hpp"

namespace marketbench::sim {

// ---------------------------------------------------------------------------
// Bidder population

enum class ArchetypeKind { EarlyMultiple, EarlySingle, LateArriver };

std::string to_string(ArchetypeKind k);
std::optional<ArchetypeKind> archetype_from_string(std::string_view s);

struct BidderArchetype {
    ArchetypeKind kind = ArchetypeKind::EarlySingle;
    double entry_lo = 0.0;  // fraction of scheduled duration
    double entry_hi = 0.5;
    double rebid_propensity = 0.0;  // chance to come back after displacement
    Money valuation_lo = 1300;
    Money valuation_hi = 2000;
    int planned_bids_lo = 1;  // own raises are planned up front
    int planned_bids_hi = 1;

    void validate() const;  // throws ConfigError
};

// Stock parameterizations of the three strategy groups.
BidderArchetype early_multiple_archetype();
BidderArchetype early_single_archetype();
BidderArchetype late_arriver_archetype();

struct SimBidder {
    std::string bidder_id;
    ArchetypeKind kind = ArchetypeKind::EarlySingle;
    double entry_frac = 0.0;
    Money valuation = 0;
    double rebid_propensity = 0.0;
    int planned_bids = 1;
};

// Counts follow largest-remainder rounding of n * fraction; fractions must
// sum to 1 within 1e-9.
std::vector<SimBidder> spawn_population(const std::map<ArchetypeKind, double>& mix, int n,
                                        std::uint64_t seed);
std::vector<SimBidder> spawn_population(const std::map<ArchetypeKind, double>& mix, int n,
                                        std::uint64_t seed,
                                        const std::map<ArchetypeKind, BidderArchetype>& defs);

// ---------------------------------------------------------------------------
// Auction engine

struct LoggedBid {
    market::BidPoint bid;
    bool accepted = false;
};

struct GroundTruthLog {
    market::AuctionConfig auction;
    std::vector<SimBidder> population;
    std::vector<LoggedBid> bids;  // chronological
    market::Allocation final_allocation;
    Timestamp end_time = 0;

    std::vector<market::BidPoint> accepted_bids() const;
    std::vector<Timestamp> accepted_times() const;  // strictly increasing
};

// Deterministic per (config, population, seed). Accepted bids always satisfy
// the minimum-required rule at placement, and their timestamps are strictly
// increasing so every acceptance is a distinct observable page state.
GroundTruthLog run_auction(const market::AuctionConfig& config,
                           const std::vector<SimBidder>& population, std::uint64_t seed);

// What the listing page knows at time t: current winners only, no history.
struct AuctionPageState {
    std::string auction_id;
    market::ProductInfo product;
    int lot_size = 1;
    Money starting_bid = 0;
    Money bid_increment = 0;
    Money min_required_bid = 0;
    Timestamp scheduled_open = 0;
    Timestamp scheduled_close = 0;
    bool closed = false;
    std::optional<Timestamp> ended_at;
    std::vector<extract::WinnerRow> winners;  // rank order
    Timestamp as_of = 0;
};

AuctionPageState projection(const GroundTruthLog& log, Timestamp t);

// ---------------------------------------------------------------------------
// Page rendering

struct PageTemplate {
    std::string name;
    // body with {{field}} placeholders; repeated sections between
    // {{#block}} and {{/block}} markers
    std::string body;
    std::map<std::string, std::pair<std::string, std::string>> field_anchors;

    void validate() const;  // throws ConfigError when anchors don't line up
};

struct PageFields {
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::map<std::string, std::string>>> blocks;
};

// Substitutes blocks then scalars; any placeholder left without a value is a
// RenderError. Unknown block markers are render errors too.
std::string render_page(const PageFields& fields, const PageTemplate& tpl);

PageTemplate default_auction_template();
PageTemplate default_search_template();
PageTemplate default_quote_template();
PageTemplate default_retailer_template();

PageFields page_fields(const AuctionPageState& state);

// ---------------------------------------------------------------------------
// P2P search corpus

struct SearchPageState {
    std::string query_album;
    Timestamp as_of = 0;
    std::vector<extract::SearchObservation> rows;
};

PageFields page_fields(const SearchPageState& state);

struct P2pCorpus {
    std::vector<SearchPageState> pages;       // one per album, album order kept
    std::map<std::string, int> rows_by_album;  // ground truth
    int total_rows = 0;
};

P2pCorpus gen_p2p_corpus(const std::vector<std::string>& albums, int n_per_album,
                         std::uint64_t seed);

// Weekly sharing counts and chart positions for the concordance analysis.
// Chart positions for week w+1 are the sharing ranks of week w, so sharing
// moves lead chart moves by one week.
struct WeeklySharingMarket {
    std::vector<std::string> albums;
    // sharing[w][album] = shared-copy count in week w
    std::vector<std::map<std::string, int>> sharing;
    // positions[w][album] = chart position in week w (1 = best)
    std::vector<std::map<std::string, int>> positions;
    std::vector<std::vector<std::string>> charts;  // ranked best-first
};

WeeklySharingMarket gen_sharing_market(int n_albums, int weeks, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Retail quote market

struct QuotePageState {
    std::string product_id;
    std::string category;
    Timestamp as_of = 0;
    // rows reuse PriceQuote; capture_time is filled by extraction, not here
    std::vector<extract::PriceQuote> quotes;
};

struct RetailerPageState {
    extract::RetailerProfile profile;
    Timestamp as_of = 0;
};

PageFields page_fields(const QuotePageState& state);
PageFields page_fields(const RetailerPageState& state);

struct RetailScenario {
    int categories = 8;
    int retailers = 40;
    int products_per_category = 25;
    int quotes_lo = 5;  // below the 7-quote floor on purpose: thin products occur
    int quotes_hi = 12;
    Money price_lo = 4900;
    Money price_hi = 49900;
    double refurb_quote_p = 0.12;      // quote condition Refurbished/Used
    double unrated_retailer_p = 0.10;  // ratings block missing entirely
    double low_survey_p = 0.10;        // survey_count below the floor
    double stale_window_p = 0.10;      // rating window old or mis-sized
    double refurb_discounter_p = 0.10;
    double unknown_states_p = 0.05;    // page cannot state store locations
    int weak_category = -1;            // index of a category kept under the
                                       // product floor; -1 plants none
    int weak_category_products = 12;
    Date as_of = 11120;                // capture date for rating windows

    void validate() const;
};

struct RetailMarket {
    RetailScenario scenario;
    std::vector<RetailerPageState> retailer_pages;
    std::vector<QuotePageState> product_pages;
    // ground truth mirrors of the page contents, for brute-force oracles
    std::vector<extract::RetailerProfile> truth_retailers;
    std::vector<extract::PriceQuote> truth_quotes;
};

RetailMarket gen_retail_market(const RetailScenario& scenario, std::uint64_t seed);
RetailMarket gen_retail_market(int categories, int retailers, int products_per_category,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Whole-market scenario

struct AuctionScenario {
    int auctions = 20;
    int bidders_per_auction = 10;
    std::map<ArchetypeKind, double> mix = {{ArchetypeKind::EarlyMultiple, 0.4},
                                           {ArchetypeKind::EarlySingle, 0.3},
                                           {ArchetypeKind::LateArriver, 0.3}};
    int lot_lo = 1;
    int lot_hi = 10;
    Money starting_bid = 900;
    Money bid_increment = 100;
    Money valuation_lo = 1300;
    Money valuation_hi = 2000;
    Timestamp first_open = 951912000;  // 2000-03-00 era
    Duration duration = 3 * kSecondsPerDay;
    Duration stagger = 3600;  // successive auctions open this far apart
    Duration soft_close_window = constants::kSoftCloseWindow;

    void validate() const;
};

struct ScenarioConfig {
    AuctionScenario auctions;
    bool with_auctions = true;

    std::vector<std::string> albums;  // empty means no p2p targets
    int results_per_album = 12;

    bool with_retail = false;
    RetailScenario retail;
};

struct SimMarket {
    std::vector<GroundTruthLog> auctions;
    P2pCorpus p2p;
    Timestamp p2p_as_of = 0;
    bool has_retail = false;
    RetailMarket retail;
};

SimMarket build_market(const ScenarioConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Serving

// Transport-agnostic market service with a virtual clock and failure
// injection. All state sits behind one mutex; HTTP or in-process adapters
// stay thin.
class Service {
public:
    Service(SimMarket market, Timestamp start);

    Timestamp now() const;
    void advance_to(Timestamp t);

    // Accepted-bid instants and the end time for auction targets; static
    // pages have no events.
    std::optional<Timestamp> next_event_after(const std::string& target, Timestamp t) const;

    // modes: "drop" (no response), "error" (server failure), "garble"
    // (succeed with mangled bytes); next `count` requests are affected
    void inject(const std::string& mode, int count);

    struct Response {
        enum class Verdict { Ok, Drop, Error, Garble };
        Verdict verdict = Verdict::Ok;
        std::string body;
        Timestamp served_at = 0;
    };

    // Paths: /auction/<id>, /search?album=<name>, /quotes?product=<id>,
    // /retailer/<id>. Unknown path -> Error response.
    Response get(const std::string& path);

    std::vector<std::string> targets() const;  // sorted archive identifiers
    static std::string target_of_path(const std::string& path);
    static std::string path_of_target(const std::string& target);

    const SimMarket& market() const { return market_; }

private:
    Response render_target_locked(const std::string& target, Timestamp t) const;

    SimMarket market_;
    std::map<std::string, const GroundTruthLog*> auctions_by_id_;
    PageTemplate auction_tpl_;
    PageTemplate search_tpl_;
    PageTemplate quote_tpl_;
    PageTemplate retailer_tpl_;
    Timestamp now_;
    int drop_next_ = 0;
    int error_next_ = 0;
    int garble_next_ = 0;
    mutable std::mutex mu_;
};

// In-process adapters for the harvester's capture loops.
class SimFetcher : public harvest::Fetcher {
public:
    explicit SimFetcher(Service& service) : service_(service) {}
    harvest::FetchResult get(const std::string& path) override;

private:
    Service& service_;
};

class SimClockControl : public harvest::ClockControl {
public:
    explicit SimClockControl(Service& service) : service_(service) {}
    Timestamp now() override { return service_.now(); }
    void advance_to(Timestamp t) override { service_.advance_to(t); }

private:
    Service& service_;
};

class SimEventFeed : public harvest::EventFeed {
public:
    explicit SimEventFeed(Service& service) : service_(service) {}
    std::optional<Timestamp> next_event_after(const std::string& target, Timestamp t) override {
        return service_.next_event_after(target, t);
    }

private:
    Service& service_;
};

// Writes every target's page, rendered at the service's current time, under
// <dir>/<sanitized target>.html; returns the file count.
int dump_fixtures(Service& service, const std::filesystem::path& dir);

}  // namespace marketbench::sim
