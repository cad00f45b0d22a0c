#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "marketbench/common.hpp"
#include "marketbench/constants.hpp"
#include "marketbench/extractor.hpp"
#include "marketbench/market.hpp"

namespace marketbench::pipe {

// ---------------------------------------------------------------------------
// Cleansing verdicts

enum class CleanseStatus { Valid, SamplingLoss, NoInterest };

std::string to_string(CleanseStatus s);
std::optional<CleanseStatus> cleanse_status_from_string(std::string_view s);

struct CleanseVerdict {
    std::string auction_id;
    CleanseStatus status = CleanseStatus::Valid;
    std::string detail;
};

// SamplingLoss iff some consecutive snapshot pair has nonempty, disjoint
// winner sets. Startup transitions (empty -> nonempty) are not loss.
// Throws DataError on an empty series or one that mixes auctions.
CleanseVerdict detect_sampling_loss(const std::vector<extract::AuctionSnapshot>& series);

// NoInterest iff every snapshot's winner list is empty.
CleanseVerdict detect_no_interest(const std::vector<extract::AuctionSnapshot>& series);

// Combined verdict: SamplingLoss wins, then NoInterest, else Valid.
CleanseVerdict cleanse_series(const std::vector<extract::AuctionSnapshot>& series);

// ---------------------------------------------------------------------------
// Bid-history reconstruction

// One inferred bid event. The true placement lies in (seen_from, at]; `at`
// (the capture that first shows the bid) is the canonical upper bound used
// downstream.
struct ObservedBid {
    std::string auction_id;
    std::string bidder_id;
    Timestamp at = 0;
    Timestamp seen_from = 0;
    Money price = 0;
    int quantity = 1;
};

struct BidderProfile {
    std::string bidder_id;
    std::string auction_id;
    Timestamp entry_time = 0;  // first snapshot that shows the bidder winning
    Timestamp exit_time = 0;   // last own-bid event; displacement is not an event
    int bid_count = 0;
    Money final_bid = 0;
    std::vector<int> observed_quantities;  // one entry per event
};

// An event is a bidder newly appearing in the winner set or an incumbent's
// price rising. Series must be ordered by capture_time (throws DataError on
// decreasing times or mixed auctions).
std::vector<ObservedBid> reconstruct_events(const std::vector<extract::AuctionSnapshot>& series);

// Events aggregated per bidder; entry/exit are first/last event times.
std::vector<BidderProfile> reconstruct_bids(const std::vector<extract::AuctionSnapshot>& series);

// ---------------------------------------------------------------------------
// Frivolous-bidder rule

struct FrivolousPartition {
    std::vector<BidderProfile> valid;
    std::vector<BidderProfile> frivolous;
};

// Frivolous iff final_bid < 80% of the lowest winning price, exact in
// integer cents (5*final < 4*lowest). Winners are never frivolous. Throws
// DataError when the allocation has no winners (rule undefined).
FrivolousPartition filter_frivolous(const std::vector<BidderProfile>& profiles,
                                    const market::Allocation& final_allocation);

// Winner rows of a closed snapshot, as an Allocation for the rule above.
market::Allocation allocation_from_snapshot(const extract::AuctionSnapshot& snap);

// ---------------------------------------------------------------------------
// Retailer rules

// More than one state: national; exactly one: local; none: pure play.
// The catalog flag rides along unchanged.
std::pair<extract::ChannelClass, bool> classify_channel(
    const std::vector<std::string>& store_states, bool catalog);

// A usable rating block: present, at least 30 surveys, a 90-day window
// (inclusive of both ends) ending within 7 days of as_of.
bool validate_rating(const extract::RetailerProfile& profile, Date as_of);

struct QuoteThresholds {
    int min_quotes_per_product = constants::kMinQuotesPerProduct;
    int min_products_per_category = constants::kMinProductsPerCategory;
};

struct CategoryTally {
    std::string category;
    std::int64_t posted_prices_collected = 0;
    std::int64_t posted_prices_analyzed = 0;
    std::int64_t retailers_collected = 0;
    std::int64_t retailers_analyzed = 0;
    std::int64_t products = 0;  // products surviving all filters
};

struct AnalyzableQuoteSet {
    std::vector<extract::PriceQuote> quotes;  // survivors, input order kept
    std::vector<CategoryTally> tallies;       // every collected category, sorted
};

// Fixed filter order: condition New -> retailer not a refurb discounter ->
// rating validates -> products under the quote floor dropped -> categories
// under the product floor dropped. Quotes naming a retailer without a
// profile drop at the retailer step. Dropped categories keep their
// collected tallies with analyzed columns at zero.
AnalyzableQuoteSet filter_quotes(const std::vector<extract::PriceQuote>& quotes,
                                 const std::vector<extract::RetailerProfile>& retailers,
                                 Date as_of, const QuoteThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Collation

enum class Level { Bid, Bidder, Auction, Category, Day };

std::string to_string(Level level);
std::optional<Level> level_from_string(std::string_view s);

struct CollationFacts {
    std::string category;  // needed for Level::Category
};

struct AggregateRow {
    std::string key;
    std::int64_t bids = 0;      // events in the group; conserved across levels
    std::int64_t bidders = 0;   // distinct (auction, bidder) pairs
    std::int64_t auctions = 0;  // distinct auctions
    Money amount = 0;           // summed event prices; conserved across levels
};

// Rows sorted by key. Category level needs facts for every auction seen
// (throws DataError otherwise).
std::vector<AggregateRow> collate(const std::vector<ObservedBid>& bids,
                                  const std::map<std::string, CollationFacts>& facts,
                                  Level level);

// ---------------------------------------------------------------------------
// Review queue

enum class ReviewReason {
    MalformedDoc,
    SamplingLoss,
    ImpossibleValue,
    DuplicateKey,
    ManualClassifyNeeded,
};

std::string to_string(ReviewReason r);
std::optional<ReviewReason> reason_from_string(std::string_view s);

struct ReviewItem {
    std::string id;  // digest of (record_ref, reason); stable across runs
    std::string record_ref;
    ReviewReason reason = ReviewReason::ImpossibleValue;
    std::string detail;
    Timestamp created_at = 0;
    bool resolved = false;
    std::string resolution_note;
};

// Append-only JSONL-backed queue. Flagging the same (record, reason) twice
// is a no-op; resolutions append a second line rather than rewriting.
class ReviewQueue {
public:
    explicit ReviewQueue(std::filesystem::path file);

    // returns true when the item is new
    bool flag(const std::string& record_ref, ReviewReason reason, const std::string& detail,
              Timestamp created_at);

    // throws DataError on an unknown id or a second resolution
    void resolve(const std::string& id, const std::string& note, Timestamp at);

    std::vector<ReviewItem> items() const;       // insertion order
    std::vector<ReviewItem> unresolved() const;  // insertion order
    std::size_t size() const;
    const std::filesystem::path& file() const { return file_; }

    static std::string id_for(const std::string& record_ref, ReviewReason reason);

private:
    void append_line(const std::string& line);

    std::filesystem::path file_;
    std::vector<ReviewItem> items_;
    std::map<std::string, std::size_t> index_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Anomaly flagging (each returns the number of fresh items)

// Impossible listing values and duplicate (auction, capture_time) keys whose
// content differs.
int flag_snapshot_anomalies(const std::vector<extract::AuctionSnapshot>& snaps,
                            ReviewQueue& queue, Timestamp now);

// Non-positive posted prices.
int flag_quote_anomalies(const std::vector<extract::PriceQuote>& quotes, ReviewQueue& queue,
                         Timestamp now);

// Profiles violating their own invariants (no bids, non-positive final bid,
// exit before entry).
int flag_profile_anomalies(const std::vector<BidderProfile>& profiles, ReviewQueue& queue,
                           Timestamp now);

// A document the rule set could not parse.
int flag_malformed(const std::string& record_ref, const extract::Malformed& failure,
                   ReviewQueue& queue, Timestamp now);

// SamplingLoss verdicts need a human eye; NoInterest is a routine drop.
int flag_cleanse_verdicts(const std::vector<CleanseVerdict>& verdicts, ReviewQueue& queue,
                          Timestamp now);

// Sets channel on every profile (unknown states default to pure play) and
// flags those needing manual classification when a queue is given.
int assign_channels(std::vector<extract::RetailerProfile>& profiles, ReviewQueue* queue,
                    Timestamp now);

}  // namespace marketbench::pipe
