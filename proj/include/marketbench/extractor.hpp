#pragma once

#include <map>
#include <set>
#include <variant>
#include <vector>

#include "marketbench/common.hpp"
#include "marketbench/harvester.hpp"
#include "marketbench/market.hpp"

namespace marketbench::extract {

enum class RecordKind { AuctionPage, SearchResults, QuotePage };

std::string to_string(RecordKind k);
std::optional<RecordKind> record_kind_from_string(std::string_view s);

struct AnchorRule {
    std::string prefix;
    std::string suffix;
    bool repeat = false;
    // sub-rules applied inside each repeated block, in declaration order
    std::vector<std::pair<std::string, AnchorRule>> subrules;
};

struct ExtractionRuleSet {
    std::string name;
    RecordKind kind = RecordKind::AuctionPage;
    std::vector<std::pair<std::string, AnchorRule>> field_rules;  // declaration order
    std::set<std::string> required_fields;

    const AnchorRule* find(const std::string& field) const;
};

// Rule file grammar, one declaration per line:
//   @name <ruleset name>
//   @kind AuctionPage | SearchResults | QuotePage
//   @require <field> [<field>...]
//   <field> := "<prefix>" ... "<suffix>" [repeat]
//   <parent>.<field> := "<prefix>" ... "<suffix>"
//   # comment
// Throws ConfigError naming the offending line.
ExtractionRuleSet compile_rules(const std::string& text);

struct Malformed {
    std::string reason;
    std::string missing_anchor;  // first missing anchor when that is the cause
};

struct RawRecord {
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::map<std::string, std::string>>> rows;
};

// Pure anchor scan; never throws on document content.
std::variant<RawRecord, Malformed> apply_rules(std::string_view doc,
                                               const ExtractionRuleSet& rules);

struct WinnerRow {
    std::string bidder_id;
    Money price = 0;  // per unit
    int quantity = 1;
};

struct AuctionSnapshot {
    std::string auction_id;
    Timestamp capture_time = 0;
    market::ProductInfo product;
    Money min_required_bid = 0;
    int lot_size = 1;
    std::vector<WinnerRow> winners;
    // listing facts carried on the page; optional so partial sources stay usable
    std::optional<Timestamp> listed_open;
    std::optional<Timestamp> listed_close;
    std::optional<Money> starting_bid;
    std::optional<Money> bid_increment;
    bool closed = false;
    std::optional<Timestamp> ended_at;

    std::set<std::string> winner_ids() const;
};

struct SearchObservation {
    Timestamp capture_time = 0;
    std::string query_album;
    std::string sharer_id;
    std::string file_title;
    bool album_match = true;
    std::int64_t file_size = 0;  // bytes
    int bitrate = 0;             // kbps
    int track_length = 0;        // seconds
    std::string connection_class;
    std::map<std::string, std::string> extra;  // schema-extensible tail
};

struct PriceQuote {
    std::string retailer_id;
    std::string product_id;
    std::string category;
    Money posted_price = 0;
    market::Condition condition = market::Condition::New;
    Timestamp capture_time = 0;
};

enum class ChannelClass { PurePlay, LocalBrickNClick, NationalBrickNClick };

std::string to_string(ChannelClass c);
std::optional<ChannelClass> channel_from_string(std::string_view s);

struct RatingBlock {
    int on_time_delivery = 0;
    int customer_support = 0;
    int product_met_expectations = 0;
    int shop_again = 0;
};

struct RetailerProfile {
    std::string retailer_id;
    std::optional<RatingBlock> ratings;
    int survey_count = 0;
    std::optional<Date> window_start;
    std::optional<Date> window_end;
    int size_rank = 0;
    std::vector<std::string> store_states;       // sorted, deduplicated
    bool states_unknown = false;                  // page could not say
    std::optional<ChannelClass> channel;          // derived downstream
    bool catalog = false;
    bool refurb_discounter = false;
};

using AuctionOutcome = std::variant<AuctionSnapshot, Malformed>;
using SearchOutcome = std::variant<std::vector<SearchObservation>, Malformed>;

struct QuoteExtraction {
    std::vector<PriceQuote> quotes;
    std::optional<RetailerProfile> profile;
};

using QuoteOutcome = std::variant<QuoteExtraction, Malformed>;

AuctionOutcome extract_auction(const harvest::RawDocument& doc, const ExtractionRuleSet& rules);
SearchOutcome extract_search(const harvest::RawDocument& doc, const ExtractionRuleSet& rules);
QuoteOutcome extract_quotes(const harvest::RawDocument& doc, const ExtractionRuleSet& rules);

// Rule texts matching the simulator's stock page layouts.
const std::string& default_auction_rules();
const std::string& default_search_rules();
const std::string& default_quote_rules();
const std::string& default_retailer_rules();

}  // namespace marketbench::extract
