#pragma once

#include <string>
#include <vector>

#include "marketbench/common.hpp"
#include "marketbench/constants.hpp"

namespace marketbench::market {

enum class Condition { New, Refurbished, Used };

std::string to_string(Condition c);
std::optional<Condition> condition_from_string(std::string_view s);

struct ProductInfo {
    std::string title;
    std::string category;
    Condition condition = Condition::New;
    std::string life_cycle;  // e.g. "new release", "mature", "end of life"
};

enum class SourceKind { Field, Experimental, Survey, Simulation, Internet };

std::string to_string(SourceKind k);

struct DatasetProvenance {
    SourceKind source_kind = SourceKind::Simulation;
    Timestamp collected_at = 0;
    std::string collector;
};

struct AuctionConfig {
    std::string auction_id;
    int lot_size = 1;
    Money starting_bid = 0;
    Money bid_increment = 0;
    Timestamp scheduled_open = 0;
    Timestamp scheduled_close = 0;
    Duration soft_close_window = constants::kSoftCloseWindow;
    ProductInfo product;

    // throws ConfigError on any invariant violation
    void validate() const;
    Duration scheduled_duration() const { return scheduled_close - scheduled_open; }
};

// One bid: all units at one per-unit price.
struct BidPoint {
    std::string bidder_id;
    Money price = 0;  // per unit
    int quantity = 1;
    Timestamp placed_at = 0;

    bool valid() const { return price > 0 && quantity >= 1; }
};

struct Award {
    std::string bidder_id;
    int units_awarded = 0;
    Money price_paid = 0;  // per unit; the winner's own last bid
};

struct Allocation {
    std::vector<Award> winners;  // rank order, best first
    int units_allocated = 0;
};

// Total rank order over bids: price desc, then placed_at asc, then quantity
// desc, then bidder_id asc. The last key is ours; the first three are the
// auction house convention.
bool outranks(const BidPoint& a, const BidPoint& b);

// Greedy award along the rank order. Only the lowest-ranked winner may be
// partially filled; total awarded = min(lot_size, total units bid).
Allocation allocate_winners(const std::vector<BidPoint>& bids, int lot_size);

// starting_bid while the lot is not full, else lowest winning price + increment
Money min_required_bid(const AuctionConfig& config, const Allocation& standing);

// Earliest t >= scheduled_close such that no accepted bid lies in
// (t - soft_close_window, t]. Times must be sorted ascending.
Timestamp auction_end_time(const AuctionConfig& config,
                           const std::vector<Timestamp>& accepted_bid_times);

struct Payment {
    std::string bidder_id;
    Money total_due = 0;
};

// Each winner pays own last bid x units awarded.
std::vector<Payment> payment_schedule(const Allocation& allocation);

}  // namespace marketbench::market
