#include "marketbench/market.hpp"

#include <algorithm>
#include <numeric>

namespace marketbench::market {

std::string to_string(Condition c) {
    switch (c) {
        case Condition::New: return "New";
        case Condition::Refurbished: return "Refurbished";
        case Condition::Used: return "Used";
    }
    return "New";
}

std::optional<Condition> condition_from_string(std::string_view s) {
    if (s == "New") return Condition::New;
    if (s == "Refurbished") return Condition::Refurbished;
    if (s == "Used") return Condition::Used;
    return std::nullopt;
}

std::string to_string(SourceKind k) {
    switch (k) {
        case SourceKind::Field: return "Field";
        case SourceKind::Experimental: return "Experimental";
        case SourceKind::Survey: return "Survey";
        case SourceKind::Simulation: return "Simulation";
        case SourceKind::Internet: return "Internet";
    }
    return "Simulation";
}

void AuctionConfig::validate() const {
    if (auction_id.empty()) throw ConfigError("auction_id must be nonempty");
    if (lot_size < 1) throw ConfigError("lot_size must be >= 1");
    if (starting_bid <= 0) throw ConfigError("starting_bid must be positive");
    if (bid_increment <= 0) throw ConfigError("bid_increment must be positive");
    if (scheduled_close <= scheduled_open)
        throw ConfigError("scheduled_close must be after scheduled_open");
    if (soft_close_window <= 0) throw ConfigError("soft_close_window must be positive");
}

bool outranks(const BidPoint& a, const BidPoint& b) {
    if (a.price != b.price) return a.price > b.price;
    if (a.placed_at != b.placed_at) return a.placed_at < b.placed_at;
    if (a.quantity != b.quantity) return a.quantity > b.quantity;
    return a.bidder_id < b.bidder_id;
}

Allocation allocate_winners(const std::vector<BidPoint>& bids, int lot_size) {
    std::vector<std::size_t> order(bids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return outranks(bids[i], bids[j]);
    });

    Allocation out;
    int remaining = lot_size;
    for (std::size_t idx : order) {
        if (remaining == 0) break;
        const BidPoint& b = bids[idx];
        int units = std::min(b.quantity, remaining);
        out.winners.push_back({b.bidder_id, units, b.price});
        out.units_allocated += units;
        remaining -= units;
    }
    return out;
}

Money min_required_bid(const AuctionConfig& config, const Allocation& standing) {
    if (standing.units_allocated < config.lot_size) return config.starting_bid;
    Money lowest = standing.winners.front().price_paid;
    for (const Award& w : standing.winners) lowest = std::min(lowest, w.price_paid);
    return lowest + config.bid_increment;
}

Timestamp auction_end_time(const AuctionConfig& config,
                           const std::vector<Timestamp>& accepted_bid_times) {
    Timestamp end = config.scheduled_close;
    for (Timestamp t : accepted_bid_times) {
        if (t > end - config.soft_close_window && t <= end) end = t + config.soft_close_window;
    }
    return end;
}

std::vector<Payment> payment_schedule(const Allocation& allocation) {
    std::vector<Payment> out;
    out.reserve(allocation.winners.size());
    for (const Award& w : allocation.winners)
        out.push_back({w.bidder_id, static_cast<Money>(w.units_awarded) * w.price_paid});
    return out;
}

}  // namespace marketbench::market
