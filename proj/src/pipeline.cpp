#include "marketbench/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace marketbench::pipe {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Cleansing

std::string to_string(CleanseStatus s) {
    switch (s) {
        case CleanseStatus::Valid: return "Valid";
        case CleanseStatus::SamplingLoss: return "SamplingLoss";
        case CleanseStatus::NoInterest: return "NoInterest";
    }
    return "Valid";
}

std::optional<CleanseStatus> cleanse_status_from_string(std::string_view s) {
    if (s == "Valid") return CleanseStatus::Valid;
    if (s == "SamplingLoss") return CleanseStatus::SamplingLoss;
    if (s == "NoInterest") return CleanseStatus::NoInterest;
    return std::nullopt;
}

namespace {

void check_series(const std::vector<extract::AuctionSnapshot>& series) {
    if (series.empty()) throw DataError("cannot cleanse an empty snapshot series");
    for (const auto& s : series)
        if (s.auction_id != series.front().auction_id)
            throw DataError("snapshot series mixes auctions: " + series.front().auction_id +
                            " and " + s.auction_id);
}

std::set<std::string> ids_of(const extract::AuctionSnapshot& snap) {
    std::set<std::string> out;
    for (const auto& w : snap.winners) out.insert(w.bidder_id);
    return out;
}

}  // namespace

CleanseVerdict detect_sampling_loss(const std::vector<extract::AuctionSnapshot>& series) {
    check_series(series);
    CleanseVerdict v;
    v.auction_id = series.front().auction_id;
    for (std::size_t i = 1; i < series.size(); ++i) {
        auto prev = ids_of(series[i - 1]);
        auto cur = ids_of(series[i]);
        if (prev.empty() || cur.empty()) continue;  // startup or quiet page, not loss
        bool overlap = false;
        for (const auto& id : cur)
            if (prev.count(id)) {
                overlap = true;
                break;
            }
        if (!overlap) {
            v.status = CleanseStatus::SamplingLoss;
            v.detail = "winner sets disjoint between " +
                       format_timestamp(series[i - 1].capture_time) + " and " +
                       format_timestamp(series[i].capture_time);
            return v;
        }
    }
    v.status = CleanseStatus::Valid;
    v.detail = "winner continuity holds across " + std::to_string(series.size()) +
               " snapshots";
    return v;
}

CleanseVerdict detect_no_interest(const std::vector<extract::AuctionSnapshot>& series) {
    check_series(series);
    CleanseVerdict v;
    v.auction_id = series.front().auction_id;
    for (const auto& s : series) {
        if (!s.winners.empty()) {
            v.status = CleanseStatus::Valid;
            v.detail = "bids observed";
            return v;
        }
    }
    v.status = CleanseStatus::NoInterest;
    v.detail = "no bidder ever appeared across " + std::to_string(series.size()) +
               " snapshots";
    return v;
}

CleanseVerdict cleanse_series(const std::vector<extract::AuctionSnapshot>& series) {
    auto loss = detect_sampling_loss(series);
    if (loss.status == CleanseStatus::SamplingLoss) return loss;
    auto quiet = detect_no_interest(series);
    if (quiet.status == CleanseStatus::NoInterest) return quiet;
    CleanseVerdict v;
    v.auction_id = series.front().auction_id;
    v.status = CleanseStatus::Valid;
    v.detail = "clean";
    return v;
}

// ---------------------------------------------------------------------------
// Reconstruction

std::vector<ObservedBid> reconstruct_events(const std::vector<extract::AuctionSnapshot>& series) {
    check_series(series);
    std::vector<ObservedBid> events;
    std::map<std::string, Money> standing;  // winner -> price in previous snapshot
    Timestamp prev_time = series.front().listed_open.value_or(series.front().capture_time);
    Timestamp last_capture = series.front().capture_time - 1;

    for (const auto& snap : series) {
        if (snap.capture_time < last_capture)
            throw DataError("snapshot series runs backwards at " +
                            format_timestamp(snap.capture_time));
        last_capture = snap.capture_time;

        std::map<std::string, Money> current;
        for (const auto& w : snap.winners) {
            current[w.bidder_id] = w.price;
            auto it = standing.find(w.bidder_id);
            bool fresh_face = it == standing.end();
            bool raised = !fresh_face && w.price > it->second;
            if (!fresh_face && !raised) continue;
            ObservedBid ev;
            ev.auction_id = snap.auction_id;
            ev.bidder_id = w.bidder_id;
            ev.at = snap.capture_time;
            ev.seen_from = prev_time;
            ev.price = w.price;
            ev.quantity = w.quantity;
            events.push_back(std::move(ev));
        }
        standing = std::move(current);
        prev_time = snap.capture_time;
    }
    return events;
}

std::vector<BidderProfile> reconstruct_bids(const std::vector<extract::AuctionSnapshot>& series) {
    auto events = reconstruct_events(series);
    std::vector<BidderProfile> profiles;
    std::map<std::string, std::size_t> index;
    for (const auto& ev : events) {
        auto it = index.find(ev.bidder_id);
        if (it == index.end()) {
            BidderProfile p;
            p.bidder_id = ev.bidder_id;
            p.auction_id = ev.auction_id;
            p.entry_time = ev.at;
            index[ev.bidder_id] = profiles.size();
            profiles.push_back(std::move(p));
            it = index.find(ev.bidder_id);
        }
        BidderProfile& p = profiles[it->second];
        p.exit_time = ev.at;
        p.bid_count += 1;
        p.final_bid = ev.price;
        p.observed_quantities.push_back(ev.quantity);
    }
    return profiles;
}

// ---------------------------------------------------------------------------
// Frivolous rule

FrivolousPartition filter_frivolous(const std::vector<BidderProfile>& profiles,
                                    const market::Allocation& final_allocation) {
    if (final_allocation.winners.empty())
        throw DataError("the frivolous-bid rule is undefined without winners");
    Money lowest_win = final_allocation.winners.back().price_paid;
    std::set<std::string> winner_ids;
    for (const auto& award : final_allocation.winners) winner_ids.insert(award.bidder_id);

    FrivolousPartition out;
    for (const auto& p : profiles) {
        if (winner_ids.count(p.bidder_id)) {
            out.valid.push_back(p);
        } else if (5 * p.final_bid < 4 * lowest_win) {  // final < 80% of lowest win
            out.frivolous.push_back(p);
        } else {
            out.valid.push_back(p);
        }
    }
    return out;
}

market::Allocation allocation_from_snapshot(const extract::AuctionSnapshot& snap) {
    market::Allocation out;
    for (const auto& w : snap.winners) {
        out.winners.push_back({w.bidder_id, w.quantity, w.price});
        out.units_allocated += w.quantity;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Retailer rules

std::pair<extract::ChannelClass, bool> classify_channel(
    const std::vector<std::string>& store_states, bool catalog) {
    std::set<std::string> distinct(store_states.begin(), store_states.end());
    extract::ChannelClass c = extract::ChannelClass::PurePlay;
    if (distinct.size() > 1) c = extract::ChannelClass::NationalBrickNClick;
    else if (distinct.size() == 1) c = extract::ChannelClass::LocalBrickNClick;
    return {c, catalog};
}

bool validate_rating(const extract::RetailerProfile& profile, Date as_of) {
    if (!profile.ratings || !profile.window_start || !profile.window_end) return false;
    if (profile.survey_count < constants::kMinSurveyCount) return false;
    if (*profile.window_end - *profile.window_start + 1 != constants::kRatingWindowDays)
        return false;
    Date age = as_of - *profile.window_end;
    return age >= 0 && age <= constants::kRatingRecencyToleranceDays;
}

AnalyzableQuoteSet filter_quotes(const std::vector<extract::PriceQuote>& quotes,
                                 const std::vector<extract::RetailerProfile>& retailers,
                                 Date as_of, const QuoteThresholds& thresholds) {
    if (thresholds.min_quotes_per_product < 1 || thresholds.min_products_per_category < 1)
        throw ConfigError("quote filter thresholds must be at least 1");

    std::map<std::string, const extract::RetailerProfile*> by_id;
    for (const auto& r : retailers) by_id[r.retailer_id] = &r;

    struct Tally {
        std::int64_t collected = 0;
        std::int64_t analyzed = 0;
        std::set<std::string> retailers_collected;
        std::set<std::string> retailers_analyzed;
        std::set<std::string> products;
    };
    std::map<std::string, Tally> tallies;
    for (const auto& q : quotes) {
        Tally& t = tallies[q.category];
        t.collected += 1;
        t.retailers_collected.insert(q.retailer_id);
    }

    // survivors of the per-quote steps, in fixed order
    std::vector<const extract::PriceQuote*> stage;
    for (const auto& q : quotes) {
        if (q.condition != market::Condition::New) continue;
        auto it = by_id.find(q.retailer_id);
        if (it == by_id.end() || it->second->refurb_discounter) continue;
        if (!validate_rating(*it->second, as_of)) continue;
        stage.push_back(&q);
    }

    // drop products under the quote floor
    std::map<std::pair<std::string, std::string>, int> per_product;
    for (const auto* q : stage) per_product[{q->category, q->product_id}] += 1;
    std::vector<const extract::PriceQuote*> stocked;
    for (const auto* q : stage)
        if (per_product.at({q->category, q->product_id}) >= thresholds.min_quotes_per_product)
            stocked.push_back(q);

    // drop categories under the product floor
    std::map<std::string, std::set<std::string>> products_per_category;
    for (const auto* q : stocked) products_per_category[q->category].insert(q->product_id);

    AnalyzableQuoteSet out;
    for (const auto* q : stocked) {
        if (static_cast<int>(products_per_category.at(q->category).size()) <
            thresholds.min_products_per_category)
            continue;
        out.quotes.push_back(*q);
        Tally& t = tallies.at(q->category);
        t.analyzed += 1;
        t.retailers_analyzed.insert(q->retailer_id);
        t.products.insert(q->product_id);
    }

    for (const auto& [category, t] : tallies) {
        CategoryTally row;
        row.category = category;
        row.posted_prices_collected = t.collected;
        row.posted_prices_analyzed = t.analyzed;
        row.retailers_collected = static_cast<std::int64_t>(t.retailers_collected.size());
        row.retailers_analyzed = static_cast<std::int64_t>(t.retailers_analyzed.size());
        row.products = static_cast<std::int64_t>(t.products.size());
        out.tallies.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Collation

std::string to_string(Level level) {
    switch (level) {
        case Level::Bid: return "bid";
        case Level::Bidder: return "bidder";
        case Level::Auction: return "auction";
        case Level::Category: return "category";
        case Level::Day: return "day";
    }
    return "bid";
}

std::optional<Level> level_from_string(std::string_view s) {
    if (s == "bid") return Level::Bid;
    if (s == "bidder") return Level::Bidder;
    if (s == "auction") return Level::Auction;
    if (s == "category") return Level::Category;
    if (s == "day") return Level::Day;
    return std::nullopt;
}

std::vector<AggregateRow> collate(const std::vector<ObservedBid>& bids,
                                  const std::map<std::string, CollationFacts>& facts,
                                  Level level) {
    auto key_of = [&](const ObservedBid& b) -> std::string {
        switch (level) {
            case Level::Bid:
                return b.auction_id + "/" + b.bidder_id + "@" + std::to_string(b.at);
            case Level::Bidder: return b.auction_id + "/" + b.bidder_id;
            case Level::Auction: return b.auction_id;
            case Level::Category: {
                auto it = facts.find(b.auction_id);
                if (it == facts.end())
                    throw DataError("no collation facts for auction " + b.auction_id);
                return it->second.category;
            }
            case Level::Day: return format_date(day_of(b.at));
        }
        throw ConfigError("unknown collation level");
    };

    struct Group {
        std::int64_t bids = 0;
        Money amount = 0;
        std::set<std::string> bidders;
        std::set<std::string> auctions;
    };
    std::map<std::string, Group> groups;
    for (const auto& b : bids) {
        Group& g = groups[key_of(b)];
        g.bids += 1;
        g.amount += b.price;
        g.bidders.insert(b.auction_id + "/" + b.bidder_id);
        g.auctions.insert(b.auction_id);
    }

    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, g] : groups) {
        AggregateRow row;
        row.key = key;
        row.bids = g.bids;
        row.bidders = static_cast<std::int64_t>(g.bidders.size());
        row.auctions = static_cast<std::int64_t>(g.auctions.size());
        row.amount = g.amount;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Review queue

std::string to_string(ReviewReason r) {
    switch (r) {
        case ReviewReason::MalformedDoc: return "MalformedDoc";
        case ReviewReason::SamplingLoss: return "SamplingLoss";
        case ReviewReason::ImpossibleValue: return "ImpossibleValue";
        case ReviewReason::DuplicateKey: return "DuplicateKey";
        case ReviewReason::ManualClassifyNeeded: return "ManualClassifyNeeded";
    }
    return "ImpossibleValue";
}

std::optional<ReviewReason> reason_from_string(std::string_view s) {
    if (s == "MalformedDoc") return ReviewReason::MalformedDoc;
    if (s == "SamplingLoss") return ReviewReason::SamplingLoss;
    if (s == "ImpossibleValue") return ReviewReason::ImpossibleValue;
    if (s == "DuplicateKey") return ReviewReason::DuplicateKey;
    if (s == "ManualClassifyNeeded") return ReviewReason::ManualClassifyNeeded;
    return std::nullopt;
}

std::string ReviewQueue::id_for(const std::string& record_ref, ReviewReason reason) {
    return hex64(fnv1a64(record_ref + "|" + to_string(reason)));
}

ReviewQueue::ReviewQueue(std::filesystem::path file) : file_(std::move(file)) {
    if (!std::filesystem::exists(file_)) return;
    std::ifstream in(file_);
    if (!in) throw DataError("cannot read review queue " + file_.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("review queue " + file_.string() + " line " +
                            std::to_string(line_no) + ": " + e.what());
        }
        std::string id = j.value("id", "");
        if (id.empty())
            throw DataError("review queue line " + std::to_string(line_no) + " has no id");
        if (j.value("resolved", false)) {
            auto it = index_.find(id);
            if (it == index_.end())
                throw DataError("review queue resolves unknown item " + id);
            items_[it->second].resolved = true;
            items_[it->second].resolution_note = j.value("note", "");
            continue;
        }
        if (index_.count(id)) continue;  // replayed flag lines are harmless
        ReviewItem item;
        item.id = id;
        item.record_ref = j.value("ref", "");
        auto reason = reason_from_string(j.value("reason", ""));
        if (!reason)
            throw DataError("review queue line " + std::to_string(line_no) +
                            " has unknown reason '" + j.value("reason", "") + "'");
        item.reason = *reason;
        item.detail = j.value("detail", "");
        auto at = parse_timestamp(j.value("created_at", ""));
        item.created_at = at.value_or(0);
        index_[item.id] = items_.size();
        items_.push_back(std::move(item));
    }
}

void ReviewQueue::append_line(const std::string& line) {
    std::filesystem::create_directories(file_.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    if (!out) throw DataError("cannot append to review queue " + file_.string());
    out << line << "\n";
}

bool ReviewQueue::flag(const std::string& record_ref, ReviewReason reason,
                       const std::string& detail, Timestamp created_at) {
    std::lock_guard<std::mutex> lock(mu_);
    std::string id = id_for(record_ref, reason);
    if (index_.count(id)) return false;

    ReviewItem item;
    item.id = id;
    item.record_ref = record_ref;
    item.reason = reason;
    item.detail = detail;
    item.created_at = created_at;

    json j = {{"id", item.id},
              {"ref", item.record_ref},
              {"reason", to_string(item.reason)},
              {"detail", item.detail},
              {"created_at", format_timestamp(item.created_at)}};
    append_line(j.dump());
    index_[item.id] = items_.size();
    items_.push_back(std::move(item));
    return true;
}

void ReviewQueue::resolve(const std::string& id, const std::string& note, Timestamp at) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("no review item with id " + id);
    ReviewItem& item = items_[it->second];
    if (item.resolved) throw DataError("review item " + id + " is already resolved");

    json j = {{"id", id},
              {"resolved", true},
              {"note", note},
              {"resolved_at", format_timestamp(at)}};
    append_line(j.dump());
    item.resolved = true;
    item.resolution_note = note;
}

std::vector<ReviewItem> ReviewQueue::items() const {
    std::lock_guard<std::mutex> lock(mu_);
    return items_;
}

std::vector<ReviewItem> ReviewQueue::unresolved() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<ReviewItem> out;
    for (const auto& item : items_)
        if (!item.resolved) out.push_back(item);
    return out;
}

std::size_t ReviewQueue::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return items_.size();
}

// ---------------------------------------------------------------------------
// Anomaly flagging

namespace {

std::uint64_t snapshot_digest(const extract::AuctionSnapshot& s) {
    std::ostringstream key;
    key << s.lot_size << "|" << s.min_required_bid << "|" << s.closed;
    for (const auto& w : s.winners)
        key << "|" << w.bidder_id << "@" << w.price << "x" << w.quantity;
    return fnv1a64(key.str());
}

}  // namespace

int flag_snapshot_anomalies(const std::vector<extract::AuctionSnapshot>& snaps,
                            ReviewQueue& queue, Timestamp now) {
    int fresh = 0;
    std::map<std::pair<std::string, Timestamp>, std::uint64_t> seen;
    for (const auto& s : snaps) {
        std::string ref = "auction/" + s.auction_id + "@" + format_timestamp(s.capture_time);
        if (s.lot_size < 1)
            fresh += queue.flag(ref, ReviewReason::ImpossibleValue,
                                "lot size " + std::to_string(s.lot_size), now);
        if (s.min_required_bid <= 0)
            fresh += queue.flag(ref, ReviewReason::ImpossibleValue,
                                "minimum required bid " + format_money(s.min_required_bid),
                                now);
        for (const auto& w : s.winners) {
            if (w.price <= 0 || w.quantity < 1) {
                fresh += queue.flag(ref, ReviewReason::ImpossibleValue,
                                    "winner " + w.bidder_id + " at " + format_money(w.price) +
                                        " x" + std::to_string(w.quantity),
                                    now);
                break;
            }
        }
        auto key = std::make_pair(s.auction_id, s.capture_time);
        auto it = seen.find(key);
        std::uint64_t digest = snapshot_digest(s);
        if (it == seen.end()) seen[key] = digest;
        else if (it->second != digest)
            fresh += queue.flag(ref, ReviewReason::DuplicateKey,
                                "same capture instant, different content", now);
    }
    return fresh;
}

int flag_quote_anomalies(const std::vector<extract::PriceQuote>& quotes, ReviewQueue& queue,
                         Timestamp now) {
    int fresh = 0;
    for (const auto& q : quotes) {
        if (q.posted_price > 0) continue;
        std::string ref = "quote/" + q.retailer_id + "/" + q.product_id + "@" +
                          format_timestamp(q.capture_time);
        fresh += queue.flag(ref, ReviewReason::ImpossibleValue,
                            "posted price " + format_money(q.posted_price), now);
    }
    return fresh;
}

int flag_profile_anomalies(const std::vector<BidderProfile>& profiles, ReviewQueue& queue,
                           Timestamp now) {
    int fresh = 0;
    for (const auto& p : profiles) {
        std::string why;
        if (p.bid_count < 1) why = "bid count " + std::to_string(p.bid_count);
        else if (p.final_bid <= 0) why = "final bid " + format_money(p.final_bid);
        else if (p.entry_time > p.exit_time) why = "exit before entry";
        if (why.empty()) continue;
        std::string ref = "bidder/" + p.auction_id + "/" + p.bidder_id;
        fresh += queue.flag(ref, ReviewReason::ImpossibleValue, why, now);
    }
    return fresh;
}

int flag_malformed(const std::string& record_ref, const extract::Malformed& failure,
                   ReviewQueue& queue, Timestamp now) {
    return queue.flag(record_ref, ReviewReason::MalformedDoc, failure.reason, now) ? 1 : 0;
}

int flag_cleanse_verdicts(const std::vector<CleanseVerdict>& verdicts, ReviewQueue& queue,
                          Timestamp now) {
    int fresh = 0;
    for (const auto& v : verdicts) {
        if (v.status != CleanseStatus::SamplingLoss) continue;
        fresh += queue.flag("auction/" + v.auction_id, ReviewReason::SamplingLoss, v.detail,
                            now);
    }
    return fresh;
}

int assign_channels(std::vector<extract::RetailerProfile>& profiles, ReviewQueue* queue,
                    Timestamp now) {
    int flagged = 0;
    for (auto& p : profiles) {
        if (p.states_unknown) {
            p.channel = extract::ChannelClass::PurePlay;  // conservative default
            if (queue)
                flagged += queue->flag("retailer/" + p.retailer_id,
                                       ReviewReason::ManualClassifyNeeded,
                                       "store states unknown; channel defaulted to pure play",
                                       now);
            continue;
        }
        p.channel = classify_channel(p.store_states, p.catalog).first;
    }
    return flagged;
}

}  // namespace marketbench::pipe
