#include "marketbench/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <tuple>

namespace marketbench::sim {

// ---------------------------------------------------------------------------
// Population

std::string to_string(ArchetypeKind k) {
    switch (k) {
        case ArchetypeKind::EarlyMultiple: return "EarlyMultiple";
        case ArchetypeKind::EarlySingle: return "EarlySingle";
        case ArchetypeKind::LateArriver: return "LateArriver";
    }
    return "EarlySingle";
}

std::optional<ArchetypeKind> archetype_from_string(std::string_view s) {
    if (s == "EarlyMultiple") return ArchetypeKind::EarlyMultiple;
    if (s == "EarlySingle") return ArchetypeKind::EarlySingle;
    if (s == "LateArriver") return ArchetypeKind::LateArriver;
    return std::nullopt;
}

void BidderArchetype::validate() const {
    if (entry_lo < 0.0 || entry_hi > 1.0 || entry_lo > entry_hi)
        throw ConfigError("archetype entry window must sit inside [0,1]");
    if (kind == ArchetypeKind::LateArriver && entry_lo < constants::kLateWindowLo)
        throw ConfigError("a late arriver's entry window must start at or after 0.8");
    if (kind == ArchetypeKind::EarlySingle && rebid_propensity != 0.0)
        throw ConfigError("an early one-time bidder never rebids");
    if (rebid_propensity < 0.0 || rebid_propensity > 1.0)
        throw ConfigError("rebid propensity must be a probability");
    if (valuation_lo <= 0 || valuation_lo > valuation_hi)
        throw ConfigError("valuation range must be positive and ordered");
    if (planned_bids_lo < 1 || planned_bids_lo > planned_bids_hi)
        throw ConfigError("planned bid count range must be ordered and at least 1");
}

BidderArchetype early_multiple_archetype() {
    BidderArchetype a;
    a.kind = ArchetypeKind::EarlyMultiple;
    a.entry_lo = constants::kEarlyWindowLo;
    a.entry_hi = constants::kEarlyWindowHi;
    a.rebid_propensity = 0.85;
    a.planned_bids_lo = 2;
    a.planned_bids_hi = 4;
    return a;
}

BidderArchetype early_single_archetype() {
    BidderArchetype a;
    a.kind = ArchetypeKind::EarlySingle;
    a.entry_lo = constants::kEarlyWindowLo;
    a.entry_hi = constants::kEarlyWindowHi;
    a.rebid_propensity = 0.0;
    a.planned_bids_lo = 1;
    a.planned_bids_hi = 1;
    return a;
}

BidderArchetype late_arriver_archetype() {
    BidderArchetype a;
    a.kind = ArchetypeKind::LateArriver;
    a.entry_lo = constants::kLateWindowLo;
    a.entry_hi = constants::kLateWindowHi;
    a.rebid_propensity = 0.35;
    a.planned_bids_lo = 1;
    a.planned_bids_hi = 1;
    return a;
}

std::vector<SimBidder> spawn_population(const std::map<ArchetypeKind, double>& mix, int n,
                                        std::uint64_t seed) {
    std::map<ArchetypeKind, BidderArchetype> defs = {
        {ArchetypeKind::EarlyMultiple, early_multiple_archetype()},
        {ArchetypeKind::EarlySingle, early_single_archetype()},
        {ArchetypeKind::LateArriver, late_arriver_archetype()},
    };
    return spawn_population(mix, n, seed, defs);
}

std::vector<SimBidder> spawn_population(const std::map<ArchetypeKind, double>& mix, int n,
                                        std::uint64_t seed,
                                        const std::map<ArchetypeKind, BidderArchetype>& defs) {
    if (n < 0) throw ConfigError("population size cannot be negative");
    double total = 0.0;
    for (const auto& [kind, frac] : mix) {
        if (frac < 0.0) throw ConfigError("mix fractions cannot be negative");
        total += frac;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("archetype mix must sum to 1, got " + std::to_string(total));

    // Largest-remainder apportionment: floor everything, then hand the
    // leftover slots to the largest fractional parts (ties by kind order).
    struct Share {
        ArchetypeKind kind;
        int count;
        double remainder;
    };
    std::vector<Share> shares;
    int assigned = 0;
    for (const auto& [kind, frac] : mix) {
        double exact = frac * n;
        int floor_count = static_cast<int>(exact);
        shares.push_back({kind, floor_count, exact - floor_count});
        assigned += floor_count;
    }
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (int i = 0; assigned < n; ++i, ++assigned) shares[i % shares.size()].count += 1;
    std::sort(shares.begin(), shares.end(),
              [](const Share& a, const Share& b) { return a.kind < b.kind; });

    Rng rng = Rng(seed).fork("population");
    std::vector<SimBidder> out;
    out.reserve(static_cast<std::size_t>(n));
    int serial = 0;
    for (const Share& share : shares) {
        auto it = defs.find(share.kind);
        if (it == defs.end())
            throw ConfigError("mix names archetype without a definition: " +
                              to_string(share.kind));
        const BidderArchetype& def = it->second;
        def.validate();
        for (int i = 0; i < share.count; ++i) {
            SimBidder b;
            ++serial;
            b.bidder_id = "b" + std::to_string(serial);
            b.kind = share.kind;
            b.entry_frac = rng.range_real(def.entry_lo, def.entry_hi);
            b.valuation = rng.range_int(def.valuation_lo, def.valuation_hi);
            b.rebid_propensity = def.rebid_propensity;
            b.planned_bids = static_cast<int>(
                rng.range_int(def.planned_bids_lo, def.planned_bids_hi));
            out.push_back(std::move(b));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Auction engine

std::vector<market::BidPoint> GroundTruthLog::accepted_bids() const {
    std::vector<market::BidPoint> out;
    for (const auto& lb : bids)
        if (lb.accepted) out.push_back(lb.bid);
    return out;
}

std::vector<Timestamp> GroundTruthLog::accepted_times() const {
    std::vector<Timestamp> out;
    for (const auto& lb : bids)
        if (lb.accepted) out.push_back(lb.bid.placed_at);
    return out;
}

namespace {

std::set<std::string> winner_set(const market::Allocation& alloc) {
    std::set<std::string> out;
    for (const auto& award : alloc.winners) out.insert(award.bidder_id);
    return out;
}

}  // namespace

GroundTruthLog run_auction(const market::AuctionConfig& config,
                           const std::vector<SimBidder>& population, std::uint64_t seed) {
    config.validate();
    GroundTruthLog log;
    log.auction = config;
    log.population = population;

    std::map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < population.size(); ++i)
        index_of[population[i].bidder_id] = i;
    if (index_of.size() != population.size())
        throw ConfigError("population has duplicate bidder ids");

    struct Event {
        Timestamp t;
        int seq;
        std::size_t bidder;
    };
    auto later = [](const Event& a, const Event& b) {
        return std::tie(a.t, a.seq) > std::tie(b.t, b.seq);
    };
    std::priority_queue<Event, std::vector<Event>, decltype(later)> queue(later);
    int seq = 0;

    const Duration span = config.scheduled_duration();
    Rng root = Rng(seed).fork("auction").fork(fnv1a64(config.auction_id));
    std::vector<Rng> dice;
    dice.reserve(population.size());
    for (const SimBidder& b : population) dice.push_back(root.fork(fnv1a64(b.bidder_id)));

    for (std::size_t i = 0; i < population.size(); ++i) {
        const SimBidder& b = population[i];
        auto entry = config.scheduled_open +
                     static_cast<Timestamp>(std::llround(b.entry_frac * static_cast<double>(span)));
        entry = std::clamp(entry, config.scheduled_open, config.scheduled_close);
        queue.push({entry, seq++, i});
        // own raises are planned up front, spread out toward the close
        for (int k = 1; k < b.planned_bids; ++k) {
            Timestamp raise_at =
                entry + (config.scheduled_close - entry) * k / b.planned_bids;
            if (raise_at > entry) queue.push({raise_at, seq++, i});
        }
    }

    std::vector<market::BidPoint> accepted;
    Timestamp end = config.scheduled_close;

    while (!queue.empty()) {
        Event ev = queue.top();
        queue.pop();
        if (ev.t > end) continue;  // the house closed before this move
        const SimBidder& b = population[ev.bidder];

        market::Allocation before = market::allocate_winners(accepted, config.lot_size);
        std::set<std::string> winners_before = winner_set(before);
        Money min_required = market::min_required_bid(config, before);

        Money price = 0;
        if (winners_before.count(b.bidder_id)) {
            // standing winners sit tight; bids happen only on displacement
            continue;
        } else if (min_required <= b.valuation) {
            price = min_required;
        } else {
            // priced out; sometimes lodge a hopeless lowball the site refuses
            if (dice[ev.bidder].chance(0.5)) {
                market::BidPoint low{b.bidder_id, b.valuation, 1, ev.t};
                log.bids.push_back({low, false});
            }
            continue;
        }

        // Accepted instants are strictly increasing so each acceptance is a
        // distinct observable page state.
        Timestamp t = ev.t;
        if (!accepted.empty()) t = std::max(t, accepted.back().placed_at + 1);
        if (t > end) continue;

        market::BidPoint bid{b.bidder_id, price, 1, t};
        accepted.push_back(bid);
        log.bids.push_back({bid, true});
        if (t > end - config.soft_close_window && t <= end)
            end = t + config.soft_close_window;

        // displaced bidders may come back for more
        market::Allocation after = market::allocate_winners(accepted, config.lot_size);
        std::set<std::string> winners_after = winner_set(after);
        for (const std::string& displaced : winners_before) {
            if (winners_after.count(displaced) || displaced == b.bidder_id) continue;
            std::size_t di = index_of.at(displaced);
            if (!dice[di].chance(population[di].rebid_propensity)) continue;
            Timestamp back = t + 10 + static_cast<Timestamp>(dice[di].below(111));
            queue.push({back, seq++, di});
        }
    }

    log.final_allocation = market::allocate_winners(accepted, config.lot_size);
    log.end_time = end;
    return log;
}

AuctionPageState projection(const GroundTruthLog& log, Timestamp t) {
    AuctionPageState s;
    s.auction_id = log.auction.auction_id;
    s.product = log.auction.product;
    s.lot_size = log.auction.lot_size;
    s.starting_bid = log.auction.starting_bid;
    s.bid_increment = log.auction.bid_increment;
    s.scheduled_open = log.auction.scheduled_open;
    s.scheduled_close = log.auction.scheduled_close;
    s.as_of = t;

    std::vector<market::BidPoint> visible;
    for (const auto& lb : log.bids)
        if (lb.accepted && lb.bid.placed_at <= t) visible.push_back(lb.bid);
    market::Allocation alloc = market::allocate_winners(visible, log.auction.lot_size);
    for (const auto& award : alloc.winners)
        s.winners.push_back({award.bidder_id, award.price_paid, award.units_awarded});
    s.min_required_bid = market::min_required_bid(log.auction, alloc);
    s.closed = t >= log.end_time;
    if (s.closed) s.ended_at = log.end_time;
    return s;
}

// ---------------------------------------------------------------------------
// Templates and rendering

namespace {

// Placeholders in `segment`, block markers excluded.
struct TemplateShape {
    std::set<std::string> scalars;                      // placeholders outside blocks
    std::map<std::string, std::string> blocks;          // block name -> inner body
    std::map<std::string, std::set<std::string>> rows;  // block name -> placeholders
};

TemplateShape scan_template(const std::string& body) {
    TemplateShape shape;
    std::size_t i = 0;
    while (true) {
        std::size_t open = body.find("{{", i);
        if (open == std::string::npos) break;
        std::size_t close = body.find("}}", open);
        if (close == std::string::npos) throw ConfigError("template: unterminated {{ marker");
        std::string token = body.substr(open + 2, close - open - 2);
        if (token.empty()) throw ConfigError("template: empty placeholder");
        if (token[0] == '#') {
            std::string name = token.substr(1);
            std::string endmark = "{{/" + name + "}}";
            std::size_t endpos = body.find(endmark, close + 2);
            if (endpos == std::string::npos)
                throw ConfigError("template: block " + name + " never closes");
            std::string inner = body.substr(close + 2, endpos - close - 2);
            if (shape.blocks.count(name))
                throw ConfigError("template: block " + name + " repeats");
            // collect the inner placeholders
            std::size_t j = 0;
            while (true) {
                std::size_t o2 = inner.find("{{", j);
                if (o2 == std::string::npos) break;
                std::size_t c2 = inner.find("}}", o2);
                if (c2 == std::string::npos)
                    throw ConfigError("template: unterminated {{ marker");
                std::string t2 = inner.substr(o2 + 2, c2 - o2 - 2);
                if (!t2.empty() && (t2[0] == '#' || t2[0] == '/'))
                    throw ConfigError("template: nested blocks are not supported");
                shape.rows[name].insert(t2);
                j = c2 + 2;
            }
            shape.rows.emplace(name, std::set<std::string>{});  // keeps empty blocks listed
            shape.blocks[name] = std::move(inner);
            i = endpos + endmark.size();
            continue;
        }
        if (token[0] == '/') throw ConfigError("template: stray block close " + token);
        shape.scalars.insert(token);
        i = close + 2;
    }
    return shape;
}

std::size_t count_hits(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t at = hay.find(needle); at != std::string::npos;
         at = hay.find(needle, at + needle.size()))
        ++n;
    return n;
}

void check_anchor_wraps(const std::string& scope, const std::string& scope_name,
                        const std::string& field, const std::string& prefix,
                        const std::string& suffix) {
    if (prefix.empty() || suffix.empty())
        throw ConfigError("template: empty anchor for " + field);
    std::size_t hits = count_hits(scope, prefix);
    if (hits == 0)
        throw ConfigError("template: anchor prefix for " + field + " not in " + scope_name);
    if (hits > 1)
        throw ConfigError("template: anchor prefix for " + field + " repeats in " + scope_name);
    std::size_t at = scope.find(prefix) + prefix.size();
    std::string expect = "{{" + field + "}}";
    if (scope.compare(at, expect.size(), expect) != 0)
        throw ConfigError("template: anchor for " + field + " does not wrap its placeholder");
    if (scope.compare(at + expect.size(), suffix.size(), suffix) != 0)
        throw ConfigError("template: anchor suffix for " + field + " does not follow its value");
}

}  // namespace

void PageTemplate::validate() const {
    if (name.empty()) throw ConfigError("template needs a name");
    if (body.empty()) throw ConfigError("template " + name + " has no body");
    TemplateShape shape = scan_template(body);

    for (const auto& [field, anchors] : field_anchors) {
        std::size_t dot = field.find('.');
        if (dot == std::string::npos) {
            if (shape.blocks.count(field)) {
                // row anchors: each expanded row is prefix ... suffix
                const std::string& inner = shape.blocks.at(field);
                if (inner.find(anchors.first) == std::string::npos ||
                    inner.find(anchors.second) == std::string::npos)
                    throw ConfigError("template: block " + field +
                                      " does not carry its row anchors");
                if (count_hits(body, anchors.first) != 1)
                    throw ConfigError("template: row anchor for " + field + " repeats");
                continue;
            }
            if (!shape.scalars.count(field))
                throw ConfigError("template: anchor for " + field + " has no placeholder");
            check_anchor_wraps(body, "body", field, anchors.first, anchors.second);
        } else {
            std::string block = field.substr(0, dot);
            std::string sub = field.substr(dot + 1);
            auto it = shape.blocks.find(block);
            if (it == shape.blocks.end())
                throw ConfigError("template: anchor " + field + " names a missing block");
            if (!shape.rows.at(block).count(sub))
                throw ConfigError("template: anchor for " + field + " has no placeholder");
            check_anchor_wraps(it->second, "block " + block, sub, anchors.first,
                               anchors.second);
        }
    }

    // every placeholder must be anchored so extraction rules can reach it
    for (const std::string& field : shape.scalars)
        if (!field_anchors.count(field))
            throw ConfigError("template: placeholder " + field + " has no anchor pair");
    for (const auto& [block, fields] : shape.rows) {
        if (!field_anchors.count(block))
            throw ConfigError("template: block " + block + " has no row anchors");
        for (const std::string& sub : fields)
            if (!field_anchors.count(block + "." + sub))
                throw ConfigError("template: placeholder " + block + "." + sub +
                                  " has no anchor pair");
    }
}

namespace {

std::string render_segment(const std::string& segment, const PageFields& fields,
                           const std::map<std::string, std::string>* row) {
    std::string out;
    std::size_t i = 0;
    while (i < segment.size()) {
        std::size_t open = segment.find("{{", i);
        if (open == std::string::npos) {
            out.append(segment, i, std::string::npos);
            break;
        }
        out.append(segment, i, open - i);
        std::size_t close = segment.find("}}", open);
        if (close == std::string::npos) throw RenderError("unterminated {{ marker");
        std::string token = segment.substr(open + 2, close - open - 2);
        if (!token.empty() && token[0] == '#') {
            std::string block = token.substr(1);
            std::string endmark = "{{/" + block + "}}";
            std::size_t endpos = segment.find(endmark, close + 2);
            if (endpos == std::string::npos)
                throw RenderError("block " + block + " never closes");
            std::string inner = segment.substr(close + 2, endpos - close - 2);
            auto it = fields.blocks.find(block);
            if (it == fields.blocks.end())
                throw RenderError("no rows provided for block " + block);
            for (const auto& r : it->second) out += render_segment(inner, fields, &r);
            i = endpos + endmark.size();
            continue;
        }
        if (!token.empty() && token[0] == '/')
            throw RenderError("stray block close " + token);
        const std::string* value = nullptr;
        if (row) {
            auto rit = row->find(token);
            if (rit != row->end()) value = &rit->second;
        }
        if (!value) {
            auto sit = fields.scalars.find(token);
            if (sit != fields.scalars.end()) value = &sit->second;
        }
        if (!value) throw RenderError("missing value for placeholder " + token);
        out += *value;
        i = close + 2;
    }
    return out;
}

}  // namespace

std::string render_page(const PageFields& fields, const PageTemplate& tpl) {
    tpl.validate();
    return render_segment(tpl.body, fields, nullptr);
}

PageTemplate default_auction_template() {
    PageTemplate t;
    t.name = "yankee_auction_v1";
    t.body =
        "<html><head><title>lot {{auction_id}}</title></head><body>\n"
        "<h1 class=\"pt\">{{product_title}}</h1>\n"
        "<div class=\"meta\">category <span class=\"cat\">{{product_category}}</span> | "
        "condition <span class=\"cond\">{{product_condition}}</span> | "
        "stage <span class=\"lc\">{{product_life_cycle}}</span></div>\n"
        "<table class=\"facts\">\n"
        "<tr><td>auction</td><td class=\"aid\">{{auction_id}}</td></tr>\n"
        "<tr><td>lot size</td><td class=\"lot\">{{lot_size}}</td></tr>\n"
        "<tr><td>minimum required bid</td><td class=\"mrb\">{{min_required_bid}}</td></tr>\n"
        "<tr><td>bid increment</td><td class=\"inc\">{{bid_increment}}</td></tr>\n"
        "<tr><td>starting bid</td><td class=\"sbid\">{{starting_bid}}</td></tr>\n"
        "<tr><td>opens</td><td class=\"topen\">{{scheduled_open}}</td></tr>\n"
        "<tr><td>scheduled close</td><td class=\"tclose\">{{scheduled_close}}</td></tr>\n"
        "<tr><td>status</td><td class=\"stat\">{{status}}</td></tr>\n"
        "<tr><td>ended</td><td class=\"tend\">{{ended_at}}</td></tr>\n"
        "</table>\n"
        "<table class=\"bids\">\n"
        "{{#winners}}<tr class=\"win\"><td class=\"wb\">{{bidder_id}}</td>"
        "<td class=\"wp\">{{price}}</td><td class=\"wq\">{{quantity}}</td></tr>\n"
        "{{/winners}}</table>\n"
        "<div class=\"foot\">captured <span class=\"ts\">{{as_of}}</span></div>\n"
        "</body></html>\n";
    t.field_anchors = {
        {"auction_id", {"<td class=\"aid\">", "</td>"}},
        {"product_title", {"<h1 class=\"pt\">", "</h1>"}},
        {"product_category", {"<span class=\"cat\">", "</span>"}},
        {"product_condition", {"<span class=\"cond\">", "</span>"}},
        {"product_life_cycle", {"<span class=\"lc\">", "</span>"}},
        {"lot_size", {"<td class=\"lot\">", "</td>"}},
        {"min_required_bid", {"<td class=\"mrb\">", "</td>"}},
        {"bid_increment", {"<td class=\"inc\">", "</td>"}},
        {"starting_bid", {"<td class=\"sbid\">", "</td>"}},
        {"scheduled_open", {"<td class=\"topen\">", "</td>"}},
        {"scheduled_close", {"<td class=\"tclose\">", "</td>"}},
        {"status", {"<td class=\"stat\">", "</td>"}},
        {"ended_at", {"<td class=\"tend\">", "</td>"}},
        {"as_of", {"<span class=\"ts\">", "</span>"}},
        {"winners", {"<tr class=\"win\">", "</tr>"}},
        {"winners.bidder_id", {"<td class=\"wb\">", "</td>"}},
        {"winners.price", {"<td class=\"wp\">", "</td>"}},
        {"winners.quantity", {"<td class=\"wq\">", "</td>"}},
    };
    return t;
}

PageTemplate default_search_template() {
    PageTemplate t;
    t.name = "p2p_search_v1";
    t.body =
        "<html><body>\n"
        "<div class=\"hdr\">results for <span class=\"qa\">{{query_album}}</span> at "
        "<span class=\"ts\">{{as_of}}</span></div>\n"
        "<table class=\"res\">\n"
        "{{#results}}<tr class=\"row\"><td class=\"u\">{{sharer_id}}</td>"
        "<td class=\"f\">{{file_title}}</td><td class=\"am\">{{album_match}}</td>"
        "<td class=\"sz\">{{file_size}}</td><td class=\"br\">{{bitrate}}</td>"
        "<td class=\"ln\">{{track_length}}</td><td class=\"cc\">{{connection_class}}</td>"
        "<td class=\"pg\">{{ping_ms}}</td></tr>\n"
        "{{/results}}</table>\n"
        "<div class=\"foot\">rows <span class=\"rc\">{{row_count}}</span></div>\n"
        "</body></html>\n";
    t.field_anchors = {
        {"query_album", {"<span class=\"qa\">", "</span>"}},
        {"as_of", {"<span class=\"ts\">", "</span>"}},
        {"row_count", {"<span class=\"rc\">", "</span>"}},
        {"results", {"<tr class=\"row\">", "</tr>"}},
        {"results.sharer_id", {"<td class=\"u\">", "</td>"}},
        {"results.file_title", {"<td class=\"f\">", "</td>"}},
        {"results.album_match", {"<td class=\"am\">", "</td>"}},
        {"results.file_size", {"<td class=\"sz\">", "</td>"}},
        {"results.bitrate", {"<td class=\"br\">", "</td>"}},
        {"results.track_length", {"<td class=\"ln\">", "</td>"}},
        {"results.connection_class", {"<td class=\"cc\">", "</td>"}},
        {"results.ping_ms", {"<td class=\"pg\">", "</td>"}},
    };
    return t;
}

PageTemplate default_quote_template() {
    PageTemplate t;
    t.name = "quote_page_v1";
    t.body =
        "<html><body>\n"
        "<div class=\"hdr\">offers for <span class=\"pid\">{{product_id}}</span> in "
        "<span class=\"pcat\">{{category}}</span> at <span class=\"ts\">{{as_of}}</span></div>\n"
        "<table class=\"offers\">\n"
        "{{#quotes}}<tr class=\"q\"><td class=\"qr\">{{retailer_id}}</td>"
        "<td class=\"qp\">{{posted_price}}</td><td class=\"qc\">{{condition}}</td></tr>\n"
        "{{/quotes}}</table>\n"
        "</body></html>\n";
    t.field_anchors = {
        {"product_id", {"<span class=\"pid\">", "</span>"}},
        {"category", {"<span class=\"pcat\">", "</span>"}},
        {"as_of", {"<span class=\"ts\">", "</span>"}},
        {"quotes", {"<tr class=\"q\">", "</tr>"}},
        {"quotes.retailer_id", {"<td class=\"qr\">", "</td>"}},
        {"quotes.posted_price", {"<td class=\"qp\">", "</td>"}},
        {"quotes.condition", {"<td class=\"qc\">", "</td>"}},
    };
    return t;
}

PageTemplate default_retailer_template() {
    PageTemplate t;
    t.name = "retailer_page_v1";
    t.body =
        "<html><body>\n"
        "<div class=\"hdr\">retailer <span class=\"rid\">{{retailer_id}}</span> rank "
        "<span class=\"rk\">{{size_rank}}</span> as of <span class=\"ts\">{{as_of}}</span></div>\n"
        "<div class=\"ch\">states <span class=\"st\">{{states}}</span> catalog "
        "<span class=\"cf\">{{catalog}}</span> outlet <span class=\"rd\">{{refurb_discounter}}"
        "</span></div>\n"
        "{{#ratings}}<div class=\"ratings\">on-time <span class=\"r1\">{{on_time_delivery}}"
        "</span> support <span class=\"r2\">{{customer_support}}</span> expectations "
        "<span class=\"r3\">{{product_met_expectations}}</span> shop-again "
        "<span class=\"r4\">{{shop_again}}</span> surveys <span class=\"sc\">{{survey_count}}"
        "</span> window <span class=\"w0\">{{window_start}}</span> to "
        "<span class=\"w1\">{{window_end}}</span></div>\n{{/ratings}}"
        "</body></html>\n";
    t.field_anchors = {
        {"retailer_id", {"<span class=\"rid\">", "</span>"}},
        {"size_rank", {"<span class=\"rk\">", "</span>"}},
        {"as_of", {"<span class=\"ts\">", "</span>"}},
        {"states", {"<span class=\"st\">", "</span>"}},
        {"catalog", {"<span class=\"cf\">", "</span>"}},
        {"refurb_discounter", {"<span class=\"rd\">", "</span>"}},
        {"ratings", {"<div class=\"ratings\">", "</div>"}},
        {"ratings.on_time_delivery", {"<span class=\"r1\">", "</span>"}},
        {"ratings.customer_support", {"<span class=\"r2\">", "</span>"}},
        {"ratings.product_met_expectations", {"<span class=\"r3\">", "</span>"}},
        {"ratings.shop_again", {"<span class=\"r4\">", "</span>"}},
        {"ratings.survey_count", {"<span class=\"sc\">", "</span>"}},
        {"ratings.window_start", {"<span class=\"w0\">", "</span>"}},
        {"ratings.window_end", {"<span class=\"w1\">", "</span>"}},
    };
    return t;
}

PageFields page_fields(const AuctionPageState& state) {
    PageFields f;
    f.scalars["auction_id"] = state.auction_id;
    f.scalars["product_title"] = state.product.title;
    f.scalars["product_category"] = state.product.category;
    f.scalars["product_condition"] = market::to_string(state.product.condition);
    f.scalars["product_life_cycle"] = state.product.life_cycle;
    f.scalars["lot_size"] = std::to_string(state.lot_size);
    f.scalars["min_required_bid"] = format_money(state.min_required_bid);
    f.scalars["bid_increment"] = format_money(state.bid_increment);
    f.scalars["starting_bid"] = format_money(state.starting_bid);
    f.scalars["scheduled_open"] = format_timestamp(state.scheduled_open);
    f.scalars["scheduled_close"] = format_timestamp(state.scheduled_close);
    f.scalars["status"] = state.closed ? "closed" : "open";
    f.scalars["ended_at"] = state.ended_at ? format_timestamp(*state.ended_at) : "-";
    f.scalars["as_of"] = format_timestamp(state.as_of);
    auto& rows = f.blocks["winners"];
    for (const auto& w : state.winners)
        rows.push_back({{"bidder_id", w.bidder_id},
                        {"price", format_money(w.price)},
                        {"quantity", std::to_string(w.quantity)}});
    return f;
}

PageFields page_fields(const SearchPageState& state) {
    PageFields f;
    f.scalars["query_album"] = state.query_album;
    f.scalars["as_of"] = format_timestamp(state.as_of);
    f.scalars["row_count"] = std::to_string(state.rows.size());
    auto& rows = f.blocks["results"];
    for (const auto& ob : state.rows) {
        auto ping = ob.extra.find("ping_ms");
        rows.push_back({{"sharer_id", ob.sharer_id},
                        {"file_title", ob.file_title},
                        {"album_match", ob.album_match ? "yes" : "no"},
                        {"file_size", std::to_string(ob.file_size)},
                        {"bitrate", std::to_string(ob.bitrate)},
                        {"track_length", std::to_string(ob.track_length)},
                        {"connection_class", ob.connection_class},
                        {"ping_ms", ping == ob.extra.end() ? "0" : ping->second}});
    }
    return f;
}

PageFields page_fields(const QuotePageState& state) {
    PageFields f;
    f.scalars["product_id"] = state.product_id;
    f.scalars["category"] = state.category;
    f.scalars["as_of"] = format_timestamp(state.as_of);
    auto& rows = f.blocks["quotes"];
    for (const auto& q : state.quotes)
        rows.push_back({{"retailer_id", q.retailer_id},
                        {"posted_price", format_money(q.posted_price)},
                        {"condition", market::to_string(q.condition)}});
    return f;
}

PageFields page_fields(const RetailerPageState& state) {
    const extract::RetailerProfile& p = state.profile;
    PageFields f;
    f.scalars["retailer_id"] = p.retailer_id;
    f.scalars["size_rank"] = std::to_string(p.size_rank);
    f.scalars["as_of"] = format_timestamp(state.as_of);
    std::string states;
    if (p.states_unknown) {
        states = "??";
    } else {
        for (const auto& s : p.store_states) {
            if (!states.empty()) states += ";";
            states += s;
        }
    }
    f.scalars["states"] = states;
    f.scalars["catalog"] = p.catalog ? "yes" : "no";
    f.scalars["refurb_discounter"] = p.refurb_discounter ? "yes" : "no";
    auto& rows = f.blocks["ratings"];
    if (p.ratings) {
        rows.push_back(
            {{"on_time_delivery", std::to_string(p.ratings->on_time_delivery)},
             {"customer_support", std::to_string(p.ratings->customer_support)},
             {"product_met_expectations", std::to_string(p.ratings->product_met_expectations)},
             {"shop_again", std::to_string(p.ratings->shop_again)},
             {"survey_count", std::to_string(p.survey_count)},
             {"window_start", p.window_start ? format_date(*p.window_start) : "-"},
             {"window_end", p.window_end ? format_date(*p.window_end) : "-"}});
    }
    return f;
}

// ---------------------------------------------------------------------------
// P2P corpus

P2pCorpus gen_p2p_corpus(const std::vector<std::string>& albums, int n_per_album,
                         std::uint64_t seed) {
    if (n_per_album < 0) throw ConfigError("results per album cannot be negative");
    static const std::vector<std::string> kConnections = {"56k", "cable", "dsl", "T1", "T3"};
    static const std::vector<int> kBitrates = {128, 160, 192, 256};

    P2pCorpus corpus;
    Rng root = Rng(seed).fork("p2p");
    for (const std::string& album : albums) {
        Rng rng = root.fork(fnv1a64(album));
        SearchPageState page;
        page.query_album = album;
        for (int i = 0; i < n_per_album; ++i) {
            extract::SearchObservation ob;
            ob.query_album = album;
            ob.sharer_id = "user" + std::to_string(rng.range_int(1, 40000));
            std::string no = std::to_string(i + 1);
            if (no.size() < 2) no = "0" + no;
            ob.file_title = album + " - track " + no + ".mp3";
            ob.album_match = rng.chance(0.9);
            ob.bitrate = rng.pick(kBitrates);
            ob.track_length = static_cast<int>(rng.range_int(90, 420));
            ob.file_size = static_cast<std::int64_t>(ob.bitrate) * 1000 / 8 * ob.track_length +
                           rng.range_int(-5000, 5000);
            if (ob.file_size < 1) ob.file_size = 1;
            ob.connection_class = rng.pick(kConnections);
            ob.extra["ping_ms"] = std::to_string(rng.range_int(20, 900));
            page.rows.push_back(std::move(ob));
        }
        corpus.rows_by_album[album] = n_per_album;
        corpus.total_rows += n_per_album;
        corpus.pages.push_back(std::move(page));
    }
    return corpus;
}

WeeklySharingMarket gen_sharing_market(int n_albums, int weeks, std::uint64_t seed) {
    if (n_albums < 1 || weeks < 1)
        throw ConfigError("sharing market needs at least one album and one week");
    WeeklySharingMarket m;
    for (int i = 0; i < n_albums; ++i) {
        std::string no = std::to_string(i + 1);
        if (no.size() < 2) no = "0" + no;
        m.albums.push_back("album-" + no);
    }

    Rng root = Rng(seed).fork("sharing");
    std::map<std::string, int> current;
    for (const auto& a : m.albums) current[a] = static_cast<int>(root.range_int(2000, 60000));

    auto rank_of = [](const std::map<std::string, int>& counts) {
        std::vector<std::pair<std::string, int>> order(counts.begin(), counts.end());
        std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        return order;
    };

    for (int w = 0; w < weeks; ++w) {
        if (w > 0) {
            for (auto& [album, count] : current) {
                count += static_cast<int>(root.range_int(-4000, 4000));
                if (count < 1) count = 1;
            }
        }
        m.sharing.push_back(current);
        // this week's chart ranks last week's sharing: sharing leads by one
        const auto& basis = m.sharing[w == 0 ? 0 : w - 1];
        auto order = rank_of(basis);
        std::map<std::string, int> pos;
        std::vector<std::string> chart;
        for (std::size_t r = 0; r < order.size(); ++r) {
            pos[order[r].first] = static_cast<int>(r) + 1;
            chart.push_back(order[r].first);
        }
        m.positions.push_back(std::move(pos));
        m.charts.push_back(std::move(chart));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Retail market

void RetailScenario::validate() const {
    if (categories < 1 || retailers < 1 || products_per_category < 1)
        throw ConfigError("retail market needs at least one of everything");
    if (quotes_lo < 0 || quotes_lo > quotes_hi)
        throw ConfigError("quote count range must be ordered");
    if (price_lo <= 0 || price_lo > price_hi)
        throw ConfigError("price range must be positive and ordered");
    for (double p : {refurb_quote_p, unrated_retailer_p, low_survey_p, stale_window_p,
                     refurb_discounter_p, unknown_states_p})
        if (p < 0.0 || p > 1.0) throw ConfigError("plant probabilities must be in [0,1]");
    if (weak_category >= categories)
        throw ConfigError("weak category index out of range");
}

namespace {

std::string category_name(int i) {
    static const std::vector<std::string> kPool = {
        "digital cameras", "dvd players", "pda",        "printers",  "scanners",
        "mp3 players",     "monitors",    "camcorders", "notebooks", "keyboards"};
    if (i < static_cast<int>(kPool.size())) return kPool[static_cast<std::size_t>(i)];
    return "category-" + std::to_string(i + 1);
}

std::string slug_of(const std::string& name) {
    std::string out;
    for (char c : name) out.push_back(c == ' ' ? '-' : c);
    return out;
}

std::string two_digits(int n) {
    std::string s = std::to_string(n);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

RetailMarket gen_retail_market(const RetailScenario& scenario, std::uint64_t seed) {
    scenario.validate();
    static const std::vector<std::string> kStates = {"AL", "CA", "CT", "FL", "GA", "IL",
                                                     "MA", "NJ", "NY", "OH", "PA", "TX",
                                                     "VA", "WA", "WI"};
    RetailMarket m;
    m.scenario = scenario;
    Rng root = Rng(seed).fork("retail");
    Timestamp page_time = start_of_day(scenario.as_of) + 12 * 3600;

    Rng rrng = root.fork("retailers");
    for (int r = 0; r < scenario.retailers; ++r) {
        extract::RetailerProfile p;
        p.retailer_id = "ret" + two_digits(r + 1);
        p.size_rank = r + 1;
        p.refurb_discounter = rrng.chance(scenario.refurb_discounter_p);
        p.catalog = rrng.chance(0.3);

        if (rrng.chance(scenario.unknown_states_p)) {
            p.states_unknown = true;
        } else {
            double shape = rrng.unit();
            int n_states = 0;
            if (shape < 0.35) n_states = 0;        // pure play
            else if (shape < 0.65) n_states = 1;   // local
            else n_states = static_cast<int>(rrng.range_int(2, 5));
            std::vector<std::string> pool = kStates;
            rrng.shuffle(pool);
            p.store_states.assign(pool.begin(), pool.begin() + n_states);
            std::sort(p.store_states.begin(), p.store_states.end());
        }

        if (!rrng.chance(scenario.unrated_retailer_p)) {
            extract::RatingBlock b;
            b.on_time_delivery = static_cast<int>(rrng.range_int(4, 10));
            b.customer_support = static_cast<int>(rrng.range_int(4, 10));
            b.product_met_expectations = static_cast<int>(rrng.range_int(4, 10));
            b.shop_again = static_cast<int>(rrng.range_int(4, 10));
            p.ratings = b;
            p.survey_count = rrng.chance(scenario.low_survey_p)
                                 ? static_cast<int>(rrng.range_int(1, 29))
                                 : static_cast<int>(rrng.range_int(30, 2400));
            if (rrng.chance(scenario.stale_window_p)) {
                if (rrng.chance(0.5)) {
                    // window ended long before capture
                    Date end = scenario.as_of - static_cast<Date>(rrng.range_int(30, 200));
                    p.window_end = end;
                    p.window_start = end - (constants::kRatingWindowDays - 1);
                } else {
                    // wrong span
                    Date end = scenario.as_of - static_cast<Date>(rrng.range_int(0, 7));
                    p.window_end = end;
                    Date span = static_cast<Date>(rrng.chance(0.5) ? rrng.range_int(20, 70)
                                                                   : rrng.range_int(100, 180));
                    p.window_start = end - (span - 1);
                }
            } else {
                Date end = scenario.as_of - static_cast<Date>(rrng.range_int(0, 7));
                p.window_end = end;
                p.window_start = end - (constants::kRatingWindowDays - 1);
            }
        }
        m.truth_retailers.push_back(p);
        m.retailer_pages.push_back({p, page_time});
    }

    for (int c = 0; c < scenario.categories; ++c) {
        std::string category = category_name(c);
        Rng crng = root.fork(fnv1a64(category));
        int products = (c == scenario.weak_category) ? scenario.weak_category_products
                                                     : scenario.products_per_category;
        for (int pi = 0; pi < products; ++pi) {
            QuotePageState page;
            page.category = category;
            page.product_id = slug_of(category) + "-" + two_digits(pi + 1);
            page.as_of = page_time;

            int n_quotes = static_cast<int>(crng.range_int(scenario.quotes_lo,
                                                           scenario.quotes_hi));
            n_quotes = std::min(n_quotes, scenario.retailers);
            std::vector<int> sellers(static_cast<std::size_t>(scenario.retailers));
            for (int i = 0; i < scenario.retailers; ++i) sellers[static_cast<std::size_t>(i)] = i;
            crng.shuffle(sellers);

            Money base = crng.range_int(scenario.price_lo, scenario.price_hi);
            for (int qi = 0; qi < n_quotes; ++qi) {
                extract::PriceQuote q;
                q.retailer_id = m.truth_retailers[static_cast<std::size_t>(sellers[
                    static_cast<std::size_t>(qi)])].retailer_id;
                q.product_id = page.product_id;
                q.category = category;
                q.posted_price = std::max<Money>(100, base + crng.range_int(-base / 4, base / 4));
                if (crng.chance(scenario.refurb_quote_p))
                    q.condition = crng.chance(0.5) ? market::Condition::Refurbished
                                                   : market::Condition::Used;
                else
                    q.condition = market::Condition::New;
                page.quotes.push_back(q);
                m.truth_quotes.push_back(q);
            }
            m.product_pages.push_back(std::move(page));
        }
    }
    return m;
}

RetailMarket gen_retail_market(int categories, int retailers, int products_per_category,
                               std::uint64_t seed) {
    RetailScenario s;
    s.categories = categories;
    s.retailers = retailers;
    s.products_per_category = products_per_category;
    return gen_retail_market(s, seed);
}

// ---------------------------------------------------------------------------
// Whole-market scenario

void AuctionScenario::validate() const {
    if (auctions < 0) throw ConfigError("auction count cannot be negative");
    if (bidders_per_auction < 0) throw ConfigError("bidder count cannot be negative");
    if (lot_lo < 1 || lot_lo > lot_hi) throw ConfigError("lot range must be ordered, min 1");
    if (starting_bid <= 0 || bid_increment <= 0)
        throw ConfigError("starting bid and increment must be positive");
    if (valuation_lo <= 0 || valuation_lo > valuation_hi)
        throw ConfigError("valuation range must be positive and ordered");
    if (duration <= 0 || stagger < 0 || soft_close_window <= 0)
        throw ConfigError("durations must be positive");
}

SimMarket build_market(const ScenarioConfig& config, std::uint64_t seed) {
    SimMarket m;
    Rng root(seed);

    if (config.with_auctions && config.auctions.auctions > 0) {
        const AuctionScenario& sc = config.auctions;
        sc.validate();

        std::map<ArchetypeKind, BidderArchetype> defs = {
            {ArchetypeKind::EarlyMultiple, early_multiple_archetype()},
            {ArchetypeKind::EarlySingle, early_single_archetype()},
            {ArchetypeKind::LateArriver, late_arriver_archetype()},
        };
        for (auto& [kind, def] : defs) {
            def.valuation_lo = sc.valuation_lo;
            def.valuation_hi = sc.valuation_hi;
        }

        static const std::vector<std::pair<std::string, std::string>> kCatalog = {
            {"LaserJet 4050 printer", "printers"},
            {"Palm Vx organizer", "pda"},
            {"PowerShot S100 camera", "digital cameras"},
            {"Rio 600 player", "mp3 players"},
            {"ScanMaker X6 scanner", "scanners"},
        };
        Rng arng = root.fork("auctions");
        for (int i = 0; i < sc.auctions; ++i) {
            market::AuctionConfig cfg;
            std::string no = std::to_string(i + 1);
            while (no.size() < 3) no = "0" + no;
            cfg.auction_id = "lot-" + no;
            cfg.lot_size = static_cast<int>(arng.range_int(sc.lot_lo, sc.lot_hi));
            cfg.starting_bid = sc.starting_bid;
            cfg.bid_increment = sc.bid_increment;
            cfg.scheduled_open = sc.first_open + static_cast<Timestamp>(i) * sc.stagger;
            cfg.scheduled_close = cfg.scheduled_open + sc.duration;
            cfg.soft_close_window = sc.soft_close_window;
            const auto& item = kCatalog[static_cast<std::size_t>(i) % kCatalog.size()];
            cfg.product.title = item.first;
            cfg.product.category = item.second;
            cfg.product.condition = market::Condition::New;
            cfg.product.life_cycle = "mature";

            std::uint64_t pop_seed = arng.fork(fnv1a64(cfg.auction_id)).seed();
            auto population = spawn_population(sc.mix, sc.bidders_per_auction, pop_seed, defs);
            for (auto& b : population) b.bidder_id = cfg.auction_id + "-" + b.bidder_id;
            m.auctions.push_back(run_auction(cfg, population, pop_seed));
        }
        m.p2p_as_of = sc.first_open + 12 * 3600;
    }

    if (!config.albums.empty()) {
        m.p2p = gen_p2p_corpus(config.albums, config.results_per_album,
                               root.fork("p2p-seed").seed());
        if (m.p2p_as_of == 0) m.p2p_as_of = 951912000 + 12 * 3600;
        for (auto& page : m.p2p.pages) page.as_of = m.p2p_as_of;
    }

    if (config.with_retail) {
        m.retail = gen_retail_market(config.retail, root.fork("retail-seed").seed());
        m.has_retail = true;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Service

Service::Service(SimMarket market, Timestamp start)
    : market_(std::move(market)),
      auction_tpl_(default_auction_template()),
      search_tpl_(default_search_template()),
      quote_tpl_(default_quote_template()),
      retailer_tpl_(default_retailer_template()),
      now_(start) {
    for (const auto& log : market_.auctions)
        auctions_by_id_[log.auction.auction_id] = &log;
}

Timestamp Service::now() const {
    std::lock_guard<std::mutex> lock(mu_);
    return now_;
}

void Service::advance_to(Timestamp t) {
    std::lock_guard<std::mutex> lock(mu_);
    if (t > now_) now_ = t;
}

std::optional<Timestamp> Service::next_event_after(const std::string& target,
                                                   Timestamp t) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (target.rfind("auction/", 0) != 0) return std::nullopt;
    auto it = auctions_by_id_.find(target.substr(8));
    if (it == auctions_by_id_.end()) return std::nullopt;
    const GroundTruthLog& log = *it->second;
    std::optional<Timestamp> best;
    for (const auto& lb : log.bids) {
        if (!lb.accepted) continue;
        if (lb.bid.placed_at > t && (!best || lb.bid.placed_at < *best))
            best = lb.bid.placed_at;
    }
    if (log.end_time > t && (!best || log.end_time < *best)) best = log.end_time;
    return best;
}

void Service::inject(const std::string& mode, int count) {
    if (count < 0) throw ConfigError("injection count cannot be negative");
    std::lock_guard<std::mutex> lock(mu_);
    if (mode == "drop") drop_next_ = count;
    else if (mode == "error") error_next_ = count;
    else if (mode == "garble") garble_next_ = count;
    else throw ConfigError("unknown failure mode '" + mode + "'");
}

std::string Service::target_of_path(const std::string& path) {
    if (path.rfind("/auction/", 0) == 0) return "auction/" + path.substr(9);
    if (path.rfind("/search?album=", 0) == 0) return "search/" + path.substr(14);
    if (path.rfind("/quotes?product=", 0) == 0) return "quotes/" + path.substr(16);
    if (path.rfind("/retailer/", 0) == 0) return "retailer/" + path.substr(10);
    return "";
}

std::string Service::path_of_target(const std::string& target) {
    if (target.rfind("auction/", 0) == 0) return "/auction/" + target.substr(8);
    if (target.rfind("search/", 0) == 0) return "/search?album=" + target.substr(7);
    if (target.rfind("quotes/", 0) == 0) return "/quotes?product=" + target.substr(7);
    if (target.rfind("retailer/", 0) == 0) return "/retailer/" + target.substr(9);
    return "";
}

Service::Response Service::get(const std::string& path) {
    std::lock_guard<std::mutex> lock(mu_);
    Response res;
    res.served_at = now_;
    if (drop_next_ > 0) {
        --drop_next_;
        res.verdict = Response::Verdict::Drop;
        return res;
    }
    if (error_next_ > 0) {
        --error_next_;
        res.verdict = Response::Verdict::Error;
        res.body = "simulated server failure";
        return res;
    }
    std::string target = target_of_path(path);
    if (target.empty()) {
        res.verdict = Response::Verdict::Error;
        res.body = "no such path: " + path;
        return res;
    }
    res = render_target_locked(target, now_);
    if (res.verdict == Response::Verdict::Ok && garble_next_ > 0) {
        --garble_next_;
        // keep a prefix, then mangle: NULs and filler where content was
        std::string mangled = res.body.substr(0, res.body.size() / 3);
        mangled.push_back('\0');
        mangled += "<<<transmission interrupted>>>";
        res.body = std::move(mangled);
        res.verdict = Response::Verdict::Garble;
    }
    return res;
}

Service::Response Service::render_target_locked(const std::string& target, Timestamp t) const {
    Response res;
    res.served_at = t;
    if (target.rfind("auction/", 0) == 0) {
        auto it = auctions_by_id_.find(target.substr(8));
        if (it != auctions_by_id_.end()) {
            res.body = render_page(page_fields(projection(*it->second, t)), auction_tpl_);
            return res;
        }
    } else if (target.rfind("search/", 0) == 0) {
        std::string album = target.substr(7);
        for (const auto& page : market_.p2p.pages) {
            if (page.query_album != album) continue;
            SearchPageState state = page;
            state.as_of = t;
            res.body = render_page(page_fields(state), search_tpl_);
            return res;
        }
    } else if (target.rfind("quotes/", 0) == 0) {
        std::string product = target.substr(7);
        for (const auto& page : market_.retail.product_pages) {
            if (page.product_id != product) continue;
            res.body = render_page(page_fields(page), quote_tpl_);
            return res;
        }
    } else if (target.rfind("retailer/", 0) == 0) {
        std::string id = target.substr(9);
        for (const auto& page : market_.retail.retailer_pages) {
            if (page.profile.retailer_id != id) continue;
            res.body = render_page(page_fields(page), retailer_tpl_);
            return res;
        }
    }
    res.verdict = Response::Verdict::Error;
    res.body = "no such target: " + target;
    return res;
}

std::vector<std::string> Service::targets() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    for (const auto& log : market_.auctions) out.push_back("auction/" + log.auction.auction_id);
    for (const auto& page : market_.p2p.pages) out.push_back("search/" + page.query_album);
    if (market_.has_retail) {
        for (const auto& page : market_.retail.product_pages)
            out.push_back("quotes/" + page.product_id);
        for (const auto& page : market_.retail.retailer_pages)
            out.push_back("retailer/" + page.profile.retailer_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

harvest::FetchResult SimFetcher::get(const std::string& path) {
    Service::Response res = service_.get(path);
    harvest::FetchResult out;
    out.market_time = res.served_at;
    switch (res.verdict) {
        case Service::Response::Verdict::Ok:
            out.status = harvest::FetchStatus::OK;
            out.bytes = std::move(res.body);
            break;
        case Service::Response::Verdict::Drop:
            out.status = harvest::FetchStatus::Timeout;
            break;
        case Service::Response::Verdict::Error:
            out.status = harvest::FetchStatus::ServerError;
            break;
        case Service::Response::Verdict::Garble:
            out.status = harvest::FetchStatus::Garbled;
            out.bytes = std::move(res.body);
            break;
    }
    return out;
}

int dump_fixtures(Service& service, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    int written = 0;
    for (const std::string& target : service.targets()) {
        Service::Response res = service.get(Service::path_of_target(target));
        if (res.verdict != Service::Response::Verdict::Ok)
            throw DataError("fixture dump failed for " + target + ": " + res.body);
        std::filesystem::path file = dir / (sanitize_path_component(target) + ".html");
        std::ofstream out(file, std::ios::binary);
        if (!out) throw DataError("cannot write " + file.string());
        out << res.body;
        ++written;
    }
    return written;
}

}  // namespace marketbench::sim
