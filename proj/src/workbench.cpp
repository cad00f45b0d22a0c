#include "marketbench/workbench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "json.hpp"
#include "marketbench/analytics.hpp"
#include "marketbench/extractor.hpp"
#include "marketbench/harvester.hpp"

namespace marketbench::wb {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSONL plumbing

std::vector<json> read_jsonl(const std::filesystem::path& file) {
    std::vector<json> out;
    std::ifstream in(file, std::ios::binary);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError("corrupt record in " + file.string() + ": " + e.what());
        }
    }
    return out;
}

void write_jsonl(const std::filesystem::path& file, const std::vector<json>& rows) {
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    for (const json& row : rows) out << row.dump() << '\n';
}

std::int64_t file_lines(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return 0;
    std::int64_t n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

Timestamp ts_field(const json& j, const char* key) {
    const std::string s = j.at(key).get<std::string>();
    auto t = parse_timestamp(s);
    if (!t) throw DataError(std::string("bad timestamp in field ") + key + ": " + s);
    return *t;
}

Date date_field(const json& j, const char* key) {
    const std::string s = j.at(key).get<std::string>();
    auto d = parse_date(s);
    if (!d) throw DataError(std::string("bad date in field ") + key + ": " + s);
    return *d;
}

const char* const kExtractedFiles[] = {"snapshots", "search_rows", "quotes", "retailers"};
const char* const kCleanFiles[] = {"events",  "profiles",    "auctions", "quotes",
                                   "tallies", "search_rows", "retailers"};
const char* const kAnalysisFiles[] = {"features", "taxonomy", "dispersion",
                                      "corpus",   "tallies",  "concordance"};

std::int64_t extracted_total(const StoreLayout& layout) {
    std::int64_t n = 0;
    for (const char* name : kExtractedFiles) n += file_lines(layout.extracted_file(name));
    return n;
}

std::int64_t clean_total(const StoreLayout& layout) {
    std::int64_t n = 0;
    for (const char* name : kCleanFiles) n += file_lines(layout.clean_file(name));
    return n;
}

std::int64_t analysis_total(const StoreLayout& layout) {
    std::int64_t n = 0;
    for (const char* name : kAnalysisFiles) n += file_lines(layout.analysis_file(name));
    return n;
}

// ---------------------------------------------------------------------------
// Record serialization (timestamps ISO-8601, money integer cents)

json snapshot_json(const extract::AuctionSnapshot& s) {
    json winners = json::array();
    for (const auto& w : s.winners)
        winners.push_back({{"bidder_id", w.bidder_id}, {"price", w.price}, {"quantity", w.quantity}});
    json j{{"auction_id", s.auction_id},
           {"capture_time", format_timestamp(s.capture_time)},
           {"title", s.product.title},
           {"category", s.product.category},
           {"condition", market::to_string(s.product.condition)},
           {"life_cycle", s.product.life_cycle},
           {"min_required_bid", s.min_required_bid},
           {"lot_size", s.lot_size},
           {"winners", std::move(winners)},
           {"closed", s.closed}};
    if (s.listed_open) j["listed_open"] = format_timestamp(*s.listed_open);
    if (s.listed_close) j["listed_close"] = format_timestamp(*s.listed_close);
    if (s.starting_bid) j["starting_bid"] = *s.starting_bid;
    if (s.bid_increment) j["bid_increment"] = *s.bid_increment;
    if (s.ended_at) j["ended_at"] = format_timestamp(*s.ended_at);
    return j;
}

extract::AuctionSnapshot snapshot_from(const json& j) {
    extract::AuctionSnapshot s;
    s.auction_id = j.at("auction_id").get<std::string>();
    s.capture_time = ts_field(j, "capture_time");
    s.product.title = j.at("title").get<std::string>();
    s.product.category = j.at("category").get<std::string>();
    if (auto c = market::condition_from_string(j.at("condition").get<std::string>()))
        s.product.condition = *c;
    s.product.life_cycle = j.at("life_cycle").get<std::string>();
    s.min_required_bid = j.at("min_required_bid").get<Money>();
    s.lot_size = j.at("lot_size").get<int>();
    for (const json& w : j.at("winners"))
        s.winners.push_back({w.at("bidder_id").get<std::string>(), w.at("price").get<Money>(),
                             w.at("quantity").get<int>()});
    s.closed = j.at("closed").get<bool>();
    if (j.contains("listed_open")) s.listed_open = ts_field(j, "listed_open");
    if (j.contains("listed_close")) s.listed_close = ts_field(j, "listed_close");
    if (j.contains("starting_bid")) s.starting_bid = j["starting_bid"].get<Money>();
    if (j.contains("bid_increment")) s.bid_increment = j["bid_increment"].get<Money>();
    if (j.contains("ended_at")) s.ended_at = ts_field(j, "ended_at");
    return s;
}

json observation_json(const extract::SearchObservation& o) {
    return json{{"capture_time", format_timestamp(o.capture_time)},
                {"query_album", o.query_album},
                {"sharer_id", o.sharer_id},
                {"file_title", o.file_title},
                {"album_match", o.album_match},
                {"file_size", o.file_size},
                {"bitrate", o.bitrate},
                {"track_length", o.track_length},
                {"connection_class", o.connection_class},
                {"extra", json(o.extra)}};
}

extract::SearchObservation observation_from(const json& j) {
    extract::SearchObservation o;
    o.capture_time = ts_field(j, "capture_time");
    o.query_album = j.at("query_album").get<std::string>();
    o.sharer_id = j.at("sharer_id").get<std::string>();
    o.file_title = j.at("file_title").get<std::string>();
    o.album_match = j.at("album_match").get<bool>();
    o.file_size = j.at("file_size").get<std::int64_t>();
    o.bitrate = j.at("bitrate").get<int>();
    o.track_length = j.at("track_length").get<int>();
    o.connection_class = j.at("connection_class").get<std::string>();
    if (j.contains("extra"))
        o.extra = j["extra"].get<std::map<std::string, std::string>>();
    return o;
}

json quote_json(const extract::PriceQuote& q) {
    return json{{"retailer_id", q.retailer_id},
                {"product_id", q.product_id},
                {"category", q.category},
                {"posted_price", q.posted_price},
                {"condition", market::to_string(q.condition)},
                {"capture_time", format_timestamp(q.capture_time)}};
}

extract::PriceQuote quote_from(const json& j) {
    extract::PriceQuote q;
    q.retailer_id = j.at("retailer_id").get<std::string>();
    q.product_id = j.at("product_id").get<std::string>();
    q.category = j.at("category").get<std::string>();
    q.posted_price = j.at("posted_price").get<Money>();
    if (auto c = market::condition_from_string(j.at("condition").get<std::string>()))
        q.condition = *c;
    q.capture_time = ts_field(j, "capture_time");
    return q;
}

json retailer_json(const extract::RetailerProfile& r) {
    json j{{"retailer_id", r.retailer_id},
           {"survey_count", r.survey_count},
           {"size_rank", r.size_rank},
           {"store_states", json(r.store_states)},
           {"states_unknown", r.states_unknown},
           {"catalog", r.catalog},
           {"refurb_discounter", r.refurb_discounter}};
    if (r.ratings)
        j["ratings"] = {{"on_time_delivery", r.ratings->on_time_delivery},
                        {"customer_support", r.ratings->customer_support},
                        {"product_met_expectations", r.ratings->product_met_expectations},
                        {"shop_again", r.ratings->shop_again}};
    if (r.window_start) j["window_start"] = format_date(*r.window_start);
    if (r.window_end) j["window_end"] = format_date(*r.window_end);
    if (r.channel) j["channel"] = extract::to_string(*r.channel);
    return j;
}

extract::RetailerProfile retailer_from(const json& j) {
    extract::RetailerProfile r;
    r.retailer_id = j.at("retailer_id").get<std::string>();
    r.survey_count = j.at("survey_count").get<int>();
    r.size_rank = j.at("size_rank").get<int>();
    r.store_states = j.at("store_states").get<std::vector<std::string>>();
    r.states_unknown = j.at("states_unknown").get<bool>();
    r.catalog = j.at("catalog").get<bool>();
    r.refurb_discounter = j.at("refurb_discounter").get<bool>();
    if (j.contains("ratings")) {
        extract::RatingBlock b;
        b.on_time_delivery = j["ratings"].at("on_time_delivery").get<int>();
        b.customer_support = j["ratings"].at("customer_support").get<int>();
        b.product_met_expectations = j["ratings"].at("product_met_expectations").get<int>();
        b.shop_again = j["ratings"].at("shop_again").get<int>();
        r.ratings = b;
    }
    if (j.contains("window_start")) r.window_start = date_field(j, "window_start");
    if (j.contains("window_end")) r.window_end = date_field(j, "window_end");
    if (j.contains("channel"))
        r.channel = extract::channel_from_string(j["channel"].get<std::string>());
    return r;
}

json event_json(const pipe::ObservedBid& b) {
    return json{{"auction_id", b.auction_id},
                {"bidder_id", b.bidder_id},
                {"at", format_timestamp(b.at)},
                {"seen_from", format_timestamp(b.seen_from)},
                {"price", b.price},
                {"quantity", b.quantity}};
}

pipe::ObservedBid event_from(const json& j) {
    pipe::ObservedBid b;
    b.auction_id = j.at("auction_id").get<std::string>();
    b.bidder_id = j.at("bidder_id").get<std::string>();
    b.at = ts_field(j, "at");
    b.seen_from = ts_field(j, "seen_from");
    b.price = j.at("price").get<Money>();
    b.quantity = j.at("quantity").get<int>();
    return b;
}

json profile_json(const pipe::BidderProfile& p, bool valid) {
    return json{{"bidder_id", p.bidder_id},
                {"auction_id", p.auction_id},
                {"entry_time", format_timestamp(p.entry_time)},
                {"exit_time", format_timestamp(p.exit_time)},
                {"bid_count", p.bid_count},
                {"final_bid", p.final_bid},
                {"observed_quantities", json(p.observed_quantities)},
                {"valid", valid}};
}

pipe::BidderProfile profile_from(const json& j, bool* valid) {
    pipe::BidderProfile p;
    p.bidder_id = j.at("bidder_id").get<std::string>();
    p.auction_id = j.at("auction_id").get<std::string>();
    p.entry_time = ts_field(j, "entry_time");
    p.exit_time = ts_field(j, "exit_time");
    p.bid_count = j.at("bid_count").get<int>();
    p.final_bid = j.at("final_bid").get<Money>();
    p.observed_quantities = j.at("observed_quantities").get<std::vector<int>>();
    if (valid) *valid = j.at("valid").get<bool>();
    return p;
}

json tally_json(const pipe::CategoryTally& t) {
    return json{{"category", t.category},
                {"posted_prices_collected", t.posted_prices_collected},
                {"posted_prices_analyzed", t.posted_prices_analyzed},
                {"retailers_collected", t.retailers_collected},
                {"retailers_analyzed", t.retailers_analyzed},
                {"products", t.products}};
}

pipe::CategoryTally tally_from(const json& j) {
    pipe::CategoryTally t;
    t.category = j.at("category").get<std::string>();
    t.posted_prices_collected = j.at("posted_prices_collected").get<std::int64_t>();
    t.posted_prices_analyzed = j.at("posted_prices_analyzed").get<std::int64_t>();
    t.retailers_collected = j.at("retailers_collected").get<std::int64_t>();
    t.retailers_analyzed = j.at("retailers_analyzed").get<std::int64_t>();
    t.products = j.at("products").get<std::int64_t>();
    return t;
}

ana::Behavior behavior_from(const std::string& s) {
    if (s == "EarlyMultiple") return ana::Behavior::EarlyMultiple;
    if (s == "EarlySingle") return ana::Behavior::EarlySingle;
    if (s == "LateArriver") return ana::Behavior::LateArriver;
    if (s == "Other") return ana::Behavior::Other;
    throw DataError("unknown behavior label: " + s);
}

// ---------------------------------------------------------------------------
// Config parsing

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("unknown config key " +
                              (where.empty() ? it.key() : where + "." + it.key()));
    }
}

Money money_of(const json& v, const std::string& key) {
    if (v.is_number_integer()) return v.get<Money>();
    if (v.is_string()) {
        auto m = parse_money(v.get<std::string>());
        if (m) return *m;
    }
    throw ConfigError("config key " + key + " must be integer cents or a money string");
}

Timestamp timestamp_of(const json& v, const std::string& key) {
    if (v.is_number_integer()) return v.get<Timestamp>();
    if (v.is_string()) {
        auto t = parse_timestamp(v.get<std::string>());
        if (t) return *t;
    }
    throw ConfigError("config key " + key + " must be epoch seconds or an ISO timestamp");
}

Date date_of(const json& v, const std::string& key) {
    if (v.is_number_integer()) return v.get<Date>();
    if (v.is_string()) {
        auto d = parse_date(v.get<std::string>());
        if (d) return *d;
    }
    throw ConfigError("config key " + key + " must be an epoch day or a date string");
}

void parse_auctions(const json& j, WorkbenchConfig& cfg) {
    check_keys(j, "market.auctions",
               {"count", "bidders", "mix", "lot", "starting_bid", "bid_increment", "valuation",
                "first_open", "duration_seconds", "stagger_seconds", "soft_close_window_seconds"});
    auto& a = cfg.market.auctions;
    if (j.contains("count")) {
        a.auctions = j["count"].get<int>();
        cfg.market.with_auctions = a.auctions > 0;
    }
    if (j.contains("bidders")) a.bidders_per_auction = j["bidders"].get<int>();
    if (j.contains("mix")) {
        const json& m = j["mix"];
        check_keys(m, "market.auctions.mix", {"early_multiple", "early_single", "late_arriver"});
        a.mix.clear();
        if (m.contains("early_multiple"))
            a.mix[sim::ArchetypeKind::EarlyMultiple] = m["early_multiple"].get<double>();
        if (m.contains("early_single"))
            a.mix[sim::ArchetypeKind::EarlySingle] = m["early_single"].get<double>();
        if (m.contains("late_arriver"))
            a.mix[sim::ArchetypeKind::LateArriver] = m["late_arriver"].get<double>();
    }
    if (j.contains("lot")) {
        a.lot_lo = j["lot"].at(0).get<int>();
        a.lot_hi = j["lot"].at(1).get<int>();
    }
    if (j.contains("starting_bid")) a.starting_bid = money_of(j["starting_bid"], "market.auctions.starting_bid");
    if (j.contains("bid_increment"))
        a.bid_increment = money_of(j["bid_increment"], "market.auctions.bid_increment");
    if (j.contains("valuation")) {
        a.valuation_lo = money_of(j["valuation"].at(0), "market.auctions.valuation[0]");
        a.valuation_hi = money_of(j["valuation"].at(1), "market.auctions.valuation[1]");
    }
    if (j.contains("first_open")) a.first_open = timestamp_of(j["first_open"], "market.auctions.first_open");
    if (j.contains("duration_seconds")) a.duration = j["duration_seconds"].get<Duration>();
    if (j.contains("stagger_seconds")) a.stagger = j["stagger_seconds"].get<Duration>();
    if (j.contains("soft_close_window_seconds"))
        a.soft_close_window = j["soft_close_window_seconds"].get<Duration>();
}

void parse_retail(const json& j, WorkbenchConfig& cfg) {
    check_keys(j, "market.retail",
               {"categories", "retailers", "products_per_category", "quotes", "price",
                "refurb_quote_p", "unrated_retailer_p", "low_survey_p", "stale_window_p",
                "refurb_discounter_p", "unknown_states_p", "weak_category",
                "weak_category_products", "as_of"});
    cfg.market.with_retail = true;
    auto& r = cfg.market.retail;
    if (j.contains("categories")) r.categories = j["categories"].get<int>();
    if (j.contains("retailers")) r.retailers = j["retailers"].get<int>();
    if (j.contains("products_per_category"))
        r.products_per_category = j["products_per_category"].get<int>();
    if (j.contains("quotes")) {
        r.quotes_lo = j["quotes"].at(0).get<int>();
        r.quotes_hi = j["quotes"].at(1).get<int>();
    }
    if (j.contains("price")) {
        r.price_lo = money_of(j["price"].at(0), "market.retail.price[0]");
        r.price_hi = money_of(j["price"].at(1), "market.retail.price[1]");
    }
    if (j.contains("refurb_quote_p")) r.refurb_quote_p = j["refurb_quote_p"].get<double>();
    if (j.contains("unrated_retailer_p")) r.unrated_retailer_p = j["unrated_retailer_p"].get<double>();
    if (j.contains("low_survey_p")) r.low_survey_p = j["low_survey_p"].get<double>();
    if (j.contains("stale_window_p")) r.stale_window_p = j["stale_window_p"].get<double>();
    if (j.contains("refurb_discounter_p"))
        r.refurb_discounter_p = j["refurb_discounter_p"].get<double>();
    if (j.contains("unknown_states_p")) r.unknown_states_p = j["unknown_states_p"].get<double>();
    if (j.contains("weak_category")) r.weak_category = j["weak_category"].get<int>();
    if (j.contains("weak_category_products"))
        r.weak_category_products = j["weak_category_products"].get<int>();
    if (j.contains("as_of")) r.as_of = date_of(j["as_of"], "market.retail.as_of");
}

double mix_share(const WorkbenchConfig& cfg, sim::ArchetypeKind kind) {
    auto it = cfg.market.auctions.mix.find(kind);
    return it == cfg.market.auctions.mix.end() ? 0.0 : it->second;
}

std::string wall_clock_token() {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    return std::to_string(std::chrono::duration_cast<std::chrono::nanoseconds>(now).count());
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

WorkbenchConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    check_keys(j, "", {"seed", "out", "market", "harvest", "cleanse", "analyze", "report"});
    WorkbenchConfig cfg;
    try {
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out")) cfg.out = j["out"].get<std::string>();
        if (j.contains("market")) {
            const json& m = j["market"];
            check_keys(m, "market", {"auctions", "albums", "results_per_album", "retail"});
            if (m.contains("auctions")) parse_auctions(m["auctions"], cfg);
            if (m.contains("albums"))
                cfg.market.albums = m["albums"].get<std::vector<std::string>>();
            if (m.contains("results_per_album"))
                cfg.market.results_per_album = m["results_per_album"].get<int>();
            if (m.contains("retail")) parse_retail(m["retail"], cfg);
        }
        if (j.contains("harvest")) {
            check_keys(j["harvest"], "harvest", {"rate_per_second"});
            if (j["harvest"].contains("rate_per_second"))
                cfg.rate_per_second = j["harvest"]["rate_per_second"].get<double>();
        }
        if (j.contains("cleanse")) {
            const json& c = j["cleanse"];
            check_keys(c, "cleanse", {"min_quotes_per_product", "min_products_per_category"});
            if (c.contains("min_quotes_per_product"))
                cfg.quote_thresholds.min_quotes_per_product = c["min_quotes_per_product"].get<int>();
            if (c.contains("min_products_per_category"))
                cfg.quote_thresholds.min_products_per_category =
                    c["min_products_per_category"].get<int>();
        }
        if (j.contains("analyze")) {
            const json& a = j["analyze"];
            check_keys(a, "analyze",
                       {"k", "k_range", "restarts", "concordance_lag", "sharing_weeks",
                        "sharing_albums"});
            if (a.contains("k")) cfg.analyze.k = a["k"].get<int>();
            if (a.contains("restarts")) cfg.analyze.restarts = a["restarts"].get<int>();
            if (a.contains("k_range")) {
                cfg.analyze.k_lo = a["k_range"].at(0).get<int>();
                cfg.analyze.k_hi = a["k_range"].at(1).get<int>();
            }
            if (a.contains("concordance_lag"))
                cfg.analyze.concordance_lag = a["concordance_lag"].get<int>();
            if (a.contains("sharing_weeks")) cfg.analyze.sharing_weeks = a["sharing_weeks"].get<int>();
            if (a.contains("sharing_albums"))
                cfg.analyze.sharing_albums = a["sharing_albums"].get<int>();
        }
        if (j.contains("report")) {
            check_keys(j["report"], "report", {"plots"});
            if (j["report"].contains("plots")) cfg.report_plots = j["report"]["plots"].get<bool>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }
    return cfg;
}

WorkbenchConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_digest(const WorkbenchConfig& cfg) {
    // Canonical form: every effective knob spelled out with normalized
    // units, keys sorted by the JSON library. The output directory is not
    // part of the dataset identity.
    json c;
    c["seed"] = cfg.seed;
    json a;
    a["count"] = cfg.market.with_auctions ? cfg.market.auctions.auctions : 0;
    a["bidders"] = cfg.market.auctions.bidders_per_auction;
    a["mix"] = {{"early_multiple", mix_share(cfg, sim::ArchetypeKind::EarlyMultiple)},
                {"early_single", mix_share(cfg, sim::ArchetypeKind::EarlySingle)},
                {"late_arriver", mix_share(cfg, sim::ArchetypeKind::LateArriver)}};
    a["lot"] = {cfg.market.auctions.lot_lo, cfg.market.auctions.lot_hi};
    a["starting_bid"] = cfg.market.auctions.starting_bid;
    a["bid_increment"] = cfg.market.auctions.bid_increment;
    a["valuation"] = {cfg.market.auctions.valuation_lo, cfg.market.auctions.valuation_hi};
    a["first_open"] = cfg.market.auctions.first_open;
    a["duration_seconds"] = cfg.market.auctions.duration;
    a["stagger_seconds"] = cfg.market.auctions.stagger;
    a["soft_close_window_seconds"] = cfg.market.auctions.soft_close_window;
    c["market"]["auctions"] = std::move(a);
    c["market"]["albums"] = cfg.market.albums;
    c["market"]["results_per_album"] = cfg.market.results_per_album;
    if (cfg.market.with_retail) {
        const auto& r = cfg.market.retail;
        c["market"]["retail"] = {{"categories", r.categories},
                                 {"retailers", r.retailers},
                                 {"products_per_category", r.products_per_category},
                                 {"quotes", {r.quotes_lo, r.quotes_hi}},
                                 {"price", {r.price_lo, r.price_hi}},
                                 {"refurb_quote_p", r.refurb_quote_p},
                                 {"unrated_retailer_p", r.unrated_retailer_p},
                                 {"low_survey_p", r.low_survey_p},
                                 {"stale_window_p", r.stale_window_p},
                                 {"refurb_discounter_p", r.refurb_discounter_p},
                                 {"unknown_states_p", r.unknown_states_p},
                                 {"weak_category", r.weak_category},
                                 {"weak_category_products", r.weak_category_products},
                                 {"as_of", r.as_of}};
    }
    c["harvest"]["rate_per_second"] = cfg.rate_per_second;
    c["cleanse"] = {{"min_quotes_per_product", cfg.quote_thresholds.min_quotes_per_product},
                    {"min_products_per_category", cfg.quote_thresholds.min_products_per_category}};
    c["analyze"] = {{"k", cfg.analyze.k},
                    {"k_range", {cfg.analyze.k_lo, cfg.analyze.k_hi}},
                    {"restarts", cfg.analyze.restarts},
                    {"concordance_lag", cfg.analyze.concordance_lag},
                    {"sharing_weeks", cfg.analyze.sharing_weeks},
                    {"sharing_albums", cfg.analyze.sharing_albums}};
    c["report"]["plots"] = cfg.report_plots;
    return digest_hex(c.dump());
}

void validate_config(const WorkbenchConfig& cfg) {
    if (cfg.out.empty()) throw ConfigError("out directory must not be empty");
    if (!(cfg.rate_per_second > 0)) throw ConfigError("harvest.rate_per_second must be positive");
    if (cfg.market.with_auctions) cfg.market.auctions.validate();
    if (cfg.market.with_retail) cfg.market.retail.validate();
    if (!cfg.market.albums.empty() && cfg.market.results_per_album < 1)
        throw ConfigError("market.results_per_album must be at least 1");
    if (cfg.quote_thresholds.min_quotes_per_product < 1 ||
        cfg.quote_thresholds.min_products_per_category < 1)
        throw ConfigError("cleanse thresholds must be at least 1");
    const auto& an = cfg.analyze;
    if (an.k < 0) throw ConfigError("analyze.k must be non-negative");
    if (an.k == 0 && (an.k_lo < 2 || an.k_hi < an.k_lo))
        throw ConfigError("analyze.k_range must satisfy 2 <= lo <= hi");
    if (an.restarts < 1) throw ConfigError("analyze.restarts must be at least 1");
    if (an.concordance_lag < 0) throw ConfigError("analyze.concordance_lag must be non-negative");
    if (an.sharing_weeks < 0) throw ConfigError("analyze.sharing_weeks must be non-negative");
    if (an.sharing_albums < 0) throw ConfigError("analyze.sharing_albums must be non-negative");
    if (an.sharing_weeks > 0) {
        if (an.sharing_weeks < an.concordance_lag + 3)
            throw ConfigError("analyze.sharing_weeks too small for the concordance lag");
        if (an.sharing_albums == 0 && cfg.market.albums.empty())
            throw ConfigError("sharing feed needs analyze.sharing_albums or market.albums");
    }
}

// ---------------------------------------------------------------------------
// Store layout

std::filesystem::path StoreLayout::extracted_file(const std::string& name) const {
    return records_dir() / "extracted" / (name + ".jsonl");
}

std::filesystem::path StoreLayout::clean_file(const std::string& name) const {
    return records_dir() / "clean" / (name + ".jsonl");
}

std::filesystem::path StoreLayout::collated_file(const std::string& name) const {
    return records_dir() / "collated" / (name + ".jsonl");
}

std::filesystem::path StoreLayout::analysis_file(const std::string& name) const {
    return records_dir() / "analysis" / (name + ".jsonl");
}

void StoreLayout::ensure() const {
    namespace fs = std::filesystem;
    fs::create_directories(raw_dir());
    fs::create_directories(records_dir() / "extracted");
    fs::create_directories(records_dir() / "clean");
    fs::create_directories(records_dir() / "collated");
    fs::create_directories(records_dir() / "analysis");
    fs::create_directories(reports_dir());
    fs::create_directories(review_file().parent_path());
    fs::create_directories(manifests_dir());
}

// ---------------------------------------------------------------------------
// Manifest

std::string manifest_json(const RunManifest& m) {
    json stages = json::array();
    for (const auto& s : m.stages)
        stages.push_back({{"stage", s.stage},
                          {"records_in", s.records_in},
                          {"records_out", s.records_out},
                          {"flags_raised", s.flags_raised}});
    json j{{"run_id", m.run_id},
           {"config_digest", m.config_digest},
           {"seed", m.seed},
           {"provenance",
            {{"source_kind", market::to_string(m.provenance.source_kind)},
             {"collected_at", format_timestamp(m.provenance.collected_at)},
             {"collector", m.provenance.collector}}},
           {"stages", std::move(stages)}};
    return j.dump(2);
}

RunManifest parse_manifest(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest is not valid JSON: ") + e.what());
    }
    RunManifest m;
    try {
        m.run_id = j.at("run_id").get<std::string>();
        m.config_digest = j.at("config_digest").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        const json& p = j.at("provenance");
        const std::string kind = p.at("source_kind").get<std::string>();
        if (kind == "Field") m.provenance.source_kind = market::SourceKind::Field;
        else if (kind == "Experimental") m.provenance.source_kind = market::SourceKind::Experimental;
        else if (kind == "Survey") m.provenance.source_kind = market::SourceKind::Survey;
        else if (kind == "Simulation") m.provenance.source_kind = market::SourceKind::Simulation;
        else if (kind == "Internet") m.provenance.source_kind = market::SourceKind::Internet;
        else throw DataError("unknown source kind: " + kind);
        m.provenance.collected_at = ts_field(p, "collected_at");
        m.provenance.collector = p.at("collector").get<std::string>();
        for (const json& s : j.at("stages"))
            m.stages.push_back({s.at("stage").get<std::string>(),
                                s.at("records_in").get<std::int64_t>(),
                                s.at("records_out").get<std::int64_t>(),
                                s.at("flags_raised").get<std::int64_t>()});
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest is missing fields: ") + e.what());
    }
    return m;
}

std::filesystem::path write_manifest(const RunManifest& m, const StoreLayout& layout) {
    layout.ensure();
    const std::filesystem::path file = layout.manifests_dir() / (m.run_id + ".json");
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write manifest " + file.string());
    out << manifest_json(m) << '\n';
    return file;
}

RunManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read manifest " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

// ---------------------------------------------------------------------------
// Stage: harvest

StageOutcome stage_harvest(const WorkbenchConfig& cfg, const StoreLayout& layout) {
    validate_config(cfg);
    layout.ensure();
    harvest::Archive archive(layout.raw_dir());
    StageOutcome out{"harvest", 0, 0, 0};

    std::vector<std::string> targets;
    Timestamp horizon = 0;
    {
        sim::SimMarket probe = sim::build_market(cfg.market, cfg.seed);
        for (const auto& log : probe.auctions) horizon = std::max(horizon, log.end_time);
        sim::Service svc(std::move(probe), 0);
        targets = svc.targets();
    }
    horizon += cfg.market.auctions.soft_close_window + kSecondsPerDay;
    out.records_in = static_cast<std::int64_t>(targets.size());

    for (const std::string& target : targets) {
        try {
            // A fresh service per target gives each capture its own virtual
            // clock; a shared one could not rewind to an earlier lot's bids.
            sim::SimMarket m = sim::build_market(cfg.market, cfg.seed);
            sim::Service svc(std::move(m), 0);
            sim::SimFetcher fetcher(svc);
            harvest::ManualClock wall(0);
            harvest::RateLimiter limiter(cfg.rate_per_second);
            harvest::FetchContext ctx{fetcher, limiter, wall, harvest::RetryPolicy{},
                                      [&svc] { return svc.now(); }};
            const std::string path = sim::Service::path_of_target(target);
            if (target.rfind("auction/", 0) == 0) {
                sim::SimClockControl ctl(svc);
                sim::SimEventFeed feed(svc);
                harvest::CaptureOutcome captured = harvest::capture_event_series(
                    target, path, ctx, ctl, feed, &archive, horizon,
                    [](const harvest::RawDocument& doc) {
                        return doc.bytes.find(">closed<") != std::string::npos;
                    });
                out.records_out += static_cast<std::int64_t>(captured.docs.size());
            } else {
                auto result = harvest::fetch(target, path, ctx);
                if (auto* doc = std::get_if<harvest::RawDocument>(&result)) {
                    archive.store(*doc);
                    ++out.records_out;
                } else {
                    archive.store_gap(std::get<harvest::GapRecord>(result));
                }
            }
        } catch (const std::exception& e) {
            archive.store_gap({target, 0, 1, std::string("harvest aborted: ") + e.what()});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage: extract

StageOutcome stage_extract(const WorkbenchConfig&, const StoreLayout& layout) {
    layout.ensure();
    harvest::Archive archive(layout.raw_dir());
    pipe::ReviewQueue queue(layout.review_file());
    StageOutcome out{"extract", 0, 0, 0};

    const extract::ExtractionRuleSet auction_rules =
        extract::compile_rules(extract::default_auction_rules());
    const extract::ExtractionRuleSet search_rules =
        extract::compile_rules(extract::default_search_rules());
    const extract::ExtractionRuleSet quote_rules =
        extract::compile_rules(extract::default_quote_rules());
    const extract::ExtractionRuleSet retailer_rules =
        extract::compile_rules(extract::default_retailer_rules());

    std::vector<json> snapshots, search_rows, quotes, retailers;
    for (const std::string& target : archive.targets()) {
        const std::vector<harvest::RawDocument> docs = archive.load_target(target);
        out.records_in += static_cast<std::int64_t>(docs.size());
        for (const harvest::RawDocument& doc : docs) {
            // doc.target carries the original identifier; the directory
            // listing is its sanitized form.
            const std::string ref = doc.target + "@" + format_timestamp(doc.capture_time);
            try {
                if (doc.target.rfind("auction/", 0) == 0) {
                    auto result = extract::extract_auction(doc, auction_rules);
                    if (auto* fail = std::get_if<extract::Malformed>(&result))
                        out.flags_raised +=
                            pipe::flag_malformed(ref, *fail, queue, doc.capture_time);
                    else
                        snapshots.push_back(
                            snapshot_json(std::get<extract::AuctionSnapshot>(result)));
                } else if (doc.target.rfind("search/", 0) == 0) {
                    auto result = extract::extract_search(doc, search_rules);
                    if (auto* fail = std::get_if<extract::Malformed>(&result))
                        out.flags_raised +=
                            pipe::flag_malformed(ref, *fail, queue, doc.capture_time);
                    else
                        for (const auto& obs :
                             std::get<std::vector<extract::SearchObservation>>(result))
                            search_rows.push_back(observation_json(obs));
                } else {
                    const bool retailer_page = doc.target.rfind("retailer/", 0) == 0;
                    auto result = extract::extract_quotes(
                        doc, retailer_page ? retailer_rules : quote_rules);
                    if (auto* fail = std::get_if<extract::Malformed>(&result)) {
                        out.flags_raised +=
                            pipe::flag_malformed(ref, *fail, queue, doc.capture_time);
                    } else {
                        const auto& got = std::get<extract::QuoteExtraction>(result);
                        for (const auto& q : got.quotes) quotes.push_back(quote_json(q));
                        if (got.profile) retailers.push_back(retailer_json(*got.profile));
                    }
                }
            } catch (const std::exception& e) {
                if (queue.flag(ref, pipe::ReviewReason::MalformedDoc,
                               std::string("extract failure: ") + e.what(), doc.capture_time))
                    ++out.flags_raised;
            }
        }
    }
    write_jsonl(layout.extracted_file("snapshots"), snapshots);
    write_jsonl(layout.extracted_file("search_rows"), search_rows);
    write_jsonl(layout.extracted_file("quotes"), quotes);
    write_jsonl(layout.extracted_file("retailers"), retailers);
    out.records_out = static_cast<std::int64_t>(snapshots.size() + search_rows.size() +
                                                quotes.size() + retailers.size());
    return out;
}

// ---------------------------------------------------------------------------
// Stage: cleanse

StageOutcome stage_cleanse(const WorkbenchConfig& cfg, const StoreLayout& layout) {
    layout.ensure();
    pipe::ReviewQueue queue(layout.review_file());
    StageOutcome out{"cleanse", extracted_total(layout), 0, 0};

    std::vector<extract::AuctionSnapshot> snapshots;
    for (const json& j : read_jsonl(layout.extracted_file("snapshots")))
        snapshots.push_back(snapshot_from(j));
    std::vector<json> search_rows = read_jsonl(layout.extracted_file("search_rows"));
    std::vector<extract::PriceQuote> quotes;
    for (const json& j : read_jsonl(layout.extracted_file("quotes"))) quotes.push_back(quote_from(j));
    std::vector<extract::RetailerProfile> retailers;
    for (const json& j : read_jsonl(layout.extracted_file("retailers")))
        retailers.push_back(retailer_from(j));

    // The review clock is the newest market instant in the data itself, so
    // reruns stamp identical items.
    Timestamp now = 0;
    for (const auto& s : snapshots) now = std::max(now, s.capture_time);
    for (const auto& q : quotes) now = std::max(now, q.capture_time);
    for (const json& r : search_rows)
        now = std::max(now, ts_field(r, "capture_time"));

    out.flags_raised += pipe::flag_snapshot_anomalies(snapshots, queue, now);

    std::map<std::string, std::vector<extract::AuctionSnapshot>> by_auction;
    for (auto& s : snapshots) by_auction[s.auction_id].push_back(std::move(s));

    std::vector<json> events_out, profiles_out, spans_out;
    std::vector<pipe::CleanseVerdict> verdicts;
    for (auto& [auction_id, series] : by_auction) {
        try {
            const pipe::CleanseVerdict verdict = pipe::cleanse_series(series);
            verdicts.push_back(verdict);
            Timestamp open = series.front().capture_time;
            for (const auto& s : series)
                if (s.listed_open) {
                    open = *s.listed_open;
                    break;
                }
            Timestamp end = series.back().capture_time;
            if (series.back().ended_at) end = *series.back().ended_at;
            spans_out.push_back(json{{"auction_id", auction_id},
                                     {"category", series.front().product.category},
                                     {"open", format_timestamp(open)},
                                     {"end", format_timestamp(end)},
                                     {"status", pipe::to_string(verdict.status)},
                                     {"detail", verdict.detail}});
            if (verdict.status != pipe::CleanseStatus::Valid) continue;

            const std::vector<pipe::ObservedBid> events = pipe::reconstruct_events(series);
            const std::vector<pipe::BidderProfile> profiles = pipe::reconstruct_bids(series);
            out.flags_raised += pipe::flag_profile_anomalies(profiles, queue, now);
            std::set<std::string> frivolous;
            if (!profiles.empty() && !series.back().winners.empty()) {
                const market::Allocation alloc = pipe::allocation_from_snapshot(series.back());
                for (const auto& p : pipe::filter_frivolous(profiles, alloc).frivolous)
                    frivolous.insert(p.bidder_id);
            }
            for (const auto& e : events) events_out.push_back(event_json(e));
            for (const auto& p : profiles)
                profiles_out.push_back(profile_json(p, frivolous.count(p.bidder_id) == 0));
        } catch (const DataError& e) {
            if (queue.flag("auction/" + auction_id, pipe::ReviewReason::MalformedDoc,
                           std::string("cleanse failure: ") + e.what(), now))
                ++out.flags_raised;
        }
    }
    out.flags_raised += pipe::flag_cleanse_verdicts(verdicts, queue, now);
    out.flags_raised += pipe::flag_quote_anomalies(quotes, queue, now);
    out.flags_raised += pipe::assign_channels(retailers, &queue, now);

    std::vector<json> quotes_out, tallies_out, retailers_out;
    try {
        const pipe::AnalyzableQuoteSet filtered =
            pipe::filter_quotes(quotes, retailers, cfg.market.retail.as_of, cfg.quote_thresholds);
        for (const auto& q : filtered.quotes) quotes_out.push_back(quote_json(q));
        for (const auto& t : filtered.tallies) tallies_out.push_back(tally_json(t));
    } catch (const DataError& e) {
        if (queue.flag("quotes", pipe::ReviewReason::MalformedDoc,
                       std::string("quote filter failure: ") + e.what(), now))
            ++out.flags_raised;
    }
    for (const auto& r : retailers) retailers_out.push_back(retailer_json(r));

    write_jsonl(layout.clean_file("events"), events_out);
    write_jsonl(layout.clean_file("profiles"), profiles_out);
    write_jsonl(layout.clean_file("auctions"), spans_out);
    write_jsonl(layout.clean_file("quotes"), quotes_out);
    write_jsonl(layout.clean_file("tallies"), tallies_out);
    write_jsonl(layout.clean_file("search_rows"), search_rows);
    write_jsonl(layout.clean_file("retailers"), retailers_out);
    out.records_out = clean_total(layout);
    return out;
}

// ---------------------------------------------------------------------------
// Stage: collate

StageOutcome stage_collate(const WorkbenchConfig&, const StoreLayout& layout) {
    layout.ensure();
    pipe::ReviewQueue queue(layout.review_file());
    StageOutcome out{"collate", clean_total(layout), 0, 0};

    std::vector<pipe::ObservedBid> events;
    for (const json& j : read_jsonl(layout.clean_file("events"))) events.push_back(event_from(j));
    std::map<std::string, pipe::CollationFacts> facts;
    for (const json& j : read_jsonl(layout.clean_file("auctions")))
        facts[j.at("auction_id").get<std::string>()] = {j.at("category").get<std::string>()};

    Timestamp now = 0;
    for (const auto& e : events) now = std::max(now, e.at);

    std::vector<json> aggregates;
    for (pipe::Level level : {pipe::Level::Auction, pipe::Level::Category, pipe::Level::Day}) {
        try {
            for (const pipe::AggregateRow& row : pipe::collate(events, facts, level))
                aggregates.push_back(json{{"level", pipe::to_string(level)},
                                          {"key", row.key},
                                          {"bids", row.bids},
                                          {"bidders", row.bidders},
                                          {"auctions", row.auctions},
                                          {"amount", row.amount}});
        } catch (const DataError& e) {
            if (queue.flag("collate/" + pipe::to_string(level), pipe::ReviewReason::MalformedDoc,
                           std::string("collation failure: ") + e.what(), now))
                ++out.flags_raised;
        }
    }
    write_jsonl(layout.collated_file("aggregates"), aggregates);
    // Clean records flow onward alongside the aggregates derived from them.
    out.records_out = out.records_in + static_cast<std::int64_t>(aggregates.size());
    return out;
}

// ---------------------------------------------------------------------------
// Stage: analyze

StageOutcome stage_analyze(const WorkbenchConfig& cfg, const StoreLayout& layout) {
    layout.ensure();
    pipe::ReviewQueue queue(layout.review_file());
    StageOutcome out{"analyze", clean_total(layout) + file_lines(layout.collated_file("aggregates")),
                     0, 0};

    struct Span {
        Timestamp open = 0;
        Timestamp end = 0;
    };
    std::map<std::string, Span> spans;
    for (const json& j : read_jsonl(layout.clean_file("auctions")))
        if (j.at("status").get<std::string>() == "Valid")
            spans[j.at("auction_id").get<std::string>()] =
                Span{ts_field(j, "open"), ts_field(j, "end")};

    std::vector<ana::FeatureVector> features;
    std::vector<std::string> feature_auctions;  // parallel to features
    Timestamp now = 0;
    for (const json& j : read_jsonl(layout.clean_file("profiles"))) {
        bool valid = true;
        const pipe::BidderProfile p = profile_from(j, &valid);
        now = std::max(now, p.exit_time);
        if (!valid) continue;
        auto it = spans.find(p.auction_id);
        if (it == spans.end()) continue;
        try {
            features.push_back(ana::bidder_features(p, it->second.open, it->second.end));
            feature_auctions.push_back(p.auction_id);
        } catch (const DataError& e) {
            if (queue.flag("profile/" + p.auction_id + "/" + p.bidder_id,
                           pipe::ReviewReason::ImpossibleValue,
                           std::string("feature failure: ") + e.what(), now))
                ++out.flags_raised;
        }
    }

    std::vector<int> assignment(features.size(), -1);
    std::vector<json> taxonomy_out;
    if (features.size() >= 4) {
        const std::vector<ana::Point> points = ana::scaled_features(features);
        Rng seeder = Rng(cfg.seed).fork("kmeans");
        const std::uint64_t cluster_seed = seeder.raw();
        try {
            int k = cfg.analyze.k;
            if (k <= 0) {
                const int hi =
                    std::min(cfg.analyze.k_hi, static_cast<int>(features.size()) - 1);
                const int lo = std::min(cfg.analyze.k_lo, hi);
                k = ana::choose_k(points, lo, hi, cluster_seed).k;
            }
            // Spread seeding can still land in a poor local minimum, so fit
            // several seeded runs and keep the lowest SSE (ties: first run).
            ana::Clustering clustering = ana::kmeans(points, k, cluster_seed);
            for (int attempt = 1; attempt < cfg.analyze.restarts; ++attempt) {
                ana::Clustering next = ana::kmeans(points, k, seeder.raw());
                if (next.sse < clustering.sse) clustering = std::move(next);
            }
            assignment = clustering.assignment;
            for (const auto& row : ana::summarize_taxonomy(clustering, features))
                taxonomy_out.push_back(json{{"cluster", row.cluster_id},
                                            {"label", ana::to_string(row.label)},
                                            {"members", row.members},
                                            {"entry_norm", row.entry_norm},
                                            {"exit_norm", row.exit_norm},
                                            {"bid_count", row.bid_count}});
        } catch (const ConfigError&) {
            // Too few distinct behaviors to cluster; features stay unlabeled.
        }
    }
    std::vector<json> features_out;
    for (std::size_t i = 0; i < features.size(); ++i)
        features_out.push_back(json{{"bidder_id", features[i].bidder_id},
                                    {"auction_id", feature_auctions[i]},
                                    {"entry_norm", features[i].entry_norm},
                                    {"exit_norm", features[i].exit_norm},
                                    {"bid_count", features[i].bid_count},
                                    {"cluster", assignment[i]}});

    std::map<std::string, std::vector<Money>> by_product;
    for (const json& j : read_jsonl(layout.clean_file("quotes"))) {
        const extract::PriceQuote q = quote_from(j);
        by_product[q.product_id].push_back(q.posted_price);
    }
    std::vector<json> dispersion_out;
    for (const auto& [product, prices] : by_product) {
        if (prices.size() < 2) continue;  // dispersion undefined for a lone quote
        const ana::DispersionReport r = ana::dispersion_metrics(product, prices);
        dispersion_out.push_back(json{{"product_id", r.product_id},
                                      {"n_quotes", r.n_quotes},
                                      {"min_cents", r.min},
                                      {"max_cents", r.max},
                                      {"range_cents", r.range},
                                      {"range_pct", r.range_pct},
                                      {"cv", r.cv}});
    }

    std::vector<extract::SearchObservation> rows;
    for (const json& j : read_jsonl(layout.clean_file("search_rows")))
        rows.push_back(observation_from(j));
    std::vector<json> corpus_out;
    if (!rows.empty()) {
        const ana::CorpusSummary s = ana::corpus_summary(rows);
        corpus_out.push_back(json{
            {"users", s.users}, {"files", s.files}, {"files_per_user", s.files_per_user}});
    }

    std::vector<json> concordance_out;
    if (cfg.analyze.sharing_weeks > 0) {
        // Weekly sharing counts and chart positions are an external feed
        // beside the harvested store; the simulator supplies both series.
        const int n_albums = cfg.analyze.sharing_albums > 0
                                 ? cfg.analyze.sharing_albums
                                 : static_cast<int>(cfg.market.albums.size());
        const sim::WeeklySharingMarket feed = sim::gen_sharing_market(
            n_albums, cfg.analyze.sharing_weeks, Rng(cfg.seed).fork("sharing").raw());
        for (const std::string& album : feed.albums) {
            std::vector<std::int64_t> sharing;
            std::vector<int> chart;
            for (const auto& week : feed.sharing) sharing.push_back(week.at(album));
            for (const auto& week : feed.positions) chart.push_back(week.at(album));
            try {
                const double c =
                    ana::sharing_chart_concordance(sharing, chart, cfg.analyze.concordance_lag);
                concordance_out.push_back(
                    json{{"album", album},
                         {"weeks", static_cast<int>(sharing.size()) - 1 - cfg.analyze.concordance_lag},
                         {"lag", cfg.analyze.concordance_lag},
                         {"concordance", c}});
            } catch (const DataError&) {
                // No informative week pairs for this album; nothing to row.
            }
        }
    }

    write_jsonl(layout.analysis_file("features"), features_out);
    write_jsonl(layout.analysis_file("taxonomy"), taxonomy_out);
    write_jsonl(layout.analysis_file("dispersion"), dispersion_out);
    write_jsonl(layout.analysis_file("corpus"), corpus_out);
    // Category tallies ride along so reporting reads analysis output only.
    write_jsonl(layout.analysis_file("tallies"), read_jsonl(layout.clean_file("tallies")));
    write_jsonl(layout.analysis_file("concordance"), concordance_out);
    out.records_out = analysis_total(layout);
    return out;
}

// ---------------------------------------------------------------------------
// Stage: report

StageOutcome stage_report(const WorkbenchConfig& cfg, const StoreLayout& layout) {
    layout.ensure();
    StageOutcome out{"report", analysis_total(layout), 0, 0};
    if (out.records_in == 0) return out;  // nothing analyzed, nothing to render

    std::vector<pipe::CategoryTally> tallies;
    for (const json& j : read_jsonl(layout.analysis_file("tallies"))) tallies.push_back(tally_from(j));

    std::vector<ana::TaxonomySummaryRow> taxonomy;
    for (const json& j : read_jsonl(layout.analysis_file("taxonomy"))) {
        ana::TaxonomySummaryRow row;
        row.cluster_id = j.at("cluster").get<int>();
        row.label = behavior_from(j.at("label").get<std::string>());
        row.members = j.at("members").get<int>();
        row.entry_norm = j.at("entry_norm").get<double>();
        row.exit_norm = j.at("exit_norm").get<double>();
        row.bid_count = j.at("bid_count").get<double>();
        taxonomy.push_back(row);
    }

    std::vector<ana::DispersionReport> dispersion;
    for (const json& j : read_jsonl(layout.analysis_file("dispersion"))) {
        ana::DispersionReport r;
        r.product_id = j.at("product_id").get<std::string>();
        r.n_quotes = j.at("n_quotes").get<int>();
        r.min = j.at("min_cents").get<Money>();
        r.max = j.at("max_cents").get<Money>();
        r.range = j.at("range_cents").get<Money>();
        r.range_pct = j.at("range_pct").get<double>();
        r.cv = j.at("cv").get<double>();
        dispersion.push_back(r);
    }

    std::vector<ana::ConcordanceRow> concordance;
    for (const json& j : read_jsonl(layout.analysis_file("concordance")))
        concordance.push_back({j.at("album").get<std::string>(), j.at("weeks").get<int>(),
                               j.at("lag").get<int>(), j.at("concordance").get<double>()});

    std::vector<ana::FeatureVector> scatter_features;
    std::vector<int> scatter_assignment;
    for (const json& j : read_jsonl(layout.analysis_file("features"))) {
        const int cluster = j.at("cluster").get<int>();
        if (cluster < 0) continue;
        scatter_features.push_back({j.at("bidder_id").get<std::string>(),
                                    j.at("entry_norm").get<double>(),
                                    j.at("exit_norm").get<double>(), j.at("bid_count").get<int>()});
        scatter_assignment.push_back(cluster);
    }

    for (ana::ReportKind kind :
         {ana::ReportKind::Table4Tally, ana::ReportKind::TaxonomySummary,
          ana::ReportKind::DispersionTable, ana::ReportKind::ConcordanceTable}) {
        ana::ReportRequest request;
        request.kind = kind;
        request.with_plots = cfg.report_plots;
        switch (kind) {
            case ana::ReportKind::Table4Tally: request.tallies = tallies; break;
            case ana::ReportKind::TaxonomySummary:
                request.taxonomy = taxonomy;
                request.scatter_features = scatter_features;
                request.scatter_assignment = scatter_assignment;
                break;
            case ana::ReportKind::DispersionTable: request.dispersion = dispersion; break;
            case ana::ReportKind::ConcordanceTable: request.concordance = concordance; break;
        }
        out.records_out +=
            static_cast<std::int64_t>(ana::emit_report(request, layout.reports_dir()).size());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whole runs

RunManifest run_pipeline(const WorkbenchConfig& cfg) {
    validate_config(cfg);
    const StoreLayout layout{cfg.out};
    layout.ensure();

    static std::atomic<std::uint64_t> run_counter{0};
    RunManifest manifest;
    manifest.config_digest = config_digest(cfg);
    manifest.seed = cfg.seed;
    manifest.provenance.source_kind = market::SourceKind::Simulation;
    manifest.provenance.collected_at = static_cast<Timestamp>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    manifest.provenance.collector = "marketbench";
    manifest.run_id =
        hex64(fnv1a64(manifest.config_digest + "|" + std::to_string(cfg.seed) + "|" +
                      wall_clock_token() + "|" + std::to_string(run_counter.fetch_add(1))));

    manifest.stages.push_back(stage_harvest(cfg, layout));
    manifest.stages.push_back(stage_extract(cfg, layout));
    manifest.stages.push_back(stage_cleanse(cfg, layout));
    manifest.stages.push_back(stage_collate(cfg, layout));
    manifest.stages.push_back(stage_analyze(cfg, layout));
    manifest.stages.push_back(stage_report(cfg, layout));
    write_manifest(manifest, layout);
    return manifest;
}

// ---------------------------------------------------------------------------
// Query

namespace {

struct Clause {
    std::string field;
    std::string op;
    std::string value;
    bool numeric = false;
    double number = 0.0;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<Clause> parse_predicate(const std::string& predicate) {
    std::vector<Clause> clauses;
    std::size_t pos = 0;
    const std::string text = trim(predicate);
    if (text.empty()) return clauses;
    while (pos <= text.size()) {
        std::size_t next = text.find("&&", pos);
        const std::string part =
            trim(next == std::string::npos ? text.substr(pos) : text.substr(pos, next - pos));
        if (part.empty()) throw ConfigError("empty clause in predicate: " + predicate);
        static const char* const kOps[] = {"<=", ">=", "==", "!=", "<", ">"};
        Clause clause;
        std::size_t at = std::string::npos;
        for (const char* op : kOps) {
            at = part.find(op);
            if (at != std::string::npos) {
                clause.op = op;
                break;
            }
        }
        if (at == std::string::npos)
            throw ConfigError("clause needs one of == != < <= > >=: " + part);
        clause.field = trim(part.substr(0, at));
        clause.value = trim(part.substr(at + clause.op.size()));
        if (clause.value.size() >= 2 && clause.value.front() == '"' && clause.value.back() == '"')
            clause.value = clause.value.substr(1, clause.value.size() - 2);
        else {
            char* endp = nullptr;
            const double parsed = std::strtod(clause.value.c_str(), &endp);
            if (endp && *endp == '\0' && endp != clause.value.c_str()) {
                clause.numeric = true;
                clause.number = parsed;
            }
        }
        if (clause.field.empty() || clause.value.empty())
            throw ConfigError("clause needs a field and a value: " + part);
        clauses.push_back(std::move(clause));
        if (next == std::string::npos) break;
        pos = next + 2;
    }
    return clauses;
}

bool compare(const std::string& op, int cmp) {
    if (op == "==") return cmp == 0;
    if (op == "!=") return cmp != 0;
    if (op == "<") return cmp < 0;
    if (op == "<=") return cmp <= 0;
    if (op == ">") return cmp > 0;
    return cmp >= 0;
}

bool clause_matches(const Clause& clause, const json& record) {
    const json& v = record.at(clause.field);
    if (clause.numeric && v.is_number()) {
        const double lhs = v.get<double>();
        const double rhs = clause.number;
        const int cmp = lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
        return compare(clause.op, cmp);
    }
    if (v.is_boolean())
        return compare(clause.op, int((v.get<bool>() ? "true" : "false") == clause.value ? 0 : 1));
    const std::string lhs = v.is_string() ? v.get<std::string>() : v.dump();
    return compare(clause.op, lhs.compare(clause.value));
}

}  // namespace

std::vector<std::string> query_records(const std::filesystem::path& file,
                                       const std::string& predicate) {
    const std::vector<Clause> clauses = parse_predicate(predicate);
    std::vector<bool> field_seen(clauses.size(), false);

    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read record file " + file.string());
    std::vector<std::string> matches;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("corrupt record in " + file.string() + ": " + e.what());
        }
        bool all = true;
        for (std::size_t i = 0; i < clauses.size(); ++i) {
            if (!record.contains(clauses[i].field)) {
                all = false;
                continue;
            }
            field_seen[i] = true;
            if (!clause_matches(clauses[i], record)) all = false;
        }
        if (all) matches.push_back(line);
    }
    for (std::size_t i = 0; i < clauses.size(); ++i)
        if (!field_seen[i])
            throw DataError("unknown field in predicate: " + clauses[i].field);
    return matches;
}

}  // namespace marketbench::wb
