#include "marketbench/extractor.hpp"

#include <algorithm>
#include <cctype>

namespace marketbench::extract {

std::string to_string(RecordKind k) {
    switch (k) {
        case RecordKind::AuctionPage: return "AuctionPage";
        case RecordKind::SearchResults: return "SearchResults";
        case RecordKind::QuotePage: return "QuotePage";
    }
    return "AuctionPage";
}

std::optional<RecordKind> record_kind_from_string(std::string_view s) {
    if (s == "AuctionPage") return RecordKind::AuctionPage;
    if (s == "SearchResults") return RecordKind::SearchResults;
    if (s == "QuotePage") return RecordKind::QuotePage;
    return std::nullopt;
}

std::string to_string(ChannelClass c) {
    switch (c) {
        case ChannelClass::PurePlay: return "PurePlay";
        case ChannelClass::LocalBrickNClick: return "LocalBrickNClick";
        case ChannelClass::NationalBrickNClick: return "NationalBrickNClick";
    }
    return "PurePlay";
}

std::optional<ChannelClass> channel_from_string(std::string_view s) {
    if (s == "PurePlay") return ChannelClass::PurePlay;
    if (s == "LocalBrickNClick") return ChannelClass::LocalBrickNClick;
    if (s == "NationalBrickNClick") return ChannelClass::NationalBrickNClick;
    return std::nullopt;
}

const AnchorRule* ExtractionRuleSet::find(const std::string& field) const {
    for (const auto& [name, rule] : field_rules)
        if (name == field) return &rule;
    return nullptr;
}

std::set<std::string> AuctionSnapshot::winner_ids() const {
    std::set<std::string> out;
    for (const auto& w : winners) out.insert(w.bidder_id);
    return out;
}

namespace {

[[noreturn]] void compile_fail(int line, const std::string& msg) {
    throw ConfigError("rule file line " + std::to_string(line) + ": " + msg);
}

bool valid_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

// Consumes a double-quoted string starting at pos; supports \" and \\.
std::optional<std::string> take_quoted(std::string_view s, std::size_t& pos, int line) {
    if (pos >= s.size() || s[pos] != '"') return std::nullopt;
    std::string out;
    ++pos;
    while (pos < s.size()) {
        char c = s[pos];
        if (c == '\\') {
            if (pos + 1 >= s.size()) compile_fail(line, "dangling escape in anchor");
            char e = s[pos + 1];
            if (e != '"' && e != '\\') compile_fail(line, "unsupported escape in anchor");
            out.push_back(e);
            pos += 2;
            continue;
        }
        if (c == '"') {
            ++pos;
            return out;
        }
        out.push_back(c);
        ++pos;
    }
    compile_fail(line, "unterminated anchor string");
}

void skip_ws(std::string_view s, std::size_t& pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

}  // namespace

ExtractionRuleSet compile_rules(const std::string& text) {
    ExtractionRuleSet rs;
    bool kind_seen = false;
    std::vector<std::string> required_decl;

    std::vector<std::string> lines = split(text, '\n');
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int line = static_cast<int>(li) + 1;
        std::string raw = trim(lines[li]);
        if (raw.empty() || raw[0] == '#') continue;

        if (raw[0] == '@') {
            std::vector<std::string> parts;
            for (const auto& p : split(raw, ' '))
                if (!trim(p).empty()) parts.push_back(trim(p));
            if (parts[0] == "@name") {
                if (parts.size() < 2) compile_fail(line, "@name needs a value");
                rs.name = raw.substr(raw.find(parts[1]));
            } else if (parts[0] == "@kind") {
                if (parts.size() != 2) compile_fail(line, "@kind needs exactly one value");
                auto k = record_kind_from_string(parts[1]);
                if (!k) compile_fail(line, "unknown record kind '" + parts[1] + "'");
                rs.kind = *k;
                kind_seen = true;
            } else if (parts[0] == "@require") {
                if (parts.size() < 2) compile_fail(line, "@require needs field names");
                for (std::size_t i = 1; i < parts.size(); ++i) required_decl.push_back(parts[i]);
            } else {
                compile_fail(line, "unknown directive '" + parts[0] + "'");
            }
            continue;
        }

        std::size_t assign = raw.find(":=");
        if (assign == std::string::npos) compile_fail(line, "expected 'field := ...'");
        std::string lhs = trim(raw.substr(0, assign));

        std::string parent, field;
        std::size_t dot = lhs.find('.');
        if (dot != std::string::npos) {
            parent = lhs.substr(0, dot);
            field = lhs.substr(dot + 1);
            if (field.find('.') != std::string::npos)
                compile_fail(line, "only one level of sub-rules is supported");
        } else {
            field = lhs;
        }
        if (!valid_identifier(field) || (!parent.empty() && !valid_identifier(parent)))
            compile_fail(line, "bad field name '" + lhs + "'");

        std::string rhs = raw.substr(assign + 2);
        std::size_t pos = 0;
        skip_ws(rhs, pos);
        auto prefix = take_quoted(rhs, pos, line);
        if (!prefix) compile_fail(line, "expected quoted prefix anchor");
        skip_ws(rhs, pos);
        if (rhs.compare(pos, 3, "...") != 0)
            compile_fail(line, "expected '...' between anchors");
        pos += 3;
        skip_ws(rhs, pos);
        auto suffix = take_quoted(rhs, pos, line);
        if (!suffix) compile_fail(line, "expected quoted suffix anchor");
        skip_ws(rhs, pos);

        AnchorRule rule;
        rule.prefix = *prefix;
        rule.suffix = *suffix;
        if (rhs.compare(pos, 6, "repeat") == 0) {
            rule.repeat = true;
            pos += 6;
            skip_ws(rhs, pos);
        }
        if (pos < rhs.size() && rhs[pos] != '#')
            compile_fail(line, "unexpected trailing text '" + trim(rhs.substr(pos)) + "'");
        if (rule.prefix.empty() || rule.suffix.empty())
            compile_fail(line, "anchors must be nonempty");

        if (parent.empty()) {
            for (const auto& [name, existing] : rs.field_rules) {
                if (name == field) compile_fail(line, "duplicate rule for '" + field + "'");
                if (existing.prefix == rule.prefix)
                    compile_fail(line, "duplicate prefix anchor shared with '" + name + "'");
            }
            if (rule.repeat) {
                // repeated blocks are scanned, so a sub-rule layout is expected
            }
            rs.field_rules.emplace_back(field, std::move(rule));
        } else {
            if (rule.repeat) compile_fail(line, "sub-rules cannot repeat");
            bool attached = false;
            for (auto& [name, parent_rule] : rs.field_rules) {
                if (name != parent) continue;
                if (!parent_rule.repeat)
                    compile_fail(line, "'" + parent + "' is not a repeated rule");
                for (const auto& [sub, existing] : parent_rule.subrules) {
                    if (sub == field)
                        compile_fail(line, "duplicate sub-rule '" + lhs + "'");
                    if (existing.prefix == rule.prefix)
                        compile_fail(line, "duplicate prefix anchor shared with '" + parent +
                                               "." + sub + "'");
                }
                parent_rule.subrules.emplace_back(field, std::move(rule));
                attached = true;
                break;
            }
            if (!attached)
                compile_fail(line, "sub-rule before its parent '" + parent + "'");
        }
    }

    if (!kind_seen) throw ConfigError("rule file: missing @kind directive");
    for (const auto& f : required_decl) {
        const AnchorRule* rule = rs.find(f);
        if (!rule) throw ConfigError("rule file: required field '" + f + "' has no rule");
        if (rule->repeat)
            throw ConfigError("rule file: required field '" + f +
                              "' is repeated; repeated fields may be empty");
        rs.required_fields.insert(f);
    }
    return rs;
}

namespace {

struct ScalarScan {
    std::optional<std::string> value;
    std::string missing;  // which anchor was absent, when one was
};

ScalarScan scan_scalar(std::string_view doc, const std::string& field, const AnchorRule& rule) {
    std::size_t p = doc.find(rule.prefix);
    if (p == std::string_view::npos) return {std::nullopt, field + ".prefix"};
    std::size_t start = p + rule.prefix.size();
    std::size_t q = doc.find(rule.suffix, start);
    if (q == std::string_view::npos) return {std::nullopt, field + ".suffix"};
    return {std::string(doc.substr(start, q - start)), ""};
}

}  // namespace

std::variant<RawRecord, Malformed> apply_rules(std::string_view doc,
                                               const ExtractionRuleSet& rules) {
    RawRecord out;
    for (const auto& [field, rule] : rules.field_rules) {
        if (!rule.repeat) {
            ScalarScan scan = scan_scalar(doc, field, rule);
            if (!scan.value) {
                if (rules.required_fields.count(field))
                    return Malformed{"missing anchor " + scan.missing, scan.missing};
                continue;
            }
            out.scalars[field] = std::move(*scan.value);
            continue;
        }

        std::vector<std::map<std::string, std::string>> rows;
        std::size_t cursor = 0;
        while (true) {
            std::size_t p = doc.find(rule.prefix, cursor);
            if (p == std::string_view::npos) break;
            std::size_t start = p + rule.prefix.size();
            std::size_t q = doc.find(rule.suffix, start);
            if (q == std::string_view::npos)
                return Malformed{"unterminated block for " + field, field + ".suffix"};
            std::string_view block = doc.substr(start, q - start);
            std::map<std::string, std::string> row;
            for (const auto& [sub, subrule] : rule.subrules) {
                ScalarScan scan = scan_scalar(block, field + "." + sub, subrule);
                if (!scan.value)
                    return Malformed{"missing anchor " + scan.missing, scan.missing};
                row[sub] = std::move(*scan.value);
            }
            rows.push_back(std::move(row));
            cursor = q + rule.suffix.size();
        }
        out.rows[field] = std::move(rows);
    }
    return out;
}

namespace {

// Shared coercion helpers. Each returns nullopt on failure; callers turn that
// into a Malformed verdict naming the field.
std::optional<std::int64_t> to_int(const std::string& s) {
    std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    std::size_t i = (t[0] == '-') ? 1 : 0;
    if (i == t.size()) return std::nullopt;
    std::int64_t v = 0;
    for (; i < t.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
        if (v > 922337203685477580LL) return std::nullopt;
        v = v * 10 + (t[i] - '0');
    }
    return t[0] == '-' ? -v : v;
}

std::optional<bool> to_bool(const std::string& s) {
    std::string t = trim(s);
    if (t == "yes") return true;
    if (t == "no") return false;
    return std::nullopt;
}

struct FieldReader {
    const RawRecord& rec;
    std::optional<Malformed> error;

    const std::string* raw(const std::string& field) {
        auto it = rec.scalars.find(field);
        return it == rec.scalars.end() ? nullptr : &it->second;
    }

    void fail(const std::string& field, const std::string& why) {
        if (!error) error = Malformed{"field " + field + ": " + why, ""};
    }

    std::string str(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            fail(field, "missing");
            return "";
        }
        return *v;
    }

    std::int64_t integer(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            fail(field, "missing");
            return 0;
        }
        auto n = to_int(*v);
        if (!n) {
            fail(field, "not a number: '" + *v + "'");
            return 0;
        }
        return *n;
    }

    Money money(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            fail(field, "missing");
            return 0;
        }
        auto m = parse_money(*v);
        if (!m) {
            fail(field, "not a money amount: '" + *v + "'");
            return 0;
        }
        return *m;
    }

    bool boolean(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            fail(field, "missing");
            return false;
        }
        auto b = to_bool(*v);
        if (!b) {
            fail(field, "not yes/no: '" + *v + "'");
            return false;
        }
        return *b;
    }

    std::optional<Timestamp> opt_time(const std::string& field) {
        const std::string* v = raw(field);
        if (!v || trim(*v) == "-") return std::nullopt;
        auto t = parse_timestamp(trim(*v));
        if (!t) fail(field, "not a timestamp: '" + *v + "'");
        return t;
    }

    std::optional<Money> opt_money(const std::string& field) {
        const std::string* v = raw(field);
        if (!v || trim(*v) == "-") return std::nullopt;
        auto m = parse_money(*v);
        if (!m) fail(field, "not a money amount: '" + *v + "'");
        return m;
    }
};

// Row-scoped variant of FieldReader for repeated blocks.
struct RowReader {
    const std::map<std::string, std::string>& row;
    const std::string& block;
    FieldReader& top;

    const std::string* raw(const std::string& field) {
        auto it = row.find(field);
        return it == row.end() ? nullptr : &it->second;
    }

    std::string str(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            top.fail(block + "." + field, "missing");
            return "";
        }
        return *v;
    }

    std::int64_t integer(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            top.fail(block + "." + field, "missing");
            return 0;
        }
        auto n = to_int(*v);
        if (!n) {
            top.fail(block + "." + field, "not a number: '" + *v + "'");
            return 0;
        }
        return *n;
    }

    Money money(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            top.fail(block + "." + field, "missing");
            return 0;
        }
        auto m = parse_money(*v);
        if (!m) {
            top.fail(block + "." + field, "not a money amount: '" + *v + "'");
            return 0;
        }
        return *m;
    }

    bool boolean(const std::string& field) {
        const std::string* v = raw(field);
        if (!v) {
            top.fail(block + "." + field, "missing");
            return false;
        }
        auto b = to_bool(*v);
        if (!b) {
            top.fail(block + "." + field, "not yes/no: '" + *v + "'");
            return false;
        }
        return *b;
    }
};

}  // namespace

AuctionOutcome extract_auction(const harvest::RawDocument& doc, const ExtractionRuleSet& rules) {
    if (rules.kind != RecordKind::AuctionPage)
        throw ConfigError("extract_auction needs AuctionPage rules");
    auto raw = apply_rules(doc.bytes, rules);
    if (std::holds_alternative<Malformed>(raw)) return std::get<Malformed>(raw);
    const RawRecord& rec = std::get<RawRecord>(raw);

    FieldReader r{rec, std::nullopt};
    AuctionSnapshot snap;
    snap.capture_time = doc.capture_time;
    snap.auction_id = r.str("auction_id");
    snap.product.title = r.str("product_title");
    if (const std::string* v = r.raw("product_category")) snap.product.category = *v;
    if (const std::string* v = r.raw("product_condition")) {
        auto c = market::condition_from_string(trim(*v));
        if (!c) r.fail("product_condition", "unknown condition '" + *v + "'");
        else snap.product.condition = *c;
    }
    if (const std::string* v = r.raw("product_life_cycle")) snap.product.life_cycle = *v;
    snap.lot_size = static_cast<int>(r.integer("lot_size"));
    snap.min_required_bid = r.money("min_required_bid");
    snap.starting_bid = r.opt_money("starting_bid");
    snap.bid_increment = r.opt_money("bid_increment");
    snap.listed_open = r.opt_time("scheduled_open");
    snap.listed_close = r.opt_time("scheduled_close");
    std::string status = trim(r.str("status"));
    if (status == "closed") snap.closed = true;
    else if (status != "open") r.fail("status", "unknown status '" + status + "'");
    snap.ended_at = r.opt_time("ended_at");

    auto rows_it = rec.rows.find("winners");
    if (rows_it != rec.rows.end()) {
        for (const auto& row : rows_it->second) {
            RowReader rr{row, "winners", r};
            WinnerRow w;
            w.bidder_id = rr.str("bidder_id");
            w.price = rr.money("price");
            w.quantity = static_cast<int>(rr.integer("quantity"));
            if (!r.error && w.price <= 0) r.fail("winners.price", "non-positive price");
            if (!r.error && w.quantity < 1) r.fail("winners.quantity", "non-positive quantity");
            snap.winners.push_back(std::move(w));
        }
    }
    if (!r.error && snap.lot_size < 1) r.fail("lot_size", "must be at least 1");
    if (!r.error && snap.min_required_bid <= 0)
        r.fail("min_required_bid", "must be positive");

    if (r.error) return *r.error;
    return snap;
}

SearchOutcome extract_search(const harvest::RawDocument& doc, const ExtractionRuleSet& rules) {
    if (rules.kind != RecordKind::SearchResults)
        throw ConfigError("extract_search needs SearchResults rules");
    auto raw = apply_rules(doc.bytes, rules);
    if (std::holds_alternative<Malformed>(raw)) return std::get<Malformed>(raw);
    const RawRecord& rec = std::get<RawRecord>(raw);

    FieldReader r{rec, std::nullopt};
    std::string album = r.str("query_album");

    std::vector<SearchObservation> out;
    auto rows_it = rec.rows.find("results");
    if (rows_it != rec.rows.end()) {
        for (const auto& row : rows_it->second) {
            RowReader rr{row, "results", r};
            SearchObservation ob;
            ob.capture_time = doc.capture_time;
            ob.query_album = album;
            ob.sharer_id = rr.str("sharer_id");
            ob.file_title = rr.str("file_title");
            ob.album_match = rr.boolean("album_match");
            ob.file_size = rr.integer("file_size");
            ob.bitrate = static_cast<int>(rr.integer("bitrate"));
            ob.track_length = static_cast<int>(rr.integer("track_length"));
            ob.connection_class = rr.str("connection_class");
            if (!r.error && ob.file_size < 0) r.fail("results.file_size", "negative size");
            if (!r.error && ob.bitrate < 0) r.fail("results.bitrate", "negative bitrate");
            static const std::set<std::string> named = {
                "sharer_id", "file_title",   "album_match",     "file_size",
                "bitrate",   "track_length", "connection_class"};
            for (const auto& [k, v] : row)
                if (!named.count(k)) ob.extra[k] = v;
            out.push_back(std::move(ob));
        }
    }
    if (r.error) return *r.error;
    return out;
}

QuoteOutcome extract_quotes(const harvest::RawDocument& doc, const ExtractionRuleSet& rules) {
    if (rules.kind != RecordKind::QuotePage)
        throw ConfigError("extract_quotes needs QuotePage rules");
    auto raw = apply_rules(doc.bytes, rules);
    if (std::holds_alternative<Malformed>(raw)) return std::get<Malformed>(raw);
    const RawRecord& rec = std::get<RawRecord>(raw);

    FieldReader r{rec, std::nullopt};
    QuoteExtraction out;

    auto quote_rows = rec.rows.find("quotes");
    if (rec.scalars.count("product_id") || quote_rows != rec.rows.end()) {
        std::string product = r.str("product_id");
        std::string category = r.str("category");
        if (quote_rows != rec.rows.end()) {
            for (const auto& row : quote_rows->second) {
                RowReader rr{row, "quotes", r};
                PriceQuote q;
                q.product_id = product;
                q.category = category;
                q.capture_time = doc.capture_time;
                q.retailer_id = rr.str("retailer_id");
                q.posted_price = rr.money("posted_price");
                std::string cond = trim(rr.str("condition"));
                auto c = market::condition_from_string(cond);
                if (!c) r.fail("quotes.condition", "unknown condition '" + cond + "'");
                else q.condition = *c;
                if (!r.error && q.posted_price <= 0)
                    r.fail("quotes.posted_price", "non-positive price");
                out.quotes.push_back(std::move(q));
            }
        }
    }

    if (rec.scalars.count("retailer_id")) {
        RetailerProfile p;
        p.retailer_id = r.str("retailer_id");
        p.size_rank = static_cast<int>(r.integer("size_rank"));
        std::string states = trim(r.str("states"));
        if (states == "??") {
            p.states_unknown = true;
        } else if (!states.empty()) {
            for (const auto& s : split(states, ';'))
                if (!trim(s).empty()) p.store_states.push_back(trim(s));
            std::sort(p.store_states.begin(), p.store_states.end());
            p.store_states.erase(std::unique(p.store_states.begin(), p.store_states.end()),
                                 p.store_states.end());
        }
        p.catalog = r.boolean("catalog");
        p.refurb_discounter = r.boolean("refurb_discounter");

        auto rating_rows = rec.rows.find("ratings");
        if (rating_rows != rec.rows.end() && !rating_rows->second.empty()) {
            if (rating_rows->second.size() > 1)
                r.fail("ratings", "more than one ratings block");
            RowReader rr{rating_rows->second.front(), "ratings", r};
            RatingBlock b;
            b.on_time_delivery = static_cast<int>(rr.integer("on_time_delivery"));
            b.customer_support = static_cast<int>(rr.integer("customer_support"));
            b.product_met_expectations =
                static_cast<int>(rr.integer("product_met_expectations"));
            b.shop_again = static_cast<int>(rr.integer("shop_again"));
            p.survey_count = static_cast<int>(rr.integer("survey_count"));
            std::string w0 = trim(rr.str("window_start"));
            std::string w1 = trim(rr.str("window_end"));
            auto d0 = parse_date(w0);
            auto d1 = parse_date(w1);
            if (!d0) r.fail("ratings.window_start", "not a date: '" + w0 + "'");
            if (!d1) r.fail("ratings.window_end", "not a date: '" + w1 + "'");
            p.window_start = d0;
            p.window_end = d1;
            for (int v : {b.on_time_delivery, b.customer_support,
                          b.product_met_expectations, b.shop_again}) {
                if (v < 1 || v > 10) {
                    r.fail("ratings", "rating outside 1..10");
                    break;
                }
            }
            p.ratings = b;
        }
        out.profile = std::move(p);
    }

    if (!out.profile && out.quotes.empty() && !rec.scalars.count("product_id"))
        r.fail("product_id", "missing");

    if (r.error) return *r.error;
    return out;
}

const std::string& default_auction_rules() {
    static const std::string text = R"(# Yankee auction listing page
@name yankee_auction_v1
@kind AuctionPage
@require auction_id product_title lot_size min_required_bid status
auction_id := "<td class=\"aid\">" ... "</td>"
product_title := "<h1 class=\"pt\">" ... "</h1>"
product_category := "<span class=\"cat\">" ... "</span>"
product_condition := "<span class=\"cond\">" ... "</span>"
product_life_cycle := "<span class=\"lc\">" ... "</span>"
lot_size := "<td class=\"lot\">" ... "</td>"
min_required_bid := "<td class=\"mrb\">" ... "</td>"
bid_increment := "<td class=\"inc\">" ... "</td>"
starting_bid := "<td class=\"sbid\">" ... "</td>"
scheduled_open := "<td class=\"topen\">" ... "</td>"
scheduled_close := "<td class=\"tclose\">" ... "</td>"
status := "<td class=\"stat\">" ... "</td>"
ended_at := "<td class=\"tend\">" ... "</td>"
winners := "<tr class=\"win\">" ... "</tr>" repeat
winners.bidder_id := "<td class=\"wb\">" ... "</td>"
winners.price := "<td class=\"wp\">" ... "</td>"
winners.quantity := "<td class=\"wq\">" ... "</td>"
)";
    return text;
}

const std::string& default_search_rules() {
    static const std::string text = R"(# peer-to-peer search results page
@name p2p_search_v1
@kind SearchResults
@require query_album
query_album := "<span class=\"qa\">" ... "</span>"
results := "<tr class=\"row\">" ... "</tr>" repeat
results.sharer_id := "<td class=\"u\">" ... "</td>"
results.file_title := "<td class=\"f\">" ... "</td>"
results.album_match := "<td class=\"am\">" ... "</td>"
results.file_size := "<td class=\"sz\">" ... "</td>"
results.bitrate := "<td class=\"br\">" ... "</td>"
results.track_length := "<td class=\"ln\">" ... "</td>"
results.connection_class := "<td class=\"cc\">" ... "</td>"
results.ping_ms := "<td class=\"pg\">" ... "</td>"
)";
    return text;
}

const std::string& default_quote_rules() {
    static const std::string text = R"(# product offer listing page
@name quote_page_v1
@kind QuotePage
@require product_id category
product_id := "<span class=\"pid\">" ... "</span>"
category := "<span class=\"pcat\">" ... "</span>"
quotes := "<tr class=\"q\">" ... "</tr>" repeat
quotes.retailer_id := "<td class=\"qr\">" ... "</td>"
quotes.posted_price := "<td class=\"qp\">" ... "</td>"
quotes.condition := "<td class=\"qc\">" ... "</td>"
)";
    return text;
}

const std::string& default_retailer_rules() {
    static const std::string text = R"(# retailer directory page
@name retailer_page_v1
@kind QuotePage
@require retailer_id size_rank states catalog refurb_discounter
retailer_id := "<span class=\"rid\">" ... "</span>"
size_rank := "<span class=\"rk\">" ... "</span>"
states := "<span class=\"st\">" ... "</span>"
catalog := "<span class=\"cf\">" ... "</span>"
refurb_discounter := "<span class=\"rd\">" ... "</span>"
ratings := "<div class=\"ratings\">" ... "</div>" repeat
ratings.on_time_delivery := "<span class=\"r1\">" ... "</span>"
ratings.customer_support := "<span class=\"r2\">" ... "</span>"
ratings.product_met_expectations := "<span class=\"r3\">" ... "</span>"
ratings.shop_again := "<span class=\"r4\">" ... "</span>"
ratings.survey_count := "<span class=\"sc\">" ... "</span>"
ratings.window_start := "<span class=\"w0\">" ... "</span>"
ratings.window_end := "<span class=\"w1\">" ... "</span>"
)";
    return text;
}

}  // namespace marketbench::extract
