#include "marketbench/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "marketbench/common.hpp"

namespace marketbench::ana {

namespace {

double dist2(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

int nearest_centroid(const std::vector<Point>& centroids, const Point& p) {
    int best = 0;
    double best_d = dist2(centroids[0], p);
    for (int c = 1; c < static_cast<int>(centroids.size()); ++c) {
        double d = dist2(centroids[c], p);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write report file " + path.string());
    out << body;
}

}  // namespace

FeatureVector bidder_features(const pipe::BidderProfile& profile, Timestamp open,
                              Timestamp end) {
    if (end <= open)
        throw DataError("auction " + profile.auction_id +
                        " has no duration to normalize against");
    if (profile.entry_time < open || profile.exit_time > end ||
        profile.entry_time > profile.exit_time)
        throw DataError("profile times for " + profile.bidder_id +
                        " fall outside auction " + profile.auction_id);
    const double span = static_cast<double>(end - open);
    FeatureVector f;
    f.bidder_id = profile.bidder_id;
    f.entry_norm = static_cast<double>(profile.entry_time - open) / span;
    f.exit_norm = static_cast<double>(profile.exit_time - open) / span;
    f.bid_count = profile.bid_count;
    return f;
}

Point scaled_point(const FeatureVector& f) {
    return {f.entry_norm, f.exit_norm, std::log2(1.0 + static_cast<double>(f.bid_count))};
}

std::vector<Point> scaled_features(const std::vector<FeatureVector>& features) {
    std::vector<Point> pts;
    pts.reserve(features.size());
    for (const auto& f : features) pts.push_back(scaled_point(f));
    return pts;
}

Clustering kmeans(const std::vector<Point>& points, int k, std::uint64_t seed,
                  double tol, int max_iter) {
    if (points.empty()) throw ConfigError("kmeans needs at least one point");
    if (k < 1) throw ConfigError("kmeans needs k >= 1");
    std::set<Point> distinct(points.begin(), points.end());
    if (static_cast<std::size_t>(k) > distinct.size())
        throw DataError("k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(distinct.size()) + " distinct points");

    Clustering out;
    out.k = k;
    out.seed = seed;

    // Spread seeding: seeded first pick, then greedily the point farthest
    // from every centroid chosen so far. Deterministic given the seed.
    Rng rng(seed);
    out.centroids.push_back(points[rng.below(points.size())]);
    while (out.centroids.size() < static_cast<std::size_t>(k)) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& c : out.centroids) d = std::min(d, dist2(c, points[i]));
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        out.centroids.push_back(points[best]);
    }

    out.assignment.assign(points.size(), 0);
    double prev_sse = std::numeric_limits<double>::infinity();
    auto assign_pass = [&]() {
        double sse = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            int c = nearest_centroid(out.centroids, points[i]);
            out.assignment[i] = c;
            sse += dist2(out.centroids[c], points[i]);
        }
        if (!(sse <= prev_sse + 1e-9))
            throw std::logic_error("kmeans objective increased between passes");
        out.sse_history.push_back(sse);
        out.sse = prev_sse = sse;
    };

    for (int iter = 1; iter <= max_iter; ++iter) {
        assign_pass();
        out.iterations = iter;

        std::vector<Point> next(k, Point{0.0, 0.0, 0.0});
        std::vector<int> members(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t d = 0; d < points[i].size(); ++d)
                next[out.assignment[i]][d] += points[i][d];
            members[out.assignment[i]] += 1;
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (members[c] == 0) {
                // revive an empty cluster at the globally worst-fit point
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    double d = dist2(out.centroids[out.assignment[i]], points[i]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                next[c] = points[far];
            } else {
                for (std::size_t d = 0; d < next[c].size(); ++d)
                    next[c][d] /= static_cast<double>(members[c]);
            }
            shift = std::max(shift, std::sqrt(dist2(next[c], out.centroids[c])));
        }
        out.centroids = std::move(next);
        if (shift < tol) break;
    }
    // final pass so the reported assignment is a fixed point of the centroids
    assign_pass();
    return out;
}

double mean_silhouette(const std::vector<Point>& points,
                       const std::vector<int>& assignment, int k) {
    const std::size_t n = points.size();
    if (n == 0 || assignment.size() != n)
        throw ConfigError("silhouette needs one assignment per point");
    std::vector<std::size_t> size(k, 0);
    for (int a : assignment) {
        if (a < 0 || a >= k) throw ConfigError("assignment outside [0, k)");
        size[a] += 1;
    }
    double total = 0.0;
    std::vector<double> sum_d(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (size[assignment[i]] <= 1) continue;  // singleton scores zero
        std::fill(sum_d.begin(), sum_d.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum_d[assignment[j]] += std::sqrt(dist2(points[i], points[j]));
        }
        double a = sum_d[assignment[i]] / static_cast<double>(size[assignment[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == assignment[i] || size[c] == 0) continue;
            b = std::min(b, sum_d[c] / static_cast<double>(size[c]));
        }
        double denom = std::max(a, b);
        if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

KChoice choose_k(const std::vector<Point>& points, int k_lo, int k_hi,
                 std::uint64_t seed) {
    const std::size_t n = points.size();
    if (k_lo < 2 || k_hi < k_lo || n < 3 ||
        static_cast<std::size_t>(k_hi) > n - 1)
        throw ConfigError("choose_k range must lie within [2, n-1]");
    KChoice best{0, -2.0};
    for (int k = k_lo; k <= k_hi; ++k) {
        auto clustering = kmeans(points, k, seed);
        double score = mean_silhouette(points, clustering.assignment, k);
        if (score > best.score) best = {k, score};  // ties keep the smaller k
    }
    return best;
}

std::string to_string(Behavior b) {
    switch (b) {
        case Behavior::EarlyMultiple: return "EarlyMultiple";
        case Behavior::EarlySingle: return "EarlySingle";
        case Behavior::LateArriver: return "LateArriver";
        case Behavior::Other: return "Other";
    }
    return "Other";
}

std::vector<TaxonomySummaryRow> summarize_taxonomy(
    const Clustering& clustering, const std::vector<FeatureVector>& features,
    const LabelThresholds& thresholds) {
    if (features.size() != clustering.assignment.size())
        throw DataError("taxonomy needs one feature vector per clustered point");
    std::vector<TaxonomySummaryRow> rows(clustering.k);
    for (std::size_t i = 0; i < features.size(); ++i) {
        auto& r = rows[clustering.assignment[i]];
        r.members += 1;
        r.entry_norm += features[i].entry_norm;
        r.exit_norm += features[i].exit_norm;
        r.bid_count += static_cast<double>(features[i].bid_count);
    }
    for (int c = 0; c < clustering.k; ++c) {
        auto& r = rows[c];
        r.cluster_id = c;
        if (r.members == 0) {
            r.label = Behavior::Other;
            continue;
        }
        r.entry_norm /= r.members;
        r.exit_norm /= r.members;
        r.bid_count /= r.members;
        if (r.entry_norm <= thresholds.early_entry_ceiling)
            r.label = r.bid_count > thresholds.multiple_bid_floor
                          ? Behavior::EarlyMultiple
                          : Behavior::EarlySingle;
        else if (r.entry_norm > thresholds.late_entry_floor)
            r.label = Behavior::LateArriver;
        else
            r.label = Behavior::Other;
    }
    return rows;
}

std::vector<TaxonomyLabel> label_clusters(const Clustering& clustering,
                                          const std::vector<FeatureVector>& features,
                                          const LabelThresholds& thresholds) {
    std::vector<TaxonomyLabel> labels;
    for (const auto& row : summarize_taxonomy(clustering, features, thresholds))
        labels.push_back({row.cluster_id, row.label});
    return labels;
}

DispersionReport dispersion_metrics(const std::string& product_id,
                                    const std::vector<Money>& prices) {
    if (prices.size() < 2)
        throw DataError("product " + product_id +
                        " has fewer than two quotes; dispersion undefined");
    DispersionReport r;
    r.product_id = product_id;
    r.n_quotes = static_cast<int>(prices.size());
    Money sum = 0;
    r.min = r.max = prices.front();
    for (Money p : prices) {
        if (p <= 0) throw DataError("non-positive quote for product " + product_id);
        r.min = std::min(r.min, p);
        r.max = std::max(r.max, p);
        sum += p;
    }
    r.range = r.max - r.min;
    r.range_pct = static_cast<double>(r.range) / static_cast<double>(r.min);
    const double mean = static_cast<double>(sum) / static_cast<double>(prices.size());
    double var = 0.0;
    for (Money p : prices) {
        double d = static_cast<double>(p) - mean;
        var += d * d;
    }
    var /= static_cast<double>(prices.size());
    r.cv = std::sqrt(var) / mean;
    return r;
}

CorpusSummary corpus_summary(const std::vector<extract::SearchObservation>& rows) {
    std::set<std::string> sharers;
    for (const auto& row : rows) sharers.insert(row.sharer_id);
    if (sharers.empty()) throw DataError("corpus has no sharers; ratio undefined");
    CorpusSummary s;
    s.users = static_cast<std::int64_t>(sharers.size());
    s.files = static_cast<std::int64_t>(rows.size());
    s.files_per_user = static_cast<double>(s.files) / static_cast<double>(s.users);
    return s;
}

double sharing_chart_concordance(const std::vector<std::int64_t>& sharing,
                                 const std::vector<int>& chart_positions,
                                 int lag) {
    if (lag < 0) throw ConfigError("concordance lag must be non-negative");
    int pairs = 0;
    int agree = 0;
    int disagree = 0;
    for (std::size_t w = 0; w + 1 < sharing.size(); ++w) {
        const std::size_t v = w + static_cast<std::size_t>(lag);
        if (v + 1 >= chart_positions.size()) break;
        ++pairs;
        const std::int64_t ds = sharing[w + 1] - sharing[w];
        const int dc = chart_positions[v + 1] - chart_positions[v];
        if (ds == 0 || dc == 0) continue;  // flat weeks carry no sign
        const bool sharing_up = ds > 0;
        const bool chart_improved = dc < 0;  // smaller position is better
        if (sharing_up == chart_improved)
            ++agree;
        else
            ++disagree;
    }
    if (pairs < 2)
        throw DataError("fewer than two comparable weeks after lag alignment");
    const int informative = agree + disagree;
    if (informative == 0) return 0.0;
    return static_cast<double>(agree - disagree) / static_cast<double>(informative);
}

std::string to_string(ReportKind k) {
    switch (k) {
        case ReportKind::Table4Tally: return "table4_tally";
        case ReportKind::TaxonomySummary: return "taxonomy_summary";
        case ReportKind::DispersionTable: return "dispersion_table";
        case ReportKind::ConcordanceTable: return "concordance_table";
    }
    return "report";
}

namespace {

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                          "#59a14f", "#edc949", "#b07aa1", "#ff9da7"};

std::filesystem::path write_scatter_plot(const ReportRequest& req,
                                         const std::filesystem::path& out_dir) {
    if (req.scatter_assignment.size() != req.scatter_features.size())
        throw DataError("scatter plot needs one cluster id per feature vector");
    const int w = 640, h = 640, m = 60;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
      << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
      << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
      << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m
      << "\" y2=\"" << h - m << "\" stroke=\"#444\"/>\n"
      << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\""
      << h - m << "\" stroke=\"#444\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"" << h - m / 3
      << "\" text-anchor=\"middle\" font-size=\"14\">entry (fraction of auction)</text>\n"
      << "<text x=\"" << m / 3 << "\" y=\"" << h / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 " << m / 3
      << " " << h / 2 << ")\">exit (fraction of auction)</text>\n";
    for (std::size_t i = 0; i < req.scatter_features.size(); ++i) {
        const auto& f = req.scatter_features[i];
        const double cx = m + f.entry_norm * (w - 2 * m);
        const double cy = (h - m) - f.exit_norm * (h - 2 * m);
        const char* fill =
            kPalette[static_cast<std::size_t>(req.scatter_assignment[i]) %
                     (sizeof kPalette / sizeof kPalette[0])];
        s << "<circle cx=\"" << fmt6(cx) << "\" cy=\"" << fmt6(cy)
          << "\" r=\"4\" fill=\"" << fill << "\" fill-opacity=\"0.75\"/>\n";
    }
    s << "</svg>\n";
    auto path = out_dir / "taxonomy_scatter.svg";
    write_text(path, s.str());
    return path;
}

std::filesystem::path write_dispersion_histogram(const ReportRequest& req,
                                                 const std::filesystem::path& out_dir) {
    const int bins = 10;
    double peak = 0.0;
    for (const auto& d : req.dispersion) peak = std::max(peak, d.range_pct);
    if (peak <= 0.0) peak = 1.0;
    std::vector<int> count(bins, 0);
    for (const auto& d : req.dispersion) {
        int b = std::min(bins - 1, static_cast<int>(d.range_pct / peak * bins));
        count[b] += 1;
    }
    int tallest = *std::max_element(count.begin(), count.end());
    if (tallest == 0) tallest = 1;

    const int w = 640, h = 400, m = 60;
    const double bar_w = static_cast<double>(w - 2 * m) / bins;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
      << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
      << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
      << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m
      << "\" y2=\"" << h - m << "\" stroke=\"#444\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"" << h - m / 3
      << "\" text-anchor=\"middle\" font-size=\"14\">price range as a fraction of the minimum</text>\n";
    for (int b = 0; b < bins; ++b) {
        const double bh = static_cast<double>(count[b]) / tallest * (h - 2 * m);
        s << "<rect x=\"" << fmt6(m + b * bar_w + 1) << "\" y=\"" << fmt6(h - m - bh)
          << "\" width=\"" << fmt6(bar_w - 2) << "\" height=\"" << fmt6(bh)
          << "\" fill=\"#4e79a7\"/>\n";
    }
    s << "</svg>\n";
    auto path = out_dir / "dispersion_histogram.svg";
    write_text(path, s.str());
    return path;
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const ReportRequest& request,
                                               const std::filesystem::path& out_dir) {
    auto reject = [&](bool nonempty, ReportKind owner) {
        if (nonempty && owner != request.kind)
            throw DataError("dataset for " + to_string(owner) +
                            " attached to a " + to_string(request.kind) + " report");
    };
    reject(!request.tallies.empty(), ReportKind::Table4Tally);
    reject(!request.taxonomy.empty(), ReportKind::TaxonomySummary);
    reject(!request.dispersion.empty(), ReportKind::DispersionTable);
    reject(!request.concordance.empty(), ReportKind::ConcordanceTable);

    std::filesystem::create_directories(out_dir);
    std::ostringstream csv;
    switch (request.kind) {
        case ReportKind::Table4Tally:
            csv << "category,posted_prices_collected,posted_prices_analyzed,"
                   "retailers_collected,retailers_analyzed,products\n";
            for (const auto& t : request.tallies)
                csv << t.category << ',' << t.posted_prices_collected << ','
                    << t.posted_prices_analyzed << ',' << t.retailers_collected << ','
                    << t.retailers_analyzed << ',' << t.products << '\n';
            break;
        case ReportKind::TaxonomySummary:
            csv << "cluster,label,members,entry_norm,exit_norm,bid_count\n";
            for (const auto& r : request.taxonomy)
                csv << r.cluster_id << ',' << to_string(r.label) << ',' << r.members
                    << ',' << fmt6(r.entry_norm) << ',' << fmt6(r.exit_norm) << ','
                    << fmt6(r.bid_count) << '\n';
            break;
        case ReportKind::DispersionTable:
            csv << "product_id,n_quotes,min_cents,max_cents,range_cents,range_pct,cv\n";
            for (const auto& d : request.dispersion)
                csv << d.product_id << ',' << d.n_quotes << ',' << d.min << ','
                    << d.max << ',' << d.range << ',' << fmt6(d.range_pct) << ','
                    << fmt6(d.cv) << '\n';
            break;
        case ReportKind::ConcordanceTable:
            csv << "album,weeks,lag,concordance\n";
            for (const auto& c : request.concordance)
                csv << c.album << ',' << c.weeks << ',' << c.lag << ','
                    << fmt6(c.concordance) << '\n';
            break;
    }
    std::vector<std::filesystem::path> written;
    auto csv_path = out_dir / (to_string(request.kind) + ".csv");
    write_text(csv_path, csv.str());
    written.push_back(csv_path);

    if (request.with_plots) {
        if (request.kind == ReportKind::TaxonomySummary &&
            !request.scatter_features.empty())
            written.push_back(write_scatter_plot(request, out_dir));
        if (request.kind == ReportKind::DispersionTable && !request.dispersion.empty())
            written.push_back(write_dispersion_histogram(request, out_dir));
    }
    return written;
}

}  // namespace marketbench::ana
