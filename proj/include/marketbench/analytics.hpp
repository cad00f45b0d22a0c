#pragma once

// Analyses over cleansed records: bidder-behavior taxonomy via k-means,
// price-dispersion metrics, sharing-corpus summaries, chart concordance,
// and deterministic report emission (CSV plus optional SVG plots).

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "marketbench/extractor.hpp"
#include "marketbench/pipeline.hpp"

namespace marketbench::ana {

// --------------------------------------------------------------------------
// Bidder features and taxonomy

struct FeatureVector {
    std::string bidder_id;
    double entry_norm = 0.0;  // fraction of auction duration, in [0, 1]
    double exit_norm = 0.0;   // likewise; entry_norm <= exit_norm
    int bid_count = 0;
};

// Normalizes a reconstructed profile against the auction's open and actual
// end. Throws DataError on a zero-duration auction or times outside it.
FeatureVector bidder_features(const pipe::BidderProfile& profile, Timestamp open,
                              Timestamp end);

using Point = std::array<double, 3>;

// Clustering coordinates: (entry_norm, exit_norm, log2(1 + bid_count)).
// The log keeps counts commensurate with the [0,1] time axes.
Point scaled_point(const FeatureVector& f);
std::vector<Point> scaled_features(const std::vector<FeatureVector>& features);

struct Clustering {
    int k = 0;
    std::vector<Point> centroids;
    std::vector<int> assignment;  // index-aligned with the input points
    double sse = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<double> sse_history;  // one entry per assignment pass
};

// Lloyd iteration from deterministic spread seeding (first pick seeded, each
// further centroid the point farthest from those chosen). SSE is checked to
// be non-increasing on every pass. Throws DataError when k exceeds the
// number of distinct points, ConfigError for k < 1 or an empty input.
Clustering kmeans(const std::vector<Point>& points, int k, std::uint64_t seed,
                  double tol = 1e-9, int max_iter = 200);

// Mean silhouette over all points; singleton clusters score zero.
double mean_silhouette(const std::vector<Point>& points,
                       const std::vector<int>& assignment, int k);

struct KChoice {
    int k = 0;
    double score = 0.0;  // mean silhouette at the chosen k
};

// Picks k in [k_lo, k_hi] maximizing mean silhouette; ties go to smaller k.
// The range must satisfy 2 <= k_lo <= k_hi <= n - 1.
KChoice choose_k(const std::vector<Point>& points, int k_lo, int k_hi,
                 std::uint64_t seed);

enum class Behavior { EarlyMultiple, EarlySingle, LateArriver, Other };
std::string to_string(Behavior b);

struct LabelThresholds {
    double early_entry_ceiling = 0.5;
    double late_entry_floor = 0.8;
    double multiple_bid_floor = 1.5;
};

struct TaxonomyLabel {
    int cluster_id = 0;
    Behavior label = Behavior::Other;
};

// Labels each cluster from its centroid in raw feature space (mean entry,
// exit, and bid count of its members): early entrants split on bid count,
// late entrants form their own group, the rest are Other.
std::vector<TaxonomyLabel> label_clusters(const Clustering& clustering,
                                          const std::vector<FeatureVector>& features,
                                          const LabelThresholds& thresholds = {});

struct TaxonomySummaryRow {
    int cluster_id = 0;
    Behavior label = Behavior::Other;
    int members = 0;
    double entry_norm = 0.0;  // raw-space centroid
    double exit_norm = 0.0;
    double bid_count = 0.0;
};

std::vector<TaxonomySummaryRow> summarize_taxonomy(
    const Clustering& clustering, const std::vector<FeatureVector>& features,
    const LabelThresholds& thresholds = {});

// --------------------------------------------------------------------------
// Price dispersion

struct DispersionReport {
    std::string product_id;
    int n_quotes = 0;
    Money min = 0;
    Money max = 0;
    Money range = 0;
    double range_pct = 0.0;  // (max - min) / min
    double cv = 0.0;         // population stddev / mean
};

// Throws DataError with fewer than two quotes or a non-positive price.
DispersionReport dispersion_metrics(const std::string& product_id,
                                    const std::vector<Money>& prices);

// --------------------------------------------------------------------------
// Sharing corpus

struct CorpusSummary {
    std::int64_t users = 0;  // distinct sharers
    std::int64_t files = 0;  // total observed rows
    double files_per_user = 0.0;
};

// Throws DataError when no rows (and hence no users) are present.
CorpusSummary corpus_summary(const std::vector<extract::SearchObservation>& rows);

// Sign concordance between weekly sharing changes and chart movement `lag`
// weeks later, in [-1, 1]. Chart positions improve downward, so a sharing
// rise agrees with a later position decrease. Weeks where either series is
// flat are excluded; fewer than two comparable week pairs after alignment is
// a DataError; all pairs flat yields 0.
double sharing_chart_concordance(const std::vector<std::int64_t>& sharing,
                                 const std::vector<int>& chart_positions,
                                 int lag = 1);

// --------------------------------------------------------------------------
// Reports

enum class ReportKind { Table4Tally, TaxonomySummary, DispersionTable, ConcordanceTable };
std::string to_string(ReportKind k);

struct ConcordanceRow {
    std::string album;
    int weeks = 0;  // comparable week pairs
    int lag = 0;
    double concordance = 0.0;
};

struct ReportRequest {
    ReportKind kind = ReportKind::Table4Tally;
    std::vector<pipe::CategoryTally> tallies;
    std::vector<TaxonomySummaryRow> taxonomy;
    std::vector<DispersionReport> dispersion;
    std::vector<ConcordanceRow> concordance;
    bool with_plots = false;
    // Scatter source for the taxonomy plot (entry/exit plane by cluster).
    std::vector<FeatureVector> scatter_features;
    std::vector<int> scatter_assignment;
};

// Writes a deterministic CSV (and optional SVG plots) under out_dir and
// returns the paths written. Data attached for a different kind than
// requested is a DataError; an empty dataset yields a header-only CSV.
std::vector<std::filesystem::path> emit_report(const ReportRequest& request,
                                               const std::filesystem::path& out_dir);

}  // namespace marketbench::ana
