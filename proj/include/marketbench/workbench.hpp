#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "marketbench/common.hpp"
#include "marketbench/market.hpp"
#include "marketbench/pipeline.hpp"
#include "marketbench/simulator.hpp"

namespace marketbench::wb {

// ---------------------------------------------------------------------------
// Configuration
//
// A run is described by one JSON file. Every key is optional and falls back
// to the defaults below; unknown keys are ConfigErrors so typos surface
// instead of silently reverting to defaults. Money fields accept either
// integer cents or strings like "$4.90"; timestamps accept integer epoch
// seconds or UTC ISO-8601 strings.

struct AnalyzeConfig {
    int k = 0;  // 0 = pick k by silhouette over [k_lo, k_hi]
    int k_lo = 2;
    int k_hi = 6;
    int restarts = 10;  // seeded k-means runs; lowest SSE wins
    int concordance_lag = 1;
    int sharing_weeks = 0;   // 0 = no weekly sharing feed
    int sharing_albums = 0;  // 0 = size of the album watchlist
};

struct WorkbenchConfig {
    std::uint64_t seed = 1;
    std::filesystem::path out = "wbstore";
    sim::ScenarioConfig market;   // auction / p2p / retail mix to simulate
    double rate_per_second = 5.0; // harvest politeness budget
    pipe::QuoteThresholds quote_thresholds;
    AnalyzeConfig analyze;
    bool report_plots = false;
};

// Throws ConfigError naming the offending key.
WorkbenchConfig parse_config(const std::string& text);
WorkbenchConfig load_config(const std::filesystem::path& file);

// Digest of the canonical form of the effective config (after any CLI
// overrides); equal configs digest equally regardless of key order or
// money/timestamp spelling in the source file.
std::string config_digest(const WorkbenchConfig& config);

// Re-validates every scenario knob; called by run_pipeline before any
// side effect.
void validate_config(const WorkbenchConfig& config);

// ---------------------------------------------------------------------------
// Store layout
//
// Flat-file store: append-only raw archive, line-delimited JSON record
// files, CSV/SVG reports, one JSONL review queue, one manifest per run.

struct StoreLayout {
    std::filesystem::path root;

    std::filesystem::path raw_dir() const { return root / "raw"; }
    std::filesystem::path records_dir() const { return root / "records"; }
    std::filesystem::path reports_dir() const { return root / "reports"; }
    std::filesystem::path review_file() const { return root / "review" / "queue.jsonl"; }
    std::filesystem::path manifests_dir() const { return root / "manifests"; }

    // Record files, grouped by the stage that writes them.
    std::filesystem::path extracted_file(const std::string& name) const;
    std::filesystem::path clean_file(const std::string& name) const;
    std::filesystem::path collated_file(const std::string& name) const;
    std::filesystem::path analysis_file(const std::string& name) const;

    void ensure() const;  // creates directories; never touches files
};

// ---------------------------------------------------------------------------
// Run manifest

struct StageOutcome {
    std::string stage;
    std::int64_t records_in = 0;
    std::int64_t records_out = 0;
    std::int64_t flags_raised = 0;
};

struct RunManifest {
    std::string run_id;
    std::string config_digest;
    std::uint64_t seed = 0;
    market::DatasetProvenance provenance;
    std::vector<StageOutcome> stages;  // pipeline order
};

std::string manifest_json(const RunManifest& manifest);
RunManifest parse_manifest(const std::string& text);
std::filesystem::path write_manifest(const RunManifest& manifest, const StoreLayout& layout);
RunManifest load_manifest(const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// Stages
//
// Each stage reads only files written by its predecessor and rewrites its
// own output files from scratch, so re-running a stage against an unchanged
// store is byte-identical. Counts are measured from the files themselves:
// records_in is the store state a stage consumes and records_out the state
// it hands to the next stage (pass-through records plus derived ones), so
// manifest count conservation holds by construction. A failure on one
// target is flagged to the review queue and never aborts the others.

StageOutcome stage_harvest(const WorkbenchConfig& config, const StoreLayout& layout);
StageOutcome stage_extract(const WorkbenchConfig& config, const StoreLayout& layout);
StageOutcome stage_cleanse(const WorkbenchConfig& config, const StoreLayout& layout);
StageOutcome stage_collate(const WorkbenchConfig& config, const StoreLayout& layout);
StageOutcome stage_analyze(const WorkbenchConfig& config, const StoreLayout& layout);
StageOutcome stage_report(const WorkbenchConfig& config, const StoreLayout& layout);

// Validates, then runs all six stages in order and writes the manifest.
RunManifest run_pipeline(const WorkbenchConfig& config);

// ---------------------------------------------------------------------------
// Query
//
// Streaming filter over one JSONL record file. The predicate is zero or
// more clauses joined by "&&": <field> <op> <value> with ops
// == != < <= > >=. Values compare numerically when both sides are numeric,
// as strings otherwise (quotes around the value optional). An empty
// predicate matches everything. A field that appears in no record at all
// is a DataError; matching lines come back verbatim in file order.

std::vector<std::string> query_records(const std::filesystem::path& file,
                                       const std::string& predicate);

}  // namespace marketbench::wb
