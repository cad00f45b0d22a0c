#pragma once

#include "marketbench/common.hpp"

// Named tuning constants shared across modules. Tests pin each value so a
// change here is a deliberate, visible decision rather than a drive-by edit.
namespace marketbench::constants {

// Auctions close only after a quiet period with no accepted bids.
inline constexpr Duration kSoftCloseWindow = 300;  // seconds

// A losing final bid below 4/5 of the lowest winning price is frivolous.
inline constexpr std::int64_t kFrivolousNum = 4;
inline constexpr std::int64_t kFrivolousDen = 5;

// Retail quote screening.
inline constexpr int kMinSurveyCount = 30;
inline constexpr int kRatingWindowDays = 90;
inline constexpr int kRatingRecencyToleranceDays = 7;
inline constexpr int kMinQuotesPerProduct = 7;
inline constexpr int kMinProductsPerCategory = 20;

// Bidder taxonomy thresholds over raw-space centroid coordinates
// (entry_norm in [0,1], bid_count unscaled).
inline constexpr double kEarlyEntryCeiling = 0.5;
inline constexpr double kLateEntryFloor = 0.8;
inline constexpr double kMultipleBidFloor = 1.5;

// Archetype entry windows as fractions of scheduled auction duration.
inline constexpr double kEarlyWindowLo = 0.0;
inline constexpr double kEarlyWindowHi = 0.5;
inline constexpr double kLateWindowLo = 0.8;
inline constexpr double kLateWindowHi = 1.0;

// Harvester pacing and retry defaults.
inline constexpr double kDefaultRequestsPerSecond = 5.0;
inline constexpr int kMaxFetchAttempts = 3;
inline constexpr double kBackoffFactor = 2.0;
inline constexpr Duration kInitialBackoff = 1;  // seconds

// Cluster-count search range for the bidder taxonomy.
inline constexpr int kMinClusterCount = 2;
inline constexpr int kMaxClusterCount = 6;
inline constexpr double kStructureSilhouetteFloor = 0.25;

// Lloyd's algorithm bounds.
inline constexpr int kMaxKmeansIterations = 100;

}  // namespace marketbench::constants
