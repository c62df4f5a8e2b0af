#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "supplycast/dataset.hpp"
#include "supplycast/metrics.hpp"
#include "supplycast/rollout.hpp"

namespace supplycast {

/// Predicted timelines and node rollout for one snapshot, aligned with the
/// snapshot's edge and node order.
struct SnapshotPrediction {
    std::vector<DailyTimeline> daily;
    std::vector<NodeRollout> nodes;
};

/// Shortest text that parses back to the same double.
std::string format_number(double v);

/// timelines.csv: sku,date,src,dst,day,quantity
void write_timelines(const std::filesystem::path& path, std::span<const NetworkSnapshot> snapshots,
                     std::span<const std::vector<DailyTimeline>> daily);
/// rollout.csv: sku,date,node,week,inventory_start,incoming,outgoing,capacity,
/// outgoing_unclipped,inventory_end
void write_rollouts(const std::filesystem::path& path, std::span<const NetworkSnapshot> snapshots,
                    std::span<const SnapshotPrediction> predictions);
/// Both files into dir.
void write_prediction_set(const std::filesystem::path& dir, std::span<const NetworkSnapshot> snapshots,
                          std::span<const SnapshotPrediction> predictions);

/// Reads dir/timelines.csv and dir/rollout.csv and aligns them with the
/// dataset. Throws DataError on a malformed row, an unknown snapshot, node
/// or edge, or a snapshot with no rows. Missing cells read as zero.
std::vector<SnapshotPrediction> read_prediction_set(const std::filesystem::path& dir, const Dataset& dataset);

/// sMACE and Generalized sMACE on edge timelines, wMAPE on weekly inventory,
/// kappa from the rollout, and bias on edge timelines, then kappa without the
/// capacity floor. Metrics whose denominator vanishes are reported as NaN.
MetricTable evaluate_predictions(const Dataset& dataset, std::span<const SnapshotPrediction> predictions,
                                 const PenaltyFunction& penalty = {});

}  // namespace supplycast
