#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "supplycast/snapshot.hpp"

namespace supplycast {

struct LeadTimeRecord {
    std::string sku;
    NodeId src;
    NodeId dst;
    Date ship{};
    Date receive{};
};

struct Dataset {
    int horizon_days = 28;
    std::vector<NetworkSnapshot> snapshots;
    std::vector<LeadTimeRecord> leadtime_log;
};

/// Directory layout:
///   dataset.json      format marker and horizon
///   graph.jsonl       {"sku","date","src","dst"}
///   nodes.jsonl       {"sku","date","node","inventory","planned_inventory",
///                      "demand_forecast","planned_incoming","planned_outgoing"}
///   edges.jsonl       {"sku","date","src","dst","planned","history","in_transit"}
///                     where each list holds {"day","qty"} objects
///   labels.jsonl      {"sku","date","src","dst","daily_outgoing"} or
///                     {"sku","date","node","weekly_inventory"}
///   leadtimes.jsonl   {"sku","src","dst","ship","receive"}
Dataset read_dataset(const std::filesystem::path& dir);
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Fills each snapshot's per-edge lead-time history with the log records of
/// its SKU and edge received strictly before the prediction day.
void attach_leadtime_history(Dataset& dataset);

}  // namespace supplycast
