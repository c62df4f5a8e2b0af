#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "supplycast/dataset.hpp"
#include "supplycast/graph.hpp"

namespace supplycast {

/// How executed shipments depart from the plan.
struct DeviationSpec {
    using Shift = std::vector<std::pair<int, double>>;  ///< (delta days, probability)

    /// Noise level whose forecasts land near a 97.5% weekly demand wMAPE.
    static constexpr double kDefaultDemandNoise = 1.31;

    Shift shift{{0, 1.0}};
    double ratio_mean = 1.0;    ///< executed / planned quantity, uniform on mean +- spread
    double ratio_spread = 0.0;
    std::vector<double> lead_time{0.0, 0.0, 1.0};  ///< probability of each lead in days
    double demand_noise = kDefaultDemandNoise;  ///< sigma of the mean-one lognormal forecast error
    std::map<std::pair<NodeId, NodeId>, Shift> edge_shift;  ///< per-edge overrides

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
    /// Executed shipments equal the plan and forecasts equal demand.
    static DeviationSpec none();
};

struct HistoryOptions {
    int horizon_days = 28;
    int stride_days = 7;     ///< days between consecutive snapshots
    int warmup_days = 56;    ///< simulated days before the first snapshot
    int history_days = 56;   ///< shipment history kept per snapshot
    double stock_cover = 3.0;  ///< initial stock of non-plant nodes, in weeks of outflow
    int min_cadence = 4;     ///< days between planned shipments on an edge
    int max_cadence = 7;
    std::string sku = "SKU0";
    std::string start_date = "2024-01-01";
};

/// Layered plant -> DC -> retailer DAG with node ids P*, D*, R*. Edges only
/// run from an earlier layer to a later one and every non-plant node has a
/// parent. Throws std::invalid_argument when n_edges cannot be realized.
NetworkGraph generate_network(std::size_t n_nodes, std::size_t n_edges, std::uint64_t seed,
                              const std::string& sku = "SKU0");

/// Simulates `weeks` of plans, executed shipments, receipts and inventory,
/// and cuts one labeled snapshot every stride_days. Executed quantities are
/// capped by the source's stock on hand, so labels obey the weekly capacity
/// rule and the inventory recursion.
Dataset generate_history(const NetworkGraph& graph, int weeks, const DeviationSpec& deviation, std::uint64_t seed,
                         const HistoryOptions& options = {});

struct SuiteOptions {
    int skus = 10;
    std::size_t min_nodes = 4;
    std::size_t max_nodes = 10;
    int weeks = 8;
    std::uint64_t seed = 0;
    DeviationSpec deviation;
    HistoryOptions history;
};

/// Several SKUs with independent networks, each generated from a seed
/// derived from (seed, sku index).
Dataset generate_suite(const SuiteOptions& options);

}  // namespace supplycast
