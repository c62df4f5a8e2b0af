#pragma once

#include <string>
#include <vector>

#include "supplycast/date.hpp"
#include "supplycast/graph.hpp"

namespace supplycast {

/// Weekly planning state of one node as seen at the prediction time.
struct NodeState {
    double inventory_start = 0.0;           ///< actual inventory at the start of day t
    std::vector<double> planned_inventory;  ///< weeks 1..|W|-1
    std::vector<double> demand_forecast;    ///< weeks 0..|W|-1
    std::vector<double> planned_incoming;   ///< weeks 0..|W|-1
    std::vector<double> planned_outgoing;   ///< weeks 0..|W|-1
};

/// Planned shipment on an edge, `day` counted from the prediction day.
struct PlannedEvent {
    int day = 0;
    double quantity = 0.0;
};

/// An executed shipment. `day` is relative to the prediction day, so past
/// shipments carry negative days.
struct ShipmentRecord {
    int day = 0;
    double quantity = 0.0;
};

struct EdgeState {
    std::vector<PlannedEvent> planned;
    std::vector<ShipmentRecord> history;     ///< most recent first
    std::vector<ShipmentRecord> in_transit;  ///< shipped before t, not yet received
};

struct LeadTimeObservation {
    Date ship;
    Date receive;

    int lead_days() const { return days_between(ship, receive); }
};

/// One SKU network at one prediction day, with optional ground-truth labels.
/// Node states, labels and lead-time history are indexed like the graph's
/// nodes and edges.
struct NetworkSnapshot {
    NetworkGraph graph;
    Date prediction_time{};
    int horizon_days = 28;
    std::vector<NodeState> node_states;
    std::vector<EdgeState> edge_states;
    std::vector<std::vector<double>> label_daily_outgoing;    ///< per edge, |H| each
    std::vector<std::vector<double>> label_weekly_inventory;  ///< per node, |W| each
    std::vector<std::vector<LeadTimeObservation>> leadtime_history;  ///< per edge

    int horizon_weeks() const { return horizon_days / 7; }
    bool has_labels() const { return !label_daily_outgoing.empty(); }
    std::string id() const;

    /// Throws DataError naming the offending field.
    void validate() const;
};

}  // namespace supplycast
