#pragma once

#include <string>
#include <utility>
#include <vector>

#include "supplycast/snapshot.hpp"

namespace testutil {

using supplycast::NetworkSnapshot;

// Snapshot with empty plans and zero demand; callers fill in what they need.
inline NetworkSnapshot make_snapshot(std::vector<std::string> nodes,
                                     std::vector<std::pair<std::string, std::string>> edges, int horizon = 28) {
    NetworkSnapshot s;
    s.graph = supplycast::NetworkGraph("sku", std::move(nodes), edges);
    s.prediction_time = supplycast::parse_date("2024-01-01");
    s.horizon_days = horizon;
    const auto weeks = static_cast<std::size_t>(horizon / 7);
    for (std::size_t v = 0; v < s.graph.node_count(); ++v) {
        supplycast::NodeState n;
        n.planned_inventory.assign(weeks - 1, 0.0);
        n.demand_forecast.assign(weeks, 0.0);
        n.planned_incoming.assign(weeks, 0.0);
        n.planned_outgoing.assign(weeks, 0.0);
        s.node_states.push_back(n);
    }
    s.edge_states.resize(s.graph.edge_count());
    s.leadtime_history.resize(s.graph.edge_count());
    return s;
}

}  // namespace testutil
