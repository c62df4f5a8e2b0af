#include "supplycast/snapshot.hpp"

#include <cmath>

#include "supplycast/errors.hpp"

namespace supplycast {

namespace {

void check_length(const std::vector<double>& v, std::size_t expected, const std::string& what) {
    if (v.size() != expected) {
        throw DataError(what + " has length " + std::to_string(v.size()) + ", expected " +
                        std::to_string(expected));
    }
}

void check_finite(const std::vector<double>& v, const std::string& what, bool non_negative) {
    for (double x : v) {
        if (!std::isfinite(x)) throw DataError(what + " contains a non-finite value");
        if (non_negative && x < 0.0) throw DataError(what + " contains a negative quantity");
    }
}

}  // namespace

std::string NetworkSnapshot::id() const { return graph.sku() + "@" + format_date(prediction_time); }

void NetworkSnapshot::validate() const {
    const std::string where = "snapshot " + id() + ": ";
    if (horizon_days <= 0 || horizon_days % 7 != 0) {
        throw DataError(where + "horizon_days must be a positive multiple of 7");
    }
    const auto weeks = static_cast<std::size_t>(horizon_weeks());
    const auto n = graph.node_count();
    const auto m = graph.edge_count();
    if (node_states.size() != n) throw DataError(where + "node state count does not match the graph");
    if (edge_states.size() != m) throw DataError(where + "edge state count does not match the graph");

    for (std::size_t v = 0; v < n; ++v) {
        const auto& s = node_states[v];
        const std::string node = where + "node " + graph.node(v) + " ";
        if (!std::isfinite(s.inventory_start)) throw DataError(node + "inventory is not finite");
        check_length(s.planned_inventory, weeks - 1, node + "planned_inventory");
        check_length(s.demand_forecast, weeks, node + "demand_forecast");
        check_length(s.planned_incoming, weeks, node + "planned_incoming");
        check_length(s.planned_outgoing, weeks, node + "planned_outgoing");
        check_finite(s.planned_inventory, node + "planned_inventory", false);
        check_finite(s.demand_forecast, node + "demand_forecast", true);
        check_finite(s.planned_incoming, node + "planned_incoming", true);
        check_finite(s.planned_outgoing, node + "planned_outgoing", true);
    }

    for (std::size_t e = 0; e < m; ++e) {
        const auto& s = edge_states[e];
        const auto& edge = graph.edges()[e];
        const std::string name = where + "edge " + graph.node(edge.src) + "->" + graph.node(edge.dst) + " ";
        for (const auto& p : s.planned) {
            if (p.day < 0 || p.day >= horizon_days) throw DataError(name + "planned event outside the horizon");
            if (!std::isfinite(p.quantity) || p.quantity < 0.0) throw DataError(name + "invalid planned quantity");
        }
        int last = 0;
        for (const auto& h : s.history) {
            if (h.day >= 0) throw DataError(name + "history entry is not in the past");
            if (h.day > last) throw DataError(name + "history is not ordered most recent first");
            if (!std::isfinite(h.quantity) || h.quantity < 0.0) throw DataError(name + "invalid history quantity");
            last = h.day;
        }
        for (const auto& h : s.in_transit) {
            if (h.day >= 0) throw DataError(name + "in-transit shipment is not in the past");
            if (!std::isfinite(h.quantity) || h.quantity < 0.0) throw DataError(name + "invalid in-transit quantity");
        }
    }

    if (!label_daily_outgoing.empty() || !label_weekly_inventory.empty()) {
        if (label_daily_outgoing.size() != m) throw DataError(where + "daily outgoing labels do not cover every edge");
        if (label_weekly_inventory.size() != n) throw DataError(where + "weekly inventory labels do not cover every node");
        for (std::size_t e = 0; e < m; ++e) {
            check_length(label_daily_outgoing[e], static_cast<std::size_t>(horizon_days), where + "daily outgoing label");
            check_finite(label_daily_outgoing[e], where + "daily outgoing label", true);
        }
        for (std::size_t v = 0; v < n; ++v) {
            check_length(label_weekly_inventory[v], weeks, where + "weekly inventory label");
            check_finite(label_weekly_inventory[v], where + "weekly inventory label", false);
        }
    }

    if (!leadtime_history.empty() && leadtime_history.size() != m) {
        throw DataError(where + "lead-time history does not cover every edge");
    }
}

}  // namespace supplycast
