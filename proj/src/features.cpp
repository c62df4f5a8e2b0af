#include "supplycast/features.hpp"

#include <algorithm>

namespace supplycast {

std::size_t node_feature_dim(int horizon_days) { return 4 * static_cast<std::size_t>(horizon_days / 7); }

std::size_t edge_feature_dim(int history_depth) { return 2 + 3 * static_cast<std::size_t>(history_depth); }

ad::Tensor node_features(const NetworkSnapshot& snapshot, double scale) {
    const auto weeks = static_cast<std::size_t>(snapshot.horizon_weeks());
    ad::Tensor x(snapshot.graph.node_count(), node_feature_dim(snapshot.horizon_days), 0.0);
    for (std::size_t v = 0; v < x.rows(); ++v) {
        const auto& s = snapshot.node_states[v];
        std::size_t c = 0;
        x(v, c++) = s.inventory_start / scale;
        for (std::size_t w = 0; w + 1 < weeks; ++w) x(v, c++) = s.planned_inventory[w] / scale;
        for (std::size_t w = 0; w < weeks; ++w) x(v, c++) = s.demand_forecast[w] / scale;
        for (std::size_t w = 0; w < weeks; ++w) x(v, c++) = s.planned_incoming[w] / scale;
        for (std::size_t w = 0; w < weeks; ++w) x(v, c++) = s.planned_outgoing[w] / scale;
    }
    return x;
}

ad::Tensor edge_features(const NetworkSnapshot& snapshot, std::size_t event_index, double scale, int history_depth) {
    const double h = snapshot.horizon_days;
    ad::Tensor e(snapshot.graph.edge_count(), edge_feature_dim(history_depth), 0.0);
    for (std::size_t k = 0; k < e.rows(); ++k) {
        const auto& s = snapshot.edge_states[k];
        if (event_index < s.planned.size()) {
            e(k, 0) = s.planned[event_index].day / h;
            e(k, 1) = s.planned[event_index].quantity / scale;
        }
        const auto depth = std::min(s.history.size(), static_cast<std::size_t>(history_depth));
        for (std::size_t j = 0; j < depth; ++j) {
            e(k, 2 + 3 * j) = s.history[j].day / h;
            e(k, 3 + 3 * j) = s.history[j].quantity / scale;
            e(k, 4 + 3 * j) = 1.0;
        }
    }
    return e;
}

std::size_t max_event_count(const NetworkSnapshot& snapshot) {
    std::size_t m = 0;
    for (const auto& e : snapshot.edge_states) m = std::max(m, e.planned.size());
    return m;
}

double max_planned_quantity(const NetworkSnapshot& snapshot) {
    double m = 0.0;
    for (const auto& e : snapshot.edge_states)
        for (const auto& p : e.planned) m = std::max(m, p.quantity);
    return m;
}

}  // namespace supplycast
