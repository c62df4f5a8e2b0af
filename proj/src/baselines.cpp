#include "supplycast/baselines.hpp"

#include <stdexcept>

namespace supplycast {

std::vector<DailyTimeline> planned_passthrough(const NetworkSnapshot& snapshot) {
    std::vector<DailyTimeline> out;
    for (const auto& e : snapshot.edge_states) out.push_back(planned_daily(e, snapshot.horizon_days));
    return out;
}

CrostonState croston_fit(std::span<const double> series, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("croston alpha must lie in (0, 1]");
    CrostonState s;
    std::size_t last = 0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series[t] <= 0.0) continue;
        const double gap = static_cast<double>(t + 1 - last);
        if (!s.has_events) {
            s.size = series[t];
            s.interval = gap;
            s.has_events = true;
        } else {
            s.size = alpha * series[t] + (1.0 - alpha) * s.size;
            s.interval = alpha * gap + (1.0 - alpha) * s.interval;
        }
        last = t + 1;
    }
    return s;
}

DailyTimeline croston_predict(const CrostonState& state, int horizon) {
    const double rate = state.has_events ? state.size / state.interval : 0.0;
    return DailyTimeline(static_cast<std::size_t>(horizon), rate);
}

std::vector<double> history_series(const EdgeState& edge, int lookback) {
    std::vector<double> series(static_cast<std::size_t>(lookback), 0.0);
    for (const auto& s : edge.history) {
        if (s.day < 0 && s.day >= -lookback) series[static_cast<std::size_t>(lookback + s.day)] += s.quantity;
    }
    return series;
}

std::vector<DailyTimeline> croston_baseline(const NetworkSnapshot& snapshot, double alpha, int lookback) {
    std::vector<DailyTimeline> out;
    for (const auto& e : snapshot.edge_states) {
        out.push_back(croston_predict(croston_fit(history_series(e, lookback), alpha), snapshot.horizon_days));
    }
    return out;
}

}  // namespace supplycast
