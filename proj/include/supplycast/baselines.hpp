#pragma once

#include <span>
#include <vector>

#include "supplycast/snapshot.hpp"
#include "supplycast/timeline.hpp"

namespace supplycast {

/// The plan taken at face value, one timeline per edge.
std::vector<DailyTimeline> planned_passthrough(const NetworkSnapshot& snapshot);

struct CrostonState {
    double size = 0.0;      ///< smoothed non-zero shipment size
    double interval = 1.0;  ///< smoothed days between non-zero shipments
    bool has_events = false;
};

/// Classic Croston updated only at non-zero observations. The first event
/// initializes size to its quantity and interval to its 1-based position.
/// Throws std::invalid_argument unless alpha is in (0, 1].
CrostonState croston_fit(std::span<const double> series, double alpha = 0.9);

/// Flat daily rate size / interval; zeros for an edge without events.
DailyTimeline croston_predict(const CrostonState& state, int horizon);

/// Daily shipment series of the `lookback` days before the prediction day,
/// oldest first, built from an edge's executed shipments.
std::vector<double> history_series(const EdgeState& edge, int lookback);

/// Fits and predicts every edge of a snapshot from its shipment history.
std::vector<DailyTimeline> croston_baseline(const NetworkSnapshot& snapshot, double alpha = 0.9, int lookback = 56);

}  // namespace supplycast
