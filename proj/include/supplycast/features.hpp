#pragma once

#include <cstddef>
#include <vector>

#include "supplycast/autodiff/tensor.hpp"
#include "supplycast/snapshot.hpp"

namespace supplycast {

/// Per node, scaled by `scale`: [I_0, planned I_1..I_{W-1}, demand forecast,
/// planned incoming, planned outgoing], 4W values.
ad::Tensor node_features(const NetworkSnapshot& snapshot, double scale);
std::size_t node_feature_dim(int horizon_days);

/// Per edge, for its event_index-th planned event: [day / H, qty / scale]
/// followed by the `history_depth` most recent shipments as (day / H,
/// qty / scale, 1), zero-padded. Edges without that event get zero event
/// fields but keep their history.
ad::Tensor edge_features(const NetworkSnapshot& snapshot, std::size_t event_index, double scale, int history_depth);
std::size_t edge_feature_dim(int history_depth);

/// Largest planned-event count over the snapshot's edges.
std::size_t max_event_count(const NetworkSnapshot& snapshot);

/// Largest planned shipment quantity of the snapshot, 0 when there is none.
double max_planned_quantity(const NetworkSnapshot& snapshot);

}  // namespace supplycast
