#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "supplycast/autodiff/ops.hpp"
#include "supplycast/dataset.hpp"
#include "supplycast/event_model.hpp"
#include "supplycast/snapshot.hpp"
#include "supplycast/timeline.hpp"

namespace supplycast {

struct LeadTimeKey {
    std::string sku;
    NodeId src;
    NodeId dst;

    auto operator<=>(const LeadTimeKey&) const = default;
};

/// Time-invariant categorical lead-time distribution per edge over
/// k in [0, horizon). Lookups fall back from the edge to the SKU-wide pooled
/// distribution to a one-hot at the fallback lead.
class LeadTimeModel {
public:
    enum class Source { Edge, Pooled, Fallback };

    explicit LeadTimeModel(int horizon_days = 28, int fallback_lead = 2);

    int horizon_days() const noexcept { return horizon_; }
    int fallback_lead() const noexcept { return fallback_lead_; }

    const std::vector<double>& distribution(const std::string& sku, const NodeId& src, const NodeId& dst) const;
    const std::vector<double>& distribution(const NetworkSnapshot& snapshot, std::size_t edge) const;
    Source source(const std::string& sku, const NodeId& src, const NodeId& dst) const;

    /// Throws std::invalid_argument unless p has horizon entries, is
    /// non-negative and sums to 1 within 1e-9.
    void set_edge(const LeadTimeKey& key, std::vector<double> p);
    void set_pooled(const std::string& sku, std::vector<double> p);

    std::string to_json() const;
    static LeadTimeModel from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static LeadTimeModel load(const std::filesystem::path& path);

private:
    int horizon_;
    int fallback_lead_;
    std::vector<double> fallback_;
    std::map<LeadTimeKey, std::vector<double>> edges_;
    std::map<std::string, std::vector<double>> pooled_;
};

struct LeadTimeFitOptions {
    int horizon_days = 28;
    double smoothing = 0.0;  ///< pseudo-count added to every k
    int default_lead = 2;    ///< used when no lead time was ever observed
};

/// Empirical per-edge and per-SKU distributions with additive smoothing.
/// The fallback is a one-hot at the median observed lead time over the whole
/// log. Leads of horizon days or more count toward the last day. Throws
/// DataError naming the edge on a negative lead time.
LeadTimeModel fit_leadtime(std::span<const LeadTimeRecord> records, const LeadTimeFitOptions& options = {});

/// q_recv(h + k) += q(h) p(k); arrivals past the horizon are dropped.
DailyTimeline receive_convolve(std::span<const double> daily, std::span<const double> lt);

/// Arrival days of shipments already on the road. A shipment sent d days
/// ago arrives after lead k >= d with p(k) renormalized over that range;
/// with no such mass left it is overdue and arrives on day 0.
DailyTimeline in_transit_arrivals(const EdgeState& edge, std::span<const double> lt, int horizon);

/// Per-edge, per-event quantity vectors, i.e. r a pi for each planned event.
struct EventSet {
    std::vector<std::vector<DailyTimeline>> quantities;
    double lost_mass = 0.0;  ///< predicted quantity that fell outside the horizon

    std::vector<DailyTimeline> daily(int horizon) const;
};

/// Applies redistribution per event. preds[e] lists predictions for edge e.
/// Throws ShapeError when preds does not cover every edge.
EventSet build_event_set(const NetworkSnapshot& snapshot, const std::vector<std::vector<EventPrediction>>& preds);
/// The plan as an event set, every event at its planned day and quantity.
EventSet planned_event_set(const NetworkSnapshot& snapshot);

struct NodeRollout {
    std::vector<double> inventory;           ///< |W| + 1 entries, last is next start
    std::vector<double> incoming;            ///< S
    std::vector<double> outgoing;            ///< A after clipping
    std::vector<double> outgoing_unclipped;  ///< A before clipping
    std::vector<double> capacity;            ///< Y = I + S - D
    std::vector<double> demand;
};

struct RolloutResult {
    std::vector<NodeRollout> nodes;
    EventSet events;                   ///< adjusted event quantities
    std::vector<DailyTimeline> daily;  ///< adjusted per-edge timelines
    std::size_t clip_count = 0;        ///< node-weeks whose outgoing was scaled down

    /// Weekly inventory starts, |W| entries per node.
    std::vector<std::vector<double>> weekly_inventory() const;
};

/// Process Z. Incoming supply comes from the unclipped outgoing timelines
/// plus shipments in transit. When clip is set and A_w > Y_w at a node, the
/// week-w slice of every outgoing event is scaled by max(Y_w, 0) / A_w.
/// Throws ShapeError when the event set or lead-time model does not match
/// the snapshot horizon.
RolloutResult rollout_inventory(const NetworkSnapshot& snapshot, EventSet events, const LeadTimeModel& lt,
                                bool clip = true);
RolloutResult rollout_inventory(const NetworkSnapshot& snapshot,
                                const std::vector<std::vector<EventPrediction>>& preds, const LeadTimeModel& lt,
                                bool clip = true);

struct InferenceOptions {
    double epsilon = 0.005;
    int max_iters = 10;
    bool clip_in_rollout = true;  ///< apply the capacity clip inside iteration 0
};

struct ConstrainedResult {
    RolloutResult rollout;
    std::vector<double> rho;  ///< relative change per refinement iteration
    bool converged = false;
};

/// Iteration 0 is process Z. Every later iteration walks the weeks in order,
/// recomputing incoming supply from timelines whose earlier weeks were
/// already adjusted in this pass, and clips outgoing to capacity. Stops once
/// the mean relative change of the edge timelines drops below epsilon.
/// Throws std::invalid_argument on epsilon <= 0 or max_iters < 1.
ConstrainedResult constrained_inference(const NetworkSnapshot& snapshot, EventSet events, const LeadTimeModel& lt,
                                        const InferenceOptions& options = {});

/// CSV with header node,week,inventory_start,incoming,outgoing,capacity,
/// outgoing_unclipped,inventory_end.
void write_rollout_csv(std::ostream& os, const NetworkGraph& graph, const RolloutResult& result);

// Tape forms used by training.

/// Row e of daily (E x H) convolved with row e of kernels, truncated to H.
ad::Var convolve_rows(ad::Var daily, const ad::Tensor& kernels);

/// Elementwise scaling ratio: 1 when A <= Y, Y / A when A > Y > 0, else 0.
ad::Var clip_ratio(ad::Var capacity, ad::Var outgoing);

}  // namespace supplycast
