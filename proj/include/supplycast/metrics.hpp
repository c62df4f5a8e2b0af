#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "supplycast/rollout.hpp"
#include "supplycast/timeline.hpp"

namespace supplycast {

// Every metric is a percentage over a flat set of series and throws
// DegenerateDataset when its denominator is zero. Series lengths must match
// pairwise (ShapeError otherwise).

/// sum |Q_pred - Q| over all series and days / sum q * 100, where Q is the
/// running sum of the actual daily series.
double smace(std::span<const CumulativeTimeline> pred_cum, std::span<const DailyTimeline> actual_daily);

/// sum |pred - actual| / sum actual * 100.
double wmape(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> actual);

/// sum (pred - actual) / sum actual * 100.
double bias(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> actual);

/// sum over node-weeks of max(0, A_pre - Y) / sum of actual weekly
/// inventory * 100. actual_inventory[s] holds one |W| series per node of
/// rollouts[s]. With floor_capacity, Y is replaced by max(Y, 0) so a node
/// that ships nothing is never charged for a demand shortfall.
double kappa(std::span<const RolloutResult> rollouts,
             std::span<const std::vector<std::vector<double>>> actual_inventory, bool floor_capacity = true);

struct PenaltyFunction {
    enum class Kind { Linear, LinearWeighted, Geometric };

    Kind kind = Kind::Linear;
    double c1 = 1.0;    ///< late step cost
    double c2 = 1.0;    ///< early step cost
    double eta1 = 0.0;  ///< linear-weighted late growth, [0, 1]
    double eta2 = 0.5;  ///< geometric late decay, (0, 1)
    double eta3 = 0.0;  ///< linear-weighted early growth, [0, 1]
    double eta4 = 0.5;  ///< geometric early decay, (0, 1)

    /// Throws std::invalid_argument when a parameter is out of range.
    void validate() const;
    /// Step cost j days late (j > 0) or early (j < 0).
    double step(int j) const;
    /// Sum of step costs from 1 to delta, or from delta to -1; zero at 0.
    double operator()(int delta) const;
};

/// An actual shipment with the distribution of predicted-minus-actual day
/// offsets of the mass assigned to it.
struct AlignedEvent {
    double quantity = 0.0;
    std::vector<std::pair<int, double>> delta;  ///< (offset, probability)
};

/// sum a E[penalty(delta)] / sum a * 100.
double generalized_smace(std::span<const AlignedEvent> events, const PenaltyFunction& penalty);

/// Matches predicted to actual mass in time order (monotone coupling of the
/// two cumulative curves). Actual mass on day tau left unmatched is charged
/// as if predicted on day |H|, i.e. delta = |H| - tau.
std::vector<AlignedEvent> align_events(std::span<const double> pred_daily, std::span<const double> actual_daily);

/// Flat metric table.
using MetricTable = std::vector<std::pair<std::string, double>>;
void write_metrics_csv(std::ostream& os, const MetricTable& table);
void write_metrics_text(std::ostream& os, const MetricTable& table);

}  // namespace supplycast
