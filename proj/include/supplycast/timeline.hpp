#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "supplycast/autodiff/ops.hpp"
#include "supplycast/event_model.hpp"
#include "supplycast/graph.hpp"
#include "supplycast/snapshot.hpp"

namespace supplycast {

/// Quantity per day offset h in [0, |H|).
using DailyTimeline = std::vector<double>;
/// Running sums of a daily timeline.
using CumulativeTimeline = std::vector<double>;
/// Quantity per 7-day bucket aligned to the prediction day.
using WeeklyTimeline = std::vector<double>;

/// One-hot at t_prime, or all zeros when t_prime is outside [0, horizon).
DailyTimeline basis_vector(int t_prime, int horizon);

/// pi = sum_delta p(delta) e^(tau + delta). Mass landing outside the horizon
/// is dropped, not renormalized. Expects redistribution to be applied.
DailyTimeline event_time_distribution(const EventPrediction& pred, int tau, int horizon);

/// Probability mass of pred that lands outside [0, horizon).
double out_of_horizon_mass(const EventPrediction& pred, int tau, int horizon);

/// r * a * pi.
DailyTimeline event_quantity_vector(const EventPrediction& pred, const DailyTimeline& pi, double planned_qty);

/// Elementwise sum; an empty list gives zeros.
DailyTimeline daily_vector(std::span<const DailyTimeline> events, int horizon);

CumulativeTimeline cumulative(std::span<const double> daily);

/// Throws ShapeError unless the length is a multiple of 7.
WeeklyTimeline weekly_bucket(std::span<const double> daily);

/// The plan itself: every planned event at its planned day.
DailyTimeline planned_daily(const EdgeState& edge, int horizon);

/// Redistributes each prediction against its event's planned day and sums
/// the event quantity vectors. Throws ShapeError when a prediction refers to
/// a missing event.
DailyTimeline predicted_daily(const EdgeState& edge, std::span<const EventPrediction> preds, int horizon);

/// CSV with header src,dst,day,quantity, one row per edge and day.
void write_timelines_csv(std::ostream& os, const NetworkGraph& graph, std::span<const DailyTimeline> daily);

// Tape forms used by training.

/// probs is r x 15; row k places p(delta) at day tau[k] + delta of an
/// r x horizon result, dropping days outside the horizon.
ad::Var place_deltas(ad::Var probs, std::span<const int> tau, int horizon);

/// horizon x weeks matrix B with B(h, w) = 1 when h / 7 == w.
ad::Tensor weekly_bucket_matrix(int horizon);
/// horizon x horizon upper-triangular ones, so x * U is the running sum of x.
ad::Tensor cumulative_matrix(int horizon);

}  // namespace supplycast
