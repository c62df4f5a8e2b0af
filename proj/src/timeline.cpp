#include "supplycast/timeline.hpp"

#include <ostream>
#include <string>

#include "supplycast/errors.hpp"

namespace supplycast {

DailyTimeline basis_vector(int t_prime, int horizon) {
    DailyTimeline e(static_cast<std::size_t>(horizon), 0.0);
    if (t_prime >= 0 && t_prime < horizon) e[static_cast<std::size_t>(t_prime)] = 1.0;
    return e;
}

DailyTimeline event_time_distribution(const EventPrediction& pred, int tau, int horizon) {
    DailyTimeline pi(static_cast<std::size_t>(horizon), 0.0);
    for (int delta = kMinDelta; delta <= kMaxDelta; ++delta) {
        const int day = tau + delta;
        if (day >= 0 && day < horizon) pi[static_cast<std::size_t>(day)] += pred.delta(delta);
    }
    return pi;
}

double out_of_horizon_mass(const EventPrediction& pred, int tau, int horizon) {
    double lost = 0.0;
    for (int delta = kMinDelta; delta <= kMaxDelta; ++delta) {
        const int day = tau + delta;
        if (day < 0 || day >= horizon) lost += pred.delta(delta);
    }
    return lost;
}

DailyTimeline event_quantity_vector(const EventPrediction& pred, const DailyTimeline& pi, double planned_qty) {
    DailyTimeline q(pi.size());
    for (std::size_t h = 0; h < pi.size(); ++h) q[h] = pred.multiplier * planned_qty * pi[h];
    return q;
}

DailyTimeline daily_vector(std::span<const DailyTimeline> events, int horizon) {
    DailyTimeline total(static_cast<std::size_t>(horizon), 0.0);
    for (const auto& e : events) {
        if (e.size() != total.size()) {
            throw ShapeError("daily_vector: event timeline of length " + std::to_string(e.size()) +
                             " for horizon " + std::to_string(horizon));
        }
        for (std::size_t h = 0; h < e.size(); ++h) total[h] += e[h];
    }
    return total;
}

CumulativeTimeline cumulative(std::span<const double> daily) {
    CumulativeTimeline out(daily.size());
    double run = 0.0;
    for (std::size_t h = 0; h < daily.size(); ++h) out[h] = run += daily[h];
    return out;
}

WeeklyTimeline weekly_bucket(std::span<const double> daily) {
    if (daily.size() % 7 != 0) {
        throw ShapeError("weekly_bucket: length " + std::to_string(daily.size()) + " is not a whole number of weeks");
    }
    WeeklyTimeline out(daily.size() / 7, 0.0);
    for (std::size_t h = 0; h < daily.size(); ++h) out[h / 7] += daily[h];
    return out;
}

DailyTimeline planned_daily(const EdgeState& edge, int horizon) {
    DailyTimeline out(static_cast<std::size_t>(horizon), 0.0);
    for (const auto& ev : edge.planned) {
        if (ev.day >= 0 && ev.day < horizon) out[static_cast<std::size_t>(ev.day)] += ev.quantity;
    }
    return out;
}

DailyTimeline predicted_daily(const EdgeState& edge, std::span<const EventPrediction> preds, int horizon) {
    DailyTimeline out(static_cast<std::size_t>(horizon), 0.0);
    for (const auto& pred : preds) {
        if (pred.event >= edge.planned.size()) {
            throw ShapeError("predicted_daily: prediction for event " + std::to_string(pred.event) + " of " +
                             std::to_string(edge.planned.size()));
        }
        const auto& ev = edge.planned[pred.event];
        EventPrediction adjusted = pred;
        adjusted.delta = redistribute_infeasible(pred.delta, ev.day);
        const auto q = event_quantity_vector(adjusted, event_time_distribution(adjusted, ev.day, horizon), ev.quantity);
        for (std::size_t h = 0; h < q.size(); ++h) out[h] += q[h];
    }
    return out;
}

void write_timelines_csv(std::ostream& os, const NetworkGraph& graph, std::span<const DailyTimeline> daily) {
    os << "src,dst,day,quantity\n";
    for (std::size_t e = 0; e < daily.size(); ++e) {
        const auto& edge = graph.edges()[e];
        for (std::size_t h = 0; h < daily[e].size(); ++h) {
            os << graph.node(edge.src) << ',' << graph.node(edge.dst) << ',' << h << ',' << daily[e][h] << '\n';
        }
    }
}

ad::Var place_deltas(ad::Var probs, std::span<const int> tau, int horizon) {
    const auto& pv = probs.value();
    if (pv.cols() != kDeltaCount || pv.rows() != tau.size()) {
        throw ShapeError("place_deltas: probabilities " + pv.shape_string() + " for " + std::to_string(tau.size()) +
                         " events");
    }
    const std::vector<int> days(tau.begin(), tau.end());
    ad::Tensor out(pv.rows(), static_cast<std::size_t>(horizon), 0.0);
    for (std::size_t r = 0; r < pv.rows(); ++r) {
        for (std::size_t k = 0; k < kDeltaCount; ++k) {
            const int day = days[r] + slot_delta(k);
            if (day >= 0 && day < horizon) out(r, static_cast<std::size_t>(day)) += pv(r, k);
        }
    }
    const auto ip = probs.id();
    return probs.tape()->record(std::move(out), {probs}, [ip, days, horizon](ad::Tape& t, std::size_t self) {
        const auto& g = t.grad_buffer(self);
        auto& gp = t.grad_buffer(ip);
        for (std::size_t r = 0; r < gp.rows(); ++r) {
            for (std::size_t k = 0; k < kDeltaCount; ++k) {
                const int day = days[r] + slot_delta(k);
                if (day >= 0 && day < horizon) gp(r, k) += g(r, static_cast<std::size_t>(day));
            }
        }
    });
}

ad::Tensor weekly_bucket_matrix(int horizon) {
    const auto h = static_cast<std::size_t>(horizon);
    ad::Tensor b(h, h / 7, 0.0);
    for (std::size_t d = 0; d < h; ++d) b(d, d / 7) = 1.0;
    return b;
}

ad::Tensor cumulative_matrix(int horizon) {
    const auto h = static_cast<std::size_t>(horizon);
    ad::Tensor u(h, h, 0.0);
    for (std::size_t d = 0; d < h; ++d)
        for (std::size_t k = d; k < h; ++k) u(d, k) = 1.0;
    return u;
}

}  // namespace supplycast
