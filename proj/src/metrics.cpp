#include "supplycast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "supplycast/errors.hpp"

namespace supplycast {

namespace {

template <class A, class B>
void check_pairs(const char* metric, std::span<A> pred, std::span<B> actual) {
    if (pred.size() != actual.size()) {
        throw ShapeError(std::string(metric) + ": " + std::to_string(pred.size()) + " predicted series for " +
                         std::to_string(actual.size()) + " actual");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].size() != actual[i].size()) {
            throw ShapeError(std::string(metric) + ": series " + std::to_string(i) + " has length " +
                             std::to_string(pred[i].size()) + " vs " + std::to_string(actual[i].size()));
        }
    }
}

double percent(const char* metric, double num, double den) {
    if (den == 0.0) throw DegenerateDataset(std::string(metric) + ": zero denominator");
    return num / den * 100.0;
}

}  // namespace

double smace(std::span<const CumulativeTimeline> pred_cum, std::span<const DailyTimeline> actual_daily) {
    check_pairs("smace", pred_cum, actual_daily);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred_cum.size(); ++i) {
        double run = 0.0;
        for (std::size_t h = 0; h < pred_cum[i].size(); ++h) {
            run += actual_daily[i][h];
            num += std::abs(pred_cum[i][h] - run);
            den += actual_daily[i][h];
        }
    }
    return percent("smace", num, den);
}

double wmape(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> actual) {
    check_pairs("wmape", pred, actual);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t k = 0; k < pred[i].size(); ++k) {
            num += std::abs(pred[i][k] - actual[i][k]);
            den += actual[i][k];
        }
    }
    return percent("wmape", num, den);
}

double bias(std::span<const std::vector<double>> pred, std::span<const std::vector<double>> actual) {
    check_pairs("bias", pred, actual);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t k = 0; k < pred[i].size(); ++k) {
            num += pred[i][k] - actual[i][k];
            den += actual[i][k];
        }
    }
    return percent("bias", num, den);
}

double kappa(std::span<const RolloutResult> rollouts,
             std::span<const std::vector<std::vector<double>>> actual_inventory, bool floor_capacity) {
    if (rollouts.size() != actual_inventory.size()) {
        throw ShapeError("kappa: " + std::to_string(rollouts.size()) + " rollouts for " +
                         std::to_string(actual_inventory.size()) + " inventory sets");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < rollouts.size(); ++s) {
        const auto& nodes = rollouts[s].nodes;
        if (nodes.size() != actual_inventory[s].size()) throw ShapeError("kappa: node count mismatch");
        for (std::size_t v = 0; v < nodes.size(); ++v) {
            for (std::size_t w = 0; w < nodes[v].capacity.size(); ++w) {
                const double y = floor_capacity ? std::max(nodes[v].capacity[w], 0.0) : nodes[v].capacity[w];
                num += std::max(0.0, nodes[v].outgoing_unclipped[w] - y);
            }
            for (double x : actual_inventory[s][v]) den += x;
        }
    }
    return percent("kappa", num, den);
}

void PenaltyFunction::validate() const {
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("penalty costs must be positive");
    if (eta1 < 0.0 || eta1 > 1.0 || eta3 < 0.0 || eta3 > 1.0) {
        throw std::invalid_argument("linear-weighted growth must lie in [0, 1]");
    }
    if (!(eta2 > 0.0 && eta2 < 1.0) || !(eta4 > 0.0 && eta4 < 1.0)) {
        throw std::invalid_argument("geometric decay must lie in (0, 1)");
    }
}

double PenaltyFunction::step(int j) const {
    if (j == 0) return 0.0;
    const bool late = j > 0;
    const double n = std::abs(j) - 1;
    switch (kind) {
        case Kind::Linear: return late ? c1 : c2;
        case Kind::LinearWeighted: return late ? c1 * (1.0 + eta1 * n) : c2 * (1.0 + eta3 * n);
        case Kind::Geometric: return late ? c1 * std::pow(eta2, n) : c2 * std::pow(eta4, n);
    }
    return 0.0;
}

double PenaltyFunction::operator()(int delta) const {
    double total = 0.0;
    if (delta > 0)
        for (int j = 1; j <= delta; ++j) total += step(j);
    else
        for (int j = delta; j <= -1; ++j) total += step(j);
    return total;
}

double generalized_smace(std::span<const AlignedEvent> events, const PenaltyFunction& penalty) {
    penalty.validate();
    double num = 0.0, den = 0.0;
    for (const auto& e : events) {
        double expected = 0.0;
        for (const auto& [d, p] : e.delta) expected += p * penalty(d);
        num += e.quantity * expected;
        den += e.quantity;
    }
    return percent("generalized smace", num, den);
}

std::vector<AlignedEvent> align_events(std::span<const double> pred_daily, std::span<const double> actual_daily) {
    if (pred_daily.size() != actual_daily.size()) throw ShapeError("align_events: length mismatch");
    const int horizon = static_cast<int>(actual_daily.size());
    std::vector<AlignedEvent> out;
    std::size_t p = 0;
    double p_left = pred_daily.empty() ? 0.0 : pred_daily[0];
    for (std::size_t a = 0; a < actual_daily.size(); ++a) {
        const double qty = actual_daily[a];
        if (qty <= 0.0) continue;
        AlignedEvent ev;
        ev.quantity = qty;
        double need = qty;
        while (need > 0.0) {
            while (p < pred_daily.size() && p_left <= 0.0) {
                ++p;
                p_left = p < pred_daily.size() ? pred_daily[p] : 0.0;
            }
            const int delta = p < pred_daily.size() ? static_cast<int>(p) - static_cast<int>(a) : horizon - static_cast<int>(a);
            const double take = p < pred_daily.size() ? std::min(need, p_left) : need;
            if (!ev.delta.empty() && ev.delta.back().first == delta)
                ev.delta.back().second += take / qty;
            else
                ev.delta.emplace_back(delta, take / qty);
            need -= take;
            if (p < pred_daily.size()) p_left -= take;
        }
        out.push_back(std::move(ev));
    }
    return out;
}

void write_metrics_csv(std::ostream& os, const MetricTable& table) {
    os << "metric,value\n";
    for (const auto& [k, v] : table) os << k << ',' << std::setprecision(10) << v << '\n';
}

void write_metrics_text(std::ostream& os, const MetricTable& table) {
    std::size_t width = 0;
    for (const auto& row : table) width = std::max(width, row.first.size());
    for (const auto& [k, v] : table) {
        os << std::left << std::setw(static_cast<int>(width) + 2) << k << std::right << std::fixed
           << std::setprecision(3) << v << '\n';
    }
    os.unsetf(std::ios::fixed);
}

}  // namespace supplycast
