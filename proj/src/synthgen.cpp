#include "supplycast/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "supplycast/event_model.hpp"

namespace supplycast {

void DeviationSpec::validate() const {
    auto check_shift = [](const Shift& s) {
        double total = 0.0;
        for (const auto& [d, p] : s) {
            if (d < kMinDelta || d > kMaxDelta) throw std::invalid_argument("shift outside [-7, 7]");
            if (!(p >= 0.0)) throw std::invalid_argument("shift probabilities must be non-negative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("shift probabilities must sum to 1");
    };
    check_shift(shift);
    for (const auto& [edge, s] : edge_shift) check_shift(s);
    if (!(ratio_mean > 0.0 && ratio_mean <= 2.0)) throw std::invalid_argument("ratio mean must lie in (0, 2]");
    if (!(ratio_spread >= 0.0) || ratio_mean - ratio_spread < 0.0) {
        throw std::invalid_argument("ratio spread must keep ratios non-negative");
    }
    double total = 0.0;
    for (double p : lead_time) {
        if (!(p >= 0.0)) throw std::invalid_argument("lead-time probabilities must be non-negative");
        total += p;
    }
    if (lead_time.empty() || std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("lead-time probabilities must sum to 1");
    if (!(demand_noise >= 0.0)) throw std::invalid_argument("demand noise must be non-negative");
}

DeviationSpec DeviationSpec::none() {
    DeviationSpec d;
    d.demand_noise = 0.0;
    return d;
}

namespace {

enum class Layer { Plant, Dc, Retailer };

struct Layout {
    std::size_t plants = 0, dcs = 0, retailers = 0;
};

Layout layout_for(std::size_t n) {
    Layout l;
    l.plants = std::max<std::size_t>(1, n / 6);
    l.dcs = n >= 3 ? std::max<std::size_t>(1, n / 3) : 0;
    if (l.plants + l.dcs >= n) l.dcs = n - l.plants - 1;
    l.retailers = n - l.plants - l.dcs;
    return l;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), 0x53u};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

int draw(const std::vector<double>& p, std::mt19937_64& rng) {
    std::discrete_distribution<int> d(p.begin(), p.end());
    return d(rng);
}

int draw_shift(const DeviationSpec::Shift& s, std::mt19937_64& rng) {
    std::vector<double> p;
    for (const auto& e : s) p.push_back(e.second);
    return s[static_cast<std::size_t>(draw(p, rng))].first;
}

}  // namespace

NetworkGraph generate_network(std::size_t n_nodes, std::size_t n_edges, std::uint64_t seed, const std::string& sku) {
    if (n_nodes < 2) throw std::invalid_argument("a network needs at least 2 nodes");
    const auto l = layout_for(n_nodes);
    std::vector<NodeId> names;
    std::vector<Layer> layer;
    for (std::size_t i = 0; i < l.plants; ++i) names.push_back("P" + std::to_string(i)), layer.push_back(Layer::Plant);
    for (std::size_t i = 0; i < l.dcs; ++i) names.push_back("D" + std::to_string(i)), layer.push_back(Layer::Dc);
    for (std::size_t i = 0; i < l.retailers; ++i) names.push_back("R" + std::to_string(i)), layer.push_back(Layer::Retailer);

    const std::size_t min_edges = n_nodes - l.plants;
    const std::size_t max_edges = l.plants * l.dcs + l.plants * l.retailers + l.dcs * l.retailers;
    if (n_edges < min_edges || n_edges > max_edges) {
        throw std::invalid_argument("cannot build " + std::to_string(n_edges) + " edges on " + std::to_string(n_nodes) +
                                    " nodes; feasible range is " + std::to_string(min_edges) + ".." +
                                    std::to_string(max_edges));
    }

    std::mt19937_64 rng(seed);
    std::vector<std::vector<bool>> used(n_nodes, std::vector<bool>(n_nodes, false));
    std::vector<Edge> edges;
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi - 1)(rng);
    };
    for (std::size_t v = l.plants; v < n_nodes; ++v) {
        std::size_t parent;
        if (layer[v] == Layer::Dc || l.dcs == 0) parent = pick(0, l.plants);
        else parent = pick(l.plants, l.plants + l.dcs);
        used[parent][v] = true;
        edges.push_back({parent, v});
    }
    std::vector<Edge> candidates;
    for (std::size_t a = 0; a < n_nodes; ++a)
        for (std::size_t b = 0; b < n_nodes; ++b)
            if (static_cast<int>(layer[a]) < static_cast<int>(layer[b]) && !used[a][b]) candidates.push_back({a, b});
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (std::size_t k = 0; edges.size() < n_edges; ++k) edges.push_back(candidates[k]);
    return NetworkGraph(sku, names, std::move(edges));
}

namespace {

struct Shipment {
    std::size_t edge = 0;
    int planned_day = 0;
    double planned_qty = 0.0;
    int ship_day = 0;
    double qty = 0.0;  ///< after the stock cap
    int lead = 0;
};

}  // namespace

Dataset generate_history(const NetworkGraph& graph, int weeks, const DeviationSpec& deviation, std::uint64_t seed,
                         const HistoryOptions& options) {
    deviation.validate();
    if (weeks < 1) throw std::invalid_argument("weeks must be at least 1");
    if (options.horizon_days <= 0 || options.horizon_days % 7 != 0) {
        throw std::invalid_argument("horizon must be a positive multiple of 7");
    }
    if (options.min_cadence < 1 || options.max_cadence < options.min_cadence) {
        throw std::invalid_argument("invalid cadence range");
    }
    const int horizon = options.horizon_days;
    const int hweeks = horizon / 7;
    const int first = options.warmup_days;
    const int days = first + weeks * 7 + horizon + 14;
    const std::size_t n = graph.node_count(), m = graph.edge_count();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Layer of each node from its id prefix.
    std::vector<char> kind(n);
    for (std::size_t v = 0; v < n; ++v) kind[v] = graph.node(v).empty() ? 'R' : graph.node(v)[0];

    // Steady-state daily flow per edge, pulled from retailer demand.
    std::vector<double> base_demand(n, 0.0), flow(m, 0.0), outflow(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        if (graph.out_edges(v).empty()) base_demand[v] = 20.0 + 80.0 * unit(rng);
    std::vector<double> need = base_demand;
    // Nodes are stored plants, DCs, retailers, so a reverse sweep sees every
    // child before its parents.
    for (std::size_t vi = n; vi-- > 0;) {
        const auto in = graph.in_edges(vi);
        if (in.empty() || need[vi] <= 0.0) continue;
        std::vector<double> w;
        for (std::size_t k = 0; k < in.size(); ++k) w.push_back(0.5 + unit(rng));
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t k = 0; k < in.size(); ++k) {
            const auto e = in[k];
            flow[e] = need[vi] * w[k] / total;
            need[graph.edges()[e].src] += flow[e];
            outflow[graph.edges()[e].src] += flow[e];
        }
    }

    // Actual daily demand with mild day-to-day variation.
    std::vector<std::vector<double>> demand(n, std::vector<double>(static_cast<std::size_t>(days), 0.0));
    for (std::size_t v = 0; v < n; ++v)
        for (int d = 0; d < days; ++d) demand[v][d] = base_demand[v] * (0.8 + 0.4 * unit(rng));

    // Plans and their execution.
    std::vector<Shipment> shipments;
    for (std::size_t e = 0; e < m; ++e) {
        if (flow[e] <= 0.0) continue;
        const int cadence = std::uniform_int_distribution<int>(options.min_cadence, options.max_cadence)(rng);
        const int phase = std::uniform_int_distribution<int>(0, cadence - 1)(rng);
        const auto& ed = graph.edges()[e];
        const auto key = std::make_pair(graph.node(ed.src), graph.node(ed.dst));
        const auto& shift = deviation.edge_shift.contains(key) ? deviation.edge_shift.at(key) : deviation.shift;
        for (int d = phase; d < days; d += cadence) {
            Shipment s;
            s.edge = e;
            s.planned_day = d;
            s.planned_qty = std::round(flow[e] * cadence);
            s.ship_day = std::max(0, d + draw_shift(shift, rng));
            const double ratio = deviation.ratio_mean + deviation.ratio_spread * (2.0 * unit(rng) - 1.0);
            s.qty = s.planned_qty * ratio;
            s.lead = draw(deviation.lead_time, rng);
            shipments.push_back(s);
        }
    }
    std::stable_sort(shipments.begin(), shipments.end(),
                     [](const Shipment& a, const Shipment& b) { return a.ship_day < b.ship_day; });

    // Day-by-day stock simulation. Plants start with enough stock for the
    // whole run; other nodes with stock_cover weeks of their outflow.
    std::vector<double> inv(n);
    for (std::size_t v = 0; v < n; ++v) {
        inv[v] = graph.in_edges(v).empty() ? 1.5 * outflow[v] * days
                                           : options.stock_cover * 7.0 * (outflow[v] + base_demand[v]);
        inv[v] = std::round(inv[v]);
    }
    std::vector<std::vector<double>> start_inv(n, std::vector<double>(static_cast<std::size_t>(days) + 1, 0.0));
    std::vector<std::vector<double>> receipts(n, std::vector<double>(static_cast<std::size_t>(days) + 64, 0.0));
    std::size_t next = 0;
    for (int d = 0; d < days; ++d) {
        for (std::size_t v = 0; v < n; ++v) start_inv[v][d] = inv[v];
        for (std::size_t v = 0; v < n; ++v) inv[v] += receipts[v][d] - demand[v][d];
        for (; next < shipments.size() && shipments[next].ship_day == d; ++next) {
            auto& s = shipments[next];
            const auto& ed = graph.edges()[s.edge];
            s.qty = std::min(s.qty, std::max(0.0, inv[ed.src]));
            inv[ed.src] -= s.qty;
            const int arrive = d + s.lead;
            if (arrive == d) inv[ed.dst] += s.qty;  // same-day receipts are usable today
            else receipts[ed.dst][static_cast<std::size_t>(arrive)] += s.qty;
        }
    }
    for (std::size_t v = 0; v < n; ++v) start_inv[v][days] = inv[v];

    Dataset ds;
    ds.horizon_days = horizon;
    const auto start = parse_date(options.start_date);
    int lead_mode = 0;
    for (std::size_t k = 0; k < deviation.lead_time.size(); ++k)
        if (deviation.lead_time[k] > deviation.lead_time[static_cast<std::size_t>(lead_mode)]) lead_mode = static_cast<int>(k);

    for (const auto& s : shipments) {
        if (s.ship_day + s.lead >= days) continue;
        const auto& ed = graph.edges()[s.edge];
        ds.leadtime_log.push_back({graph.sku(), graph.node(ed.src), graph.node(ed.dst), add_days(start, s.ship_day),
                                   add_days(start, s.ship_day + s.lead)});
    }

    std::lognormal_distribution<double> noise(-0.5 * deviation.demand_noise * deviation.demand_noise,
                                              deviation.demand_noise);
    for (int t = first; t <= first + (weeks - 1) * 7 && t + horizon <= days; t += options.stride_days) {
        NetworkSnapshot snap;
        snap.graph = graph;
        snap.prediction_time = add_days(start, t);
        snap.horizon_days = horizon;
        snap.edge_states.resize(m);
        snap.label_daily_outgoing.assign(m, std::vector<double>(static_cast<std::size_t>(horizon), 0.0));
        for (const auto& s : shipments) {
            auto& es = snap.edge_states[s.edge];
            if (s.ship_day >= t && s.planned_day < t + horizon) {
                es.planned.push_back({std::max(0, s.planned_day - t), s.planned_qty});
            }
            if (s.ship_day >= t && s.ship_day < t + horizon) {
                snap.label_daily_outgoing[s.edge][static_cast<std::size_t>(s.ship_day - t)] += s.qty;
            }
            if (s.ship_day < t && s.ship_day >= t - options.history_days && s.qty > 0.0) {
                es.history.push_back({s.ship_day - t, s.qty});
            }
            if (s.ship_day < t && s.ship_day + s.lead >= t && s.qty > 0.0) {
                es.in_transit.push_back({s.ship_day - t, s.qty});
            }
        }
        for (auto& es : snap.edge_states) {
            std::stable_sort(es.planned.begin(), es.planned.end(),
                             [](const PlannedEvent& a, const PlannedEvent& b) { return a.day < b.day; });
            std::stable_sort(es.history.begin(), es.history.end(),
                             [](const ShipmentRecord& a, const ShipmentRecord& b) { return a.day > b.day; });
        }

        snap.node_states.resize(n);
        snap.label_weekly_inventory.assign(n, std::vector<double>(static_cast<std::size_t>(hweeks), 0.0));
        for (std::size_t v = 0; v < n; ++v) {
            auto& ns = snap.node_states[v];
            ns.inventory_start = start_inv[v][t];
            ns.demand_forecast.assign(static_cast<std::size_t>(hweeks), 0.0);
            ns.planned_incoming.assign(static_cast<std::size_t>(hweeks), 0.0);
            ns.planned_outgoing.assign(static_cast<std::size_t>(hweeks), 0.0);
            for (int w = 0; w < hweeks; ++w) {
                snap.label_weekly_inventory[v][w] = start_inv[v][t + 7 * w];
                double d = 0.0;
                for (int k = 0; k < 7; ++k) d += demand[v][t + 7 * w + k];
                ns.demand_forecast[w] = deviation.demand_noise > 0.0 && d > 0.0 ? d * noise(rng) : d;
            }
        }
        for (std::size_t e = 0; e < m; ++e) {
            const auto& ed = graph.edges()[e];
            const auto& es = snap.edge_states[e];
            for (const auto& p : es.planned) {
                snap.node_states[ed.src].planned_outgoing[static_cast<std::size_t>(p.day / 7)] += p.quantity;
                const int arrive = p.day + lead_mode;
                if (arrive < horizon) snap.node_states[ed.dst].planned_incoming[static_cast<std::size_t>(arrive / 7)] += p.quantity;
            }
            for (const auto& s : es.in_transit) {
                const int arrive = std::max(0, s.day + lead_mode);
                if (arrive < horizon) snap.node_states[ed.dst].planned_incoming[static_cast<std::size_t>(arrive / 7)] += s.quantity;
            }
        }
        for (auto& ns : snap.node_states) {
            double projected = ns.inventory_start;
            for (int w = 0; w + 1 < hweeks; ++w) {
                projected += ns.planned_incoming[w] - ns.demand_forecast[w] - ns.planned_outgoing[w];
                ns.planned_inventory.push_back(projected);
            }
        }
        ds.snapshots.push_back(std::move(snap));
    }
    attach_leadtime_history(ds);
    return ds;
}

Dataset generate_suite(const SuiteOptions& options) {
    if (options.skus < 1) throw std::invalid_argument("suite needs at least one SKU");
    if (options.min_nodes < 2 || options.max_nodes < options.min_nodes) throw std::invalid_argument("invalid node range");
    Dataset all;
    all.horizon_days = options.history.horizon_days;
    for (int k = 0; k < options.skus; ++k) {
        const auto seed = derive_seed(options.seed, static_cast<std::uint64_t>(k));
        std::mt19937_64 rng(seed);
        const auto nodes = std::uniform_int_distribution<std::size_t>(options.min_nodes, options.max_nodes)(rng);
        const auto l = layout_for(nodes);
        const std::size_t lo = nodes - l.plants;
        const std::size_t hi = std::min(l.plants * l.dcs + l.plants * l.retailers + l.dcs * l.retailers, lo + nodes / 2);
        const auto edges = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
        char name[16];
        std::snprintf(name, sizeof name, "SKU%03d", k);
        auto graph = generate_network(nodes, edges, rng(), name);
        auto history = options.history;
        history.sku = name;
        auto ds = generate_history(graph, options.weeks, options.deviation, rng(), history);
        for (auto& s : ds.snapshots) all.snapshots.push_back(std::move(s));
        for (auto& r : ds.leadtime_log) all.leadtime_log.push_back(std::move(r));
    }
    return all;
}

}  // namespace supplycast
