#include "supplycast/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "supplycast/errors.hpp"

namespace supplycast {

namespace {

std::vector<double> one_hot(int k, int horizon) {
    std::vector<double> p(static_cast<std::size_t>(horizon), 0.0);
    p[static_cast<std::size_t>(std::clamp(k, 0, horizon - 1))] = 1.0;
    return p;
}

void check_distribution(const std::vector<double>& p, int horizon) {
    if (p.size() != static_cast<std::size_t>(horizon)) {
        throw std::invalid_argument("lead-time distribution has " + std::to_string(p.size()) + " entries, expected " +
                                    std::to_string(horizon));
    }
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("lead-time probabilities must be non-negative");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("lead-time probabilities sum to " + std::to_string(total));
}

std::vector<double> smoothed(const std::vector<double>& counts, double smoothing) {
    double total = 0.0;
    for (double c : counts) total += c + smoothing;
    std::vector<double> p(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) p[k] = (counts[k] + smoothing) / total;
    return p;
}

}  // namespace

LeadTimeModel::LeadTimeModel(int horizon_days, int fallback_lead)
    : horizon_(horizon_days), fallback_lead_(fallback_lead) {
    if (horizon_days <= 0) throw std::invalid_argument("lead-time horizon must be positive");
    fallback_ = one_hot(fallback_lead, horizon_days);
}

const std::vector<double>& LeadTimeModel::distribution(const std::string& sku, const NodeId& src,
                                                       const NodeId& dst) const {
    if (auto it = edges_.find({sku, src, dst}); it != edges_.end()) return it->second;
    if (auto it = pooled_.find(sku); it != pooled_.end()) return it->second;
    return fallback_;
}

const std::vector<double>& LeadTimeModel::distribution(const NetworkSnapshot& snapshot, std::size_t edge) const {
    const auto& e = snapshot.graph.edges()[edge];
    return distribution(snapshot.graph.sku(), snapshot.graph.node(e.src), snapshot.graph.node(e.dst));
}

LeadTimeModel::Source LeadTimeModel::source(const std::string& sku, const NodeId& src, const NodeId& dst) const {
    if (edges_.contains({sku, src, dst})) return Source::Edge;
    if (pooled_.contains(sku)) return Source::Pooled;
    return Source::Fallback;
}

void LeadTimeModel::set_edge(const LeadTimeKey& key, std::vector<double> p) {
    check_distribution(p, horizon_);
    edges_[key] = std::move(p);
}

void LeadTimeModel::set_pooled(const std::string& sku, std::vector<double> p) {
    check_distribution(p, horizon_);
    pooled_[sku] = std::move(p);
}

std::string LeadTimeModel::to_json() const {
    nlohmann::json j;
    j["format"] = "supplycast-leadtime";
    j["version"] = 1;
    j["horizon_days"] = horizon_;
    j["fallback_lead"] = fallback_lead_;
    j["edges"] = nlohmann::json::array();
    for (const auto& [k, p] : edges_) j["edges"].push_back({{"sku", k.sku}, {"src", k.src}, {"dst", k.dst}, {"p", p}});
    j["pooled"] = nlohmann::json::array();
    for (const auto& [sku, p] : pooled_) j["pooled"].push_back({{"sku", sku}, {"p", p}});
    return j.dump(2);
}

LeadTimeModel LeadTimeModel::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("format", "") != "supplycast-leadtime") throw DataError("not a lead-time model file");
        LeadTimeModel m(j.at("horizon_days").get<int>(), j.at("fallback_lead").get<int>());
        for (const auto& e : j.at("edges")) {
            m.set_edge({e.at("sku"), e.at("src"), e.at("dst")}, e.at("p").get<std::vector<double>>());
        }
        for (const auto& e : j.at("pooled")) m.set_pooled(e.at("sku"), e.at("p").get<std::vector<double>>());
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("lead-time model: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("lead-time model: ") + e.what());
    }
}

void LeadTimeModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json() << '\n';
}

LeadTimeModel LeadTimeModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

LeadTimeModel fit_leadtime(std::span<const LeadTimeRecord> records, const LeadTimeFitOptions& options) {
    const int h = options.horizon_days;
    std::map<LeadTimeKey, std::vector<double>> edge_counts;
    std::map<std::string, std::vector<double>> sku_counts;
    std::vector<int> leads;
    for (const auto& r : records) {
        const int lead = days_between(r.ship, r.receive);
        if (lead < 0) {
            throw DataError("negative lead time " + std::to_string(lead) + " on edge " + r.sku + ":" + r.src + "->" +
                            r.dst);
        }
        const auto k = static_cast<std::size_t>(std::min(lead, h - 1));
        auto& ec = edge_counts[{r.sku, r.src, r.dst}];
        auto& sc = sku_counts[r.sku];
        if (ec.empty()) ec.assign(static_cast<std::size_t>(h), 0.0);
        if (sc.empty()) sc.assign(static_cast<std::size_t>(h), 0.0);
        ec[k] += 1.0;
        sc[k] += 1.0;
        leads.push_back(static_cast<int>(k));
    }
    int fallback = options.default_lead;
    if (!leads.empty()) {
        std::sort(leads.begin(), leads.end());
        fallback = leads[(leads.size() - 1) / 2];
    }
    LeadTimeModel model(h, fallback);
    for (const auto& [key, c] : edge_counts) model.set_edge(key, smoothed(c, options.smoothing));
    for (const auto& [sku, c] : sku_counts) model.set_pooled(sku, smoothed(c, options.smoothing));
    return model;
}

DailyTimeline receive_convolve(std::span<const double> daily, std::span<const double> lt) {
    const std::size_t horizon = daily.size();
    DailyTimeline out(horizon, 0.0);
    for (std::size_t h = 0; h < horizon; ++h) {
        if (daily[h] == 0.0) continue;
        for (std::size_t k = 0; k < lt.size() && h + k < horizon; ++k) out[h + k] += daily[h] * lt[k];
    }
    return out;
}

DailyTimeline in_transit_arrivals(const EdgeState& edge, std::span<const double> lt, int horizon) {
    DailyTimeline out(static_cast<std::size_t>(horizon), 0.0);
    for (const auto& s : edge.in_transit) {
        const int elapsed = std::max(0, -s.day);
        double remaining = 0.0;
        for (std::size_t k = static_cast<std::size_t>(elapsed); k < lt.size(); ++k) remaining += lt[k];
        if (remaining <= 0.0) {
            out[0] += s.quantity;
            continue;
        }
        for (std::size_t k = static_cast<std::size_t>(elapsed); k < lt.size(); ++k) {
            const int day = static_cast<int>(k) - elapsed;
            if (day < horizon) out[static_cast<std::size_t>(day)] += s.quantity * lt[k] / remaining;
        }
    }
    return out;
}

std::vector<DailyTimeline> EventSet::daily(int horizon) const {
    std::vector<DailyTimeline> out;
    out.reserve(quantities.size());
    for (const auto& events : quantities) {
        DailyTimeline total(static_cast<std::size_t>(horizon), 0.0);
        for (const auto& q : events) {
            for (std::size_t h = 0; h < q.size(); ++h) total[h] += q[h];
        }
        out.push_back(std::move(total));
    }
    return out;
}

EventSet build_event_set(const NetworkSnapshot& snapshot, const std::vector<std::vector<EventPrediction>>& preds) {
    if (preds.size() != snapshot.graph.edge_count()) {
        throw ShapeError("predictions for " + std::to_string(preds.size()) + " edges, graph has " +
                         std::to_string(snapshot.graph.edge_count()));
    }
    const int horizon = snapshot.horizon_days;
    EventSet set;
    set.quantities.resize(preds.size());
    for (std::size_t e = 0; e < preds.size(); ++e) {
        const auto& planned = snapshot.edge_states[e].planned;
        for (const auto& pred : preds[e]) {
            if (pred.event >= planned.size()) {
                throw ShapeError("prediction for event " + std::to_string(pred.event) + " on edge " +
                                 std::to_string(e) + " with " + std::to_string(planned.size()) + " planned events");
            }
            const auto& ev = planned[pred.event];
            EventPrediction adjusted = pred;
            adjusted.delta = redistribute_infeasible(pred.delta, ev.day);
            const auto pi = event_time_distribution(adjusted, ev.day, horizon);
            set.lost_mass += adjusted.multiplier * ev.quantity * out_of_horizon_mass(adjusted, ev.day, horizon);
            set.quantities[e].push_back(event_quantity_vector(adjusted, pi, ev.quantity));
        }
    }
    return set;
}

EventSet planned_event_set(const NetworkSnapshot& snapshot) {
    std::vector<std::vector<EventPrediction>> preds(snapshot.graph.edge_count());
    for (std::size_t e = 0; e < preds.size(); ++e) {
        for (std::size_t i = 0; i < snapshot.edge_states[e].planned.size(); ++i) {
            EventPrediction p;
            p.event = i;
            preds[e].push_back(p);
        }
    }
    return build_event_set(snapshot, preds);
}

std::vector<std::vector<double>> RolloutResult::weekly_inventory() const {
    std::vector<std::vector<double>> out;
    for (const auto& n : nodes) out.emplace_back(n.inventory.begin(), n.inventory.end() - 1);
    return out;
}

namespace {

// Everything about a snapshot that stays fixed while event quantities move.
struct RolloutContext {
    const NetworkSnapshot& snapshot;
    std::size_t weeks = 0;
    std::vector<std::vector<double>> lt;              // per edge
    std::vector<std::vector<double>> transit_weekly;  // per node
    std::vector<std::vector<std::size_t>> out_edges;  // per node

    RolloutContext(const NetworkSnapshot& s, const LeadTimeModel& model) : snapshot(s) {
        if (model.horizon_days() != s.horizon_days) {
            throw ShapeError("lead-time horizon " + std::to_string(model.horizon_days()) + " does not match snapshot horizon " +
                             std::to_string(s.horizon_days));
        }
        weeks = static_cast<std::size_t>(s.horizon_weeks());
        const auto& g = s.graph;
        transit_weekly.assign(g.node_count(), std::vector<double>(weeks, 0.0));
        out_edges.resize(g.node_count());
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            lt.push_back(model.distribution(s, e));
            const auto arrivals = weekly_bucket(in_transit_arrivals(s.edge_states[e], lt.back(), s.horizon_days));
            for (std::size_t w = 0; w < weeks; ++w) transit_weekly[g.edges()[e].dst][w] += arrivals[w];
            out_edges[g.edges()[e].src].push_back(e);
        }
    }

    // Weekly incoming supply per node implied by the current timelines.
    std::vector<std::vector<double>> incoming(const std::vector<DailyTimeline>& daily) const {
        auto s = transit_weekly;
        for (std::size_t e = 0; e < daily.size(); ++e) {
            const auto recv = weekly_bucket(receive_convolve(daily[e], lt[e]));
            for (std::size_t w = 0; w < weeks; ++w) s[snapshot.graph.edges()[e].dst][w] += recv[w];
        }
        return s;
    }
};

void check_events(const NetworkSnapshot& snapshot, const EventSet& events) {
    if (events.quantities.size() != snapshot.graph.edge_count()) {
        throw ShapeError("event set covers " + std::to_string(events.quantities.size()) + " edges, graph has " +
                         std::to_string(snapshot.graph.edge_count()));
    }
    for (const auto& edge : events.quantities) {
        for (const auto& q : edge) {
            if (q.size() != static_cast<std::size_t>(snapshot.horizon_days)) {
                throw ShapeError("event timeline of length " + std::to_string(q.size()) + " for horizon " +
                                 std::to_string(snapshot.horizon_days));
            }
        }
    }
}

double week_mass(const DailyTimeline& q, std::size_t w) {
    double m = 0.0;
    for (std::size_t h = 7 * w; h < 7 * w + 7; ++h) m += q[h];
    return m;
}

// One sequential pass over the weeks. With `refresh`, incoming supply for
// week w is recomputed from the timelines as adjusted so far in this pass;
// otherwise it comes from the timelines the pass started with.
RolloutResult weekly_pass(const RolloutContext& ctx, EventSet events, bool clip, bool refresh) {
    const auto& s = ctx.snapshot;
    const std::size_t n = s.graph.node_count();
    RolloutResult r;
    r.nodes.resize(n);
    std::vector<double> inv(n);
    for (std::size_t v = 0; v < n; ++v) {
        auto& node = r.nodes[v];
        inv[v] = s.node_states[v].inventory_start;
        node.inventory.push_back(inv[v]);
        node.demand = s.node_states[v].demand_forecast;
    }
    auto incoming = ctx.incoming(events.daily(s.horizon_days));
    for (std::size_t w = 0; w < ctx.weeks; ++w) {
        if (refresh && w > 0) incoming = ctx.incoming(events.daily(s.horizon_days));
        for (std::size_t v = 0; v < n; ++v) {
            auto& node = r.nodes[v];
            const double supply = incoming[v][w];
            const double y = inv[v] + supply - node.demand[w];
            double a = 0.0;
            for (auto e : ctx.out_edges[v])
                for (const auto& q : events.quantities[e]) a += week_mass(q, w);
            double shipped = a;
            if (clip && a > y && a > 0.0) {
                const double ratio = y > 0.0 ? y / a : 0.0;
                for (auto e : ctx.out_edges[v])
                    for (auto& q : events.quantities[e])
                        for (std::size_t h = 7 * w; h < 7 * w + 7; ++h) q[h] *= ratio;
                shipped = y > 0.0 ? y : 0.0;
                ++r.clip_count;
            }
            node.incoming.push_back(supply);
            node.capacity.push_back(y);
            node.outgoing_unclipped.push_back(a);
            node.outgoing.push_back(shipped);
            inv[v] = y - shipped;
            node.inventory.push_back(inv[v]);
        }
    }
    r.daily = events.daily(s.horizon_days);
    r.events = std::move(events);
    return r;
}

}  // namespace

RolloutResult rollout_inventory(const NetworkSnapshot& snapshot, EventSet events, const LeadTimeModel& lt, bool clip) {
    check_events(snapshot, events);
    RolloutContext ctx(snapshot, lt);
    return weekly_pass(ctx, std::move(events), clip, false);
}

RolloutResult rollout_inventory(const NetworkSnapshot& snapshot,
                                const std::vector<std::vector<EventPrediction>>& preds, const LeadTimeModel& lt,
                                bool clip) {
    return rollout_inventory(snapshot, build_event_set(snapshot, preds), lt, clip);
}

ConstrainedResult constrained_inference(const NetworkSnapshot& snapshot, EventSet events, const LeadTimeModel& lt,
                                        const InferenceOptions& options) {
    if (!(options.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (options.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    check_events(snapshot, events);
    RolloutContext ctx(snapshot, lt);

    ConstrainedResult out;
    out.rollout = weekly_pass(ctx, std::move(events), options.clip_in_rollout, false);
    for (int iter = 1; iter <= options.max_iters; ++iter) {
        auto next = weekly_pass(ctx, out.rollout.events, true, true);
        double rho = 0.0;
        const auto& prev = out.rollout.daily;
        for (std::size_t e = 0; e < prev.size(); ++e) {
            double diff = 0.0, norm = 0.0;
            for (std::size_t h = 0; h < prev[e].size(); ++h) {
                diff += (next.daily[e][h] - prev[e][h]) * (next.daily[e][h] - prev[e][h]);
                norm += prev[e][h] * prev[e][h];
            }
            if (norm > 0.0) rho += std::sqrt(diff) / std::sqrt(norm);
        }
        if (!prev.empty()) rho /= static_cast<double>(prev.size());
        next.events.lost_mass = out.rollout.events.lost_mass;
        out.rollout = std::move(next);
        out.rho.push_back(rho);
        if (rho < options.epsilon) {
            out.converged = true;
            break;
        }
    }
    return out;
}

void write_rollout_csv(std::ostream& os, const NetworkGraph& graph, const RolloutResult& result) {
    os << "node,week,inventory_start,incoming,outgoing,capacity,outgoing_unclipped,inventory_end\n";
    for (std::size_t v = 0; v < result.nodes.size(); ++v) {
        const auto& n = result.nodes[v];
        for (std::size_t w = 0; w < n.incoming.size(); ++w) {
            os << graph.node(v) << ',' << w << ',' << n.inventory[w] << ',' << n.incoming[w] << ',' << n.outgoing[w]
               << ',' << n.capacity[w] << ',' << n.outgoing_unclipped[w] << ',' << n.inventory[w + 1] << '\n';
        }
    }
}

ad::Var convolve_rows(ad::Var daily, const ad::Tensor& kernels) {
    const auto& dv = daily.value();
    if (kernels.rows() != dv.rows()) {
        throw ShapeError("convolve_rows: timelines " + dv.shape_string() + " with kernels " + kernels.shape_string());
    }
    const std::size_t horizon = dv.cols(), klen = kernels.cols();
    ad::Tensor out(dv.rows(), horizon, 0.0);
    for (std::size_t e = 0; e < dv.rows(); ++e)
        for (std::size_t h = 0; h < horizon; ++h)
            for (std::size_t k = 0; k < klen && h + k < horizon; ++k) out(e, h + k) += dv(e, h) * kernels(e, k);
    const auto id = daily.id();
    return daily.tape()->record(std::move(out), {daily}, [id, kernels, horizon, klen](ad::Tape& t, std::size_t self) {
        const auto& g = t.grad_buffer(self);
        auto& gd = t.grad_buffer(id);
        for (std::size_t e = 0; e < gd.rows(); ++e)
            for (std::size_t h = 0; h < horizon; ++h)
                for (std::size_t k = 0; k < klen && h + k < horizon; ++k) gd(e, h) += g(e, h + k) * kernels(e, k);
    });
}

ad::Var clip_ratio(ad::Var capacity, ad::Var outgoing) {
    const auto& y = capacity.value();
    const auto& a = outgoing.value();
    if (y.shape() != a.shape()) {
        throw ShapeError("clip_ratio: incompatible shapes " + y.shape_string() + " and " + a.shape_string());
    }
    ad::Tensor out(y.rows(), y.cols(), 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (a[i] > y[i]) out[i] = y[i] > 0.0 ? y[i] / a[i] : 0.0;
    }
    const auto iy = capacity.id(), ia = outgoing.id();
    return capacity.tape()->record(std::move(out), {capacity, outgoing}, [iy, ia](ad::Tape& t, std::size_t self) {
        const auto& g = t.grad_buffer(self);
        const auto& yv = t.value(iy);
        const auto& av = t.value(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!(av[i] > yv[i] && yv[i] > 0.0)) continue;
            if (t.requires_grad(iy)) t.grad_buffer(iy)[i] += g[i] / av[i];
            if (t.requires_grad(ia)) t.grad_buffer(ia)[i] -= g[i] * yv[i] / (av[i] * av[i]);
        }
    });
}

}  // namespace supplycast
