#include "supplycast/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "supplycast/errors.hpp"
#include "supplycast/features.hpp"
#include "supplycast/timeline.hpp"

namespace supplycast {

void ModelConfig::validate() const {
    if (horizon_days <= 0 || horizon_days % 7 != 0) throw std::invalid_argument("horizon must be a positive multiple of 7");
    if (history_depth < 0) throw std::invalid_argument("history depth must be non-negative");
    if (gat_widths.empty() || heads == 0) throw std::invalid_argument("encoder needs at least one layer and head");
    for (auto w : gat_widths)
        if (w == 0) throw std::invalid_argument("layer widths must be positive");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
}

void SkuScaler::fit(std::span<const NetworkSnapshot> snapshots) {
    for (const auto& s : snapshots) {
        const double m = max_planned_quantity(s);
        auto& slot = scales_[s.graph.sku()];
        slot = std::max(slot, m);
    }
    for (auto it = scales_.begin(); it != scales_.end();) {
        it = it->second > 0.0 ? std::next(it) : scales_.erase(it);
    }
}

double SkuScaler::scale(const NetworkSnapshot& snapshot) const {
    if (auto it = scales_.find(snapshot.graph.sku()); it != scales_.end()) return it->second;
    const double m = max_planned_quantity(snapshot);
    return m > 0.0 ? m : 1.0;
}

void SkuScaler::set(const std::string& sku, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    scales_[sku] = scale;
}

SupplyModel::SupplyModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config.validate();
    std::mt19937_64 rng(seed);
    const auto in = node_feature_dim(config.horizon_days);
    const auto edge = edge_feature_dim(config.history_depth);
    forward_ = make_gat_stack(params_, "gat_fwd", in, edge, config.gat_widths, config.heads, config.leaky_slope, rng);
    backward_ = make_gat_stack(params_, "gat_bwd", in, edge, config.gat_widths, config.heads, config.leaky_slope, rng);
    const auto pair = 2 * (forward_.output_dim() + backward_.output_dim());
    heads_ = make_event_heads(params_, pair, config.mlp_r_hidden, config.mlp_p_hidden, config.leaky_slope, rng);
}

std::vector<HeadOutputs> SupplyModel::run_heads(ad::Tape& tape, std::span<const ad::Var> params,
                                                const NetworkSnapshot& snapshot, double scale) const {
    if (snapshot.horizon_days != config_.horizon_days) {
        throw ShapeError("snapshot horizon " + std::to_string(snapshot.horizon_days) + " for a model of horizon " +
                         std::to_string(config_.horizon_days));
    }
    const auto graph = GraphIndex::from(snapshot.graph);
    auto x = tape.constant(node_features(snapshot, scale));
    std::vector<HeadOutputs> out;
    for (std::size_t i = 0; i < max_event_count(snapshot); ++i) {
        auto e = tape.constant(edge_features(snapshot, i, scale, config_.history_depth));
        auto u = embed_bidirectional(params, forward_, backward_, x, e, graph);
        auto pairs = ad::concat_cols({ad::gather_rows(u, graph.src), ad::gather_rows(u, graph.dst)});
        out.push_back(event_heads_forward(params, heads_, pairs));
    }
    return out;
}

std::vector<std::vector<EventScores>> SupplyModel::event_scores(const NetworkSnapshot& snapshot, double scale) const {
    ad::Tape tape;
    auto vars = params_.bind(tape, false);
    const auto outputs = run_heads(tape, vars, snapshot, scale);
    std::vector<std::vector<EventScores>> scores(snapshot.graph.edge_count());
    for (std::size_t e = 0; e < scores.size(); ++e) {
        for (std::size_t i = 0; i < snapshot.edge_states[e].planned.size(); ++i) {
            EventScores s;
            s.multiplier = outputs[i].multiplier.value()(e, 0);
            for (std::size_t k = 0; k < kDeltaCount; ++k) s.logits[k] = outputs[i].logits.value()(e, k);
            scores[e].push_back(s);
        }
    }
    return scores;
}

namespace {

nlohmann::json config_json(const ModelConfig& c) {
    return {{"horizon_days", c.horizon_days}, {"history_depth", c.history_depth}, {"gat_widths", c.gat_widths},
            {"heads", c.heads},           {"mlp_r_hidden", c.mlp_r_hidden},   {"mlp_p_hidden", c.mlp_p_hidden},
            {"temperature", c.temperature}, {"leaky_slope", c.leaky_slope}};
}

ModelConfig config_from(const nlohmann::json& j) {
    ModelConfig c;
    c.horizon_days = j.at("horizon_days");
    c.history_depth = j.at("history_depth");
    c.gat_widths = j.at("gat_widths").get<std::vector<std::size_t>>();
    c.heads = j.at("heads");
    c.mlp_r_hidden = j.at("mlp_r_hidden").get<std::vector<std::size_t>>();
    c.mlp_p_hidden = j.at("mlp_p_hidden").get<std::vector<std::size_t>>();
    c.temperature = j.at("temperature");
    c.leaky_slope = j.at("leaky_slope");
    return c;
}

}  // namespace

std::string SupplyModel::to_json(const SkuScaler& scaler) const {
    nlohmann::json j;
    j["format"] = "supplycast-checkpoint";
    j["version"] = 1;
    j["config"] = config_json(config_);
    j["scaler"] = scaler.scales();
    auto& params = j["params"] = nlohmann::json::array();
    for (std::size_t p = 0; p < params_.size(); ++p) {
        const auto& v = params_.value(p);
        params.push_back({{"name", params_.name(p)},
                          {"shape", {v.rows(), v.cols()}},
                          {"values", std::vector<double>(v.values().begin(), v.values().end())}});
    }
    return j.dump();
}

SupplyModel SupplyModel::from_json(const std::string& text, SkuScaler* scaler) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("format", "") != "supplycast-checkpoint") throw DataError("not a checkpoint file");
        if (j.at("version") != 1) throw DataError("unsupported checkpoint version");
        SupplyModel m(config_from(j.at("config")), 0);
        const auto& params = j.at("params");
        if (params.size() != m.params_.size()) throw DataError("checkpoint parameter count does not match its config");
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto& v = m.params_.value(p);
            if (params[p].at("name") != m.params_.name(p)) {
                throw DataError("checkpoint parameter " + params[p].at("name").get<std::string>() + " where " +
                                m.params_.name(p) + " was expected");
            }
            const auto values = params[p].at("values").get<std::vector<double>>();
            v = ad::Tensor(v.rows(), v.cols(), values);
        }
        if (scaler) {
            *scaler = SkuScaler{};
            for (const auto& [sku, s] : j.at("scaler").items()) scaler->set(sku, s.get<double>());
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    } catch (const ShapeError& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

void SupplyModel::save(const std::filesystem::path& path, const SkuScaler& scaler) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json(scaler) << '\n';
}

SupplyModel SupplyModel::load(const std::filesystem::path& path, SkuScaler* scaler) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), scaler);
}

ForwardResult forward(ad::Tape& tape, std::span<const ad::Var> params, const SupplyModel& model,
                      const NetworkSnapshot& snapshot, const LeadTimeModel& lt, double scale,
                      const ForwardOptions& options) {
    const int horizon = snapshot.horizon_days;
    const auto weeks = static_cast<std::size_t>(snapshot.horizon_weeks());
    const auto& g = snapshot.graph;
    const std::size_t n = g.node_count(), edges = g.edge_count();
    if (lt.horizon_days() != horizon) throw ShapeError("lead-time horizon does not match the snapshot");

    std::vector<std::size_t> src, dst;
    for (const auto& e : g.edges()) {
        src.push_back(e.src);
        dst.push_back(e.dst);
    }

    // Predicted daily outgoing per edge, summed over event indices.
    ad::Var daily = tape.constant(ad::Tensor(edges, static_cast<std::size_t>(horizon), 0.0));
    const auto heads = options.identity ? std::vector<HeadOutputs>(max_event_count(snapshot))
                                        : model.run_heads(tape, params, snapshot, scale);
    for (std::size_t i = 0; i < heads.size(); ++i) {
        std::vector<int> tau(edges, 0);
        ad::Tensor qty(edges, 1, 0.0);
        for (std::size_t e = 0; e < edges; ++e) {
            const auto& planned = snapshot.edge_states[e].planned;
            if (i < planned.size()) {
                tau[e] = planned[i].day;
                qty(e, 0) = planned[i].quantity / scale;
            }
        }
        ad::Var probs, r;
        if (options.identity) {
            ad::Tensor p(edges, kDeltaCount, 0.0);
            for (std::size_t e = 0; e < edges; ++e) p(e, delta_slot(0)) = 1.0;
            probs = tape.constant(std::move(p));
            r = tape.constant(ad::Tensor(edges, 1, 1.0));
        } else {
            const auto& logits = heads[i].logits;
            r = heads[i].multiplier;
            const double temp = options.temperature;
            switch (options.sampling) {
                case DeltaSampling::Expected: probs = ad::softmax(logits, 1); break;
                case DeltaSampling::Soft:
                case DeltaSampling::Hard: {
                    const bool hard = options.sampling == DeltaSampling::Hard;
                    if (options.noise) {
                        probs = ad::gumbel_softmax(logits, options.noise->at(i), temp, hard);
                    } else {
                        if (!options.rng) throw std::invalid_argument("forward: sampling needs a generator");
                        probs = ad::gumbel_softmax(logits, temp, hard, *options.rng);
                    }
                    break;
                }
            }
        }
        auto pi = place_deltas(redistribute_rows(probs, tau), tau, horizon);
        auto amount = ad::mul(r, tape.constant(std::move(qty)));
        daily = ad::add(daily, ad::mul_rows(pi, amount));
    }

    // Process Z on the tape.
    ad::Tensor kernels(edges, static_cast<std::size_t>(horizon), 0.0), transit = kernels;
    for (std::size_t e = 0; e < edges; ++e) {
        const auto& p = lt.distribution(snapshot, e);
        std::copy(p.begin(), p.end(), kernels.row_span(e).begin());
        const auto arrivals = in_transit_arrivals(snapshot.edge_states[e], p, horizon);
        for (std::size_t h = 0; h < arrivals.size(); ++h) transit(e, h) = arrivals[h] / scale;
    }
    const auto bucket = tape.constant(weekly_bucket_matrix(horizon));
    auto received = ad::add(convolve_rows(daily, kernels), tape.constant(std::move(transit)));
    auto supply = ad::scatter_add_rows(ad::matmul(received, bucket), dst, n);
    auto outgoing = ad::scatter_add_rows(ad::matmul(daily, bucket), src, n);

    ad::Tensor start(n, 1), demand(n, weeks);
    for (std::size_t v = 0; v < n; ++v) {
        start(v, 0) = snapshot.node_states[v].inventory_start / scale;
        for (std::size_t w = 0; w < weeks; ++w) demand(v, w) = snapshot.node_states[v].demand_forecast[w] / scale;
    }
    auto demand_var = tape.constant(std::move(demand));
    ad::Var inv = tape.constant(std::move(start));
    std::vector<ad::Var> inventory{inv}, ratios;
    for (std::size_t w = 0; w < weeks; ++w) {
        auto y = ad::add(inv, ad::sub(ad::slice_cols(supply, w, w + 1), ad::slice_cols(demand_var, w, w + 1)));
        auto a = ad::slice_cols(outgoing, w, w + 1);
        if (options.clip) {
            auto ratio = clip_ratio(y, a);
            ratios.push_back(ratio);
            a = ad::mul(ratio, a);
        }
        inv = ad::sub(y, a);
        if (w + 1 < weeks) inventory.push_back(inv);
    }

    ForwardResult out;
    out.inventory = ad::concat_cols(inventory);
    out.daily = daily;
    if (options.clip && edges > 0) {
        auto per_edge = ad::gather_rows(ad::concat_cols(ratios), src);
        auto per_day = ad::matmul(per_edge, tape.constant([&] {
            ad::Tensor t(weeks, static_cast<std::size_t>(horizon), 0.0);
            for (std::size_t h = 0; h < static_cast<std::size_t>(horizon); ++h) t(h / 7, h) = 1.0;
            return t;
        }()));
        out.daily = ad::mul(daily, per_day);
    }

    if (snapshot.has_labels()) {
        ad::Tensor q(edges, static_cast<std::size_t>(horizon)), inv_label(n, weeks);
        for (std::size_t e = 0; e < edges; ++e) {
            const auto c = cumulative(snapshot.label_daily_outgoing[e]);
            for (std::size_t h = 0; h < c.size(); ++h) q(e, h) = c[h] / scale;
        }
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t w = 0; w < weeks; ++w) inv_label(v, w) = snapshot.label_weekly_inventory[v][w] / scale;
        auto loss = ad::scale(ad::squared_error(out.inventory, tape.constant(std::move(inv_label))),
                              options.alpha / static_cast<double>(n));
        if (edges > 0) {
            auto cum = ad::matmul(out.daily, tape.constant(cumulative_matrix(horizon)));
            auto supply_term = ad::squared_error(cum, tape.constant(std::move(q)));
            loss = ad::add(loss, ad::scale(supply_term, (1.0 - options.alpha) / static_cast<double>(edges)));
        }
        out.loss = loss;
    }
    return out;
}

double supply_loss(double alpha, std::span<const std::vector<double>> pred_cum,
                   std::span<const std::vector<double>> actual_cum, std::span<const std::vector<double>> pred_inv,
                   std::span<const std::vector<double>> actual_inv) {
    auto mean_sq = [](std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) {
        if (a.size() != b.size()) throw ShapeError("supply_loss: set sizes differ");
        if (a.empty()) return 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].size() != b[i].size()) throw ShapeError("supply_loss: vector lengths differ");
            for (std::size_t k = 0; k < a[i].size(); ++k) total += (a[i][k] - b[i][k]) * (a[i][k] - b[i][k]);
        }
        return total / static_cast<double>(a.size());
    };
    return (1.0 - alpha) * mean_sq(pred_cum, actual_cum) + alpha * mean_sq(pred_inv, actual_inv);
}

}  // namespace supplycast
