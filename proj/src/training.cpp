#include "supplycast/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "supplycast/errors.hpp"
#include "supplycast/timeline.hpp"

namespace supplycast {

void TrainConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam moments must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
    model.validate();
}

std::string TrainConfig::to_json() const {
    nlohmann::json j{{"alpha", alpha},
                     {"learning_rate", learning_rate},
                     {"epochs", epochs},
                     {"batch_size", batch_size},
                     {"beta1", beta1},
                     {"beta2", beta2},
                     {"adam_epsilon", adam_epsilon},
                     {"seed", seed},
                     {"rollout_clip", rollout_clip},
                     {"horizon_days", model.horizon_days},
                     {"history_depth", model.history_depth},
                     {"gat_widths", model.gat_widths},
                     {"heads", model.heads},
                     {"mlp_r_hidden", model.mlp_r_hidden},
                     {"mlp_p_hidden", model.mlp_p_hidden},
                     {"temperature", model.temperature},
                     {"leaky_slope", model.leaky_slope}};
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    TrainConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw DataError("config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "alpha") c.alpha = value;
            else if (key == "learning_rate") c.learning_rate = value;
            else if (key == "epochs") c.epochs = value;
            else if (key == "batch_size") c.batch_size = value;
            else if (key == "beta1") c.beta1 = value;
            else if (key == "beta2") c.beta2 = value;
            else if (key == "adam_epsilon") c.adam_epsilon = value;
            else if (key == "seed") c.seed = value;
            else if (key == "rollout_clip") c.rollout_clip = value;
            else if (key == "horizon_days") c.model.horizon_days = value;
            else if (key == "history_depth") c.model.history_depth = value;
            else if (key == "gat_widths") c.model.gat_widths = value.get<std::vector<std::size_t>>();
            else if (key == "heads") c.model.heads = value;
            else if (key == "mlp_r_hidden") c.model.mlp_r_hidden = value.get<std::vector<std::size_t>>();
            else if (key == "mlp_p_hidden") c.model.mlp_p_hidden = value.get<std::vector<std::size_t>>();
            else if (key == "temperature") c.model.temperature = value;
            else if (key == "leaky_slope") c.model.leaky_slope = value;
            else throw DataError("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    return c;
}

Adam::Adam(const ParameterSet& params, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {
    for (const auto& p : params.values()) {
        m_.emplace_back(p.rows(), p.cols(), 0.0);
        v_.emplace_back(p.rows(), p.cols(), 0.0);
    }
}

void Adam::step(ParameterSet& params, const std::vector<ad::Tensor>& grads) {
    if (grads.size() != m_.size()) throw ShapeError("Adam: gradient count does not match parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < grads.size(); ++p) {
        auto& value = params.value(p);
        if (grads[p].shape() != value.shape()) throw ShapeError("Adam: gradient shape " + grads[p].shape_string());
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grads[p][i];
            m_[p][i] = b1_ * m_[p][i] + (1.0 - b1_) * g;
            v_[p][i] = b2_ * v_[p][i] + (1.0 - b2_) * g * g;
            value[i] -= lr_ * (m_[p][i] / c1) / (std::sqrt(v_[p][i] / c2) + eps_);
        }
    }
}

double evaluate_loss(const SupplyModel& model, std::span<const NetworkSnapshot> snapshots, const LeadTimeModel& lt,
                     const SkuScaler& scaler, double alpha, bool rollout_clip) {
    if (snapshots.empty()) return 0.0;
    double total = 0.0;
    ForwardOptions opts;
    opts.alpha = alpha;
    opts.sampling = DeltaSampling::Expected;
    opts.clip = rollout_clip;
    for (const auto& s : snapshots) {
        ad::Tape tape;
        auto vars = model.parameters().bind(tape, false);
        total += forward(tape, vars, model, s, lt, scaler.scale(s), opts).loss.value().item();
    }
    return total / static_cast<double>(snapshots.size());
}

TrainResult train(std::span<const NetworkSnapshot> train_set, std::span<const NetworkSnapshot> validation_set,
                  const LeadTimeModel& lt, const TrainConfig& config) {
    config.validate();
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    for (const auto& s : train_set)
        if (!s.has_labels()) throw std::invalid_argument("train: snapshot " + s.id() + " has no labels");
    for (const auto& s : validation_set)
        if (!s.has_labels()) throw std::invalid_argument("train: snapshot " + s.id() + " has no labels");

    TrainResult result;
    result.scaler.fit(train_set);
    SupplyModel model(config.model, config.seed);
    Adam adam(model.parameters(), config.learning_rate, config.beta1, config.beta2, config.adam_epsilon);
    std::mt19937_64 rng(config.seed ^ 0x5eedf00dULL);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    double best = std::numeric_limits<double>::infinity();

    ForwardOptions opts;
    opts.alpha = config.alpha;
    opts.sampling = DeltaSampling::Soft;
    opts.temperature = config.model.temperature;
    opts.clip = config.rollout_clip;
    opts.rng = &rng;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::vector<ad::Tensor> grads;
        int in_batch = 0;
        auto flush = [&] {
            for (auto& g : grads)
                for (auto& x : g.values()) x /= in_batch;
            adam.step(model.parameters(), grads);
            grads.clear();
            in_batch = 0;
        };
        for (auto idx : order) {
            const auto& snap = train_set[idx];
            ad::Tape tape;
            auto vars = model.parameters().bind(tape);
            auto out = forward(tape, vars, model, snap, lt, result.scaler.scale(snap), opts);
            const double loss = out.loss.value().item();
            if (!std::isfinite(loss)) throw TrainingDiverged(snap.id(), "non-finite loss on snapshot " + snap.id());
            tape.backward(out.loss);
            for (std::size_t p = 0; p < vars.size(); ++p) {
                auto g = tape.grad(vars[p]);
                if (!g.all_finite()) throw TrainingDiverged(snap.id(), "non-finite gradient on snapshot " + snap.id());
                if (grads.size() <= p) grads.push_back(std::move(g));
                else grads[p] += g;
            }
            epoch_loss += loss;
            if (++in_batch == config.batch_size) flush();
        }
        if (in_batch > 0) flush();

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
        stats.validation_loss = validation_set.empty()
                                    ? stats.train_loss
                                    : evaluate_loss(model, validation_set, lt, result.scaler, config.alpha,
                                                    config.rollout_clip);
        result.curve.push_back(stats);
        if (stats.validation_loss < best) {
            best = stats.validation_loss;
            result.best_epoch = epoch;
            result.model = model;
        }
    }
    if (result.best_epoch == 0) {
        result.model = model;
        result.best_epoch = config.epochs;
    }
    return result;
}

unsigned thread_count() {
    if (const char* env = std::getenv("SUPPLYCAST_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return 1;
}

McResult mc_predict(const NetworkSnapshot& snapshot, const std::vector<std::vector<EventScores>>& scores,
                    const LeadTimeModel& lt, const McOptions& options) {
    if (options.samples < 1) throw std::invalid_argument("mc_predict: samples must be at least 1");
    if (scores.size() != snapshot.graph.edge_count()) throw ShapeError("mc_predict: scores do not cover every edge");

    const auto n = static_cast<std::size_t>(options.samples);
    McResult out;
    out.samples.resize(n);
    std::vector<std::vector<DailyTimeline>> raw(n);

    auto run = [&](std::size_t k) {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(options.stream), static_cast<std::uint32_t>(options.stream >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::vector<std::vector<EventPrediction>> preds(scores.size());
        for (std::size_t e = 0; e < scores.size(); ++e) {
            for (std::size_t i = 0; i < scores[e].size(); ++i) {
                auto p = sample_event(scores[e][i], DeltaSampling::Hard, options.temperature, &rng);
                p.event = i;
                preds[e].push_back(p);
            }
        }
        auto events = build_event_set(snapshot, preds);
        raw[k] = events.daily(snapshot.horizon_days);
        if (options.constrained) {
            out.samples[k] = constrained_inference(snapshot, std::move(events), lt, options.inference);
        } else {
            out.samples[k].rollout = rollout_inventory(snapshot, std::move(events), lt, options.inference.clip_in_rollout);
            out.samples[k].converged = true;
        }
    };

    const unsigned workers = std::min<unsigned>(thread_count(), static_cast<unsigned>(n));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) run(k);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < n; k += workers) run(k);
            });
        }
        for (auto& t : pool) t.join();
    }

    // Averages are accumulated in sample order so they do not depend on
    // how samples were spread over threads.
    const auto edges = snapshot.graph.edge_count();
    const auto horizon = static_cast<std::size_t>(snapshot.horizon_days);
    out.mean_daily.assign(edges, DailyTimeline(horizon, 0.0));
    out.mean_raw = out.mean_daily;
    out.mean_nodes = out.samples[0].rollout.nodes;
    for (auto& node : out.mean_nodes) {
        for (auto* v : {&node.inventory, &node.incoming, &node.outgoing, &node.outgoing_unclipped, &node.capacity})
            std::fill(v->begin(), v->end(), 0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = out.samples[k];
        out.converged += s.converged ? 1 : 0;
        for (std::size_t e = 0; e < edges; ++e) {
            for (std::size_t h = 0; h < horizon; ++h) {
                out.mean_daily[e][h] += s.rollout.daily[e][h] * inv_n;
                out.mean_raw[e][h] += raw[k][e][h] * inv_n;
            }
        }
        for (std::size_t v = 0; v < out.mean_nodes.size(); ++v) {
            const auto& src = s.rollout.nodes[v];
            auto& dst = out.mean_nodes[v];
            auto acc = [&](std::vector<double>& d, const std::vector<double>& x) {
                for (std::size_t i = 0; i < d.size(); ++i) d[i] += x[i] * inv_n;
            };
            acc(dst.inventory, src.inventory);
            acc(dst.incoming, src.incoming);
            acc(dst.outgoing, src.outgoing);
            acc(dst.outgoing_unclipped, src.outgoing_unclipped);
            acc(dst.capacity, src.capacity);
        }
    }
    return out;
}

McResult mc_predict(const NetworkSnapshot& snapshot, const SupplyModel& model, const SkuScaler& scaler,
                    const LeadTimeModel& lt, const McOptions& options) {
    return mc_predict(snapshot, model.event_scores(snapshot, scaler.scale(snapshot)), lt, options);
}

}  // namespace supplycast
