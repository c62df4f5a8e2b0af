#include "supplycast/event_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "supplycast/errors.hpp"

namespace supplycast {

DeltaDistribution::DeltaDistribution() { p_[delta_slot(0)] = 1.0; }

DeltaDistribution::DeltaDistribution(const std::array<double, kDeltaCount>& probabilities) : p_(probabilities) {
    double total = 0.0;
    for (double x : p_) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("delta probabilities must be non-negative");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("delta probabilities sum to " + std::to_string(total));
    }
}

DeltaDistribution DeltaDistribution::one_hot(int delta) {
    if (delta < kMinDelta || delta > kMaxDelta) throw std::invalid_argument("delta out of range");
    std::array<double, kDeltaCount> p{};
    p[delta_slot(delta)] = 1.0;
    return DeltaDistribution(p);
}

DeltaDistribution DeltaDistribution::uniform() {
    std::array<double, kDeltaCount> p;
    p.fill(1.0 / kDeltaCount);
    return DeltaDistribution(p);
}

double DeltaDistribution::operator()(int delta) const {
    if (delta < kMinDelta || delta > kMaxDelta) return 0.0;
    return p_[delta_slot(delta)];
}

int DeltaDistribution::mode() const {
    return slot_delta(static_cast<std::size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin()));
}

double DeltaDistribution::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < kDeltaCount; ++k) m += p_[k] * slot_delta(k);
    return m;
}

DeltaDistribution redistribute_infeasible(const DeltaDistribution& d, int tau) {
    auto p = d.probabilities();
    double moved = 0.0;
    for (int delta = kMinDelta; delta < -tau && delta < 0; ++delta) {
        moved += p[delta_slot(delta)];
        p[delta_slot(delta)] = 0.0;
    }
    p[delta_slot(0)] += moved;
    return DeltaDistribution(p);
}

ad::Var redistribute_rows(ad::Var probs, std::span<const int> tau) {
    const auto& pv = probs.value();
    if (pv.cols() != kDeltaCount || pv.rows() != tau.size()) {
        throw ShapeError("redistribute_rows: probabilities " + pv.shape_string() + " for " +
                         std::to_string(tau.size()) + " events");
    }
    // Slots below `cut` in row r collapse onto the delta = 0 slot.
    std::vector<std::size_t> cut(tau.size());
    for (std::size_t r = 0; r < tau.size(); ++r) {
        cut[r] = static_cast<std::size_t>(std::clamp(-tau[r] - kMinDelta, 0, static_cast<int>(delta_slot(0))));
    }
    ad::Tensor out = pv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t k = 0; k < cut[r]; ++k) {
            out(r, delta_slot(0)) += out(r, k);
            out(r, k) = 0.0;
        }
    }
    const auto ip = probs.id();
    return probs.tape()->record(std::move(out), {probs}, [ip, cut](ad::Tape& t, std::size_t self) {
        const auto& g = t.grad_buffer(self);
        auto& gp = t.grad_buffer(ip);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t k = 0; k < g.cols(); ++k) {
                gp(r, k) += k < cut[r] ? g(r, delta_slot(0)) : g(r, k);
            }
        }
    });
}

Mlp make_mlp(ParameterSet& params, const std::string& prefix, std::size_t in_dim,
             const std::vector<std::size_t>& hidden, std::size_t out_dim, double slope, std::mt19937_64& rng) {
    Mlp mlp;
    mlp.in_dim = in_dim;
    mlp.out_dim = out_dim;
    mlp.slope = slope;
    std::size_t dim = in_dim;
    auto widths = hidden;
    widths.push_back(out_dim);
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const auto p = prefix + ".layer" + std::to_string(l);
        Mlp::Layer layer;
        layer.weight = params.add(p + ".W", glorot_uniform(dim, widths[l], rng));
        layer.bias = params.add(p + ".b", ad::Tensor(1, widths[l], 0.0));
        mlp.layers.push_back(layer);
        dim = widths[l];
    }
    return mlp;
}

ad::Var mlp_forward(std::span<const ad::Var> params, const Mlp& mlp, ad::Var x) {
    if (x.cols() != mlp.in_dim) {
        throw ShapeError("mlp: input " + x.value().shape_string() + " for width " + std::to_string(mlp.in_dim));
    }
    auto h = x;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        h = ad::add_row(ad::matmul(h, params[mlp.layers[l].weight]), params[mlp.layers[l].bias]);
        if (l + 1 < mlp.layers.size()) h = ad::leaky_relu(h, mlp.slope);
    }
    return h;
}

EventHeads make_event_heads(ParameterSet& params, std::size_t pair_dim, const std::vector<std::size_t>& mlp_r_hidden,
                            const std::vector<std::size_t>& mlp_p_hidden, double slope, std::mt19937_64& rng) {
    EventHeads heads;
    heads.multiplier = make_mlp(params, "mlp_r", pair_dim, mlp_r_hidden, 1, slope, rng);
    heads.delta = make_mlp(params, "mlp_p", pair_dim, mlp_p_hidden, kDeltaCount, slope, rng);
    return heads;
}

HeadOutputs event_heads_forward(std::span<const ad::Var> params, const EventHeads& heads, ad::Var pairs) {
    return {ad::scale(ad::sigmoid(mlp_forward(params, heads.multiplier, pairs)), 2.0),
            mlp_forward(params, heads.delta, pairs)};
}

EventPrediction sample_event(const EventScores& scores, DeltaSampling mode, double temperature,
                             std::mt19937_64* rng) {
    if (mode != DeltaSampling::Expected && rng == nullptr) {
        throw std::invalid_argument("sample_event: random sampling needs a generator");
    }
    ad::Tape tape;
    auto logits = tape.constant(ad::Tensor(1, kDeltaCount, std::vector<double>(scores.logits.begin(), scores.logits.end())));
    ad::Tensor p;
    switch (mode) {
        case DeltaSampling::Expected: p = ad::softmax(logits, 1).value(); break;
        case DeltaSampling::Soft: p = ad::gumbel_softmax(logits, temperature, false, *rng).value(); break;
        case DeltaSampling::Hard: p = ad::gumbel_softmax(logits, temperature, true, *rng).value(); break;
    }
    std::array<double, kDeltaCount> probs;
    std::copy(p.values().begin(), p.values().end(), probs.begin());
    // Renormalize away rounding so the distribution invariant holds exactly.
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (auto& x : probs) x /= total;
    EventPrediction out;
    out.multiplier = scores.multiplier;
    out.delta = DeltaDistribution(probs);
    return out;
}

EventPrediction predict_event(const ParameterSet& params, const EventHeads& heads, std::span<const double> u_v,
                              std::span<const double> u_w, DeltaSampling mode, double temperature,
                              std::mt19937_64* rng) {
    if (u_v.size() + u_w.size() != heads.input_dim() || u_v.size() != u_w.size()) {
        throw ShapeError("predict_event: embeddings of length " + std::to_string(u_v.size()) + " and " +
                         std::to_string(u_w.size()) + " for heads of width " + std::to_string(heads.input_dim()));
    }
    std::vector<double> pair(u_v.begin(), u_v.end());
    pair.insert(pair.end(), u_w.begin(), u_w.end());
    const auto width = pair.size();
    ad::Tape tape;
    auto vars = params.bind(tape, false);
    auto out = event_heads_forward(vars, heads, tape.constant(ad::Tensor(1, width, std::move(pair))));
    EventScores scores;
    scores.multiplier = out.multiplier.value().item();
    std::copy(out.logits.value().values().begin(), out.logits.value().values().end(), scores.logits.begin());
    return sample_event(scores, mode, temperature, rng);
}

}  // namespace supplycast
