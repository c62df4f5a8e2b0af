#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "supplycast/autodiff/ops.hpp"
#include "supplycast/parameters.hpp"

namespace supplycast {

inline constexpr int kMinDelta = -7;
inline constexpr int kMaxDelta = 7;
inline constexpr std::size_t kDeltaCount = 15;

inline constexpr std::size_t delta_slot(int delta) { return static_cast<std::size_t>(delta - kMinDelta); }
inline constexpr int slot_delta(std::size_t slot) { return static_cast<int>(slot) + kMinDelta; }

/// Probability of shipping `delta` days away from the planned day, over
/// delta in [-7, 7].
class DeltaDistribution {
public:
    /// All mass at delta = 0.
    DeltaDistribution();
    /// Throws std::invalid_argument unless entries are non-negative and sum
    /// to 1 within 1e-9.
    explicit DeltaDistribution(const std::array<double, kDeltaCount>& probabilities);

    static DeltaDistribution one_hot(int delta);
    static DeltaDistribution uniform();

    /// Zero for delta outside [-7, 7].
    double operator()(int delta) const;
    const std::array<double, kDeltaCount>& probabilities() const noexcept { return p_; }
    int mode() const;
    double mean() const;

    friend bool operator==(const DeltaDistribution&, const DeltaDistribution&) = default;

private:
    std::array<double, kDeltaCount> p_{};
};

struct EventPrediction {
    double multiplier = 1.0;  ///< r in (0, 2]
    DeltaDistribution delta;
    std::size_t event = 0;  ///< index into the edge's planned events
};

/// Moves all mass on delta < -tau onto delta = 0, since an event planned
/// tau days ahead cannot ship before the prediction day.
DeltaDistribution redistribute_infeasible(const DeltaDistribution& d, int tau);

/// Row-wise redistribution on the tape: probs is r x 15, tau has r entries.
ad::Var redistribute_rows(ad::Var probs, std::span<const int> tau);

/// Fully connected network with LeakyReLU between layers and a linear output.
struct Mlp {
    struct Layer {
        std::size_t weight = 0;  ///< in x out
        std::size_t bias = 0;    ///< 1 x out
    };
    std::vector<Layer> layers;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    double slope = 0.01;
};

Mlp make_mlp(ParameterSet& params, const std::string& prefix, std::size_t in_dim,
             const std::vector<std::size_t>& hidden, std::size_t out_dim, double slope, std::mt19937_64& rng);
ad::Var mlp_forward(std::span<const ad::Var> params, const Mlp& mlp, ad::Var x);

/// mlp_r maps [u_v || u_w] to one logit, mlp_p to 15 delta logits.
struct EventHeads {
    Mlp multiplier;
    Mlp delta;
    std::size_t input_dim() const { return multiplier.in_dim; }
};

EventHeads make_event_heads(ParameterSet& params, std::size_t pair_dim, const std::vector<std::size_t>& mlp_r_hidden,
                            const std::vector<std::size_t>& mlp_p_hidden, double slope, std::mt19937_64& rng);

struct HeadOutputs {
    ad::Var multiplier;  ///< rows x 1, 2 * sigmoid(mlp_r)
    ad::Var logits;      ///< rows x 15
};

/// Throws ShapeError when pairs does not have the heads' input width.
HeadOutputs event_heads_forward(std::span<const ad::Var> params, const EventHeads& heads, ad::Var pairs);

enum class DeltaSampling {
    Expected,  ///< softmax(logits), the categorical that hard samples are drawn from
    Soft,      ///< Gumbel-Softmax relaxation
    Hard,      ///< one-hot Gumbel-Max sample
};

/// Multiplier and delta logits of one event before any sampling.
struct EventScores {
    double multiplier = 1.0;
    std::array<double, kDeltaCount> logits{};
};

/// Turns scores into a prediction; rng is required for Soft and Hard.
EventPrediction sample_event(const EventScores& scores, DeltaSampling mode, double temperature,
                             std::mt19937_64* rng);

/// Runs the heads on one endpoint pair. Throws ShapeError when u_v and u_w
/// together do not match the heads' input width.
EventPrediction predict_event(const ParameterSet& params, const EventHeads& heads, std::span<const double> u_v,
                              std::span<const double> u_w, DeltaSampling mode, double temperature,
                              std::mt19937_64* rng);

}  // namespace supplycast
