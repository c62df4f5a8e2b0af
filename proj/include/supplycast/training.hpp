#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "supplycast/model.hpp"
#include "supplycast/rollout.hpp"

namespace supplycast {

struct TrainConfig {
    double alpha = 0.5;
    double learning_rate = 1e-4;
    int epochs = 10;
    int batch_size = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    bool rollout_clip = true;
    ModelConfig model;

    /// Throws std::invalid_argument on an out-of-range setting.
    void validate() const;

    std::string to_json() const;
    /// Missing keys keep their defaults; unknown keys are an error so typos
    /// surface. Throws DataError.
    static TrainConfig from_json(const std::string& text);
};

class Adam {
public:
    Adam(const ParameterSet& params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
         double epsilon = 1e-8);

    /// One bias-corrected update. grads is parallel to the parameter list.
    void step(ParameterSet& params, const std::vector<ad::Tensor>& grads);
    long steps() const noexcept { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<ad::Tensor> m_, v_;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainResult {
    SupplyModel model;  ///< parameters of the epoch with the lowest validation loss
    SkuScaler scaler;
    std::vector<EpochStats> curve;
    int best_epoch = 0;  ///< 1-based, like EpochStats::epoch
};

/// Mean loss over snapshots with noise-free delta probabilities.
double evaluate_loss(const SupplyModel& model, std::span<const NetworkSnapshot> snapshots, const LeadTimeModel& lt,
                     const SkuScaler& scaler, double alpha, bool rollout_clip = true);

/// Adam on the soft Gumbel pipeline, visiting snapshots in a seeded shuffled
/// order each epoch. With no validation set the training loss selects the
/// epoch. Throws TrainingDiverged on a non-finite loss or gradient and
/// std::invalid_argument on an empty training set or unlabeled snapshot.
TrainResult train(std::span<const NetworkSnapshot> train_set, std::span<const NetworkSnapshot> validation_set,
                  const LeadTimeModel& lt, const TrainConfig& config);

struct McOptions {
    int samples = 20;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;  ///< separates generators of different snapshots
    bool constrained = true;
    InferenceOptions inference;
    double temperature = 1.0;
};

struct McResult {
    std::vector<DailyTimeline> mean_daily;     ///< per edge, final iterates averaged
    std::vector<DailyTimeline> mean_raw;       ///< per edge, unadjusted samples averaged
    std::vector<NodeRollout> mean_nodes;       ///< rollout fields averaged over samples
    std::vector<ConstrainedResult> samples;
    std::size_t converged = 0;
};

/// Draws hard one-hot delta samples per event, runs each sample through
/// constrained inference (or process Z alone when constrained is off) and
/// averages. Sample k uses a generator seeded from (seed, stream, k), so
/// results do not depend on thread count. Throws std::invalid_argument when
/// samples < 1.
McResult mc_predict(const NetworkSnapshot& snapshot, const std::vector<std::vector<EventScores>>& scores,
                    const LeadTimeModel& lt, const McOptions& options);
McResult mc_predict(const NetworkSnapshot& snapshot, const SupplyModel& model, const SkuScaler& scaler,
                    const LeadTimeModel& lt, const McOptions& options);

/// Worker count from SUPPLYCAST_THREADS, default 1.
unsigned thread_count();

}  // namespace supplycast
