#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "supplycast/autodiff/ops.hpp"
#include "supplycast/event_model.hpp"
#include "supplycast/gnn.hpp"
#include "supplycast/parameters.hpp"
#include "supplycast/rollout.hpp"
#include "supplycast/snapshot.hpp"

namespace supplycast {

struct ModelConfig {
    int horizon_days = 28;
    int history_depth = 4;
    std::vector<std::size_t> gat_widths{128, 32};
    std::size_t heads = 3;
    std::vector<std::size_t> mlp_r_hidden{64, 32, 16};
    std::vector<std::size_t> mlp_p_hidden{15};
    double temperature = 1.0;
    double leaky_slope = 0.01;

    /// Throws std::invalid_argument on an unusable setting.
    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Per-SKU quantity scale: the largest planned shipment seen for the SKU.
class SkuScaler {
public:
    void fit(std::span<const NetworkSnapshot> snapshots);
    /// Fitted scale, else the snapshot's own largest planned quantity, else 1.
    double scale(const NetworkSnapshot& snapshot) const;
    const std::map<std::string, double>& scales() const noexcept { return scales_; }
    void set(const std::string& sku, double scale);

    friend bool operator==(const SkuScaler&, const SkuScaler&) = default;

private:
    std::map<std::string, double> scales_;
};

/// Bidirectional GAT encoder plus event heads.
class SupplyModel {
public:
    SupplyModel() = default;
    SupplyModel(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    ParameterSet& parameters() noexcept { return params_; }
    const ParameterSet& parameters() const noexcept { return params_; }
    const GatStack& forward_gat() const noexcept { return forward_; }
    const GatStack& backward_gat() const noexcept { return backward_; }
    const EventHeads& heads() const noexcept { return heads_; }

    /// Head outputs for every edge, one entry per planned-event index. The
    /// encoder reruns per index because edge features describe that event.
    std::vector<HeadOutputs> run_heads(ad::Tape& tape, std::span<const ad::Var> params,
                                       const NetworkSnapshot& snapshot, double scale) const;

    /// Scores of every planned event, indexed [edge][event].
    std::vector<std::vector<EventScores>> event_scores(const NetworkSnapshot& snapshot, double scale) const;

    void save(const std::filesystem::path& path, const SkuScaler& scaler) const;
    static SupplyModel load(const std::filesystem::path& path, SkuScaler* scaler = nullptr);
    std::string to_json(const SkuScaler& scaler) const;
    static SupplyModel from_json(const std::string& text, SkuScaler* scaler = nullptr);

    friend bool operator==(const SupplyModel& a, const SupplyModel& b) {
        return a.config_ == b.config_ && a.params_ == b.params_;
    }

private:
    ModelConfig config_;
    ParameterSet params_;
    GatStack forward_;
    GatStack backward_;
    EventHeads heads_;
};

struct ForwardOptions {
    double alpha = 0.5;
    DeltaSampling sampling = DeltaSampling::Soft;
    double temperature = 1.0;
    bool clip = true;                                  ///< capacity clip inside the rollout
    std::mt19937_64* rng = nullptr;                    ///< for Soft and Hard without fixed noise
    const std::vector<ad::Tensor>* noise = nullptr;    ///< fixed Gumbel noise per event index
    bool identity = false;                             ///< force r = 1 and delta = 0
};

struct ForwardResult {
    ad::Var daily;      ///< edges x H outgoing after clipping, scaled
    ad::Var inventory;  ///< nodes x W weekly inventory starts, scaled
    ad::Var loss;       ///< set when the snapshot has labels
};

/// Full differentiable pipeline: encode, predict events, redistribute,
/// aggregate, roll out through process Z and score against the labels as
/// (1 - alpha) mean_edges |Q_pred - Q|^2 + alpha mean_nodes |I_pred - I|^2.
ForwardResult forward(ad::Tape& tape, std::span<const ad::Var> params, const SupplyModel& model,
                      const NetworkSnapshot& snapshot, const LeadTimeModel& lt, double scale,
                      const ForwardOptions& options);

/// The same loss on plain values. Throws ShapeError on mismatched sets.
double supply_loss(double alpha, std::span<const std::vector<double>> pred_cum,
                   std::span<const std::vector<double>> actual_cum, std::span<const std::vector<double>> pred_inv,
                   std::span<const std::vector<double>> actual_inv);

}  // namespace supplycast
