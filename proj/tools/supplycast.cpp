// Batch entry point: synth, fit-leadtime, train, predict, baseline, evaluate.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "supplycast/baselines.hpp"
#include "supplycast/dataset.hpp"
#include "supplycast/errors.hpp"
#include "supplycast/prediction_set.hpp"
#include "supplycast/synthgen.hpp"
#include "supplycast/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace supplycast;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Args {
    std::string data, config, out, model, leadtime, validation, pred;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::optional<double> alpha;
    std::optional<int> epochs;
    int mc_samples = 20;
    int iterations = 10;
    double epsilon = 0.005;
    double split = 0.8;
    bool no_rollout_clip = false;
    std::string method = "planned";
    double croston_alpha = 0.9;
    int croston_lookback = 56;
};

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot read config " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    os << text;
}

// The manifest echoes everything that shaped the outputs and nothing that
// varies between identical runs; wall-clock timings go to timings.json.
void write_manifest(const fs::path& out, const std::string& command, const Args& a, const json& config) {
    json args = {{"data", a.data},     {"config", a.config},         {"out", a.out},
                 {"model", a.model},   {"leadtime", a.leadtime},     {"seed", a.seed},
                 {"mc_samples", a.mc_samples}, {"iterations", a.iterations}, {"epsilon", a.epsilon},
                 {"rollout_clip", !a.no_rollout_clip}};
    json m = {{"tool", "supplycast"}, {"version", kVersion}, {"compiler", __VERSION__},
              {"command", command},   {"seed", a.seed},      {"args", args},
              {"config", config}};
    write_text(out / "manifest.json", m.dump(2) + "\n");
}

LeadTimeModel leadtime_for(const Args& a, const Dataset& ds, const LeadTimeFitOptions& fit = {}) {
    if (!a.leadtime.empty()) return LeadTimeModel::load(a.leadtime);
    auto opts = fit;
    opts.horizon_days = ds.horizon_days;
    return fit_leadtime(ds.leadtime_log, opts);
}

DeviationSpec::Shift parse_shift(const json& j) {
    DeviationSpec::Shift s;
    for (const auto& e : j) s.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
    return s;
}

SuiteOptions suite_from_json(const json& j, std::uint64_t seed) {
    SuiteOptions o;
    o.seed = seed;
    for (const auto& [key, v] : j.items()) {
        if (key == "skus") o.skus = v.get<int>();
        else if (key == "min_nodes") o.min_nodes = v.get<std::size_t>();
        else if (key == "max_nodes") o.max_nodes = v.get<std::size_t>();
        else if (key == "weeks") o.weeks = v.get<int>();
        else if (key == "shift") o.deviation.shift = parse_shift(v);
        else if (key == "ratio_mean") o.deviation.ratio_mean = v.get<double>();
        else if (key == "ratio_spread") o.deviation.ratio_spread = v.get<double>();
        else if (key == "lead_time") o.deviation.lead_time = v.get<std::vector<double>>();
        else if (key == "demand_noise") o.deviation.demand_noise = v.get<double>();
        else if (key == "horizon_days") o.history.horizon_days = v.get<int>();
        else if (key == "stride_days") o.history.stride_days = v.get<int>();
        else if (key == "warmup_days") o.history.warmup_days = v.get<int>();
        else if (key == "history_days") o.history.history_days = v.get<int>();
        else if (key == "stock_cover") o.history.stock_cover = v.get<double>();
        else if (key == "min_cadence") o.history.min_cadence = v.get<int>();
        else if (key == "max_cadence") o.history.max_cadence = v.get<int>();
        else if (key == "start_date") o.history.start_date = v.get<std::string>();
        else throw DataError("unknown synth config key '" + key + "'");
    }
    o.deviation.validate();
    return o;
}

int cmd_synth(const Args& a) {
    const json config = a.config.empty() ? json::object() : read_json_file(a.config);
    SuiteOptions opts;
    try {
        opts = suite_from_json(config, a.seed);
    } catch (const json::exception& e) {
        throw DataError(std::string("synth config: ") + e.what());
    }
    const auto ds = generate_suite(opts);
    write_dataset(ds, a.out);
    write_manifest(a.out, "synth", a, config);
    return 0;
}

int cmd_fit_leadtime(const Args& a) {
    const auto ds = read_dataset(a.data);
    const json config = a.config.empty() ? json::object() : read_json_file(a.config);
    LeadTimeFitOptions fit;
    fit.horizon_days = ds.horizon_days;
    for (const auto& [key, v] : config.items()) {
        if (key == "smoothing") fit.smoothing = v.get<double>();
        else if (key == "default_lead") fit.default_lead = v.get<int>();
        else throw DataError("unknown leadtime config key '" + key + "'");
    }
    fs::create_directories(a.out);
    fit_leadtime(ds.leadtime_log, fit).save(fs::path(a.out) / "leadtime.json");
    write_manifest(a.out, "fit-leadtime", a, config);
    return 0;
}

// Chronological split within each SKU: the first `fraction` of its
// snapshots train, the rest validate.
void split_dataset(const Dataset& ds, double fraction, std::vector<NetworkSnapshot>& train,
                   std::vector<NetworkSnapshot>& validation) {
    std::map<std::string, std::vector<const NetworkSnapshot*>> by_sku;
    for (const auto& s : ds.snapshots) by_sku[s.graph.sku()].push_back(&s);
    for (auto& [sku, list] : by_sku) {
        std::stable_sort(list.begin(), list.end(),
                         [](auto* x, auto* y) { return x->prediction_time < y->prediction_time; });
        const auto cut = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(list.size())));
        for (std::size_t i = 0; i < list.size(); ++i) (i < cut ? train : validation).push_back(*list[i]);
    }
}

int cmd_train(const Args& a) {
    const auto ds = read_dataset(a.data);
    TrainConfig cfg = a.config.empty() ? TrainConfig{} : TrainConfig::from_json(read_json_file(a.config).dump());
    if (a.seed_set) cfg.seed = a.seed;
    if (a.alpha) cfg.alpha = *a.alpha;
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.no_rollout_clip) cfg.rollout_clip = false;
    cfg.model.horizon_days = ds.horizon_days;
    cfg.validate();
    if (!(a.split > 0.0 && a.split <= 1.0)) throw std::invalid_argument("--split must lie in (0, 1]");

    std::vector<NetworkSnapshot> train_set, validation_set;
    if (!a.validation.empty()) {
        train_set = ds.snapshots;
        validation_set = read_dataset(a.validation).snapshots;
    } else {
        split_dataset(ds, a.split, train_set, validation_set);
    }
    const auto lt = leadtime_for(a, ds);
    const auto result = train(train_set, validation_set, lt, cfg);

    fs::create_directories(a.out);
    result.model.save(fs::path(a.out) / "model.json", result.scaler);
    lt.save(fs::path(a.out) / "leadtime.json");
    std::ofstream curve(fs::path(a.out) / "loss_curve.csv", std::ios::binary);
    curve << "epoch,train_loss,validation_loss\n";
    for (const auto& e : result.curve) {
        curve << e.epoch << ',' << format_number(e.train_loss) << ',' << format_number(e.validation_loss) << '\n';
    }
    auto config = json::parse(cfg.to_json());
    config["best_epoch"] = result.best_epoch;
    write_manifest(a.out, "train", a, config);
    return 0;
}

SnapshotPrediction from_rollout(const RolloutResult& r) { return {r.daily, r.nodes}; }

int cmd_predict(const Args& a) {
    if (a.mc_samples < 1) throw std::invalid_argument("--mc-samples must be at least 1");
    if (a.iterations < 0) throw std::invalid_argument("--iterations must be non-negative");
    const auto ds = read_dataset(a.data);
    SkuScaler scaler;
    const auto model = SupplyModel::load(a.model, &scaler);
    const auto lt = leadtime_for(a, ds);

    McOptions mc;
    mc.samples = a.mc_samples;
    mc.seed = a.seed;
    mc.constrained = a.iterations > 0;
    mc.inference.epsilon = a.epsilon;
    mc.inference.max_iters = std::max(1, a.iterations);
    mc.inference.clip_in_rollout = !a.no_rollout_clip;
    mc.temperature = model.config().temperature;

    std::vector<SnapshotPrediction> means;
    std::vector<std::vector<std::vector<DailyTimeline>>> samples(static_cast<std::size_t>(a.mc_samples));
    std::size_t converged = 0, total = 0;
    for (std::size_t i = 0; i < ds.snapshots.size(); ++i) {
        mc.stream = i;
        const auto r = mc_predict(ds.snapshots[i], model, scaler, lt, mc);
        means.push_back({r.mean_daily, r.mean_nodes});
        for (std::size_t k = 0; k < r.samples.size(); ++k) samples[k].push_back(r.samples[k].rollout.daily);
        converged += r.converged;
        total += r.samples.size();
    }
    write_prediction_set(a.out, ds.snapshots, means);
    fs::create_directories(fs::path(a.out) / "samples");
    for (std::size_t k = 0; k < samples.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%03zu.csv", k);
        write_timelines(fs::path(a.out) / "samples" / name, ds.snapshots, samples[k]);
    }
    json config = {{"predictor", "gsp"}, {"converged_samples", converged}, {"total_samples", total}};
    write_manifest(a.out, "predict", a, config);
    return 0;
}

int cmd_baseline(const Args& a) {
    if (a.method != "planned" && a.method != "croston") throw std::invalid_argument("--method must be planned or croston");
    const auto ds = read_dataset(a.data);
    const auto lt = leadtime_for(a, ds);
    std::vector<SnapshotPrediction> preds;
    for (const auto& s : ds.snapshots) {
        const auto daily = a.method == "planned" ? planned_passthrough(s)
                                                 : croston_baseline(s, a.croston_alpha, a.croston_lookback);
        EventSet events;
        for (const auto& d : daily) events.quantities.push_back({d});
        preds.push_back(from_rollout(rollout_inventory(s, std::move(events), lt, !a.no_rollout_clip)));
    }
    write_prediction_set(a.out, ds.snapshots, preds);
    json config = {{"predictor", a.method}};
    if (a.method == "croston") config["croston_alpha"] = a.croston_alpha, config["croston_lookback"] = a.croston_lookback;
    write_manifest(a.out, "baseline", a, config);
    return 0;
}

PenaltyFunction penalty_from_json(const json& j) {
    PenaltyFunction p;
    for (const auto& [key, v] : j.items()) {
        if (key == "kind") {
            const auto k = v.get<std::string>();
            if (k == "linear") p.kind = PenaltyFunction::Kind::Linear;
            else if (k == "linear_weighted") p.kind = PenaltyFunction::Kind::LinearWeighted;
            else if (k == "geometric") p.kind = PenaltyFunction::Kind::Geometric;
            else throw DataError("unknown penalty kind '" + k + "'");
        } else if (key == "c1") p.c1 = v.get<double>();
        else if (key == "c2") p.c2 = v.get<double>();
        else if (key == "eta1") p.eta1 = v.get<double>();
        else if (key == "eta2") p.eta2 = v.get<double>();
        else if (key == "eta3") p.eta3 = v.get<double>();
        else if (key == "eta4") p.eta4 = v.get<double>();
        else throw DataError("unknown penalty key '" + key + "'");
    }
    p.validate();
    return p;
}

int cmd_evaluate(const Args& a) {
    const auto ds = read_dataset(a.data);
    const json config = a.config.empty() ? json::object() : read_json_file(a.config);
    PenaltyFunction penalty;
    if (config.contains("penalty")) penalty = penalty_from_json(config.at("penalty"));
    const auto preds = read_prediction_set(a.pred, ds);
    const auto table = evaluate_predictions(ds, preds, penalty);
    fs::create_directories(a.out);
    std::ofstream csv(fs::path(a.out) / "metrics.csv", std::ios::binary);
    write_metrics_csv(csv, table);
    write_metrics_text(std::cout, table);
    write_manifest(a.out, "evaluate", a, config);
    return 0;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const DataError*>(&e)) return "DataError";
    if (dynamic_cast<const ShapeError*>(&e)) return "ShapeError";
    if (dynamic_cast<const DegenerateDataset*>(&e)) return "DegenerateDataset";
    if (dynamic_cast<const TrainingDiverged*>(&e)) return "TrainingDiverged";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "InvalidArgument";
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return "FilesystemError";
    return "Error";
}

int report(const std::string& command, const std::string& out, const std::string& kind, const std::string& message,
           const json& extra = json::object()) {
    json rec = {{"status", "error"}, {"command", command}, {"error", kind}, {"message", message}};
    rec.update(extra);
    std::cerr << rec.dump() << '\n';
    if (!out.empty()) {
        std::error_code ec;
        fs::create_directories(out, ec);
        std::ofstream(fs::path(out) / "error.json") << rec.dump(2) << '\n';
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Supply-event prediction on supply networks"};
    app.require_subcommand(1);
    Args a;

    auto add_seed = [&](CLI::App* c) {
        c->add_option("--seed", a.seed, "Seed for every random choice")->each([&](const std::string&) { a.seed_set = true; });
    };
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--out", a.out, "Dataset directory")->required();
    synth->add_option("--config", a.config, "Generator config (JSON)");
    add_seed(synth);

    auto* fitlt = app.add_subcommand("fit-leadtime", "Fit the lead-time model");
    fitlt->add_option("--data", a.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    fitlt->add_option("--out", a.out, "Output directory")->required();
    fitlt->add_option("--config", a.config, "Fit options (JSON)")->check(CLI::ExistingFile);

    auto* tr = app.add_subcommand("train", "Train a model");
    tr->add_option("--data", a.data, "Training dataset")->required()->check(CLI::ExistingDirectory);
    tr->add_option("--out", a.out, "Output directory")->required();
    tr->add_option("--config", a.config, "Training config (JSON)")->check(CLI::ExistingFile);
    tr->add_option("--validation", a.validation, "Separate validation dataset")->check(CLI::ExistingDirectory);
    tr->add_option("--split", a.split, "Per-SKU chronological train fraction when no validation set is given");
    tr->add_option("--leadtime", a.leadtime, "Lead-time model file")->check(CLI::ExistingFile);
    tr->add_option("--alpha", a.alpha, "Inventory loss weight");
    tr->add_option("--epochs", a.epochs, "Epochs");
    tr->add_flag("--no-rollout-clip", a.no_rollout_clip, "Disable the capacity clip inside the rollout");
    add_seed(tr);

    auto* pr = app.add_subcommand("predict", "Monte Carlo predictions with constrained inference");
    pr->add_option("--data", a.data, "Dataset")->required()->check(CLI::ExistingDirectory);
    pr->add_option("--model", a.model, "Checkpoint")->required()->check(CLI::ExistingFile);
    pr->add_option("--out", a.out, "Output directory")->required();
    pr->add_option("--leadtime", a.leadtime, "Lead-time model file")->check(CLI::ExistingFile);
    pr->add_option("--mc-samples", a.mc_samples, "Samples per snapshot")->capture_default_str();
    pr->add_option("--iterations", a.iterations, "Constrained inference iterations, 0 for the rollout alone")
        ->capture_default_str();
    pr->add_option("--epsilon", a.epsilon, "Convergence threshold")->capture_default_str();
    pr->add_flag("--no-rollout-clip", a.no_rollout_clip, "Disable the capacity clip in iteration 0");
    add_seed(pr);

    auto* bl = app.add_subcommand("baseline", "Planned-shipment or Croston predictions");
    bl->add_option("--data", a.data, "Dataset")->required()->check(CLI::ExistingDirectory);
    bl->add_option("--out", a.out, "Output directory")->required();
    bl->add_option("--method", a.method, "planned or croston")->capture_default_str();
    bl->add_option("--croston-alpha", a.croston_alpha, "Croston smoothing")->capture_default_str();
    bl->add_option("--croston-lookback", a.croston_lookback, "History days for Croston")->capture_default_str();
    bl->add_option("--leadtime", a.leadtime, "Lead-time model file")->check(CLI::ExistingFile);
    bl->add_flag("--no-rollout-clip", a.no_rollout_clip, "Disable the capacity clip");

    auto* ev = app.add_subcommand("evaluate", "Score a prediction directory against labels");
    ev->add_option("--data", a.data, "Labeled dataset")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--pred", a.pred, "Directory with timelines.csv and rollout.csv")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--out", a.out, "Output directory")->required();
    ev->add_option("--config", a.config, "Penalty config (JSON)")->check(CLI::ExistingFile);

    std::string command;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        json rec = {{"status", "error"}, {"error", "UsageError"}, {"message", e.what()}};
        std::cerr << rec.dump() << '\n';
        return 1;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        int rc = 0;
        if (*synth) command = "synth", rc = cmd_synth(a);
        else if (*fitlt) command = "fit-leadtime", rc = cmd_fit_leadtime(a);
        else if (*tr) command = "train", rc = cmd_train(a);
        else if (*pr) command = "predict", rc = cmd_predict(a);
        else if (*bl) command = "baseline", rc = cmd_baseline(a);
        else if (*ev) command = "evaluate", rc = cmd_evaluate(a);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        write_text(fs::path(a.out) / "timings.json", json{{"command", command}, {"seconds", elapsed.count()}, {"threads", thread_count()}}.dump(2) + "\n");
        return rc;
    } catch (const TrainingDiverged& e) {
        return report(command, a.out, "TrainingDiverged", e.what(), {{"snapshot", e.snapshot_id()}});
    } catch (const std::exception& e) {
        return report(command, a.out, error_kind(e), e.what());
    }
}
