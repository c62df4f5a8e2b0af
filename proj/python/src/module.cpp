// Python bindings for the supplycast core.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "supplycast/baselines.hpp"
#include "supplycast/dataset.hpp"
#include "supplycast/errors.hpp"
#include "supplycast/metrics.hpp"
#include "supplycast/prediction_set.hpp"
#include "supplycast/rollout.hpp"
#include "supplycast/synthgen.hpp"
#include "supplycast/timeline.hpp"
#include "supplycast/training.hpp"

namespace py = pybind11;
using namespace supplycast;

namespace {

using Matrix = std::vector<std::vector<double>>;

const NetworkSnapshot& snapshot_at(const Dataset& ds, std::size_t i) {
    if (i >= ds.snapshots.size()) throw py::index_error("snapshot index out of range");
    return ds.snapshots[i];
}

py::dict node_dict(const NodeRollout& n) {
    py::dict d;
    d["inventory"] = n.inventory;
    d["incoming"] = n.incoming;
    d["outgoing"] = n.outgoing;
    d["outgoing_unclipped"] = n.outgoing_unclipped;
    d["capacity"] = n.capacity;
    d["demand"] = n.demand;
    return d;
}

py::list nodes_list(const std::vector<NodeRollout>& nodes) {
    py::list out;
    for (const auto& n : nodes) out.append(node_dict(n));
    return out;
}

py::dict rollout_dict(const RolloutResult& r) {
    py::dict d;
    d["daily"] = r.daily;
    d["nodes"] = nodes_list(r.nodes);
    d["clip_count"] = r.clip_count;
    return d;
}

}  // namespace

PYBIND11_MODULE(_supplycast, m) {
    m.doc() = "Supply network shipment and inventory forecasting";

    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DegenerateDataset>(m, "DegenerateDataset", PyExc_ValueError);
    py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);

    py::class_<NetworkSnapshot>(m, "Snapshot")
        .def_property_readonly("id", &NetworkSnapshot::id)
        .def_property_readonly("sku", [](const NetworkSnapshot& s) { return s.graph.sku(); })
        .def_property_readonly("date", [](const NetworkSnapshot& s) { return format_date(s.prediction_time); })
        .def_property_readonly("horizon_days", [](const NetworkSnapshot& s) { return s.horizon_days; })
        .def_property_readonly("nodes",
                               [](const NetworkSnapshot& s) {
                                   return std::vector<NodeId>(s.graph.nodes().begin(), s.graph.nodes().end());
                               })
        .def_property_readonly("edges",
                               [](const NetworkSnapshot& s) {
                                   std::vector<std::pair<NodeId, NodeId>> out;
                                   for (const auto& e : s.graph.edges()) out.emplace_back(s.graph.node(e.src), s.graph.node(e.dst));
                                   return out;
                               })
        .def_property_readonly("label_daily_outgoing", [](const NetworkSnapshot& s) { return s.label_daily_outgoing; })
        .def_property_readonly("label_weekly_inventory",
                               [](const NetworkSnapshot& s) { return s.label_weekly_inventory; })
        .def("__repr__", [](const NetworkSnapshot& s) { return "<Snapshot " + s.id() + ">"; });

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("horizon_days", &Dataset::horizon_days)
        .def("__len__", [](const Dataset& d) { return d.snapshots.size(); })
        .def("__getitem__", &snapshot_at, py::return_value_policy::reference_internal)
        .def("subset",
             [](const Dataset& d, const std::vector<std::size_t>& idx) {
                 Dataset out;
                 out.horizon_days = d.horizon_days;
                 out.leadtime_log = d.leadtime_log;
                 for (auto i : idx) out.snapshots.push_back(snapshot_at(d, i));
                 return out;
             })
        .def("write", [](const Dataset& d, const std::filesystem::path& dir) { write_dataset(d, dir); });

    m.def("read_dataset", &read_dataset, py::arg("path"));

    py::class_<DeviationSpec>(m, "DeviationSpec")
        .def(py::init<>())
        .def_static("none", &DeviationSpec::none)
        .def_readwrite("shift", &DeviationSpec::shift)
        .def_readwrite("ratio_mean", &DeviationSpec::ratio_mean)
        .def_readwrite("ratio_spread", &DeviationSpec::ratio_spread)
        .def_readwrite("lead_time", &DeviationSpec::lead_time)
        .def_readwrite("demand_noise", &DeviationSpec::demand_noise);

    py::class_<HistoryOptions>(m, "HistoryOptions")
        .def(py::init<>())
        .def_readwrite("horizon_days", &HistoryOptions::horizon_days)
        .def_readwrite("stride_days", &HistoryOptions::stride_days)
        .def_readwrite("warmup_days", &HistoryOptions::warmup_days)
        .def_readwrite("history_days", &HistoryOptions::history_days)
        .def_readwrite("stock_cover", &HistoryOptions::stock_cover)
        .def_readwrite("min_cadence", &HistoryOptions::min_cadence)
        .def_readwrite("max_cadence", &HistoryOptions::max_cadence)
        .def_readwrite("start_date", &HistoryOptions::start_date);

    py::class_<SuiteOptions>(m, "SuiteOptions")
        .def(py::init<>())
        .def_readwrite("skus", &SuiteOptions::skus)
        .def_readwrite("min_nodes", &SuiteOptions::min_nodes)
        .def_readwrite("max_nodes", &SuiteOptions::max_nodes)
        .def_readwrite("weeks", &SuiteOptions::weeks)
        .def_readwrite("seed", &SuiteOptions::seed)
        .def_readwrite("deviation", &SuiteOptions::deviation)
        .def_readwrite("history", &SuiteOptions::history);

    m.def("generate_suite", &generate_suite, py::arg("options"));

    py::class_<LeadTimeModel>(m, "LeadTimeModel")
        .def("distribution",
             py::overload_cast<const std::string&, const NodeId&, const NodeId&>(&LeadTimeModel::distribution,
                                                                                 py::const_),
             py::arg("sku"), py::arg("src"), py::arg("dst"))
        .def_property_readonly("horizon_days", &LeadTimeModel::horizon_days)
        .def("to_json", &LeadTimeModel::to_json)
        .def_static("from_json", &LeadTimeModel::from_json)
        .def("save", &LeadTimeModel::save)
        .def_static("load", &LeadTimeModel::load);

    m.def(
        "fit_leadtime",
        [](const Dataset& d, double smoothing, int default_lead) {
            LeadTimeFitOptions o;
            o.horizon_days = d.horizon_days;
            o.smoothing = smoothing;
            o.default_lead = default_lead;
            return fit_leadtime(d.leadtime_log, o);
        },
        py::arg("dataset"), py::arg("smoothing") = 0.0, py::arg("default_lead") = 2);

    m.def(
        "planned_passthrough", [](const Dataset& d, std::size_t i) { return planned_passthrough(snapshot_at(d, i)); },
        py::arg("dataset"), py::arg("index"));
    m.def(
        "croston_baseline",
        [](const Dataset& d, std::size_t i, double alpha, int lookback) {
            return croston_baseline(snapshot_at(d, i), alpha, lookback);
        },
        py::arg("dataset"), py::arg("index"), py::arg("alpha") = 0.9, py::arg("lookback") = 56);
    m.def(
        "croston",
        [](const std::vector<double>& series, int horizon, double alpha) {
            return croston_predict(croston_fit(series, alpha), horizon);
        },
        py::arg("series"), py::arg("horizon"), py::arg("alpha") = 0.9);

    m.def(
        "rollout_planned",
        [](const Dataset& d, std::size_t i, const LeadTimeModel& lt, bool clip) {
            const auto& s = snapshot_at(d, i);
            return rollout_dict(rollout_inventory(s, planned_event_set(s), lt, clip));
        },
        py::arg("dataset"), py::arg("index"), py::arg("leadtime"), py::arg("clip") = true);

    py::class_<PenaltyFunction> penalty(m, "PenaltyFunction");
    py::enum_<PenaltyFunction::Kind>(penalty, "Kind")
        .value("Linear", PenaltyFunction::Kind::Linear)
        .value("LinearWeighted", PenaltyFunction::Kind::LinearWeighted)
        .value("Geometric", PenaltyFunction::Kind::Geometric);
    penalty.def(py::init<>())
        .def_readwrite("kind", &PenaltyFunction::kind)
        .def_readwrite("c1", &PenaltyFunction::c1)
        .def_readwrite("c2", &PenaltyFunction::c2)
        .def_readwrite("eta1", &PenaltyFunction::eta1)
        .def_readwrite("eta2", &PenaltyFunction::eta2)
        .def_readwrite("eta3", &PenaltyFunction::eta3)
        .def_readwrite("eta4", &PenaltyFunction::eta4)
        .def("__call__", &PenaltyFunction::operator());

    m.def("cumulative", [](const std::vector<double>& daily) { return cumulative(daily); }, py::arg("daily"));
    m.def(
        "smace", [](const Matrix& pred_cum, const Matrix& actual_daily) { return smace(pred_cum, actual_daily); },
        py::arg("pred_cum"), py::arg("actual_daily"));
    m.def("wmape", [](const Matrix& pred, const Matrix& actual) { return wmape(pred, actual); }, py::arg("pred"),
          py::arg("actual"));
    m.def("bias", [](const Matrix& pred, const Matrix& actual) { return bias(pred, actual); }, py::arg("pred"),
          py::arg("actual"));
    m.def(
        "generalized_smace",
        [](const Matrix& pred_daily, const Matrix& actual_daily, const PenaltyFunction& penalty) {
            if (pred_daily.size() != actual_daily.size()) throw ShapeError("pred and actual edge counts differ");
            std::vector<AlignedEvent> events;
            for (std::size_t e = 0; e < pred_daily.size(); ++e) {
                auto a = align_events(pred_daily[e], actual_daily[e]);
                events.insert(events.end(), a.begin(), a.end());
            }
            return generalized_smace(events, penalty);
        },
        py::arg("pred_daily"), py::arg("actual_daily"), py::arg("penalty") = PenaltyFunction{});

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("rollout_clip", &TrainConfig::rollout_clip)
        .def("to_json", &TrainConfig::to_json)
        .def_static("from_json", &TrainConfig::from_json);

    py::class_<SkuScaler>(m, "SkuScaler").def("scale", &SkuScaler::scale);

    py::class_<SupplyModel>(m, "SupplyModel")
        .def("to_json", &SupplyModel::to_json, py::arg("scaler"))
        .def_static(
            "from_json",
            [](const std::string& text) {
                SkuScaler scaler;
                auto model = SupplyModel::from_json(text, &scaler);
                return std::make_pair(std::move(model), scaler);
            },
            py::arg("text"));

    py::class_<EpochStats>(m, "EpochStats")
        .def_readonly("epoch", &EpochStats::epoch)
        .def_readonly("train_loss", &EpochStats::train_loss)
        .def_readonly("validation_loss", &EpochStats::validation_loss);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("model", &TrainResult::model)
        .def_readonly("scaler", &TrainResult::scaler)
        .def_readonly("curve", &TrainResult::curve)
        .def_readonly("best_epoch", &TrainResult::best_epoch);

    m.def(
        "train",
        [](const Dataset& train_set, const Dataset* validation, const LeadTimeModel& lt, const TrainConfig& config) {
            py::gil_scoped_release release;
            const std::span<const NetworkSnapshot> val =
                validation ? std::span<const NetworkSnapshot>(validation->snapshots) : std::span<const NetworkSnapshot>();
            return train(train_set.snapshots, val, lt, config);
        },
        py::arg("train_set"), py::arg("validation") = nullptr, py::arg("leadtime"), py::arg("config") = TrainConfig{});

    m.def(
        "mc_predict",
        [](const Dataset& d, std::size_t i, const SupplyModel& model, const SkuScaler& scaler, const LeadTimeModel& lt,
           int samples, std::uint64_t seed, bool constrained, int max_iters, double epsilon, bool clip_in_rollout) {
            McOptions o;
            o.samples = samples;
            o.seed = seed;
            o.stream = i;
            o.constrained = constrained;
            o.inference.max_iters = max_iters;
            o.inference.epsilon = epsilon;
            o.inference.clip_in_rollout = clip_in_rollout;
            const auto& s = snapshot_at(d, i);
            McResult r;
            {
                py::gil_scoped_release release;
                r = mc_predict(s, model, scaler, lt, o);
            }
            py::dict out;
            out["daily"] = r.mean_daily;
            out["raw"] = r.mean_raw;
            out["nodes"] = nodes_list(r.mean_nodes);
            out["converged"] = r.converged;
            py::list rho;
            for (const auto& smp : r.samples) rho.append(smp.rho);
            out["rho"] = rho;
            return out;
        },
        py::arg("dataset"), py::arg("index"), py::arg("model"), py::arg("scaler"), py::arg("leadtime"),
        py::arg("samples") = 20, py::arg("seed") = 0, py::arg("constrained") = true, py::arg("max_iters") = 10,
        py::arg("epsilon") = 0.005, py::arg("clip_in_rollout") = true);

    m.def("thread_count", &thread_count);
}
