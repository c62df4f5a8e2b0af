#include "supplycast/prediction_set.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "supplycast/errors.hpp"

namespace supplycast {

namespace fs = std::filesystem;

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

namespace {

const std::string kTimelineHeader = "sku,date,src,dst,day,quantity";
const std::string kRolloutHeader =
    "sku,date,node,week,inventory_start,incoming,outgoing,capacity,outgoing_unclipped,inventory_end";

const std::string& checked(const std::string& field) {
    if (field.find_first_of(",\"\n\r") != std::string::npos) {
        throw DataError("identifier '" + field + "' cannot be written to CSV");
    }
    return field;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    return os;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(path.filename().string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s, const fs::path& path, std::size_t line) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(path.filename().string() + ":" + std::to_string(line) + ": bad integer '" + s + "'");
    }
    return v;
}

// Calls row(cells, line_number) for every data row after checking the header.
template <typename F>
void read_csv(const fs::path& path, const std::string& header, std::size_t columns, F&& row) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != header) {
        throw DataError(path.filename().string() + ": expected header '" + header + "'");
    }
    for (std::size_t n = 2; std::getline(is, line); ++n) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != columns) {
            throw DataError(path.filename().string() + ":" + std::to_string(n) + ": expected " +
                            std::to_string(columns) + " fields");
        }
        row(cells, n);
    }
}

}  // namespace

void write_timelines(const fs::path& path, std::span<const NetworkSnapshot> snapshots,
                     std::span<const std::vector<DailyTimeline>> daily) {
    if (snapshots.size() != daily.size()) throw ShapeError("write_timelines: one timeline set per snapshot");
    auto os = open_out(path);
    os << kTimelineHeader << '\n';
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        const auto& g = snapshots[i].graph;
        const auto date = format_date(snapshots[i].prediction_time);
        if (daily[i].size() != g.edge_count()) throw ShapeError("write_timelines: one timeline per edge");
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const auto& ed = g.edges()[e];
            const auto prefix = checked(g.sku()) + "," + date + "," + checked(g.node(ed.src)) + "," +
                                checked(g.node(ed.dst)) + ",";
            for (std::size_t h = 0; h < daily[i][e].size(); ++h) {
                os << prefix << h << ',' << format_number(daily[i][e][h]) << '\n';
            }
        }
    }
}

void write_rollouts(const fs::path& path, std::span<const NetworkSnapshot> snapshots,
                    std::span<const SnapshotPrediction> predictions) {
    if (snapshots.size() != predictions.size()) throw ShapeError("write_rollouts: one prediction per snapshot");
    auto os = open_out(path);
    os << kRolloutHeader << '\n';
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        const auto& g = snapshots[i].graph;
        const auto date = format_date(snapshots[i].prediction_time);
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            const auto& n = predictions[i].nodes.at(v);
            for (std::size_t w = 0; w < n.incoming.size(); ++w) {
                os << checked(g.sku()) << ',' << date << ',' << checked(g.node(v)) << ',' << w << ','
                   << format_number(n.inventory[w]) << ',' << format_number(n.incoming[w]) << ','
                   << format_number(n.outgoing[w]) << ',' << format_number(n.capacity[w]) << ','
                   << format_number(n.outgoing_unclipped[w]) << ',' << format_number(n.inventory[w + 1]) << '\n';
            }
        }
    }
}

void write_prediction_set(const fs::path& dir, std::span<const NetworkSnapshot> snapshots,
                          std::span<const SnapshotPrediction> predictions) {
    fs::create_directories(dir);
    std::vector<std::vector<DailyTimeline>> daily;
    for (const auto& p : predictions) daily.push_back(p.daily);
    write_timelines(dir / "timelines.csv", snapshots, daily);
    write_rollouts(dir / "rollout.csv", snapshots, predictions);
}

std::vector<SnapshotPrediction> read_prediction_set(const fs::path& dir, const Dataset& dataset) {
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<SnapshotPrediction> out(dataset.snapshots.size());
    for (std::size_t i = 0; i < dataset.snapshots.size(); ++i) {
        const auto& s = dataset.snapshots[i];
        index[{s.graph.sku(), format_date(s.prediction_time)}] = i;
        const auto weeks = static_cast<std::size_t>(s.horizon_weeks());
        out[i].daily.assign(s.graph.edge_count(), DailyTimeline(static_cast<std::size_t>(s.horizon_days), 0.0));
        NodeRollout blank;
        blank.inventory.assign(weeks + 1, 0.0);
        for (auto* f : {&blank.incoming, &blank.outgoing, &blank.outgoing_unclipped, &blank.capacity, &blank.demand})
            f->assign(weeks, 0.0);
        out[i].nodes.assign(s.graph.node_count(), blank);
    }
    std::vector<bool> seen(out.size(), false);

    auto locate = [&](const std::string& sku, const std::string& date, const fs::path& path, std::size_t line) {
        auto it = index.find({sku, date});
        if (it == index.end()) {
            throw DataError(path.filename().string() + ":" + std::to_string(line) + ": no snapshot " + sku + "@" + date);
        }
        return it->second;
    };

    const auto tpath = dir / "timelines.csv";
    read_csv(tpath, kTimelineHeader, 6, [&](const std::vector<std::string>& c, std::size_t line) {
        const auto i = locate(c[0], c[1], tpath, line);
        const auto& g = dataset.snapshots[i].graph;
        const auto e = g.contains(c[2]) && g.contains(c[3]) ? g.find_edge(g.index_of(c[2]), g.index_of(c[3]))
                                                            : std::nullopt;
        if (!e) throw DataError("timelines.csv:" + std::to_string(line) + ": unknown edge " + c[2] + "->" + c[3]);
        const int day = parse_int(c[4], tpath, line);
        if (day < 0 || day >= dataset.snapshots[i].horizon_days) {
            throw DataError("timelines.csv:" + std::to_string(line) + ": day outside the horizon");
        }
        out[i].daily[*e][static_cast<std::size_t>(day)] = parse_number(c[5], tpath, line);
        seen[i] = true;
    });

    const auto rpath = dir / "rollout.csv";
    read_csv(rpath, kRolloutHeader, 10, [&](const std::vector<std::string>& c, std::size_t line) {
        const auto i = locate(c[0], c[1], rpath, line);
        const auto& g = dataset.snapshots[i].graph;
        if (!g.contains(c[2])) throw DataError("rollout.csv:" + std::to_string(line) + ": unknown node " + c[2]);
        const int w = parse_int(c[3], rpath, line);
        auto& n = out[i].nodes[g.index_of(c[2])];
        if (w < 0 || static_cast<std::size_t>(w) >= n.incoming.size()) {
            throw DataError("rollout.csv:" + std::to_string(line) + ": week outside the horizon");
        }
        const auto k = static_cast<std::size_t>(w);
        n.inventory[k] = parse_number(c[4], rpath, line);
        n.incoming[k] = parse_number(c[5], rpath, line);
        n.outgoing[k] = parse_number(c[6], rpath, line);
        n.capacity[k] = parse_number(c[7], rpath, line);
        n.outgoing_unclipped[k] = parse_number(c[8], rpath, line);
        n.inventory[k + 1] = parse_number(c[9], rpath, line);
        seen[i] = true;
    });

    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw DataError("prediction set has no rows for snapshot " + dataset.snapshots[i].id());
    return out;
}

MetricTable evaluate_predictions(const Dataset& dataset, std::span<const SnapshotPrediction> predictions,
                                 const PenaltyFunction& penalty) {
    if (predictions.size() != dataset.snapshots.size()) throw ShapeError("evaluate: one prediction per snapshot");
    std::vector<CumulativeTimeline> pred_cum;
    std::vector<DailyTimeline> pred_daily, actual_daily;
    std::vector<std::vector<double>> pred_inv, actual_inv;
    std::vector<AlignedEvent> aligned;
    std::vector<RolloutResult> rollouts;
    std::vector<std::vector<std::vector<double>>> rollout_actual;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& s = dataset.snapshots[i];
        if (!s.has_labels()) throw DataError("snapshot " + s.id() + " has no labels");
        const auto& p = predictions[i];
        for (std::size_t e = 0; e < p.daily.size(); ++e) {
            pred_cum.push_back(cumulative(p.daily[e]));
            pred_daily.push_back(p.daily[e]);
            actual_daily.push_back(s.label_daily_outgoing[e]);
            const auto a = align_events(p.daily[e], s.label_daily_outgoing[e]);
            aligned.insert(aligned.end(), a.begin(), a.end());
        }
        RolloutResult r;
        r.nodes = p.nodes;
        for (std::size_t v = 0; v < p.nodes.size(); ++v) {
            const auto& inv = p.nodes[v].inventory;
            pred_inv.emplace_back(inv.begin(), inv.end() - 1);
            actual_inv.push_back(s.label_weekly_inventory[v]);
        }
        rollouts.push_back(std::move(r));
        rollout_actual.push_back(s.label_weekly_inventory);
    }
    auto guarded = [](auto&& f) {
        try {
            return f();
        } catch (const DegenerateDataset&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    return {
        {"smace", guarded([&] { return smace(pred_cum, actual_daily); })},
        {"generalized_smace", guarded([&] { return generalized_smace(aligned, penalty); })},
        {"wmape", guarded([&] { return wmape(pred_inv, actual_inv); })},
        {"kappa", guarded([&] { return kappa(rollouts, rollout_actual); })},
        {"bias", guarded([&] { return bias(pred_daily, actual_daily); })},
        {"kappa_unfloored", guarded([&] { return kappa(rollouts, rollout_actual, false); })},
    };
}

}  // namespace supplycast
