#include "supplycast/dataset.hpp"

#include <fstream>
#include <map>
#include <tuple>

#include "json.hpp"
#include "supplycast/errors.hpp"

namespace supplycast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "supplycast-dataset";
constexpr int kVersion = 1;

using SnapshotKey = std::pair<std::string, std::string>;  // sku, date

struct SnapshotBuilder {
    std::string sku;
    Date date{};
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<NodeId> nodes;
    std::vector<NodeState> node_states;
    std::map<std::pair<NodeId, NodeId>, EdgeState> edge_states;
    std::map<std::pair<NodeId, NodeId>, std::vector<double>> edge_labels;
    std::map<NodeId, std::vector<double>> node_labels;
};

template <typename Fn>
void for_each_line(const fs::path& path, bool required, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        if (required) throw DataError("cannot open " + path.string());
        return;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& ex) {
            throw DataError(path.filename().string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
}

std::vector<double> numbers(const json& j) { return j.get<std::vector<double>>(); }

template <typename Record>
std::vector<Record> records(const json& j) {
    std::vector<Record> out;
    if (j.is_null()) return out;
    for (const auto& r : j) out.push_back({r.at("day").get<int>(), r.at("qty").get<double>()});
    return out;
}

template <typename Record>
json records_json(const std::vector<Record>& rs) {
    json out = json::array();
    for (const auto& r : rs) out.push_back({{"day", r.day}, {"qty", r.quantity}});
    return out;
}

void write_line(std::ofstream& out, const json& j) { out << j.dump() << '\n'; }

}  // namespace

Dataset read_dataset(const fs::path& dir) {
    Dataset ds;
    {
        std::ifstream in(dir / "dataset.json");
        if (!in) throw DataError("cannot open " + (dir / "dataset.json").string());
        json meta;
        try {
            meta = json::parse(in);
        } catch (const json::exception& ex) {
            throw DataError(std::string("dataset.json: ") + ex.what());
        }
        if (meta.value("format", "") != kFormat) throw DataError("dataset.json: unknown format");
        if (meta.value("version", 0) != kVersion) throw DataError("dataset.json: unsupported version");
        ds.horizon_days = meta.at("horizon_days").get<int>();
    }

    std::vector<SnapshotKey> order;
    std::map<SnapshotKey, SnapshotBuilder> builders;
    auto builder = [&](const json& j) -> SnapshotBuilder& {
        SnapshotKey key{j.at("sku").get<std::string>(), j.at("date").get<std::string>()};
        auto [it, inserted] = builders.try_emplace(key);
        if (inserted) {
            order.push_back(key);
            it->second.sku = key.first;
            it->second.date = parse_date(key.second);
        }
        return it->second;
    };

    for_each_line(dir / "nodes.jsonl", true, [&](const json& j) {
        auto& b = builder(j);
        b.nodes.push_back(j.at("node").get<std::string>());
        NodeState s;
        s.inventory_start = j.at("inventory").get<double>();
        s.planned_inventory = numbers(j.at("planned_inventory"));
        s.demand_forecast = numbers(j.at("demand_forecast"));
        s.planned_incoming = numbers(j.at("planned_incoming"));
        s.planned_outgoing = numbers(j.at("planned_outgoing"));
        b.node_states.push_back(std::move(s));
    });
    for_each_line(dir / "graph.jsonl", true, [&](const json& j) {
        builder(j).edges.emplace_back(j.at("src").get<std::string>(), j.at("dst").get<std::string>());
    });
    for_each_line(dir / "edges.jsonl", true, [&](const json& j) {
        EdgeState s;
        s.planned = records<PlannedEvent>(j.value("planned", json()));
        s.history = records<ShipmentRecord>(j.value("history", json()));
        s.in_transit = records<ShipmentRecord>(j.value("in_transit", json()));
        builder(j).edge_states[{j.at("src").get<std::string>(), j.at("dst").get<std::string>()}] = std::move(s);
    });
    for_each_line(dir / "labels.jsonl", false, [&](const json& j) {
        auto& b = builder(j);
        if (j.contains("daily_outgoing")) {
            b.edge_labels[{j.at("src").get<std::string>(), j.at("dst").get<std::string>()}] =
                numbers(j.at("daily_outgoing"));
        } else {
            b.node_labels[j.at("node").get<std::string>()] = numbers(j.at("weekly_inventory"));
        }
    });
    for_each_line(dir / "leadtimes.jsonl", false, [&](const json& j) {
        ds.leadtime_log.push_back({j.at("sku").get<std::string>(), j.at("src").get<std::string>(),
                                   j.at("dst").get<std::string>(), parse_date(j.at("ship").get<std::string>()),
                                   parse_date(j.at("receive").get<std::string>())});
    });

    for (const auto& key : order) {
        auto& b = builders.at(key);
        NetworkSnapshot snap;
        snap.graph = NetworkGraph(b.sku, b.nodes, b.edges);
        snap.prediction_time = b.date;
        snap.horizon_days = ds.horizon_days;
        snap.node_states = std::move(b.node_states);
        const bool labeled = !b.edge_labels.empty() || !b.node_labels.empty();
        for (const auto& [src, dst] : b.edges) {
            auto it = b.edge_states.find({src, dst});
            snap.edge_states.push_back(it == b.edge_states.end() ? EdgeState{} : it->second);
            if (labeled) {
                auto lt = b.edge_labels.find({src, dst});
                if (lt == b.edge_labels.end()) {
                    throw DataError("snapshot " + snap.id() + ": missing label for edge " + src + "->" + dst);
                }
                snap.label_daily_outgoing.push_back(lt->second);
            }
        }
        if (labeled) {
            for (const auto& node : b.nodes) {
                auto lt = b.node_labels.find(node);
                if (lt == b.node_labels.end()) {
                    throw DataError("snapshot " + snap.id() + ": missing inventory label for node " + node);
                }
                snap.label_weekly_inventory.push_back(lt->second);
            }
        }
        snap.validate();
        ds.snapshots.push_back(std::move(snap));
    }
    attach_leadtime_history(ds);
    return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream meta(dir / "dataset.json");
        meta << json{{"format", kFormat}, {"version", kVersion}, {"horizon_days", ds.horizon_days}}.dump(2) << '\n';
    }
    std::ofstream graph(dir / "graph.jsonl");
    std::ofstream nodes(dir / "nodes.jsonl");
    std::ofstream edges(dir / "edges.jsonl");
    std::ofstream labels(dir / "labels.jsonl");
    for (const auto& s : ds.snapshots) {
        const auto& g = s.graph;
        const auto date = format_date(s.prediction_time);
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            const auto& st = s.node_states[v];
            write_line(nodes, {{"sku", g.sku()},
                               {"date", date},
                               {"node", g.node(v)},
                               {"inventory", st.inventory_start},
                               {"planned_inventory", st.planned_inventory},
                               {"demand_forecast", st.demand_forecast},
                               {"planned_incoming", st.planned_incoming},
                               {"planned_outgoing", st.planned_outgoing}});
        }
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const auto& edge = g.edges()[e];
            const auto& src = g.node(edge.src);
            const auto& dst = g.node(edge.dst);
            write_line(graph, {{"sku", g.sku()}, {"date", date}, {"src", src}, {"dst", dst}});
            const auto& st = s.edge_states[e];
            write_line(edges, {{"sku", g.sku()},
                               {"date", date},
                               {"src", src},
                               {"dst", dst},
                               {"planned", records_json(st.planned)},
                               {"history", records_json(st.history)},
                               {"in_transit", records_json(st.in_transit)}});
        }
        if (s.has_labels()) {
            for (std::size_t e = 0; e < g.edge_count(); ++e) {
                const auto& edge = g.edges()[e];
                write_line(labels, {{"sku", g.sku()},
                                    {"date", date},
                                    {"src", g.node(edge.src)},
                                    {"dst", g.node(edge.dst)},
                                    {"daily_outgoing", s.label_daily_outgoing[e]}});
            }
            for (std::size_t v = 0; v < g.node_count(); ++v) {
                write_line(labels, {{"sku", g.sku()},
                                    {"date", date},
                                    {"node", g.node(v)},
                                    {"weekly_inventory", s.label_weekly_inventory[v]}});
            }
        }
    }
    std::ofstream lt(dir / "leadtimes.jsonl");
    for (const auto& r : ds.leadtime_log) {
        write_line(lt, {{"sku", r.sku},
                        {"src", r.src},
                        {"dst", r.dst},
                        {"ship", format_date(r.ship)},
                        {"receive", format_date(r.receive)}});
    }
}

void attach_leadtime_history(Dataset& ds) {
    using EdgeKey = std::tuple<std::string, NodeId, NodeId>;
    std::map<EdgeKey, std::vector<const LeadTimeRecord*>> by_edge;
    for (const auto& r : ds.leadtime_log) by_edge[{r.sku, r.src, r.dst}].push_back(&r);
    for (auto& s : ds.snapshots) {
        const auto& g = s.graph;
        s.leadtime_history.assign(g.edge_count(), {});
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const auto& edge = g.edges()[e];
            auto it = by_edge.find({g.sku(), g.node(edge.src), g.node(edge.dst)});
            if (it == by_edge.end()) continue;
            for (const auto* r : it->second) {
                if (r->receive < s.prediction_time) s.leadtime_history[e].push_back({r->ship, r->receive});
            }
        }
    }
}

}  // namespace supplycast
