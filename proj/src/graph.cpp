#include "supplycast/graph.hpp"

#include <set>
#include <stdexcept>

#include "supplycast/errors.hpp"

namespace supplycast {

NetworkGraph::NetworkGraph(std::string sku, std::vector<NodeId> nodes,
                           const std::vector<std::pair<NodeId, NodeId>>& edges)
    : sku_(std::move(sku)), nodes_(std::move(nodes)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i], i).second) {
            throw DataError("duplicate node '" + nodes_[i] + "' in graph of " + sku_);
        }
    }
    edges_.reserve(edges.size());
    for (const auto& [src, dst] : edges) {
        auto s = index_.find(src);
        auto d = index_.find(dst);
        if (s == index_.end() || d == index_.end()) {
            throw DataError("edge " + src + "->" + dst + " references an unknown node in " + sku_);
        }
        edges_.push_back({s->second, d->second});
    }
    build_index();
}

NetworkGraph::NetworkGraph(std::string sku, std::vector<NodeId> nodes, std::vector<Edge> edges)
    : sku_(std::move(sku)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i], i).second) {
            throw DataError("duplicate node '" + nodes_[i] + "' in graph of " + sku_);
        }
    }
    for (const auto& e : edges_) {
        if (e.src >= nodes_.size() || e.dst >= nodes_.size()) {
            throw DataError("edge endpoint out of range in graph of " + sku_);
        }
    }
    build_index();
}

void NetworkGraph::build_index() {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    in_edges_.assign(nodes_.size(), {});
    out_edges_.assign(nodes_.size(), {});
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const auto& e = edges_[i];
        if (!seen.emplace(e.src, e.dst).second) {
            throw DataError("duplicate edge " + nodes_[e.src] + "->" + nodes_[e.dst] + " in graph of " + sku_);
        }
        out_edges_[e.src].push_back(i);
        in_edges_[e.dst].push_back(i);
    }
}

std::size_t NetworkGraph::index_of(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw std::out_of_range("unknown node '" + id + "' in graph of " + sku_);
    }
    return it->second;
}

std::optional<std::size_t> NetworkGraph::find_edge(std::size_t src, std::size_t dst) const {
    for (auto e : out_edges_.at(src)) {
        if (edges_[e].dst == dst) return e;
    }
    return std::nullopt;
}

std::vector<std::size_t> NetworkGraph::neighbors_src(std::size_t v) const {
    std::vector<std::size_t> out;
    for (auto e : in_edges_.at(v)) out.push_back(edges_[e].src);
    return out;
}

std::vector<std::size_t> NetworkGraph::neighbors_dest(std::size_t v) const {
    std::vector<std::size_t> out;
    for (auto e : out_edges_.at(v)) out.push_back(edges_[e].dst);
    return out;
}

std::vector<NodeId> NetworkGraph::neighbors_src(const NodeId& v) const {
    std::vector<NodeId> out;
    for (auto u : neighbors_src(index_of(v))) out.push_back(nodes_[u]);
    return out;
}

std::vector<NodeId> NetworkGraph::neighbors_dest(const NodeId& v) const {
    std::vector<NodeId> out;
    for (auto w : neighbors_dest(index_of(v))) out.push_back(nodes_[w]);
    return out;
}

NetworkGraph NetworkGraph::reversed() const {
    std::vector<Edge> flipped;
    flipped.reserve(edges_.size());
    for (const auto& e : edges_) flipped.push_back({e.dst, e.src});
    return NetworkGraph(sku_, nodes_, std::move(flipped));
}

}  // namespace supplycast
