#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace supplycast {

using NodeId = std::string;

/// Directed edge between node indices of the owning graph.
struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// SKU-specific directed supply network. Nodes are kept in insertion order and
/// addressed by index; edges keep the order they were given in.
class NetworkGraph {
public:
    NetworkGraph() = default;

    /// Throws DataError on duplicate nodes, duplicate edges or unknown endpoints.
    NetworkGraph(std::string sku, std::vector<NodeId> nodes,
                 const std::vector<std::pair<NodeId, NodeId>>& edges);
    NetworkGraph(std::string sku, std::vector<NodeId> nodes, std::vector<Edge> edges);

    const std::string& sku() const noexcept { return sku_; }
    std::span<const NodeId> nodes() const noexcept { return nodes_; }
    std::span<const Edge> edges() const noexcept { return edges_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    const NodeId& node(std::size_t index) const { return nodes_.at(index); }
    /// Throws std::out_of_range for an unknown id.
    std::size_t index_of(const NodeId& id) const;
    bool contains(const NodeId& id) const { return index_.count(id) != 0; }
    std::optional<std::size_t> find_edge(std::size_t src, std::size_t dst) const;

    /// Edge indices entering / leaving node v.
    std::span<const std::size_t> in_edges(std::size_t v) const { return in_edges_.at(v); }
    std::span<const std::size_t> out_edges(std::size_t v) const { return out_edges_.at(v); }

    /// N_src(v) = { u | (u, v) in E } and N_dest(v) = { w | (v, w) in E }.
    std::vector<std::size_t> neighbors_src(std::size_t v) const;
    std::vector<std::size_t> neighbors_dest(std::size_t v) const;
    std::vector<NodeId> neighbors_src(const NodeId& v) const;
    std::vector<NodeId> neighbors_dest(const NodeId& v) const;

    /// Same nodes, every edge flipped; edge order is preserved so edge i of the
    /// reversed graph is edge i of this one.
    NetworkGraph reversed() const;

    friend bool operator==(const NetworkGraph& a, const NetworkGraph& b) {
        return a.sku_ == b.sku_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

private:
    void build_index();

    std::string sku_;
    std::vector<NodeId> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<NodeId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> in_edges_;
    std::vector<std::vector<std::size_t>> out_edges_;
};

inline NetworkGraph reverse_graph(const NetworkGraph& g) { return g.reversed(); }

}  // namespace supplycast
