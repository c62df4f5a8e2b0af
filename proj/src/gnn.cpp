#include "supplycast/gnn.hpp"

#include "supplycast/errors.hpp"

namespace supplycast {

GraphIndex GraphIndex::from(const NetworkGraph& g) {
    GraphIndex idx;
    idx.node_count = g.node_count();
    for (const auto& e : g.edges()) {
        idx.src.push_back(e.src);
        idx.dst.push_back(e.dst);
    }
    idx.segment.reserve(idx.node_count + idx.dst.size());
    for (std::size_t v = 0; v < idx.node_count; ++v) idx.segment.push_back(v);
    idx.segment.insert(idx.segment.end(), idx.dst.begin(), idx.dst.end());
    return idx;
}

GraphIndex GraphIndex::reversed() const {
    GraphIndex idx;
    idx.node_count = node_count;
    idx.src = dst;
    idx.dst = src;
    for (std::size_t v = 0; v < node_count; ++v) idx.segment.push_back(v);
    idx.segment.insert(idx.segment.end(), idx.dst.begin(), idx.dst.end());
    return idx;
}

GatLayer make_gat_layer(ParameterSet& params, const std::string& prefix, std::size_t in_dim, std::size_t out_dim,
                        std::size_t edge_dim, std::size_t head_count, bool concat_heads, bool activation,
                        double slope, std::mt19937_64& rng) {
    GatLayer layer;
    layer.in_dim = in_dim;
    layer.out_dim = out_dim;
    layer.edge_dim = edge_dim;
    layer.concat_heads = concat_heads;
    layer.activation = activation;
    layer.slope = slope;
    for (std::size_t h = 0; h < head_count; ++h) {
        const auto p = prefix + ".head" + std::to_string(h);
        GatLayer::Head head;
        head.w0 = params.add(p + ".W0", glorot_uniform(in_dim, out_dim, rng));
        head.w1 = params.add(p + ".W1", glorot_uniform(in_dim, out_dim, rng));
        head.w2 = params.add(p + ".W2", glorot_uniform(edge_dim, out_dim, rng));
        head.attn = params.add(p + ".c", glorot_uniform(out_dim, 1, rng));
        layer.heads.push_back(head);
    }
    return layer;
}

ad::Var gat_layer(std::span<const ad::Var> params, const GatLayer& layer, ad::Var h, ad::Var e,
                  const GraphIndex& graph, std::vector<ad::Tensor>* attention) {
    if (h.cols() != layer.in_dim || h.rows() != graph.node_count) {
        throw ShapeError("gat_layer: node features " + h.value().shape_string() + " for " +
                         std::to_string(graph.node_count) + " nodes of width " + std::to_string(layer.in_dim));
    }
    if (e.cols() != layer.edge_dim || e.rows() != graph.src.size()) {
        throw ShapeError("gat_layer: edge features " + e.value().shape_string() + " for " +
                         std::to_string(graph.src.size()) + " edges of width " + std::to_string(layer.edge_dim));
    }
    if (attention) attention->clear();

    std::vector<ad::Var> outputs;
    for (const auto& head : layer.heads) {
        auto p0 = ad::matmul(h, params[head.w0]);
        auto p1 = ad::matmul(h, params[head.w1]);
        auto p2 = ad::matmul(e, params[head.w2]);
        auto from_src = ad::gather_rows(p1, graph.src);

        auto self_score = ad::matmul(ad::leaky_relu(ad::add(p0, p1), layer.slope), params[head.attn]);
        auto edge_pre = ad::add(ad::add(ad::gather_rows(p0, graph.dst), from_src), p2);
        auto edge_score = ad::matmul(ad::leaky_relu(edge_pre, layer.slope), params[head.attn]);
        auto alpha = ad::segment_softmax(ad::concat_rows({self_score, edge_score}), graph.segment,
                                         graph.node_count);
        if (attention) attention->push_back(alpha.value());

        auto messages = ad::concat_rows({p0, ad::add(from_src, p2)});
        auto out = ad::scatter_add_rows(ad::mul_rows(messages, alpha), graph.segment, graph.node_count);
        if (layer.activation) out = ad::leaky_relu(out, layer.slope);
        outputs.push_back(out);
    }

    if (layer.concat_heads) return outputs.size() == 1 ? outputs.front() : ad::concat_cols(outputs);
    auto total = outputs.front();
    for (std::size_t k = 1; k < outputs.size(); ++k) total = ad::add(total, outputs[k]);
    return ad::scale(total, 1.0 / static_cast<double>(outputs.size()));
}

GatStack make_gat_stack(ParameterSet& params, const std::string& prefix, std::size_t in_dim, std::size_t edge_dim,
                        const std::vector<std::size_t>& widths, std::size_t head_count, double slope,
                        std::mt19937_64& rng) {
    GatStack stack;
    std::size_t dim = in_dim;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const bool last = l + 1 == widths.size();
        stack.layers.push_back(make_gat_layer(params, prefix + ".layer" + std::to_string(l), dim, widths[l],
                                              edge_dim, head_count, !last, !last, slope, rng));
        dim = stack.layers.back().output_dim();
    }
    return stack;
}

ad::Var gat_stack(std::span<const ad::Var> params, const GatStack& stack, ad::Var x, ad::Var e,
                  const GraphIndex& graph) {
    auto h = x;
    for (const auto& layer : stack.layers) h = gat_layer(params, layer, h, e, graph);
    return h;
}

ad::Var embed_bidirectional(std::span<const ad::Var> params, const GatStack& forward, const GatStack& backward,
                            ad::Var x, ad::Var a, const GraphIndex& graph) {
    auto uf = gat_stack(params, forward, x, a, graph);
    auto ub = gat_stack(params, backward, x, a, graph.reversed());
    return ad::concat_cols({uf, ub});
}

}  // namespace supplycast
