#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "supplycast/autodiff/ops.hpp"
#include "supplycast/graph.hpp"
#include "supplycast/parameters.hpp"

namespace supplycast {

/// Edge lists of a graph in the form the attention layers consume. Attention
/// runs over n self entries followed by one entry per edge, each entry
/// grouped under the node that receives the message.
struct GraphIndex {
    std::size_t node_count = 0;
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    std::vector<std::size_t> segment;  ///< 0..n-1 then dst of every edge

    static GraphIndex from(const NetworkGraph& g);
    GraphIndex reversed() const;
};

/// One graph attention convolution with edge features, GATv2 style:
///   o_ij   = c^T LeakyReLU(W0 h_i + W1 h_j + W2 e_ji)
///   alpha  = softmax over j in N_src(i) plus i itself
///   h_i'   = act(alpha_ii W0 h_i + sum_j alpha_ij (W1 h_j + W2 e_ji))
/// The self entry scores with W1 h_i and a zero edge feature.
struct GatLayer {
    struct Head {
        std::size_t w0 = 0;    ///< in_dim x out_dim
        std::size_t w1 = 0;    ///< in_dim x out_dim
        std::size_t w2 = 0;    ///< edge_dim x out_dim
        std::size_t attn = 0;  ///< out_dim x 1
    };

    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::size_t edge_dim = 0;
    bool concat_heads = true;  ///< false averages heads
    bool activation = true;
    double slope = 0.01;
    std::vector<Head> heads;

    std::size_t output_dim() const { return concat_heads ? out_dim * heads.size() : out_dim; }
};

GatLayer make_gat_layer(ParameterSet& params, const std::string& prefix, std::size_t in_dim, std::size_t out_dim,
                        std::size_t edge_dim, std::size_t head_count, bool concat_heads, bool activation,
                        double slope, std::mt19937_64& rng);

/// Throws ShapeError when h or e do not match the layer dimensions.
/// `attention`, when given, receives one (n + |E|) x 1 weight column per head.
ad::Var gat_layer(std::span<const ad::Var> params, const GatLayer& layer, ad::Var h, ad::Var e,
                  const GraphIndex& graph, std::vector<ad::Tensor>* attention = nullptr);

/// L stacked layers: hidden layers concatenate heads and apply LeakyReLU, the
/// last layer averages heads with no activation.
struct GatStack {
    std::vector<GatLayer> layers;

    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().output_dim(); }
};

GatStack make_gat_stack(ParameterSet& params, const std::string& prefix, std::size_t in_dim, std::size_t edge_dim,
                        const std::vector<std::size_t>& widths, std::size_t head_count, double slope,
                        std::mt19937_64& rng);

ad::Var gat_stack(std::span<const ad::Var> params, const GatStack& stack, ad::Var x, ad::Var e,
                  const GraphIndex& graph);

/// u = [GAT_f(x, a, G) || GAT_b(x, a, G^R)]; the reverse pass reads the
/// feature of edge (v, w) for the flipped edge (w, v).
ad::Var embed_bidirectional(std::span<const ad::Var> params, const GatStack& forward, const GatStack& backward,
                            ad::Var x, ad::Var a, const GraphIndex& graph);

}  // namespace supplycast
