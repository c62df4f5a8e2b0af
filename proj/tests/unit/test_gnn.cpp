#include "doctest.h"

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "supplycast/errors.hpp"
#include "supplycast/gnn.hpp"

using namespace supplycast;
using namespace supplycast::ad;
using testutil::random_tensor;

namespace {

NetworkGraph small_graph() {
    return NetworkGraph("s", {"P", "D", "R1", "R2", "X"},
                        std::vector<std::pair<NodeId, NodeId>>{{"P", "D"}, {"D", "R1"}, {"D", "R2"}, {"P", "R2"}});
}

double lrelu(double x) { return x > 0 ? x : 0.01 * x; }

// Direct loop implementation of one attention head without activation.
Tensor reference_head(const Tensor& h, const Tensor& e, const GraphIndex& g, const Tensor& W0, const Tensor& W1,
                      const Tensor& W2, const Tensor& c) {
    const std::size_t n = h.rows(), d = W0.cols();
    auto proj = [&](const Tensor& W, const Tensor& x, std::size_t r) {
        std::vector<double> out(d, 0.0);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < W.rows(); ++k) out[j] += x(r, k) * W(k, j);
        return out;
    };
    auto score = [&](const std::vector<double>& z) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += c(j, 0) * lrelu(z[j]);
        return s;
    };
    Tensor out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto a0 = proj(W0, h, i), a1 = proj(W1, h, i);
        std::vector<double> zself(d);
        for (std::size_t j = 0; j < d; ++j) zself[j] = a0[j] + a1[j];
        std::vector<double> scores{score(zself)};
        std::vector<std::vector<double>> msgs{a0};
        for (std::size_t k = 0; k < g.src.size(); ++k) {
            if (g.dst[k] != i) continue;
            auto b1 = proj(W1, h, g.src[k]), b2 = proj(W2, e, k);
            std::vector<double> z(d), m(d);
            for (std::size_t j = 0; j < d; ++j) {
                z[j] = a0[j] + b1[j] + b2[j];
                m[j] = b1[j] + b2[j];
            }
            scores.push_back(score(z));
            msgs.push_back(m);
        }
        double mx = scores[0];
        for (double s : scores) mx = std::max(mx, s);
        double z = 0.0;
        for (double s : scores) z += std::exp(s - mx);
        for (std::size_t k = 0; k < scores.size(); ++k)
            for (std::size_t j = 0; j < d; ++j) out(i, j) += std::exp(scores[k] - mx) / z * msgs[k][j];
    }
    return out;
}

}  // namespace

TEST_CASE("single head matches a direct loop implementation") {
    std::mt19937_64 rng(1);
    auto g = small_graph();
    auto idx = GraphIndex::from(g);
    ParameterSet params;
    auto layer = make_gat_layer(params, "l", 3, 4, 2, 1, false, false, 0.01, rng);
    auto h = random_tensor(5, 3, rng);
    auto e = random_tensor(4, 2, rng);

    Tape tape;
    auto vars = params.bind(tape);
    std::vector<Tensor> attn;
    auto out = gat_layer(vars, layer, tape.constant(h), tape.constant(e), idx, &attn).value();
    const auto& hd = layer.heads[0];
    auto ref = reference_head(h, e, idx, params.value(hd.w0), params.value(hd.w1), params.value(hd.w2),
                              params.value(hd.attn));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));

    REQUIRE(attn.size() == 1);
    std::vector<double> per_node(5, 0.0);
    for (std::size_t k = 0; k < idx.segment.size(); ++k) per_node[idx.segment[k]] += attn[0][k];
    for (double s : per_node) CHECK(s == doctest::Approx(1.0));
    // Node X has no sources so all attention is on itself.
    CHECK(attn[0][4] == doctest::Approx(1.0));
}

TEST_CASE("head combination and shapes") {
    std::mt19937_64 rng(2);
    auto idx = GraphIndex::from(small_graph());
    ParameterSet params;
    auto stack = make_gat_stack(params, "f", 6, 3, {8, 5}, 3, 0.01, rng);
    CHECK(stack.layers[0].output_dim() == 24);
    CHECK(stack.output_dim() == 5);
    CHECK(params.size() == 2 * 3 * 4);

    Tape tape;
    auto vars = params.bind(tape, false);
    auto x = tape.constant(random_tensor(5, 6, rng));
    auto e = tape.constant(random_tensor(4, 3, rng));
    auto u = gat_stack(vars, stack, x, e, idx);
    CHECK(u.rows() == 5);
    CHECK(u.cols() == 5);
    CHECK_THROWS_AS(gat_stack(vars, stack, tape.constant(Tensor(5, 7)), e, idx), ShapeError);
    CHECK_THROWS_AS(gat_stack(vars, stack, x, tape.constant(Tensor(3, 3)), idx), ShapeError);
}

TEST_CASE("bidirectional embedding equals forward on g and backward on the reverse") {
    std::mt19937_64 rng(3);
    auto g = small_graph();
    ParameterSet params;
    auto f = make_gat_stack(params, "f", 4, 2, {6, 3}, 2, 0.01, rng);
    auto b = make_gat_stack(params, "b", 4, 2, {6, 3}, 2, 0.01, rng);
    auto x = random_tensor(5, 4, rng);
    auto e = random_tensor(4, 2, rng);

    Tape tape;
    auto vars = params.bind(tape, false);
    auto u = embed_bidirectional(vars, f, b, tape.constant(x), tape.constant(e), GraphIndex::from(g)).value();
    auto uf = gat_stack(vars, f, tape.constant(x), tape.constant(e), GraphIndex::from(g)).value();
    auto ub = gat_stack(vars, b, tape.constant(x), tape.constant(e), GraphIndex::from(g.reversed())).value();
    CHECK(u.cols() == 6);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(u(r, c) == doctest::Approx(uf(r, c)));
            CHECK(u(r, c + 3) == doctest::Approx(ub(r, c)));
        }
}

TEST_CASE("relabeling nodes permutes the embedding") {
    std::mt19937_64 rng(4);
    ParameterSet params;
    auto f = make_gat_stack(params, "f", 3, 2, {4, 2}, 2, 0.01, rng);
    auto b = make_gat_stack(params, "b", 3, 2, {4, 2}, 2, 0.01, rng);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3 + trial % 5;
        std::vector<NodeId> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("v" + std::to_string(i));
        std::vector<std::pair<NodeId, NodeId>> edges;
        std::bernoulli_distribution keep(0.4);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t c = 0; c < n; ++c)
                if (a != c && keep(rng)) edges.emplace_back(names[a], names[c]);
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<NodeId> shuffled(n);
        for (std::size_t i = 0; i < n; ++i) shuffled[perm[i]] = names[i];

        NetworkGraph g1("s", names, edges), g2("s", shuffled, edges);
        auto x1 = random_tensor(n, 3, rng);
        Tensor x2(n, 3);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < 3; ++c) x2(perm[i], c) = x1(i, c);
        auto e = random_tensor(edges.size(), 2, rng);

        Tape tape;
        auto vars = params.bind(tape, false);
        auto u1 = embed_bidirectional(vars, f, b, tape.constant(x1), tape.constant(e), GraphIndex::from(g1)).value();
        auto u2 = embed_bidirectional(vars, f, b, tape.constant(x2), tape.constant(e), GraphIndex::from(g2)).value();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < u1.cols(); ++c) CHECK(u1(i, c) == doctest::Approx(u2(perm[i], c)));
    }
}

TEST_CASE("stack gradients") {
    std::mt19937_64 rng(9);
    auto idx = GraphIndex::from(small_graph());
    ParameterSet params;
    auto stack = make_gat_stack(params, "f", 3, 2, {4, 2}, 2, 0.01, rng);
    auto x = random_tensor(5, 3, rng);
    auto e = random_tensor(4, 2, rng);
    auto target = random_tensor(5, 2, rng);
    auto f = [&](Tape& tape, const std::vector<Var>& v) {
        std::vector<Var> ps(v.begin() + 2, v.end());
        return squared_error(gat_stack(ps, stack, v[0], v[1], idx), tape.constant(target));
    };
    std::vector<Tensor> inputs{x, e};
    for (const auto& p : params.values()) inputs.push_back(p);
    CHECK(testutil::gradcheck(f, inputs, 1e-6, 1e-5) < 1e-4);
}
