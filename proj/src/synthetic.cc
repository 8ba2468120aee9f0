#include "giglite/synthetic.h"

#include "giglite/error.h"
#include "giglite/hash.h"

namespace giglite {

SbmGraph make_sbm(const SbmConfig& c) {
    if (c.blocks < 1 || c.nodes < c.blocks) throw ConfigError("sbm needs 1 <= blocks <= nodes");
    GraphSchema schema;
    schema.node_types = {{c.node_type, c.blocks}};
    schema.edge_types = {{{c.node_type, c.relation, c.node_type}, false, 0}};
    GraphBuilder b(schema);
    SbmGraph out{Graph{}, std::vector<uint32_t>(c.nodes)};
    SplitMix64 rng(SeedDerivation::derive(c.seed, "sbm", 0, 0));
    std::vector<float> f(c.blocks);
    for (uint32_t i = 0; i < c.nodes; ++i) {
        out.block[i] = i % c.blocks;
        for (uint32_t k = 0; k < c.blocks; ++k) {
            f[k] = static_cast<float>((k == out.block[i] ? 1.0 : 0.0) + c.noise * rng.normal());
        }
        b.add_node(c.node_type, i, f);
    }
    for (uint32_t i = 0; i < c.nodes; ++i) {
        for (uint32_t j = i + 1; j < c.nodes; ++j) {
            const double p = out.block[i] == out.block[j] ? c.p_in : c.p_out;
            if (rng.uniform() < p) b.add_edge(0, i, j);
        }
    }
    out.graph = std::move(b).build();
    return out;
}

Graph make_random_graph(uint64_t seed, const RandomGraphConfig& c) {
    SplitMix64 rng(SeedDerivation::derive(seed, "random-graph", 0, 0));
    const uint32_t na = 2 + static_cast<uint32_t>(rng.below(c.max_nodes / 2));
    const uint32_t nb = 1 + static_cast<uint32_t>(rng.below(c.max_nodes - na));
    GraphSchema schema;
    schema.node_types = {{"a", c.feature_dim}, {"b", c.feature_dim}};
    schema.edge_types = {{{"a", "follows", "a"}, true, c.edge_feature_dim},
                         {{"a", "knows", "a"}, false, c.edge_feature_dim},
                         {{"a", "likes", "b"}, true, c.edge_feature_dim},
                         {{"b", "near", "b"}, false, c.edge_feature_dim}};
    GraphBuilder b(schema);
    std::vector<float> f(c.feature_dim);
    // Sparse, non-contiguous ids exercise id-based ordering.
    auto id_of = [](uint32_t i) { return static_cast<uint64_t>(i) * 7 + 3; };
    for (const auto& [type, count] : {std::pair{"a", na}, std::pair{"b", nb}}) {
        for (uint32_t i = 0; i < count; ++i) {
            for (auto& x : f) x = static_cast<float>(rng.normal());
            b.add_node(type, id_of(i), f);
        }
    }
    std::vector<float> ef(c.edge_feature_dim);
    auto maybe_edges = [&](size_t e, uint32_t ns, uint32_t nd, bool undirected, bool self_loops) {
        for (uint32_t i = 0; i < ns; ++i) {
            for (uint32_t j = undirected ? i : 0; j < nd; ++j) {
                if (i == j && !self_loops) continue;
                if (rng.uniform() >= c.edge_prob) continue;
                for (auto& x : ef) x = static_cast<float>(rng.uniform());
                b.add_edge(e, id_of(i), id_of(j), ef);
            }
        }
    };
    maybe_edges(0, na, na, false, false);
    maybe_edges(1, na, na, true, false);
    maybe_edges(2, na, nb, false, false);
    maybe_edges(3, nb, nb, true, true);
    return std::move(b).build();
}

}  // namespace giglite
