#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "giglite/graph.h"

namespace giglite {

struct SbmConfig {
    uint32_t nodes = 2000;
    uint32_t blocks = 10;
    double p_in = 0.05;
    double p_out = 0.002;
    double noise = 0.5;  // std of Gaussian noise added to the block one-hot
    uint64_t seed = 0;
    std::string node_type = "user";
    std::string relation = "friend";
};

struct SbmGraph {
    Graph graph;
    std::vector<uint32_t> block;  // block of node id i; blocks are assigned as i mod blocks
};

/// Undirected stochastic block model with one-hot-plus-noise features.
SbmGraph make_sbm(const SbmConfig& config);

struct RandomGraphConfig {
    uint32_t max_nodes = 50;
    double edge_prob = 0.08;
    uint32_t feature_dim = 2;
    uint32_t edge_feature_dim = 1;
};

/// Two node types ("a", "b") and four edge types mixing directed and undirected
/// relations: a-follows->a, a-knows-a, a-likes->b, b-near-b.
Graph make_random_graph(uint64_t seed, const RandomGraphConfig& config = {});

}  // namespace giglite
