#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "giglite/graph.h"
#include "giglite/sampler.h"

namespace giglite {

/// Local indices of one sample's roots inside a BatchGraph.
struct SampleSlots {
    uint32_t anchor = 0;
    std::vector<uint32_t> positives;
    std::vector<uint32_t> negatives;
    std::optional<int64_t> label;
};

/// Several samples' subgraphs laid out back to back. Every rooted subgraph keeps its
/// own node block, so nodes shared between subgraphs get separate local indices and
/// each root's embedding depends only on its own subgraph.
struct BatchGraph {
    uint32_t feature_dim = 0;
    std::vector<float> features;  // num_nodes x feature_dim, row-major
    std::vector<NodeRef> nodes;
    std::vector<uint32_t> hops;
    std::vector<std::pair<uint32_t, uint32_t>> edges;  // (src, dst) local, messages src -> dst
    std::vector<uint32_t> sample_offsets;              // node range of sample i: [off[i], off[i+1])
    std::vector<SampleSlots> samples;

    // Incoming message lists per node (CSR over dst), derived from `edges`.
    std::vector<uint32_t> in_offsets;
    std::vector<uint32_t> in_sources;

    size_t num_nodes() const { return nodes.size(); }
    std::span<const uint32_t> in_neighbors(uint32_t v) const {
        return {in_sources.data() + in_offsets[v], in_sources.data() + in_offsets[v + 1]};
    }
};

/// Throws ConfigError on mixed sample kinds and SchemaError on mismatched feature dimensions.
BatchGraph collate(std::span<const TrainingSample> samples);
BatchGraph collate(std::span<const TrainingSample* const> samples);

/// One block per subgraph, each recorded as an anchor-only sample.
BatchGraph collate_subgraphs(std::span<const RootedSubgraph> subgraphs);

/// Rebuilds the in-neighbor CSR after `edges` changed.
void index_incoming(BatchGraph& batch);

}  // namespace giglite
