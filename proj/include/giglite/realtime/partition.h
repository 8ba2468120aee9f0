#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "giglite/graph.h"
#include "giglite/sampler.h"
#include "giglite/split.h"

namespace giglite {

struct PartitionPlan {
    uint32_t n_partitions = 1;
    uint64_t seed = 0;
    /// Edges live on owner(src) by default; with this flag on owner(dst), and the
    /// sampler then expands along incoming adjacency.
    bool collocate_on_dst = false;

    /// fnv1a64(seed_le64 || node bytes) mod n_partitions.
    uint32_t owner(const NodeRef& n) const;
    Direction direction() const { return collocate_on_dst ? Direction::kIn : Direction::kOut; }
    /// Throws ConfigError when n_partitions < 1.
    void validate() const;
};

struct StoredEdge {
    uint32_t edge_type = 0;
    uint64_t src = 0;
    uint64_t dst = 0;
    std::vector<float> features;

    bool operator==(const StoredEdge&) const = default;
};

/// Sorted adjacency of one owned node along one edge type, as seen from the
/// collocation side. Undirected edges appear in the rows of both endpoints even though
/// the edge itself is stored once.
struct AdjacencyRow {
    std::vector<SampledNeighbor> entries;  // sorted by neighbor id
};

struct PartitionData {
    uint32_t id = 0;
    PartitionPlan plan;
    GraphSchema schema;
    std::map<NodeRef, std::vector<float>> nodes;  // owned nodes with features
    std::map<std::pair<NodeRef, uint32_t>, AdjacencyRow> rows;
    std::vector<StoredEdge> edges;  // edges whose collocation endpoint is owned here
};

std::vector<PartitionData> partition_graph(const Graph& g, const PartitionPlan& plan);

/// Which message edges and nodes a bucket may see, applied by the service before sampling.
struct SplitMask {
    SplitConfig config;
    Bucket bucket = Bucket::kTrain;

    bool node_visible(const NodeRef& n) const;
    /// Endpoint order does not matter.
    bool edge_visible(const NodeRef& a, const NodeRef& b) const;
};

/// Drops rows, entries and nodes hidden by `mask`.
PartitionData apply_split_mask(const PartitionData& data, const SplitMask& mask);

}  // namespace giglite
