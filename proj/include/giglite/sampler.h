#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "giglite/graph.h"
#include "giglite/graph_builder.h"
#include "giglite/hash.h"

namespace giglite {

/// Per-hop neighbor caps; 0 prunes that hop. Optional per-edge-type overrides keyed
/// by EdgeType::key().
struct FanoutSpec {
    std::vector<uint32_t> per_hop;
    std::map<std::string, std::vector<uint32_t>> per_edge_type;

    size_t hops() const { return per_hop.size(); }
    uint32_t fanout(size_t hop, const EdgeType& type) const;
    /// Throws ConfigError when empty or when an override has a different length.
    void validate() const;
    /// 1 + sum_h prod_{h' <= h} max fanout.
    uint64_t max_nodes() const;
};

struct SubgraphNode {
    NodeRef node;
    uint32_t hop = 0;
    std::vector<float> features;

    bool operator==(const SubgraphNode&) const = default;
};

/// Message-direction edge: `dst` is nearer to the root than `src`.
struct SubgraphEdge {
    NodeRef src;
    NodeRef dst;
    std::string edge_type;  // EdgeType::key() of the stored graph edge
    std::vector<float> features;

    bool operator==(const SubgraphEdge&) const = default;
};

struct RootedSubgraph {
    NodeRef root;
    std::vector<SubgraphNode> nodes;  // sorted by (hop, node); root first
    std::vector<SubgraphEdge> edges;  // sorted by (dst, src, edge_type)

    bool operator==(const RootedSubgraph&) const = default;

    const SubgraphNode* find(const NodeRef& n) const;
    void canonicalize();
};

/// One neighbor draw request: pick min(degree, fanout) neighbors of `node` along
/// (edge_type, direction) with the seeded generator.
struct NeighborQuery {
    NodeRef node;
    uint32_t edge_type = 0;
    Direction direction = Direction::kOut;
    uint32_t fanout = 0;
    uint64_t seed = 0;

    auto operator<=>(const NeighborQuery&) const = default;
    bool operator==(const NeighborQuery&) const = default;
};

struct SampledNeighbor {
    NodeRef node;
    std::vector<float> edge_features;

    bool operator==(const SampledNeighbor&) const = default;
};

/// Neighbor selection shared by every backend: sorted adjacency, then
/// choose_without_replacement(degree, fanout, seed). Throws LookupError for unknown nodes.
std::vector<SampledNeighbor> sample_neighbors(const Graph& g, const NeighborQuery& q);

/// Where the k-hop expansion gets its neighbors and features from.
class NeighborSource {
  public:
    virtual ~NeighborSource() = default;
    virtual const GraphSchema& schema() const = 0;
    /// One result list per query, in query order.
    virtual std::vector<std::vector<SampledNeighbor>> sample(std::span<const NeighborQuery> queries) = 0;
    /// Node features, in request order.
    virtual std::vector<std::vector<float>> hydrate(std::span<const NodeRef> nodes) = 0;
};

class LocalNeighborSource final : public NeighborSource {
  public:
    explicit LocalNeighborSource(const Graph& g) : graph_(g) {}
    const GraphSchema& schema() const override { return graph_.schema(); }
    std::vector<std::vector<SampledNeighbor>> sample(std::span<const NeighborQuery> queries) override;
    std::vector<std::vector<float>> hydrate(std::span<const NodeRef> nodes) override;

  private:
    const Graph& graph_;
};

struct SamplerOptions {
    uint64_t global_seed = 0;
    /// Adjacency followed when expanding; must match the partition collocation side.
    Direction direction = Direction::kOut;
};

/// Seed for expanding `node` along `edge_type` at `hop`: domain "khop|<node type>|<edge key>".
uint64_t khop_seed(uint64_t global_seed, const NodeRef& node, const EdgeType& edge_type, uint32_t hop);

/// Hop-wise batch expansion over all roots followed by one feature hydration pass.
/// Output is in root order; each subgraph is canonicalized.
std::vector<RootedSubgraph> sample_k_hop_batch(NeighborSource& source, std::span<const NodeRef> roots,
                                               const FanoutSpec& fanouts, const SamplerOptions& options);

RootedSubgraph sample_k_hop(const Graph& g, const NodeRef& root, const FanoutSpec& fanouts,
                            const SamplerOptions& options);

enum class SampleKind { kNodeClassification, kLinkPrediction, kRooted };

const char* sample_kind_name(SampleKind kind);
SampleKind parse_sample_kind(const std::string& name);

struct TrainingSample {
    SampleKind kind = SampleKind::kLinkPrediction;
    RootedSubgraph anchor;
    std::vector<RootedSubgraph> positives;
    std::vector<RootedSubgraph> hard_negatives;
    std::optional<int64_t> label;

    bool operator==(const TrainingSample&) const = default;
};

struct LinkSampleConfig {
    FanoutSpec fanouts;
    uint32_t n_pos = 1;
    uint32_t n_hard_neg = 0;
    SamplerOptions sampler;
    /// Self-supervised positives come from these edge types (all when empty).
    std::vector<EdgeType> positive_edge_types;
    /// Anchor node type for self-supervised sampling (all types when empty).
    std::string anchor_type;
};

struct LinkSampleResult {
    std::vector<TrainingSample> samples;  // sorted by anchor
    size_t skipped_no_positive = 0;
};

/// Supervised when `supervision` is non-null (positives/negatives from the set),
/// self-supervised otherwise (positives from message-graph neighbors).
LinkSampleResult generate_link_samples(const Graph& g, const SupervisionEdgeSet* supervision,
                                       const LinkSampleConfig& config);

/// Same as above with a caller-provided neighbor source (e.g. a remote graph service).
LinkSampleResult generate_link_samples(const Graph& g, NeighborSource& source, const SupervisionEdgeSet* supervision,
                                       const LinkSampleConfig& config);

/// Positive candidates used in self-supervised mode, exposed for tests.
std::vector<NodeRef> self_supervised_candidates(const Graph& g, const NodeRef& anchor, const LinkSampleConfig& config);

std::vector<TrainingSample> generate_node_samples(const Graph& g, const std::map<NodeRef, int64_t>& labels,
                                                  const FanoutSpec& fanouts, const SamplerOptions& options);

/// Unlabelled rooted subgraphs for every node of `node_type` (all types when empty),
/// sorted by node; used for batch inference.
std::vector<TrainingSample> generate_rooted_samples(const Graph& g, const FanoutSpec& fanouts,
                                                    const SamplerOptions& options, const std::string& node_type = "");

std::vector<NodeRef> all_nodes(const Graph& g, const std::string& node_type = "");

}  // namespace giglite
