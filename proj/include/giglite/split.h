#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "giglite/graph.h"
#include "giglite/graph_builder.h"
#include "giglite/sampler.h"

namespace giglite {

enum class Bucket : uint8_t { kTrain = 0, kVal = 1, kTest = 2 };
inline constexpr std::array<Bucket, 3> kBuckets = {Bucket::kTrain, Bucket::kVal, Bucket::kTest};

const char* bucket_name(Bucket b);

enum class SplitStrategy { kTransductiveLink, kInductiveNode, kUserDefinedLabels };

const char* strategy_name(SplitStrategy s);
SplitStrategy parse_strategy(const std::string& name);

struct SplitConfig {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
    uint64_t seed = 0;
    SplitStrategy strategy = SplitStrategy::kTransductiveLink;

    /// Throws ConfigError unless each fraction is in [0, 1] and they sum to 1 within 1e-9.
    void validate() const;
};

/// Subject bytes: 'E' + node bytes of both endpoints, or 'N' + node bytes.
std::string edge_subject(const NodeRef& src, const NodeRef& dst);
std::string node_subject(const NodeRef& n);

/// Undirected pairs are ordered (min, max) before hashing.
std::string canonical_edge_subject(const NodeRef& a, const NodeRef& b, bool undirected);

/// h = fnv1a64(seed_le64 || subject) mapped to [0, 1).
double split_hash(std::string_view subject, uint64_t seed);
Bucket bucket_for(double h, const SplitConfig& config);
Bucket assign_split(std::string_view subject, const SplitConfig& config);

/// Which message edges a bucket may see. Transductive: train and val see train
/// edges, test sees train and val edges.
bool transductive_visible(Bucket edge_bucket, Bucket dataset);

struct SplitDatasets {
    std::array<std::vector<TrainingSample>, 3> buckets;
    std::array<size_t, 3> dropped_empty{};  // samples left without positives
    size_t removed_positives = 0;
    size_t removed_edges = 0;

    const std::vector<TrainingSample>& operator[](Bucket b) const { return buckets[static_cast<size_t>(b)]; }
};

/// Subject of every link between two nodes, whatever its edge type or orientation, so
/// that reciprocal and parallel edges always share a bucket.
std::string pair_subject(const NodeRef& a, const NodeRef& b);

SplitDatasets apply_transductive_link_split(const std::vector<TrainingSample>& samples, const SplitConfig& config);

/// Only supervision edges are bucketed; every bucket sees the full message graph.
SplitDatasets apply_user_defined_split(const SupervisionEdgeSet& supervision, const Graph& g,
                                       const std::vector<TrainingSample>& samples, const SplitConfig& config);

/// Nodes are bucketed; a bucket sees the subgraph induced on train + its own nodes.
SplitDatasets apply_inductive_node_split(const Graph& g, const std::vector<TrainingSample>& samples,
                                         const SplitConfig& config);

/// The message graph a bucket may sample from, for live (server-side) masking.
Graph transductive_message_graph(const Graph& g, const SplitConfig& config, Bucket bucket);
Graph inductive_message_graph(const Graph& g, const SplitConfig& config, Bucket bucket);

}  // namespace giglite
