#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "giglite/artifact.h"
#include "giglite/graph.h"
#include "giglite/sampler.h"

namespace giglite {

struct EmbeddingTable {
    uint32_t dim = 0;
    std::vector<NodeRef> nodes;  // sorted by (type, id)
    std::vector<float> values;   // nodes.size() x dim, row-major
    std::string model_id;
    std::string run_id;

    size_t size() const { return nodes.size(); }
    std::span<const float> row(size_t i) const { return {values.data() + i * dim, dim}; }
    std::optional<size_t> find(const NodeRef& n) const;
};

struct InferOptions {
    uint32_t threads = 1;
    /// Fanout depth the samples were drawn with; must equal the model depth when set.
    std::optional<size_t> sample_hops;
    std::string run_id;
};

/// One row per distinct anchor root. Each root is embedded from its own subgraph, so
/// output does not depend on stream order or thread count. Throws ConfigError on a
/// depth mismatch.
EmbeddingTable infer(const ModelArtifact& artifact, std::span<const TrainingSample> samples,
                     const InferOptions& options = {});

/// Header "# giglite-embeddings v1 dim=<d> model=<id> run=<run>", then
/// node_type, node_id, e_0 .. e_{d-1} tab-separated.
void write_embedding_table(std::ostream& out, const EmbeddingTable& table);
std::string serialize_embedding_table(const EmbeddingTable& table);
EmbeddingTable read_embedding_table(std::istream& in);
EmbeddingTable read_embedding_table_file(const std::string& path);

enum class Metric { kDot, kCosine };

const char* metric_name(Metric m);
Metric parse_metric(const std::string& name);

struct Scored {
    NodeRef node;
    double score = 0.0;

    bool operator==(const Scored&) const = default;
};

/// Exact top-k by score; ties broken by node id ascending, then node type.
std::vector<Scored> knn_retrieve(const EmbeddingTable& table, std::span<const float> query, size_t k,
                                 Metric metric = Metric::kDot);

/// Neighbors in every edge type and direction, distinct and sorted.
std::vector<NodeRef> graph_neighbors(const Graph& g, const NodeRef& node);

struct EbrResult {
    std::vector<Scored> results;
    std::vector<NodeRef> seeds;  // neighbors whose embeddings served as queries
    bool fell_back = false;     // true when the user's own embedding was used
};

/// Queries with the embeddings of up to `n_seeds` sampled neighbors, merges per-seed
/// top-k lists by max score, and drops the user and its existing neighbors.
EbrResult stochastic_ebr_retrieve(const EmbeddingTable& table, const Graph& adjacency, const NodeRef& user, size_t k,
                                  uint32_t n_seeds, uint64_t seed, Metric metric = Metric::kDot);

}  // namespace giglite
