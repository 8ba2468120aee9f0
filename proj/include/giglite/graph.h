#pragma once

#include <compare>
#include <functional>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace giglite {

struct NodeRef {
    std::string type;
    uint64_t id = 0;

    auto operator<=>(const NodeRef&) const = default;
    bool operator==(const NodeRef&) const = default;
};

std::string to_string(const NodeRef& n);

/// Bytes used whenever a node identity is hashed: type, NUL, little-endian id.
void append_node_bytes(std::string& out, const NodeRef& n);

struct EdgeType {
    std::string src_type;
    std::string relation;
    std::string dst_type;

    auto operator<=>(const EdgeType&) const = default;
    bool operator==(const EdgeType&) const = default;

    /// "src|relation|dst"
    std::string key() const;
};

struct NodeTypeSpec {
    std::string name;
    uint32_t feature_dim = 0;
};

struct EdgeTypeSpec {
    EdgeType type;
    bool directed = false;
    uint32_t feature_dim = 0;
};

struct GraphSchema {
    std::vector<NodeTypeSpec> node_types;
    std::vector<EdgeTypeSpec> edge_types;

    /// -1 when absent.
    int node_type_index(std::string_view name) const;
    int edge_type_index(const EdgeType& t) const;

    /// Throws SchemaError when an edge type names an unknown node type or names repeat.
    void validate() const;

    std::string to_json() const;
    static GraphSchema from_json(std::string_view text);
};

enum class Direction { kOut, kIn };

/// One adjacency entry: the neighbor's index within its node table and the index of
/// the stored edge that connects them.
struct AdjEntry {
    uint32_t node = 0;
    uint32_t edge = 0;
};

struct NeighborView {
    NodeRef node;
    std::span<const float> edge_features;
};

class NodeTable {
  public:
    NodeTable() = default;
    explicit NodeTable(uint32_t dim) : dim_(dim) {}

    uint32_t dim() const { return dim_; }
    size_t size() const { return ids_.size(); }
    uint64_t id(uint32_t index) const { return ids_[index]; }
    const std::vector<uint64_t>& ids() const { return ids_; }
    std::span<const float> features(uint32_t index) const {
        return {features_.data() + static_cast<size_t>(index) * dim_, dim_};
    }
    std::optional<uint32_t> find(uint64_t id) const;

  private:
    friend class GraphBuilder;
    uint32_t dim_ = 0;
    std::vector<uint64_t> ids_;
    std::vector<float> features_;
    std::unordered_map<uint64_t, uint32_t> index_;
};

/// Compressed sparse rows over one node table, entries sorted by neighbor id.
struct Csr {
    std::vector<uint32_t> offsets;
    std::vector<AdjEntry> entries;

    std::span<const AdjEntry> row(uint32_t i) const {
        return {entries.data() + offsets[i], entries.data() + offsets[i + 1]};
    }
};

class EdgeTable {
  public:
    size_t size() const { return src_.size(); }
    uint32_t src(size_t e) const { return src_[e]; }
    uint32_t dst(size_t e) const { return dst_[e]; }
    uint32_t dim() const { return dim_; }
    std::span<const float> features(size_t e) const {
        return {features_.data() + e * dim_, dim_};
    }

  private:
    friend class GraphBuilder;
    friend class Graph;
    uint32_t dim_ = 0;
    std::vector<uint32_t> src_;
    std::vector<uint32_t> dst_;
    std::vector<float> features_;
    Csr out_;  // rows over src-type nodes
    Csr in_;   // rows over dst-type nodes
};

/// Immutable typed property graph with per-edge-type CSR adjacency.
class Graph {
  public:
    const GraphSchema& schema() const { return schema_; }
    const NodeTable& nodes(size_t node_type) const { return nodes_[node_type]; }
    const NodeTable& nodes(std::string_view node_type) const;
    const EdgeTable& edges(size_t edge_type) const { return edges_[edge_type]; }

    size_t num_nodes() const;
    size_t num_edges() const;

    bool contains(const NodeRef& n) const;
    std::span<const float> features(const NodeRef& n) const;

    /// Adjacency of one node, sorted by neighbor id. For undirected edge types the
    /// direction is ignored and both orientations are merged.
    std::span<const AdjEntry> adjacency(size_t edge_type, size_t node_type, uint32_t node, Direction dir) const;

    /// Node type index of the neighbors returned by `adjacency` for this side.
    size_t neighbor_type(size_t edge_type, size_t node_type, Direction dir) const;

    /// True when a node of `node_type` has an adjacency list under (edge_type, dir).
    bool has_side(size_t edge_type, size_t node_type, Direction dir) const;

    std::vector<NeighborView> neighbors(const NodeRef& node, const EdgeType& type, Direction dir) const;

    /// Convenience for single-edge-type graphs.
    std::vector<NeighborView> neighbors(const NodeRef& node, Direction dir = Direction::kOut) const;

    size_t degree(const NodeRef& node, size_t edge_type, Direction dir = Direction::kOut) const;

  private:
    friend class GraphBuilder;
    GraphSchema schema_;
    std::vector<NodeTable> nodes_;
    std::vector<EdgeTable> edges_;
};

/// Single-threaded constructor for Graph; validates every invariant in build().
class GraphBuilder {
  public:
    explicit GraphBuilder(GraphSchema schema);

    /// Throws StructuralError on a repeated node and SchemaError on a dimension mismatch.
    void add_node(std::string_view type, uint64_t id, std::span<const float> features);
    /// Endpoints are checked in build(); undirected pairs are canonicalized to (min, max).
    void add_edge(const EdgeType& type, uint64_t src, uint64_t dst, std::span<const float> features = {});
    void add_edge(size_t edge_type, uint64_t src, uint64_t dst, std::span<const float> features = {});

    Graph build() &&;

  private:
    struct PendingEdge {
        uint64_t src;
        uint64_t dst;
        size_t feature_offset;
    };
    Graph graph_;
    std::vector<std::vector<PendingEdge>> pending_;
    std::vector<std::vector<float>> pending_features_;
};

/// Copy of `g` keeping only edges for which keep(edge_type, edge_index) holds; nodes
/// and the relative edge order are preserved.
Graph filter_edges(const Graph& g, const std::function<bool(size_t, size_t)>& keep);

/// Copy of `g` restricted to nodes for which keep(node) holds, with induced edges.
Graph induced_subgraph(const Graph& g, const std::function<bool(const NodeRef&)>& keep);

}  // namespace giglite
