#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "giglite/graph.h"
#include "giglite/sampler.h"

namespace giglite::testing {

/// Removed on destruction.
class TempDir {
  public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "giglite-XXXXXX").string();
        path_ = mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

  private:
    std::string path_;
};

inline GraphSchema single_type_schema(bool directed, uint32_t dim = 1, const std::string& type = "n",
                                      const std::string& relation = "link") {
    GraphSchema s;
    s.node_types = {{type, dim}};
    s.edge_types = {{{type, relation, type}, directed, 0}};
    return s;
}

/// Nodes 0..n-1 with feature [i], edges (i, i+1).
inline Graph path_graph(uint32_t n = 4, bool directed = false) {
    GraphBuilder b(single_type_schema(directed));
    for (uint32_t i = 0; i < n; ++i) {
        const float f = static_cast<float>(i);
        b.add_node("n", i, std::span(&f, 1));
    }
    for (uint32_t i = 0; i + 1 < n; ++i) b.add_edge(size_t{0}, i, i + 1);
    return std::move(b).build();
}

inline NodeRef N(uint64_t id, const std::string& type = "n") { return {type, id}; }

/// Breadth-first k-hop neighborhood computed straight from the stored edge lists:
/// every reachable node with its hop, and every edge from a node at hop h+1 into
/// a node at hop h.
struct BfsResult {
    std::map<NodeRef, uint32_t> hops;
    std::multiset<std::tuple<NodeRef, NodeRef, std::string>> edges;  // (src, dst, type), message direction
};

inline BfsResult bfs_oracle(const Graph& g, const NodeRef& root, uint32_t k, Direction dir = Direction::kOut) {
    const GraphSchema& s = g.schema();
    struct Arc {
        NodeRef to;
        std::string type;
    };
    std::map<NodeRef, std::vector<Arc>> adj;
    for (size_t e = 0; e < s.edge_types.size(); ++e) {
        const auto& et = s.edge_types[e];
        const auto& src_nodes = g.nodes(et.type.src_type);
        const auto& dst_nodes = g.nodes(et.type.dst_type);
        const EdgeTable& table = g.edges(e);
        for (size_t i = 0; i < table.size(); ++i) {
            NodeRef a{et.type.src_type, src_nodes.id(table.src(i))};
            NodeRef b{et.type.dst_type, dst_nodes.id(table.dst(i))};
            if (!et.directed) {
                adj[a].push_back({b, et.type.key()});
                if (a != b) adj[b].push_back({a, et.type.key()});
            } else if (dir == Direction::kOut) {
                adj[a].push_back({b, et.type.key()});
            } else {
                adj[b].push_back({a, et.type.key()});
            }
        }
    }
    BfsResult r;
    r.hops[root] = 0;
    std::vector<NodeRef> frontier{root};
    for (uint32_t h = 0; h < k; ++h) {
        std::vector<NodeRef> next;
        for (const auto& v : frontier) {
            for (const auto& arc : adj[v]) {
                auto [it, inserted] = r.hops.emplace(arc.to, h + 1);
                if (inserted) next.push_back(arc.to);
                if (it->second == h + 1) r.edges.insert({arc.to, v, arc.type});
            }
        }
        frontier = std::move(next);
    }
    return r;
}

}  // namespace giglite::testing
