#include "giglite/graph.h"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include <json.hpp>

#include "giglite/error.h"
#include "giglite/hash.h"

namespace giglite {

using nlohmann::json;

std::string to_string(const NodeRef& n) { return n.type + ":" + std::to_string(n.id); }

void append_node_bytes(std::string& out, const NodeRef& n) {
    out += n.type;
    out.push_back('\0');
    append_le64(out, n.id);
}

std::string EdgeType::key() const { return src_type + "|" + relation + "|" + dst_type; }

int GraphSchema::node_type_index(std::string_view name) const {
    for (size_t i = 0; i < node_types.size(); ++i) {
        if (node_types[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

int GraphSchema::edge_type_index(const EdgeType& t) const {
    for (size_t i = 0; i < edge_types.size(); ++i) {
        if (edge_types[i].type == t) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

void GraphSchema::validate() const {
    std::set<std::string> seen;
    for (const auto& nt : node_types) {
        if (nt.name.empty()) {
            throw SchemaError("empty node type name");
        }
        if (!seen.insert(nt.name).second) {
            throw SchemaError("node type '" + nt.name + "' declared twice");
        }
    }
    std::set<EdgeType> seen_edges;
    for (const auto& et : edge_types) {
        if (node_type_index(et.type.src_type) < 0 || node_type_index(et.type.dst_type) < 0) {
            throw SchemaError("edge type '" + et.type.key() + "' references an unknown node type");
        }
        if (!seen_edges.insert(et.type).second) {
            throw SchemaError("edge type '" + et.type.key() + "' declared twice");
        }
    }
}

std::string GraphSchema::to_json() const {
    json j;
    j["format"] = "giglite-schema v1";
    j["node_types"] = json::array();
    for (const auto& nt : node_types) {
        j["node_types"].push_back({{"name", nt.name}, {"feature_dim", nt.feature_dim}});
    }
    j["edge_types"] = json::array();
    for (const auto& et : edge_types) {
        j["edge_types"].push_back({{"src", et.type.src_type},
                                   {"relation", et.type.relation},
                                   {"dst", et.type.dst_type},
                                   {"directed", et.directed},
                                   {"feature_dim", et.feature_dim}});
    }
    return j.dump(2) + "\n";
}

GraphSchema GraphSchema::from_json(std::string_view text) {
    GraphSchema s;
    try {
        json j = json::parse(text);
        if (j.value("format", "") != "giglite-schema v1") {
            throw SchemaError("schema: expected format 'giglite-schema v1'");
        }
        for (const auto& nt : j.at("node_types")) {
            s.node_types.push_back({nt.at("name").get<std::string>(), nt.value("feature_dim", 0u)});
        }
        for (const auto& et : j.at("edge_types")) {
            s.edge_types.push_back({{et.at("src").get<std::string>(), et.at("relation").get<std::string>(),
                                     et.at("dst").get<std::string>()},
                                    et.value("directed", false),
                                    et.value("feature_dim", 0u)});
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("schema: ") + e.what());
    }
    s.validate();
    return s;
}

std::optional<uint32_t> NodeTable::find(uint64_t id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const NodeTable& Graph::nodes(std::string_view node_type) const {
    int t = schema_.node_type_index(node_type);
    if (t < 0) {
        throw LookupError("unknown node type '" + std::string(node_type) + "'");
    }
    return nodes_[static_cast<size_t>(t)];
}

size_t Graph::num_nodes() const {
    size_t n = 0;
    for (const auto& t : nodes_) {
        n += t.size();
    }
    return n;
}

size_t Graph::num_edges() const {
    size_t n = 0;
    for (const auto& t : edges_) {
        n += t.size();
    }
    return n;
}

bool Graph::contains(const NodeRef& n) const {
    int t = schema_.node_type_index(n.type);
    return t >= 0 && nodes_[static_cast<size_t>(t)].find(n.id).has_value();
}

std::span<const float> Graph::features(const NodeRef& n) const {
    const NodeTable& table = nodes(n.type);
    auto idx = table.find(n.id);
    if (!idx) {
        throw LookupError("unknown node " + to_string(n));
    }
    return table.features(*idx);
}

bool Graph::has_side(size_t edge_type, size_t node_type, Direction dir) const {
    const auto& spec = schema_.edge_types[edge_type];
    const size_t src = static_cast<size_t>(schema_.node_type_index(spec.type.src_type));
    const size_t dst = static_cast<size_t>(schema_.node_type_index(spec.type.dst_type));
    if (!spec.directed) {
        return node_type == src || node_type == dst;
    }
    return dir == Direction::kOut ? node_type == src : node_type == dst;
}

std::span<const AdjEntry> Graph::adjacency(size_t edge_type, size_t node_type, uint32_t node, Direction dir) const {
    const auto& spec = schema_.edge_types[edge_type];
    const EdgeTable& et = edges_[edge_type];
    const size_t src = static_cast<size_t>(schema_.node_type_index(spec.type.src_type));
    if (!spec.directed) {
        return node_type == src ? et.out_.row(node) : et.in_.row(node);
    }
    return dir == Direction::kOut ? et.out_.row(node) : et.in_.row(node);
}

size_t Graph::neighbor_type(size_t edge_type, size_t node_type, Direction dir) const {
    const auto& spec = schema_.edge_types[edge_type];
    const size_t src = static_cast<size_t>(schema_.node_type_index(spec.type.src_type));
    const size_t dst = static_cast<size_t>(schema_.node_type_index(spec.type.dst_type));
    if (!spec.directed) {
        return node_type == src ? dst : src;
    }
    return dir == Direction::kOut ? dst : src;
}

std::vector<NeighborView> Graph::neighbors(const NodeRef& node, const EdgeType& type, Direction dir) const {
    int t = schema_.node_type_index(node.type);
    int e = schema_.edge_type_index(type);
    if (t < 0 || e < 0) {
        throw LookupError("unknown node or edge type for " + to_string(node));
    }
    auto idx = nodes_[static_cast<size_t>(t)].find(node.id);
    if (!idx) {
        throw LookupError("unknown node " + to_string(node));
    }
    std::vector<NeighborView> out;
    const size_t et = static_cast<size_t>(e);
    const size_t nt = static_cast<size_t>(t);
    if (!has_side(et, nt, dir)) {
        return out;
    }
    const size_t other = neighbor_type(et, nt, dir);
    for (const AdjEntry& a : adjacency(et, nt, *idx, dir)) {
        out.push_back({NodeRef{schema_.node_types[other].name, nodes_[other].id(a.node)}, edges_[et].features(a.edge)});
    }
    return out;
}

std::vector<NeighborView> Graph::neighbors(const NodeRef& node, Direction dir) const {
    if (schema_.edge_types.size() != 1) {
        throw LookupError("neighbors without an edge type requires exactly one edge type");
    }
    return neighbors(node, schema_.edge_types[0].type, dir);
}

size_t Graph::degree(const NodeRef& node, size_t edge_type, Direction dir) const {
    return neighbors(node, schema_.edge_types.at(edge_type).type, dir).size();
}

GraphBuilder::GraphBuilder(GraphSchema schema) {
    schema.validate();
    graph_.schema_ = std::move(schema);
    for (const auto& nt : graph_.schema_.node_types) {
        graph_.nodes_.emplace_back(nt.feature_dim);
    }
    graph_.edges_.resize(graph_.schema_.edge_types.size());
    pending_.resize(graph_.schema_.edge_types.size());
    pending_features_.resize(graph_.schema_.edge_types.size());
}

void GraphBuilder::add_node(std::string_view type, uint64_t id, std::span<const float> features) {
    int t = graph_.schema_.node_type_index(type);
    if (t < 0) {
        throw SchemaError("unknown node type '" + std::string(type) + "'");
    }
    NodeTable& table = graph_.nodes_[static_cast<size_t>(t)];
    if (features.size() != table.dim_) {
        throw SchemaError("node " + std::string(type) + ":" + std::to_string(id) + " has " +
                          std::to_string(features.size()) + " features, type declares " + std::to_string(table.dim_));
    }
    auto [it, inserted] = table.index_.emplace(id, static_cast<uint32_t>(table.ids_.size()));
    if (!inserted) {
        throw StructuralError("duplicate node " + std::string(type) + ":" + std::to_string(id));
    }
    table.ids_.push_back(id);
    table.features_.insert(table.features_.end(), features.begin(), features.end());
}

void GraphBuilder::add_edge(const EdgeType& type, uint64_t src, uint64_t dst, std::span<const float> features) {
    int e = graph_.schema_.edge_type_index(type);
    if (e < 0) {
        throw SchemaError("unknown edge type '" + type.key() + "'");
    }
    add_edge(static_cast<size_t>(e), src, dst, features);
}

void GraphBuilder::add_edge(size_t edge_type, uint64_t src, uint64_t dst, std::span<const float> features) {
    const auto& spec = graph_.schema_.edge_types.at(edge_type);
    if (features.size() != spec.feature_dim) {
        throw SchemaError("edge (" + std::to_string(src) + "," + std::to_string(dst) + ") of type " + spec.type.key() +
                          " has " + std::to_string(features.size()) + " features, type declares " +
                          std::to_string(spec.feature_dim));
    }
    if (!spec.directed && spec.type.src_type == spec.type.dst_type && src > dst) {
        std::swap(src, dst);
    }
    auto& buf = pending_features_[edge_type];
    pending_[edge_type].push_back({src, dst, buf.size()});
    buf.insert(buf.end(), features.begin(), features.end());
}

namespace {

Csr build_csr(size_t rows, const std::vector<std::pair<uint32_t, AdjEntry>>& pairs, const NodeTable& neighbor_table) {
    Csr csr;
    csr.offsets.assign(rows + 1, 0);
    for (const auto& p : pairs) {
        ++csr.offsets[p.first + 1];
    }
    for (size_t i = 0; i < rows; ++i) {
        csr.offsets[i + 1] += csr.offsets[i];
    }
    csr.entries.resize(pairs.size());
    std::vector<uint32_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
    for (const auto& p : pairs) {
        csr.entries[cursor[p.first]++] = p.second;
    }
    for (size_t i = 0; i < rows; ++i) {
        auto begin = csr.entries.begin() + csr.offsets[i];
        auto end = csr.entries.begin() + csr.offsets[i + 1];
        std::sort(begin, end, [&](const AdjEntry& a, const AdjEntry& b) {
            return neighbor_table.id(a.node) < neighbor_table.id(b.node);
        });
    }
    return csr;
}

}  // namespace

Graph GraphBuilder::build() && {
    const auto& schema = graph_.schema_;
    for (size_t e = 0; e < schema.edge_types.size(); ++e) {
        const auto& spec = schema.edge_types[e];
        const size_t src_t = static_cast<size_t>(schema.node_type_index(spec.type.src_type));
        const size_t dst_t = static_cast<size_t>(schema.node_type_index(spec.type.dst_type));
        const NodeTable& src_table = graph_.nodes_[src_t];
        const NodeTable& dst_table = graph_.nodes_[dst_t];
        EdgeTable& table = graph_.edges_[e];
        table.dim_ = spec.feature_dim;

        std::map<std::pair<uint64_t, uint64_t>, size_t> seen;
        for (const PendingEdge& pe : pending_[e]) {
            auto s = src_table.find(pe.src);
            auto d = dst_table.find(pe.dst);
            if (!s || !d) {
                throw StructuralError("edge (" + std::to_string(pe.src) + "," + std::to_string(pe.dst) + ") of type " +
                                      spec.type.key() + " has a dangling endpoint");
            }
            auto [it, inserted] = seen.emplace(std::make_pair(pe.src, pe.dst), pe.feature_offset);
            if (!inserted) {
                const auto& buf = pending_features_[e];
                bool same = std::equal(buf.begin() + static_cast<long>(it->second),
                                       buf.begin() + static_cast<long>(it->second + spec.feature_dim),
                                       buf.begin() + static_cast<long>(pe.feature_offset));
                throw StructuralError("duplicate edge (" + std::to_string(pe.src) + "," + std::to_string(pe.dst) +
                                      ") of type " + spec.type.key() +
                                      (same ? "" : " with conflicting edge features"));
            }
            table.src_.push_back(*s);
            table.dst_.push_back(*d);
            const auto& buf = pending_features_[e];
            table.features_.insert(table.features_.end(), buf.begin() + static_cast<long>(pe.feature_offset),
                                   buf.begin() + static_cast<long>(pe.feature_offset + spec.feature_dim));
        }

        std::vector<std::pair<uint32_t, AdjEntry>> out_pairs;
        std::vector<std::pair<uint32_t, AdjEntry>> in_pairs;
        const bool same_type = src_t == dst_t;
        for (uint32_t i = 0; i < table.size(); ++i) {
            const uint32_t s = table.src_[i];
            const uint32_t d = table.dst_[i];
            if (spec.directed) {
                out_pairs.push_back({s, {d, i}});
                in_pairs.push_back({d, {s, i}});
            } else if (same_type) {
                out_pairs.push_back({s, {d, i}});
                if (s != d) {
                    out_pairs.push_back({d, {s, i}});
                }
            } else {
                out_pairs.push_back({s, {d, i}});
                in_pairs.push_back({d, {s, i}});
            }
        }
        table.out_ = build_csr(src_table.size(), out_pairs, dst_table);
        if (!spec.directed && same_type) {
            table.in_ = table.out_;
        } else {
            table.in_ = build_csr(dst_table.size(), in_pairs, src_table);
        }
    }
    pending_.clear();
    pending_features_.clear();
    return std::move(graph_);
}

namespace {

Graph rebuild(const Graph& g, const std::function<bool(const NodeRef&)>& keep_node,
              const std::function<bool(size_t, size_t)>& keep_edge) {
    const GraphSchema& schema = g.schema();
    GraphBuilder builder(schema);
    std::vector<std::vector<bool>> kept(schema.node_types.size());
    for (size_t t = 0; t < schema.node_types.size(); ++t) {
        const NodeTable& table = g.nodes(t);
        kept[t].resize(table.size());
        for (uint32_t i = 0; i < table.size(); ++i) {
            if (keep_node({schema.node_types[t].name, table.id(i)})) {
                kept[t][i] = true;
                builder.add_node(schema.node_types[t].name, table.id(i), table.features(i));
            }
        }
    }
    for (size_t e = 0; e < schema.edge_types.size(); ++e) {
        const auto& spec = schema.edge_types[e];
        const size_t st = static_cast<size_t>(schema.node_type_index(spec.type.src_type));
        const size_t dt = static_cast<size_t>(schema.node_type_index(spec.type.dst_type));
        const EdgeTable& table = g.edges(e);
        for (size_t i = 0; i < table.size(); ++i) {
            if (!kept[st][table.src(i)] || !kept[dt][table.dst(i)] || !keep_edge(e, i)) {
                continue;
            }
            builder.add_edge(e, g.nodes(st).id(table.src(i)), g.nodes(dt).id(table.dst(i)), table.features(i));
        }
    }
    return std::move(builder).build();
}

}  // namespace

Graph filter_edges(const Graph& g, const std::function<bool(size_t, size_t)>& keep) {
    return rebuild(g, [](const NodeRef&) { return true; }, keep);
}

Graph induced_subgraph(const Graph& g, const std::function<bool(const NodeRef&)>& keep) {
    return rebuild(g, keep, [](size_t, size_t) { return true; });
}

}  // namespace giglite
