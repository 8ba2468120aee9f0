#include "giglite/realtime/partition.h"

#include "giglite/error.h"
#include "giglite/hash.h"

namespace giglite {

uint32_t PartitionPlan::owner(const NodeRef& n) const {
    std::string bytes;
    append_le64(bytes, seed);
    append_node_bytes(bytes, n);
    return static_cast<uint32_t>(fnv1a64(bytes) % n_partitions);
}

void PartitionPlan::validate() const {
    if (n_partitions < 1) throw ConfigError("n_partitions must be >= 1");
}

std::vector<PartitionData> partition_graph(const Graph& g, const PartitionPlan& plan) {
    plan.validate();
    const GraphSchema& schema = g.schema();
    std::vector<PartitionData> parts(plan.n_partitions);
    for (uint32_t p = 0; p < plan.n_partitions; ++p) {
        parts[p].id = p;
        parts[p].plan = plan;
        parts[p].schema = schema;
    }
    const Direction dir = plan.direction();
    for (size_t t = 0; t < schema.node_types.size(); ++t) {
        const NodeTable& table = g.nodes(t);
        for (uint32_t i = 0; i < table.size(); ++i) {
            const NodeRef v{schema.node_types[t].name, table.id(i)};
            PartitionData& part = parts[plan.owner(v)];
            auto f = table.features(i);
            part.nodes.emplace(v, std::vector<float>(f.begin(), f.end()));
            for (size_t e = 0; e < schema.edge_types.size(); ++e) {
                if (!g.has_side(e, t, dir)) continue;
                AdjacencyRow row;
                for (const NeighborView& nb : g.neighbors(v, schema.edge_types[e].type, dir)) {
                    row.entries.push_back({nb.node, {nb.edge_features.begin(), nb.edge_features.end()}});
                }
                part.rows.emplace(std::make_pair(v, static_cast<uint32_t>(e)), std::move(row));
            }
        }
    }
    for (size_t e = 0; e < schema.edge_types.size(); ++e) {
        const auto& spec = schema.edge_types[e];
        const EdgeTable& edges = g.edges(e);
        const NodeTable& srcs = g.nodes(spec.type.src_type);
        const NodeTable& dsts = g.nodes(spec.type.dst_type);
        for (size_t i = 0; i < edges.size(); ++i) {
            StoredEdge s{static_cast<uint32_t>(e), srcs.id(edges.src(i)), dsts.id(edges.dst(i)), {}};
            auto f = edges.features(i);
            s.features.assign(f.begin(), f.end());
            const NodeRef holder = dir == Direction::kOut ? NodeRef{spec.type.src_type, s.src}
                                                          : NodeRef{spec.type.dst_type, s.dst};
            parts[plan.owner(holder)].edges.push_back(std::move(s));
        }
    }
    return parts;
}

bool SplitMask::node_visible(const NodeRef& n) const {
    if (config.strategy != SplitStrategy::kInductiveNode) return true;
    const Bucket b = assign_split(node_subject(n), config);
    return b == Bucket::kTrain || b == bucket;
}

bool SplitMask::edge_visible(const NodeRef& src, const NodeRef& dst) const {
    switch (config.strategy) {
        case SplitStrategy::kTransductiveLink:
            return transductive_visible(assign_split(pair_subject(src, dst), config), bucket);
        case SplitStrategy::kInductiveNode:
            return node_visible(src) && node_visible(dst);
        case SplitStrategy::kUserDefinedLabels:
            return true;
    }
    return true;
}

PartitionData apply_split_mask(const PartitionData& data, const SplitMask& mask) {
    PartitionData out;
    out.id = data.id;
    out.plan = data.plan;
    out.schema = data.schema;
    for (const auto& [n, f] : data.nodes) {
        if (mask.node_visible(n)) out.nodes.emplace(n, f);
    }
    for (const auto& [key, row] : data.rows) {
        const NodeRef& v = key.first;
        if (!mask.node_visible(v)) continue;
        AdjacencyRow kept;
        for (const auto& nb : row.entries) {
            if (mask.edge_visible(v, nb.node)) kept.entries.push_back(nb);
        }
        out.rows.emplace(key, std::move(kept));
    }
    for (const auto& e : data.edges) {
        const auto& spec = data.schema.edge_types[e.edge_type];
        if (mask.edge_visible({spec.type.src_type, e.src}, {spec.type.dst_type, e.dst})) {
            out.edges.push_back(e);
        }
    }
    return out;
}

}  // namespace giglite
