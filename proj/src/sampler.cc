#include "giglite/sampler.h"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "giglite/error.h"

namespace giglite {

namespace {

// Whether nodes of `node_type` expand along edge type `e` in direction `dir`.
bool expands(const GraphSchema& schema, size_t e, const std::string& node_type, Direction dir) {
    const auto& spec = schema.edge_types[e];
    if (!spec.directed) {
        return node_type == spec.type.src_type || node_type == spec.type.dst_type;
    }
    return dir == Direction::kOut ? node_type == spec.type.src_type : node_type == spec.type.dst_type;
}

struct Expansion {
    std::map<NodeRef, uint32_t> hop;
    std::vector<NodeRef> frontier;
    std::vector<SubgraphEdge> edges;
};

}  // namespace

uint32_t FanoutSpec::fanout(size_t hop, const EdgeType& type) const {
    auto it = per_edge_type.find(type.key());
    if (it != per_edge_type.end()) {
        return it->second.at(hop);
    }
    return per_hop.at(hop);
}

void FanoutSpec::validate() const {
    if (per_hop.empty()) {
        throw ConfigError("fanouts must have at least one hop");
    }
    for (const auto& [key, v] : per_edge_type) {
        if (v.size() != per_hop.size()) {
            throw ConfigError("fanout override for '" + key + "' has " + std::to_string(v.size()) + " hops, expected " +
                              std::to_string(per_hop.size()));
        }
    }
}

uint64_t FanoutSpec::max_nodes() const {
    uint64_t total = 1;
    uint64_t layer = 1;
    for (size_t h = 0; h < per_hop.size(); ++h) {
        uint64_t f = per_hop[h];
        for (const auto& [key, v] : per_edge_type) {
            f = std::max<uint64_t>(f, v[h]);
        }
        layer *= f;
        total += layer;
    }
    return total;
}

const SubgraphNode* RootedSubgraph::find(const NodeRef& n) const {
    for (const auto& sn : nodes) {
        if (sn.node == n) {
            return &sn;
        }
    }
    return nullptr;
}

void RootedSubgraph::canonicalize() {
    std::sort(nodes.begin(), nodes.end(), [](const SubgraphNode& a, const SubgraphNode& b) {
        return a.hop != b.hop ? a.hop < b.hop : a.node < b.node;
    });
    std::sort(edges.begin(), edges.end(), [](const SubgraphEdge& a, const SubgraphEdge& b) {
        if (a.dst != b.dst) {
            return a.dst < b.dst;
        }
        if (a.src != b.src) {
            return a.src < b.src;
        }
        return a.edge_type < b.edge_type;
    });
}

std::vector<SampledNeighbor> sample_neighbors(const Graph& g, const NeighborQuery& q) {
    const GraphSchema& schema = g.schema();
    int t = schema.node_type_index(q.node.type);
    if (t < 0 || q.edge_type >= schema.edge_types.size()) {
        throw LookupError("unknown node or edge type in query for " + to_string(q.node));
    }
    const size_t nt = static_cast<size_t>(t);
    auto idx = g.nodes(nt).find(q.node.id);
    if (!idx) {
        throw LookupError("unknown node " + to_string(q.node));
    }
    std::vector<SampledNeighbor> out;
    if (!g.has_side(q.edge_type, nt, q.direction)) {
        return out;
    }
    auto row = g.adjacency(q.edge_type, nt, *idx, q.direction);
    const size_t other = g.neighbor_type(q.edge_type, nt, q.direction);
    const NodeTable& others = g.nodes(other);
    const EdgeTable& edges = g.edges(q.edge_type);
    for (uint32_t i : choose_without_replacement(static_cast<uint32_t>(row.size()), q.fanout, q.seed)) {
        auto f = edges.features(row[i].edge);
        out.push_back({{schema.node_types[other].name, others.id(row[i].node)}, {f.begin(), f.end()}});
    }
    return out;
}

std::vector<std::vector<SampledNeighbor>> LocalNeighborSource::sample(std::span<const NeighborQuery> queries) {
    std::vector<std::vector<SampledNeighbor>> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        out.push_back(sample_neighbors(graph_, q));
    }
    return out;
}

std::vector<std::vector<float>> LocalNeighborSource::hydrate(std::span<const NodeRef> nodes) {
    std::vector<std::vector<float>> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) {
        auto f = graph_.features(n);
        out.emplace_back(f.begin(), f.end());
    }
    return out;
}

uint64_t khop_seed(uint64_t global_seed, const NodeRef& node, const EdgeType& edge_type, uint32_t hop) {
    return SeedDerivation::derive(global_seed, "khop|" + node.type + "|" + edge_type.key(), node.id, hop);
}

std::vector<RootedSubgraph> sample_k_hop_batch(NeighborSource& source, std::span<const NodeRef> roots,
                                               const FanoutSpec& fanouts, const SamplerOptions& options) {
    fanouts.validate();
    const GraphSchema& schema = source.schema();
    std::vector<Expansion> states(roots.size());
    for (size_t r = 0; r < roots.size(); ++r) {
        if (schema.node_type_index(roots[r].type) < 0) {
            throw LookupError("unknown root " + to_string(roots[r]));
        }
        states[r].hop[roots[r]] = 0;
        states[r].frontier.push_back(roots[r]);
    }

    for (uint32_t h = 0; h < fanouts.hops(); ++h) {
        // Identical (node, edge type, hop) queries across roots share one draw.
        std::map<NeighborQuery, size_t> index;
        std::vector<NeighborQuery> queries;
        auto query_for = [&](const NodeRef& v, size_t e) {
            return NeighborQuery{v, static_cast<uint32_t>(e), options.direction,
                                 fanouts.fanout(h, schema.edge_types[e].type),
                                 khop_seed(options.global_seed, v, schema.edge_types[e].type, h)};
        };
        for (const auto& st : states) {
            for (const NodeRef& v : st.frontier) {
                for (size_t e = 0; e < schema.edge_types.size(); ++e) {
                    if (!expands(schema, e, v.type, options.direction)) {
                        continue;
                    }
                    NeighborQuery q = query_for(v, e);
                    if (q.fanout == 0) {
                        continue;
                    }
                    if (index.emplace(q, queries.size()).second) {
                        queries.push_back(q);
                    }
                }
            }
        }
        auto results = source.sample(queries);
        if (results.size() != queries.size()) {
            throw LookupError("neighbor source returned " + std::to_string(results.size()) + " lists for " +
                              std::to_string(queries.size()) + " queries");
        }

        for (auto& st : states) {
            std::vector<NodeRef> next;
            for (const NodeRef& v : st.frontier) {
                for (size_t e = 0; e < schema.edge_types.size(); ++e) {
                    if (!expands(schema, e, v.type, options.direction)) {
                        continue;
                    }
                    NeighborQuery q = query_for(v, e);
                    if (q.fanout == 0) {
                        continue;
                    }
                    for (const SampledNeighbor& nb : results[index.at(q)]) {
                        auto [it, inserted] = st.hop.emplace(nb.node, h + 1);
                        // Nodes already at this hop or nearer send no message outward.
                        if (!inserted && it->second <= h) {
                            continue;
                        }
                        if (inserted) {
                            next.push_back(nb.node);
                        }
                        st.edges.push_back({nb.node, v, schema.edge_types[e].type.key(), nb.edge_features});
                    }
                }
            }
            std::sort(next.begin(), next.end());
            st.frontier = std::move(next);
        }
    }

    // Hydration: one feature fetch for every distinct node across all roots.
    std::set<NodeRef> distinct;
    for (const auto& st : states) {
        for (const auto& [n, hop] : st.hop) {
            distinct.insert(n);
        }
    }
    std::vector<NodeRef> wanted(distinct.begin(), distinct.end());
    auto feats = source.hydrate(wanted);
    std::map<NodeRef, size_t> feat_index;
    for (size_t i = 0; i < wanted.size(); ++i) {
        feat_index[wanted[i]] = i;
    }

    std::vector<RootedSubgraph> out(roots.size());
    for (size_t r = 0; r < roots.size(); ++r) {
        RootedSubgraph& sg = out[r];
        sg.root = roots[r];
        for (const auto& [n, hop] : states[r].hop) {
            sg.nodes.push_back({n, hop, feats[feat_index.at(n)]});
        }
        sg.edges = std::move(states[r].edges);
        sg.canonicalize();
    }
    return out;
}

RootedSubgraph sample_k_hop(const Graph& g, const NodeRef& root, const FanoutSpec& fanouts,
                            const SamplerOptions& options) {
    if (!g.contains(root)) {
        throw LookupError("unknown root " + to_string(root));
    }
    LocalNeighborSource source(g);
    std::vector<NodeRef> roots{root};
    return std::move(sample_k_hop_batch(source, roots, fanouts, options).front());
}

const char* sample_kind_name(SampleKind kind) {
    switch (kind) {
        case SampleKind::kNodeClassification: return "node-classification";
        case SampleKind::kLinkPrediction: return "node-anchor-link-prediction";
        case SampleKind::kRooted: return "rooted";
    }
    return "?";
}

SampleKind parse_sample_kind(const std::string& name) {
    if (name == "node-classification") {
        return SampleKind::kNodeClassification;
    }
    if (name == "node-anchor-link-prediction") {
        return SampleKind::kLinkPrediction;
    }
    if (name == "rooted") {
        return SampleKind::kRooted;
    }
    throw ParseError("unknown sample kind '" + name + "'");
}

std::vector<NodeRef> all_nodes(const Graph& g, const std::string& node_type) {
    std::vector<NodeRef> out;
    for (size_t t = 0; t < g.schema().node_types.size(); ++t) {
        const std::string& name = g.schema().node_types[t].name;
        if (!node_type.empty() && name != node_type) {
            continue;
        }
        for (uint64_t id : g.nodes(t).ids()) {
            out.push_back({name, id});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeRef> self_supervised_candidates(const Graph& g, const NodeRef& anchor, const LinkSampleConfig& config) {
    const GraphSchema& schema = g.schema();
    std::set<NodeRef> out;
    for (size_t e = 0; e < schema.edge_types.size(); ++e) {
        const EdgeType& et = schema.edge_types[e].type;
        if (!config.positive_edge_types.empty() &&
            std::find(config.positive_edge_types.begin(), config.positive_edge_types.end(), et) ==
                config.positive_edge_types.end()) {
            continue;
        }
        if (!expands(schema, e, anchor.type, config.sampler.direction)) {
            continue;
        }
        for (const auto& nb : g.neighbors(anchor, et, config.sampler.direction)) {
            if (nb.node != anchor) {
                out.insert(nb.node);
            }
        }
    }
    return {out.begin(), out.end()};
}

namespace {

std::vector<NodeRef> pick(const std::vector<NodeRef>& candidates, uint32_t k, uint64_t global_seed,
                          const std::string& domain, const NodeRef& anchor) {
    const uint64_t seed = SeedDerivation::derive(global_seed, domain + "|" + anchor.type, anchor.id, 0);
    std::vector<NodeRef> out;
    for (uint32_t i : choose_without_replacement(static_cast<uint32_t>(candidates.size()), k, seed)) {
        out.push_back(candidates[i]);
    }
    return out;
}

}  // namespace

LinkSampleResult generate_link_samples(const Graph& g, const SupervisionEdgeSet* supervision,
                                       const LinkSampleConfig& config) {
    LocalNeighborSource source(g);
    return generate_link_samples(g, source, supervision, config);
}

LinkSampleResult generate_link_samples(const Graph& g, NeighborSource& source, const SupervisionEdgeSet* supervision,
                                       const LinkSampleConfig& config) {
    if (config.n_pos < 1) {
        throw ConfigError("n_pos must be >= 1");
    }
    config.fanouts.validate();
    LinkSampleResult result;

    struct Plan {
        NodeRef anchor;
        std::vector<NodeRef> positives;
        std::vector<NodeRef> negatives;
    };
    std::vector<Plan> plans;

    if (supervision) {
        std::map<NodeRef, std::pair<std::vector<NodeRef>, std::vector<NodeRef>>> by_anchor;
        for (const auto& e : supervision->edges) {
            auto& slot = by_anchor[e.src];
            (e.polarity == Polarity::kPositive ? slot.first : slot.second).push_back(e.dst);
        }
        if (supervision->count(Polarity::kPositive) == 0) {
            throw ConfigError("supervised link sampling needs at least one positive supervision edge");
        }
        for (auto& [anchor, lists] : by_anchor) {
            if (lists.first.empty()) {
                ++result.skipped_no_positive;
                continue;
            }
            // Edges are sorted, so both lists are already ascending.
            plans.push_back({anchor, pick(lists.first, config.n_pos, config.sampler.global_seed, "pos", anchor),
                             pick(lists.second, config.n_hard_neg, config.sampler.global_seed, "neg", anchor)});
        }
    } else {
        for (const NodeRef& anchor : all_nodes(g, config.anchor_type)) {
            auto candidates = self_supervised_candidates(g, anchor, config);
            if (candidates.empty()) {
                ++result.skipped_no_positive;
                continue;
            }
            plans.push_back({anchor, pick(candidates, config.n_pos, config.sampler.global_seed, "pos", anchor), {}});
        }
    }

    std::set<NodeRef> roots;
    for (const auto& p : plans) {
        roots.insert(p.anchor);
        roots.insert(p.positives.begin(), p.positives.end());
        roots.insert(p.negatives.begin(), p.negatives.end());
    }
    std::vector<NodeRef> root_list(roots.begin(), roots.end());
    auto subgraphs = sample_k_hop_batch(source, root_list, config.fanouts, config.sampler);
    std::map<NodeRef, size_t> at;
    for (size_t i = 0; i < root_list.size(); ++i) {
        at[root_list[i]] = i;
    }

    for (const auto& p : plans) {
        TrainingSample s;
        s.kind = SampleKind::kLinkPrediction;
        s.anchor = subgraphs[at.at(p.anchor)];
        for (const auto& n : p.positives) {
            s.positives.push_back(subgraphs[at.at(n)]);
        }
        for (const auto& n : p.negatives) {
            s.hard_negatives.push_back(subgraphs[at.at(n)]);
        }
        result.samples.push_back(std::move(s));
    }
    return result;
}

std::vector<TrainingSample> generate_node_samples(const Graph& g, const std::map<NodeRef, int64_t>& labels,
                                                  const FanoutSpec& fanouts, const SamplerOptions& options) {
    std::vector<NodeRef> roots;
    for (const auto& [n, label] : labels) {
        if (!g.contains(n)) {
            throw LookupError("labelled node " + to_string(n) + " is not in the graph");
        }
        roots.push_back(n);
    }
    LocalNeighborSource source(g);
    auto subgraphs = sample_k_hop_batch(source, roots, fanouts, options);
    std::vector<TrainingSample> out;
    size_t i = 0;
    for (const auto& [n, label] : labels) {
        TrainingSample s;
        s.kind = SampleKind::kNodeClassification;
        s.anchor = std::move(subgraphs[i++]);
        s.label = label;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TrainingSample> generate_rooted_samples(const Graph& g, const FanoutSpec& fanouts,
                                                    const SamplerOptions& options, const std::string& node_type) {
    auto roots = all_nodes(g, node_type);
    LocalNeighborSource source(g);
    auto subgraphs = sample_k_hop_batch(source, roots, fanouts, options);
    std::vector<TrainingSample> out;
    for (auto& sg : subgraphs) {
        TrainingSample s;
        s.kind = SampleKind::kRooted;
        s.anchor = std::move(sg);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace giglite
