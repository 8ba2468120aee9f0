#include "giglite/split.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "giglite/error.h"
#include "giglite/hash.h"

namespace giglite {

const char* bucket_name(Bucket b) {
    switch (b) {
        case Bucket::kTrain: return "train";
        case Bucket::kVal: return "val";
        case Bucket::kTest: return "test";
    }
    return "?";
}

const char* strategy_name(SplitStrategy s) {
    switch (s) {
        case SplitStrategy::kTransductiveLink: return "transductive-link";
        case SplitStrategy::kInductiveNode: return "inductive-node";
        case SplitStrategy::kUserDefinedLabels: return "user-defined-labels";
    }
    return "?";
}

SplitStrategy parse_strategy(const std::string& name) {
    for (auto s : {SplitStrategy::kTransductiveLink, SplitStrategy::kInductiveNode, SplitStrategy::kUserDefinedLabels}) {
        if (name == strategy_name(s)) {
            return s;
        }
    }
    throw ConfigError("unknown split strategy '" + name + "'");
}

void SplitConfig::validate() const {
    for (double f : {train, val, test}) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw ConfigError("split fractions must lie in [0, 1]");
        }
    }
    if (std::fabs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must sum to 1");
    }
}

std::string edge_subject(const NodeRef& src, const NodeRef& dst) {
    std::string s = "E";
    append_node_bytes(s, src);
    append_node_bytes(s, dst);
    return s;
}

std::string node_subject(const NodeRef& n) {
    std::string s = "N";
    append_node_bytes(s, n);
    return s;
}

std::string canonical_edge_subject(const NodeRef& a, const NodeRef& b, bool undirected) {
    if (undirected && b < a) {
        return edge_subject(b, a);
    }
    return edge_subject(a, b);
}

double split_hash(std::string_view subject, uint64_t seed) {
    std::string bytes;
    append_le64(bytes, seed);
    bytes.append(subject);
    return unit_interval(fnv1a64(bytes));
}

Bucket bucket_for(double h, const SplitConfig& config) {
    if (h < config.train) {
        return Bucket::kTrain;
    }
    if (h < config.train + config.val) {
        return Bucket::kVal;
    }
    return Bucket::kTest;
}

Bucket assign_split(std::string_view subject, const SplitConfig& config) {
    return bucket_for(split_hash(subject, config.seed), config);
}

bool transductive_visible(Bucket edge_bucket, Bucket dataset) {
    switch (dataset) {
        case Bucket::kTrain:
        case Bucket::kVal: return edge_bucket == Bucket::kTrain;
        case Bucket::kTest: return edge_bucket != Bucket::kTest;
    }
    return false;
}

std::string pair_subject(const NodeRef& a, const NodeRef& b) { return canonical_edge_subject(a, b, true); }

namespace {

template <typename Keep>
size_t filter_subgraph(RootedSubgraph& sg, Keep&& keep) {
    const size_t before = sg.edges.size();
    std::erase_if(sg.edges, [&](const SubgraphEdge& e) { return !keep(e); });
    return before - sg.edges.size();
}

void sort_buckets(SplitDatasets& out) {
    for (auto& b : out.buckets) {
        std::sort(b.begin(), b.end(),
                  [](const TrainingSample& x, const TrainingSample& y) { return x.anchor.root < y.anchor.root; });
    }
}

}  // namespace

SplitDatasets apply_transductive_link_split(const std::vector<TrainingSample>& samples, const SplitConfig& config) {
    config.validate();
    SplitDatasets out;
    for (const TrainingSample& s : samples) {
        if (s.kind != SampleKind::kLinkPrediction) {
            throw ConfigError("transductive link split needs link-prediction samples");
        }
        for (Bucket b : kBuckets) {
            TrainingSample copy;
            copy.kind = s.kind;
            copy.label = s.label;
            for (const auto& p : s.positives) {
                if (assign_split(pair_subject(s.anchor.root, p.root), config) == b) {
                    copy.positives.push_back(p);
                }
            }
            if (copy.positives.empty()) {
                ++out.dropped_empty[static_cast<size_t>(b)];
                continue;
            }
            copy.anchor = s.anchor;
            copy.hard_negatives = s.hard_negatives;
            auto visible = [&](const SubgraphEdge& e) {
                return transductive_visible(assign_split(pair_subject(e.src, e.dst), config), b);
            };
            out.removed_edges += filter_subgraph(copy.anchor, visible);
            for (auto& p : copy.positives) {
                out.removed_edges += filter_subgraph(p, visible);
            }
            for (auto& n : copy.hard_negatives) {
                out.removed_edges += filter_subgraph(n, visible);
            }
            out.buckets[static_cast<size_t>(b)].push_back(std::move(copy));
        }
    }
    sort_buckets(out);
    return out;
}

SplitDatasets apply_user_defined_split(const SupervisionEdgeSet& supervision, const Graph& g,
                                       const std::vector<TrainingSample>& samples, const SplitConfig& config) {
    config.validate();
    (void)g;
    if (supervision.edges.empty()) {
        throw ConfigError("user-defined split needs a non-empty supervision set");
    }
    SplitDatasets out;
    for (const TrainingSample& s : samples) {
        for (Bucket b : kBuckets) {
            TrainingSample copy;
            copy.kind = s.kind;
            copy.label = s.label;
            copy.anchor = s.anchor;
            for (const auto& p : s.positives) {
                if (assign_split(edge_subject(s.anchor.root, p.root), config) == b) {
                    copy.positives.push_back(p);
                }
            }
            for (const auto& n : s.hard_negatives) {
                if (assign_split(edge_subject(s.anchor.root, n.root), config) == b) {
                    copy.hard_negatives.push_back(n);
                }
            }
            if (copy.positives.empty()) {
                ++out.dropped_empty[static_cast<size_t>(b)];
                continue;
            }
            out.buckets[static_cast<size_t>(b)].push_back(std::move(copy));
        }
    }
    sort_buckets(out);
    return out;
}

SplitDatasets apply_inductive_node_split(const Graph& g, const std::vector<TrainingSample>& samples,
                                         const SplitConfig& config) {
    config.validate();
    (void)g;
    SplitDatasets out;
    for (const TrainingSample& s : samples) {
        const Bucket b = assign_split(node_subject(s.anchor.root), config);
        auto allowed = [&](const NodeRef& n) {
            const Bucket nb = assign_split(node_subject(n), config);
            return nb == Bucket::kTrain || nb == b;
        };
        auto restrict = [&](RootedSubgraph& sg) {
            std::erase_if(sg.nodes, [&](const SubgraphNode& n) { return !allowed(n.node); });
            out.removed_edges +=
                filter_subgraph(sg, [&](const SubgraphEdge& e) { return allowed(e.src) && allowed(e.dst); });
        };
        TrainingSample copy = s;
        restrict(copy.anchor);
        std::erase_if(copy.positives, [&](const RootedSubgraph& p) { return !allowed(p.root); });
        std::erase_if(copy.hard_negatives, [&](const RootedSubgraph& n) { return !allowed(n.root); });
        out.removed_positives += s.positives.size() - copy.positives.size();
        for (auto& p : copy.positives) {
            restrict(p);
        }
        for (auto& n : copy.hard_negatives) {
            restrict(n);
        }
        if (copy.kind == SampleKind::kLinkPrediction && copy.positives.empty()) {
            ++out.dropped_empty[static_cast<size_t>(b)];
            continue;
        }
        out.buckets[static_cast<size_t>(b)].push_back(std::move(copy));
    }
    sort_buckets(out);
    return out;
}

Graph transductive_message_graph(const Graph& g, const SplitConfig& config, Bucket bucket) {
    const GraphSchema& schema = g.schema();
    return filter_edges(g, [&](size_t e, size_t i) {
        const auto& spec = schema.edge_types[e];
        const EdgeTable& table = g.edges(e);
        NodeRef s{spec.type.src_type, g.nodes(spec.type.src_type).id(table.src(i))};
        NodeRef d{spec.type.dst_type, g.nodes(spec.type.dst_type).id(table.dst(i))};
        return transductive_visible(assign_split(pair_subject(s, d), config), bucket);
    });
}

Graph inductive_message_graph(const Graph& g, const SplitConfig& config, Bucket bucket) {
    return induced_subgraph(g, [&](const NodeRef& n) {
        const Bucket nb = assign_split(node_subject(n), config);
        return nb == Bucket::kTrain || nb == bucket;
    });
}

}  // namespace giglite
