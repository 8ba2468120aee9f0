#include "giglite/graph_builder.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <unordered_map>

#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/text_format.h"

namespace giglite {

std::vector<WeightedPair> jaccard_sparsify(std::span<const std::pair<uint64_t, uint64_t>> user_item,
                                           double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("jaccard threshold must lie in [0, 1]");
    }
    std::vector<std::pair<uint64_t, uint64_t>> pairs(user_item.begin(), user_item.end());
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    // Inverted index: user -> items (sorted because pairs are sorted by user then item).
    std::map<uint64_t, std::vector<uint64_t>> items_of_user;
    std::unordered_map<uint64_t, uint64_t> users_per_item;
    for (const auto& [u, i] : pairs) {
        items_of_user[u].push_back(i);
        ++users_per_item[i];
    }

    // Intersection counts for every co-engaged item pair.
    std::map<std::pair<uint64_t, uint64_t>, uint64_t> intersections;
    for (const auto& [u, items] : items_of_user) {
        for (size_t a = 0; a < items.size(); ++a) {
            for (size_t b = a + 1; b < items.size(); ++b) {
                ++intersections[{items[a], items[b]}];
            }
        }
    }

    std::vector<WeightedPair> out;
    for (const auto& [key, inter] : intersections) {
        const uint64_t uni = users_per_item[key.first] + users_per_item[key.second] - inter;
        const double w = static_cast<double>(inter) / static_cast<double>(uni);
        if (w >= threshold) {
            out.push_back({key.first, key.second, w});
        }
    }
    return out;
}

namespace {

// Adjacency entries (by edge index) a node keeps under the cap.
std::vector<uint32_t> kept_edges(std::span<const AdjEntry> row, uint32_t cap, uint64_t seed, const EdgeTable& table,
                                 const CapOptions& options) {
    std::vector<uint32_t> kept;
    if (row.size() <= cap) {
        for (const AdjEntry& a : row) {
            kept.push_back(a.edge);
        }
        return kept;
    }
    if (!options.weight_feature) {
        for (uint32_t i : choose_without_replacement(static_cast<uint32_t>(row.size()), cap, seed)) {
            kept.push_back(row[i].edge);
        }
        return kept;
    }
    // Weighted sampling without replacement: keep the cap largest log(u)/w keys.
    SplitMix64 rng(seed);
    std::vector<std::pair<double, uint32_t>> keys;
    for (size_t i = 0; i < row.size(); ++i) {
        double u = rng.uniform();
        while (u <= 0.0) {
            u = rng.uniform();
        }
        const double w = table.features(row[i].edge)[*options.weight_feature];
        const double key = w > 0.0 ? std::log(u) / w : -INFINITY;
        keys.push_back({key, static_cast<uint32_t>(i)});
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (uint32_t i = 0; i < cap; ++i) {
        kept.push_back(row[keys[i].second].edge);
    }
    return kept;
}

}  // namespace

Graph cap_degree(const Graph& g, uint32_t cap, uint64_t seed, const CapOptions& options) {
    if (cap < 1) {
        throw ConfigError("degree cap must be >= 1");
    }
    const GraphSchema& schema = g.schema();
    std::vector<std::vector<uint8_t>> votes(schema.edge_types.size());
    for (size_t e = 0; e < schema.edge_types.size(); ++e) {
        const auto& spec = schema.edge_types[e];
        const EdgeTable& table = g.edges(e);
        if (options.weight_feature && *options.weight_feature >= table.dim()) {
            throw ConfigError("weight feature out of range for edge type " + spec.type.key());
        }
        votes[e].assign(table.size(), 0);
        const size_t st = static_cast<size_t>(schema.node_type_index(spec.type.src_type));
        const size_t dt = static_cast<size_t>(schema.node_type_index(spec.type.dst_type));
        // Sides: the source side (out rows) and the destination side (in rows). For
        // undirected same-type edges both sides read the merged rows.
        const bool merged = !spec.directed && st == dt;
        for (int side = 0; side < (merged ? 1 : 2); ++side) {
            const size_t nt = side == 0 ? st : dt;
            const Direction dir = side == 0 ? Direction::kOut : Direction::kIn;
            const std::string domain = "cap|" + spec.type.key() + (side == 0 ? "|out" : "|in");
            const NodeTable& nodes = g.nodes(nt);
            for (uint32_t n = 0; n < nodes.size(); ++n) {
                const uint64_t s = SeedDerivation::derive(seed, domain, nodes.id(n), 0);
                for (uint32_t edge : kept_edges(g.adjacency(e, nt, n, dir), cap, s, table, options)) {
                    ++votes[e][edge];
                }
            }
        }
    }
    return filter_edges(g, [&](size_t e, size_t i) {
        const auto& spec = schema.edge_types[e];
        const bool merged = !spec.directed && spec.type.src_type == spec.type.dst_type;
        const EdgeTable& table = g.edges(e);
        // A self-loop appears once in the merged row, so one vote suffices.
        const uint8_t needed = merged && table.src(i) == table.dst(i) ? 1 : 2;
        return votes[e][i] >= needed;
    });
}

size_t SupervisionEdgeSet::count(Polarity p) const {
    return static_cast<size_t>(
        std::count_if(edges.begin(), edges.end(), [p](const SupervisionEdge& e) { return e.polarity == p; }));
}

std::vector<Event> read_event_table(std::istream& in) {
    std::vector<Event> out;
    std::string line;
    size_t lineno = 0;
    while (read_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto f = split_fields(line);
        if (f.size() != 6) {
            throw ParseError("event table: expected 6 fields", lineno);
        }
        try {
            out.push_back({{std::string(f[0]), parse_u64(f[1])},
                           {std::string(f[2]), parse_u64(f[3])},
                           parse_i64(f[4]),
                           std::string(f[5])});
        } catch (const ParseError& e) {
            throw ParseError(std::string("event table: ") + e.what(), lineno);
        }
    }
    return out;
}

std::vector<Event> read_event_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw LookupError("cannot open event table '" + path + "'");
    }
    return read_event_table(in);
}

SupervisionBuildResult build_supervision_set(std::span<const Event> events, const Graph& g,
                                             const SupervisionPolicy& policy) {
    SupervisionBuildResult result;
    result.set.disjoint_from_messages = policy.disjoint_from_messages;
    for (const Event& ev : events) {
        if (ev.timestamp < policy.window_begin || ev.timestamp > policy.window_end) {
            ++result.outside_window;
            continue;
        }
        Polarity polarity;
        if (policy.positive_kinds.count(ev.kind)) {
            polarity = Polarity::kPositive;
        } else if (policy.negative_kinds.count(ev.kind)) {
            polarity = Polarity::kNegative;
        } else {
            ++result.unknown_kind;
            continue;
        }
        if (!g.contains(ev.src) || !g.contains(ev.dst)) {
            ++result.dropped_missing_endpoint;
            continue;
        }
        result.set.edges.push_back({ev.src, ev.dst, polarity});
    }
    auto& edges = result.set.edges;
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return result;
}

Graph remove_supervision_edges(const Graph& g, const SupervisionEdgeSet& supervision) {
    std::set<std::pair<NodeRef, NodeRef>> positives;
    for (const auto& e : supervision.edges) {
        if (e.polarity == Polarity::kPositive) {
            positives.insert({e.src, e.dst});
        }
    }
    const GraphSchema& schema = g.schema();
    return filter_edges(g, [&](size_t e, size_t i) {
        const auto& spec = schema.edge_types[e];
        const EdgeTable& table = g.edges(e);
        NodeRef s{spec.type.src_type, g.nodes(spec.type.src_type).id(table.src(i))};
        NodeRef d{spec.type.dst_type, g.nodes(spec.type.dst_type).id(table.dst(i))};
        if (positives.count({s, d})) {
            return false;
        }
        return spec.directed || !positives.count({d, s});
    });
}

}  // namespace giglite
