#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "giglite/graph.h"

namespace giglite {

struct WeightedPair {
    uint64_t i = 0;
    uint64_t j = 0;
    double weight = 0.0;

    bool operator==(const WeightedPair&) const = default;
};

/// Item-item co-engagement edges from (user, item) pairs. Emits (i, j, w) with i < j for
/// every pair sharing at least one user and w = |U_i & U_j| / |U_i | U_j| >= threshold,
/// sorted by (i, j). Duplicate input pairs are ignored.
std::vector<WeightedPair> jaccard_sparsify(std::span<const std::pair<uint64_t, uint64_t>> user_item,
                                           double threshold);

struct CapOptions {
    /// When set, retention is weighted by this edge-feature column (Efraimidis-Spirakis);
    /// otherwise uniform.
    std::optional<uint32_t> weight_feature;
};

/// Caps every node's per-edge-type, per-direction degree. Each node keeps a seeded
/// sample of its adjacency; an edge survives when both endpoints keep it.
Graph cap_degree(const Graph& g, uint32_t cap, uint64_t seed, const CapOptions& options = {});

enum class Polarity { kPositive, kNegative };

struct SupervisionEdge {
    NodeRef src;
    NodeRef dst;
    Polarity polarity = Polarity::kPositive;

    auto operator<=>(const SupervisionEdge&) const = default;
    bool operator==(const SupervisionEdge&) const = default;
};

struct SupervisionEdgeSet {
    std::vector<SupervisionEdge> edges;  // sorted, unique
    /// When set, positives that coincide with message edges are removed from the
    /// message graph before sampling (see remove_supervision_edges).
    bool disjoint_from_messages = false;

    size_t count(Polarity p) const;
};

struct Event {
    NodeRef src;
    NodeRef dst;
    int64_t timestamp = 0;
    std::string kind;
};

/// Tab-separated: src_type src_id dst_type dst_id timestamp event_kind.
std::vector<Event> read_event_table(std::istream& in);
std::vector<Event> read_event_table_file(const std::string& path);

struct SupervisionPolicy {
    int64_t window_begin = 0;  // inclusive
    int64_t window_end = 0;    // inclusive
    std::set<std::string> positive_kinds;
    std::set<std::string> negative_kinds;
    bool disjoint_from_messages = false;
};

struct SupervisionBuildResult {
    SupervisionEdgeSet set;
    size_t dropped_missing_endpoint = 0;
    size_t outside_window = 0;
    size_t unknown_kind = 0;
};

SupervisionBuildResult build_supervision_set(std::span<const Event> events, const Graph& g,
                                             const SupervisionPolicy& policy);

/// Drops message edges that coincide with positive supervision edges (either
/// orientation for undirected edge types).
Graph remove_supervision_edges(const Graph& g, const SupervisionEdgeSet& supervision);

}  // namespace giglite
