#include "giglite/batch.h"

#include <map>

#include "giglite/error.h"

namespace giglite {

namespace {

uint32_t append_subgraph(BatchGraph& b, const RootedSubgraph& sg) {
    std::map<NodeRef, uint32_t> local;
    for (const auto& n : sg.nodes) {
        if (n.features.size() != b.feature_dim) {
            throw SchemaError("collate: node " + to_string(n.node) + " has " + std::to_string(n.features.size()) +
                              " features, batch expects " + std::to_string(b.feature_dim));
        }
        local[n.node] = static_cast<uint32_t>(b.nodes.size());
        b.nodes.push_back(n.node);
        b.hops.push_back(n.hop);
        b.features.insert(b.features.end(), n.features.begin(), n.features.end());
    }
    for (const auto& e : sg.edges) {
        auto s = local.find(e.src);
        auto d = local.find(e.dst);
        if (s == local.end() || d == local.end()) {
            throw SchemaError("collate: edge endpoint missing from subgraph of " + to_string(sg.root));
        }
        b.edges.push_back({s->second, d->second});
    }
    auto root = local.find(sg.root);
    if (root == local.end()) {
        throw SchemaError("collate: root " + to_string(sg.root) + " missing from its subgraph");
    }
    return root->second;
}

}  // namespace

void index_incoming(BatchGraph& batch) {
    const size_t n = batch.num_nodes();
    batch.in_offsets.assign(n + 1, 0);
    for (const auto& [s, d] : batch.edges) {
        ++batch.in_offsets[d + 1];
    }
    for (size_t i = 0; i < n; ++i) {
        batch.in_offsets[i + 1] += batch.in_offsets[i];
    }
    batch.in_sources.resize(batch.edges.size());
    std::vector<uint32_t> cursor(batch.in_offsets.begin(), batch.in_offsets.end() - 1);
    for (const auto& [s, d] : batch.edges) {
        batch.in_sources[cursor[d]++] = s;
    }
}

BatchGraph collate(std::span<const TrainingSample* const> samples) {
    BatchGraph b;
    b.sample_offsets.push_back(0);
    if (samples.empty()) {
        index_incoming(b);
        return b;
    }
    const SampleKind kind = samples.front()->kind;
    if (!samples.front()->anchor.nodes.empty()) {
        b.feature_dim = static_cast<uint32_t>(samples.front()->anchor.nodes.front().features.size());
    }
    for (const TrainingSample* s : samples) {
        if (s->kind != kind) {
            throw ConfigError("collate: samples of different kinds in one batch");
        }
        SampleSlots slots;
        slots.anchor = append_subgraph(b, s->anchor);
        for (const auto& p : s->positives) {
            slots.positives.push_back(append_subgraph(b, p));
        }
        for (const auto& n : s->hard_negatives) {
            slots.negatives.push_back(append_subgraph(b, n));
        }
        slots.label = s->label;
        b.samples.push_back(std::move(slots));
        b.sample_offsets.push_back(static_cast<uint32_t>(b.nodes.size()));
    }
    index_incoming(b);
    return b;
}

BatchGraph collate(std::span<const TrainingSample> samples) {
    std::vector<const TrainingSample*> ptrs;
    ptrs.reserve(samples.size());
    for (const auto& s : samples) ptrs.push_back(&s);
    return collate(ptrs);
}

BatchGraph collate_subgraphs(std::span<const RootedSubgraph> subgraphs) {
    BatchGraph b;
    b.sample_offsets.push_back(0);
    for (const auto& sg : subgraphs) {
        if (b.nodes.empty() && !sg.nodes.empty()) {
            b.feature_dim = static_cast<uint32_t>(sg.nodes.front().features.size());
        }
        SampleSlots slots;
        slots.anchor = append_subgraph(b, sg);
        b.samples.push_back(std::move(slots));
        b.sample_offsets.push_back(static_cast<uint32_t>(b.nodes.size()));
    }
    index_incoming(b);
    return b;
}

}  // namespace giglite
