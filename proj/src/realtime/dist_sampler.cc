#include "giglite/realtime/dist_sampler.h"

#include "giglite/error.h"

namespace giglite {

RemoteNeighborSource::RemoteNeighborSource(GraphSchema schema, PartitionPlan plan, Transport& transport)
    : schema_(std::move(schema)), plan_(plan), transport_(transport) {
    plan_.validate();
    if (transport_.partitions() != plan_.n_partitions) {
        throw ConfigError("transport reaches " + std::to_string(transport_.partitions()) + " partitions, plan has " +
                          std::to_string(plan_.n_partitions));
    }
}

NeighborResponse RemoteNeighborSource::call(uint32_t partition, const NeighborRequest& request) {
    const std::string reply = transport_.exchange(partition, frame(encode_request(request)));
    NeighborResponse r;
    try {
        r = decode_response(unframe(reply).payload);
    } catch (const WireError& e) {
        throw TransportError("partition " + std::to_string(partition) + " sent a bad reply: " + e.what());
    }
    const std::string where = "partition " + std::to_string(partition) + ": ";
    switch (r.status) {
        case WireStatus::kOk: break;
        case WireStatus::kNotFound:
        case WireStatus::kOwnership: throw LookupError(where + wire_status_name(r.status) + " " + r.message);
        default: throw TransportError(where + wire_status_name(r.status) + " " + r.message);
    }
    if (r.request_id != request.request_id) {
        throw TransportError(where + "reply id " + std::to_string(r.request_id) + " does not echo request " +
                             std::to_string(request.request_id));
    }
    return r;
}

std::vector<std::vector<SampledNeighbor>> RemoteNeighborSource::sample(std::span<const NeighborQuery> queries) {
    std::vector<NeighborRequest> requests(plan_.n_partitions);
    std::vector<std::vector<size_t>> slots(plan_.n_partitions);
    for (size_t i = 0; i < queries.size(); ++i) {
        const uint32_t p = plan_.owner(queries[i].node);
        requests[p].queries.push_back(queries[i]);
        slots[p].push_back(i);
    }
    std::vector<std::vector<SampledNeighbor>> out(queries.size());
    for (uint32_t p = 0; p < plan_.n_partitions; ++p) {
        if (requests[p].queries.empty()) continue;
        requests[p].kind = RequestKind::kNeighbors;
        requests[p].request_id = next_id_++;
        NeighborResponse r = call(p, requests[p]);
        if (r.neighbors.size() != slots[p].size()) {
            throw TransportError("partition " + std::to_string(p) + " answered " + std::to_string(r.neighbors.size()) +
                                 " of " + std::to_string(slots[p].size()) + " queries");
        }
        for (size_t j = 0; j < slots[p].size(); ++j) out[slots[p][j]] = std::move(r.neighbors[j]);
    }
    return out;
}

std::vector<std::vector<float>> RemoteNeighborSource::hydrate(std::span<const NodeRef> nodes) {
    std::vector<NeighborRequest> requests(plan_.n_partitions);
    std::vector<std::vector<size_t>> slots(plan_.n_partitions);
    for (size_t i = 0; i < nodes.size(); ++i) {
        const uint32_t p = plan_.owner(nodes[i]);
        requests[p].nodes.push_back(nodes[i]);
        slots[p].push_back(i);
    }
    std::vector<std::vector<float>> out(nodes.size());
    for (uint32_t p = 0; p < plan_.n_partitions; ++p) {
        if (requests[p].nodes.empty()) continue;
        requests[p].kind = RequestKind::kFeatures;
        requests[p].request_id = next_id_++;
        NeighborResponse r = call(p, requests[p]);
        if (r.features.size() != slots[p].size()) {
            throw TransportError("partition " + std::to_string(p) + " returned " + std::to_string(r.features.size()) +
                                 " of " + std::to_string(slots[p].size()) + " feature rows");
        }
        for (size_t j = 0; j < slots[p].size(); ++j) out[slots[p][j]] = std::move(r.features[j]);
    }
    return out;
}

std::vector<RootedSubgraph> distributed_sample_k_hop(RemoteNeighborSource& source, std::span<const NodeRef> roots,
                                                     const FanoutSpec& fanouts, uint64_t seed, Direction direction) {
    return sample_k_hop_batch(source, roots, fanouts, SamplerOptions{seed, direction});
}

}  // namespace giglite
