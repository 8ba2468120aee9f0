#include "giglite/realtime/service.h"

#include "giglite/hash.h"

namespace giglite {

namespace {

NeighborResponse error_response(uint64_t id, WireStatus status, std::string message) {
    NeighborResponse r;
    r.request_id = id;
    r.status = status;
    r.message = std::move(message);
    return r;
}

}  // namespace

NeighborService::NeighborService(PartitionData data, std::optional<SplitMask> mask)
    : data_(mask ? apply_split_mask(data, *mask) : std::move(data)) {}

std::optional<NeighborResponse> NeighborService::check_owned(uint64_t id, const NodeRef& node) const {
    if (data_.schema.node_type_index(node.type) < 0) {
        return error_response(id, WireStatus::kNotFound, "unknown node type in " + to_string(node));
    }
    if (data_.plan.owner(node) != data_.id) {
        return error_response(id, WireStatus::kOwnership,
                              to_string(node) + " is owned by partition " + std::to_string(data_.plan.owner(node)) +
                                  ", not " + std::to_string(data_.id));
    }
    if (!data_.nodes.count(node)) {
        return error_response(id, WireStatus::kNotFound, "unknown node " + to_string(node));
    }
    return std::nullopt;
}

NeighborResponse NeighborService::handle(const NeighborRequest& request) const {
    NeighborResponse out;
    out.request_id = request.request_id;
    if (request.kind == RequestKind::kFeatures) {
        for (const NodeRef& n : request.nodes) {
            if (auto err = check_owned(request.request_id, n)) return *err;
            out.features.push_back(data_.nodes.at(n));
        }
        return out;
    }
    for (const NeighborQuery& q : request.queries) {
        if (auto err = check_owned(request.request_id, q.node)) return *err;
        if (q.edge_type >= data_.schema.edge_types.size()) {
            return error_response(request.request_id, WireStatus::kNotFound,
                                  "unknown edge type index " + std::to_string(q.edge_type));
        }
        if (q.direction != data_.plan.direction()) {
            return error_response(request.request_id, WireStatus::kMalformed,
                                  "query direction does not match the partition collocation side");
        }
        std::vector<SampledNeighbor> picked;
        auto row = data_.rows.find({q.node, q.edge_type});
        if (row != data_.rows.end()) {
            const auto& entries = row->second.entries;
            for (uint32_t i : choose_without_replacement(static_cast<uint32_t>(entries.size()), q.fanout, q.seed)) {
                picked.push_back(entries[i]);
            }
        }
        out.neighbors.push_back(std::move(picked));
    }
    return out;
}

std::string NeighborService::handle_frame(std::string_view frame_bytes) const {
    NeighborResponse response;
    try {
        const Unframed f = unframe(frame_bytes);
        if (f.consumed != frame_bytes.size()) {
            throw WireError(WireStatus::kMalformed, "bytes after the frame");
        }
        response = handle(decode_request(f.payload));
    } catch (const WireError& e) {
        response = error_response(0, e.status(), e.what());
    }
    return frame(encode_response(response));
}

}  // namespace giglite
