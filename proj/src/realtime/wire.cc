#include "giglite/realtime/wire.h"

#include <bit>

#include "giglite/hash.h"

namespace giglite {

namespace {

constexpr char kRequestTag = 'Q';
constexpr char kResponseTag = 'R';

void put_u8(std::string& out, uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_str(std::string& out, std::string_view s) {
    append_le32(out, static_cast<uint32_t>(s.size()));
    out.append(s);
}

void put_floats(std::string& out, const std::vector<float>& v) {
    append_le32(out, static_cast<uint32_t>(v.size()));
    for (float f : v) append_le32(out, std::bit_cast<uint32_t>(f));
}

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(size_t n) {
        if (bytes_.size() - pos_ < n) {
            throw WireError(WireStatus::kMalformed, "payload truncated at byte " + std::to_string(pos_));
        }
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
    uint64_t le(size_t width) {
        auto b = take(width);
        uint64_t v = 0;
        for (size_t i = width; i-- > 0;) v = (v << 8) | static_cast<unsigned char>(b[i]);
        return v;
    }
    uint32_t u32() { return static_cast<uint32_t>(le(4)); }
    uint64_t u64() { return le(8); }
    /// A count whose elements need at least `min_bytes` each; rejects impossible counts early.
    uint32_t count(size_t min_bytes) {
        const uint32_t n = u32();
        if (min_bytes > 0 && n > (bytes_.size() - pos_) / min_bytes) {
            throw WireError(WireStatus::kMalformed, "list length " + std::to_string(n) + " exceeds payload");
        }
        return n;
    }
    std::string str() { return std::string(take(count(1))); }
    std::vector<float> floats() {
        std::vector<float> v(count(4));
        for (auto& f : v) f = std::bit_cast<float>(u32());
        return v;
    }
    void finish() const {
        if (pos_ != bytes_.size()) throw WireError(WireStatus::kMalformed, "trailing bytes after payload");
    }

  private:
    std::string_view bytes_;
    size_t pos_ = 0;
};

}  // namespace

const char* wire_status_name(WireStatus s) {
    switch (s) {
        case WireStatus::kOk: return "OK";
        case WireStatus::kLengthOverflow: return "LENGTH_OVERFLOW";
        case WireStatus::kBadVersion: return "BAD_VERSION";
        case WireStatus::kMalformed: return "MALFORMED";
        case WireStatus::kOwnership: return "OWNERSHIP";
        case WireStatus::kNotFound: return "NOT_FOUND";
    }
    return "UNKNOWN";
}

std::string encode_request(const NeighborRequest& r) {
    std::string out;
    out.push_back(kRequestTag);
    append_le64(out, r.request_id);
    put_u8(out, static_cast<uint8_t>(r.kind));
    if (r.kind == RequestKind::kNeighbors) {
        append_le32(out, static_cast<uint32_t>(r.queries.size()));
        for (const auto& q : r.queries) {
            put_str(out, q.node.type);
            append_le64(out, q.node.id);
            append_le32(out, q.edge_type);
            put_u8(out, q.direction == Direction::kOut ? 0 : 1);
            append_le32(out, q.fanout);
            append_le64(out, q.seed);
        }
    } else {
        append_le32(out, static_cast<uint32_t>(r.nodes.size()));
        for (const auto& n : r.nodes) {
            put_str(out, n.type);
            append_le64(out, n.id);
        }
    }
    return out;
}

std::string encode_response(const NeighborResponse& r) {
    std::string out;
    out.push_back(kResponseTag);
    append_le64(out, r.request_id);
    put_u8(out, static_cast<uint8_t>(r.status));
    put_str(out, r.message);
    append_le32(out, static_cast<uint32_t>(r.neighbors.size()));
    for (const auto& list : r.neighbors) {
        append_le32(out, static_cast<uint32_t>(list.size()));
        for (const auto& nb : list) {
            put_str(out, nb.node.type);
            append_le64(out, nb.node.id);
            put_floats(out, nb.edge_features);
        }
    }
    append_le32(out, static_cast<uint32_t>(r.features.size()));
    for (const auto& row : r.features) put_floats(out, row);
    return out;
}

NeighborRequest decode_request(std::string_view payload) {
    Reader in(payload);
    if (in.u8() != static_cast<uint8_t>(kRequestTag)) {
        throw WireError(WireStatus::kMalformed, "payload is not a request");
    }
    NeighborRequest r;
    r.request_id = in.u64();
    const uint8_t kind = in.u8();
    if (kind == static_cast<uint8_t>(RequestKind::kNeighbors)) {
        r.kind = RequestKind::kNeighbors;
        const uint32_t n = in.count(29);
        for (uint32_t i = 0; i < n; ++i) {
            NeighborQuery q;
            q.node.type = in.str();
            q.node.id = in.u64();
            q.edge_type = in.u32();
            const uint8_t d = in.u8();
            if (d > 1) throw WireError(WireStatus::kMalformed, "bad direction byte");
            q.direction = d == 0 ? Direction::kOut : Direction::kIn;
            q.fanout = in.u32();
            q.seed = in.u64();
            r.queries.push_back(std::move(q));
        }
    } else if (kind == static_cast<uint8_t>(RequestKind::kFeatures)) {
        r.kind = RequestKind::kFeatures;
        const uint32_t n = in.count(12);
        for (uint32_t i = 0; i < n; ++i) {
            NodeRef node;
            node.type = in.str();
            node.id = in.u64();
            r.nodes.push_back(std::move(node));
        }
    } else {
        throw WireError(WireStatus::kMalformed, "unknown request kind " + std::to_string(kind));
    }
    in.finish();
    return r;
}

NeighborResponse decode_response(std::string_view payload) {
    Reader in(payload);
    if (in.u8() != static_cast<uint8_t>(kResponseTag)) {
        throw WireError(WireStatus::kMalformed, "payload is not a response");
    }
    NeighborResponse r;
    r.request_id = in.u64();
    const uint8_t status = in.u8();
    if (status > static_cast<uint8_t>(WireStatus::kNotFound)) {
        throw WireError(WireStatus::kMalformed, "unknown status " + std::to_string(status));
    }
    r.status = static_cast<WireStatus>(status);
    r.message = in.str();
    const uint32_t lists = in.count(4);
    for (uint32_t i = 0; i < lists; ++i) {
        std::vector<SampledNeighbor> list(in.count(16));
        for (auto& nb : list) {
            nb.node.type = in.str();
            nb.node.id = in.u64();
            nb.edge_features = in.floats();
        }
        r.neighbors.push_back(std::move(list));
    }
    const uint32_t rows = in.count(4);
    for (uint32_t i = 0; i < rows; ++i) r.features.push_back(in.floats());
    in.finish();
    return r;
}

std::string frame(std::string_view payload, uint8_t version) {
    if (payload.size() > kMaxPayload) {
        throw WireError(WireStatus::kLengthOverflow, "payload of " + std::to_string(payload.size()) + " bytes");
    }
    const auto n = static_cast<uint32_t>(payload.size());
    std::string out;
    out.reserve(5 + payload.size());
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xff));
    out.push_back(static_cast<char>(version));
    out.append(payload);
    return out;
}

Unframed unframe(std::string_view bytes) {
    if (bytes.size() < 5) throw WireError(WireStatus::kMalformed, "frame header truncated");
    uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(bytes[i]);
    if (n > kMaxPayload) {
        throw WireError(WireStatus::kLengthOverflow, "declared payload of " + std::to_string(n) + " bytes");
    }
    const uint8_t version = static_cast<uint8_t>(bytes[4]);
    if (version != kWireVersion) {
        throw WireError(WireStatus::kBadVersion, "protocol version " + std::to_string(version));
    }
    if (bytes.size() - 5 < n) throw WireError(WireStatus::kMalformed, "frame payload truncated");
    return {version, bytes.substr(5, n), 5 + static_cast<size_t>(n)};
}

}  // namespace giglite
