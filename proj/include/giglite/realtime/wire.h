#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "giglite/graph.h"
#include "giglite/sampler.h"

namespace giglite {

inline constexpr uint8_t kWireVersion = 1;
inline constexpr uint32_t kMaxPayload = 64u << 20;

enum class WireStatus : uint8_t {
    kOk = 0,
    kLengthOverflow = 1,
    kBadVersion = 2,
    kMalformed = 3,
    kOwnership = 4,
    kNotFound = 5,
};

const char* wire_status_name(WireStatus s);

enum class RequestKind : uint8_t { kNeighbors = 1, kFeatures = 2 };

struct NeighborRequest {
    uint64_t request_id = 0;
    RequestKind kind = RequestKind::kNeighbors;
    std::vector<NeighborQuery> queries;  // kNeighbors
    std::vector<NodeRef> nodes;          // kFeatures

    bool operator==(const NeighborRequest&) const = default;
};

struct NeighborResponse {
    uint64_t request_id = 0;
    WireStatus status = WireStatus::kOk;
    std::string message;
    std::vector<std::vector<SampledNeighbor>> neighbors;  // one list per query
    std::vector<std::vector<float>> features;             // one row per requested node

    bool operator==(const NeighborResponse&) const = default;
};

/// Payload encodings, little-endian throughout. Strings and lists carry a u32 length.
/// Request:  u8 'Q', u64 id, u8 kind, u32 n, then per query
///           (str type, u64 id, u32 edge type, u8 direction, u32 fanout, u64 seed)
///           or per node (str type, u64 id).
/// Response: u8 'R', u64 id, u8 status, str message, u32 n lists of
///           (u32 m, m x (str type, u64 id, u32 d, d x f32)), u32 k rows of (u32 d, d x f32).
std::string encode_request(const NeighborRequest& r);
std::string encode_response(const NeighborResponse& r);

/// Throw WireError(kMalformed) on any structural problem.
NeighborRequest decode_request(std::string_view payload);
NeighborResponse decode_response(std::string_view payload);

class WireError : public std::runtime_error {
  public:
    WireError(WireStatus status, const std::string& what) : std::runtime_error(what), status_(status) {}
    WireStatus status() const { return status_; }

  private:
    WireStatus status_;
};

/// 4-byte big-endian payload length, 1-byte version, payload.
std::string frame(std::string_view payload, uint8_t version = kWireVersion);

struct Unframed {
    uint8_t version = 0;
    std::string_view payload;
    size_t consumed = 0;
};

/// Parses one complete frame from the front of `bytes`. Throws WireError with
/// kLengthOverflow, kBadVersion or kMalformed (truncated).
Unframed unframe(std::string_view bytes);

}  // namespace giglite
