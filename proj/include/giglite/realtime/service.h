#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "giglite/realtime/partition.h"
#include "giglite/realtime/wire.h"

namespace giglite {

/// Read-only neighbor service over one partition. Neighbor picks use the same
/// selection rule as the tabular sampler, so identical queries give identical answers.
class NeighborService {
  public:
    explicit NeighborService(PartitionData data, std::optional<SplitMask> mask = std::nullopt);

    const PartitionData& data() const { return data_; }

    /// Errors are reported in the response status, never thrown.
    NeighborResponse handle(const NeighborRequest& request) const;

    /// Frame in, frame out. Framing and decoding failures become error responses.
    std::string handle_frame(std::string_view frame_bytes) const;

  private:
    std::optional<NeighborResponse> check_owned(uint64_t request_id, const NodeRef& node) const;

    PartitionData data_;
};

}  // namespace giglite
