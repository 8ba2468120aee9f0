#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "giglite/realtime/partition.h"
#include "giglite/realtime/transport.h"
#include "giglite/sampler.h"

namespace giglite {

/// Neighbor source backed by partition services. Queries are grouped by owner, sent as
/// one request per partition and merged back in partition order.
class RemoteNeighborSource final : public NeighborSource {
  public:
    RemoteNeighborSource(GraphSchema schema, PartitionPlan plan, Transport& transport);

    const GraphSchema& schema() const override { return schema_; }
    std::vector<std::vector<SampledNeighbor>> sample(std::span<const NeighborQuery> queries) override;
    std::vector<std::vector<float>> hydrate(std::span<const NodeRef> nodes) override;

    uint64_t requests_sent() const { return next_id_ - 1; }

  private:
    NeighborResponse call(uint32_t partition, const NeighborRequest& request);

    GraphSchema schema_;
    PartitionPlan plan_;
    Transport& transport_;
    uint64_t next_id_ = 1;
};

std::vector<RootedSubgraph> distributed_sample_k_hop(RemoteNeighborSource& source, std::span<const NodeRef> roots,
                                                     const FanoutSpec& fanouts, uint64_t seed,
                                                     Direction direction = Direction::kOut);

}  // namespace giglite
