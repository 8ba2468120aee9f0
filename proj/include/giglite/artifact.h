#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "giglite/model.h"

namespace giglite {

struct TrainingMetadata {
    uint64_t seed = 0;
    uint32_t epochs = 0;
    uint64_t steps = 0;
    std::string best_metric_name = "mrr";
    double best_metric = 0.0;
    uint64_t best_step = 0;
};

struct ModelArtifact {
    ModelConfig config;
    ParamSet<float> params;
    TrainingMetadata metadata;
};

/// Layout (all integers little-endian):
///   "giglite-model v1\n"
///   u32 config length, config JSON bytes ({"model": ..., "training": ...})
///   u32 tensor count, then per tensor: u32 name length, name, u32 rows, u32 cols,
///   rows*cols float32 row-major.
std::string serialize_artifact(const ModelArtifact& artifact);
/// Throws ParseError on a bad header or truncated body.
ModelArtifact deserialize_artifact(std::string_view bytes);

void save_artifact(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::string& path);

/// Hex fnv1a64 of the serialized bytes.
std::string artifact_id(const ModelArtifact& artifact);

}  // namespace giglite
