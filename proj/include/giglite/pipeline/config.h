#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "giglite/graph_builder.h"
#include "giglite/model.h"
#include "giglite/realtime/transport.h"
#include "giglite/sampler.h"
#include "giglite/split.h"
#include "giglite/trainer.h"

namespace giglite {

inline constexpr const char* kTaskFormat = "giglite-task v1";
inline constexpr const char* kResourceFormat = "giglite-resource v1";
inline constexpr const char* kFrozenFormat = "giglite-frozen v1";

/// Featurized tables in the canonical TSV layout plus a schema file.
struct GraphInput {
    std::string schema;
    std::vector<std::string> node_tables;
    std::vector<std::string> edge_tables;
};

/// Raw header-bearing tables run through the preprocessor.
struct PreprocessInput {
    std::string spec;
    std::map<std::string, std::string> node_tables;  // by node type
    std::map<std::string, std::string> edge_tables;  // by edge key "src|relation|dst"
};

struct SupervisionInput {
    std::string events;
    SupervisionPolicy policy;
};

struct SamplerTaskConfig {
    SampleKind kind = SampleKind::kLinkPrediction;
    FanoutSpec fanouts;
    uint32_t n_pos = 1;
    uint32_t n_hard_neg = 0;
    std::string anchor_type;
    std::vector<EdgeType> positive_edge_types;
    Direction direction = Direction::kOut;
    std::optional<SupervisionInput> supervision;
    std::string labels;  // node-classification: node_type, node_id, label
};

struct InferenceTaskConfig {
    std::string node_type;  // empty embeds every node
    uint32_t eval_candidates = 512;
};

enum class Backend { kTabular, kRealtime };

struct TaskConfig {
    std::string run_name;
    uint64_t seed = 0;
    std::optional<GraphInput> graph;
    std::optional<PreprocessInput> preprocessor;
    SamplerTaskConfig sampler;
    SplitConfig split;
    ModelConfig model;
    TrainConfig training;
    InferenceTaskConfig inference;
    Backend backend = Backend::kTabular;

    nlohmann::json to_json() const;
    /// Throws ConfigError on a wrong format key or malformed fields.
    static TaskConfig from_json(const nlohmann::json& j);
};

struct ResourceConfig {
    uint32_t preprocess_threads = 1;
    uint32_t sample_threads = 1;
    uint32_t train_threads = 1;
    uint32_t infer_threads = 1;
    uint64_t memory_mb = 1024;
    uint32_t partitions = 1;
    std::string transport = "inprocess";  // inprocess | tcp
    std::vector<Endpoint> endpoints;      // external services for the CLI sampler
    uint32_t retries = 3;

    nlohmann::json to_json() const;
    static ResourceConfig from_json(const nlohmann::json& j);
};

/// Every component output location, pinned before anything runs.
struct FrozenConfig {
    TaskConfig task;
    ResourceConfig resource;
    std::string root;
    std::string run;
    std::map<std::string, std::string> paths;
    std::string input_hash;

    const std::string& path(const std::string& key) const;
    std::string component_dir(const std::string& component) const;
    nlohmann::json to_json() const;
    static FrozenConfig from_json(const nlohmann::json& j);
};

TaskConfig load_task_config(const std::string& path);
ResourceConfig load_resource_config(const std::string& path);
FrozenConfig load_frozen_config(const std::string& path);
std::string serialize_frozen(const FrozenConfig& frozen);

/// Every problem found, each naming the offending field; empty means valid.
std::vector<std::string> validate_config(const TaskConfig& task, const ResourceConfig& resource);

/// Layout <root>/<run>/<component>/<asset>. Deterministic in its arguments and the
/// content of the declared inputs.
FrozenConfig populate_config(const TaskConfig& task, const ResourceConfig& resource, const std::string& root,
                             const std::string& run);

/// Declared input files of the task, in a fixed order.
std::vector<std::string> declared_inputs(const TaskConfig& task);

/// Hex fnv1a64 of a file's bytes; throws LookupError when unreadable.
std::string file_hash(const std::string& path);

}  // namespace giglite
