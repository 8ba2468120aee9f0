#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "giglite/pipeline/config.h"

namespace giglite {

struct ComponentReport {
    std::string name;
    std::string status = "not-attempted";  // ran | skipped | failed | not-attempted
    double seconds = 0.0;
    std::map<std::string, uint64_t> counts;
    std::string error;
};

struct RunReport {
    std::string run;
    bool ok = true;
    std::string failed_component;
    std::vector<ComponentReport> components;

    /// Components that started work, whether they finished or failed.
    size_t executed() const;
    nlohmann::json to_json() const;
};

/// Component names in execution order for the task's backend.
std::vector<std::string> pipeline_components(const TaskConfig& task);

struct RunOptions {
    /// This component and everything after it run even when their manifests match.
    std::optional<std::string> from_component;
    std::ostream* log = nullptr;
};

/// Runs the components in order. A component is skipped when its manifest records the
/// current input hash and every output still hashes to the recorded value. The first
/// failure stops the run; later components are reported as not attempted. The report is
/// also written to the frozen "report" path.
RunReport run_pipeline(const FrozenConfig& frozen, const RunOptions& options = {});

/// Runs a single component; `force` ignores a matching manifest. Throws on failure.
ComponentReport run_component(const FrozenConfig& frozen, const std::string& component, bool force = false);

/// Hex fnv1a64 over a file, or over the sorted relative names and contents of a directory.
std::string path_hash(const std::string& path);

/// Tab-separated node_type, node_id, label.
std::map<NodeRef, int64_t> read_label_table_file(const std::string& path);

}  // namespace giglite
