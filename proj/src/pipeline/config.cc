#include "giglite/pipeline/config.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/preprocess.h"
#include "giglite/text_format.h"

namespace giglite {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

EdgeType parse_edge_key(const std::string& key) {
    const auto a = key.find('|');
    const auto b = a == std::string::npos ? a : key.find('|', a + 1);
    if (b == std::string::npos || key.find('|', b + 1) != std::string::npos) {
        throw ConfigError("edge type '" + key + "' is not of the form src|relation|dst");
    }
    return {key.substr(0, a), key.substr(a + 1, b - a - 1), key.substr(b + 1)};
}

Direction parse_direction(const std::string& s) {
    if (s == "out") return Direction::kOut;
    if (s == "in") return Direction::kIn;
    throw ConfigError("direction must be 'out' or 'in', got '" + s + "'");
}

const char* direction_name(Direction d) { return d == Direction::kOut ? "out" : "in"; }

Backend parse_backend(const std::string& s) {
    if (s == "tabular") return Backend::kTabular;
    if (s == "realtime") return Backend::kRealtime;
    throw ConfigError("backend must be 'tabular' or 'realtime', got '" + s + "'");
}

const char* backend_name(Backend b) { return b == Backend::kTabular ? "tabular" : "realtime"; }

void check_format(const json& j, const char* expected, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
    const std::string got = j.value("format", std::string());
    if (got != expected) {
        throw ConfigError(std::string(what) + ": format must be '" + expected + "', got '" + got + "'");
    }
}

json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

std::string hex64(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool path_syntax_ok(const std::string& p) { return !p.empty() && p.find('\0') == std::string::npos; }

bool run_name_ok(const std::string& s) {
    if (s.empty() || s == "." || s == "..") return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        if (!ok) return false;
    }
    return true;
}

std::string join(const std::string& a, const std::string& b) { return (fs::path(a) / b).generic_string(); }

}  // namespace

json TaskConfig::to_json() const {
    json j;
    j["format"] = kTaskFormat;
    j["run_name"] = run_name;
    j["seed"] = seed;
    if (graph) {
        j["graph"] = {{"schema", graph->schema}, {"node_tables", graph->node_tables},
                      {"edge_tables", graph->edge_tables}};
    }
    if (preprocessor) {
        j["preprocessor"] = {{"spec", preprocessor->spec}, {"node_tables", preprocessor->node_tables},
                             {"edge_tables", preprocessor->edge_tables}};
    }
    json s;
    s["kind"] = sample_kind_name(sampler.kind);
    s["fanouts"] = sampler.fanouts.per_hop;
    if (!sampler.fanouts.per_edge_type.empty()) s["fanouts_by_edge_type"] = sampler.fanouts.per_edge_type;
    s["n_pos"] = sampler.n_pos;
    s["n_hard_neg"] = sampler.n_hard_neg;
    s["anchor_type"] = sampler.anchor_type;
    json pos = json::array();
    for (const auto& et : sampler.positive_edge_types) pos.push_back(et.key());
    s["positive_edge_types"] = pos;
    s["direction"] = direction_name(sampler.direction);
    if (sampler.supervision) {
        const SupervisionPolicy& p = sampler.supervision->policy;
        s["supervision"] = {{"events", sampler.supervision->events},
                            {"window_begin", p.window_begin},
                            {"window_end", p.window_end},
                            {"positive_kinds", p.positive_kinds},
                            {"negative_kinds", p.negative_kinds},
                            {"disjoint_from_messages", p.disjoint_from_messages}};
    }
    if (!sampler.labels.empty()) s["labels"] = sampler.labels;
    j["sampler"] = s;
    j["split"] = {{"strategy", strategy_name(split.strategy)},
                  {"train", split.train},
                  {"val", split.val},
                  {"test", split.test},
                  {"seed", split.seed}};
    j["model"] = model.to_json();
    j["training"] = training.to_json();
    j["inference"] = {{"node_type", inference.node_type}, {"eval_candidates", inference.eval_candidates}};
    j["backend"] = backend_name(backend);
    return j;
}

TaskConfig TaskConfig::from_json(const json& j) {
    check_format(j, kTaskFormat, "task config");
    TaskConfig t;
    try {
        t.run_name = j.value("run_name", std::string());
        t.seed = j.value("seed", uint64_t{0});
        if (j.contains("graph")) {
            const json& g = j.at("graph");
            GraphInput in;
            in.schema = g.value("schema", std::string());
            in.node_tables = g.value("node_tables", std::vector<std::string>{});
            in.edge_tables = g.value("edge_tables", std::vector<std::string>{});
            t.graph = std::move(in);
        }
        if (j.contains("preprocessor")) {
            const json& p = j.at("preprocessor");
            PreprocessInput in;
            in.spec = p.value("spec", std::string());
            in.node_tables = p.value("node_tables", std::map<std::string, std::string>{});
            in.edge_tables = p.value("edge_tables", std::map<std::string, std::string>{});
            t.preprocessor = std::move(in);
        }
        const json s = j.value("sampler", json::object());
        t.sampler.kind = parse_sample_kind(s.value("kind", std::string("node-anchor-link-prediction")));
        t.sampler.fanouts.per_hop = s.value("fanouts", std::vector<uint32_t>{});
        t.sampler.fanouts.per_edge_type =
            s.value("fanouts_by_edge_type", std::map<std::string, std::vector<uint32_t>>{});
        t.sampler.n_pos = s.value("n_pos", t.sampler.n_pos);
        t.sampler.n_hard_neg = s.value("n_hard_neg", t.sampler.n_hard_neg);
        t.sampler.anchor_type = s.value("anchor_type", std::string());
        for (const auto& key : s.value("positive_edge_types", std::vector<std::string>{})) {
            t.sampler.positive_edge_types.push_back(parse_edge_key(key));
        }
        t.sampler.direction = parse_direction(s.value("direction", std::string("out")));
        if (s.contains("supervision")) {
            const json& sup = s.at("supervision");
            SupervisionInput in;
            in.events = sup.value("events", std::string());
            in.policy.window_begin = sup.value("window_begin", int64_t{0});
            in.policy.window_end = sup.value("window_end", int64_t{0});
            in.policy.positive_kinds = sup.value("positive_kinds", std::set<std::string>{});
            in.policy.negative_kinds = sup.value("negative_kinds", std::set<std::string>{});
            in.policy.disjoint_from_messages = sup.value("disjoint_from_messages", false);
            t.sampler.supervision = std::move(in);
        }
        t.sampler.labels = s.value("labels", std::string());

        const json sp = j.value("split", json::object());
        t.split.strategy = parse_strategy(sp.value("strategy", std::string("transductive-link")));
        t.split.train = sp.value("train", t.split.train);
        t.split.val = sp.value("val", t.split.val);
        t.split.test = sp.value("test", t.split.test);
        t.split.seed = sp.value("seed", t.seed);

        t.model = ModelConfig::from_json(j.value("model", json::object()));
        json tr = j.value("training", json::object());
        if (!tr.contains("seed")) tr["seed"] = t.seed;
        t.training = TrainConfig::from_json(tr);

        const json inf = j.value("inference", json::object());
        t.inference.node_type = inf.value("node_type", std::string());
        t.inference.eval_candidates = inf.value("eval_candidates", t.inference.eval_candidates);
        t.backend = parse_backend(j.value("backend", std::string("tabular")));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("task config: ") + e.what());
    }
    return t;
}

json ResourceConfig::to_json() const {
    json endpoints_json = json::array();
    for (const auto& e : endpoints) endpoints_json.push_back(to_string(e));
    return {{"format", kResourceFormat},
            {"threads",
             {{"data_preprocessor", preprocess_threads},
              {"subgraph_sampler", sample_threads},
              {"trainer", train_threads},
              {"inferencer", infer_threads}}},
            {"memory_mb", memory_mb},
            {"realtime",
             {{"partitions", partitions}, {"transport", transport}, {"endpoints", endpoints_json},
              {"retries", retries}}}};
}

ResourceConfig ResourceConfig::from_json(const json& j) {
    check_format(j, kResourceFormat, "resource config");
    ResourceConfig r;
    try {
        const json th = j.value("threads", json::object());
        r.preprocess_threads = th.value("data_preprocessor", r.preprocess_threads);
        r.sample_threads = th.value("subgraph_sampler", r.sample_threads);
        r.train_threads = th.value("trainer", r.train_threads);
        r.infer_threads = th.value("inferencer", r.infer_threads);
        r.memory_mb = j.value("memory_mb", r.memory_mb);
        const json rt = j.value("realtime", json::object());
        r.partitions = rt.value("partitions", r.partitions);
        r.transport = rt.value("transport", r.transport);
        for (const auto& e : rt.value("endpoints", std::vector<std::string>{})) {
            r.endpoints.push_back(parse_endpoint(e));
        }
        r.retries = rt.value("retries", r.retries);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("resource config: ") + e.what());
    }
    return r;
}

const std::string& FrozenConfig::path(const std::string& key) const {
    auto it = paths.find(key);
    if (it == paths.end()) throw ConfigError("frozen config has no path '" + key + "'");
    return it->second;
}

std::string FrozenConfig::component_dir(const std::string& component) const {
    return join(join(root, run), component);
}

json FrozenConfig::to_json() const {
    return {{"format", kFrozenFormat}, {"task", task.to_json()}, {"resource", resource.to_json()},
            {"root", root},           {"run", run},              {"paths", paths},
            {"input_hash", input_hash}};
}

FrozenConfig FrozenConfig::from_json(const json& j) {
    check_format(j, kFrozenFormat, "frozen config");
    FrozenConfig f;
    try {
        f.task = TaskConfig::from_json(j.at("task"));
        f.resource = ResourceConfig::from_json(j.at("resource"));
        f.root = j.at("root").get<std::string>();
        f.run = j.at("run").get<std::string>();
        f.paths = j.at("paths").get<std::map<std::string, std::string>>();
        f.input_hash = j.at("input_hash").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("frozen config: ") + e.what());
    }
    return f;
}

TaskConfig load_task_config(const std::string& path) { return TaskConfig::from_json(parse_json_file(path)); }

ResourceConfig load_resource_config(const std::string& path) {
    return ResourceConfig::from_json(parse_json_file(path));
}

FrozenConfig load_frozen_config(const std::string& path) { return FrozenConfig::from_json(parse_json_file(path)); }

std::string serialize_frozen(const FrozenConfig& frozen) { return frozen.to_json().dump(2) + "\n"; }

std::vector<std::string> declared_inputs(const TaskConfig& task) {
    std::vector<std::string> out;
    if (task.graph) {
        out.push_back(task.graph->schema);
        out.insert(out.end(), task.graph->node_tables.begin(), task.graph->node_tables.end());
        out.insert(out.end(), task.graph->edge_tables.begin(), task.graph->edge_tables.end());
    }
    if (task.preprocessor) {
        out.push_back(task.preprocessor->spec);
        for (const auto& [_, p] : task.preprocessor->node_tables) out.push_back(p);
        for (const auto& [_, p] : task.preprocessor->edge_tables) out.push_back(p);
    }
    if (task.sampler.supervision) out.push_back(task.sampler.supervision->events);
    if (!task.sampler.labels.empty()) out.push_back(task.sampler.labels);
    return out;
}

std::string file_hash(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

std::vector<std::string> validate_config(const TaskConfig& task, const ResourceConfig& resource) {
    std::vector<std::string> errors;
    auto err = [&](std::string m) { errors.push_back(std::move(m)); };
    auto check_path = [&](const std::string& field, const std::string& p) {
        if (!path_syntax_ok(p)) {
            err(field + ": path is empty or malformed");
        } else if (!fs::is_regular_file(p)) {
            err(field + ": path '" + p + "' does not exist");
        }
    };

    if (!run_name_ok(task.run_name)) {
        err("run_name: '" + task.run_name + "' must be non-empty and use only [A-Za-z0-9._-]");
    }

    std::optional<GraphSchema> schema;
    if (task.graph.has_value() == task.preprocessor.has_value()) {
        err("graph/preprocessor: exactly one input source must be given");
    }
    if (task.graph) {
        check_path("graph.schema", task.graph->schema);
        if (task.graph->node_tables.empty()) err("graph.node_tables: at least one table is required");
        for (size_t i = 0; i < task.graph->node_tables.size(); ++i) {
            check_path("graph.node_tables[" + std::to_string(i) + "]", task.graph->node_tables[i]);
        }
        for (size_t i = 0; i < task.graph->edge_tables.size(); ++i) {
            check_path("graph.edge_tables[" + std::to_string(i) + "]", task.graph->edge_tables[i]);
        }
        if (fs::is_regular_file(task.graph->schema)) {
            try {
                schema = GraphSchema::from_json(read_file(task.graph->schema));
                schema->validate();
            } catch (const std::exception& e) {
                err("graph.schema: " + std::string(e.what()));
                schema.reset();
            }
        }
    }
    if (task.preprocessor) {
        check_path("preprocessor.spec", task.preprocessor->spec);
        if (task.preprocessor->node_tables.empty()) err("preprocessor.node_tables: at least one table is required");
        for (const auto& [type, p] : task.preprocessor->node_tables) check_path("preprocessor.node_tables." + type, p);
        for (const auto& [key, p] : task.preprocessor->edge_tables) {
            check_path("preprocessor.edge_tables." + key, p);
            try {
                parse_edge_key(key);
            } catch (const ConfigError& e) {
                err("preprocessor.edge_tables: " + std::string(e.what()));
            }
        }
        if (fs::is_regular_file(task.preprocessor->spec)) {
            try {
                PreprocessorSpec::from_json(read_file(task.preprocessor->spec));
            } catch (const std::exception& e) {
                err("preprocessor.spec: " + std::string(e.what()));
            }
        }
    }

    const SamplerTaskConfig& s = task.sampler;
    try {
        s.fanouts.validate();
    } catch (const ConfigError& e) {
        err("sampler.fanouts: " + std::string(e.what()));
    }
    if (s.fanouts.hops() != task.model.depth) {
        err("sampler.fanouts/model.depth: fanout length " + std::to_string(s.fanouts.hops()) +
            " must equal model depth " + std::to_string(task.model.depth));
    }
    if (s.kind == SampleKind::kLinkPrediction && s.n_pos < 1) err("sampler.n_pos: must be >= 1");
    if (s.supervision) {
        check_path("sampler.supervision.events", s.supervision->events);
        if (s.supervision->policy.window_end < s.supervision->policy.window_begin) {
            err("sampler.supervision: window_end precedes window_begin");
        }
        if (s.supervision->policy.positive_kinds.empty()) {
            err("sampler.supervision.positive_kinds: at least one kind is required");
        }
        if (s.kind != SampleKind::kLinkPrediction) err("sampler.supervision: only valid for link prediction");
    }
    if (s.kind == SampleKind::kNodeClassification) {
        if (s.labels.empty()) {
            err("sampler.labels: node classification needs a label table");
        } else {
            check_path("sampler.labels", s.labels);
        }
    }
    if (s.kind == SampleKind::kRooted) err("sampler.kind: rooted samples carry no supervision and cannot be trained on");
    if (schema) {
        if (!s.anchor_type.empty() && schema->node_type_index(s.anchor_type) < 0) {
            err("sampler.anchor_type: unknown node type '" + s.anchor_type + "'");
        }
        for (const auto& et : s.positive_edge_types) {
            if (schema->edge_type_index(et) < 0) err("sampler.positive_edge_types: unknown edge type '" + et.key() + "'");
        }
        for (const auto& [key, _] : s.fanouts.per_edge_type) {
            try {
                if (schema->edge_type_index(parse_edge_key(key)) < 0) {
                    err("sampler.fanouts_by_edge_type: unknown edge type '" + key + "'");
                }
            } catch (const ConfigError& e) {
                err("sampler.fanouts_by_edge_type: " + std::string(e.what()));
            }
        }
        if (!task.inference.node_type.empty() && schema->node_type_index(task.inference.node_type) < 0) {
            err("inference.node_type: unknown node type '" + task.inference.node_type + "'");
        }
        if (task.model.input_dim == 0 && !schema->node_types.empty()) {
            const uint32_t d = schema->node_types.front().feature_dim;
            for (const auto& nt : schema->node_types) {
                if (nt.feature_dim != d) {
                    err("graph.schema: node types must share one feature dimension for training");
                    break;
                }
            }
        }
    }

    try {
        task.split.validate();
    } catch (const ConfigError& e) {
        err("split: " + std::string(e.what()));
    }
    const bool link = s.kind == SampleKind::kLinkPrediction;
    switch (task.split.strategy) {
        case SplitStrategy::kTransductiveLink:
            if (!link) err("split.strategy: transductive-link needs link-prediction samples");
            if (s.supervision) err("split.strategy: supervised samples need user-defined-labels");
            break;
        case SplitStrategy::kUserDefinedLabels:
            if (!s.supervision) err("split.strategy: user-defined-labels needs sampler.supervision");
            break;
        case SplitStrategy::kInductiveNode:
            break;
    }
    if (task.backend == Backend::kRealtime && task.split.strategy == SplitStrategy::kUserDefinedLabels) {
        err("backend: the realtime backend supports transductive-link and inductive-node splits");
    }

    ModelConfig m = task.model;
    if (m.input_dim == 0) m.input_dim = 1;  // filled from the data at train time
    try {
        m.validate();
    } catch (const ConfigError& e) {
        err("model: " + std::string(e.what()));
    }
    if (s.kind == SampleKind::kNodeClassification && m.weights.classification <= 0.0) {
        err("model.loss_weights.classification: must be positive for node classification");
    }
    try {
        task.training.validate();
    } catch (const ConfigError& e) {
        err("training: " + std::string(e.what()));
    }
    if (task.inference.eval_candidates < 2) err("inference.eval_candidates: must be >= 2");

    const std::pair<const char*, uint64_t> counts[] = {
        {"threads.data_preprocessor", resource.preprocess_threads},
        {"threads.subgraph_sampler", resource.sample_threads},
        {"threads.trainer", resource.train_threads},
        {"threads.inferencer", resource.infer_threads},
        {"memory_mb", resource.memory_mb},
        {"realtime.partitions", resource.partitions},
    };
    for (const auto& [field, v] : counts) {
        if (v < 1) err(std::string("resource.") + field + ": must be >= 1");
    }
    if (resource.transport != "inprocess" && resource.transport != "tcp") {
        err("resource.realtime.transport: must be 'inprocess' or 'tcp', got '" + resource.transport + "'");
    }
    if (!resource.endpoints.empty() && resource.endpoints.size() != resource.partitions) {
        err("resource.realtime.endpoints: " + std::to_string(resource.endpoints.size()) + " endpoints for " +
            std::to_string(resource.partitions) + " partitions");
    }
    return errors;
}

FrozenConfig populate_config(const TaskConfig& task, const ResourceConfig& resource, const std::string& root,
                             const std::string& run) {
    if (!run_name_ok(run)) throw ConfigError("run name '" + run + "' must use only [A-Za-z0-9._-]");
    FrozenConfig f;
    f.task = task;
    f.task.run_name = run;
    f.resource = resource;
    f.root = root;
    f.run = run;
    auto put = [&](const std::string& component, const std::string& asset) {
        f.paths[component + "." + asset.substr(0, asset.find('.'))] = join(f.component_dir(component), asset);
    };
    put("data_preprocessor", "graph.v1");
    if (task.preprocessor) put("data_preprocessor", "transforms.v1");
    if (task.backend == Backend::kTabular) {
        put("subgraph_sampler", "samples.v1");
        for (const char* b : {"train.v1", "val.v1", "test.v1"}) put("split_generator", b);
    } else {
        put("graph_server", "partitions.json");
        for (const char* b : {"train.v1", "val.v1", "test.v1"}) put("graph_server", b);
    }
    put("trainer", "model.v1");
    put("trainer", "train_log.jsonl");
    put("inferencer", "embeddings.v1");
    put("inferencer", "eval.json");
    f.paths["report"] = join(join(root, run), "run_report.json");

    uint64_t h = fnv1a64("giglite-inputs v1");
    for (const auto& p : declared_inputs(task)) {
        h = fnv1a64(p, h);
        h = fnv1a64(std::string_view("\0", 1), h);
        h = fnv1a64(read_file(p), h);
    }
    f.input_hash = hex64(h);
    return f;
}

}  // namespace giglite
