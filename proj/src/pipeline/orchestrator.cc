#include "giglite/pipeline/orchestrator.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "giglite/artifact.h"
#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/inference.h"
#include "giglite/preprocess.h"
#include "giglite/realtime/dist_sampler.h"
#include "giglite/realtime/partition.h"
#include "giglite/realtime/service.h"
#include "giglite/realtime/transport.h"
#include "giglite/sample_io.h"
#include "giglite/table_io.h"
#include "giglite/text_format.h"
#include "giglite/trainer.h"

namespace giglite {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "giglite-manifest v1";

std::string hex64(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const char* bucket_key(Bucket b) { return bucket_name(b); }

/// What a component reads, how it is configured and what it writes.
struct ComponentPlan {
    std::vector<std::string> inputs;
    json config;
    std::vector<std::string> outputs;
};

std::string split_dir_component(const TaskConfig& t) {
    return t.backend == Backend::kTabular ? "split_generator" : "graph_server";
}

json sampler_json(const TaskConfig& t) { return t.to_json().at("sampler"); }

ComponentPlan plan_for(const FrozenConfig& f, const std::string& name) {
    const TaskConfig& t = f.task;
    const json task = t.to_json();
    const std::string graph = f.path("data_preprocessor.graph");
    ComponentPlan p;
    if (name == "data_preprocessor") {
        for (const auto& in : declared_inputs(t)) {
            const bool side_input = (t.sampler.supervision && in == t.sampler.supervision->events) ||
                                    (!t.sampler.labels.empty() && in == t.sampler.labels);
            if (!side_input) p.inputs.push_back(in);
        }
        p.config = json::object();
        if (task.contains("graph")) p.config["graph"] = task["graph"];
        if (task.contains("preprocessor")) p.config["preprocessor"] = task["preprocessor"];
        p.outputs = {graph};
        if (t.preprocessor) p.outputs.push_back(f.path("data_preprocessor.transforms"));
    } else if (name == "subgraph_sampler") {
        p.inputs = {graph};
        if (t.sampler.supervision) p.inputs.push_back(t.sampler.supervision->events);
        if (!t.sampler.labels.empty()) p.inputs.push_back(t.sampler.labels);
        p.config = {{"sampler", sampler_json(t)}, {"seed", t.seed}};
        p.outputs = {f.path("subgraph_sampler.samples")};
    } else if (name == "split_generator") {
        p.inputs = {graph, f.path("subgraph_sampler.samples")};
        if (t.sampler.supervision) p.inputs.push_back(t.sampler.supervision->events);
        p.config = {{"split", task["split"]}, {"sampler", sampler_json(t)}};
        for (Bucket b : kBuckets) p.outputs.push_back(f.path(std::string("split_generator.") + bucket_key(b)));
    } else if (name == "graph_server") {
        p.inputs = {graph};
        p.config = {{"sampler", sampler_json(t)},
                    {"split", task["split"]},
                    {"seed", t.seed},
                    {"partitions", f.resource.partitions}};
        p.outputs = {f.path("graph_server.partitions")};
        for (Bucket b : kBuckets) p.outputs.push_back(f.path(std::string("graph_server.") + bucket_key(b)));
    } else if (name == "trainer") {
        const std::string dir = split_dir_component(t);
        p.inputs = {f.path(dir + ".train"), f.path(dir + ".val")};
        p.config = {{"model", task["model"]}, {"training", task["training"]}};
        p.outputs = {f.path("trainer.model"), f.path("trainer.train_log")};
    } else if (name == "inferencer") {
        const std::string dir = split_dir_component(t);
        p.inputs = {f.path("trainer.model"), graph, f.path(dir + ".test")};
        p.config = {{"inference", task["inference"]},
                    {"fanouts", task["sampler"]["fanouts"]},
                    {"direction", task["sampler"]["direction"]},
                    {"seed", t.seed},
                    {"backend", task["backend"]},
                    {"partitions", f.resource.partitions},
                    {"run", f.run}};
        p.outputs = {f.path("inferencer.embeddings"), f.path("inferencer.eval")};
    } else {
        throw ConfigError("unknown component '" + name + "'");
    }
    return p;
}

std::string plan_hash(const std::string& name, const ComponentPlan& p) {
    uint64_t h = fnv1a64(kManifestFormat);
    h = fnv1a64(name, h);
    h = fnv1a64(p.config.dump(), h);
    for (const auto& in : p.inputs) {
        h = fnv1a64(std::string_view("\0", 1), h);
        h = fnv1a64(in, h);
        h = fnv1a64(path_hash(in), h);
    }
    return hex64(h);
}

std::string manifest_path(const FrozenConfig& f, const std::string& name) {
    return (fs::path(f.component_dir(name)) / "manifest.json").generic_string();
}

bool manifest_matches(const FrozenConfig& f, const std::string& name, const std::string& input_hash,
                      const ComponentPlan& p, std::map<std::string, uint64_t>* counts) {
    const std::string mp = manifest_path(f, name);
    if (!fs::exists(mp)) return false;
    json m;
    try {
        m = json::parse(read_file(mp));
    } catch (const std::exception&) {
        return false;
    }
    if (m.value("format", std::string()) != kManifestFormat || m.value("input_hash", std::string()) != input_hash) {
        return false;
    }
    const json outputs = m.value("outputs", json::object());
    for (const auto& out : p.outputs) {
        if (!outputs.contains(out) || !fs::exists(out)) return false;
        if (path_hash(out) != outputs[out].get<std::string>()) return false;
    }
    if (counts) *counts = m.value("counts", std::map<std::string, uint64_t>{});
    return true;
}

void write_manifest(const FrozenConfig& f, const std::string& name, const std::string& input_hash,
                    const ComponentPlan& p, const std::map<std::string, uint64_t>& counts) {
    json outputs = json::object();
    for (const auto& out : p.outputs) outputs[out] = path_hash(out);
    const json m = {{"format", kManifestFormat},
                    {"component", name},
                    {"input_hash", input_hash},
                    {"outputs", outputs},
                    {"counts", counts}};
    write_file(manifest_path(f, name), m.dump(2) + "\n");
}

// ---- shared loading -------------------------------------------------------------

struct SupervisionContext {
    SupervisionBuildResult built;
    Graph message_graph;
};

SupervisionContext load_supervision(const TaskConfig& t, const Graph& g) {
    const auto& sup = *t.sampler.supervision;
    const std::vector<Event> events = read_event_table_file(sup.events);
    SupervisionContext ctx{build_supervision_set(events, g, sup.policy), Graph{}};
    ctx.message_graph = ctx.built.set.disjoint_from_messages ? remove_supervision_edges(g, ctx.built.set) : g;
    return ctx;
}

LinkSampleConfig link_config(const TaskConfig& t) {
    LinkSampleConfig c;
    c.fanouts = t.sampler.fanouts;
    c.n_pos = t.sampler.n_pos;
    c.n_hard_neg = t.sampler.n_hard_neg;
    c.sampler = {t.seed, t.sampler.direction};
    c.positive_edge_types = t.sampler.positive_edge_types;
    c.anchor_type = t.sampler.anchor_type;
    return c;
}

/// Partition services for one mask (or the full graph), reachable through a transport.
class ServingCluster {
  public:
    ServingCluster(const Graph& g, const FrozenConfig& f, std::optional<SplitMask> mask)
        : plan_{f.resource.partitions, f.task.seed, f.task.sampler.direction == Direction::kIn} {
        for (auto& part : partition_graph(g, plan_)) {
            services_.push_back(std::make_unique<NeighborService>(std::move(part), mask));
        }
        std::vector<const NeighborService*> raw;
        for (const auto& s : services_) raw.push_back(s.get());
        if (f.resource.transport == "tcp") {
            std::vector<Endpoint> endpoints;
            for (const auto& s : services_) {
                servers_.push_back(std::make_unique<TcpServer>(*s));
                endpoints.push_back({"127.0.0.1", servers_.back()->port()});
            }
            transport_ = std::make_unique<TcpTransport>(endpoints, f.resource.retries);
        } else {
            transport_ = std::make_unique<InProcessTransport>(raw);
        }
        source_ = std::make_unique<RemoteNeighborSource>(g.schema(), plan_, *transport_);
    }

    RemoteNeighborSource& source() { return *source_; }
    const PartitionPlan& plan() const { return plan_; }
    const std::vector<std::unique_ptr<NeighborService>>& services() const { return services_; }

  private:
    PartitionPlan plan_;
    std::vector<std::unique_ptr<NeighborService>> services_;
    std::vector<std::unique_ptr<TcpServer>> servers_;
    std::unique_ptr<Transport> transport_;
    std::unique_ptr<RemoteNeighborSource> source_;
};

std::vector<TrainingSample> to_rooted(std::vector<RootedSubgraph> subgraphs) {
    std::vector<TrainingSample> out;
    out.reserve(subgraphs.size());
    for (auto& sg : subgraphs) {
        TrainingSample s;
        s.kind = SampleKind::kRooted;
        s.anchor = std::move(sg);
        out.push_back(std::move(s));
    }
    return out;
}

// ---- components -------------------------------------------------------------------

using Counts = std::map<std::string, uint64_t>;

Counts run_preprocessor(const FrozenConfig& f) {
    const TaskConfig& t = f.task;
    const std::string out = f.path("data_preprocessor.graph");
    Counts counts;
    if (t.graph) {
        const GraphSchema schema = GraphSchema::from_json(read_file(t.graph->schema));
        const Graph g = load_graph(t.graph->node_tables, t.graph->edge_tables, schema);
        save_graph(g, out);
        counts["nodes"] = g.num_nodes();
        counts["edges"] = g.num_edges();
        return counts;
    }
    const auto& pre = *t.preprocessor;
    const PreprocessorSpec spec = PreprocessorSpec::from_json(read_file(pre.spec));
    std::map<std::string, RawTable> nodes, edges;
    for (const auto& [type, path] : pre.node_tables) nodes.emplace(type, read_raw_table_file(path));
    for (const auto& [key, path] : pre.edge_tables) edges.emplace(key, read_raw_table_file(path));
    const PreprocessResult r = preprocess_graph(nodes, edges, spec);
    save_graph(r.graph, out);
    json fits = {{"format", "giglite-transforms v1"}, {"nodes", json::object()}, {"edges", json::object()}};
    for (const auto& [type, fit] : r.node_fits) fits["nodes"][type] = fit.serialize();
    for (const auto& [key, fit] : r.edge_fits) fits["edges"][key] = fit.serialize();
    write_file(f.path("data_preprocessor.transforms"), fits.dump(2) + "\n");
    counts["nodes"] = r.graph.num_nodes();
    counts["edges"] = r.graph.num_edges();
    counts["filtered_nodes"] = r.filtered_nodes;
    counts["filtered_edges"] = r.filtered_edges;
    counts["dropped_dangling_edges"] = r.dropped_dangling_edges;
    return counts;
}

Counts run_sampler(const FrozenConfig& f) {
    const TaskConfig& t = f.task;
    const Graph g = load_graph_dir(f.path("data_preprocessor.graph"));
    Counts counts;
    std::vector<TrainingSample> samples;
    if (t.sampler.kind == SampleKind::kNodeClassification) {
        const auto labels = read_label_table_file(t.sampler.labels);
        samples = generate_node_samples(g, labels, t.sampler.fanouts, {t.seed, t.sampler.direction});
        counts["labels"] = labels.size();
    } else if (t.sampler.supervision) {
        SupervisionContext sup = load_supervision(t, g);
        LinkSampleResult r = generate_link_samples(sup.message_graph, &sup.built.set, link_config(t));
        samples = std::move(r.samples);
        counts["skipped_no_positive"] = r.skipped_no_positive;
        counts["supervision_positive"] = sup.built.set.count(Polarity::kPositive);
        counts["supervision_negative"] = sup.built.set.count(Polarity::kNegative);
        counts["dropped_missing_endpoint"] = sup.built.dropped_missing_endpoint;
    } else {
        LinkSampleResult r = generate_link_samples(g, nullptr, link_config(t));
        samples = std::move(r.samples);
        counts["skipped_no_positive"] = r.skipped_no_positive;
    }
    write_sample_file(f.path("subgraph_sampler.samples"), t.sampler.kind, samples);
    counts["samples"] = samples.size();
    return counts;
}

void write_split_outputs(const FrozenConfig& f, const std::string& component, SampleKind kind,
                         const SplitDatasets& d, Counts& counts) {
    for (Bucket b : kBuckets) {
        write_sample_file(f.path(component + "." + bucket_key(b)), kind, d[b]);
        counts[std::string(bucket_key(b)) + "_samples"] = d[b].size();
        counts[std::string(bucket_key(b)) + "_dropped_empty"] = d.dropped_empty[static_cast<size_t>(b)];
    }
    counts["removed_positives"] = d.removed_positives;
    counts["removed_edges"] = d.removed_edges;
}

SplitDatasets split_samples(const TaskConfig& t, const Graph& g, const std::vector<TrainingSample>& samples) {
    switch (t.split.strategy) {
        case SplitStrategy::kTransductiveLink:
            return apply_transductive_link_split(samples, t.split);
        case SplitStrategy::kInductiveNode:
            return apply_inductive_node_split(g, samples, t.split);
        case SplitStrategy::kUserDefinedLabels: {
            const SupervisionContext sup = load_supervision(t, g);
            return apply_user_defined_split(sup.built.set, sup.message_graph, samples, t.split);
        }
    }
    throw ConfigError("unknown split strategy");
}

Counts run_split(const FrozenConfig& f) {
    const TaskConfig& t = f.task;
    const Graph g = load_graph_dir(f.path("data_preprocessor.graph"));
    const SampleFile file = read_sample_file(f.path("subgraph_sampler.samples"));
    Counts counts;
    write_split_outputs(f, "split_generator", file.kind, split_samples(t, g, file.samples), counts);
    return counts;
}

Counts run_graph_server(const FrozenConfig& f) {
    const TaskConfig& t = f.task;
    const Graph g = load_graph_dir(f.path("data_preprocessor.graph"));
    Counts counts;
    json summary = {{"format", "giglite-partitions v1"},
                    {"partitions", f.resource.partitions},
                    {"seed", t.seed},
                    {"collocate_on_dst", t.sampler.direction == Direction::kIn},
                    {"transport", f.resource.transport}};
    json parts = json::array();
    {
        ServingCluster full(g, f, std::nullopt);
        for (const auto& s : full.services()) {
            const PartitionData& d = s->data();
            parts.push_back({{"id", d.id}, {"nodes", d.nodes.size()}, {"rows", d.rows.size()}, {"edges", d.edges.size()}});
        }
    }
    summary["parts"] = parts;
    write_file(f.path("graph_server.partitions"), summary.dump(2) + "\n");

    SplitDatasets out;
    uint64_t requests = 0;
    for (Bucket b : kBuckets) {
        ServingCluster cluster(g, f, SplitMask{t.split, b});
        std::vector<TrainingSample> samples;
        if (t.sampler.kind == SampleKind::kNodeClassification) {
            const auto labels = read_label_table_file(t.sampler.labels);
            std::vector<NodeRef> roots;
            for (const auto& [n, _] : labels) {
                if (g.contains(n)) roots.push_back(n);
            }
            auto sgs = sample_k_hop_batch(cluster.source(), roots, t.sampler.fanouts, {t.seed, t.sampler.direction});
            for (size_t i = 0; i < roots.size(); ++i) {
                TrainingSample s;
                s.kind = SampleKind::kNodeClassification;
                s.anchor = std::move(sgs[i]);
                s.label = labels.at(roots[i]);
                samples.push_back(std::move(s));
            }
        } else {
            samples = generate_link_samples(g, cluster.source(), nullptr, link_config(t)).samples;
        }
        requests += cluster.source().requests_sent();
        SplitDatasets d = split_samples(t, g, samples);
        const size_t i = static_cast<size_t>(b);
        out.buckets[i] = std::move(d.buckets[i]);
        out.dropped_empty[i] = d.dropped_empty[i];
        out.removed_positives += d.removed_positives;
        out.removed_edges += d.removed_edges;
    }
    write_split_outputs(f, "graph_server", t.sampler.kind, out, counts);
    counts["partitions"] = f.resource.partitions;
    counts["requests"] = requests;
    return counts;
}

Counts run_trainer(const FrozenConfig& f) {
    const TaskConfig& t = f.task;
    const std::string dir = split_dir_component(t);
    const SampleFile train_file = read_sample_file(f.path(dir + ".train"));
    const SampleFile val_file = read_sample_file(f.path(dir + ".val"));
    ModelConfig mc = t.model;
    if (mc.input_dim == 0 && !train_file.samples.empty()) {
        mc.input_dim = static_cast<uint32_t>(train_file.samples.front().anchor.nodes.front().features.size());
    }
    std::ostringstream log;
    const TrainResult r = train(train_file.samples, val_file.samples, mc, t.training, &log);
    save_artifact(f.path("trainer.model"), r.artifact);
    write_file(f.path("trainer.train_log"), log.str());
    return {{"train_samples", train_file.samples.size()},
            {"val_samples", val_file.samples.size()},
            {"steps", r.artifact.metadata.steps},
            {"validations", r.validations},
            {"early_stopped", r.early_stopped ? 1u : 0u}};
}

json ranking_json(const RankingMetrics& m) {
    json j = {{"mrr", m.mrr}, {"random_mrr", m.random_baseline}, {"pairs", m.count}};
    for (const auto& [k, h] : m.hits) j["hits@" + std::to_string(k)] = h;
    return j;
}

Counts run_inferencer(const FrozenConfig& f) {
    const TaskConfig& t = f.task;
    const ModelArtifact artifact = load_artifact(f.path("trainer.model"));
    const Graph g = load_graph_dir(f.path("data_preprocessor.graph"));
    std::vector<TrainingSample> rooted;
    if (t.backend == Backend::kTabular) {
        rooted = generate_rooted_samples(g, t.sampler.fanouts, {t.seed, t.sampler.direction}, t.inference.node_type);
    } else {
        ServingCluster cluster(g, f, std::nullopt);
        const std::vector<NodeRef> roots = all_nodes(g, t.inference.node_type);
        rooted = to_rooted(distributed_sample_k_hop(cluster.source(), roots, t.sampler.fanouts, t.seed,
                                                    t.sampler.direction));
    }
    InferOptions opts;
    opts.threads = f.resource.infer_threads;
    opts.sample_hops = t.sampler.fanouts.hops();
    opts.run_id = f.run;
    const EmbeddingTable table = infer(artifact, rooted, opts);
    write_file(f.path("inferencer.embeddings"), serialize_embedding_table(table));

    const std::string dir = split_dir_component(t);
    const SampleFile test = read_sample_file(f.path(dir + ".test"));
    json eval = {{"format", "giglite-eval v1"}, {"model", table.model_id}, {"test_samples", test.samples.size()}};
    if (test.kind == SampleKind::kLinkPrediction) {
        eval["ranking"] = ranking_json(evaluate_model(artifact.config, artifact.params, test.samples,
                                                      t.inference.eval_candidates,
                                                      SeedDerivation::derive(t.seed, "test-eval", 0, 0)));
    } else if (test.kind == SampleKind::kNodeClassification && artifact.config.num_classes > 0) {
        eval["accuracy"] = classification_accuracy(artifact.config, artifact.params, test.samples);
    }
    write_file(f.path("inferencer.eval"), eval.dump(2) + "\n");
    return {{"embeddings", table.size()}, {"test_samples", test.samples.size()}};
}

Counts dispatch(const FrozenConfig& f, const std::string& name) {
    if (name == "data_preprocessor") return run_preprocessor(f);
    if (name == "subgraph_sampler") return run_sampler(f);
    if (name == "split_generator") return run_split(f);
    if (name == "graph_server") return run_graph_server(f);
    if (name == "trainer") return run_trainer(f);
    if (name == "inferencer") return run_inferencer(f);
    throw ConfigError("unknown component '" + name + "'");
}

}  // namespace

size_t RunReport::executed() const {
    size_t n = 0;
    for (const auto& c : components) n += c.status == "ran" || c.status == "failed";
    return n;
}

json RunReport::to_json() const {
    json comps = json::array();
    for (const auto& c : components) {
        json j = {{"name", c.name}, {"status", c.status}, {"seconds", c.seconds}, {"counts", c.counts}};
        if (!c.error.empty()) j["error"] = c.error;
        comps.push_back(j);
    }
    json j = {{"format", "giglite-report v1"}, {"run", run}, {"ok", ok}, {"components", comps}};
    if (!failed_component.empty()) j["failed_component"] = failed_component;
    return j;
}

std::vector<std::string> pipeline_components(const TaskConfig& task) {
    if (task.backend == Backend::kRealtime) return {"data_preprocessor", "graph_server", "trainer", "inferencer"};
    return {"data_preprocessor", "subgraph_sampler", "split_generator", "trainer", "inferencer"};
}

std::string path_hash(const std::string& path) {
    if (!fs::is_directory(path)) return hex64(fnv1a64(read_file(path)));
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), path).generic_string());
    }
    std::sort(files.begin(), files.end());
    uint64_t h = fnv1a64("dir");
    for (const auto& rel : files) {
        h = fnv1a64(rel, h);
        h = fnv1a64(std::string_view("\0", 1), h);
        h = fnv1a64(read_file((fs::path(path) / rel).string()), h);
    }
    return hex64(h);
}

std::map<NodeRef, int64_t> read_label_table_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LookupError("cannot open label table '" + path + "'");
    std::map<NodeRef, int64_t> labels;
    std::string line;
    size_t lineno = 0;
    while (read_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() != 3) throw ParseError("label row needs node_type, node_id, label", lineno);
        NodeRef n{std::string(fields[0]), parse_u64(fields[1])};
        if (!labels.emplace(n, parse_i64(fields[2])).second) {
            throw ParseError("duplicate label for " + to_string(n), lineno);
        }
    }
    return labels;
}

ComponentReport run_component(const FrozenConfig& frozen, const std::string& component, bool force) {
    const auto names = pipeline_components(frozen.task);
    if (std::find(names.begin(), names.end(), component) == names.end()) {
        throw ConfigError("component '" + component + "' is not part of this pipeline");
    }
    ComponentReport report;
    report.name = component;
    const auto start = std::chrono::steady_clock::now();
    const ComponentPlan plan = plan_for(frozen, component);
    const std::string input_hash = plan_hash(component, plan);
    if (!force && manifest_matches(frozen, component, input_hash, plan, &report.counts)) {
        report.status = "skipped";
    } else {
        // A stale manifest must not vouch for half-written outputs.
        fs::remove(manifest_path(frozen, component));
        report.counts = dispatch(frozen, component);
        write_manifest(frozen, component, input_hash, plan, report.counts);
        report.status = "ran";
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

RunReport run_pipeline(const FrozenConfig& frozen, const RunOptions& options) {
    const auto names = pipeline_components(frozen.task);
    size_t force_from = names.size();
    if (options.from_component) {
        auto it = std::find(names.begin(), names.end(), *options.from_component);
        if (it == names.end()) throw ConfigError("unknown component '" + *options.from_component + "'");
        force_from = static_cast<size_t>(it - names.begin());
    }
    RunReport report;
    report.run = frozen.run;
    for (size_t i = 0; i < names.size(); ++i) {
        ComponentReport c;
        c.name = names[i];
        if (!report.ok) {
            report.components.push_back(c);
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        try {
            c = run_component(frozen, names[i], i >= force_from);
        } catch (const std::exception& e) {
            c.status = "failed";
            c.error = e.what();
            c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            report.ok = false;
            report.failed_component = names[i];
        }
        if (options.log) {
            *options.log << c.name << ": " << c.status;
            if (!c.error.empty()) *options.log << " (" << c.error << ")";
            *options.log << '\n';
        }
        report.components.push_back(std::move(c));
    }
    write_file(frozen.path("report"), report.to_json().dump(2) + "\n");
    return report;
}

}  // namespace giglite
