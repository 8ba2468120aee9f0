#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "giglite/error.h"
#include "giglite/inference.h"
#include "giglite/pipeline/config.h"
#include "giglite/pipeline/orchestrator.h"
#include "giglite/realtime/partition.h"
#include "giglite/realtime/service.h"
#include "giglite/realtime/transport.h"
#include "giglite/sample_io.h"
#include "giglite/table_io.h"
#include "giglite/text_format.h"

using namespace giglite;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int report_errors(const std::vector<std::string>& errors) {
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    return errors.empty() ? kExitOk : kExitValidation;
}

NodeRef parse_node(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("node must be type:id, got '" + text + "'");
    return {text.substr(0, colon), parse_u64(text.substr(colon + 1))};
}

std::optional<Bucket> parse_bucket(const std::string& s) {
    if (s == "all") return std::nullopt;
    for (Bucket b : kBuckets) {
        if (s == bucket_name(b)) return b;
    }
    throw ConfigError("bucket must be train, val, test or all");
}

int print_component(const ComponentReport& r) {
    json j = {{"name", r.name}, {"status", r.status}, {"seconds", r.seconds}, {"counts", r.counts}};
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"giglite: graph learning pipeline"};
    app.require_subcommand(1);

    std::string task_path, resource_path, frozen_path, root = "runs", run, out_path, from;
    bool force = false;

    auto* validate = app.add_subcommand("validate", "Check task and resource configs, or a frozen config");
    validate->add_option("--task", task_path);
    validate->add_option("--resource", resource_path);
    validate->add_option("--config", frozen_path, "Frozen config");

    auto* populate = app.add_subcommand("populate", "Write a frozen config with pinned asset paths");
    populate->add_option("--task", task_path)->required();
    populate->add_option("--resource", resource_path);
    populate->add_option("--root", root, "Output root")->capture_default_str();
    populate->add_option("--run", run, "Run name (defaults to the task's run_name)");
    populate->add_option("-o,--out", out_path, "Frozen config path (stdout when absent)");

    auto* runcmd = app.add_subcommand("run", "Run the whole pipeline");
    runcmd->add_option("--config", frozen_path)->required();
    runcmd->add_option("--from", from, "Force this component and everything after it");

    struct ComponentCmd {
        const char* cli;
        const char* component;
        const char* help;
    };
    const ComponentCmd component_cmds[] = {
        {"preprocess", "data_preprocessor", "Build the featurized graph"},
        {"sample", "subgraph_sampler", "Write tabularized training samples"},
        {"split", "split_generator", "Split samples into train, val and test"},
        {"train", "trainer", "Train and save the model artifact"},
        {"infer", "inferencer", "Embed nodes and score the test split"},
    };
    std::vector<std::pair<CLI::App*, std::string>> component_apps;
    for (const auto& c : component_cmds) {
        auto* sub = app.add_subcommand(c.cli, c.help);
        sub->add_option("--config", frozen_path)->required();
        sub->add_flag("--force", force, "Run even when the manifest matches");
        component_apps.emplace_back(sub, c.component);
    }

    uint32_t partition = 0;
    uint16_t port = 0;
    std::string host = "127.0.0.1", bucket = "all";
    auto* serve = app.add_subcommand("serve", "Serve one graph partition over TCP");
    serve->add_option("--config", frozen_path)->required();
    serve->add_option("--partition", partition)->required();
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port, "0 picks a free port")->capture_default_str();
    serve->add_option("--bucket", bucket, "Split mask: train, val, test or all")->capture_default_str();

    std::string query, metric = "dot";
    size_t k = 10;
    uint32_t n_seeds = 0;
    auto* evaluate = app.add_subcommand("evaluate", "Print test metrics or retrieve neighbors for a node");
    evaluate->add_option("--config", frozen_path)->required();
    evaluate->add_option("--query", query, "type:id to retrieve for");
    evaluate->add_option("-k", k)->capture_default_str();
    evaluate->add_option("--metric", metric, "dot or cosine")->capture_default_str();
    evaluate->add_option("--seeds", n_seeds, "Query with this many sampled neighbors instead of the node itself");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            if (!frozen_path.empty()) {
                const FrozenConfig f = load_frozen_config(frozen_path);
                return report_errors(validate_config(f.task, f.resource));
            }
            if (task_path.empty()) throw ConfigError("validate needs --task or --config");
            const ResourceConfig resource = resource_path.empty() ? ResourceConfig{} : load_resource_config(resource_path);
            const int rc = report_errors(validate_config(load_task_config(task_path), resource));
            if (rc == kExitOk) std::cout << "ok\n";
            return rc;
        }
        if (populate->parsed()) {
            const TaskConfig task = load_task_config(task_path);
            const ResourceConfig resource = resource_path.empty() ? ResourceConfig{} : load_resource_config(resource_path);
            if (const int rc = report_errors(validate_config(task, resource)); rc != kExitOk) return rc;
            const FrozenConfig f = populate_config(task, resource, root, run.empty() ? task.run_name : run);
            const std::string text = serialize_frozen(f);
            if (out_path.empty()) {
                std::cout << text;
            } else {
                write_file(out_path, text);
            }
            return kExitOk;
        }

        const FrozenConfig frozen = load_frozen_config(frozen_path);
        if (const int rc = report_errors(validate_config(frozen.task, frozen.resource)); rc != kExitOk) return rc;

        if (runcmd->parsed()) {
            RunOptions opts;
            if (!from.empty()) opts.from_component = from;
            opts.log = &std::cerr;
            const RunReport report = run_pipeline(frozen, opts);
            std::cout << report.to_json().dump(2) << '\n';
            return report.ok ? kExitOk : kExitRuntime;
        }
        for (const auto& [sub, component] : component_apps) {
            if (sub->parsed()) return print_component(run_component(frozen, component, force));
        }
        if (serve->parsed()) {
            const Graph g = load_graph_dir(frozen.path("data_preprocessor.graph"));
            const PartitionPlan plan{frozen.resource.partitions, frozen.task.seed,
                                     frozen.task.sampler.direction == Direction::kIn};
            if (partition >= plan.n_partitions) throw ConfigError("partition out of range");
            auto parts = partition_graph(g, plan);
            std::optional<SplitMask> mask;
            if (auto b = parse_bucket(bucket)) mask = SplitMask{frozen.task.split, *b};
            const NeighborService service(std::move(parts[partition]), mask);
            TcpServer server(service, host, port);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving partition " << partition << " on " << host << ':' << server.port() << std::endl;
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
            return kExitOk;
        }
        if (evaluate->parsed()) {
            if (query.empty()) {
                std::cout << read_file(frozen.path("inferencer.eval"));
                return kExitOk;
            }
            const EmbeddingTable table = read_embedding_table_file(frozen.path("inferencer.embeddings"));
            const NodeRef node = parse_node(query);
            const Metric m = parse_metric(metric);
            json out = {{"query", to_string(node)}, {"metric", metric_name(m)}};
            std::vector<Scored> results;
            if (n_seeds > 0) {
                const Graph g = load_graph_dir(frozen.path("data_preprocessor.graph"));
                const EbrResult r = stochastic_ebr_retrieve(table, g, node, k, n_seeds, frozen.task.seed, m);
                results = r.results;
                out["fell_back"] = r.fell_back;
                json seeds = json::array();
                for (const auto& s : r.seeds) seeds.push_back(to_string(s));
                out["seeds"] = seeds;
            } else {
                const auto row = table.find(node);
                if (!row) throw LookupError("no embedding for " + to_string(node));
                results = knn_retrieve(table, table.row(*row), k, m);
            }
            json list = json::array();
            for (const auto& s : results) list.push_back({{"node", to_string(s.node)}, {"score", s.score}});
            out["results"] = list;
            std::cout << out.dump(2) << '\n';
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
