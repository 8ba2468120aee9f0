#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "giglite/error.h"
#include "giglite/inference.h"
#include "giglite/pipeline/config.h"
#include "giglite/pipeline/orchestrator.h"
#include "giglite/sample_io.h"
#include "giglite/synthetic.h"
#include "giglite/table_io.h"
#include "giglite/text_format.h"
#include "support.h"

using namespace giglite;
using namespace giglite::testing;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    TempDir dir;
    TaskConfig task;
    ResourceConfig resource;

    explicit Fixture(Backend backend = Backend::kTabular) {
        SbmConfig sc;
        sc.nodes = 80;
        sc.blocks = 4;
        sc.p_in = 0.15;
        sc.p_out = 0.01;
        const Graph g = make_sbm(sc).graph;
        fs::create_directories(dir.file("in"));
        write_file(dir.file("in/schema.json"), g.schema().to_json());
        std::ofstream nodes(dir.file("in/nodes.tsv")), edges(dir.file("in/edges.tsv"));
        write_node_table(nodes, g);
        write_edge_table(edges, g);

        task.run_name = "exp1";
        task.seed = 3;
        task.graph = GraphInput{dir.file("in/schema.json"), {dir.file("in/nodes.tsv")}, {dir.file("in/edges.tsv")}};
        task.sampler.fanouts.per_hop = {4, 4};
        task.split.seed = 3;
        task.model.depth = 2;
        task.model.hidden_dim = 8;
        task.model.output_dim = 4;
        task.training.batch_size = 16;
        task.training.max_epochs = 1;
        task.training.val_every = 2;
        task.training.eval_candidates = 8;
        task.training.seed = 3;
        task.inference.eval_candidates = 16;
        task.backend = backend;
    }

    std::string root() const { return dir.file("out"); }
    FrozenConfig frozen(const std::string& run = "exp1") const { return populate_config(task, resource, root(), run); }
};

bool contains(const std::vector<std::string>& errors, const std::string& needle) {
    return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

std::map<std::string, std::string> snapshot(const std::string& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path().string());
    }
    return out;
}

std::map<std::string, std::string> statuses(const RunReport& r) {
    std::map<std::string, std::string> out;
    for (const auto& c : r.components) out[c.name] = c.status;
    return out;
}

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(GIGLITE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Validate, ValidConfigHasNoErrors) {
    const Fixture f;
    EXPECT_TRUE(validate_config(f.task, f.resource).empty());
}

TEST(Validate, MissingEdgeTableNamesFieldAndPath) {
    Fixture f;
    f.task.graph->edge_tables[0] = f.dir.file("nope.tsv");
    const auto errors = validate_config(f.task, f.resource);
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_NE(errors[0].find("graph.edge_tables[0]"), std::string::npos);
    EXPECT_NE(errors[0].find(f.dir.file("nope.tsv")), std::string::npos);
}

TEST(Validate, FanoutDepthMismatch) {
    Fixture f;
    f.task.sampler.fanouts.per_hop = {4, 4, 4};
    const auto errors = validate_config(f.task, f.resource);
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_TRUE(contains(errors, "fanout length 3 must equal model depth 2"));
}

TEST(Validate, CollectsEveryProblem) {
    Fixture f;
    f.task.split.train = 0.95;
    f.task.inference.node_type = "ghost";
    f.task.inference.eval_candidates = 1;
    f.resource.partitions = 0;
    f.resource.transport = "carrier-pigeon";
    const auto errors = validate_config(f.task, f.resource);
    EXPECT_GE(errors.size(), 5u);
    EXPECT_TRUE(contains(errors, "split"));
    EXPECT_TRUE(contains(errors, "inference.node_type"));
    EXPECT_TRUE(contains(errors, "inference.eval_candidates"));
    EXPECT_TRUE(contains(errors, "partitions"));
    EXPECT_TRUE(contains(errors, "transport"));
}

TEST(Validate, ExactlyOneInputSource) {
    Fixture f;
    f.task.graph.reset();
    EXPECT_FALSE(validate_config(f.task, f.resource).empty());
}

TEST(Config, TaskJsonRoundTrip) {
    const Fixture f;
    const auto j = f.task.to_json();
    EXPECT_EQ(TaskConfig::from_json(j).to_json(), j);
    EXPECT_EQ(ResourceConfig::from_json(f.resource.to_json()).to_json(), f.resource.to_json());
    auto bad = j;
    bad["format"] = "giglite-task v9";
    EXPECT_THROW(TaskConfig::from_json(bad), ConfigError);
}

TEST(Populate, LayoutLaw) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    EXPECT_EQ(fr.path("subgraph_sampler.samples"), f.root() + "/exp1/subgraph_sampler/samples.v1");
    EXPECT_EQ(fr.path("report"), f.root() + "/exp1/run_report.json");
    for (const auto& [key, p] : fr.paths) EXPECT_EQ(p.rfind(f.root() + "/exp1/", 0), 0u) << key;
    EXPECT_THROW((void)fr.path("nonexistent"), ConfigError);
}

TEST(Populate, DeterministicAndRunScoped) {
    const Fixture f;
    EXPECT_EQ(serialize_frozen(f.frozen()), serialize_frozen(f.frozen()));
    const FrozenConfig a = f.frozen("exp1"), b = f.frozen("exp2");
    std::set<std::string> pa, pb;
    for (const auto& [_, p] : a.paths) pa.insert(p);
    for (const auto& [_, p] : b.paths) pb.insert(p);
    std::vector<std::string> common;
    std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(), std::back_inserter(common));
    EXPECT_TRUE(common.empty());
    EXPECT_EQ(FrozenConfig::from_json(a.to_json()).to_json(), a.to_json());
}

TEST(Populate, InputHashTracksContent) {
    const Fixture f;
    const std::string before = f.frozen().input_hash;
    std::ofstream(f.dir.file("in/edges.tsv"), std::ios::app) << "";
    EXPECT_EQ(f.frozen().input_hash, before);
    std::ofstream(f.dir.file("in/edges.tsv"), std::ios::app) << "user\tfriend\tuser\t0\t1\n";
    EXPECT_NE(f.frozen().input_hash, before);
}

TEST(Pipeline, RerunSkipsEverythingAndKeepsBytes) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    const RunReport first = run_pipeline(fr);
    ASSERT_TRUE(first.ok) << first.failed_component;
    EXPECT_EQ(first.executed(), pipeline_components(f.task).size());
    const auto before = snapshot(f.root() + "/exp1");
    const RunReport second = run_pipeline(fr);
    EXPECT_TRUE(second.ok);
    EXPECT_EQ(second.executed(), 0u);
    for (const auto& [name, status] : statuses(second)) EXPECT_EQ(status, "skipped") << name;
    auto after = snapshot(f.root() + "/exp1");
    // Only the run report (which records timings and statuses) may change.
    after.erase("run_report.json");
    auto expected = before;
    expected.erase("run_report.json");
    EXPECT_EQ(after, expected);
}

TEST(Pipeline, FreshRunsGiveIdenticalEmbeddings) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    ASSERT_TRUE(run_pipeline(fr).ok);
    const std::string embeddings = read_file(fr.path("inferencer.embeddings"));
    const std::string test_split = read_file(fr.path("split_generator.test"));
    fs::remove_all(f.root());
    const RunReport again = run_pipeline(fr);
    ASSERT_TRUE(again.ok);
    EXPECT_EQ(again.executed(), pipeline_components(f.task).size());
    EXPECT_EQ(read_file(fr.path("inferencer.embeddings")), embeddings);
    EXPECT_EQ(read_file(fr.path("split_generator.test")), test_split);
    EXPECT_EQ(read_embedding_table_file(fr.path("inferencer.embeddings")).size(), 80u);
}

TEST(Pipeline, ResumeFromTrainerRunsTwoComponents) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    ASSERT_TRUE(run_pipeline(fr).ok);
    const std::string embeddings = read_file(fr.path("inferencer.embeddings"));
    fs::remove_all(fr.path("trainer.model"));
    RunOptions opts;
    opts.from_component = "trainer";
    const RunReport r = run_pipeline(fr, opts);
    ASSERT_TRUE(r.ok);
    EXPECT_EQ(r.executed(), 2u);
    EXPECT_EQ(statuses(r)["trainer"], "ran");
    EXPECT_EQ(statuses(r)["inferencer"], "ran");
    EXPECT_EQ(statuses(r)["split_generator"], "skipped");
    EXPECT_EQ(read_file(fr.path("inferencer.embeddings")), embeddings);
}

TEST(Pipeline, DamagedOutputIsRebuilt) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    ASSERT_TRUE(run_pipeline(fr).ok);
    const std::string samples = read_file(fr.path("subgraph_sampler.samples"));
    write_file(fr.path("subgraph_sampler.samples"), "corrupt");
    const RunReport r = run_pipeline(fr);
    ASSERT_TRUE(r.ok);
    EXPECT_EQ(statuses(r)["subgraph_sampler"], "ran");
    EXPECT_EQ(statuses(r)["data_preprocessor"], "skipped");
    EXPECT_EQ(read_file(fr.path("subgraph_sampler.samples")), samples);
}

TEST(Pipeline, WritesOnlyFrozenPaths) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    const auto inputs = snapshot(f.dir.file("in"));
    ASSERT_TRUE(run_pipeline(fr).ok);
    EXPECT_EQ(snapshot(f.dir.file("in")), inputs);
    std::vector<fs::path> allowed;
    for (const auto& [_, p] : fr.paths) allowed.emplace_back(p);
    for (const auto& c : pipeline_components(f.task)) allowed.push_back(fs::path(fr.component_dir(c)) / "manifest.json");
    for (const auto& e : fs::recursive_directory_iterator(f.dir.path())) {
        if (!e.is_regular_file()) continue;
        const fs::path p = e.path();
        if (p.string().rfind(f.dir.file("in"), 0) == 0) continue;
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const fs::path& a) {
            const auto rel = p.lexically_relative(a);
            return p == a || (!rel.empty() && *rel.begin() != "..");
        });
        EXPECT_TRUE(ok) << p;
    }
}

TEST(Pipeline, FailureStopsAndIsReported) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    write_file(f.dir.file("in/edges.tsv"), "user\tfriend\tuser\tnot-a-number\t1\n");
    const RunReport r = run_pipeline(fr);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.failed_component, "data_preprocessor");
    EXPECT_EQ(r.executed(), 1u);
    EXPECT_EQ(statuses(r)["trainer"], "not-attempted");
    EXPECT_FALSE(r.components[0].error.empty());
    const auto report = nlohmann::json::parse(read_file(fr.path("report")));
    EXPECT_EQ(report["ok"], false);
    EXPECT_EQ(report["failed_component"], "data_preprocessor");
}

TEST(Pipeline, TrainersShareSplitBytes) {
    const Fixture f;
    const FrozenConfig fr = f.frozen();
    ASSERT_TRUE(run_pipeline(fr).ok);
    const std::string train_bytes = read_file(fr.path("split_generator.train"));
    // A second trainer gets its own run directory but reads the first run's split.
    FrozenConfig other = fr;
    other.run = "exp1-alt";
    other.task.training.learning_rate = 0.05;
    other.paths["trainer.model"] = f.root() + "/exp1-alt/trainer/model.v1";
    other.paths["trainer.train_log"] = f.root() + "/exp1-alt/trainer/train_log.jsonl";
    const ComponentReport r = run_component(other, "trainer");
    EXPECT_EQ(r.status, "ran");
    EXPECT_EQ(read_file(fr.path("split_generator.train")), train_bytes);
    EXPECT_NE(path_hash(other.path("trainer.model")), path_hash(fr.path("trainer.model")));
    EXPECT_EQ(run_component(fr, "trainer").status, "skipped");
}

TEST(Pipeline, RealtimeBackendOverTcp) {
    Fixture f(Backend::kRealtime);
    f.resource.partitions = 2;
    f.resource.transport = "tcp";
    ASSERT_TRUE(validate_config(f.task, f.resource).empty());
    const FrozenConfig fr = f.frozen();
    const RunReport r = run_pipeline(fr);
    ASSERT_TRUE(r.ok) << r.failed_component << ": " << r.components.back().error;
    EXPECT_EQ(pipeline_components(f.task),
              (std::vector<std::string>{"data_preprocessor", "graph_server", "trainer", "inferencer"}));
    EXPECT_EQ(read_embedding_table_file(fr.path("inferencer.embeddings")).size(), 80u);
    // Same task in-process yields the same split datasets.
    Fixture g(Backend::kRealtime);
    g.resource.partitions = 3;
    const FrozenConfig gf = g.frozen();
    ASSERT_TRUE(run_pipeline(gf).ok);
    EXPECT_EQ(read_file(gf.path("graph_server.val")), read_file(fr.path("graph_server.val")));
}

TEST(PathHash, DirectoryHashCoversNamesAndContents) {
    TempDir d;
    fs::create_directories(d.file("x/sub"));
    write_file(d.file("x/a"), "1");
    write_file(d.file("x/sub/b"), "2");
    const std::string h = path_hash(d.file("x"));
    write_file(d.file("x/sub/b"), "3");
    EXPECT_NE(path_hash(d.file("x")), h);
    write_file(d.file("x/sub/b"), "2");
    EXPECT_EQ(path_hash(d.file("x")), h);
    fs::rename(d.file("x/a"), d.file("x/c"));
    EXPECT_NE(path_hash(d.file("x")), h);
}

TEST(Cli, ExitCodes) {
    Fixture f;
    write_file(f.dir.file("task.json"), f.task.to_json().dump(2));
    write_file(f.dir.file("resource.json"), f.resource.to_json().dump(2));
    const std::string task = f.dir.file("task.json"), res = f.dir.file("resource.json");
    EXPECT_EQ(run_cli("validate --task " + task + " --resource " + res), 0);
    EXPECT_EQ(run_cli("populate --task " + task + " --resource " + res + " --root " + f.root() + " --run cli -o " +
                      f.dir.file("frozen.json")),
              0);
    EXPECT_EQ(run_cli("preprocess --config " + f.dir.file("frozen.json")), 0);
    EXPECT_EQ(run_cli("run --config " + f.dir.file("frozen.json")), 0);
    EXPECT_EQ(run_cli("evaluate --config " + f.dir.file("frozen.json") + " --query user:3 -k 5"), 0);
    EXPECT_EQ(run_cli("evaluate --config " + f.dir.file("frozen.json") + " --query user:99999"), 2);

    auto bad = f.task;
    bad.sampler.fanouts.per_hop = {1, 2, 3};
    write_file(f.dir.file("bad.json"), bad.to_json().dump(2));
    EXPECT_EQ(run_cli("validate --task " + f.dir.file("bad.json") + " --resource " + res), 1);
    EXPECT_EQ(run_cli("run --config " + f.dir.file("missing.json")), 2);
}
