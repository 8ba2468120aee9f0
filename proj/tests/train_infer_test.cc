#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "giglite/artifact.h"
#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/inference.h"
#include "giglite/sampler.h"
#include "giglite/synthetic.h"
#include "giglite/trainer.h"
#include "support.h"

using namespace giglite;
using namespace giglite::testing;

namespace {

struct Data {
    Graph graph;
    std::vector<TrainingSample> train, val;
};

Data small_data(uint64_t seed = 1) {
    SbmConfig sc;
    sc.nodes = 60;
    sc.blocks = 3;
    sc.p_in = 0.2;
    sc.p_out = 0.01;
    sc.seed = seed;
    Data d{make_sbm(sc).graph, {}, {}};
    LinkSampleConfig lc;
    lc.fanouts.per_hop = {4, 4};
    lc.n_pos = 1;
    lc.sampler.global_seed = seed;
    auto samples = generate_link_samples(d.graph, nullptr, lc).samples;
    for (size_t i = 0; i < samples.size(); ++i) (i % 5 == 0 ? d.val : d.train).push_back(samples[i]);
    return d;
}

ModelConfig model_for(const Data& d) {
    ModelConfig c;
    c.input_dim = static_cast<uint32_t>(d.train.front().anchor.nodes.front().features.size());
    c.hidden_dim = 8;
    c.output_dim = 4;
    return c;
}

TrainConfig quick_train(uint32_t patience = 2) {
    TrainConfig t;
    t.batch_size = 8;
    t.max_epochs = 2;
    t.val_every = 3;
    t.patience = patience;
    t.learning_rate = 0.01;
    t.seed = 5;
    t.eval_candidates = 8;
    return t;
}

EmbeddingTable table_of(std::vector<std::pair<uint64_t, std::vector<float>>> rows) {
    EmbeddingTable t;
    t.dim = static_cast<uint32_t>(rows.front().second.size());
    std::sort(rows.begin(), rows.end());
    for (auto& [id, v] : rows) {
        t.nodes.push_back(N(id));
        t.values.insert(t.values.end(), v.begin(), v.end());
    }
    return t;
}

std::vector<Scored> scan_oracle(const EmbeddingTable& t, std::span<const float> q, size_t k, Metric m) {
    std::vector<Scored> all;
    for (size_t i = 0; i < t.size(); ++i) {
        double dot = 0, nq = 0, nr = 0;
        for (uint32_t j = 0; j < t.dim; ++j) {
            dot += static_cast<double>(q[j]) * t.row(i)[j];
            nq += static_cast<double>(q[j]) * q[j];
            nr += static_cast<double>(t.row(i)[j]) * t.row(i)[j];
        }
        const double s = m == Metric::kDot ? dot : dot / std::max(std::sqrt(nq) * std::sqrt(nr), 1e-12);
        all.push_back({t.nodes[i], s});
    }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node.id < b.node.id;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

Graph friends_graph(uint32_t n, const std::vector<std::pair<uint64_t, uint64_t>>& edges) {
    GraphBuilder b(single_type_schema(false));
    const float f = 0;
    for (uint32_t i = 0; i < n; ++i) b.add_node("n", i, std::span(&f, 1));
    for (auto [s, d] : edges) b.add_edge(size_t{0}, s, d);
    return std::move(b).build();
}

}  // namespace

TEST(Trainer, ZeroPatienceValidatesOnce) {
    const Data d = small_data();
    TrainConfig t = quick_train(0);
    t.val_every = 1;
    const TrainResult r = train(d.train, d.val, model_for(d), t);
    EXPECT_EQ(r.validations, 1u);
    EXPECT_TRUE(r.early_stopped);
    EXPECT_EQ(r.artifact.metadata.best_step, 1u);
}

TEST(Trainer, SameSeedSameLogAndArtifact) {
    const Data d = small_data();
    const TrainResult a = train(d.train, d.val, model_for(d), quick_train());
    const TrainResult b = train(d.train, d.val, model_for(d), quick_train());
    EXPECT_EQ(a.log, b.log);
    EXPECT_EQ(serialize_artifact(a.artifact), serialize_artifact(b.artifact));
    TrainConfig other = quick_train();
    other.seed = 6;
    EXPECT_NE(train(d.train, d.val, model_for(d), other).log, a.log);
}

TEST(Trainer, LogIsJsonLines) {
    const Data d = small_data();
    std::ostringstream sink;
    const TrainResult r = train(d.train, d.val, model_for(d), quick_train(), &sink);
    std::istringstream in(sink.str());
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
        EXPECT_EQ(line, r.log[n++]);
        EXPECT_NO_THROW((void)nlohmann::json::parse(line));
    }
    EXPECT_EQ(n, r.log.size());
    EXPECT_EQ(nlohmann::json::parse(r.log.back())["event"], "done");
}

TEST(Trainer, EmptyDatasetsRejected) {
    const Data d = small_data();
    EXPECT_THROW(train({}, d.val, model_for(d), quick_train()), ConfigError);
    EXPECT_THROW(train(d.train, {}, model_for(d), quick_train()), ConfigError);
}

TEST(Trainer, NonFiniteLossAborts) {
    Data d = small_data();
    for (auto& s : d.train) s.anchor.nodes.front().features[0] = std::numeric_limits<float>::quiet_NaN();
    try {
        train(d.train, d.val, model_for(d), quick_train());
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite loss"), std::string::npos);
    }
}

TEST(Trainer, ClassificationTrains) {
    SbmConfig sc;
    sc.nodes = 60;
    sc.blocks = 3;
    sc.p_in = 0.2;
    sc.p_out = 0.01;
    const SbmGraph sbm = make_sbm(sc);
    std::map<NodeRef, int64_t> labels;
    for (const auto& n : all_nodes(sbm.graph)) labels[n] = sbm.block[n.id];
    FanoutSpec f;
    f.per_hop = {4, 4};
    const auto samples = generate_node_samples(sbm.graph, labels, f, {});
    ModelConfig c;
    c.input_dim = 3;
    c.hidden_dim = 8;
    c.output_dim = 4;
    c.num_classes = 3;
    c.weights = {0, 0, 0, 0, 1};
    TrainConfig t = quick_train(10);
    t.max_epochs = 20;
    const TrainResult r = train(samples, samples, c, t);
    EXPECT_EQ(r.artifact.metadata.best_metric_name, "accuracy");
    EXPECT_GT(classification_accuracy(c, r.artifact.params, samples), 0.9);
}

TEST(Artifact, RoundTripAndTruncation) {
    const Data d = small_data();
    const TrainResult r = train(d.train, d.val, model_for(d), quick_train());
    const std::string bytes = serialize_artifact(r.artifact);
    EXPECT_EQ(bytes.rfind("giglite-model v1\n", 0), 0u);
    const ModelArtifact back = deserialize_artifact(bytes);
    EXPECT_EQ(serialize_artifact(back), bytes);
    EXPECT_EQ(artifact_id(back), artifact_id(r.artifact));
    EXPECT_THROW(deserialize_artifact(bytes.substr(0, bytes.size() - 3)), ParseError);
    EXPECT_THROW(deserialize_artifact("giglite-model v2\n"), ParseError);
    TempDir dir;
    save_artifact(dir.file("m.bin"), r.artifact);
    EXPECT_EQ(serialize_artifact(load_artifact(dir.file("m.bin"))), bytes);
}

TEST(Infer, DeterministicAndOrderIndependent) {
    const Data d = small_data();
    const TrainResult r = train(d.train, d.val, model_for(d), quick_train());
    FanoutSpec f;
    f.per_hop = {4, 4};
    auto rooted = generate_rooted_samples(d.graph, f, {});
    const std::string a = serialize_embedding_table(infer(r.artifact, rooted));
    EXPECT_EQ(serialize_embedding_table(infer(r.artifact, rooted)), a);
    std::reverse(rooted.begin(), rooted.end());
    InferOptions opts;
    opts.threads = 4;
    EXPECT_EQ(serialize_embedding_table(infer(r.artifact, rooted, opts)), a);
    // Duplicated roots collapse to one row each.
    auto doubled = rooted;
    doubled.insert(doubled.end(), rooted.begin(), rooted.end());
    EXPECT_EQ(infer(r.artifact, doubled).size(), d.graph.num_nodes());
}

TEST(Infer, DepthMismatchRejected) {
    const Data d = small_data();
    const TrainResult r = train(d.train, d.val, model_for(d), quick_train());
    InferOptions opts;
    opts.sample_hops = 3;
    EXPECT_THROW(infer(r.artifact, d.val, opts), ConfigError);
}

TEST(Infer, IsolatedRootEqualsForward) {
    ModelConfig c;
    c.input_dim = 2;
    c.hidden_dim = 4;
    c.output_dim = 3;
    const ModelArtifact art{c, init_params(c, 9), {}};
    TrainingSample s;
    s.kind = SampleKind::kRooted;
    s.anchor.root = N(4);
    s.anchor.nodes = {{N(4), 0, {0.5f, -1.0f}}};
    const EmbeddingTable t = infer(art, std::span(&s, 1));
    ASSERT_EQ(t.size(), 1u);
    const Mat<float> want = forward<float>(c, art.params, collate(std::span(&s, 1)));
    for (uint32_t j = 0; j < 3; ++j) EXPECT_EQ(t.row(0)[j], want(0, j));
}

TEST(Infer, EmbeddingTableRoundTrip) {
    EmbeddingTable t = table_of({{3, {1.5f, -2}}, {1, {0.1f, 1e-7f}}});
    t.model_id = "abc";
    t.run_id = "r1";
    const std::string text = serialize_embedding_table(t);
    EXPECT_EQ(text.rfind("# giglite-embeddings v1 dim=2 model=abc run=r1\n", 0), 0u);
    std::istringstream in(text);
    const EmbeddingTable back = read_embedding_table(in);
    EXPECT_EQ(back.values, t.values);
    EXPECT_EQ(serialize_embedding_table(back), text);
    std::istringstream bad("# giglite-embeddings v1 dim=2 model=a run=b\nn\t1\t0.5\n");
    EXPECT_THROW(read_embedding_table(bad), ParseError);
}

TEST(Knn, OrthogonalExample) {
    const EmbeddingTable t = table_of({{0, {1, 0}}, {1, {0, 1}}});
    const std::vector<float> q = {1, 0};
    EXPECT_EQ(knn_retrieve(t, q, 1), (std::vector<Scored>{{N(0), 1.0}}));
    EXPECT_EQ(knn_retrieve(t, q, 5).size(), 2u);
}

TEST(Knn, MatchesScanOracle) {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        SplitMix64 rng(seed);
        std::vector<std::pair<uint64_t, std::vector<float>>> rows;
        for (uint64_t i = 0; i < 100; ++i) {
            // Coarse values force score ties.
            rows.push_back({i, {static_cast<float>(rng.below(3)), static_cast<float>(rng.below(3)) - 1,
                                static_cast<float>(rng.normal())}});
        }
        const EmbeddingTable t = table_of(rows);
        const std::vector<float> q = {1, 1, 0};
        for (Metric m : {Metric::kDot, Metric::kCosine}) {
            const auto got = knn_retrieve(t, q, 17, m);
            const auto want = scan_oracle(t, q, 17, m);
            ASSERT_EQ(got.size(), want.size());
            for (size_t i = 0; i < got.size(); ++i) {
                EXPECT_EQ(got[i].node, want[i].node);
                EXPECT_NEAR(got[i].score, want[i].score, 1e-9);
            }
            EXPECT_EQ(knn_retrieve(t, q, 17, m), got);
        }
    }
}

TEST(Ebr, SingleFriendReducesToKnn) {
    const EmbeddingTable t = table_of({{0, {1, 0}}, {1, {0, 1}}, {2, {0.1f, 0.9f}}, {3, {0.9f, 0.1f}}, {4, {0.5f, 0.5f}}});
    const Graph g = friends_graph(5, {{0, 1}});
    const EbrResult r = stochastic_ebr_retrieve(t, g, N(0), 10, 1, 7);
    EXPECT_FALSE(r.fell_back);
    EXPECT_EQ(r.seeds, std::vector<NodeRef>{N(1)});
    std::vector<Scored> want;
    for (const auto& s : knn_retrieve(t, t.row(1), 10)) {
        if (s.node != N(0) && s.node != N(1)) want.push_back(s);
    }
    EXPECT_EQ(r.results, want);
}

TEST(Ebr, NoFriendsFallsBackToOwnEmbedding) {
    const EmbeddingTable t = table_of({{0, {1, 0}}, {1, {0, 1}}, {2, {0.7f, 0.1f}}});
    const EbrResult r = stochastic_ebr_retrieve(t, friends_graph(3, {}), N(0), 1, 2, 7);
    EXPECT_TRUE(r.fell_back);
    EXPECT_TRUE(r.seeds.empty());
    EXPECT_EQ(r.results, (std::vector<Scored>{{N(2), knn_retrieve(t, t.row(0), 3)[1].score}}));
}

TEST(Ebr, FriendsClusterBoundsCandidates) {
    SplitMix64 rng(3);
    std::vector<std::pair<uint64_t, std::vector<float>>> rows;
    for (uint64_t i = 0; i < 30; ++i) {
        std::vector<float> v(3, 0.0f);
        v[i % 3] = 1.0f;
        for (auto& x : v) x += static_cast<float>(0.05 * rng.normal());
        rows.push_back({i, v});
    }
    const EmbeddingTable t = table_of(rows);
    // User 0 sits in cluster 1 by friendship: friends 1, 4, 7.
    const Graph g = friends_graph(30, {{0, 1}, {0, 4}, {0, 7}});
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const EbrResult r = stochastic_ebr_retrieve(t, g, N(0), 6, 2, seed);
        EXPECT_EQ(r.seeds.size(), 2u);
        ASSERT_EQ(r.results.size(), 6u);
        for (const auto& s : r.results) {
            EXPECT_EQ(s.node.id % 3, 1u);
            EXPECT_NE(s.node.id, 1u);
            EXPECT_NE(s.node.id, 4u);
            EXPECT_NE(s.node.id, 7u);
        }
        for (size_t i = 1; i < r.results.size(); ++i) EXPECT_GE(r.results[i - 1].score, r.results[i].score);
    }
    EXPECT_EQ(stochastic_ebr_retrieve(t, g, N(0), 6, 3, 1).results, stochastic_ebr_retrieve(t, g, N(0), 6, 3, 2).results);
}
