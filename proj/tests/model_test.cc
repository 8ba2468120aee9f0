#include <gtest/gtest.h>

#include <cmath>

#include "giglite/batch.h"
#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/losses.h"
#include "giglite/metrics.h"
#include "giglite/model.h"
#include "giglite/sampler.h"
#include "giglite/synthetic.h"
#include "giglite/trainer.h"
#include "support.h"

using namespace giglite;
using namespace giglite::testing;

namespace {

using Rows = std::vector<std::vector<double>>;

BatchGraph tiny_batch(const std::vector<float>& feats, uint32_t dim, std::vector<std::pair<uint32_t, uint32_t>> edges) {
    BatchGraph b;
    b.feature_dim = dim;
    b.features = feats;
    for (size_t i = 0; i < feats.size() / dim; ++i) {
        b.nodes.push_back(N(i));
        b.hops.push_back(0);
    }
    b.edges = std::move(edges);
    b.sample_offsets = {0, static_cast<uint32_t>(b.nodes.size())};
    index_incoming(b);
    return b;
}

ModelConfig scalar_config(LayerType t) {
    ModelConfig c;
    c.layer = t;
    c.depth = 1;
    c.input_dim = 1;
    c.output_dim = 1;
    c.hidden_dim = 1;
    c.heads = 1;
    c.activation = Activation::kIdentity;
    c.weights.reconstruction = 0;
    c.weights.whitening = 0;
    return c;
}

ParamSet<double> set_all(ParamSet<float> p, double v) {
    ParamSet<double> d = p.cast<double>();
    for (auto& t : d.tensors) t.setConstant(v);
    return d;
}

ParamSet<double> random_params(const ModelConfig& c, uint64_t seed) {
    ParamSet<double> p = init_params(c, seed).cast<double>();
    SplitMix64 rng(seed + 100);
    for (auto& t : p.tensors) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += 0.3 * rng.normal();
    }
    return p;
}

double act(Activation a, double x) {
    switch (a) {
        case Activation::kRelu: return std::max(0.0, x);
        case Activation::kTanh: return std::tanh(x);
        case Activation::kIdentity: return x;
    }
    return x;
}

std::vector<std::vector<uint32_t>> incoming(const BatchGraph& b) {
    std::vector<std::vector<uint32_t>> in(b.num_nodes());
    for (const auto& [s, d] : b.edges) in[d].push_back(s);
    return in;
}

Rows input_rows(const BatchGraph& b) {
    Rows h(b.num_nodes(), std::vector<double>(b.feature_dim));
    for (size_t v = 0; v < b.num_nodes(); ++v) {
        for (uint32_t j = 0; j < b.feature_dim; ++j) h[v][j] = b.features[v * b.feature_dim + j];
    }
    return h;
}

std::string pn(uint32_t l, const char* what) { return "layer" + std::to_string(l) + "." + what; }

// Unvectorized reference: one node, one output unit at a time.
Rows naive_sage(const ModelConfig& c, const ParamSet<double>& p, const BatchGraph& b) {
    const auto in = incoming(b);
    Rows h = input_rows(b);
    for (uint32_t l = 0; l < c.depth; ++l) {
        const Mat<double>& ws = p[pn(l, "w_self")];
        const Mat<double>& wn = p[pn(l, "w_neigh")];
        const Mat<double>& bias = p[pn(l, "bias")];
        Rows next(h.size(), std::vector<double>(static_cast<size_t>(ws.cols())));
        for (size_t v = 0; v < h.size(); ++v) {
            std::vector<double> mean(h[v].size(), 0.0);
            for (uint32_t u : in[v]) {
                for (size_t j = 0; j < mean.size(); ++j) mean[j] += h[u][j] / static_cast<double>(in[v].size());
            }
            for (Eigen::Index o = 0; o < ws.cols(); ++o) {
                double s = bias(0, o);
                for (size_t j = 0; j < mean.size(); ++j) s += h[v][j] * ws(j, o) + mean[j] * wn(j, o);
                next[v][o] = l + 1 == c.depth ? s : act(c.activation, s);
            }
        }
        h = std::move(next);
    }
    return h;
}

Rows naive_gat(const ModelConfig& c, const ParamSet<double>& p, const BatchGraph& b) {
    const auto in = incoming(b);
    Rows h = input_rows(b);
    for (uint32_t l = 0; l < c.depth; ++l) {
        const bool last = l + 1 == c.depth;
        const Mat<double>& w = p[pn(l, "w")];
        const Mat<double>& as = p[pn(l, "att_src")];
        const Mat<double>& ad = p[pn(l, "att_dst")];
        const Mat<double>& bias = p[pn(l, "bias")];
        const size_t f = static_cast<size_t>(as.cols());
        Rows z(h.size(), std::vector<double>(static_cast<size_t>(w.cols()), 0.0));
        for (size_t v = 0; v < h.size(); ++v) {
            for (Eigen::Index o = 0; o < w.cols(); ++o) {
                for (size_t j = 0; j < h[v].size(); ++j) z[v][o] += h[v][j] * w(j, o);
            }
        }
        const size_t out_dim = static_cast<size_t>(bias.cols());
        Rows next(h.size(), std::vector<double>(out_dim, 0.0));
        for (size_t v = 0; v < h.size(); ++v) {
            std::vector<uint32_t> hood{static_cast<uint32_t>(v)};
            hood.insert(hood.end(), in[v].begin(), in[v].end());
            for (uint32_t k = 0; k < c.heads; ++k) {
                auto score = [&](size_t node, const Mat<double>& a) {
                    double s = 0;
                    for (size_t j = 0; j < f; ++j) s += z[node][k * f + j] * a(k, j);
                    return s;
                };
                std::vector<double> e;
                for (uint32_t u : hood) {
                    const double x = score(v, ad) + score(u, as);
                    e.push_back(x > 0 ? x : c.leaky_slope * x);
                }
                double total = 0;
                for (double x : e) total += std::exp(x);
                for (size_t i = 0; i < hood.size(); ++i) {
                    const double alpha = std::exp(e[i]) / total;
                    for (size_t j = 0; j < f; ++j) {
                        const double m = alpha * z[hood[i]][k * f + j];
                        if (last) {
                            next[v][j] += m / c.heads;
                        } else {
                            next[v][k * f + j] += m;
                        }
                    }
                }
            }
            for (size_t o = 0; o < out_dim; ++o) {
                next[v][o] += bias(0, static_cast<Eigen::Index>(o));
                if (!last) next[v][o] = act(c.activation, next[v][o]);
            }
        }
        h = std::move(next);
    }
    return h;
}

std::vector<TrainingSample> random_link_samples(uint64_t seed, uint32_t n_hard_neg = 0) {
    const Graph g = make_random_graph(seed, {20, 0.2, 2, 1});
    LinkSampleConfig c;
    c.fanouts.per_hop = {3, 3};
    c.n_pos = 1;
    c.sampler.global_seed = seed;
    auto samples = generate_link_samples(g, nullptr, c).samples;
    if (n_hard_neg > 0) {
        // Borrow another sample's anchor subgraph as the hard negative.
        for (size_t i = 0; i < samples.size(); ++i) {
            samples[i].hard_negatives.push_back(samples[(i + 1) % samples.size()].anchor);
        }
    }
    if (samples.size() > 6) samples.resize(6);
    return samples;
}

ModelConfig small_config(LayerType t, uint32_t depth) {
    ModelConfig c;
    c.layer = t;
    c.depth = depth;
    c.input_dim = 2;
    c.hidden_dim = 4;
    c.output_dim = 3;
    c.heads = 2;
    c.activation = Activation::kTanh;
    return c;
}

void expect_rows_near(const Mat<double>& got, const Rows& want, double tol) {
    ASSERT_EQ(static_cast<size_t>(got.rows()), want.size());
    for (size_t i = 0; i < want.size(); ++i) {
        ASSERT_EQ(static_cast<size_t>(got.cols()), want[i].size());
        for (size_t j = 0; j < want[i].size(); ++j) EXPECT_NEAR(got(i, j), want[i][j], tol);
    }
}

GradCheckResult check_objective(const ModelConfig& c, const BatchGraph& b, uint64_t seed) {
    ParamSet<double> params = random_params(c, seed);
    auto f = [&](std::span<const double> x, std::vector<double>* grad) {
        unflatten(x, params);
        ParamSet<double> g = params.zeros_like();
        const ObjectiveTerms t = batch_objective<double>(c, params, b, grad ? &g : nullptr);
        if (grad) *grad = flatten(g);
        return t.total;
    };
    return gradient_check(f, flatten(params));
}

Mat<double> random_mat(Eigen::Index r, Eigen::Index c, uint64_t seed) {
    SplitMix64 rng(seed);
    Mat<double> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

// Checks a loss gradient with respect to one matrix argument.
template <typename F>
double loss_gradcheck(Mat<double> x, F loss) {
    auto f = [&](std::span<const double> v, std::vector<double>* grad) {
        Mat<double> m = Eigen::Map<const Mat<double>>(v.data(), x.rows(), x.cols());
        Mat<double> g;
        const double value = loss(m, grad ? &g : nullptr);
        if (grad) grad->assign(g.data(), g.data() + g.size());
        return value;
    };
    return gradient_check(f, std::vector<double>(x.data(), x.data() + x.size())).max_rel_error;
}

}  // namespace

TEST(Sage, NeighborMeanExample) {
    const ModelConfig c = scalar_config(LayerType::kSage);
    const BatchGraph b = tiny_batch({1, 3, 1}, 1, {{1, 0}});
    const Mat<double> out = forward<double>(c, set_all(init_params(c, 0), 0), b);
    ParamSet<double> p = set_all(init_params(c, 0), 1.0);
    p["layer0.bias"].setZero();
    const Mat<double> y = forward<double>(c, p, b);
    EXPECT_DOUBLE_EQ(y(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(y(2, 0), 1.0);
    EXPECT_DOUBLE_EQ(out(0, 0), 0.0);
}

TEST(Sage, MatchesNaiveLoop) {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        const ModelConfig c = small_config(LayerType::kSage, 2);
        const BatchGraph b = collate(random_link_samples(seed));
        const ParamSet<double> p = random_params(c, seed);
        expect_rows_near(forward<double>(c, p, b), naive_sage(c, p, b), 1e-12);
    }
}

TEST(Sage, ParameterShapeMismatch) {
    const ModelConfig c = small_config(LayerType::kSage, 2);
    ParamSet<double> p = random_params(c, 1);
    p["layer1.w_self"] = Mat<double>::Zero(3, 3);
    EXPECT_THROW(forward<double>(c, p, collate(random_link_samples(1))), ConfigError);
}

TEST(Gat, ZeroAttentionIsUniform) {
    ModelConfig c = scalar_config(LayerType::kGat);
    ParamSet<double> p = set_all(init_params(c, 0), 0.0);
    p["layer0.w"].setConstant(2.0);
    const BatchGraph b = tiny_batch({1, 3, 5}, 1, {{1, 0}, {2, 0}});
    const Mat<double> y = forward<double>(c, p, b);
    EXPECT_DOUBLE_EQ(y(0, 0), 2.0 * (1 + 3 + 5) / 3.0);
}

TEST(Gat, LoneNeighborhoodGetsFullWeight) {
    const ModelConfig c = scalar_config(LayerType::kGat);
    for (double a : {-3.0, 0.0, 7.5}) {
        ParamSet<double> p = set_all(init_params(c, 0), a);
        p["layer0.w"].setConstant(1.5);
        p["layer0.bias"].setZero();
        ForwardCache<double> cache;
        const Mat<double> y = forward<double>(c, p, tiny_batch({2}, 1, {}), &cache);
        EXPECT_DOUBLE_EQ(cache.layers[0].alpha[0], 1.0);
        EXPECT_DOUBLE_EQ(y(0, 0), 3.0);
    }
}

TEST(Gat, MatchesNaiveLoop) {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        const ModelConfig c = small_config(LayerType::kGat, 2);
        const BatchGraph b = collate(random_link_samples(seed));
        const ParamSet<double> p = random_params(c, seed);
        expect_rows_near(forward<double>(c, p, b), naive_gat(c, p, b), 1e-6);
    }
}

TEST(Model, InitIsDeterministic) {
    const ModelConfig c = small_config(LayerType::kGat, 2);
    const auto a = init_params(c, 3), b = init_params(c, 3), d = init_params(c, 4);
    for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.tensors[i], b.tensors[i]);
    EXPECT_NE(a["layer0.w"], d["layer0.w"]);
}

TEST(Model, ConfigJsonRoundTrip) {
    ModelConfig c = small_config(LayerType::kGat, 3);
    c.num_classes = 4;
    c.weights.classification = 1;
    EXPECT_EQ(ModelConfig::from_json(c.to_json()).to_json(), c.to_json());
    c.heads = 3;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Collate, OffsetsAndSlots) {
    const auto samples = random_link_samples(2, 1);
    const BatchGraph b = collate(samples);
    ASSERT_EQ(b.samples.size(), samples.size());
    ASSERT_EQ(b.sample_offsets.size(), samples.size() + 1);
    for (size_t i = 0; i < samples.size(); ++i) {
        const size_t expected = samples[i].anchor.nodes.size() + samples[i].positives[0].nodes.size() +
                                samples[i].hard_negatives[0].nodes.size();
        EXPECT_EQ(b.sample_offsets[i + 1] - b.sample_offsets[i], expected);
        EXPECT_EQ(b.nodes[b.samples[i].anchor], samples[i].anchor.root);
        EXPECT_EQ(b.nodes[b.samples[i].positives[0]], samples[i].positives[0].root);
        EXPECT_EQ(b.nodes[b.samples[i].negatives[0]], samples[i].hard_negatives[0].root);
        for (const auto& [s, d] : b.edges) {
            const bool s_in = s >= b.sample_offsets[i] && s < b.sample_offsets[i + 1];
            const bool d_in = d >= b.sample_offsets[i] && d < b.sample_offsets[i + 1];
            EXPECT_EQ(s_in, d_in);
        }
    }
}

TEST(Collate, MixedKindsRejected) {
    auto samples = random_link_samples(3);
    samples[1].kind = SampleKind::kNodeClassification;
    EXPECT_THROW(collate(samples), ConfigError);
}

TEST(Collate, BatchLossEqualsMeanOfSampleLosses) {
    ModelConfig c = small_config(LayerType::kSage, 2);
    c.weights = {1.0, 0.0, 0.0, 0.0, 0.0};
    const auto samples = random_link_samples(1, 1);
    ASSERT_GT(samples.size(), 1u);
    const ParamSet<double> p = random_params(c, 1);
    double sum = 0;
    for (const auto& s : samples) sum += batch_objective<double>(c, p, collate(std::span(&s, 1))).total;
    EXPECT_NEAR(batch_objective<double>(c, p, collate(samples)).total, sum / samples.size(), 1e-6);
}

TEST(Losses, MarginExamples) {
    auto one = [](double v) { return Mat<double>::Constant(1, 1, v); };
    // With unit vectors, dot products equal the chosen similarities.
    EXPECT_DOUBLE_EQ(margin_loss<double>(one(1), one(0.9), one(0.2), 0.5), 0.0);
    EXPECT_NEAR(margin_loss<double>(one(1), one(0.3), one(0.4), 0.5), 0.6, 1e-15);
    const Mat<double> a = random_mat(4, 3, 1), p = random_mat(4, 3, 2);
    EXPECT_NEAR(margin_loss<double>(a, p, p, 0.7), 0.7, 1e-15);
}

TEST(Losses, RetrievalExamples) {
    Mat<double> a(1, 1), cands(3, 1);
    a << 1;
    cands << 2, 0, 0;
    EXPECT_NEAR(retrieval_loss<double>(a, cands, 1.0), -std::log(std::exp(2.0) / (std::exp(2.0) + 2)), 1e-12);
    EXPECT_NEAR(retrieval_loss<double>(a, cands, 1.0), 0.23954, 1e-5);
    const Mat<double> zeros = Mat<double>::Zero(5, 3);
    EXPECT_NEAR(retrieval_loss<double>(zeros, zeros, 0.1), std::log(5.0), 1e-12);
    EXPECT_LT(retrieval_loss<double>(a, cands, 1e-3), 1e-12);
}

TEST(Losses, ReconstructionExamples) {
    const Mat<double> e = random_mat(4, 2, 3);
    const Mat<double> w = random_mat(2, 3, 4), b = random_mat(1, 3, 5);
    Mat<double> feats = e * w;
    feats.rowwise() += b.row(0);
    EXPECT_NEAR(feature_reconstruction_loss<double>(e, feats, w, b), 0.0, 1e-20);
    EXPECT_DOUBLE_EQ(feature_reconstruction_loss<double>(e, Mat<double>::Ones(4, 3), Mat<double>::Zero(2, 3),
                                                         Mat<double>::Zero(1, 3)),
                     1.0);
    const Mat<double> target = random_mat(4, 3, 6);
    double sse = 0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) {
            double pred = b(0, j);
            for (int k = 0; k < 2; ++k) pred += e(i, k) * w(k, j);
            sse += (pred - target(i, j)) * (pred - target(i, j));
        }
    }
    EXPECT_NEAR(feature_reconstruction_loss<double>(e, target, w, b), sse / 12, 1e-12);
}

TEST(Losses, WhiteningExamples) {
    Mat<double> white(4, 2);
    white << 1, 1, 1, -1, -1, 1, -1, -1;
    EXPECT_NEAR(whitening_decorrelation_loss<double>(white, 0.3), 0.0, 1e-8);
    Mat<double> dup(4, 2);
    dup << 1, 1, 2, 2, 3, 3, 5, 5;
    EXPECT_NEAR(whitening_decorrelation_loss<double>(dup, 0.3), 2 * 0.3, 1e-8);
}

TEST(Losses, WhiteningMatchesDenseArithmetic) {
    const Mat<double> x = random_mat(7, 4, 8);
    const double lambda = 0.05, eps = 1e-9;
    Mat<double> z = x;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double mean = z.col(j).mean();
        const double var = (z.col(j).array() - mean).square().mean();
        z.col(j) = (z.col(j).array() - mean) / std::sqrt(var + eps);
    }
    const Mat<double> corr = z.transpose() * z / static_cast<double>(z.rows());
    double want = 0;
    for (Eigen::Index i = 0; i < corr.rows(); ++i) {
        for (Eigen::Index j = 0; j < corr.cols(); ++j) {
            want += i == j ? (1 - corr(i, j)) * (1 - corr(i, j)) : lambda * corr(i, j) * corr(i, j);
        }
    }
    EXPECT_NEAR(whitening_decorrelation_loss<double>(x, lambda), want, 1e-9);
}

TEST(Losses, ClassificationUniform) {
    const Mat<double> e = random_mat(3, 2, 1);
    EXPECT_NEAR(classification_loss<double>(e, {0, 1, 3}, Mat<double>::Zero(2, 4), Mat<double>::Zero(1, 4)),
                std::log(4.0), 1e-12);
}

TEST(GradCheck, LinearMse) {
    const Mat<double> e = random_mat(5, 3, 1), feats = random_mat(5, 2, 2), b = random_mat(1, 2, 3);
    const double err = loss_gradcheck(random_mat(3, 2, 4), [&](const Mat<double>& w, Mat<double>* g) {
        return feature_reconstruction_loss<double>(e, feats, w, b, nullptr, g);
    });
    EXPECT_LT(err, 1e-7);
}

TEST(GradCheck, EachLossInput) {
    const Mat<double> p = random_mat(4, 3, 11), n = random_mat(4, 3, 12), cands = random_mat(6, 3, 13);
    EXPECT_LT(loss_gradcheck(random_mat(4, 3, 10),
                             [&](const Mat<double>& a, Mat<double>* g) {
                                 return margin_loss<double>(a, p, n, 2.0, g);
                             }),
              1e-6);
    EXPECT_LT(loss_gradcheck(random_mat(4, 3, 14),
                             [&](const Mat<double>& a, Mat<double>* g) {
                                 return retrieval_loss<double>(a, cands, 0.5, g);
                             }),
              1e-6);
    EXPECT_LT(loss_gradcheck(random_mat(8, 3, 15),
                             [&](const Mat<double>& z, Mat<double>* g) {
                                 return whitening_decorrelation_loss<double>(z, 0.2, g);
                             }),
              1e-6);
    EXPECT_LT(loss_gradcheck(random_mat(4, 3, 16),
                             [&](const Mat<double>& e, Mat<double>* g) {
                                 return classification_loss<double>(e, {0, 2, 1, 1}, random_mat(3, 3, 17),
                                                                    random_mat(1, 3, 18), g);
                             }),
              1e-6);
}

TEST(GradCheck, SageMarginOnSmallGraph) {
    ModelConfig c = small_config(LayerType::kSage, 2);
    c.weights = {1.0, 0.0, 0.0, 0.0, 0.0};
    c.margin = 5.0;
    EXPECT_LT(check_objective(c, collate(random_link_samples(5, 1)), 5).max_rel_error, 1e-4);
}

TEST(GradCheck, GatFullObjective) {
    ModelConfig c = small_config(LayerType::kGat, 2);
    c.weights = {1.0, 1.0, 0.1, 0.1, 0.0};
    c.margin = 5.0;
    c.normalize_output = true;
    EXPECT_LT(check_objective(c, collate(random_link_samples(6, 1)), 6).max_rel_error, 1e-4);
}

TEST(GradCheck, SageFullObjectiveWithReluAndClassifier) {
    const Graph g = make_random_graph(7, {20, 0.2, 2, 1});
    std::map<NodeRef, int64_t> labels;
    for (const auto& n : all_nodes(g)) {
        if (n.type == "a") labels[n] = static_cast<int64_t>(n.id % 3);
    }
    FanoutSpec f;
    f.per_hop = {3, 3};
    auto samples = generate_node_samples(g, labels, f, {});
    samples.resize(std::min<size_t>(samples.size(), 6));
    ModelConfig c = small_config(LayerType::kSage, 2);
    c.num_classes = 3;
    c.weights = {0.0, 0.0, 0.1, 0.0, 1.0};
    EXPECT_LT(check_objective(c, collate(samples), 7).max_rel_error, 1e-4);
}

TEST(Metrics, RankExample) {
    const std::vector<uint64_t> ranks = {1, 2, 4};
    const RankingMetrics m = metrics_from_ranks(ranks);
    EXPECT_NEAR(m.mrr, 0.58333, 1e-5);
    EXPECT_NEAR(m.hits.at(1), 1.0 / 3, 1e-12);
    EXPECT_DOUBLE_EQ(metrics_from_ranks(std::vector<uint64_t>{1, 1, 1}).mrr, 1.0);
}

TEST(Metrics, TiesBreakByIdAscending) {
    const std::vector<double> scores = {0.5, 0.9, 0.5, 0.5};
    const std::vector<uint64_t> ids = {7, 1, 3, 9};
    EXPECT_EQ(rank_of(scores, 0, ids), 3u);
    EXPECT_EQ(rank_of(scores, 2, ids), 2u);
    EXPECT_EQ(rank_of(scores, 3, ids), 4u);
    EXPECT_EQ(rank_of(scores, 1, ids), 1u);
}

TEST(Metrics, RandomBaselineMonteCarlo) {
    double harmonic = 0;
    for (int i = 1; i <= 512; ++i) harmonic += 1.0 / i;
    EXPECT_NEAR(random_mrr_expected(512), harmonic / 512, 1e-15);
    EXPECT_NEAR(random_mrr_expected(512), 0.0133, 5e-5);
    EXPECT_NEAR(random_mrr_monte_carlo(512, 10000, 1), harmonic / 512, 0.002);
}
