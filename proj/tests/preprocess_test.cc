#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/preprocess.h"

using namespace giglite;

namespace {

RawTable table_from(const std::string& text) {
    std::istringstream in(text);
    return read_raw_table(in);
}

TransformSpec spec_of(std::vector<ColumnDirective> d, std::vector<RowFilter> f = {}) {
    TransformSpec s;
    s.directives = std::move(d);
    s.filters = std::move(f);
    return s;
}

RawTable numeric_column(const std::vector<std::string>& cells) {
    std::string text = "node_type\tnode_id\tx\n";
    for (size_t i = 0; i < cells.size(); ++i) text += "n\t" + std::to_string(i) + "\t" + cells[i] + "\n";
    return table_from(text);
}

}  // namespace

TEST(Preprocess, ZscoreFit) {
    const auto fit = fit_transforms(numeric_column({"1", "2", "3"}), spec_of({{"x", TransformOp::kZscore}}));
    EXPECT_DOUBLE_EQ(fit.columns[0].mean, 2.0);
    EXPECT_NEAR(fit.columns[0].stddev, std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Preprocess, ZscoreApply) {
    const RawTable t = numeric_column({"1", "2", "3"});
    const auto out = apply_transforms(t, fit_transforms(t, spec_of({{"x", TransformOp::kZscore}})));
    ASSERT_EQ(out.values.size(), 3u);
    EXPECT_NEAR(out.values[0], -1.22474f, 1e-5);
    EXPECT_NEAR(out.values[1], 0.0f, 1e-7);
    EXPECT_NEAR(out.values[2], 1.22474f, 1e-5);
}

TEST(Preprocess, OnehotLearnedVocabIsSorted) {
    const RawTable t = numeric_column({"b", "a", "b"});
    ColumnDirective d{"x", TransformOp::kOnehot};
    const auto fit = fit_transforms(t, spec_of({d}));
    EXPECT_EQ(fit.columns[0].vocab, (std::vector<std::string>{"a", "b"}));
}

TEST(Preprocess, OnehotKnownAndUnknownTokens) {
    ColumnDirective d{"x", TransformOp::kOnehot};
    d.vocab = std::vector<std::string>{"a", "b", "c"};
    const RawTable fit_on = numeric_column({"a"});
    const auto fit = fit_transforms(fit_on, spec_of({d}));
    const auto out = apply_transforms(numeric_column({"b", "z"}), fit);
    EXPECT_EQ(out.values, (std::vector<float>{0, 1, 0, 0, 0, 0}));
}

TEST(Preprocess, ImputeMean) {
    ColumnDirective d{"x", TransformOp::kImpute};
    const RawTable t = numeric_column({"5", "", "7"});
    const auto fit = fit_transforms(t, spec_of({d}));
    EXPECT_DOUBLE_EQ(fit.columns[0].impute_value, 6.0);
    EXPECT_EQ(apply_transforms(t, fit).values, (std::vector<float>{5, 6, 7}));
}

TEST(Preprocess, MissingValueWithoutImputeFails) {
    const RawTable t = numeric_column({"5", "", "7"});
    EXPECT_ANY_THROW(apply_transforms(t, fit_transforms(numeric_column({"1"}), spec_of({{"x", TransformOp::kZscore}}))));
}

TEST(Preprocess, MinmaxLog1pDropPassthrough) {
    const RawTable t = table_from("node_type\tnode_id\ta\tb\tc\td\nn\t0\t0\t0\t9\t1.5\nn\t1\t10\t3\t9\t2.5\n");
    const auto fit = fit_transforms(t, spec_of({{"a", TransformOp::kMinmax},
                                                {"b", TransformOp::kLog1p},
                                                {"c", TransformOp::kDrop},
                                                {"d", TransformOp::kPassthrough}}));
    EXPECT_EQ(fit.output_width(), 3u);
    const auto out = apply_transforms(t, fit);
    ASSERT_EQ(out.values.size(), 6u);
    EXPECT_FLOAT_EQ(out.values[0], 0.0f);
    EXPECT_FLOAT_EQ(out.values[1], 0.0f);
    EXPECT_FLOAT_EQ(out.values[2], 1.5f);
    EXPECT_FLOAT_EQ(out.values[3], 1.0f);
    EXPECT_FLOAT_EQ(out.values[4], static_cast<float>(std::log1p(3.0)));
    EXPECT_FLOAT_EQ(out.values[5], 2.5f);
}

TEST(Preprocess, FiltersDropRows) {
    const RawTable t = numeric_column({"1", "5", "9"});
    const auto fit = fit_transforms(t, spec_of({{"x", TransformOp::kPassthrough}}, {{"x", FilterOp::kGe, 5.0}}));
    const auto out = apply_transforms(t, fit);
    EXPECT_EQ(out.filtered_rows, 1u);
    EXPECT_EQ(out.values, (std::vector<float>{5, 9}));
}

TEST(Preprocess, UncoveredColumnIsSchemaError) {
    const RawTable t = table_from("node_type\tnode_id\ta\tb\nn\t0\t1\t2\n");
    EXPECT_THROW(fit_transforms(t, spec_of({{"a", TransformOp::kZscore}})), SchemaError);
}

TEST(Preprocess, DuplicateDirectiveRejected) {
    EXPECT_THROW(spec_of({{"x", TransformOp::kZscore}, {"x", TransformOp::kMinmax}}).validate(), ConfigError);
}

TEST(Preprocess, ExactSumIsOrderIndependent) {
    std::vector<double> xs;
    SplitMix64 rng(3);
    for (int i = 0; i < 1000; ++i) xs.push_back((rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.below(30)) - 15));
    ExactSum a, b;
    for (double x : xs) a.add(x);
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) b.add(*it);
    EXPECT_EQ(a.value(), b.value());
    ExactSum c, d;
    for (size_t i = 0; i < xs.size(); ++i) (i % 2 ? c : d).add(xs[i]);
    c.merge(d);
    EXPECT_EQ(c.value(), a.value());
}

TEST(Preprocess, ShardedFitEqualsSingleFit) {
    std::vector<std::string> cells;
    SplitMix64 rng(9);
    for (int i = 0; i < 300; ++i) cells.push_back(std::to_string(rng.normal() * 10 + 3));
    const RawTable all = numeric_column(cells);
    std::vector<RawTable> shards(3);
    for (auto& s : shards) {
        s.key_columns = all.key_columns;
        s.columns = all.columns;
    }
    for (size_t r = 0; r < all.num_rows(); ++r) {
        shards[r % 3].keys.push_back(all.keys[r]);
        shards[r % 3].values.push_back(all.values[r]);
    }
    const auto spec = spec_of({{"x", TransformOp::kZscore}});
    EXPECT_EQ(fit_transforms(all, spec).serialize(), fit_transforms(shards, spec).serialize());
}

TEST(Preprocess, FittedTransformRoundTrip) {
    ColumnDirective oh{"b", TransformOp::kOnehot};
    ColumnDirective imp{"c", TransformOp::kImpute};
    imp.impute = ImputeStrategy::kConstant;
    imp.impute_constant = -1;
    const RawTable t = table_from("node_type\tnode_id\ta\tb\tc\nn\t0\t1\tx\t\nn\t1\t4\ty\t3\n");
    const auto fit = fit_transforms(t, spec_of({{"a", TransformOp::kZscore}, oh, imp}));
    const std::string text = fit.serialize();
    EXPECT_EQ(text.rfind("giglite-transform v1\n", 0), 0u);
    EXPECT_EQ(FittedTransform::deserialize(text).serialize(), text);
    EXPECT_ANY_THROW(FittedTransform::deserialize("bogus"));
}

TEST(Preprocess, SpecJsonRoundTrip) {
    const std::string text = R"({"columns":[{"name":"x","op":"zscore"},{"name":"y","op":"impute","strategy":"constant","value":2}],
                                 "filters":[{"column":"x","op":"<","value":3}]})";
    const TransformSpec s = TransformSpec::from_json(text);
    EXPECT_EQ(TransformSpec::from_json(s.to_json()).to_json(), s.to_json());
    EXPECT_THROW(TransformSpec::from_json(R"({"columns":[{"name":"x","op":"bogus"}]})"), ConfigError);
}

TEST(Preprocess, GraphDriverDropsDanglingEdges) {
    std::map<std::string, RawTable> nodes, edges;
    nodes.emplace("u", table_from("node_type\tnode_id\tage\nu\t1\t10\nu\t2\t20\nu\t3\t-1\n"));
    edges.emplace("u|f|u", table_from("src_type\trelation\tdst_type\tsrc_id\tdst_id\nu\tf\tu\t1\t2\nu\tf\tu\t1\t3\n"));
    const PreprocessorSpec spec = PreprocessorSpec::from_json(R"({
        "format": "giglite-preprocessor v1",
        "node_types": {"u": {"columns": [{"name": "age", "op": "zscore"}], "filters": [{"column": "age", "op": ">=", "value": 0}]}},
        "edge_types": {"u|f|u": {"directed": true}}
    })");
    const PreprocessResult r = preprocess_graph(nodes, edges, spec);
    EXPECT_EQ(r.graph.num_nodes(), 2u);
    EXPECT_EQ(r.graph.num_edges(), 1u);
    EXPECT_EQ(r.filtered_nodes, 1u);
    EXPECT_EQ(r.dropped_dangling_edges, 1u);
    EXPECT_TRUE(r.graph.schema().edge_types[0].directed);
}
