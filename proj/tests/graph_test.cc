#include <gtest/gtest.h>

#include <sstream>

#include "giglite/error.h"
#include "giglite/synthetic.h"
#include "giglite/table_io.h"
#include "support.h"

using namespace giglite;
using namespace giglite::testing;

namespace {

std::vector<uint64_t> ids(const std::vector<NeighborView>& nv) {
    std::vector<uint64_t> out;
    for (const auto& v : nv) out.push_back(v.node.id);
    return out;
}

}  // namespace

TEST(Graph, PathGraphCounts) {
    const Graph g = path_graph();
    EXPECT_EQ(g.num_nodes(), 4u);
    EXPECT_EQ(g.num_edges(), 3u);
    EXPECT_EQ(g.degree(N(1), 0), 2u);
    EXPECT_EQ(g.features(N(3))[0], 3.0f);
}

TEST(Graph, UndirectedNeighborsIgnoreDirection) {
    const Graph g = path_graph();
    EXPECT_EQ(ids(g.neighbors(N(1))), (std::vector<uint64_t>{0, 2}));
    EXPECT_EQ(ids(g.neighbors(N(1), Direction::kIn)), (std::vector<uint64_t>{0, 2}));
}

TEST(Graph, IsolatedNodeHasNoNeighbors) {
    GraphBuilder b(single_type_schema(false));
    const float f = 0;
    for (uint64_t i = 0; i < 5; ++i) b.add_node("n", i, std::span(&f, 1));
    const Graph g = std::move(b).build();
    EXPECT_EQ(g.num_nodes(), 5u);
    EXPECT_EQ(g.num_edges(), 0u);
    EXPECT_TRUE(g.neighbors(N(2)).empty());
}

TEST(Graph, DirectedNeighborsFollowDirection) {
    GraphBuilder b(single_type_schema(true));
    const float f = 0;
    b.add_node("n", 1, std::span(&f, 1));
    b.add_node("n", 2, std::span(&f, 1));
    b.add_edge(size_t{0}, 1, 2);
    const Graph g = std::move(b).build();
    EXPECT_TRUE(g.neighbors(N(2), Direction::kOut).empty());
    EXPECT_EQ(ids(g.neighbors(N(2), Direction::kIn)), (std::vector<uint64_t>{1}));
    EXPECT_EQ(ids(g.neighbors(N(1), Direction::kOut)), (std::vector<uint64_t>{2}));
}

TEST(Graph, DanglingEdgeNamesEndpoints) {
    GraphBuilder b(single_type_schema(false));
    const float f = 0;
    b.add_node("n", 0, std::span(&f, 1));
    b.add_edge(size_t{0}, 0, 9);
    try {
        std::move(b).build();
        FAIL() << "expected StructuralError";
    } catch (const StructuralError& e) {
        EXPECT_NE(std::string(e.what()).find("(0,9)"), std::string::npos) << e.what();
    }
}

TEST(Graph, DuplicateNodeAndEdgeRejected) {
    const float f = 0;
    GraphBuilder b(single_type_schema(false));
    b.add_node("n", 0, std::span(&f, 1));
    EXPECT_THROW(b.add_node("n", 0, std::span(&f, 1)), StructuralError);

    GraphBuilder b2(single_type_schema(false));
    b2.add_node("n", 0, std::span(&f, 1));
    b2.add_node("n", 1, std::span(&f, 1));
    b2.add_edge(size_t{0}, 0, 1);
    b2.add_edge(size_t{0}, 1, 0);  // same undirected pair
    EXPECT_THROW(std::move(b2).build(), StructuralError);
}

TEST(Graph, FeatureDimensionChecked) {
    GraphBuilder b(single_type_schema(false, 2));
    const float f = 0;
    EXPECT_THROW(b.add_node("n", 0, std::span(&f, 1)), SchemaError);
}

TEST(Graph, SchemaValidation) {
    GraphSchema s;
    s.node_types = {{"a", 1}};
    s.edge_types = {{{"a", "r", "missing"}, true, 0}};
    EXPECT_THROW(s.validate(), SchemaError);
    const GraphSchema ok = single_type_schema(true, 3);
    EXPECT_EQ(GraphSchema::from_json(ok.to_json()).to_json(), ok.to_json());
}

TEST(Graph, AdjacencySortedById) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const Graph g = make_random_graph(seed);
        for (const auto& et : g.schema().edge_types) {
            for (const auto& n : g.nodes(et.type.src_type).ids()) {
                const auto nb = ids(g.neighbors({et.type.src_type, n}, et.type, Direction::kOut));
                EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
            }
        }
    }
}

TEST(Graph, FilterAndInducedSubgraph) {
    const Graph g = path_graph();
    const Graph without_middle = filter_edges(g, [](size_t, size_t e) { return e != 1; });
    EXPECT_EQ(without_middle.num_edges(), 2u);
    EXPECT_EQ(without_middle.num_nodes(), 4u);
    const Graph head = induced_subgraph(g, [](const NodeRef& n) { return n.id < 3; });
    EXPECT_EQ(head.num_nodes(), 3u);
    EXPECT_EQ(head.num_edges(), 2u);
}

TEST(TableIo, RoundTripIsCanonical) {
    const Graph g = make_random_graph(3);
    std::ostringstream nodes, edges;
    write_node_table(nodes, g);
    write_edge_table(edges, g);
    std::istringstream nin(nodes.str()), ein(edges.str());
    const Graph back = read_graph(nin, ein, g.schema());
    std::ostringstream nodes2, edges2;
    write_node_table(nodes2, back);
    write_edge_table(edges2, back);
    EXPECT_EQ(nodes.str(), nodes2.str());
    EXPECT_EQ(edges.str(), edges2.str());
}

TEST(TableIo, SaveAndLoadDirectory) {
    TempDir dir;
    const Graph g = make_random_graph(5);
    save_graph(g, dir.path());
    const Graph back = load_graph_dir(dir.path());
    EXPECT_EQ(back.num_nodes(), g.num_nodes());
    EXPECT_EQ(back.num_edges(), g.num_edges());
}

TEST(TableIo, MalformedRowsFail) {
    const GraphSchema s = single_type_schema(false);
    std::istringstream nodes("n\t0\t1.5\nn\tx\t2\n"), edges("");
    EXPECT_ANY_THROW(read_graph(nodes, edges, s));
    std::istringstream nodes2("n\t0\t1.5\n"), edges2("n\tlink\tn\t0\t9\n");
    EXPECT_THROW(read_graph(nodes2, edges2, s), StructuralError);
}
