#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "giglite/graph.h"

namespace giglite {

// Tab-separated tables, one record per line, '#' lines ignored on read.
//   node table: node_type  node_id  f_0 .. f_{d-1}
//   edge table: src_type  relation  dst_type  src_id  dst_id  ef_0 ..
// The writers emit the canonical form (shortest round-trip floats, no comments).

Graph load_graph(const std::vector<std::string>& node_tables, const std::vector<std::string>& edge_tables,
                 const GraphSchema& schema);

/// Stream variant used by tests and in-memory pipelines.
Graph read_graph(std::istream& nodes, std::istream& edges, const GraphSchema& schema);

void write_node_table(std::ostream& out, const Graph& g);
void write_edge_table(std::ostream& out, const Graph& g);

/// Writes schema.json, nodes.tsv and edges.tsv into `dir`.
void save_graph(const Graph& g, const std::string& dir);
Graph load_graph_dir(const std::string& dir);

}  // namespace giglite
