#include "giglite/table_io.h"

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "giglite/error.h"
#include "giglite/text_format.h"

namespace giglite {

namespace {

void read_nodes(std::istream& in, GraphBuilder& builder, const std::string& source) {
    std::string line;
    size_t lineno = 0;
    std::vector<float> feats;
    while (read_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto f = split_fields(line);
        if (f.size() < 2) {
            throw ParseError(source + ": node record needs node_type and node_id", lineno);
        }
        feats.clear();
        try {
            for (size_t i = 2; i < f.size(); ++i) {
                feats.push_back(parse_float(f[i]));
            }
            builder.add_node(f[0], parse_u64(f[1]), feats);
        } catch (const ParseError& e) {
            throw ParseError(source + ": " + e.what(), lineno);
        }
    }
}

void read_edges(std::istream& in, GraphBuilder& builder, const std::string& source) {
    std::string line;
    size_t lineno = 0;
    std::vector<float> feats;
    while (read_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto f = split_fields(line);
        if (f.size() < 5) {
            throw ParseError(source + ": edge record needs src_type, relation, dst_type, src_id, dst_id", lineno);
        }
        feats.clear();
        try {
            for (size_t i = 5; i < f.size(); ++i) {
                feats.push_back(parse_float(f[i]));
            }
            EdgeType t{std::string(f[0]), std::string(f[1]), std::string(f[2])};
            builder.add_edge(t, parse_u64(f[3]), parse_u64(f[4]), feats);
        } catch (const ParseError& e) {
            throw ParseError(source + ": " + e.what(), lineno);
        }
    }
}

}  // namespace

Graph load_graph(const std::vector<std::string>& node_tables, const std::vector<std::string>& edge_tables,
                 const GraphSchema& schema) {
    GraphBuilder builder(schema);
    for (const auto& path : node_tables) {
        std::ifstream in(path);
        if (!in) {
            throw LookupError("cannot open node table '" + path + "'");
        }
        read_nodes(in, builder, path);
    }
    for (const auto& path : edge_tables) {
        std::ifstream in(path);
        if (!in) {
            throw LookupError("cannot open edge table '" + path + "'");
        }
        read_edges(in, builder, path);
    }
    return std::move(builder).build();
}

Graph read_graph(std::istream& nodes, std::istream& edges, const GraphSchema& schema) {
    GraphBuilder builder(schema);
    read_nodes(nodes, builder, "nodes");
    read_edges(edges, builder, "edges");
    return std::move(builder).build();
}

void write_node_table(std::ostream& out, const Graph& g) {
    std::string line;
    for (size_t t = 0; t < g.schema().node_types.size(); ++t) {
        const NodeTable& table = g.nodes(t);
        const std::string& name = g.schema().node_types[t].name;
        for (uint32_t i = 0; i < table.size(); ++i) {
            line = name;
            line += '\t';
            line += std::to_string(table.id(i));
            for (float v : table.features(i)) {
                line += '\t';
                append_float(line, v);
            }
            line += '\n';
            out << line;
        }
    }
}

void write_edge_table(std::ostream& out, const Graph& g) {
    std::string line;
    for (size_t e = 0; e < g.schema().edge_types.size(); ++e) {
        const auto& spec = g.schema().edge_types[e];
        const EdgeTable& table = g.edges(e);
        const NodeTable& src = g.nodes(spec.type.src_type);
        const NodeTable& dst = g.nodes(spec.type.dst_type);
        for (size_t i = 0; i < table.size(); ++i) {
            line = spec.type.src_type + '\t' + spec.type.relation + '\t' + spec.type.dst_type + '\t';
            line += std::to_string(src.id(table.src(i)));
            line += '\t';
            line += std::to_string(dst.id(table.dst(i)));
            for (float v : table.features(i)) {
                line += '\t';
                append_float(line, v);
            }
            line += '\n';
            out << line;
        }
    }
}

void save_graph(const Graph& g, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir + "/schema.json", g.schema().to_json());
    std::ostringstream nodes;
    write_node_table(nodes, g);
    write_file(dir + "/nodes.tsv", nodes.str());
    std::ostringstream edges;
    write_edge_table(edges, g);
    write_file(dir + "/edges.tsv", edges.str());
}

Graph load_graph_dir(const std::string& dir) {
    GraphSchema schema = GraphSchema::from_json(read_file(dir + "/schema.json"));
    return load_graph({dir + "/nodes.tsv"}, {dir + "/edges.tsv"}, schema);
}

}  // namespace giglite
