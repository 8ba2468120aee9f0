#include "giglite/inference.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/sample_io.h"
#include "giglite/text_format.h"
#include "giglite/trainer.h"

namespace giglite {

namespace {

const std::string kHeader = "# giglite-embeddings v1";

uint32_t max_hop(const RootedSubgraph& sg) {
    uint32_t h = 0;
    for (const auto& n : sg.nodes) h = std::max(h, n.hop);
    return h;
}

// Lower key wins among equal scores.
bool ranks_before(const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.node.id != b.node.id) return a.node.id < b.node.id;
    return a.node.type < b.node.type;
}

double score_row(std::span<const float> q, double q_norm, std::span<const float> e, Metric metric) {
    double dot = 0.0, norm = 0.0;
    for (size_t i = 0; i < q.size(); ++i) {
        dot += static_cast<double>(q[i]) * e[i];
        norm += static_cast<double>(e[i]) * e[i];
    }
    if (metric == Metric::kDot) return dot;
    const double denom = q_norm * std::sqrt(norm);
    return denom > 0.0 ? dot / denom : 0.0;
}

std::vector<Scored> top_k(const EmbeddingTable& table, std::span<const float> query, size_t k, Metric metric,
                          const std::set<NodeRef>* exclude) {
    if (query.size() != table.dim) {
        throw ConfigError("query dimension " + std::to_string(query.size()) + " differs from table dimension " +
                          std::to_string(table.dim));
    }
    double q_norm = 0.0;
    for (float v : query) q_norm += static_cast<double>(v) * v;
    q_norm = std::sqrt(q_norm);
    std::vector<Scored> all;
    all.reserve(table.size());
    for (size_t i = 0; i < table.size(); ++i) {
        if (exclude && exclude->count(table.nodes[i])) continue;
        all.push_back({table.nodes[i], score_row(query, q_norm, table.row(i), metric)});
    }
    const size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), ranks_before);
    all.resize(n);
    return all;
}

}  // namespace

std::optional<size_t> EmbeddingTable::find(const NodeRef& n) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), n);
    if (it == nodes.end() || *it != n) return std::nullopt;
    return static_cast<size_t>(it - nodes.begin());
}

EmbeddingTable infer(const ModelArtifact& artifact, std::span<const TrainingSample> samples,
                     const InferOptions& options) {
    const ModelConfig& c = artifact.config;
    if (options.sample_hops && *options.sample_hops != c.depth) {
        throw ConfigError("samples were drawn with " + std::to_string(*options.sample_hops) +
                          " hops but the model has depth " + std::to_string(c.depth));
    }
    // Distinct roots; when a root repeats with different subgraphs the one with the
    // smallest encoding is used so the choice is independent of stream order.
    std::map<NodeRef, const RootedSubgraph*> chosen;
    for (const auto& s : samples) {
        const RootedSubgraph& sg = s.anchor;
        if (max_hop(sg) > c.depth) {
            throw ConfigError("subgraph of " + to_string(sg.root) + " reaches hop " + std::to_string(max_hop(sg)) +
                              " but the model has depth " + std::to_string(c.depth));
        }
        auto [it, inserted] = chosen.emplace(sg.root, &sg);
        if (!inserted && !(*it->second == sg) && encode_subgraph(sg) < encode_subgraph(*it->second)) {
            it->second = &sg;
        }
    }
    EmbeddingTable table;
    table.dim = c.output_dim;
    table.model_id = artifact_id(artifact);
    table.run_id = options.run_id;
    std::vector<const RootedSubgraph*> roots;
    for (const auto& [node, sg] : chosen) {
        table.nodes.push_back(node);
        roots.push_back(sg);
    }
    table.values.assign(roots.size() * table.dim, 0.0f);

    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        try {
            for (size_t i = next++; i < roots.size(); i = next++) {
                const Mat<float> e = embed_subgraphs(c, artifact.params, std::span(&roots[i], 1));
                std::copy_n(e.data(), table.dim, table.values.begin() + static_cast<std::ptrdiff_t>(i * table.dim));
            }
        } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next = roots.size();
        }
    };
    const uint32_t threads = std::max<uint32_t>(1, options.threads);
    std::vector<std::thread> pool;
    for (uint32_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return table;
}

void write_embedding_table(std::ostream& out, const EmbeddingTable& table) {
    out << serialize_embedding_table(table);
}

std::string serialize_embedding_table(const EmbeddingTable& table) {
    std::string s = kHeader + " dim=" + std::to_string(table.dim) + " model=" + table.model_id +
                    " run=" + table.run_id + "\n";
    for (size_t i = 0; i < table.size(); ++i) {
        s += table.nodes[i].type;
        s += '\t';
        s += std::to_string(table.nodes[i].id);
        for (float v : table.row(i)) {
            s += '\t';
            append_float(s, v);
        }
        s += '\n';
    }
    return s;
}

EmbeddingTable read_embedding_table(std::istream& in) {
    EmbeddingTable table;
    std::string line;
    if (!read_line(in, line) || line.rfind(kHeader, 0) != 0) {
        throw ParseError("embedding table: missing '" + kHeader + "' header", 1);
    }
    std::istringstream header(line.substr(kHeader.size()));
    std::string field;
    bool have_dim = false;
    while (header >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "dim") {
            table.dim = static_cast<uint32_t>(parse_u64(value));
            have_dim = true;
        } else if (key == "model") {
            table.model_id = value;
        } else if (key == "run") {
            table.run_id = value;
        }
    }
    if (!have_dim) throw ParseError("embedding table: header lacks dim=", 1);
    size_t lineno = 1;
    while (read_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_fields(line);
        if (f.size() != 2 + table.dim) {
            throw ParseError("embedding row has " + std::to_string(f.size()) + " fields, expected " +
                                 std::to_string(2 + table.dim),
                             lineno);
        }
        NodeRef n{std::string(f[0]), parse_u64(f[1])};
        if (!table.nodes.empty() && !(table.nodes.back() < n)) {
            throw ParseError("embedding rows must be sorted and distinct", lineno);
        }
        table.nodes.push_back(std::move(n));
        for (size_t i = 2; i < f.size(); ++i) table.values.push_back(parse_float(f[i]));
    }
    return table;
}

EmbeddingTable read_embedding_table_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LookupError("cannot open embedding table '" + path + "'");
    return read_embedding_table(in);
}

const char* metric_name(Metric m) { return m == Metric::kDot ? "dot" : "cosine"; }

Metric parse_metric(const std::string& name) {
    if (name == "dot") return Metric::kDot;
    if (name == "cosine") return Metric::kCosine;
    throw ConfigError("unknown metric '" + name + "'");
}

std::vector<Scored> knn_retrieve(const EmbeddingTable& table, std::span<const float> query, size_t k, Metric metric) {
    return top_k(table, query, k, metric, nullptr);
}

std::vector<NodeRef> graph_neighbors(const Graph& g, const NodeRef& node) {
    std::set<NodeRef> out;
    const GraphSchema& schema = g.schema();
    for (const auto& et : schema.edge_types) {
        for (Direction dir : {Direction::kOut, Direction::kIn}) {
            const std::string& side = dir == Direction::kOut ? et.type.src_type : et.type.dst_type;
            if (side != node.type) continue;
            for (const auto& nv : g.neighbors(node, et.type, dir)) out.insert(nv.node);
        }
    }
    out.erase(node);
    return {out.begin(), out.end()};
}

EbrResult stochastic_ebr_retrieve(const EmbeddingTable& table, const Graph& adjacency, const NodeRef& user, size_t k,
                                  uint32_t n_seeds, uint64_t seed, Metric metric) {
    EbrResult result;
    const std::vector<NodeRef> friends = adjacency.contains(user) ? graph_neighbors(adjacency, user)
                                                                  : std::vector<NodeRef>{};
    std::set<NodeRef> exclude(friends.begin(), friends.end());
    exclude.insert(user);

    std::vector<NodeRef> embedded;
    for (const auto& f : friends) {
        if (table.find(f)) embedded.push_back(f);
    }
    if (embedded.empty()) {
        result.fell_back = true;
        if (auto own = table.find(user)) {
            result.results = top_k(table, table.row(*own), k, metric, &exclude);
        }
        return result;
    }
    const auto picks = choose_without_replacement(static_cast<uint32_t>(embedded.size()), n_seeds,
                                                  SeedDerivation::derive(seed, "ebr", user.id, 0));
    std::map<NodeRef, double> merged;
    for (uint32_t i : picks) {
        result.seeds.push_back(embedded[i]);
        for (const Scored& s : top_k(table, table.row(*table.find(embedded[i])), k, metric, &exclude)) {
            auto [it, inserted] = merged.emplace(s.node, s.score);
            if (!inserted) it->second = std::max(it->second, s.score);
        }
    }
    for (const auto& [node, score] : merged) result.results.push_back({node, score});
    std::sort(result.results.begin(), result.results.end(), ranks_before);
    if (result.results.size() > k) result.results.resize(k);
    return result;
}

}  // namespace giglite
