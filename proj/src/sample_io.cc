#include "giglite/sample_io.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "giglite/error.h"
#include "giglite/text_format.h"

namespace giglite {

using nlohmann::json;

namespace {

const std::string kHeaderPrefix = "# giglite-samples v1 kind=";

json floats_json(const std::vector<float>& v) {
    json a = json::array();
    for (float f : v) {
        a.push_back(canonical_double(f));
    }
    return a;
}

std::vector<float> floats_from(const json& a) {
    std::vector<float> v;
    v.reserve(a.size());
    for (const auto& x : a) {
        v.push_back(static_cast<float>(x.get<double>()));
    }
    return v;
}

json node_json(const NodeRef& n) { return json::array({n.type, n.id}); }

NodeRef node_from(const json& j) { return {j.at(0).get<std::string>(), j.at(1).get<uint64_t>()}; }

json subgraph_json(const RootedSubgraph& sg) {
    json nodes = json::array();
    for (const auto& n : sg.nodes) {
        nodes.push_back(json::array({n.node.type, n.node.id, n.hop, floats_json(n.features)}));
    }
    json edges = json::array();
    for (const auto& e : sg.edges) {
        edges.push_back(json::array({e.src.type, e.src.id, e.dst.type, e.dst.id, e.edge_type, floats_json(e.features)}));
    }
    return {{"edges", edges}, {"nodes", nodes}, {"root", node_json(sg.root)}};
}

RootedSubgraph subgraph_from(const json& j) {
    RootedSubgraph sg;
    sg.root = node_from(j.at("root"));
    for (const auto& n : j.at("nodes")) {
        sg.nodes.push_back({{n.at(0).get<std::string>(), n.at(1).get<uint64_t>()},
                            n.at(2).get<uint32_t>(),
                            floats_from(n.at(3))});
    }
    for (const auto& e : j.at("edges")) {
        sg.edges.push_back({{e.at(0).get<std::string>(), e.at(1).get<uint64_t>()},
                            {e.at(2).get<std::string>(), e.at(3).get<uint64_t>()},
                            e.at(4).get<std::string>(),
                            floats_from(e.at(5))});
    }
    return sg;
}

json sample_json(const TrainingSample& s) {
    json pos = json::array();
    for (const auto& p : s.positives) {
        pos.push_back(subgraph_json(p));
    }
    json neg = json::array();
    for (const auto& n : s.hard_negatives) {
        neg.push_back(subgraph_json(n));
    }
    json j = {{"anchor", subgraph_json(s.anchor)}, {"hard_negatives", neg}, {"positives", pos}};
    j["label"] = s.label ? json(*s.label) : json(nullptr);
    return j;
}

}  // namespace

std::string encode_subgraph(const RootedSubgraph& sg) { return subgraph_json(sg).dump(); }

std::string encode_sample(const TrainingSample& s) { return sample_json(s).dump(); }

TrainingSample decode_sample(const std::string& line, size_t lineno) {
    TrainingSample s;
    try {
        json j = json::parse(line);
        s.anchor = subgraph_from(j.at("anchor"));
        for (const auto& p : j.at("positives")) {
            s.positives.push_back(subgraph_from(p));
        }
        for (const auto& n : j.at("hard_negatives")) {
            s.hard_negatives.push_back(subgraph_from(n));
        }
        if (!j.at("label").is_null()) {
            s.label = j.at("label").get<int64_t>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed sample record: ") + e.what(), lineno);
    }
    return s;
}

void serialize_samples(std::ostream& out, SampleKind kind, const std::vector<TrainingSample>& samples) {
    out << kHeaderPrefix << sample_kind_name(kind) << '\n';
    for (const auto& s : samples) {
        if (s.kind != kind) {
            throw ConfigError(std::string("sample of kind ") + sample_kind_name(s.kind) + " in a " +
                              sample_kind_name(kind) + " stream");
        }
        out << encode_sample(s) << '\n';
    }
}

std::string serialize_samples(SampleKind kind, const std::vector<TrainingSample>& samples) {
    std::ostringstream ss;
    serialize_samples(ss, kind, samples);
    return ss.str();
}

SampleFile deserialize_samples(std::istream& in) {
    SampleFile file;
    std::string line;
    bool had_newline = true;
    if (!read_line(in, line, &had_newline) || line.rfind(kHeaderPrefix, 0) != 0) {
        throw ParseError("sample file: missing '" + kHeaderPrefix + "<kind>' header", 1);
    }
    file.kind = parse_sample_kind(line.substr(kHeaderPrefix.size()));
    size_t lineno = 1;
    while (read_line(in, line, &had_newline)) {
        ++lineno;
        if (!had_newline) {
            throw ParseError("sample file: truncated final record", lineno);
        }
        if (line.empty()) {
            continue;
        }
        TrainingSample s = decode_sample(line, lineno);
        s.kind = file.kind;
        if (s.kind == SampleKind::kLinkPrediction && s.positives.empty()) {
            throw ParseError("link-prediction record without positives", lineno);
        }
        if (s.kind == SampleKind::kNodeClassification && !s.label) {
            throw ParseError("node-classification record without a label", lineno);
        }
        file.samples.push_back(std::move(s));
    }
    return file;
}

SampleFile read_sample_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LookupError("cannot open sample file '" + path + "'");
    }
    return deserialize_samples(in);
}

void write_sample_file(const std::string& path, SampleKind kind, const std::vector<TrainingSample>& samples) {
    write_file(path, serialize_samples(kind, samples));
}

}  // namespace giglite
