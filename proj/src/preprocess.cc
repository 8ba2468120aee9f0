#include "giglite/preprocess.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "giglite/error.h"
#include "giglite/text_format.h"

namespace giglite {

using nlohmann::json;

namespace {

const std::vector<std::string> kNodeKeys = {"node_type", "node_id"};
const std::vector<std::string> kEdgeKeys = {"src_type", "relation", "dst_type", "src_id", "dst_id"};

const char* op_name(TransformOp op) {
    switch (op) {
        case TransformOp::kZscore: return "zscore";
        case TransformOp::kMinmax: return "minmax";
        case TransformOp::kLog1p: return "log1p";
        case TransformOp::kOnehot: return "onehot";
        case TransformOp::kImpute: return "impute";
        case TransformOp::kPassthrough: return "passthrough";
        case TransformOp::kDrop: return "drop";
    }
    return "?";
}

TransformOp parse_op(const std::string& s) {
    static const std::map<std::string, TransformOp> ops = {
        {"zscore", TransformOp::kZscore}, {"minmax", TransformOp::kMinmax},
        {"log1p", TransformOp::kLog1p},   {"onehot", TransformOp::kOnehot},
        {"impute", TransformOp::kImpute}, {"passthrough", TransformOp::kPassthrough},
        {"drop", TransformOp::kDrop}};
    auto it = ops.find(s);
    if (it == ops.end()) {
        throw ConfigError("unknown transform op '" + s + "'");
    }
    return it->second;
}

const std::map<std::string, FilterOp>& filter_ops() {
    static const std::map<std::string, FilterOp> ops = {{"<", FilterOp::kLt},  {"<=", FilterOp::kLe},
                                                        {">", FilterOp::kGt},  {">=", FilterOp::kGe},
                                                        {"==", FilterOp::kEq}, {"!=", FilterOp::kNe},
                                                        {"present", FilterOp::kPresent}};
    return ops;
}

std::string filter_name(FilterOp op) {
    for (const auto& [k, v] : filter_ops()) {
        if (v == op) {
            return k;
        }
    }
    return "?";
}

// Exact product a*b = p + e.
std::pair<double, double> two_product(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

json directive_json(const ColumnDirective& d) {
    json j = {{"name", d.column}, {"op", op_name(d.op)}};
    if (d.op == TransformOp::kOnehot && d.vocab) {
        j["vocab"] = *d.vocab;
    }
    if (d.op == TransformOp::kImpute) {
        j["strategy"] = d.impute == ImputeStrategy::kMean ? "mean" : "constant";
        if (d.impute == ImputeStrategy::kConstant) {
            j["value"] = d.impute_constant;
        }
    }
    return j;
}

ColumnDirective directive_from_json(const json& j) {
    ColumnDirective d;
    d.column = j.at("name").get<std::string>();
    d.op = parse_op(j.at("op").get<std::string>());
    if (j.contains("vocab")) {
        d.vocab = j.at("vocab").get<std::vector<std::string>>();
    }
    if (d.op == TransformOp::kImpute) {
        std::string strategy = j.value("strategy", "mean");
        if (strategy == "mean") {
            d.impute = ImputeStrategy::kMean;
        } else if (strategy == "constant") {
            d.impute = ImputeStrategy::kConstant;
            d.impute_constant = j.at("value").get<double>();
        } else {
            throw ConfigError("unknown impute strategy '" + strategy + "'");
        }
    }
    return d;
}

json spec_json(const TransformSpec& s) {
    json j;
    j["columns"] = json::array();
    for (const auto& d : s.directives) {
        j["columns"].push_back(directive_json(d));
    }
    j["filters"] = json::array();
    for (const auto& f : s.filters) {
        json fj = {{"column", f.column}, {"op", filter_name(f.op)}};
        if (f.op != FilterOp::kPresent) {
            fj["value"] = f.value;
        }
        j["filters"].push_back(fj);
    }
    return j;
}

TransformSpec spec_from_json(const json& j) {
    TransformSpec s;
    for (const auto& c : j.at("columns")) {
        s.directives.push_back(directive_from_json(c));
    }
    if (j.contains("filters")) {
        for (const auto& f : j.at("filters")) {
            RowFilter rf;
            rf.column = f.at("column").get<std::string>();
            auto it = filter_ops().find(f.at("op").get<std::string>());
            if (it == filter_ops().end()) {
                throw ConfigError("unknown filter op '" + f.at("op").get<std::string>() + "'");
            }
            rf.op = it->second;
            if (rf.op != FilterOp::kPresent) {
                rf.value = f.at("value").get<double>();
            }
            s.filters.push_back(rf);
        }
    }
    s.validate();
    return s;
}

void check_columns(const RawTable& table, const TransformSpec& spec, const char* phase) {
    std::unordered_set<std::string> covered;
    for (const auto& d : spec.directives) {
        covered.insert(d.column);
        if (table.column_index(d.column) < 0) {
            throw SchemaError(std::string(phase) + ": column '" + d.column + "' missing from table");
        }
    }
    for (const auto& c : table.columns) {
        if (!covered.count(c)) {
            throw SchemaError(std::string(phase) + ": column '" + c + "' has no directive");
        }
    }
}

}  // namespace

int RawTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

RawTable read_raw_table(std::istream& in, const std::string& source) {
    RawTable t;
    std::string line;
    size_t lineno = 0;
    bool have_header = false;
    size_t nkeys = 0;
    while (read_line(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        auto f = split_fields(line);
        if (!have_header) {
            std::vector<std::string> header(f.begin(), f.end());
            if (header.size() >= kEdgeKeys.size() && std::equal(kEdgeKeys.begin(), kEdgeKeys.end(), header.begin())) {
                nkeys = kEdgeKeys.size();
            } else if (header.size() >= kNodeKeys.size() &&
                       std::equal(kNodeKeys.begin(), kNodeKeys.end(), header.begin())) {
                nkeys = kNodeKeys.size();
            } else {
                throw ParseError(source + ": header must start with node or edge key columns", lineno);
            }
            t.key_columns.assign(header.begin(), header.begin() + static_cast<long>(nkeys));
            t.columns.assign(header.begin() + static_cast<long>(nkeys), header.end());
            have_header = true;
            continue;
        }
        if (f.size() != nkeys + t.columns.size()) {
            throw ParseError(source + ": expected " + std::to_string(nkeys + t.columns.size()) + " fields, got " +
                                 std::to_string(f.size()),
                             lineno);
        }
        t.keys.emplace_back(f.begin(), f.begin() + static_cast<long>(nkeys));
        std::vector<std::optional<std::string>> vals;
        for (size_t i = nkeys; i < f.size(); ++i) {
            if (f[i].empty()) {
                vals.emplace_back(std::nullopt);
            } else {
                vals.emplace_back(std::string(f[i]));
            }
        }
        t.values.push_back(std::move(vals));
    }
    if (!have_header) {
        throw ParseError(source + ": missing header line");
    }
    return t;
}

RawTable read_raw_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw LookupError("cannot open raw table '" + path + "'");
    }
    return read_raw_table(in, path);
}

void write_raw_table(std::ostream& out, const RawTable& t) {
    std::string line;
    for (size_t i = 0; i < t.key_columns.size() + t.columns.size(); ++i) {
        if (i) {
            line += '\t';
        }
        line += i < t.key_columns.size() ? t.key_columns[i] : t.columns[i - t.key_columns.size()];
    }
    out << line << '\n';
    for (size_t r = 0; r < t.num_rows(); ++r) {
        line.clear();
        for (size_t i = 0; i < t.keys[r].size(); ++i) {
            if (i) {
                line += '\t';
            }
            line += t.keys[r][i];
        }
        for (const auto& v : t.values[r]) {
            line += '\t';
            if (v) {
                line += *v;
            }
        }
        out << line << '\n';
    }
}

void TransformSpec::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& d : directives) {
        if (!seen.insert(d.column).second) {
            throw ConfigError("column '" + d.column + "' has more than one directive");
        }
        if (d.op == TransformOp::kOnehot && d.vocab && d.vocab->empty()) {
            throw ConfigError("column '" + d.column + "': empty onehot vocabulary");
        }
    }
}

TransformSpec TransformSpec::from_json(const std::string& text) {
    try {
        return spec_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("transform spec: ") + e.what());
    }
}

std::string TransformSpec::to_json() const { return spec_json(*this).dump(2) + "\n"; }

void ExactSum::add(double x) {
    if (!std::isfinite(x)) {
        throw SchemaError("non-finite value in statistics");
    }
    size_t i = 0;
    for (double y : partials_) {
        if (std::fabs(x) < std::fabs(y)) {
            std::swap(x, y);
        }
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) {
            partials_[i++] = lo;
        }
        x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
}

void ExactSum::merge(const ExactSum& other) {
    for (double p : other.partials_) {
        add(p);
    }
}

double ExactSum::value() const {
    size_t n = partials_.size();
    if (n == 0) {
        return 0.0;
    }
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) {
            break;
        }
    }
    // Round-half-even correction when the remaining partials push past a tie.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) {
            hi = x;
        }
    }
    return hi;
}

void ColumnStats::add_numeric(double x) {
    if (count == 0) {
        min = max = x;
    } else {
        min = std::min(min, x);
        max = std::max(max, x);
    }
    ++count;
    sum.add(x);
    auto [p, e] = two_product(x, x);
    sum_sq.add(p);
    sum_sq.add(e);
}

void ColumnStats::add_token(const std::string& s) {
    ++count;
    tokens.insert(s);
}

void ColumnStats::merge(const ColumnStats& other) {
    if (other.count == 0) {
        return;
    }
    if (count == 0) {
        min = other.min;
        max = other.max;
    } else {
        min = std::min(min, other.min);
        max = std::max(max, other.max);
    }
    count += other.count;
    sum.merge(other.sum);
    sum_sq.merge(other.sum_sq);
    tokens.insert(other.tokens.begin(), other.tokens.end());
}

double ColumnStats::mean() const { return count ? sum.value() / static_cast<double>(count) : 0.0; }

double ColumnStats::variance() const {
    if (count == 0) {
        return 0.0;
    }
    // sum (x - m)^2 = S2 - 2 m S1 + n m^2, accumulated exactly for the rounded mean m.
    const double m = mean();
    const double n = static_cast<double>(count);
    ExactSum m2 = sum_sq;
    for (double part : sum.partials()) {
        auto [p, e] = two_product(-2.0 * m, part);
        m2.add(p);
        m2.add(e);
    }
    auto [mp, me] = two_product(m, m);
    for (double part : {mp, me}) {
        auto [p, e] = two_product(n, part);
        m2.add(p);
        m2.add(e);
    }
    return std::max(0.0, m2.value() / n);
}

size_t FittedColumn::output_width() const {
    switch (directive.op) {
        case TransformOp::kDrop: return 0;
        case TransformOp::kOnehot: return vocab.size();
        default: return 1;
    }
}

size_t FittedTransform::output_width() const {
    size_t w = 0;
    for (const auto& c : columns) {
        w += c.output_width();
    }
    return w;
}

std::string FittedTransform::serialize() const {
    json j;
    j["spec"] = spec_json(spec);
    j["columns"] = json::array();
    for (const auto& c : columns) {
        json cj = {{"name", c.directive.column}, {"op", op_name(c.directive.op)}};
        switch (c.directive.op) {
            case TransformOp::kZscore:
                cj["mean"] = c.mean;
                cj["stddev"] = c.stddev;
                break;
            case TransformOp::kMinmax:
                cj["min"] = c.min;
                cj["max"] = c.max;
                break;
            case TransformOp::kOnehot: cj["vocab"] = c.vocab; break;
            case TransformOp::kImpute: cj["impute_value"] = c.impute_value; break;
            default: break;
        }
        j["columns"].push_back(cj);
    }
    return "giglite-transform v1\n" + j.dump(2) + "\n";
}

FittedTransform FittedTransform::deserialize(const std::string& text) {
    const std::string header = "giglite-transform v1\n";
    if (text.compare(0, header.size(), header) != 0) {
        throw ParseError("fitted transform: missing 'giglite-transform v1' header", 1);
    }
    FittedTransform ft;
    try {
        json j = json::parse(text.substr(header.size()));
        ft.spec = spec_from_json(j.at("spec"));
        const auto& cols = j.at("columns");
        if (cols.size() != ft.spec.directives.size()) {
            throw ParseError("fitted transform: column count does not match its spec");
        }
        for (size_t i = 0; i < cols.size(); ++i) {
            FittedColumn c;
            c.directive = ft.spec.directives[i];
            c.mean = cols[i].value("mean", 0.0);
            c.stddev = cols[i].value("stddev", 0.0);
            c.min = cols[i].value("min", 0.0);
            c.max = cols[i].value("max", 0.0);
            c.impute_value = cols[i].value("impute_value", 0.0);
            if (cols[i].contains("vocab")) {
                c.vocab = cols[i].at("vocab").get<std::vector<std::string>>();
            }
            ft.columns.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("fitted transform: ") + e.what());
    }
    return ft;
}

bool row_passes(const RawTable& table, size_t row, const std::vector<RowFilter>& filters) {
    for (const auto& f : filters) {
        int c = table.column_index(f.column);
        if (c < 0) {
            throw SchemaError("filter column '" + f.column + "' missing from table");
        }
        const auto& cell = table.values[row][static_cast<size_t>(c)];
        if (!cell) {
            return false;
        }
        if (f.op == FilterOp::kPresent) {
            continue;
        }
        const double v = parse_double(*cell);
        bool ok = false;
        switch (f.op) {
            case FilterOp::kLt: ok = v < f.value; break;
            case FilterOp::kLe: ok = v <= f.value; break;
            case FilterOp::kGt: ok = v > f.value; break;
            case FilterOp::kGe: ok = v >= f.value; break;
            case FilterOp::kEq: ok = v == f.value; break;
            case FilterOp::kNe: ok = v != f.value; break;
            case FilterOp::kPresent: ok = true; break;
        }
        if (!ok) {
            return false;
        }
    }
    return true;
}

std::vector<ColumnStats> partial_statistics(const RawTable& table, const TransformSpec& spec) {
    spec.validate();
    check_columns(table, spec, "fit");
    std::vector<ColumnStats> stats(spec.directives.size());
    std::vector<size_t> idx;
    for (const auto& d : spec.directives) {
        idx.push_back(static_cast<size_t>(table.column_index(d.column)));
    }
    for (size_t r = 0; r < table.num_rows(); ++r) {
        if (!row_passes(table, r, spec.filters)) {
            continue;
        }
        for (size_t i = 0; i < spec.directives.size(); ++i) {
            const auto& d = spec.directives[i];
            const auto& cell = table.values[r][idx[i]];
            if (d.op == TransformOp::kDrop) {
                continue;
            }
            if (d.op == TransformOp::kOnehot) {
                if (cell) {
                    stats[i].add_token(*cell);
                }
                continue;
            }
            if (!cell) {
                if (d.op == TransformOp::kImpute) {
                    continue;
                }
                throw SchemaError("column '" + d.column + "' has a missing value but no impute directive");
            }
            stats[i].add_numeric(parse_double(*cell));
        }
    }
    return stats;
}

void merge_partials(std::vector<ColumnStats>& into, const std::vector<ColumnStats>& from) {
    if (into.size() != from.size()) {
        throw SchemaError("cannot merge statistics of different column sets");
    }
    for (size_t i = 0; i < into.size(); ++i) {
        into[i].merge(from[i]);
    }
}

FittedTransform finalize_fit(const TransformSpec& spec, const std::vector<ColumnStats>& stats) {
    FittedTransform ft;
    ft.spec = spec;
    for (size_t i = 0; i < spec.directives.size(); ++i) {
        const auto& d = spec.directives[i];
        const auto& s = stats[i];
        FittedColumn c;
        c.directive = d;
        switch (d.op) {
            case TransformOp::kZscore:
                c.mean = s.mean();
                c.stddev = std::sqrt(s.variance());
                break;
            case TransformOp::kMinmax:
                c.min = s.min;
                c.max = s.max;
                break;
            case TransformOp::kOnehot:
                if (d.vocab) {
                    c.vocab = *d.vocab;
                    std::sort(c.vocab.begin(), c.vocab.end());
                    c.vocab.erase(std::unique(c.vocab.begin(), c.vocab.end()), c.vocab.end());
                } else {
                    c.vocab.assign(s.tokens.begin(), s.tokens.end());
                }
                if (c.vocab.empty()) {
                    throw ConfigError("column '" + d.column + "': onehot vocabulary is empty");
                }
                break;
            case TransformOp::kImpute:
                c.impute_value = d.impute == ImputeStrategy::kMean ? s.mean() : d.impute_constant;
                break;
            default: break;
        }
        ft.columns.push_back(std::move(c));
    }
    return ft;
}

FittedTransform fit_transforms(const RawTable& table, const TransformSpec& spec) {
    return finalize_fit(spec, partial_statistics(table, spec));
}

FittedTransform fit_transforms(const std::vector<RawTable>& shards, const TransformSpec& spec) {
    std::vector<ColumnStats> total(spec.directives.size());
    for (const auto& shard : shards) {
        merge_partials(total, partial_statistics(shard, spec));
    }
    return finalize_fit(spec, total);
}

TransformedTable apply_transforms(const RawTable& table, const FittedTransform& fitted) {
    check_columns(table, fitted.spec, "apply");
    TransformedTable out;
    out.width = fitted.output_width();
    std::vector<size_t> idx;
    for (const auto& c : fitted.columns) {
        idx.push_back(static_cast<size_t>(table.column_index(c.directive.column)));
    }
    for (size_t r = 0; r < table.num_rows(); ++r) {
        if (!row_passes(table, r, fitted.spec.filters)) {
            ++out.filtered_rows;
            continue;
        }
        out.keys.push_back(table.keys[r]);
        for (size_t i = 0; i < fitted.columns.size(); ++i) {
            const FittedColumn& c = fitted.columns[i];
            const auto& cell = table.values[r][idx[i]];
            const TransformOp op = c.directive.op;
            if (op == TransformOp::kDrop) {
                continue;
            }
            if (op == TransformOp::kOnehot) {
                for (const auto& token : c.vocab) {
                    out.values.push_back(cell && *cell == token ? 1.0f : 0.0f);
                }
                continue;
            }
            double x;
            if (!cell) {
                if (op != TransformOp::kImpute) {
                    throw SchemaError("column '" + c.directive.column + "' has a missing value but no impute directive");
                }
                x = c.impute_value;
            } else {
                x = parse_double(*cell);
            }
            double y = x;
            switch (op) {
                case TransformOp::kZscore: y = c.stddev > 0.0 ? (x - c.mean) / c.stddev : 0.0; break;
                case TransformOp::kMinmax: y = c.max > c.min ? (x - c.min) / (c.max - c.min) : 0.0; break;
                case TransformOp::kLog1p:
                    if (x <= -1.0) {
                        throw SchemaError("column '" + c.directive.column + "': log1p of a value <= -1");
                    }
                    y = std::log1p(x);
                    break;
                default: break;
            }
            out.values.push_back(static_cast<float>(y));
        }
    }
    return out;
}

PreprocessorSpec PreprocessorSpec::from_json(const std::string& text) {
    PreprocessorSpec s;
    try {
        json j = json::parse(text);
        if (j.value("format", "") != "giglite-preprocessor v1") {
            throw ConfigError("preprocessor spec: expected format 'giglite-preprocessor v1'");
        }
        for (const auto& [k, v] : j.at("node_types").items()) {
            s.node_specs[k] = spec_from_json(v);
        }
        if (j.contains("edge_types")) {
            for (const auto& [k, v] : j.at("edge_types").items()) {
                if (v.contains("columns")) {
                    s.edge_specs[k] = spec_from_json(v);
                }
                s.directed[k] = v.value("directed", false);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("preprocessor spec: ") + e.what());
    }
    return s;
}

std::string PreprocessorSpec::to_json() const {
    json j;
    j["format"] = "giglite-preprocessor v1";
    j["node_types"] = json::object();
    for (const auto& [k, v] : node_specs) {
        j["node_types"][k] = spec_json(v);
    }
    j["edge_types"] = json::object();
    for (const auto& [k, v] : directed) {
        j["edge_types"][k]["directed"] = v;
    }
    for (const auto& [k, v] : edge_specs) {
        json sj = spec_json(v);
        j["edge_types"][k]["columns"] = sj["columns"];
        j["edge_types"][k]["filters"] = sj["filters"];
    }
    return j.dump(2) + "\n";
}

PreprocessResult preprocess_graph(const std::map<std::string, RawTable>& node_tables,
                                  const std::map<std::string, RawTable>& edge_tables, const PreprocessorSpec& spec) {
    PreprocessResult result;
    GraphSchema schema;
    std::map<std::string, TransformedTable> nodes_out;
    std::map<std::string, std::unordered_set<uint64_t>> filtered_ids;
    for (const auto& [type, table] : node_tables) {
        auto it = spec.node_specs.find(type);
        if (it == spec.node_specs.end()) {
            throw ConfigError("no transform spec for node type '" + type + "'");
        }
        FittedTransform fit = fit_transforms(table, it->second);
        TransformedTable tt = apply_transforms(table, fit);
        for (size_t r = 0; r < table.num_rows(); ++r) {
            if (!row_passes(table, r, it->second.filters)) {
                filtered_ids[type].insert(parse_u64(table.keys[r][1]));
            }
        }
        result.filtered_nodes += tt.filtered_rows;
        schema.node_types.push_back({type, static_cast<uint32_t>(tt.width)});
        result.node_fits.emplace(type, std::move(fit));
        nodes_out.emplace(type, std::move(tt));
    }

    std::map<std::string, TransformedTable> edges_out;
    for (const auto& [key, table] : edge_tables) {
        TransformedTable tt;
        auto sit = spec.edge_specs.find(key);
        if (sit != spec.edge_specs.end()) {
            FittedTransform fit = fit_transforms(table, sit->second);
            tt = apply_transforms(table, fit);
            result.edge_fits.emplace(key, std::move(fit));
        } else {
            if (!table.columns.empty()) {
                throw ConfigError("edge type '" + key + "' has value columns but no transform spec");
            }
            tt.keys = table.keys;
        }
        result.filtered_edges += tt.filtered_rows;
        auto parts = split_fields(key, '|');
        if (parts.size() != 3) {
            throw ConfigError("edge type key '" + key + "' is not src|relation|dst");
        }
        auto dit = spec.directed.find(key);
        schema.edge_types.push_back({{std::string(parts[0]), std::string(parts[1]), std::string(parts[2])},
                                     dit != spec.directed.end() && dit->second,
                                     static_cast<uint32_t>(tt.width)});
        edges_out.emplace(key, std::move(tt));
    }

    GraphBuilder builder(schema);
    for (const auto& [type, tt] : nodes_out) {
        for (size_t r = 0; r < tt.keys.size(); ++r) {
            builder.add_node(type, parse_u64(tt.keys[r][1]),
                             std::span<const float>(tt.values.data() + r * tt.width, tt.width));
        }
    }
    for (const auto& [key, tt] : edges_out) {
        for (size_t r = 0; r < tt.keys.size(); ++r) {
            const auto& k = tt.keys[r];
            const uint64_t src = parse_u64(k[3]);
            const uint64_t dst = parse_u64(k[4]);
            auto fs = filtered_ids.find(k[0]);
            auto fd = filtered_ids.find(k[2]);
            if ((fs != filtered_ids.end() && fs->second.count(src)) ||
                (fd != filtered_ids.end() && fd->second.count(dst))) {
                ++result.dropped_dangling_edges;
                continue;
            }
            builder.add_edge(EdgeType{k[0], k[1], k[2]}, src, dst,
                             std::span<const float>(tt.values.data() + r * tt.width, tt.width));
        }
    }
    result.graph = std::move(builder).build();
    return result;
}

}  // namespace giglite
