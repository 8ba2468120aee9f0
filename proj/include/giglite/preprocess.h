#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "giglite/graph.h"

namespace giglite {

/// Raw tabular input: leading key columns are carried through untouched, value
/// columns are transformed. Missing cells are std::nullopt.
struct RawTable {
    std::vector<std::string> key_columns;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> keys;
    std::vector<std::vector<std::optional<std::string>>> values;

    size_t num_rows() const { return keys.size(); }
    /// -1 when absent.
    int column_index(const std::string& name) const;
};

/// Reads a tab-separated table with a header line. Header must start with
/// `node_type node_id` (node tables) or `src_type relation dst_type src_id dst_id`
/// (edge tables). Empty cells are missing values.
RawTable read_raw_table(std::istream& in, const std::string& source = "table");
RawTable read_raw_table_file(const std::string& path);
void write_raw_table(std::ostream& out, const RawTable& t);

enum class TransformOp { kZscore, kMinmax, kLog1p, kOnehot, kImpute, kPassthrough, kDrop };
enum class ImputeStrategy { kMean, kConstant };

struct ColumnDirective {
    std::string column;
    TransformOp op = TransformOp::kPassthrough;
    // onehot: a fixed vocabulary, or learned at fit time when absent.
    std::optional<std::vector<std::string>> vocab;
    ImputeStrategy impute = ImputeStrategy::kMean;
    double impute_constant = 0.0;
};

enum class FilterOp { kLt, kLe, kGt, kGe, kEq, kNe, kPresent };

struct RowFilter {
    std::string column;
    FilterOp op = FilterOp::kPresent;
    double value = 0.0;
};

struct TransformSpec {
    std::vector<ColumnDirective> directives;
    std::vector<RowFilter> filters;

    /// Throws ConfigError on duplicate directives or an empty fixed vocabulary.
    void validate() const;
    static TransformSpec from_json(const std::string& text);
    std::string to_json() const;
};

/// Shewchuk-style exact accumulator: the rounded result is independent of the
/// order in which values are added or partial sums merged.
class ExactSum {
  public:
    void add(double x);
    void merge(const ExactSum& other);
    double value() const;
    const std::vector<double>& partials() const { return partials_; }

  private:
    std::vector<double> partials_;
};

/// Mergeable partial statistics for one column.
struct ColumnStats {
    uint64_t count = 0;
    ExactSum sum;
    ExactSum sum_sq;  // exact: each square is split into product + error term
    double min = 0.0;
    double max = 0.0;
    std::set<std::string> tokens;

    void add_numeric(double x);
    void add_token(const std::string& s);
    void merge(const ColumnStats& other);
    double mean() const;
    /// Population variance, exact for the rounded mean.
    double variance() const;
};

struct FittedColumn {
    ColumnDirective directive;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    double impute_value = 0.0;
    std::vector<std::string> vocab;

    size_t output_width() const;
};

struct FittedTransform {
    TransformSpec spec;
    std::vector<FittedColumn> columns;

    size_t output_width() const;
    /// Versioned text artifact: header line `giglite-transform v1` then a JSON body.
    std::string serialize() const;
    static FittedTransform deserialize(const std::string& text);
};

/// Partial statistics for a shard of rows; combine shards with merge_partials.
std::vector<ColumnStats> partial_statistics(const RawTable& table, const TransformSpec& spec);
void merge_partials(std::vector<ColumnStats>& into, const std::vector<ColumnStats>& from);
FittedTransform finalize_fit(const TransformSpec& spec, const std::vector<ColumnStats>& stats);

FittedTransform fit_transforms(const RawTable& table, const TransformSpec& spec);
FittedTransform fit_transforms(const std::vector<RawTable>& shards, const TransformSpec& spec);

bool row_passes(const RawTable& table, size_t row, const std::vector<RowFilter>& filters);

struct TransformedTable {
    std::vector<std::vector<std::string>> keys;  // surviving rows only
    std::vector<float> values;                   // row-major, width() per row
    size_t width = 0;
    size_t filtered_rows = 0;
};

TransformedTable apply_transforms(const RawTable& table, const FittedTransform& fitted);

/// Graph-level driver: one raw table per node type and per edge type.
struct PreprocessorSpec {
    std::map<std::string, TransformSpec> node_specs;  // by node type
    std::map<std::string, TransformSpec> edge_specs;  // by EdgeType::key()
    std::map<std::string, bool> directed;             // by EdgeType::key(), default undirected

    static PreprocessorSpec from_json(const std::string& text);
    std::string to_json() const;
};

struct PreprocessResult {
    Graph graph;
    std::map<std::string, FittedTransform> node_fits;
    std::map<std::string, FittedTransform> edge_fits;
    size_t filtered_nodes = 0;
    size_t filtered_edges = 0;
    size_t dropped_dangling_edges = 0;
};

PreprocessResult preprocess_graph(const std::map<std::string, RawTable>& node_tables,
                                  const std::map<std::string, RawTable>& edge_tables, const PreprocessorSpec& spec);

}  // namespace giglite
