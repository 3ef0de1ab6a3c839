#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paygap/common.hpp"

namespace paygap {

enum class ColumnType { Continuous, Categorical };
enum class ColumnRole { Group, Outcome, Weight, Covariate };

struct SchemaColumn {
    std::string name;
    ColumnRole role = ColumnRole::Covariate;
    ColumnType type = ColumnType::Continuous;
    std::vector<std::string> levels;  // categorical only; declared order is authoritative
};

// Declares the role and type of every column the loader accepts. The schema,
// not the data, owns the categorical level sets; undeclared levels are errors.
struct Schema {
    std::vector<SchemaColumn> columns;

    const SchemaColumn* find(const std::string& name) const;
    const SchemaColumn& require(const std::string& name) const;
    std::string group_column() const;
    std::string outcome_column() const;
    std::optional<std::string> weight_column() const;
    std::vector<SchemaColumn> covariates() const;
    void validate() const;

    // Flat key-value format, one column per line: "name = role:type:lvl1,lvl2".
    static Schema parse(const std::string& text);
    static Schema load(const std::string& path);
    std::string to_string() const;
};

struct Covariate {
    std::string name;
    ColumnType type = ColumnType::Continuous;
    std::vector<double> values;        // continuous
    std::vector<int> codes;            // categorical, index into levels
    std::vector<std::string> levels;   // declared level set (copied from schema)

    std::size_t size() const {
        return type == ColumnType::Continuous ? values.size() : codes.size();
    }
    int level_count() const { return static_cast<int>(levels.size()); }
};

// Immutable after construction; estimators only ever read it.
struct Dataset {
    std::vector<int> group;       // 1 = focal group, 0 = reference group
    std::vector<double> outcome;  // log wage
    std::vector<double> weight;   // sampling weights, strictly positive
    std::vector<Covariate> covariates;

    std::size_t n_rows() const { return group.size(); }
    const Covariate& covariate(const std::string& name) const;
    int covariate_index(const std::string& name) const;  // -1 if absent

    Dataset subset(const std::vector<std::size_t>& rows) const;
    std::vector<std::size_t> rows_of_group(int g) const;
    double group_weight_sum(int g) const;

    // Checks the structural invariants (positive weights, valid codes, both
    // groups present). Throws validation_error with a row-indexed message.
    void validate() const;
};

Dataset load_dataset(const std::string& csv_path, const Schema& schema);
Dataset parse_dataset_csv(const std::string& csv_text, const Schema& schema);
void write_dataset_csv(const Dataset& data, const Schema& schema, const std::string& path);

struct StdDiffEntry {
    std::string label;  // column name, or "col=level" for categoricals
    double value = 0.0;
};

// 100*|m1-m0| / sqrt((s1^2+s0^2)/2), weighted within-group moments.
// Categorical columns report one entry per level indicator.
std::vector<StdDiffEntry> standardized_difference(const Dataset& data, const std::string& column);

}  // namespace paygap
