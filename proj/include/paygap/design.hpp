#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "paygap/dataset.hpp"

namespace paygap {

enum class Regime { Baseline, Full, ML };

std::string regime_name(Regime r);
Regime parse_regime(const std::string& s);

enum class TermKind { Main, Dummy, Poly, Bins, Coarse, Interaction };

// One entry of a model specification. Interaction terms nest two sub-terms;
// Coarse applies a variable block's coarsening (level map for categoricals,
// cut-points for continuous) before dummy expansion.
struct Term {
    TermKind kind = TermKind::Main;
    std::string column;         // Main, Dummy, Poly, Bins, Coarse
    int degree = 1;             // Poly
    std::vector<double> cuts;   // Bins
    std::string block;          // Coarse
    std::vector<Term> parts;    // Interaction: exactly two

    std::string to_string() const;
    // All covariate names the term (recursively) references.
    void collect_columns(std::set<std::string>& out) const;

    static Term main(std::string col);
    static Term dummy(std::string col);
    static Term poly(std::string col, int degree);
    static Term bins(std::string col, std::vector<double> cuts);
    static Term coarse(std::string block, std::string col);
    static Term interaction(Term a, Term b);
};

bool operator==(const Term& a, const Term& b);

struct ModelSpec {
    Regime regime = Regime::Baseline;
    std::vector<Term> terms;
};

// Checks that every baseline term also appears in the full spec.
void validate_nested_specs(const ModelSpec& baseline, const ModelSpec& full);

// Coarsening declared on a variable block: bin cut-points for continuous
// columns, fine-to-coarse level maps for categorical columns.
struct Coarsening {
    std::map<std::string, std::vector<double>> cuts;
    std::map<std::string, std::map<std::string, std::string>> level_map;
    bool empty() const { return cuts.empty() && level_map.empty(); }
};

struct VariableBlock {
    std::string name;
    std::vector<std::string> columns;
    Coarsening coarsening;
};

const VariableBlock& find_block(const std::vector<VariableBlock>& blocks, const std::string& name);
void validate_blocks(const std::vector<VariableBlock>& blocks);

struct DesignMatrix {
    Eigen::MatrixXd values;                // n x p, no intercept column
    std::vector<std::string> names;        // aligned with columns
    std::vector<std::string> notices;      // dropped constant/duplicate columns
    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return names.size(); }
    int column_index(const std::string& name) const;  // -1 if absent
};

// Expands a ModelSpec into numeric columns. fit() freezes everything that
// depends on the fitting sample (weighted standardization of polynomial
// inputs, the drop set for constant/duplicate columns); transform() then
// produces the identical column set on any dataset, which keeps two-sample
// procedures (fit on one group, predict on the other) consistent.
class DesignBuilder {
public:
    explicit DesignBuilder(ModelSpec spec, std::vector<VariableBlock> blocks = {});

    void fit(const Dataset& data);
    DesignMatrix transform(const Dataset& data) const;
    DesignMatrix fit_transform(const Dataset& data);

    bool fitted() const { return fitted_; }
    const std::vector<std::string>& column_names() const { return kept_names_; }
    const std::vector<std::string>& notices() const { return notices_; }

private:
    struct PolyScale {
        double mean = 0.0;
        double sd = 1.0;
    };

    Eigen::MatrixXd expand_term(const Term& term, const Dataset& data,
                                std::vector<std::string>& names, bool fitting,
                                std::size_t& poly_slot) const;

    ModelSpec spec_;
    std::vector<VariableBlock> blocks_;
    bool fitted_ = false;
    mutable std::vector<PolyScale> poly_scales_;  // filled during fit, read afterwards
    std::vector<std::size_t> kept_;               // raw expansion indices that survive drops
    std::vector<std::string> kept_names_;
    std::vector<std::string> notices_;
};

// One-shot convenience: fit and transform on the same data.
DesignMatrix build_design(const Dataset& data, const ModelSpec& spec,
                          const std::vector<VariableBlock>& blocks = {});

// Resolves the coarse level of a row for one block column; used both by the
// Coarse term expansion and by exact-cell construction so the two always agree.
// Returns the coarse code and, through labels, the deterministic label set.
struct CoarseCodec {
    std::vector<std::string> labels;
    std::vector<int> codes;  // per row
};
CoarseCodec coarsen_column(const Dataset& data, const std::string& column,
                           const Coarsening& coarsening);

}  // namespace paygap
