#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "paygap/design.hpp"
#include "paygap/linmod.hpp"

namespace paygap {

struct SupportDefinition {
    std::string id;
    std::vector<std::string> blocks;  // ordered block names
};

struct CellStats {
    double w0 = 0.0, w1 = 0.0;    // weight sums by group
    double wy0 = 0.0, wy1 = 0.0;  // weighted outcome sums by group
    long n0 = 0, n1 = 0;
};

// Exact cells over the coarsened columns of a block list. A row is on support
// iff its cell carries positive weight from both groups.
struct CellIndex {
    std::vector<int> cell_of_row;
    std::vector<char> on_support;
    std::vector<CellStats> cells;
    std::size_t n_cells() const { return cells.size(); }
    std::vector<std::size_t> on_support_rows() const;
};

CellIndex build_cells(const Dataset& data, const std::vector<VariableBlock>& blocks);

// Exact split of the raw gap into the on-support gap and the two
// out-of-support components; holds as an identity, not an estimate.
struct NopoResult {
    double raw_gap = 0.0;                  // focal minus reference mean
    double gap_on_support = 0.0;           // raw gap within support
    double unexplained_on_support = 0.0;   // exact-matching gap within support
    double explained_on_support = 0.0;     // gap_on_support - unexplained_on_support
    double out_of_support_focal = 0.0;     // Pr(S=0|G=1) * (mean off - mean on), focal
    double out_of_support_reference = 0.0;
    double focal_support_share = 0.0;      // weighted share of focal rows on support
    bool support_defined = false;          // both groups have on-support mass
    long n_focal_on = 0, n_reference_on = 0;
    long n_cells = 0;
};

NopoResult nopo_decompose(const Dataset& data, const CellIndex& cells);

// Exact-matching gap over on-support focal rows (weighted mean of the
// difference to the reference-group cell mean). Off-support focal rows are
// the caller's problem; see estimators::exact_match for the strict entry point.
double exm_gap_on_support(const Dataset& data, const CellIndex& cells);

struct BlockRank {
    std::string block;
    double delta_r2 = 0.0;  // drop in adjusted R2 when the block is omitted
};

// Ranks blocks by their contribution to the reference-group wage model:
// adjusted-R2 loss when all terms touching the block are removed. With
// several datasets the per-block losses are averaged. Ties break alphabetically.
std::vector<BlockRank> rank_variable_blocks(const std::vector<const Dataset*>& datasets,
                                            const std::vector<VariableBlock>& blocks,
                                            const ModelSpec& spec);
std::vector<BlockRank> rank_variable_blocks(const Dataset& data,
                                            const std::vector<VariableBlock>& blocks,
                                            const ModelSpec& spec);

struct SupportStep {
    int step = 0;                      // 1-based number of enforced blocks
    std::vector<std::string> blocks;   // blocks enforced so far
    NopoResult nopo;
};

struct SupportReport {
    std::vector<SupportStep> steps;
    void write_csv(std::ostream& out) const;
    void write_text(std::ostream& out) const;
};

// Enforces support block by block in the given order and reports share and
// gap decomposition per step.
SupportReport sequential_support_analysis(const Dataset& data,
                                          const std::vector<VariableBlock>& ordered_blocks);

}  // namespace paygap
