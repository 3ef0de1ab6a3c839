#include "paygap/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace paygap {

std::vector<std::size_t> CellIndex::on_support_rows() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < on_support.size(); ++i)
        if (on_support[i]) out.push_back(i);
    return out;
}

CellIndex build_cells(const Dataset& data, const std::vector<VariableBlock>& blocks) {
    if (blocks.empty()) throw validation_error("build_cells: no blocks given");
    const std::size_t n = data.n_rows();

    std::vector<std::vector<int>> keys(n);
    for (const auto& blk : blocks) {
        for (const auto& col : blk.columns) {
            CoarseCodec codec = coarsen_column(data, col, blk.coarsening);
            for (std::size_t i = 0; i < n; ++i) keys[i].push_back(codec.codes[i]);
        }
    }

    CellIndex index;
    index.cell_of_row.resize(n);
    std::map<std::vector<int>, int> ids;  // sorted keys give deterministic cell ids
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = ids.emplace(keys[i], static_cast<int>(ids.size()));
        index.cell_of_row[i] = it->second;
    }
    index.cells.resize(ids.size());
    for (std::size_t i = 0; i < n; ++i) {
        CellStats& c = index.cells[static_cast<std::size_t>(index.cell_of_row[i])];
        if (data.group[i] == 1) {
            c.w1 += data.weight[i];
            c.wy1 += data.weight[i] * data.outcome[i];
            ++c.n1;
        } else {
            c.w0 += data.weight[i];
            c.wy0 += data.weight[i] * data.outcome[i];
            ++c.n0;
        }
    }
    index.on_support.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const CellStats& c = index.cells[static_cast<std::size_t>(index.cell_of_row[i])];
        index.on_support[i] = (c.w0 > 0.0 && c.w1 > 0.0) ? 1 : 0;
    }
    return index;
}

double exm_gap_on_support(const Dataset& data, const CellIndex& cells) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        if (data.group[i] != 1 || !cells.on_support[i]) continue;
        const CellStats& c = cells.cells[static_cast<std::size_t>(cells.cell_of_row[i])];
        num += data.weight[i] * (data.outcome[i] - c.wy0 / c.w0);
        den += data.weight[i];
    }
    if (den <= 0.0) throw std::runtime_error("exact matching: no on-support focal rows");
    return num / den;
}

NopoResult nopo_decompose(const Dataset& data, const CellIndex& cells) {
    NopoResult r;
    double w1 = 0.0, w0 = 0.0, wy1 = 0.0, wy0 = 0.0;
    double w1_on = 0.0, w0_on = 0.0, wy1_on = 0.0, wy0_on = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        double w = data.weight[i], wy = w * data.outcome[i];
        if (data.group[i] == 1) {
            w1 += w;
            wy1 += wy;
            if (cells.on_support[i]) {
                w1_on += w;
                wy1_on += wy;
                ++r.n_focal_on;
            }
        } else {
            w0 += w;
            wy0 += wy;
            if (cells.on_support[i]) {
                w0_on += w;
                wy0_on += wy;
                ++r.n_reference_on;
            }
        }
    }
    r.raw_gap = wy1 / w1 - wy0 / w0;
    r.focal_support_share = w1_on / w1;
    r.n_cells = static_cast<long>(cells.n_cells());
    r.support_defined = w1_on > 0.0 && w0_on > 0.0;
    if (!r.support_defined) {
        r.gap_on_support = std::numeric_limits<double>::quiet_NaN();
        r.unexplained_on_support = std::numeric_limits<double>::quiet_NaN();
        r.explained_on_support = std::numeric_limits<double>::quiet_NaN();
        r.out_of_support_focal = std::numeric_limits<double>::quiet_NaN();
        r.out_of_support_reference = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    double m1_on = wy1_on / w1_on, m0_on = wy0_on / w0_on;
    r.gap_on_support = m1_on - m0_on;

    auto out_component = [](double w_all, double wy_all, double w_on, double wy_on_) {
        double w_off = w_all - w_on;
        if (w_off <= 0.0) return 0.0;  // full support: component vanishes exactly
        double m_off = (wy_all - wy_on_) / w_off;
        return (w_off / w_all) * (m_off - wy_on_ / w_on);
    };
    r.out_of_support_focal = out_component(w1, wy1, w1_on, wy1_on);
    r.out_of_support_reference = out_component(w0, wy0, w0_on, wy0_on);
    r.unexplained_on_support = exm_gap_on_support(data, cells);
    r.explained_on_support = r.gap_on_support - r.unexplained_on_support;
    return r;
}

// ------------------------------------------------------- block ranking

namespace {

// Removes every term that touches one of the given columns (interactions
// count as touching if either side does).
ModelSpec spec_without_columns(const ModelSpec& spec, const std::vector<std::string>& columns) {
    ModelSpec out;
    out.regime = spec.regime;
    for (const auto& term : spec.terms) {
        std::set<std::string> refs;
        term.collect_columns(refs);
        bool touches = false;
        for (const auto& c : columns)
            if (refs.count(c)) {
                touches = true;
                break;
            }
        if (!touches) out.terms.push_back(term);
    }
    return out;
}

double adjusted_r2(const Dataset& data, const ModelSpec& spec,
                   const std::vector<VariableBlock>& blocks) {
    const auto n = static_cast<Eigen::Index>(data.n_rows());
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = data.outcome[static_cast<std::size_t>(i)];
        w(i) = data.weight[static_cast<std::size_t>(i)];
    }
    DesignMatrix X;
    if (!spec.terms.empty()) X = build_design(data, spec, blocks);
    else X.values.resize(n, 0);
    FitResult fit = fit_wls(X, y, w);
    double p = static_cast<double>(X.cols());
    double dof = static_cast<double>(n) - 1.0 - p;
    if (dof <= 0.0)
        throw std::runtime_error("rank_variable_blocks: too few reference-group rows for spec");
    return 1.0 - (1.0 - fit.r2_or_loglik) * (static_cast<double>(n) - 1.0) / dof;
}

}  // namespace

std::vector<BlockRank> rank_variable_blocks(const std::vector<const Dataset*>& datasets,
                                            const std::vector<VariableBlock>& blocks,
                                            const ModelSpec& spec) {
    if (datasets.empty()) throw std::invalid_argument("rank_variable_blocks: no datasets");
    validate_blocks(blocks);
    std::vector<BlockRank> ranks;
    for (const auto& b : blocks) ranks.push_back({b.name, 0.0});
    for (const Dataset* d : datasets) {
        Dataset men = d->subset(d->rows_of_group(0));
        double full_r2 = adjusted_r2(men, spec, blocks);
        for (auto& rank : ranks) {
            const VariableBlock& blk = find_block(blocks, rank.block);
            ModelSpec reduced = spec_without_columns(spec, blk.columns);
            rank.delta_r2 += (full_r2 - adjusted_r2(men, reduced, blocks)) /
                             static_cast<double>(datasets.size());
        }
    }
    std::stable_sort(ranks.begin(), ranks.end(), [](const BlockRank& a, const BlockRank& b) {
        if (a.delta_r2 != b.delta_r2) return a.delta_r2 > b.delta_r2;
        return a.block < b.block;
    });
    return ranks;
}

std::vector<BlockRank> rank_variable_blocks(const Dataset& data,
                                            const std::vector<VariableBlock>& blocks,
                                            const ModelSpec& spec) {
    return rank_variable_blocks(std::vector<const Dataset*>{&data}, blocks, spec);
}

// -------------------------------------------------- sequential analysis

SupportReport sequential_support_analysis(const Dataset& data,
                                          const std::vector<VariableBlock>& ordered_blocks) {
    if (ordered_blocks.empty())
        throw validation_error("sequential_support_analysis: no blocks given");
    SupportReport report;
    std::vector<VariableBlock> enforced;
    for (std::size_t k = 0; k < ordered_blocks.size(); ++k) {
        enforced.push_back(ordered_blocks[k]);
        SupportStep step;
        step.step = static_cast<int>(k + 1);
        for (const auto& b : enforced) step.blocks.push_back(b.name);
        CellIndex cells = build_cells(data, enforced);
        step.nopo = nopo_decompose(data, cells);
        report.steps.push_back(std::move(step));
    }
    return report;
}

void SupportReport::write_csv(std::ostream& out) const {
    out << "step,blocks,n_cells,focal_support_share,raw_gap,gap_on_support,"
           "unexplained_on_support,explained_on_support,out_of_support_focal,"
           "out_of_support_reference,support_defined\n";
    for (const auto& s : steps) {
        std::string blocks;
        for (std::size_t i = 0; i < s.blocks.size(); ++i) {
            if (i) blocks += "+";
            blocks += s.blocks[i];
        }
        out << s.step << "," << blocks << "," << s.nopo.n_cells << ","
            << fmt_num(s.nopo.focal_support_share) << "," << fmt_num(s.nopo.raw_gap) << ","
            << fmt_num(s.nopo.gap_on_support) << "," << fmt_num(s.nopo.unexplained_on_support)
            << "," << fmt_num(s.nopo.explained_on_support) << ","
            << fmt_num(s.nopo.out_of_support_focal) << ","
            << fmt_num(s.nopo.out_of_support_reference) << ","
            << (s.nopo.support_defined ? 1 : 0) << "\n";
    }
}

void SupportReport::write_text(std::ostream& out) const {
    out << "Sequential common-support analysis\n";
    out << "step  share   raw_gap  gap_S=1  unexpl   expl     blocks\n";
    for (const auto& s : steps) {
        std::string blocks;
        for (std::size_t i = 0; i < s.blocks.size(); ++i) {
            if (i) blocks += "+";
            blocks += s.blocks[i];
        }
        out << fmt_fixed(s.step, 0) << "     " << fmt_fixed(s.nopo.focal_support_share, 3)
            << "   " << fmt_fixed(s.nopo.raw_gap, 4) << "  "
            << fmt_fixed(s.nopo.gap_on_support, 4) << "  "
            << fmt_fixed(s.nopo.unexplained_on_support, 4) << "  "
            << fmt_fixed(s.nopo.explained_on_support, 4) << "   " << blocks;
        if (!s.nopo.support_defined) out << "  [no support]";
        out << "\n";
    }
}

}  // namespace paygap
