#include "paygap/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace paygap {

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Baseline: return "baseline";
        case Regime::Full: return "full";
        default: return "ml";
    }
}

Regime parse_regime(const std::string& s) {
    if (s == "baseline") return Regime::Baseline;
    if (s == "full") return Regime::Full;
    if (s == "ml") return Regime::ML;
    throw validation_error("unknown regime '" + s + "' (expected baseline|full|ml)");
}

// ------------------------------------------------------------------ Term

Term Term::main(std::string col) {
    Term t;
    t.kind = TermKind::Main;
    t.column = std::move(col);
    return t;
}

Term Term::dummy(std::string col) {
    Term t;
    t.kind = TermKind::Dummy;
    t.column = std::move(col);
    return t;
}

Term Term::poly(std::string col, int degree) {
    Term t;
    t.kind = TermKind::Poly;
    t.column = std::move(col);
    t.degree = degree;
    return t;
}

Term Term::bins(std::string col, std::vector<double> cuts) {
    Term t;
    t.kind = TermKind::Bins;
    t.column = std::move(col);
    t.cuts = std::move(cuts);
    return t;
}

Term Term::coarse(std::string block, std::string col) {
    Term t;
    t.kind = TermKind::Coarse;
    t.column = std::move(col);
    t.block = std::move(block);
    return t;
}

Term Term::interaction(Term a, Term b) {
    Term t;
    t.kind = TermKind::Interaction;
    t.parts.push_back(std::move(a));
    t.parts.push_back(std::move(b));
    return t;
}

std::string Term::to_string() const {
    std::ostringstream out;
    switch (kind) {
        case TermKind::Main: out << "main(" << column << ")"; break;
        case TermKind::Dummy: out << "dummy(" << column << ")"; break;
        case TermKind::Poly: out << "poly(" << column << "," << degree << ")"; break;
        case TermKind::Bins: {
            out << "bins(" << column;
            for (double c : cuts) out << "," << fmt_num(c);
            out << ")";
            break;
        }
        case TermKind::Coarse: out << "coarse(" << block << "," << column << ")"; break;
        case TermKind::Interaction:
            out << "inter(" << parts[0].to_string() << "," << parts[1].to_string() << ")";
            break;
    }
    return out.str();
}

void Term::collect_columns(std::set<std::string>& out) const {
    if (kind == TermKind::Interaction) {
        for (const auto& p : parts) p.collect_columns(out);
    } else {
        out.insert(column);
    }
}

bool operator==(const Term& a, const Term& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case TermKind::Main:
        case TermKind::Dummy: return a.column == b.column;
        case TermKind::Poly: return a.column == b.column && a.degree == b.degree;
        case TermKind::Bins: return a.column == b.column && a.cuts == b.cuts;
        case TermKind::Coarse: return a.column == b.column && a.block == b.block;
        case TermKind::Interaction:
            return a.parts[0] == b.parts[0] && a.parts[1] == b.parts[1];
    }
    return false;
}

void validate_nested_specs(const ModelSpec& baseline, const ModelSpec& full) {
    for (const auto& t : baseline.terms) {
        bool found = false;
        for (const auto& u : full.terms)
            if (t == u) {
                found = true;
                break;
            }
        if (!found)
            throw validation_error("baseline term '" + t.to_string() +
                                   "' is not part of the full model");
    }
}

// ---------------------------------------------------------------- blocks

const VariableBlock& find_block(const std::vector<VariableBlock>& blocks,
                                const std::string& name) {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw validation_error("unknown variable block '" + name + "'");
}

void validate_blocks(const std::vector<VariableBlock>& blocks) {
    std::set<std::string> seen_cols, seen_names;
    for (const auto& b : blocks) {
        if (b.name.empty()) throw validation_error("variable block with empty name");
        if (!seen_names.insert(b.name).second)
            throw validation_error("duplicate variable block '" + b.name + "'");
        if (b.columns.empty())
            throw validation_error("variable block '" + b.name + "' has no columns");
        for (const auto& c : b.columns)
            if (!seen_cols.insert(c).second)
                throw validation_error("column '" + c + "' appears in two variable blocks");
    }
}

// ------------------------------------------------------------ coarsening

namespace {

// Default cut-points for the two conventional continuous wage determinants;
// any other continuous column must declare cuts explicitly.
std::vector<double> default_cuts(const std::string& column) {
    if (column == "age") return {30.0, 40.0, 50.0};
    if (column == "tenure") return {2.0, 5.0, 8.0, 16.0};
    return {};
}

std::string bin_label(const std::vector<double>& cuts, std::size_t bin) {
    if (bin == 0) return "<" + fmt_num(cuts.front());
    if (bin == cuts.size()) return ">=" + fmt_num(cuts.back());
    return "[" + fmt_num(cuts[bin - 1]) + "," + fmt_num(cuts[bin]) + ")";
}

int bin_of(double x, const std::vector<double>& cuts) {
    int b = 0;
    for (double c : cuts) {
        if (x >= c)
            ++b;
        else
            break;
    }
    return b;
}

}  // namespace

CoarseCodec coarsen_column(const Dataset& data, const std::string& column,
                           const Coarsening& coarsening) {
    const Covariate& cov = data.covariate(column);
    CoarseCodec out;
    out.codes.resize(data.n_rows());
    if (cov.type == ColumnType::Continuous) {
        std::vector<double> cuts;
        auto it = coarsening.cuts.find(column);
        if (it != coarsening.cuts.end())
            cuts = it->second;
        else
            cuts = default_cuts(column);
        if (cuts.empty())
            throw validation_error("continuous column '" + column +
                                   "' needs declared cut-points for coarsening");
        if (!std::is_sorted(cuts.begin(), cuts.end()))
            throw validation_error("cut-points for '" + column + "' must be increasing");
        for (std::size_t b = 0; b <= cuts.size(); ++b) out.labels.push_back(bin_label(cuts, b));
        for (std::size_t i = 0; i < data.n_rows(); ++i)
            out.codes[i] = bin_of(cov.values[i], cuts);
        return out;
    }
    // Categorical: map fine levels to coarse labels; unmapped levels keep their
    // own label. Coarse label order follows first appearance over the declared
    // fine-level order, which keeps the codec deterministic.
    auto mit = coarsening.level_map.find(column);
    std::vector<int> fine_to_coarse(cov.levels.size());
    for (std::size_t lvl = 0; lvl < cov.levels.size(); ++lvl) {
        std::string label = cov.levels[lvl];
        if (mit != coarsening.level_map.end()) {
            auto lit = mit->second.find(label);
            if (lit != mit->second.end()) label = lit->second;
        }
        auto pos = std::find(out.labels.begin(), out.labels.end(), label);
        if (pos == out.labels.end()) {
            fine_to_coarse[lvl] = static_cast<int>(out.labels.size());
            out.labels.push_back(label);
        } else {
            fine_to_coarse[lvl] = static_cast<int>(pos - out.labels.begin());
        }
    }
    for (std::size_t i = 0; i < data.n_rows(); ++i)
        out.codes[i] = fine_to_coarse[static_cast<std::size_t>(cov.codes[i])];
    return out;
}

// --------------------------------------------------------- DesignMatrix

int DesignMatrix::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

// --------------------------------------------------------- DesignBuilder

DesignBuilder::DesignBuilder(ModelSpec spec, std::vector<VariableBlock> blocks)
    : spec_(std::move(spec)), blocks_(std::move(blocks)) {}

Eigen::MatrixXd DesignBuilder::expand_term(const Term& term, const Dataset& data,
                                           std::vector<std::string>& names, bool fitting,
                                           std::size_t& poly_slot) const {
    const auto n = static_cast<Eigen::Index>(data.n_rows());
    switch (term.kind) {
        case TermKind::Main: {
            const Covariate& cov = data.covariate(term.column);
            if (cov.type != ColumnType::Continuous)
                throw validation_error("main(" + term.column +
                                       "): categorical columns need dummy()");
            Eigen::MatrixXd m(n, 1);
            for (Eigen::Index i = 0; i < n; ++i)
                m(i, 0) = cov.values[static_cast<std::size_t>(i)];
            names.push_back(term.column);
            return m;
        }
        case TermKind::Dummy: {
            const Covariate& cov = data.covariate(term.column);
            if (cov.type != ColumnType::Categorical)
                throw validation_error("dummy(" + term.column + "): column is not categorical");
            int k = cov.level_count();
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, k - 1);
            for (Eigen::Index i = 0; i < n; ++i) {
                int code = cov.codes[static_cast<std::size_t>(i)];
                if (code > 0) m(i, code - 1) = 1.0;  // first declared level is the reference
            }
            for (int lvl = 1; lvl < k; ++lvl)
                names.push_back(term.column + "=" + cov.levels[static_cast<std::size_t>(lvl)]);
            return m;
        }
        case TermKind::Poly: {
            const Covariate& cov = data.covariate(term.column);
            if (cov.type != ColumnType::Continuous)
                throw validation_error("poly(" + term.column + "): column is not continuous");
            if (term.degree < 1)
                throw validation_error("poly(" + term.column + "): degree must be >= 1");
            std::size_t slot = poly_slot++;
            if (fitting) {
                PolyScale ps;
                ps.mean = weighted_mean(cov.values, data.weight);
                ps.sd = std::sqrt(weighted_var(cov.values, data.weight));
                if (ps.sd == 0.0) ps.sd = 1.0;
                if (slot < poly_scales_.size())
                    poly_scales_[slot] = ps;
                else
                    poly_scales_.push_back(ps);
            }
            const PolyScale& ps = poly_scales_.at(slot);
            Eigen::MatrixXd m(n, term.degree);
            for (Eigen::Index i = 0; i < n; ++i) {
                double z = (cov.values[static_cast<std::size_t>(i)] - ps.mean) / ps.sd;
                double acc = 1.0;
                for (int d = 0; d < term.degree; ++d) {
                    acc *= z;
                    m(i, d) = acc;
                }
            }
            for (int d = 1; d <= term.degree; ++d)
                names.push_back(term.column + "^" + std::to_string(d));
            return m;
        }
        case TermKind::Bins: {
            const Covariate& cov = data.covariate(term.column);
            if (cov.type != ColumnType::Continuous)
                throw validation_error("bins(" + term.column + "): column is not continuous");
            if (term.cuts.empty() || !std::is_sorted(term.cuts.begin(), term.cuts.end()))
                throw validation_error("bins(" + term.column + "): need increasing cut-points");
            std::size_t k = term.cuts.size() + 1;
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(k - 1));
            for (Eigen::Index i = 0; i < n; ++i) {
                int b = bin_of(cov.values[static_cast<std::size_t>(i)], term.cuts);
                if (b > 0) m(i, b - 1) = 1.0;
            }
            for (std::size_t b = 1; b < k; ++b)
                names.push_back(term.column + "=" + bin_label(term.cuts, b));
            return m;
        }
        case TermKind::Coarse: {
            const VariableBlock& blk = find_block(blocks_, term.block);
            CoarseCodec codec = coarsen_column(data, term.column, blk.coarsening);
            std::size_t k = codec.labels.size();
            if (k < 2) {
                names.push_back(term.column + "~" + term.block + "=" + codec.labels.at(0));
                return Eigen::MatrixXd::Zero(n, 1);  // single coarse level, dropped as constant
            }
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(k - 1));
            for (Eigen::Index i = 0; i < n; ++i) {
                int code = codec.codes[static_cast<std::size_t>(i)];
                if (code > 0) m(i, code - 1) = 1.0;
            }
            for (std::size_t lvl = 1; lvl < k; ++lvl)
                names.push_back(term.column + "~" + term.block + "=" + codec.labels[lvl]);
            return m;
        }
        case TermKind::Interaction: {
            std::vector<std::string> left_names, right_names;
            Eigen::MatrixXd left =
                expand_term(term.parts[0], data, left_names, fitting, poly_slot);
            Eigen::MatrixXd right =
                expand_term(term.parts[1], data, right_names, fitting, poly_slot);
            Eigen::MatrixXd m(n, left.cols() * right.cols());
            Eigen::Index col = 0;
            for (Eigen::Index a = 0; a < left.cols(); ++a)
                for (Eigen::Index b = 0; b < right.cols(); ++b) {
                    m.col(col++) = left.col(a).cwiseProduct(right.col(b));
                    names.push_back(left_names[static_cast<std::size_t>(a)] + ":" +
                                    right_names[static_cast<std::size_t>(b)]);
                }
            return m;
        }
    }
    throw std::logic_error("unreachable term kind");
}

namespace {

std::uint64_t column_hash(const Eigen::MatrixXd& m, Eigen::Index col) {
    std::uint64_t h = 1469598103934665603ULL;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double v = m(i, col);
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h = (h ^ bits) * 1099511628211ULL;
    }
    return h;
}

}  // namespace

void DesignBuilder::fit(const Dataset& data) {
    poly_scales_.clear();
    kept_.clear();
    kept_names_.clear();
    notices_.clear();

    std::vector<std::string> names;
    std::vector<Eigen::MatrixXd> pieces;
    std::size_t poly_slot = 0;
    Eigen::Index total = 0;
    for (const auto& term : spec_.terms) {
        pieces.push_back(expand_term(term, data, names, true, poly_slot));
        total += pieces.back().cols();
    }
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(data.n_rows()), total);
    Eigen::Index at = 0;
    for (const auto& p : pieces) {
        raw.middleCols(at, p.cols()) = p;
        at += p.cols();
    }

    // Drop constants, then exact duplicates of an earlier kept column.
    std::map<std::uint64_t, std::vector<std::size_t>> by_hash;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        double mn = raw.col(j).minCoeff(), mx = raw.col(j).maxCoeff();
        if (mn == mx) {
            notices_.push_back("dropped constant column '" + names[sj] + "'");
            continue;
        }
        bool dup = false;
        std::uint64_t h = column_hash(raw, j);
        for (std::size_t k : by_hash[h]) {
            if (raw.col(static_cast<Eigen::Index>(k)) == raw.col(j)) {
                notices_.push_back("dropped duplicate column '" + names[sj] + "' (same as '" +
                                   names[k] + "')");
                dup = true;
                break;
            }
        }
        if (dup) continue;
        by_hash[h].push_back(sj);
        kept_.push_back(sj);
        kept_names_.push_back(names[sj]);
    }
    if (!spec_.terms.empty() && kept_.empty())
        throw validation_error("design matrix is empty after dropping degenerate columns");
    fitted_ = true;
}

DesignMatrix DesignBuilder::transform(const Dataset& data) const {
    if (!fitted_) throw std::logic_error("DesignBuilder::transform before fit");
    std::vector<std::string> names;
    std::vector<Eigen::MatrixXd> pieces;
    std::size_t poly_slot = 0;
    Eigen::Index total = 0;
    for (const auto& term : spec_.terms) {
        pieces.push_back(expand_term(term, data, names, false, poly_slot));
        total += pieces.back().cols();
    }
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(data.n_rows()), total);
    Eigen::Index at = 0;
    for (const auto& p : pieces) {
        raw.middleCols(at, p.cols()) = p;
        at += p.cols();
    }
    DesignMatrix out;
    out.values.resize(raw.rows(), static_cast<Eigen::Index>(kept_.size()));
    for (std::size_t j = 0; j < kept_.size(); ++j)
        out.values.col(static_cast<Eigen::Index>(j)) =
            raw.col(static_cast<Eigen::Index>(kept_[j]));
    out.names = kept_names_;
    out.notices = notices_;
    return out;
}

DesignMatrix DesignBuilder::fit_transform(const Dataset& data) {
    fit(data);
    return transform(data);
}

DesignMatrix build_design(const Dataset& data, const ModelSpec& spec,
                          const std::vector<VariableBlock>& blocks) {
    DesignBuilder builder(spec, blocks);
    return builder.fit_transform(data);
}

}  // namespace paygap
