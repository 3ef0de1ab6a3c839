#include "paygap/dgp.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "paygap/config.hpp"
#include "paygap/linmod.hpp"

namespace paygap {

std::string DgpCovariate::level_label(int k) const {
    if (continuous) return fmt_num(values.at(static_cast<std::size_t>(k)));
    return levels.at(static_cast<std::size_t>(k));
}

namespace {

bool next_cell(std::vector<int>& cell, const std::vector<int>& dims) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (++cell[k] < dims[k]) return true;
        cell[k] = 0;
    }
    return false;
}

double sum_effects(const std::vector<int>& cell, const std::vector<std::vector<double>>& effects,
                   const std::vector<DgpInteraction>& interactions) {
    double s = 0.0;
    for (std::size_t k = 0; k < effects.size() && k < cell.size(); ++k) {
        if (effects[k].empty()) continue;
        s += effects[k].at(static_cast<std::size_t>(cell[k]));
    }
    for (const auto& inter : interactions) {
        s += inter.effects.at(static_cast<std::size_t>(cell[static_cast<std::size_t>(inter.cov_a)]))
                 .at(static_cast<std::size_t>(cell[static_cast<std::size_t>(inter.cov_b)]));
    }
    return s;
}

}  // namespace

double DgpConfig::propensity_at(const std::vector<int>& cell) const {
    for (const auto& [cov, lvl] : focal_only_levels)
        if (cell[static_cast<std::size_t>(cov)] == lvl) return 1.0;
    return logistic(prop_intercept + sum_effects(cell, prop_effects, prop_interactions));
}

double DgpConfig::mu0_at(const std::vector<int>& cell) const {
    return mu0_intercept + sum_effects(cell, mu0_effects, mu0_interactions);
}

double DgpConfig::gap_at(const std::vector<int>& cell) const {
    return gap_base + sum_effects(cell, gap_effects, gap_interactions);
}

void DgpConfig::validate() const {
    if (covariates.empty()) throw validation_error("dgp: no covariates");
    if (n == 0) throw validation_error("dgp: n must be positive");
    if (!(noise_sd >= 0.0)) throw validation_error("dgp: noise_sd must be >= 0");
    if (!(weight_low > 0.0) || weight_high < weight_low)
        throw validation_error("dgp: weights need 0 < low <= high");
    for (const auto& cov : covariates) {
        if (cov.n_levels() < 1) throw validation_error("dgp covariate '" + cov.name + "': empty");
        if (cov.probs.size() != static_cast<std::size_t>(cov.n_levels()))
            throw validation_error("dgp covariate '" + cov.name + "': probs size mismatch");
        double total = 0.0;
        for (double p : cov.probs) {
            if (!(p >= 0.0)) throw validation_error("dgp covariate '" + cov.name + "': bad prob");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw validation_error("dgp covariate '" + cov.name + "': probs must sum to 1");
    }
    auto check_effects = [&](const std::vector<std::vector<double>>& eff, const char* what) {
        if (eff.size() > covariates.size())
            throw validation_error(std::string("dgp: too many ") + what + " effect vectors");
        for (std::size_t k = 0; k < eff.size(); ++k)
            if (!eff[k].empty() &&
                eff[k].size() != static_cast<std::size_t>(covariates[k].n_levels()))
                throw validation_error(std::string("dgp: ") + what + " effects for '" +
                                       covariates[k].name + "' have wrong length");
    };
    check_effects(prop_effects, "propensity");
    check_effects(mu0_effects, "mu0");
    check_effects(gap_effects, "gap");
    auto check_inter = [&](const std::vector<DgpInteraction>& inters, const char* what) {
        for (const auto& it : inters) {
            if (it.cov_a < 0 || it.cov_b < 0 ||
                it.cov_a >= static_cast<int>(covariates.size()) ||
                it.cov_b >= static_cast<int>(covariates.size()))
                throw validation_error(std::string("dgp: ") + what +
                                       " interaction references unknown covariate");
            if (it.effects.size() !=
                static_cast<std::size_t>(covariates[static_cast<std::size_t>(it.cov_a)].n_levels()))
                throw validation_error(std::string("dgp: ") + what +
                                       " interaction matrix has wrong row count");
            for (const auto& row : it.effects)
                if (row.size() !=
                    static_cast<std::size_t>(
                        covariates[static_cast<std::size_t>(it.cov_b)].n_levels()))
                    throw validation_error(std::string("dgp: ") + what +
                                           " interaction matrix has wrong column count");
        }
    };
    check_inter(prop_interactions, "propensity");
    check_inter(mu0_interactions, "mu0");
    check_inter(gap_interactions, "gap");
    for (const auto& [cov, lvl] : focal_only_levels) {
        if (cov < 0 || cov >= static_cast<int>(covariates.size()) || lvl < 0 ||
            lvl >= covariates[static_cast<std::size_t>(cov)].n_levels())
            throw validation_error("dgp: focal_only references unknown covariate level");
    }

    // Feasibility over the lattice: propensity strictly inside (0,1) except
    // for declared focal-only cells, and positive mass for both groups.
    std::vector<int> dims;
    for (const auto& cov : covariates) dims.push_back(cov.n_levels());
    std::vector<int> cell(dims.size(), 0);
    double mass0 = 0.0, mass1 = 0.0;
    do {
        double prob = 1.0;
        for (std::size_t k = 0; k < dims.size(); ++k)
            prob *= covariates[k].probs[static_cast<std::size_t>(cell[k])];
        double p = propensity_at(cell);
        if (!(p > 0.0 && p <= 1.0))
            throw validation_error("dgp: propensity outside (0,1] on the lattice");
        bool focal_only = p == 1.0;
        bool declared = false;
        for (const auto& [cov, lvl] : focal_only_levels)
            declared |= cell[static_cast<std::size_t>(cov)] == lvl;
        if (focal_only && !declared)
            throw validation_error("dgp: undeclared unit propensity on the lattice");
        mass1 += prob * p;
        mass0 += prob * (1.0 - p);
    } while (next_cell(cell, dims));
    if (mass0 <= 0.0 || mass1 <= 0.0)
        throw validation_error("dgp: a group has zero population mass");
}

DgpTruth dgp_truth(const DgpConfig& config) {
    config.validate();
    std::vector<int> dims;
    for (const auto& cov : config.covariates) dims.push_back(cov.n_levels());
    DgpTruth truth;
    double w1 = 0.0, w0 = 0.0, wy1 = 0.0, wy0 = 0.0, wgap = 0.0;
    std::vector<int> cell(dims.size(), 0);
    do {
        double prob = 1.0;
        for (std::size_t k = 0; k < dims.size(); ++k)
            prob *= config.covariates[k].probs[static_cast<std::size_t>(cell[k])];
        if (prob == 0.0) continue;
        double p = config.propensity_at(cell);
        double mu = config.mu0_at(cell);
        double gap = config.gap_at(cell);
        w1 += prob * p;
        wy1 += prob * p * (mu + gap);
        wgap += prob * p * gap;
        w0 += prob * (1.0 - p);
        wy0 += prob * (1.0 - p) * mu;
    } while (next_cell(cell, dims));
    truth.focal_share = w1;
    truth.raw_gap = wy1 / w1 - wy0 / w0;
    truth.unexplained_gap = wgap / w1;
    truth.explained_gap = truth.raw_gap - truth.unexplained_gap;
    for (const auto& point : dgp_population_curve(config))
        truth.support_share_by_prefix.push_back(point.share);
    return truth;
}

std::vector<DgpCurvePoint> dgp_population_curve(const DgpConfig& config) {
    std::vector<int> dims;
    for (const auto& cov : config.covariates) dims.push_back(cov.n_levels());
    std::vector<DgpCurvePoint> curve;
    for (std::size_t K = 1; K <= dims.size(); ++K) {
        struct Mass {
            double w0 = 0.0, w1 = 0.0, wy0 = 0.0, wy1 = 0.0;
        };
        std::map<std::vector<int>, Mass> prefix;
        double w1_all = 0.0, wy1_all = 0.0;
        std::vector<int> cell(dims.size(), 0);
        do {
            double prob = 1.0;
            for (std::size_t k = 0; k < dims.size(); ++k)
                prob *= config.covariates[k].probs[static_cast<std::size_t>(cell[k])];
            if (prob == 0.0) continue;
            double p = config.propensity_at(cell);
            double mu = config.mu0_at(cell);
            double gap = config.gap_at(cell);
            std::vector<int> key(cell.begin(), cell.begin() + static_cast<long>(K));
            Mass& m = prefix[key];
            m.w1 += prob * p;
            m.wy1 += prob * p * (mu + gap);
            m.w0 += prob * (1.0 - p);
            m.wy0 += prob * (1.0 - p) * mu;
            w1_all += prob * p;
            wy1_all += prob * p * (mu + gap);
        } while (next_cell(cell, dims));

        DgpCurvePoint point;
        double w1_on = 0.0, wy1_on = 0.0, w0_on = 0.0, wy0_on = 0.0, exm = 0.0;
        for (const auto& [key, m] : prefix) {
            if (m.w0 <= 0.0 || m.w1 <= 0.0) continue;
            w1_on += m.w1;
            wy1_on += m.wy1;
            w0_on += m.w0;
            wy0_on += m.wy0;
            exm += m.w1 * (m.wy1 / m.w1 - m.wy0 / m.w0);
        }
        point.share = w1_on / w1_all;
        if (w1_on > 0.0 && w0_on > 0.0) {
            point.gap_on_support = wy1_on / w1_on - wy0_on / w0_on;
            point.exm_unexplained = exm / w1_on;
            double w1_off = w1_all - w1_on;
            point.out_of_support_focal =
                w1_off > 0.0
                    ? (w1_off / w1_all) * ((wy1_all - wy1_on) / w1_off - wy1_on / w1_on)
                    : 0.0;
        }
        curve.push_back(point);
    }
    return curve;
}

DgpDraw generate(const DgpConfig& config) {
    config.validate();
    DgpDraw draw;
    draw.truth = dgp_truth(config);

    Schema& schema = draw.schema;
    schema.columns.push_back({"female", ColumnRole::Group, ColumnType::Continuous, {}});
    schema.columns.push_back({"logwage", ColumnRole::Outcome, ColumnType::Continuous, {}});
    schema.columns.push_back({"sweight", ColumnRole::Weight, ColumnType::Continuous, {}});
    for (const auto& cov : config.covariates) {
        SchemaColumn col;
        col.name = cov.name;
        col.role = ColumnRole::Covariate;
        col.type = cov.continuous ? ColumnType::Continuous : ColumnType::Categorical;
        col.levels = cov.levels;
        schema.columns.push_back(std::move(col));
    }

    Dataset& data = draw.data;
    for (const auto& cov : config.covariates) {
        Covariate c;
        c.name = cov.name;
        c.type = cov.continuous ? ColumnType::Continuous : ColumnType::Categorical;
        c.levels = cov.levels;
        data.covariates.push_back(std::move(c));
    }

    Rng rng(config.seed);
    std::vector<int> cell(config.covariates.size());
    for (std::size_t i = 0; i < config.n; ++i) {
        for (std::size_t k = 0; k < config.covariates.size(); ++k)
            cell[k] = rng.pick_level(config.covariates[k].probs);
        double p = config.propensity_at(cell);
        int g = rng.uniform() < p ? 1 : 0;
        double y = config.mu0_at(cell) + (g ? config.gap_at(cell) : 0.0) +
                   config.noise_sd * rng.normal();
        double w = config.weight_low +
                   (config.weight_high - config.weight_low) * rng.uniform();
        data.group.push_back(g);
        data.outcome.push_back(y);
        data.weight.push_back(w);
        for (std::size_t k = 0; k < config.covariates.size(); ++k) {
            if (config.covariates[k].continuous)
                data.covariates[k].values.push_back(
                    config.covariates[k].values[static_cast<std::size_t>(cell[k])]);
            else
                data.covariates[k].codes.push_back(cell[k]);
        }
    }
    data.validate();
    return draw;
}

std::vector<VariableBlock> dgp_blocks(const DgpConfig& config) {
    std::vector<VariableBlock> blocks;
    for (const auto& cov : config.covariates) {
        VariableBlock blk;
        blk.name = cov.name;
        blk.columns.push_back(cov.name);
        if (cov.continuous) {
            // Midpoint cuts keep every support point in its own bin.
            std::vector<double> cuts;
            for (std::size_t k = 1; k < cov.values.size(); ++k)
                cuts.push_back(0.5 * (cov.values[k - 1] + cov.values[k]));
            blk.coarsening.cuts[cov.name] = cuts;
        }
        blocks.push_back(std::move(blk));
    }
    return blocks;
}

// ----------------------------------------------------------- serialization

namespace {

std::string join_nums(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt_num(v[i]);
    }
    return out;
}

std::string join_strs(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += v[i];
    }
    return out;
}

std::vector<double> parse_nums(const std::string& s) {
    std::vector<double> out;
    for (auto& item : split_string(s, ',')) {
        std::string t = trim_string(item);
        if (!t.empty()) out.push_back(std::stod(t));
    }
    return out;
}

std::string matrix_to_string(const std::vector<std::vector<double>>& m) {
    std::string out;
    for (std::size_t r = 0; r < m.size(); ++r) {
        if (r) out += ";";
        for (std::size_t c = 0; c < m[r].size(); ++c) {
            if (c) out += " ";
            out += fmt_num(m[r][c]);
        }
    }
    return out;
}

std::vector<std::vector<double>> parse_matrix(const std::string& s) {
    std::vector<std::vector<double>> out;
    for (auto& row : split_string(s, ';')) {
        std::vector<double> r;
        std::istringstream in(trim_string(row));
        double v;
        while (in >> v) r.push_back(v);
        out.push_back(std::move(r));
    }
    return out;
}

void write_interactions(KeyValue& kv, const std::string& target,
                        const std::vector<DgpInteraction>& inters, const DgpConfig& config) {
    for (std::size_t k = 0; k < inters.size(); ++k) {
        const auto& it = inters[k];
        kv.set("dgp.inter." + target + "." + std::to_string(k + 1),
               config.covariates[static_cast<std::size_t>(it.cov_a)].name + "," +
                   config.covariates[static_cast<std::size_t>(it.cov_b)].name + ":" +
                   matrix_to_string(it.effects));
    }
}

int covariate_index_of(const DgpConfig& config, const std::string& name) {
    for (std::size_t k = 0; k < config.covariates.size(); ++k)
        if (config.covariates[k].name == name) return static_cast<int>(k);
    throw validation_error("dgp config: unknown covariate '" + name + "'");
}

std::vector<DgpInteraction> read_interactions(const KeyValue& kv, const std::string& target,
                                              const DgpConfig& config) {
    std::vector<DgpInteraction> out;
    for (const auto& key : kv.keys_with_prefix("dgp.inter." + target + ".")) {
        std::string value = kv.get(key);
        std::size_t colon = value.find(':');
        if (colon == std::string::npos)
            throw validation_error("dgp config: bad interaction '" + key + "'");
        auto names = split_string(value.substr(0, colon), ',');
        if (names.size() != 2)
            throw validation_error("dgp config: interaction needs two covariates in '" + key +
                                   "'");
        DgpInteraction it;
        it.cov_a = covariate_index_of(config, trim_string(names[0]));
        it.cov_b = covariate_index_of(config, trim_string(names[1]));
        it.effects = parse_matrix(value.substr(colon + 1));
        out.push_back(std::move(it));
    }
    return out;
}

}  // namespace

std::string DgpConfig::to_kv() const {
    KeyValue kv;
    kv.set("dgp.n", std::to_string(n));
    kv.set("dgp.seed", std::to_string(seed));
    kv.set("dgp.noise_sd", fmt_num(noise_sd));
    kv.set("dgp.weight_low", fmt_num(weight_low));
    kv.set("dgp.weight_high", fmt_num(weight_high));
    kv.set("dgp.prop_intercept", fmt_num(prop_intercept));
    kv.set("dgp.mu0_intercept", fmt_num(mu0_intercept));
    kv.set("dgp.gap_base", fmt_num(gap_base));
    for (std::size_t k = 0; k < covariates.size(); ++k) {
        const auto& cov = covariates[k];
        std::string prefix = "dgp.cov." + std::to_string(k + 1);
        kv.set(prefix + ".name", cov.name);
        kv.set(prefix + ".type", cov.continuous ? "continuous" : "categorical");
        if (cov.continuous)
            kv.set(prefix + ".values", join_nums(cov.values));
        else
            kv.set(prefix + ".levels", join_strs(cov.levels));
        kv.set(prefix + ".probs", join_nums(cov.probs));
        if (k < prop_effects.size() && !prop_effects[k].empty())
            kv.set(prefix + ".prop", join_nums(prop_effects[k]));
        if (k < mu0_effects.size() && !mu0_effects[k].empty())
            kv.set(prefix + ".mu0", join_nums(mu0_effects[k]));
        if (k < gap_effects.size() && !gap_effects[k].empty())
            kv.set(prefix + ".gap", join_nums(gap_effects[k]));
    }
    if (!focal_only_levels.empty()) {
        std::string v;
        for (std::size_t k = 0; k < focal_only_levels.size(); ++k) {
            if (k) v += ",";
            const auto& [cov, lvl] = focal_only_levels[k];
            v += covariates[static_cast<std::size_t>(cov)].name + ":" +
                 covariates[static_cast<std::size_t>(cov)].level_label(lvl);
        }
        kv.set("dgp.focal_only", v);
    }
    write_interactions(kv, "prop", prop_interactions, *this);
    write_interactions(kv, "mu0", mu0_interactions, *this);
    write_interactions(kv, "gap", gap_interactions, *this);
    return kv.to_string();
}

DgpConfig DgpConfig::parse_kv(const std::string& text) {
    KeyValue kv = KeyValue::parse(text);
    DgpConfig config;
    config.n = static_cast<std::size_t>(kv.get_long("dgp.n", 1000));
    config.seed = static_cast<std::uint64_t>(kv.get_long("dgp.seed", 1));
    config.noise_sd = kv.get_double("dgp.noise_sd", 0.1);
    config.weight_low = kv.get_double("dgp.weight_low", 1.0);
    config.weight_high = kv.get_double("dgp.weight_high", 1.0);
    config.prop_intercept = kv.get_double("dgp.prop_intercept", 0.0);
    config.mu0_intercept = kv.get_double("dgp.mu0_intercept", 0.0);
    config.gap_base = kv.get_double("dgp.gap_base", 0.0);
    for (int k = 1;; ++k) {
        std::string prefix = "dgp.cov." + std::to_string(k);
        if (!kv.has(prefix + ".name")) break;
        DgpCovariate cov;
        cov.name = kv.get(prefix + ".name");
        cov.continuous = kv.get(prefix + ".type", "categorical") == "continuous";
        if (cov.continuous)
            cov.values = parse_nums(kv.get(prefix + ".values"));
        else
            cov.levels = kv.get_list(prefix + ".levels");
        cov.probs = parse_nums(kv.get(prefix + ".probs"));
        config.covariates.push_back(cov);
        config.prop_effects.push_back(parse_nums(kv.get(prefix + ".prop", "")));
        config.mu0_effects.push_back(parse_nums(kv.get(prefix + ".mu0", "")));
        config.gap_effects.push_back(parse_nums(kv.get(prefix + ".gap", "")));
    }
    if (kv.has("dgp.focal_only")) {
        for (auto& item : kv.get_list("dgp.focal_only")) {
            auto parts = split_string(item, ':');
            if (parts.size() != 2)
                throw validation_error("dgp config: focal_only expects 'covariate:level'");
            int cov = covariate_index_of(config, trim_string(parts[0]));
            const DgpCovariate& c = config.covariates[static_cast<std::size_t>(cov)];
            int lvl = -1;
            for (int l = 0; l < c.n_levels(); ++l)
                if (c.level_label(l) == trim_string(parts[1])) lvl = l;
            if (lvl < 0)
                throw validation_error("dgp config: focal_only level '" + parts[1] +
                                       "' not found in '" + c.name + "'");
            config.focal_only_levels.emplace_back(cov, lvl);
        }
    }
    config.prop_interactions = read_interactions(kv, "prop", config);
    config.mu0_interactions = read_interactions(kv, "mu0", config);
    config.gap_interactions = read_interactions(kv, "gap", config);
    config.validate();
    return config;
}

// ------------------------------------------------------------ paper shapes

namespace {

void add_covariate(DgpConfig& config, const std::string& name,
                   const std::vector<std::string>& levels, const std::vector<double>& probs,
                   std::vector<double> prop, std::vector<double> mu0, bool focal_only_last) {
    DgpCovariate cov;
    cov.name = name;
    cov.levels = levels;
    cov.probs = probs;
    if (focal_only_last)
        config.focal_only_levels.emplace_back(static_cast<int>(config.covariates.size()),
                                              static_cast<int>(levels.size() - 1));
    config.covariates.push_back(cov);
    config.prop_effects.push_back(std::move(prop));
    config.mu0_effects.push_back(std::move(mu0));
    config.gap_effects.push_back({});
}

// Re-solves each focal-only level's wage effect so that, in the focal
// population, rows at that level earn exactly `shift` more than rows away
// from it (shift 0 keeps the raw gap flat under support enforcement; a
// negative shift concentrates the raw gap in the out-of-support component).
// Effects of other focal-only levels enter the conditional means, so a few
// sweeps settle the joint solution.
void calibrate_focal_levels(DgpConfig& config, const std::vector<double>& shifts) {
    std::vector<int> dims;
    for (const auto& cov : config.covariates) dims.push_back(cov.n_levels());
    for (int sweep = 0; sweep < 6; ++sweep) {
        for (std::size_t f = 0; f < config.focal_only_levels.size(); ++f) {
            const auto [covk, wo] = config.focal_only_levels[f];
            const auto k = static_cast<std::size_t>(covk);
            // Focal-conditional expectations of mu0 minus covariate k's own
            // effect, split by whether covariate k sits at the focal-only
            // level, plus the own-effect mean away from it.
            double mass_wo = 0.0, mass_not = 0.0;
            double rest_wo = 0.0, rest_not = 0.0, own_not = 0.0;
            std::vector<int> cell(dims.size(), 0);
            do {
                double prob = 1.0;
                for (std::size_t m = 0; m < dims.size(); ++m)
                    prob *= config.covariates[m].probs[static_cast<std::size_t>(cell[m])];
                if (prob == 0.0) continue;
                double w = prob * config.propensity_at(cell);
                double own = config.mu0_effects[k].empty()
                                 ? 0.0
                                 : config.mu0_effects[k][static_cast<std::size_t>(cell[k])];
                double rest = config.mu0_at(cell) - own;
                if (cell[k] == wo) {
                    mass_wo += w;
                    rest_wo += w * rest;
                } else {
                    mass_not += w;
                    rest_not += w * rest;
                    own_not += w * own;
                }
            } while (next_cell(cell, dims));
            if (mass_wo <= 0.0 || mass_not <= 0.0) continue;
            config.mu0_effects[k][static_cast<std::size_t>(wo)] =
                own_not / mass_not + rest_not / mass_not - rest_wo / mass_wo + shifts[f];
        }
    }
}

}  // namespace

DgpConfig paper_shape_dgp(const std::string& sector) {
    DgpConfig config;
    config.n = 100000;
    config.seed = 1;
    config.noise_sd = 0.25;
    config.weight_low = 0.5;
    config.weight_high = 1.5;
    config.mu0_intercept = 8.7;  // log standardized monthly wage scale

    if (sector == "private") {
        config.prop_intercept = -1.30;
        // Five wage-determinant blocks in decreasing importance. The last
        // level of each non-leading covariate is focal-only and calibrated
        // wage-neutral, so support decays while the raw gap stays flat.
        add_covariate(config, "mgmt", {"none", "mid", "top"}, {0.72, 0.18, 0.10},
                      {0.65, -0.55, -1.30}, {0.00, 0.245, 0.52}, false);
        add_covariate(config, "educ", {"voc", "hi", "uni", "wo"}, {0.48, 0.29, 0.19, 0.04},
                      {0.40, 0.00, -0.60, 0.0}, {0.00, 0.125, 0.28, 0.0}, true);
        add_covariate(config, "occ", {"svc", "tech", "prof", "wo"}, {0.36, 0.29, 0.25, 0.10},
                      {0.55, -0.20, -0.60, 0.0}, {0.00, 0.08, 0.145, 0.0}, true);
        add_covariate(config, "ind", {"a", "b", "c", "wo"}, {0.32, 0.30, 0.22, 0.16},
                      {0.50, -0.15, -0.60, 0.0}, {0.00, 0.07, 0.125, 0.0}, true);
        add_covariate(config, "esize", {"s", "m", "l", "wo"}, {0.26, 0.29, 0.24, 0.21},
                      {0.45, 0.00, -0.50, 0.0}, {0.00, 0.045, 0.10, 0.0}, true);
        calibrate_focal_levels(config, {0.0, 0.0, 0.0, 0.0});
        config.gap_base = -0.042;
        DgpTruth truth = dgp_truth(config);
        config.gap_base += -0.186 - truth.raw_gap;  // pin the raw gap exactly
        return config;
    }
    if (sector == "public") {
        config.prop_intercept = -0.90;
        // Focal-only levels sit in clearly lower-paid cells: lack of support
        // itself carries a large share of the raw gap.
        add_covariate(config, "occ", {"adm", "teach", "health"}, {0.40, 0.35, 0.25},
                      {-0.35, 0.25, 0.75}, {0.00, 0.05, -0.02}, false);
        add_covariate(config, "educ", {"voc", "uni", "wo"}, {0.55, 0.37, 0.08},
                      {0.25, -0.30, 0.0}, {0.00, 0.07, 0.0}, true);
        add_covariate(config, "mgmt", {"none", "mid", "top", "wo"}, {0.58, 0.18, 0.08, 0.16},
                      {0.30, -0.35, -0.95, 0.0}, {0.00, 0.05, 0.11, 0.0}, true);
        add_covariate(config, "ind", {"a", "b", "wo"}, {0.55, 0.31, 0.14},
                      {0.06, -0.06, 0.0}, {0.00, 0.01, 0.0}, true);
        calibrate_focal_levels(config, {-0.15, -0.13, -0.08});
        config.gap_base = -0.035;
        DgpTruth truth = dgp_truth(config);
        config.gap_base += -0.139 - truth.raw_gap;
        return config;
    }
    throw validation_error("paper_shape_dgp: sector must be 'private' or 'public'");
}

}  // namespace paygap
