#pragma once

#include <string>
#include <utility>
#include <vector>

#include "paygap/estimators.hpp"

namespace paygap {

// Flat "key = value" file with '#' comments. Declaration order is preserved
// so block and support declarations keep their file order.
struct KeyValue {
    std::vector<std::pair<std::string, std::string>> entries;

    static KeyValue parse(const std::string& text);
    static KeyValue load(const std::string& path);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    std::string require(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma separated
    // Keys starting with the prefix, in declaration order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
    void set(const std::string& key, const std::string& value);
    std::string to_string() const;
};

// Term DSL used in model.* config values, e.g.
//   dummy(occ) poly(age,7) bins(tenure,2,5,8,16) inter(dummy(occ),dummy(edu))
//   coarse(occblk,occ)
std::vector<Term> parse_terms(const std::string& text);

struct BenchmarkRef {
    EstimatorKind estimator = EstimatorKind::BO;
    Regime regime = Regime::Baseline;
    std::string support_id;
};

enum class SupportOrder { DeltaR2, Given, Increasing, Random };

// Everything the command-line front end reads from the run configuration.
struct RunConfig {
    std::uint64_t seed = 1;
    ModelSpec baseline, full;
    std::vector<VariableBlock> blocks;         // declaration order
    std::vector<SupportDefinition> supports;   // support.<id> entries
    std::vector<std::string> grid_supports;    // ids into supports
    std::vector<EstimatorKind> grid_estimators;
    std::vector<Regime> grid_regimes;
    BenchmarkRef benchmark;
    bool has_benchmark = false;
    double trim_quantile = 0.995;
    double radius_quantile = 0.99;
    int aipw_folds = 2;
    LassoParams lasso;
    int bootstrap_B = 200;
    bool bootstrap_fast_ml = false;
    SupportOrder support_order = SupportOrder::DeltaR2;
    std::vector<std::string> support_order_blocks;  // for order=given
    std::string psm_exact_support;                  // support id; empty = first grid support

    static RunConfig from_kv(const KeyValue& kv);

    EstimationContext make_context() const;
    GridSpec make_grid() const;
    const SupportDefinition& find_support(const std::string& id) const;
};

}  // namespace paygap
