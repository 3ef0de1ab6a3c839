// Batch front end: ingest data + schema + run-config, run the support
// analysis and the estimation grid, emit CSV and text reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "paygap/config.hpp"
#include "paygap/dgp.hpp"
#include "paygap/inference.hpp"

namespace fs = std::filesystem;
using namespace paygap;

namespace {

struct CommonArgs {
    std::string data_path, schema_path, config_path, out_dir;
    long seed = -1;  // -1: keep the config seed
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--data", args.data_path, "CSV data file")->required();
    cmd->add_option("--schema", args.schema_path, "schema file")->required();
    cmd->add_option("--config", args.config_path, "run configuration file")->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--threads", args.threads, "worker threads for the bootstrap");
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw validation_error("cannot write output file " + name + " in " + dir);
    return out;
}

RunConfig load_run_config(const CommonArgs& args) {
    RunConfig rc = RunConfig::from_kv(KeyValue::load(args.config_path));
    if (args.seed >= 0) rc.seed = static_cast<std::uint64_t>(args.seed);
    return rc;
}

std::vector<VariableBlock> ordered_blocks_for(const RunConfig& rc, const Dataset& data) {
    std::vector<std::string> names;
    switch (rc.support_order) {
        case SupportOrder::Given: {
            names = rc.support_order_blocks;
            if (names.empty())
                for (const auto& b : rc.blocks) names.push_back(b.name);
            break;
        }
        case SupportOrder::Random: {
            for (const auto& b : rc.blocks) names.push_back(b.name);
            Rng rng(mix_seed(rc.seed, 0x0d0e));
            rng.shuffle(names);
            break;
        }
        case SupportOrder::DeltaR2:
        case SupportOrder::Increasing: {
            auto ranks = rank_variable_blocks(data, rc.blocks, rc.baseline);
            for (const auto& r : ranks) names.push_back(r.block);
            if (rc.support_order == SupportOrder::Increasing)
                std::reverse(names.begin(), names.end());
            break;
        }
    }
    std::vector<VariableBlock> out;
    for (const auto& n : names) out.push_back(find_block(rc.blocks, n));
    return out;
}

int cmd_support(const CommonArgs& args) {
    RunConfig rc = load_run_config(args);
    Schema schema = Schema::load(args.schema_path);
    Dataset data = load_dataset(args.data_path, schema);

    std::vector<VariableBlock> ordered = ordered_blocks_for(rc, data);
    if (rc.support_order == SupportOrder::DeltaR2 ||
        rc.support_order == SupportOrder::Increasing) {
        auto ranks = rank_variable_blocks(data, rc.blocks, rc.baseline);
        auto out = open_out(args.out_dir, "block_ranking.csv");
        out << "block,delta_adj_r2\n";
        for (const auto& r : ranks) out << r.block << "," << fmt_num(r.delta_r2) << "\n";
    }
    SupportReport report = sequential_support_analysis(data, ordered);
    {
        auto out = open_out(args.out_dir, "support_curve.csv");
        report.write_csv(out);
    }
    {
        auto out = open_out(args.out_dir, "support_summary.txt");
        report.write_text(out);
    }
    std::cout << "support analysis written to " << args.out_dir << "\n";
    return 0;
}

std::string diag_string(const std::map<std::string, double>& diag) {
    std::string out;
    for (const auto& [k, v] : diag) {
        if (!out.empty()) out += ";";
        out += k + "=" + fmt_num(v);
    }
    return out;
}

int cmd_estimate(const CommonArgs& args) {
    RunConfig rc = load_run_config(args);
    Schema schema = Schema::load(args.schema_path);
    Dataset data = load_dataset(args.data_path, schema);

    EstimationContext ctx = rc.make_context();
    GridSpec grid = rc.make_grid();
    GridOptions options;
    options.bootstrap_B = rc.bootstrap_B;
    options.ml_fast_bootstrap = rc.bootstrap_fast_ml;
    options.threads = args.threads;

    std::vector<GapEstimate> results = run_grid(data, ctx, grid, options);

    const GapEstimate* bench = nullptr;
    if (rc.has_benchmark) {
        for (const auto& r : results) {
            if (!r.failed && r.estimator == rc.benchmark.estimator &&
                r.regime == rc.benchmark.regime && r.support_id == rc.benchmark.support_id) {
                bench = &r;
                break;
            }
        }
    }

    {
        auto out = open_out(args.out_dir, "grid.csv");
        out << "estimator,regime,support,delta_hat,se,pct_gap,pct_diff_benchmark,"
               "n_women_used,n_men_used,n_trimmed,n_unmatched,seed,failed,error,"
               "diagnostics\n";
        for (const auto& r : results) {
            out << estimator_name(r.estimator) << "," << regime_name(r.regime) << ","
                << r.support_id << ",";
            if (r.failed) {
                out << ",,,,";
            } else {
                out << fmt_num(r.delta_hat) << "," << (std::isnan(r.se) ? "" : fmt_num(r.se))
                    << "," << fmt_num(100.0 * (std::exp(r.delta_hat) - 1.0)) << ",";
                if (bench && bench->delta_hat != 0.0)
                    out << fmt_num(100.0 * (r.delta_hat / bench->delta_hat - 1.0));
                out << ",";
            }
            out << r.n_women_used << "," << r.n_men_used << "," << r.n_trimmed << ","
                << r.n_unmatched << "," << r.seed << "," << (r.failed ? 1 : 0) << ","
                << r.error << "," << diag_string(r.diagnostics) << "\n";
        }
    }
    {
        auto out = open_out(args.out_dir, "grid.txt");
        out << "Unexplained gap estimates (log points; percent = 100*(exp(d)-1))\n";
        out << "support  estimator  regime    delta_hat      se   percent\n";
        for (const auto& r : results) {
            char buf[160];
            if (r.failed) {
                std::snprintf(buf, sizeof(buf), "%-8s %-10s %-9s FAILED: %s",
                              r.support_id.c_str(), estimator_name(r.estimator).c_str(),
                              regime_name(r.regime).c_str(), r.error.c_str());
            } else {
                std::snprintf(buf, sizeof(buf), "%-8s %-10s %-9s %9.4f %7.4f %9.2f",
                              r.support_id.c_str(), estimator_name(r.estimator).c_str(),
                              regime_name(r.regime).c_str(), r.delta_hat, r.se,
                              100.0 * (std::exp(r.delta_hat) - 1.0));
            }
            out << buf << "\n";
        }
    }

    std::size_t failed = 0;
    for (const auto& r : results) failed += r.failed;
    std::cout << results.size() - failed << " of " << results.size()
              << " grid cells estimated; results in " << args.out_dir << "\n";
    if (failed == results.size()) {
        std::cerr << "all grid cells failed\n";
        return 3;
    }
    return 0;
}

int cmd_diagnose(const CommonArgs& args) {
    RunConfig rc = load_run_config(args);
    Schema schema = Schema::load(args.schema_path);
    Dataset data = load_dataset(args.data_path, schema);
    EstimationContext ctx = rc.make_context();

    std::vector<Regime> regimes = rc.grid_regimes;
    if (regimes.empty()) regimes = {Regime::Baseline, Regime::Full, Regime::ML};

    {
        auto out = open_out(args.out_dir, "propensity_hist.csv");
        out << "regime,bin_low,bin_high,group,weight_share\n";
        const int bins = 20;
        for (Regime regime : regimes) {
            PropensityModel model =
                fit_propensity_model(data, ctx, regime, mix_seed(ctx.seed, 0xd1a6));
            Eigen::VectorXd phat = model.predict_on(data);
            std::vector<std::vector<double>> mass(2, std::vector<double>(bins, 0.0));
            double total[2] = {0.0, 0.0};
            for (std::size_t i = 0; i < data.n_rows(); ++i) {
                int b = std::min(bins - 1,
                                 static_cast<int>(phat(static_cast<Eigen::Index>(i)) * bins));
                mass[static_cast<std::size_t>(data.group[i])][static_cast<std::size_t>(b)] +=
                    data.weight[i];
                total[data.group[i]] += data.weight[i];
            }
            for (int g = 0; g <= 1; ++g)
                for (int b = 0; b < bins; ++b)
                    out << regime_name(regime) << "," << fmt_num(static_cast<double>(b) / bins)
                        << "," << fmt_num(static_cast<double>(b + 1) / bins) << "," << g << ","
                        << fmt_num(mass[static_cast<std::size_t>(g)][static_cast<std::size_t>(b)] /
                                   total[g])
                        << "\n";
        }
    }
    {
        auto out = open_out(args.out_dir, "selected_counts.csv");
        out << "model,n_candidates,n_selected\n";
        Dataset men = data.subset(data.rows_of_group(0));
        WageModel wage = fit_wage_model(men, ctx, Regime::ML, mix_seed(ctx.seed, 0xd1a7));
        out << "wage_ml," << wage.builder->column_names().size() << "," << wage.n_selected
            << "\n";
        PropensityModel prop =
            fit_propensity_model(data, ctx, Regime::ML, mix_seed(ctx.seed, 0xd1a8));
        out << "propensity_ml," << prop.builder->column_names().size() << "," << prop.n_selected
            << "\n";
        GapEstimate pds = estimate_pds(data, ctx);
        out << "pds_union," << wage.builder->column_names().size() << ","
            << fmt_num(pds.diagnostics.at("pds_selected_union")) << "\n";
    }
    {
        auto out = open_out(args.out_dir, "prediction_power.csv");
        out << "regime,model,metric,value\n";
        Dataset men = data.subset(data.rows_of_group(0));
        for (Regime regime : regimes) {
            double r2 = oos_prediction_power(men, ctx, regime, Family::Gaussian, 2,
                                             mix_seed(ctx.seed, 0xd1a9));
            out << regime_name(regime) << ",wage,oos_r2," << fmt_num(r2) << "\n";
            double ll = oos_prediction_power(data, ctx, regime, Family::Binomial, 2,
                                             mix_seed(ctx.seed, 0xd1aa));
            out << regime_name(regime) << ",propensity,oos_loglik," << fmt_num(ll) << "\n";
        }
    }
    std::cout << "diagnostics written to " << args.out_dir << "\n";
    return 0;
}

// Emits a ready-to-run configuration for generated data: one block per
// covariate, prefix support definitions, and simple baseline/full specs.
void write_generated_run_config(const DgpConfig& config, const std::string& path,
                                std::uint64_t seed) {
    KeyValue kv;
    kv.set("seed", std::to_string(seed));
    std::string baseline, full_extra;
    std::vector<std::string> cat_names;
    for (const auto& cov : config.covariates) {
        if (cov.continuous) {
            baseline += " poly(" + cov.name + ",2)";
            std::vector<double> cuts;
            for (std::size_t k = 1; k < cov.values.size(); ++k)
                cuts.push_back(0.5 * (cov.values[k - 1] + cov.values[k]));
            std::string bins = "bins(" + cov.name;
            for (double c : cuts) bins += "," + fmt_num(c);
            bins += ")";
            full_extra += " poly(" + cov.name + ",4) " + bins;
        } else {
            baseline += " dummy(" + cov.name + ")";
            cat_names.push_back(cov.name);
        }
    }
    for (std::size_t a = 0; a + 1 < cat_names.size() && a < 2; ++a)
        full_extra += " inter(dummy(" + cat_names[a] + "),dummy(" + cat_names[a + 1] + "))";
    kv.set("model.baseline", trim_string(baseline));
    kv.set("model.full", trim_string(baseline + full_extra));

    std::string all_blocks;
    for (const auto& blk : dgp_blocks(config)) {
        kv.set("block." + blk.name, blk.columns[0]);
        for (const auto& [col, cuts] : blk.coarsening.cuts) {
            std::string v;
            for (std::size_t k = 0; k < cuts.size(); ++k)
                v += (k ? "," : "") + fmt_num(cuts[k]);
            kv.set("block." + blk.name + ".cuts." + col, v);
        }
        if (!all_blocks.empty()) all_blocks += ",";
        all_blocks += blk.name;
    }
    auto block_names = split_string(all_blocks, ',');
    std::string prefix;
    for (std::size_t k = 0; k < block_names.size(); ++k) {
        prefix += (k ? "," : "") + block_names[k];
        kv.set("support." + std::to_string(k + 1), prefix);
    }
    kv.set("grid.supports", block_names.size() > 1 ? "1," + std::to_string(block_names.size())
                                                   : "1");
    kv.set("grid.estimators", "lrm,bo,ipw,aipw,exm,psm,expsm");
    kv.set("grid.regimes", "baseline,full,ml");
    kv.set("benchmark", "bo:baseline:1");
    kv.set("support.order", "given");
    kv.set("bootstrap.B", "100");
    kv.set("bootstrap.fast_ml", "true");

    std::ofstream out(path);
    out << kv.to_string();
}

int cmd_simulate(const std::string& sector, const std::string& dgp_config_path, long n,
                 long seed, const std::string& out_dir) {
    DgpConfig config;
    if (!dgp_config_path.empty()) {
        std::ifstream in(dgp_config_path);
        if (!in) throw validation_error("cannot open dgp config: " + dgp_config_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        config = DgpConfig::parse_kv(ss.str());
    } else {
        config = paper_shape_dgp(sector);
    }
    if (n > 0) config.n = static_cast<std::size_t>(n);
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);

    DgpDraw draw = generate(config);
    fs::create_directories(out_dir);
    write_dataset_csv(draw.data, draw.schema, (fs::path(out_dir) / "data.csv").string());
    {
        auto out = open_out(out_dir, "schema.txt");
        out << draw.schema.to_string();
    }
    {
        auto out = open_out(out_dir, "dgp.txt");
        out << config.to_kv();
    }
    {
        auto out = open_out(out_dir, "truth.txt");
        out << "raw_gap = " << fmt_num(draw.truth.raw_gap) << "\n";
        out << "unexplained_gap = " << fmt_num(draw.truth.unexplained_gap) << "\n";
        out << "explained_gap = " << fmt_num(draw.truth.explained_gap) << "\n";
        out << "focal_share = " << fmt_num(draw.truth.focal_share) << "\n";
        std::string shares;
        for (std::size_t k = 0; k < draw.truth.support_share_by_prefix.size(); ++k)
            shares += (k ? "," : "") + fmt_num(draw.truth.support_share_by_prefix[k]);
        out << "support_share_by_prefix = " << shares << "\n";
    }
    write_generated_run_config(config, (fs::path(out_dir) / "run_config.txt").string(),
                               config.seed);
    std::cout << "simulated " << config.n << " rows into " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gender pay gap decomposition engine"};
    app.require_subcommand(1);

    CommonArgs sup_args, est_args, diag_args;
    auto* sup = app.add_subcommand("support", "sequential common-support analysis");
    add_common(sup, sup_args);
    auto* est = app.add_subcommand("estimate", "estimation grid over supports/estimators/regimes");
    add_common(est, est_args);
    auto* diag = app.add_subcommand("diagnose", "nuisance-model diagnostics");
    add_common(diag, diag_args);

    std::string sim_sector = "private", sim_dgp_config, sim_out;
    long sim_n = -1, sim_seed = -1;
    auto* sim = app.add_subcommand("simulate", "generate synthetic data with known truth");
    sim->add_option("--sector", sim_sector, "private|public preset");
    sim->add_option("--dgp-config", sim_dgp_config, "custom dgp key-value config");
    sim->add_option("--n", sim_n, "number of rows");
    sim->add_option("--seed", sim_seed, "rng seed");
    sim->add_option("--out-dir", sim_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sup->parsed()) return cmd_support(sup_args);
        if (est->parsed()) return cmd_estimate(est_args);
        if (diag->parsed()) return cmd_diagnose(diag_args);
        if (sim->parsed()) return cmd_simulate(sim_sector, sim_dgp_config, sim_n, sim_seed, sim_out);
    } catch (const validation_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 3;
    }
    return 0;
}
