// Command line front end: the full pipeline plus one subcommand per analysis.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gwkit/csv.hpp"
#include "gwkit/esda.hpp"
#include "gwkit/global_regression.hpp"
#include "gwkit/gwr.hpp"
#include "gwkit/mgwr.hpp"
#include "gwkit/parallel.hpp"
#include "gwkit/pipeline.hpp"
#include "gwkit/report.hpp"
#include "gwkit/synth.hpp"
#include "gwkit/version.hpp"

namespace fs = std::filesystem;
using namespace gwkit;

namespace {

struct InputArgs {
    std::string path;
    std::string id = "id";
    std::string name;
    std::string u = "u";
    std::string v = "v";
    std::string y;
    std::string trips_before;
    std::string trips_after;
    std::vector<std::string> x;
    bool no_standardize = false;

    void add(CLI::App* cmd) {
        cmd->add_option("-i,--input", path, "CSV or GeoJSON input")->required();
        cmd->add_option("--id", id, "id column");
        cmd->add_option("--name", name, "name column");
        cmd->add_option("--u", u, "x coordinate column (empty: polygon centroid)");
        cmd->add_option("--v", v, "y coordinate column (empty: polygon centroid)");
        cmd->add_option("-y,--dependent", y, "dependent column");
        cmd->add_option("--trips-before", trips_before, "trip count column before");
        cmd->add_option("--trips-after", trips_after, "trip count column after");
        cmd->add_option("-x,--covariates", x, "covariate columns")->delimiter(',');
        cmd->add_flag("--no-standardize", no_standardize, "keep original units");
    }

    ObservationTable load() const {
        TableSchema s;
        s.id_column = id;
        if (!name.empty()) s.name_column = name;
        if (!u.empty()) s.u_column = u;
        if (!v.empty()) s.v_column = v;
        if (!y.empty()) {
            s.dependent_column = y;
            s.dependent_name = y;
        }
        if (!trips_before.empty()) s.trips_before_column = trips_before;
        if (!trips_after.empty()) s.trips_after_column = trips_after;
        if (!s.dependent_column && !(s.trips_before_column && s.trips_after_column))
            throw StageError("load", "give --dependent or both --trips-before and --trips-after");
        s.covariate_columns = x;
        LoadedTable loaded = [&] {
            try {
                return load_table(path, s);
            } catch (const std::exception& e) {
                throw StageError("load", e.what());
            }
        }();
        for (const auto& d : loaded.report.dropped)
            std::cerr << "warning [load]: dropped record " << d.record << " (" << d.id << "): " << d.reason << '\n';
        if (no_standardize) return loaded.table;
        try {
            return standardize(loaded.table);
        } catch (const std::exception& e) {
            throw StageError("standardize", e.what());
        }
    }
};

struct WeightsArgs {
    std::string type = "auto";
    std::size_t k = 8;
    void add(CLI::App* cmd) {
        cmd->add_option("--weights", type, "auto, queen, rook or knn")
            ->check(CLI::IsMember({"auto", "queen", "rook", "knn"}));
        cmd->add_option("--k", k, "neighbors for knn weights");
    }
    WeightsKind kind() const {
        if (type == "queen") return WeightsKind::queen;
        if (type == "rook") return WeightsKind::rook;
        if (type == "knn") return WeightsKind::knn;
        return WeightsKind::automatic;
    }
};

struct KernelArgs {
    std::string family = "bisquare";
    std::string mode = "adaptive";
    std::optional<double> bandwidth;
    std::optional<double> lower;
    std::optional<double> upper;
    void add(CLI::App* cmd) {
        cmd->add_option("--kernel", family, "bisquare or gaussian")->check(CLI::IsMember({"bisquare", "gaussian"}));
        cmd->add_option("--mode", mode, "adaptive or fixed")->check(CLI::IsMember({"adaptive", "fixed"}));
        cmd->add_option("--bandwidth", bandwidth, "fixed bandwidth instead of a search");
        cmd->add_option("--lower", lower, "search lower bound");
        cmd->add_option("--upper", upper, "search upper bound");
    }
};

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

template <typename F>
auto in_stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

Eigen::VectorXd column_values(const ObservationTable& t, const std::string& column) {
    if (column.empty() || column == t.y_name()) return t.y();
    return t.x().col(static_cast<Eigen::Index>(t.column_index(column)));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatial regression toolkit: OLS, Moran's I, Gi*, GWR and MGWR"};
    app.set_version_flag("--version", std::string(tool_name) + " " + tool_version);
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("-t,--threads", threads, "worker threads (0: all cores)");

    // pipeline run
    auto* pipeline = app.add_subcommand("pipeline", "run the full workflow from a config file");
    pipeline->require_subcommand(1);
    auto* run = pipeline->add_subcommand("run", "execute the pipeline");
    std::string config_path;
    bool resume = false;
    run->add_option("-c,--config", config_path, "JSON config")->required();
    run->add_flag("--resume", resume, "keep existing outputs and only produce missing ones");

    // ols
    auto* ols_cmd = app.add_subcommand("ols", "global regression with VIF");
    InputArgs ols_in;
    ols_in.add(ols_cmd);
    std::string ols_csv;
    ols_cmd->add_option("--csv", ols_csv, "write the coefficient table as CSV");

    // moran
    auto* moran_cmd = app.add_subcommand("moran", "global Moran's I");
    InputArgs moran_in;
    moran_in.add(moran_cmd);
    WeightsArgs moran_w;
    moran_w.add(moran_cmd);
    std::string moran_target = "residuals";
    std::size_t permutations = 999;
    std::optional<std::uint64_t> moran_seed;
    moran_cmd->add_option("--of", moran_target, "'residuals' (of the OLS fit) or a column name");
    moran_cmd->add_option("--permutations", permutations, "permutation replicates (0: none)");
    moran_cmd->add_option("--seed", moran_seed, "seed for the permutation test");
    std::string moran_csv;
    moran_cmd->add_option("--csv", moran_csv, "write the result as CSV");

    // gwr
    auto* gwr_cmd = app.add_subcommand("gwr", "geographically weighted regression");
    InputArgs gwr_in;
    gwr_in.add(gwr_cmd);
    KernelArgs gwr_k;
    gwr_k.add(gwr_cmd);
    std::string gwr_out;
    gwr_cmd->add_option("-o,--out-dir", gwr_out, "write report and surfaces here");

    // mgwr
    auto* mgwr_cmd = app.add_subcommand("mgwr", "multiscale GWR");
    InputArgs mgwr_in;
    mgwr_in.add(mgwr_cmd);
    KernelArgs mgwr_k;
    mgwr_k.add(mgwr_cmd);
    double tol = 1e-5;
    std::size_t max_iter = 200;
    std::string init = "gwr";
    std::string mgwr_out;
    mgwr_cmd->add_option("--tol", tol, "SOC-f tolerance");
    mgwr_cmd->add_option("--max-iter", max_iter, "backfitting iteration cap");
    mgwr_cmd->add_option("--init", init, "gwr or ols")->check(CLI::IsMember({"gwr", "ols"}));
    mgwr_cmd->add_option("-o,--out-dir", mgwr_out, "write report, surfaces and trace here");

    // hotspots
    auto* hot_cmd = app.add_subcommand("hotspots", "Getis-Ord Gi* hot spots");
    InputArgs hot_in;
    hot_in.add(hot_cmd);
    hot_in.no_standardize = true;
    WeightsArgs hot_w;
    hot_w.add(hot_cmd);
    std::string hot_column;
    std::string hot_out;
    hot_cmd->add_option("--column", hot_column, "variable to analyze (default: dependent)");
    hot_cmd->add_option("-o,--out", hot_out, "output .csv or .geojson");

    // synth generate
    auto* synth = app.add_subcommand("synth", "synthetic data with known coefficient surfaces");
    synth->require_subcommand(1);
    auto* gen = synth->add_subcommand("generate", "write a synthetic data set");
    std::string scenario_path, builtin, synth_out, synth_geojson;
    std::optional<std::uint64_t> synth_seed;
    auto* sopt = gen->add_option("-s,--scenario", scenario_path, "scenario JSON");
    gen->add_option("--builtin", builtin, "built-in scenario: dmv-like or dmv-iid")->excludes(sopt);
    gen->add_option("--seed", synth_seed, "override the scenario seed");
    gen->add_option("-o,--out", synth_out, "CSV output")->required();
    gen->add_option("--geojson", synth_geojson, "also write GeoJSON");

    CLI11_PARSE(app, argc, argv);
    const unsigned nthreads = resolve_threads(threads);

    try {
        if (run->parsed()) {
            auto config = in_stage("config", [&] { return load_pipeline_config(config_path); });
            if (threads != 0) config.threads = threads;
            RunOptions opts;
            opts.resume = resume;
            auto result = run_pipeline(config, opts);
            for (const auto& w : result.warnings) std::cerr << "warning " << w << '\n';
            std::cout << "gate: Moran p = " << csv::format_fixed(result.gate_p, 4) << " -> "
                      << (result.proceeded ? "proceed" : "stop") << '\n';
            for (const auto& f : result.written) std::cout << "wrote " << (config.output_dir / f).string() << '\n';
            for (const auto& f : result.skipped) std::cout << "kept " << (config.output_dir / f).string() << '\n';
        } else if (ols_cmd->parsed()) {
            auto table = ols_in.load();
            auto fit = in_stage("ols", [&] { return fit_ols(table); });
            auto vif = in_stage("ols", [&] { return compute_vif(table); });
            std::cout << report::ols_text(fit, vif, table.y_name());
            if (!ols_csv.empty()) write_file(ols_csv, report::ols_csv(fit, vif));
        } else if (moran_cmd->parsed()) {
            if (permutations > 0 && !moran_seed) throw StageError("config", "--seed is required with permutations");
            auto table = moran_in.load();
            Eigen::VectorXd values = moran_target == "residuals"
                                         ? in_stage("ols", [&] { return fit_ols(table).residuals; })
                                         : in_stage("moran", [&] { return column_values(table, moran_target); });
            auto w = in_stage("weights", [&] { return pipeline_weights(table, moran_w.kind(), moran_w.k); });
            for (const auto& msg : w.warnings) std::cerr << "warning [weights]: " << msg << '\n';
            MoranOptions mo;
            mo.permutations = permutations;
            mo.seed = moran_seed.value_or(0);
            mo.threads = nthreads;
            auto result = in_stage("moran", [&] { return morans_i(values, w.weights, mo); });
            std::cout << report::moran_text(result, moran_target, std::string(to_string(w.weights.style())));
            if (!moran_csv.empty()) write_file(moran_csv, report::moran_csv(result));
        } else if (gwr_cmd->parsed()) {
            auto table = gwr_in.load();
            auto model = in_stage("gwr", [&] {
                KernelSpec kernel{parse_kernel_family(gwr_k.family), parse_bandwidth_mode(gwr_k.mode), 0.0};
                if (gwr_k.bandwidth) {
                    kernel.bandwidth = *gwr_k.bandwidth;
                } else {
                    BandwidthSearchOptions bo;
                    bo.lower = gwr_k.lower;
                    bo.upper = gwr_k.upper;
                    bo.threads = nthreads;
                    kernel.bandwidth = select_bandwidth(table, kernel.family, kernel.mode, bo).bandwidth;
                }
                GwrOptions go;
                go.threads = nthreads;
                return fit_gwr(table, kernel, go);
            });
            std::cout << report::gwr_text(model, table.y_name());
            if (!gwr_out.empty()) {
                write_file(fs::path(gwr_out) / "gwr_report.csv", report::gwr_csv(model));
                write_file(fs::path(gwr_out) / "gwr_surfaces.csv", report::gwr_surfaces_csv(model, table));
                write_file(fs::path(gwr_out) / "gwr_surfaces.geojson", report::gwr_surfaces_geojson(model, table));
            }
        } else if (mgwr_cmd->parsed()) {
            auto table = mgwr_in.load();
            auto model = in_stage("mgwr", [&] {
                MgwrOptions mo;
                mo.family = parse_kernel_family(mgwr_k.family);
                mo.mode = parse_bandwidth_mode(mgwr_k.mode);
                mo.lower = mgwr_k.lower;
                mo.upper = mgwr_k.upper;
                mo.init_bandwidth = mgwr_k.bandwidth;
                mo.tol = tol;
                mo.max_iter = max_iter;
                mo.init = init == "ols" ? MgwrInit::ols : MgwrInit::gwr;
                mo.threads = nthreads;
                return fit_mgwr(table, mo);
            });
            for (const auto& w : model.warnings) std::cerr << "warning [mgwr]: " << w << '\n';
            auto summary = summarize_mgwr(model);
            std::cout << report::mgwr_text(summary, table.y_name());
            if (!mgwr_out.empty()) {
                write_file(fs::path(mgwr_out) / "mgwr_report.csv", report::mgwr_csv(summary));
                write_file(fs::path(mgwr_out) / "mgwr_surfaces.csv", report::mgwr_surfaces_csv(model, table));
                write_file(fs::path(mgwr_out) / "mgwr_surfaces.geojson", report::mgwr_surfaces_geojson(model, table));
                write_file(fs::path(mgwr_out) / "mgwr_convergence.csv", report::mgwr_convergence_csv(model));
            }
        } else if (hot_cmd->parsed()) {
            auto table = hot_in.load();
            Eigen::VectorXd values = in_stage("hotspots", [&] { return column_values(table, hot_column); });
            auto w = in_stage("weights", [&] { return pipeline_weights(table, hot_w.kind(), hot_w.k); });
            auto gi = in_stage("hotspots", [&] { return getis_ord_gstar(values, w.weights.binary_with_self()); });
            for (const auto& msg : gi.warnings) std::cerr << "warning [hotspots]: " << msg << '\n';
            std::string out = fs::path(hot_out).extension() == ".geojson" ? report::hotspots_geojson(gi, table, values)
                                                                         : report::hotspots_csv(gi, table, values);
            if (hot_out.empty())
                std::cout << out;
            else
                write_file(hot_out, out);
        } else if (gen->parsed()) {
            auto scenario = in_stage("synth", [&] {
                if (scenario_path.empty() == builtin.empty())
                    throw Error("give exactly one of --scenario or --builtin");
                return builtin.empty() ? load_scenario(scenario_path) : builtin_scenario(builtin);
            });
            if (synth_seed) scenario.seed = *synth_seed;
            auto data = in_stage("synth", [&] { return generate(scenario); });
            write_file(synth_out, synthetic_csv(data));
            if (!synth_geojson.empty()) write_file(synth_geojson, synthetic_geojson(data));
        }
    } catch (const StageError& e) {
        std::cerr << "error " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error [io] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
