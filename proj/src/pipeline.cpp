#include "gwkit/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/opensslv.h>

#include "gwkit/esda.hpp"
#include "gwkit/global_regression.hpp"
#include "gwkit/gwr.hpp"
#include "gwkit/hashing.hpp"
#include "gwkit/mgwr.hpp"
#include "gwkit/parallel.hpp"
#include "gwkit/report.hpp"
#include "gwkit/version.hpp"

namespace gwkit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

ordered_json library_versions() {
    ordered_json v;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    v["boost"] = std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                 std::to_string(BOOST_VERSION % 100);
    v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    v["openssl"] = OPENSSL_VERSION_TEXT;
    return v;
}

// ---------------------------------------------------------------- config

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(std::string("config key '") + key + "' has the wrong type");
    }
}

std::optional<double> optional_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number()) throw Error(std::string("config key '") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) throw Error(std::string("config key '") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw Error(std::string("config section '") + key + "' must be an object");
    return j.at(key);
}

}  // namespace

PipelineConfig parse_pipeline_config(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw Error("config must be a JSON object");
    PipelineConfig c;

    const json& input = section(j, "input");
    auto path = optional_string(input, "path");
    if (!path) throw Error("config needs input.path");
    c.input = fs::path(*path).is_absolute() ? fs::path(*path) : base_dir / *path;

    const json& schema = section(input, "schema");
    c.schema.id_column = get_or<std::string>(schema, "id", "id");
    c.schema.name_column = optional_string(schema, "name");
    c.schema.u_column = optional_string(schema, "u");
    c.schema.v_column = optional_string(schema, "v");
    c.schema.dependent_column = optional_string(schema, "dependent");
    c.schema.trips_before_column = optional_string(schema, "trips_before");
    c.schema.trips_after_column = optional_string(schema, "trips_after");
    c.schema.dependent_name = get_or<std::string>(schema, "dependent_name",
                                                  c.schema.dependent_column.value_or("trip_change"));
    c.schema.covariate_columns = get_or<std::vector<std::string>>(schema, "covariates", {});
    if (!c.schema.dependent_column && !(c.schema.trips_before_column && c.schema.trips_after_column))
        throw Error("config needs input.schema.dependent or both trips_before and trips_after");

    c.standardize = get_or(j, "standardize", true);

    const json& weights = section(j, "weights");
    std::string wtype = get_or<std::string>(weights, "type", "auto");
    if (wtype == "auto")
        c.weights = WeightsKind::automatic;
    else if (wtype == "queen")
        c.weights = WeightsKind::queen;
    else if (wtype == "rook")
        c.weights = WeightsKind::rook;
    else if (wtype == "knn")
        c.weights = WeightsKind::knn;
    else
        throw Error("weights.type must be auto, queen, rook or knn");
    c.knn_k = get_or<std::size_t>(weights, "k", 8);

    const json& kernel = section(j, "kernel");
    try {
        c.family = parse_kernel_family(get_or<std::string>(kernel, "family", "bisquare"));
        c.mode = parse_bandwidth_mode(get_or<std::string>(kernel, "mode", "adaptive"));
    } catch (const std::exception& e) {
        throw Error(std::string("kernel: ") + e.what());
    }
    const json& bw = section(j, "bandwidth");
    c.bandwidth_lower = optional_number(bw, "lower");
    c.bandwidth_upper = optional_number(bw, "upper");

    const json& mgwr = section(j, "mgwr");
    c.run_mgwr = get_or(mgwr, "enabled", true);
    c.mgwr_tol = get_or(mgwr, "tol", 1e-5);
    c.mgwr_max_iter = get_or<std::size_t>(mgwr, "max_iter", 200);
    std::string init = get_or<std::string>(mgwr, "init", "gwr");
    if (init != "gwr" && init != "ols") throw Error("mgwr.init must be gwr or ols");
    c.mgwr_init_gwr = init == "gwr";
    c.allow_unstandardized = get_or(mgwr, "allow_unstandardized", false);
    if (!(c.mgwr_tol > 0.0)) throw Error("mgwr.tol must be positive");
    if (c.mgwr_max_iter == 0) throw Error("mgwr.max_iter must be positive");

    const json& moran = section(j, "moran");
    c.permutations = get_or<std::size_t>(moran, "permutations", 999);
    if (moran.contains("seed") && !moran.at("seed").is_null()) c.seed = get_or<std::uint64_t>(moran, "seed", 0);
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (c.permutations > 0 && !c.seed) throw Error("a seed is required when permutation tests are enabled");
    c.moran_gate = get_or(moran, "gate", 0.05);
    std::string gate_p = get_or<std::string>(moran, "gate_p", "permutation");
    if (gate_p != "permutation" && gate_p != "analytic") throw Error("moran.gate_p must be permutation or analytic");
    c.gate_on_permutation = gate_p == "permutation" && c.permutations > 0;
    if (!(c.moran_gate > 0.0 && c.moran_gate <= 1.0)) throw Error("moran.gate must be in (0, 1]");

    c.alpha = get_or(j, "alpha", 0.05);
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error("alpha must be in (0, 1)");
    c.cn_threshold = get_or(j, "cn_threshold", 30.0);
    c.threads = get_or<unsigned>(j, "threads", 0);

    auto out = optional_string(j, "output_dir");
    if (!out) throw Error("config needs output_dir");
    c.output_dir = fs::path(*out).is_absolute() ? fs::path(*out) : base_dir / *out;
    c.input = c.input.lexically_normal();
    c.output_dir = c.output_dir.lexically_normal();
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read config '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::exception& e) {
        throw Error("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    auto c = parse_pipeline_config(j, path.parent_path());
    c.config_path = path;
    c.config_sha256 = sha256_hex(bytes);
    return c;
}

WeightsBuild pipeline_weights(const ObservationTable& table, WeightsKind kind, std::size_t k) {
    if (kind == WeightsKind::automatic) kind = table.has_polygons() ? WeightsKind::queen : WeightsKind::knn;
    switch (kind) {
        case WeightsKind::queen:
        case WeightsKind::rook:
            if (!table.has_polygons()) throw Error("contiguity weights need polygon input");
            return build_contiguity_weights(table, kind == WeightsKind::queen ? ContiguityRule::queen : ContiguityRule::rook,
                                            true);
        default: {
            KnnOptions o;
            o.k = k;
            return build_knn_weights(table, o);
        }
    }
}

// ---------------------------------------------------------------- run

namespace {

const char* const all_outputs[] = {
    "ols_report.txt",     "ols_report.csv",      "ols_diagnostics.csv", "moran_report.txt",
    "moran_report.csv",   "gwr_report.txt",      "gwr_report.csv",      "gwr_surfaces.csv",
    "gwr_surfaces.geojson", "mgwr_report.txt",   "mgwr_report.csv",     "mgwr_surfaces.csv",
    "mgwr_surfaces.geojson", "mgwr_convergence.csv", "hotspots.csv",    "hotspots.geojson",
    "manifest.json",
};

class Run {
public:
    Run(const PipelineConfig& config, const RunOptions& options) : cfg_(config), opt_(options), dir_(config.output_dir) {}

    PipelineResult execute();

private:
    template <typename F>
    auto stage(const std::string& name, F&& body) {
        current_ = name;
        try {
            return body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
    }

    bool missing(std::initializer_list<const char*> files) const {
        if (!opt_.resume) return true;
        for (const char* f : files)
            if (!fs::exists(dir_ / f)) return true;
        return false;
    }

    void emit(const std::string& file, const std::string& content) {
        fs::path target = dir_ / file;
        if (opt_.resume && fs::exists(target)) {
            result_.skipped.push_back(file);
            return;
        }
        fs::path tmp = target;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write '" + target.string() + "'");
            out << content;
            if (!out.flush()) throw Error("failed writing '" + target.string() + "'");
        }
        fs::rename(tmp, target);
        result_.written.push_back(file);
    }

    void record_stage(const std::string& name, const std::string& status, std::vector<std::string> files) {
        stages_.push_back({name, status, std::move(files)});
    }

    void warn(const std::string& stage, const std::string& message) {
        result_.warnings.push_back("[" + stage + "] " + message);
    }

    std::string manifest() const;

    struct StageRecord {
        std::string name;
        std::string status;
        std::vector<std::string> files;
    };

    const PipelineConfig& cfg_;
    RunOptions opt_;
    fs::path dir_;
    std::string current_;
    PipelineResult result_;
    std::vector<StageRecord> stages_;
    ordered_json ingestion_;
    ordered_json gate_;
    std::string input_sha_;
};

std::string Run::manifest() const {
    ordered_json m;
    m["tool"] = {{"name", tool_name}, {"version", tool_version}};
    m["libraries"] = library_versions();
    m["config"] = {{"file", cfg_.config_path.filename().string()}, {"sha256", cfg_.config_sha256}};
    m["input"] = {{"file", cfg_.input.filename().string()}, {"sha256", input_sha_}};
    m["seed"] = cfg_.seed ? ordered_json(*cfg_.seed) : ordered_json(nullptr);
    m["ingestion"] = ingestion_;
    m["gate"] = gate_;
    ordered_json stages = ordered_json::array();
    for (const auto& s : stages_) {
        ordered_json outputs = ordered_json::array();
        for (const auto& f : s.files) outputs.push_back({{"file", f}, {"sha256", sha256_file(dir_ / f)}});
        stages.push_back({{"name", s.name}, {"status", s.status}, {"outputs", outputs}});
    }
    m["stages"] = stages;
    m["warnings"] = result_.warnings;
    return m.dump(2) + "\n";
}

PipelineResult Run::execute() {
    stage("setup", [&] {
        fs::create_directories(dir_);
        fs::remove(dir_ / "FAILED");
        if (!opt_.resume)
            for (const char* f : all_outputs) fs::remove(dir_ / f);
        return 0;
    });
    const unsigned threads = resolve_threads(cfg_.threads);

    // load + trip change
    auto loaded = stage("load", [&] {
        input_sha_ = sha256_file(cfg_.input);
        return load_table(cfg_.input, cfg_.schema);
    });
    ingestion_ = {{"records_read", loaded.report.records_read}, {"dropped", ordered_json::array()}};
    for (const auto& d : loaded.report.dropped) {
        ingestion_["dropped"].push_back({{"record", d.record}, {"id", d.id}, {"reason", d.reason}});
        warn("load", "dropped record " + std::to_string(d.record) + " (" + d.id + "): " + d.reason);
    }
    record_stage("load", "done", {});

    const ObservationTable& raw = loaded.table;
    ObservationTable table = stage("standardize", [&] { return cfg_.standardize ? standardize(raw) : raw; });
    record_stage("standardize", cfg_.standardize ? "done" : "skipped", {});

    // OLS + VIF
    auto ols = stage("ols", [&] { return fit_ols(table); });
    auto vif = stage("ols", [&] { return compute_vif(table); });
    stage("ols", [&] {
        emit("ols_report.txt", report::ols_text(ols, vif, table.y_name()));
        emit("ols_report.csv", report::ols_csv(ols, vif));
        emit("ols_diagnostics.csv", report::ols_diagnostics_csv(ols));
        return 0;
    });
    record_stage("ols", "done", {"ols_report.txt", "ols_report.csv", "ols_diagnostics.csv"});

    // Moran's I on OLS residuals
    auto weights = stage("moran", [&] { return pipeline_weights(table, cfg_.weights, cfg_.knn_k); });
    for (const auto& w : weights.warnings) warn("moran", w);
    std::string weights_label = table.has_polygons() && cfg_.weights != WeightsKind::knn
                                    ? (cfg_.weights == WeightsKind::rook ? "rook contiguity, row standardized"
                                                                         : "queen contiguity, row standardized")
                                    : "k nearest neighbors (k=" + std::to_string(cfg_.knn_k) + "), row standardized";
    auto moran = stage("moran", [&] {
        MoranOptions mo;
        mo.permutations = cfg_.permutations;
        mo.seed = cfg_.seed.value_or(0);
        mo.threads = threads;
        return morans_i(ols.residuals, weights.weights, mo);
    });
    for (const auto& w : moran.warnings) warn("moran", w);
    stage("moran", [&] {
        emit("moran_report.txt", report::moran_text(moran, "OLS residuals", weights_label));
        emit("moran_report.csv", report::moran_csv(moran));
        return 0;
    });
    record_stage("moran", "done", {"moran_report.txt", "moran_report.csv"});

    // gate
    result_.gate_p = cfg_.gate_on_permutation ? moran.p_permutation : moran.p_analytic;
    result_.proceeded = result_.gate_p < cfg_.moran_gate;
    gate_ = {{"statistic", "moran_i_ols_residuals"},
             {"p_value", result_.gate_p},
             {"p_source", cfg_.gate_on_permutation ? "permutation" : "analytic"},
             {"threshold", cfg_.moran_gate},
             {"decision", result_.proceeded ? "proceed" : "stop"}};

    if (result_.proceeded) {
        const bool need_mgwr = cfg_.run_mgwr && missing({"mgwr_report.txt", "mgwr_report.csv", "mgwr_surfaces.csv",
                                                         "mgwr_surfaces.geojson", "mgwr_convergence.csv"});
        const bool need_gwr =
            need_mgwr || missing({"gwr_report.txt", "gwr_report.csv", "gwr_surfaces.csv", "gwr_surfaces.geojson"});

        std::optional<double> gwr_bandwidth;
        if (need_gwr) {
            stage("gwr", [&] {
                BandwidthSearchOptions bo;
                bo.lower = cfg_.bandwidth_lower;
                bo.upper = cfg_.bandwidth_upper;
                bo.threads = threads;
                auto sel = select_bandwidth(table, cfg_.family, cfg_.mode, bo);
                for (const auto& w : sel.warnings) warn("gwr", w);
                gwr_bandwidth = sel.bandwidth;
                GwrOptions go;
                go.threads = threads;
                go.cn_threshold = cfg_.cn_threshold;
                auto model = fit_gwr(table, KernelSpec{cfg_.family, cfg_.mode, sel.bandwidth}, go);
                for (const auto& w : model.warnings) warn("gwr", w);
                emit("gwr_report.txt", report::gwr_text(model, table.y_name()));
                emit("gwr_report.csv", report::gwr_csv(model));
                emit("gwr_surfaces.csv", report::gwr_surfaces_csv(model, table));
                emit("gwr_surfaces.geojson", report::gwr_surfaces_geojson(model, table));
                return 0;
            });
        }
        record_stage("gwr", "done", {"gwr_report.txt", "gwr_report.csv", "gwr_surfaces.csv", "gwr_surfaces.geojson"});

        if (cfg_.run_mgwr) {
            if (need_mgwr) {
                stage("mgwr", [&] {
                    MgwrOptions mo;
                    mo.family = cfg_.family;
                    mo.mode = cfg_.mode;
                    mo.lower = cfg_.bandwidth_lower;
                    mo.upper = cfg_.bandwidth_upper;
                    mo.tol = cfg_.mgwr_tol;
                    mo.max_iter = cfg_.mgwr_max_iter;
                    mo.init = cfg_.mgwr_init_gwr ? MgwrInit::gwr : MgwrInit::ols;
                    mo.init_bandwidth = gwr_bandwidth;
                    mo.allow_unstandardized = cfg_.allow_unstandardized;
                    mo.alpha = cfg_.alpha;
                    mo.cn_threshold = cfg_.cn_threshold;
                    mo.threads = threads;
                    auto model = fit_mgwr(table, mo);
                    for (const auto& w : model.warnings) warn("mgwr", w);
                    emit("mgwr_report.txt", report::mgwr_text(summarize_mgwr(model), table.y_name()));
                    emit("mgwr_report.csv", report::mgwr_csv(summarize_mgwr(model)));
                    emit("mgwr_surfaces.csv", report::mgwr_surfaces_csv(model, table));
                    emit("mgwr_surfaces.geojson", report::mgwr_surfaces_geojson(model, table));
                    emit("mgwr_convergence.csv", report::mgwr_convergence_csv(model));
                    return 0;
                });
            }
            record_stage("mgwr", "done",
                         {"mgwr_report.txt", "mgwr_report.csv", "mgwr_surfaces.csv", "mgwr_surfaces.geojson",
                          "mgwr_convergence.csv"});
        } else {
            record_stage("mgwr", "disabled", {});
        }

        stage("hotspots", [&] {
            if (!missing({"hotspots.csv", "hotspots.geojson"})) return 0;
            auto gi = getis_ord_gstar(raw.y(), weights.weights.binary_with_self());
            for (const auto& w : gi.warnings) warn("hotspots", w);
            emit("hotspots.csv", report::hotspots_csv(gi, raw, raw.y()));
            emit("hotspots.geojson", report::hotspots_geojson(gi, raw, raw.y()));
            return 0;
        });
        record_stage("hotspots", "done", {"hotspots.csv", "hotspots.geojson"});
    } else {
        record_stage("gwr", "skipped: residual autocorrelation not significant", {});
        record_stage("mgwr", "skipped: residual autocorrelation not significant", {});
        record_stage("hotspots", "skipped: residual autocorrelation not significant", {});
    }

    stage("manifest", [&] {
        emit("manifest.json", manifest());
        return 0;
    });
    return result_;
}

void write_failed(const fs::path& dir, const StageError& e) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "FAILED", std::ios::binary | std::ios::trunc);
    out << "stage: " << e.stage() << '\n' << "message: " << e.what() << '\n';
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options) {
    try {
        return Run(config, options).execute();
    } catch (const StageError& e) {
        write_failed(config.output_dir, e);
        throw;
    }
}

}  // namespace gwkit
