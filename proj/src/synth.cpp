#include "gwkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gwkit/csv.hpp"
#include "gwkit/error.hpp"
#include "gwkit/rng.hpp"

namespace gwkit {

namespace {

enum Stream : std::uint64_t { layout_stream = 0, covariate_stream = 1, noise_stream = 2, trips_stream = 3 };

void validate(const Surface& s, const std::string& what) {
    if (s.kind == SurfaceKind::sinusoidal && !(s.period > 0.0))
        throw Error("surface for '" + what + "': sinusoid period must be positive");
    for (double v : {s.offset, s.a, s.b, s.amplitude, s.period})
        if (!std::isfinite(v)) throw Error("surface for '" + what + "': parameters must be finite");
}

std::string unit_id(std::size_t i, std::size_t n) {
    std::string digits = std::to_string(n);
    std::string s = std::to_string(i + 1);
    return "U" + std::string(digits.size() - s.size(), '0') + s;
}

}  // namespace

double Surface::operator()(double u, double v) const {
    switch (kind) {
        case SurfaceKind::constant:
            return offset;
        case SurfaceKind::linear:
            return a * u + b * v + offset;
        case SurfaceKind::sinusoidal:
            return amplitude * std::sin(2.0 * std::numbers::pi * u / period) + offset;
    }
    return offset;
}

Surface constant_surface(double value) { return Surface{SurfaceKind::constant, value}; }

Surface linear_surface(double a, double b, double offset) {
    Surface s{SurfaceKind::linear, offset};
    s.a = a;
    s.b = b;
    return s;
}

Surface sinusoidal_surface(double amplitude, double period, double offset) {
    Surface s{SurfaceKind::sinusoidal, offset};
    s.amplitude = amplitude;
    s.period = period;
    return s;
}

SyntheticData generate(const SyntheticScenario& sc) {
    const std::size_t n = sc.layout.size();
    if (n < 25) throw Error("scenario needs at least 25 units, got " + std::to_string(n));
    if (!(sc.noise_std >= 0.0)) throw Error("noise_std must be non-negative");
    if (!(sc.response.scale != 0.0) || !std::isfinite(sc.response.scale) || !std::isfinite(sc.response.offset))
        throw Error("response scale must be finite and nonzero");
    validate(sc.intercept, "intercept");
    const std::size_t p = sc.covariates.size();
    for (std::size_t j = 0; j < p; ++j) {
        const auto& c = sc.covariates[j];
        if (c.name.empty()) throw Error("covariate " + std::to_string(j) + " has no name");
        validate(c.beta, c.name);
        if (!(c.std > 0.0)) throw Error("covariate '" + c.name + "': std must be positive");
        if (c.min && c.max && *c.min > *c.max) throw Error("covariate '" + c.name + "': min > max");
        if (std::abs(c.correlation) > 1.0) throw Error("covariate '" + c.name + "': |correlation| > 1");
    }

    // layout
    std::vector<Point> pts(n);
    if (sc.layout.kind == LayoutKind::grid) {
        for (std::size_t r = 0; r < sc.layout.rows; ++r)
            for (std::size_t c = 0; c < sc.layout.cols; ++c)
                pts[r * sc.layout.cols + c] = {(static_cast<double>(c) + 0.5) * sc.layout.spacing,
                                               (static_cast<double>(r) + 0.5) * sc.layout.spacing};
    } else {
        if (!(sc.layout.width > 0.0) || !(sc.layout.height > 0.0)) throw Error("layout extent must be positive");
        Rng rng(sc.seed, layout_stream);
        for (auto& pt : pts) {
            pt.u = rng.uniform(0.0, sc.layout.width);
            pt.v = rng.uniform(0.0, sc.layout.height);
        }
    }

    // covariates, drawn unit by unit so adding a column never changes earlier ones
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Eigen::MatrixXd x(z.rows(), z.cols());
    {
        Rng rng(sc.seed, covariate_stream);
        for (std::size_t j = 0; j < p; ++j) {
            const auto& c = sc.covariates[j];
            std::optional<std::size_t> source;
            if (c.correlated_with) {
                for (std::size_t k = 0; k < j; ++k)
                    if (sc.covariates[k].name == *c.correlated_with) source = k;
                if (!source)
                    throw Error("covariate '" + c.name + "' is correlated with unknown or later covariate '" +
                                *c.correlated_with + "'");
            }
            const auto jj = static_cast<Eigen::Index>(j);
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                double e = rng.normal();
                double zi = source ? c.correlation * z(ii, static_cast<Eigen::Index>(*source)) +
                                         std::sqrt(1.0 - c.correlation * c.correlation) * e
                                   : e;
                z(ii, jj) = zi;
                double raw = c.mean + c.std * zi;
                if (c.min) raw = std::max(raw, *c.min);
                if (c.max) raw = std::min(raw, *c.max);
                x(ii, jj) = raw;
            }
        }
    }

    Eigen::MatrixXd truth(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
    std::vector<std::string> truth_names{"Intercept"};
    for (const auto& c : sc.covariates) truth_names.push_back(c.name);
    Eigen::VectorXd trips_before, trips_after;

    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    Rng noise(sc.seed, noise_stream);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        double b0 = sc.intercept(pts[i].u, pts[i].v);
        truth(ii, 0) = b0;
        double eta = b0;
        for (std::size_t j = 0; j < p; ++j) {
            const auto& c = sc.covariates[j];
            const auto jj = static_cast<Eigen::Index>(j);
            double bj = c.beta(pts[i].u, pts[i].v);
            truth(ii, jj + 1) = bj;
            eta += bj * (x(ii, jj) - c.mean) / c.std;
        }
        double e = sc.noise_std > 0.0 ? noise.normal(0.0, sc.noise_std) : 0.0;
        y(ii) = sc.response.offset + sc.response.scale * (eta + e);
    }

    if (sc.response.trip_counts) {
        Rng rng(sc.seed, trips_stream);
        trips_before.resize(y.size());
        trips_after.resize(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            double before = static_cast<double>(2000 + rng.below(58001));
            if (y(i) >= 100.0) throw Error("trip change of 100% or more cannot be expressed as trip counts");
            double after = std::round(before * (1.0 - y(i) / 100.0));
            trips_before(i) = before;
            trips_after(i) = after;
            y(i) = trip_change_percent(before, after);
        }
    }

    std::vector<AreaUnit> units(n);
    for (std::size_t i = 0; i < n; ++i) {
        units[i].id = unit_id(i, n);
        units[i].name = sc.name + " " + std::to_string(i + 1);
        units[i].location = pts[i];
    }
    std::vector<std::string> names;
    for (const auto& c : sc.covariates) names.push_back(c.name);
    return SyntheticData{
        ObservationTable(std::move(units), sc.response.name, std::move(y), std::move(names), std::move(x)),
        std::move(truth),
        std::move(truth_names),
        std::move(trips_before),
        std::move(trips_after),
        sc.layout.kind == LayoutKind::grid,
        sc.layout.spacing,
    };
}

// ---------------------------------------------------------------- config

namespace {

Surface surface_from_json(const nlohmann::json& j) {
    std::string kind = j.value("kind", "constant");
    Surface s;
    if (kind == "constant") {
        s = constant_surface(j.value("value", j.value("offset", 0.0)));
    } else if (kind == "linear") {
        s = linear_surface(j.value("a", 0.0), j.value("b", 0.0), j.value("offset", 0.0));
    } else if (kind == "sinusoidal") {
        s = sinusoidal_surface(j.value("amplitude", 1.0), j.value("period", 1.0), j.value("offset", 0.0));
    } else {
        throw Error("unknown surface kind '" + kind + "'");
    }
    return s;
}

nlohmann::json surface_to_json(const Surface& s) {
    switch (s.kind) {
        case SurfaceKind::constant:
            return {{"kind", "constant"}, {"value", s.offset}};
        case SurfaceKind::linear:
            return {{"kind", "linear"}, {"a", s.a}, {"b", s.b}, {"offset", s.offset}};
        case SurfaceKind::sinusoidal:
            return {{"kind", "sinusoidal"}, {"amplitude", s.amplitude}, {"period", s.period}, {"offset", s.offset}};
    }
    return {};
}

}  // namespace

SyntheticScenario scenario_from_json(const nlohmann::json& j) {
    if (j.contains("builtin")) {
        auto sc = builtin_scenario(j.at("builtin").get<std::string>());
        if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
        return sc;
    }
    try {
        SyntheticScenario sc;
        sc.name = j.value("name", "scenario");
        sc.seed = j.value("seed", std::uint64_t{0});
        sc.noise_std = j.value("noise_std", 0.0);
        const auto& lay = j.at("layout");
        std::string kind = lay.value("kind", "grid");
        if (kind == "grid") {
            sc.layout.kind = LayoutKind::grid;
            sc.layout.rows = lay.at("rows").get<std::size_t>();
            sc.layout.cols = lay.at("cols").get<std::size_t>();
            sc.layout.spacing = lay.value("spacing", 1.0);
        } else if (kind == "random") {
            sc.layout.kind = LayoutKind::random;
            sc.layout.n = lay.at("n").get<std::size_t>();
            sc.layout.width = lay.value("width", 1.0);
            sc.layout.height = lay.value("height", 1.0);
        } else {
            throw Error("unknown layout kind '" + kind + "'");
        }
        if (j.contains("intercept")) sc.intercept = surface_from_json(j.at("intercept"));
        for (const auto& c : j.value("covariates", nlohmann::json::array())) {
            CovariateSpec spec;
            spec.name = c.at("name").get<std::string>();
            if (c.contains("beta")) spec.beta = surface_from_json(c.at("beta"));
            spec.mean = c.value("mean", 0.0);
            spec.std = c.value("std", 1.0);
            if (c.contains("min")) spec.min = c.at("min").get<double>();
            if (c.contains("max")) spec.max = c.at("max").get<double>();
            if (c.contains("correlated_with")) spec.correlated_with = c.at("correlated_with").get<std::string>();
            spec.correlation = c.value("correlation", 0.0);
            sc.covariates.push_back(std::move(spec));
        }
        if (j.contains("response")) {
            const auto& r = j.at("response");
            sc.response.name = r.value("name", "y");
            sc.response.offset = r.value("offset", 0.0);
            sc.response.scale = r.value("scale", 1.0);
            sc.response.trip_counts = r.value("trip_counts", false);
        }
        return sc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid scenario: ") + e.what());
    }
}

nlohmann::json scenario_to_json(const SyntheticScenario& sc) {
    nlohmann::json j;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["noise_std"] = sc.noise_std;
    if (sc.layout.kind == LayoutKind::grid)
        j["layout"] = {{"kind", "grid"}, {"rows", sc.layout.rows}, {"cols", sc.layout.cols}, {"spacing", sc.layout.spacing}};
    else
        j["layout"] = {{"kind", "random"}, {"n", sc.layout.n}, {"width", sc.layout.width}, {"height", sc.layout.height}};
    j["intercept"] = surface_to_json(sc.intercept);
    j["covariates"] = nlohmann::json::array();
    for (const auto& c : sc.covariates) {
        nlohmann::json cj{{"name", c.name}, {"beta", surface_to_json(c.beta)}, {"mean", c.mean}, {"std", c.std}};
        if (c.min) cj["min"] = *c.min;
        if (c.max) cj["max"] = *c.max;
        if (c.correlated_with) {
            cj["correlated_with"] = *c.correlated_with;
            cj["correlation"] = c.correlation;
        }
        j["covariates"].push_back(std::move(cj));
    }
    j["response"] = {{"name", sc.response.name},
                     {"offset", sc.response.offset},
                     {"scale", sc.response.scale},
                     {"trip_counts", sc.response.trip_counts}};
    return j;
}

SyntheticScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read scenario '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("scenario '" + path.string() + "': " + e.what());
    }
    return scenario_from_json(j);
}

// ---------------------------------------------------------------- output

std::string synthetic_csv(const SyntheticData& data) {
    const auto& t = data.table;
    const bool trips = data.trips_before.size() > 0;
    std::ostringstream out;
    csv::Row header{"id", "name", "u", "v"};
    if (trips) {
        header.push_back("trips_before");
        header.push_back("trips_after");
    }
    header.push_back(t.y_name());
    for (const auto& nm : t.x_names()) header.push_back(nm);
    for (const auto& nm : data.truth_names) header.push_back("beta_" + nm);
    csv::write_row(out, header);
    for (std::size_t i = 0; i < t.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto& u = t.units()[i];
        csv::Row row{u.id, u.name, csv::format_double(u.location.u), csv::format_double(u.location.v)};
        if (trips) {
            row.push_back(csv::format_double(data.trips_before(ii)));
            row.push_back(csv::format_double(data.trips_after(ii)));
        }
        row.push_back(csv::format_double(t.y()(ii)));
        for (Eigen::Index j = 0; j < t.x().cols(); ++j) row.push_back(csv::format_double(t.x()(ii, j)));
        for (Eigen::Index j = 0; j < data.truth.cols(); ++j) row.push_back(csv::format_double(data.truth(ii, j)));
        csv::write_row(out, row);
    }
    return out.str();
}

std::string synthetic_geojson(const SyntheticData& data) {
    const auto& t = data.table;
    nlohmann::ordered_json fc{{"type", "FeatureCollection"}, {"features", nlohmann::ordered_json::array()}};
    for (std::size_t i = 0; i < t.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto& u = t.units()[i];
        nlohmann::ordered_json props;
        props["id"] = u.id;
        props["name"] = u.name;
        props["u"] = u.location.u;
        props["v"] = u.location.v;
        if (data.trips_before.size() > 0) {
            props["trips_before"] = data.trips_before(ii);
            props["trips_after"] = data.trips_after(ii);
        }
        props[t.y_name()] = t.y()(ii);
        for (std::size_t j = 0; j < t.p(); ++j) props[t.x_names()[j]] = t.x()(ii, static_cast<Eigen::Index>(j));
        for (std::size_t j = 0; j < data.truth_names.size(); ++j)
            props["beta_" + data.truth_names[j]] = data.truth(ii, static_cast<Eigen::Index>(j));
        nlohmann::ordered_json geom;
        if (data.grid) {
            double h = 0.5 * data.cell, cu = u.location.u, cv = u.location.v;
            geom = {{"type", "Polygon"},
                    {"coordinates",
                     {{{cu - h, cv - h}, {cu + h, cv - h}, {cu + h, cv + h}, {cu - h, cv + h}, {cu - h, cv - h}}}}};
        } else {
            geom = {{"type", "Point"}, {"coordinates", {u.location.u, u.location.v}}};
        }
        fc["features"].push_back({{"type", "Feature"}, {"id", u.id}, {"properties", props}, {"geometry", geom}});
    }
    return fc.dump(1) + "\n";
}

// ---------------------------------------------------------------- built-ins

namespace {

struct CountyVariable {
    const char* name;
    double min, max, mean, sd;
    double beta;
};

// Ranges and spreads per county; coefficients on the z scale.
constexpr CountyVariable county_variables[] = {
    {"scientific", 2.94, 30.00, 10.74, 4.73, 0.02},
    {"agriculture", 0.00, 12.04, 1.98, 2.03, -0.29},
    {"construction", 0.90, 16.20, 7.47, 2.85, -0.17},
    {"manufacturing", 1.27, 23.02, 9.83, 5.43, -0.17},
    {"wholesale_trade", 0.00, 5.40, 2.00, 0.92, -0.21},
    {"retail_trade", 4.09, 20.29, 11.45, 2.60, 0.06},
    {"information", 0.00, 6.52, 1.56, 0.85, -0.41},
    {"food_services", 3.11, 27.77, 8.52, 3.39, -0.18},
    {"public_administration", 2.13, 22.38, 7.69, 3.71, -0.22},
    {"median_income", 27.06, 142.30, 63.47, 23.01, 0.30},
    {"active_mode", 0.85, 23.09, 6.75, 3.05, 0.00},
    {"public_mode", 0.00, 17.82, 0.67, 2.23, 0.25},
    {"democrat_voters", 0.21, 0.91, 0.46, 0.14, -0.12},
    {"covid19_rate", 0.00, 1.60, 0.17, 0.21, -0.05},
    {"health_uninsured", 5.90, 41.50, 17.82, 5.44, -0.06},
};

SyntheticScenario county_base(std::uint64_t seed) {
    SyntheticScenario sc;
    sc.seed = seed;
    sc.layout.kind = LayoutKind::random;
    sc.layout.n = 158;
    sc.layout.width = 4.0;
    sc.layout.height = 3.0;
    for (const auto& v : county_variables) {
        CovariateSpec c;
        c.name = v.name;
        c.beta = constant_surface(v.beta);
        c.mean = v.mean;
        c.std = v.sd;
        c.min = v.min;
        c.max = v.max;
        if (c.name == "median_income") {
            c.correlated_with = "scientific";
            c.correlation = 0.9;
        }
        sc.covariates.push_back(std::move(c));
    }
    sc.response.name = "trip_change";
    sc.response.offset = 35.0;
    sc.response.scale = 10.0;
    sc.response.trip_counts = true;
    return sc;
}

}  // namespace

SyntheticScenario dmv_like_scenario(std::uint64_t seed) {
    auto sc = county_base(seed);
    sc.name = "dmv-like";
    sc.intercept = linear_surface(0.5, 0.4, -1.4);
    for (auto& c : sc.covariates)
        if (c.name == "agriculture") c.beta = sinusoidal_surface(0.4, 4.0, -0.42);
    sc.noise_std = 0.5;
    return sc;
}

SyntheticScenario dmv_iid_scenario(std::uint64_t seed) {
    auto sc = county_base(seed);
    sc.name = "dmv-iid";
    sc.intercept = constant_surface(0.0);
    sc.noise_std = 0.8;
    return sc;
}

SyntheticScenario builtin_scenario(const std::string& name) {
    if (name == "dmv-like") return dmv_like_scenario();
    if (name == "dmv-iid") return dmv_iid_scenario();
    throw Error("unknown built-in scenario '" + name + "' (expected dmv-like or dmv-iid)");
}

}  // namespace gwkit
