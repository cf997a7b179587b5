#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gwkit/data_model.hpp"

namespace gwkit {

enum class SurfaceKind { constant, linear, sinusoidal };

// True coefficient surface over the (u, v) plane.
//   constant:   offset
//   linear:     a*u + b*v + offset
//   sinusoidal: amplitude * sin(2 pi u / period) + offset
struct Surface {
    SurfaceKind kind = SurfaceKind::constant;
    double offset = 0.0;
    double a = 0.0;
    double b = 0.0;
    double amplitude = 1.0;
    double period = 1.0;

    double operator()(double u, double v) const;
};

Surface constant_surface(double value);
Surface linear_surface(double a, double b, double offset = 0.0);
Surface sinusoidal_surface(double amplitude, double period, double offset = 0.0);

enum class LayoutKind { grid, random };

struct Layout {
    LayoutKind kind = LayoutKind::grid;
    std::size_t rows = 0;  // grid: cells at (c + 0.5, r + 0.5) * spacing
    std::size_t cols = 0;
    double spacing = 1.0;
    std::size_t n = 0;     // random: uniform points in [0, width] x [0, height]
    double width = 1.0;
    double height = 1.0;

    std::size_t size() const { return kind == LayoutKind::grid ? rows * cols : n; }
};

// A covariate is drawn standard normal (optionally correlated with an earlier
// covariate) and then mapped to mean + std * z, clipped to [min, max]. The
// response uses the nominal z-score (x - mean) / std of the stored value, so
// with the defaults the covariate enters the model exactly as drawn.
struct CovariateSpec {
    std::string name;
    Surface beta;
    double mean = 0.0;
    double std = 1.0;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<std::string> correlated_with;
    double correlation = 0.0;
};

// y = offset + scale * (beta_0(u,v) + sum_j beta_j(u,v) z_j + e),
// e ~ N(0, noise_std). With trip_counts the response is also expressed as a
// pair of integer trip counts whose percent change reproduces y up to
// rounding; y is then recomputed from the rounded counts.
struct ResponseSpec {
    std::string name = "y";
    double offset = 0.0;
    double scale = 1.0;
    bool trip_counts = false;
};

struct SyntheticScenario {
    std::string name = "scenario";
    Layout layout;
    Surface intercept = constant_surface(0.0);
    std::vector<CovariateSpec> covariates;
    ResponseSpec response;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    ObservationTable table;
    // True coefficients on the nominal z scale, n x (p + 1), intercept first.
    Eigen::MatrixXd truth;
    std::vector<std::string> truth_names;
    // Present when the response was expressed as trip counts.
    Eigen::VectorXd trips_before;
    Eigen::VectorXd trips_after;
    bool grid = false;
    double cell = 1.0;  // grid cell size, for polygon output
};

// Deterministic in the scenario: generator streams are fixed per purpose
// (layout, covariates, noise, trip counts).
//
// Throws Error for n < 25, a non-positive sinusoid period or noise_std < 0,
// unknown correlation targets, or |correlation| > 1.
SyntheticData generate(const SyntheticScenario& scenario);

SyntheticScenario scenario_from_json(const nlohmann::json& config);
nlohmann::json scenario_to_json(const SyntheticScenario& scenario);
SyntheticScenario load_scenario(const std::filesystem::path& path);

// Writes the data in the loader's CSV schema: id, name, u, v, the response
// (or trips_before/trips_after plus the response), the covariates, then
// beta_<term> truth columns.
std::string synthetic_csv(const SyntheticData& data);
// GeoJSON FeatureCollection; grid layouts get square cell polygons so
// contiguity weights can be built, random layouts get points.
std::string synthetic_geojson(const SyntheticData& data);

// 158 units with the fifteen covariate names, ranges and spreads of a county
// commute data set. Agriculture varies sinusoidally across the region and
// the intercept drifts linearly, so global OLS residuals are spatially
// clustered.
SyntheticScenario dmv_like_scenario(std::uint64_t seed = 20201101);
// Same covariates with constant coefficients and independent noise.
SyntheticScenario dmv_iid_scenario(std::uint64_t seed = 20200401);

// Returns the named built-in scenario ("dmv-like", "dmv-iid") or throws.
SyntheticScenario builtin_scenario(const std::string& name);

}  // namespace gwkit
