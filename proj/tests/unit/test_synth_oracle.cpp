#include <doctest.h>

#include <cmath>

#include "gwkit/global_regression.hpp"
#include "gwkit/gwr.hpp"
#include "gwkit/synth.hpp"
#include "support.hpp"

using namespace gwkit;

TEST_CASE("zero noise with constant surfaces: OLS recovers the constants") {
    SyntheticScenario sc;
    sc.layout.kind = LayoutKind::random;
    sc.layout.n = 60;
    sc.intercept = constant_surface(1.5);
    sc.covariates = {{"a", constant_surface(2.0)}, {"b", constant_surface(-0.7)}, {"c", constant_surface(0.0)}};
    sc.seed = 77;
    auto data = generate(sc);
    auto fit = fit_ols(data.table);
    CHECK(std::abs(fit.coefficients(0) - 1.5) < 1e-8);
    CHECK(std::abs(fit.coefficients(1) - 2.0) < 1e-8);
    CHECK(std::abs(fit.coefficients(2) + 0.7) < 1e-8);
    CHECK(std::abs(fit.coefficients(3)) < 1e-8);
}

TEST_CASE("same seed gives byte-identical data, different seeds differ") {
    auto a = synthetic_csv(generate(dmv_like_scenario(5)));
    auto b = synthetic_csv(generate(dmv_like_scenario(5)));
    auto c = synthetic_csv(generate(dmv_like_scenario(6)));
    CHECK(a == b);
    CHECK(a != c);
    CHECK(synthetic_geojson(generate(dmv_like_scenario(5))) == synthetic_geojson(generate(dmv_like_scenario(5))));
}

TEST_CASE("truth surfaces are stored with the data") {
    SyntheticScenario sc;
    sc.layout = {LayoutKind::grid, 5, 6};
    sc.intercept = linear_surface(1.0, -2.0, 0.5);
    sc.covariates = {{"s", sinusoidal_surface(2.0, 3.0, 1.0)}};
    auto data = generate(sc);
    REQUIRE(data.truth.rows() == 30);
    for (std::size_t i = 0; i < 30; ++i) {
        auto p = data.table.units()[i].location;
        CHECK(data.truth(static_cast<Eigen::Index>(i), 0) == doctest::Approx(p.u - 2.0 * p.v + 0.5));
        CHECK(data.truth(static_cast<Eigen::Index>(i), 1) ==
              doctest::Approx(2.0 * std::sin(2.0 * M_PI * p.u / 3.0) + 1.0));
    }
}

TEST_CASE("invalid scenarios") {
    SyntheticScenario small;
    small.layout = {LayoutKind::grid, 4, 6};
    CHECK_THROWS_AS(generate(small), Error);
    SyntheticScenario bad;
    bad.layout = {LayoutKind::grid, 5, 5};
    bad.covariates = {{"s", sinusoidal_surface(1.0, 0.0)}};
    CHECK_THROWS_AS(generate(bad), Error);
    bad.covariates = {{"s", constant_surface(1.0)}};
    bad.noise_std = -1.0;
    CHECK_THROWS_AS(generate(bad), Error);
    CHECK_THROWS_AS(builtin_scenario("nope"), Error);
}

TEST_CASE("scenario JSON round trip") {
    auto sc = dmv_like_scenario(99);
    auto back = scenario_from_json(scenario_to_json(sc));
    CHECK(synthetic_csv(generate(sc)) == synthetic_csv(generate(back)));
    auto from_builtin = scenario_from_json(nlohmann::json{{"builtin", "dmv-iid"}, {"seed", 3}});
    CHECK(from_builtin.seed == 3);
    CHECK(from_builtin.name == "dmv-iid");
}

TEST_CASE("county scenario mirrors the covariate ranges") {
    auto data = generate(dmv_like_scenario());
    const auto& t = data.table;
    CHECK(t.n() == 158);
    CHECK(t.p() == 15);
    auto income = t.x().col(static_cast<Eigen::Index>(t.column_index("median_income")));
    CHECK(income.minCoeff() >= 27.06);
    CHECK(income.maxCoeff() <= 142.30);
    CHECK(income.mean() == doctest::Approx(63.47).epsilon(0.1));
    CHECK(data.trips_before.minCoeff() >= 2000);
    CHECK((data.trips_after.array() >= 0).all());
}

TEST_CASE("sinusoidal surface recovered by GWR at n = 400") {
    SyntheticScenario sc;
    sc.layout = {LayoutKind::grid, 20, 20};
    sc.layout.spacing = 0.05;
    sc.intercept = constant_surface(0.0);
    sc.covariates = {{"x1", sinusoidal_surface(1.0, 1.0)}};
    sc.noise_std = 0.1;
    sc.seed = 1;
    auto data = generate(sc);
    auto sel = select_bandwidth(data.table, KernelFamily::bisquare, BandwidthMode::adaptive);
    auto m = fit_gwr(data.table, KernelSpec{KernelFamily::bisquare, BandwidthMode::adaptive, sel.bandwidth});
    double rmse = std::sqrt((m.coefficients.col(1) - data.truth.col(1)).squaredNorm() / 400.0);
    CHECK(rmse < 0.15);
}

TEST_CASE("oracle solve basics") {
    oracle::Matrix one(1, 1);
    one(0, 0) = 4.0;
    CHECK(oracle::brute_force_ols(one, {10.0})[0] == doctest::Approx(2.5));
    oracle::Matrix sing(2, 2);
    sing(0, 0) = 1;
    sing(0, 1) = 2;
    sing(1, 0) = 2;
    sing(1, 1) = 4;
    CHECK_THROWS(oracle::solve(sing, {1, 2}));
}

TEST_CASE("oracle WLS with identity weights is OLS, and agrees with the engine on 12 x 3") {
    Rng rng(12);
    auto x = test::normal_matrix(12, 2, rng);
    auto pts = test::random_points(12, rng);
    Eigen::VectorXd y = test::normal_matrix(12, 1, rng).col(0);
    auto t = test::make_table(pts, y, x);
    auto ox = test::to_oracle(t.design());
    auto oy = test::to_oracle(y);
    auto ols = oracle::brute_force_ols(ox, oy);
    auto wls = oracle::brute_force_wls(ox, oracle::Vector(12, 1.0), oy);
    for (std::size_t k = 0; k < 3; ++k) CHECK(ols[k] == wls[k]);
    Eigen::VectorXd w(12);
    for (Eigen::Index i = 0; i < 12; ++i) w(i) = 0.1 + rng.uniform();
    auto engine = fit_local(t.design(), y, w, 0);
    auto want = oracle::brute_force_wls(ox, test::to_oracle(w), oy);
    CHECK(test::max_relative_error(engine.coefficients, want) < 1e-8);
}

TEST_CASE("oracle singular values") {
    oracle::Matrix a(3, 2);
    a(0, 0) = 3;
    a(1, 1) = 4;
    auto sv = oracle::singular_values(a);
    CHECK(sv[0] == doctest::Approx(4.0));
    CHECK(sv[1] == doctest::Approx(3.0));
}
