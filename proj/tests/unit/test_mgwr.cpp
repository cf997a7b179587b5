#include <doctest.h>

#include <cmath>

#include "gwkit/global_regression.hpp"
#include "gwkit/mgwr.hpp"
#include "gwkit/synth.hpp"
#include "support.hpp"

using namespace gwkit;

namespace {
SyntheticScenario grid_scenario(std::size_t side, double noise, std::uint64_t seed) {
    SyntheticScenario sc;
    sc.layout.kind = LayoutKind::grid;
    sc.layout.rows = sc.layout.cols = side;
    sc.intercept = constant_surface(0.5);
    sc.covariates = {{"x1", constant_surface(1.0)}, {"x2", constant_surface(-0.5)}};
    sc.noise_std = noise;
    sc.seed = seed;
    return sc;
}

SyntheticScenario varying_scenario(std::uint64_t seed) {
    auto sc = grid_scenario(10, 0.5, seed);
    sc.covariates[1].beta = sinusoidal_surface(2.0, 10.0);
    return sc;
}
}  // namespace

TEST_CASE("structural identities") {
    auto table = standardize(generate(varying_scenario(3)).table);
    auto m = fit_mgwr(table);
    CHECK(m.enp.sum() == doctest::Approx(m.trace_s).epsilon(1e-9));
    CHECK(std::abs(m.enp.sum() - m.trace_s) < 1e-6);
    Eigen::VectorXd recomposed = (table.design().array() * m.coefficients.array()).rowwise().sum();
    CHECK((recomposed - m.fitted).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((m.contributions.rowwise().sum() - m.fitted).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((m.fitted + m.residuals - table.y()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.converged);
    for (std::size_t k = 1; k < m.trace.size(); ++k) CHECK(m.trace[k].rss <= m.trace[k - 1].rss + 1e-9);
    const double df = 100.0 - m.trace_s;
    for (Eigen::Index j = 0; j < m.enp.size(); ++j) {
        CHECK(m.adjusted_alpha(j) <= 0.05);
        CHECK(m.critical_t(j) >= t_critical(0.05, df) - 1e-12);
        CHECK(m.critical_t(j) == doctest::Approx(t_critical(m.adjusted_alpha(j), df)));
    }
    CHECK(m.sigma2 == doctest::Approx(m.rss / df));
    CHECK(m.adj_r_squared == doctest::Approx(1 - (1 - m.r_squared) * 99.0 / df));
}

TEST_CASE("backfitting RSS is non-increasing across seeds") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto m = fit_mgwr(standardize(generate(varying_scenario(seed)).table));
        for (std::size_t k = 1; k < m.trace.size(); ++k) CHECK(m.trace[k].rss <= m.trace[k - 1].rss + 1e-9);
    }
}

TEST_CASE("zero-noise intercept-only data converges immediately") {
    Rng rng(1);
    auto pts = test::random_points(30, rng);
    ObservationTable t(test::units_at(pts), "y", Eigen::VectorXd::Constant(30, 3.0), {}, Eigen::MatrixXd(30, 0));
    MgwrOptions o;
    o.allow_unstandardized = true;
    o.init_bandwidth = 10;
    auto m = fit_mgwr(t, o);
    CHECK(m.converged);
    CHECK(m.iterations <= 2);
    CHECK(m.trace.back().soc < o.tol);
    CHECK((m.coefficients.array() - 3.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("zero-noise global data: constant surfaces and constant intercept at bandwidth n") {
    auto data = generate(grid_scenario(7, 0.0, 2));
    auto table = standardize(data.table);
    MgwrOptions o;
    o.fixed_bandwidths = std::vector<double>(3, 49.0);
    auto m = fit_mgwr(table, o);
    auto s = summarize_mgwr(m);
    for (const auto& row : s.rows) {
        CHECK(row.std < 1e-6);
        CHECK(row.max - row.min < 1e-6);
        CHECK(row.median == doctest::Approx(row.min).epsilon(1e-6));
    }
    CHECK(m.converged);
}

TEST_CASE("zero-noise global data converges fast with selected bandwidths") {
    auto m = fit_mgwr(standardize(generate(grid_scenario(8, 0.0, 5)).table));
    CHECK(m.converged);
    CHECK(m.iterations <= 10);
    CHECK(m.trace.back().soc < 1e-5);
}

TEST_CASE("equal fixed bandwidths and one pass from GWR reproduce GWR on zero-noise data") {
    auto table = standardize(generate(grid_scenario(10, 0.0, 4)).table);
    const double b = 40;
    auto gwr = fit_gwr(table, KernelSpec{KernelFamily::bisquare, BandwidthMode::adaptive, b});
    MgwrOptions o;
    o.init_bandwidth = b;
    o.fixed_bandwidths = std::vector<double>(3, b);
    o.max_iter = 1;
    auto m = fit_mgwr(table, o);
    double rms = std::sqrt((m.fitted - gwr.fitted).squaredNorm() / 100.0);
    CHECK(rms < 1e-4);
}

TEST_CASE("global data: near-global bandwidths and medians close to OLS") {
    // AICc alone picks a local bandwidth for pure noise a fair share of the time,
    // so only most of the terms are required to come out near-global.
    std::size_t near_global = 0, terms = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto table = standardize(generate(grid_scenario(10, 0.5, seed)).table);
        auto m = fit_mgwr(table);
        auto ols = fit_ols(table);
        auto s = summarize_mgwr(m);
        for (std::size_t j = 0; j < s.rows.size(); ++j) {
            ++terms;
            if (s.rows[j].bandwidth >= 90.0) ++near_global;
            CHECK(std::abs(s.rows[j].median - ols.coefficients(static_cast<Eigen::Index>(j))) <
                  2.0 * ols.std_errors(static_cast<Eigen::Index>(j)));
        }
    }
    MESSAGE("near-global terms " << near_global << "/" << terms);
    CHECK(near_global * 3 >= terms * 2);
}

TEST_CASE("the varying covariate gets the smallest bandwidth") {
    auto m = fit_mgwr(standardize(generate(varying_scenario(8)).table));
    CHECK(m.bandwidths(2) < m.bandwidths(0));
    CHECK(m.bandwidths(2) < m.bandwidths(1));
}

TEST_CASE("thread count does not change the fit") {
    auto table = standardize(generate(varying_scenario(6)).table);
    MgwrOptions one, four;
    four.threads = 4;
    auto a = fit_mgwr(table, one);
    auto b = fit_mgwr(table, four);
    CHECK(a.bandwidths == b.bandwidths);
    CHECK(a.coefficients == b.coefficients);
    CHECK(a.std_errors == b.std_errors);
    CHECK(a.local_cn == b.local_cn);
}

TEST_CASE("unstandardized input is rejected unless allowed") {
    auto data = generate(grid_scenario(6, 0.3, 1));
    CHECK_THROWS_WITH_AS(fit_mgwr(data.table), doctest::Contains("standardized"), Error);
    MgwrOptions o;
    o.allow_unstandardized = true;
    CHECK_NOTHROW(fit_mgwr(data.table, o));
}

TEST_CASE("a term with no local variation is an error naming it") {
    Rng rng(5);
    auto pts = test::random_points(40, rng);
    Eigen::MatrixXd x(40, 2);
    for (Eigen::Index i = 0; i < 40; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = pts[static_cast<std::size_t>(i)].u < 5.0 ? 0.0 : rng.normal();
    }
    Eigen::VectorXd y = x.col(0) + x.col(1) + test::normal_matrix(40, 1, rng).col(0);
    ObservationTable t(test::units_at(pts), "y", y, {"a", "patchy"}, x);
    MgwrOptions o;
    o.allow_unstandardized = true;
    o.init_bandwidth = 40;
    o.fixed_bandwidths = std::vector<double>{40, 40, 4};
    CHECK_THROWS_WITH_AS(fit_mgwr(t, o), doctest::Contains("patchy"), LocalRankDeficientError);
}

TEST_CASE("non-convergence returns the best iterate flagged") {
    auto table = standardize(generate(varying_scenario(2)).table);
    MgwrOptions o;
    o.max_iter = 2;
    o.tol = 1e-14;
    auto m = fit_mgwr(table, o);
    CHECK_FALSE(m.converged);
    CHECK(m.iterations == 2);
    CHECK_FALSE(m.warnings.empty());
}

TEST_CASE("OLS initialization reaches the same fixed point") {
    auto table = standardize(generate(varying_scenario(9)).table);
    MgwrOptions a, b;
    a.tol = b.tol = 1e-8;
    b.init = MgwrInit::ols;
    auto ma = fit_mgwr(table, a);
    auto mb = fit_mgwr(table, b);
    if (ma.bandwidths == mb.bandwidths) CHECK((ma.fitted - mb.fitted).cwiseAbs().maxCoeff() < 1e-4);
}
