#include <doctest.h>

#include <sstream>

#include "gwkit/csv.hpp"
#include "gwkit/data_model.hpp"
#include "gwkit/synth.hpp"
#include "support.hpp"

using namespace gwkit;

TEST_CASE("trip change percent") {
    CHECK(trip_change_percent(100, 50) == 50.0);
    CHECK(trip_change_percent(100, 100) == 0.0);
    CHECK(trip_change_percent(80, 100) == -25.0);
    CHECK_THROWS_AS(trip_change_percent(0, 10), Error);
}

TEST_CASE("compute_trip_change pairs by id and flags zero baselines") {
    std::vector<TripCount> before{{"b", 80}, {"a", 100}, {"c", 0}};
    std::vector<TripCount> after{{"a", 50}, {"c", 5}, {"b", 100}};
    auto rec = compute_trip_change(before, after);
    REQUIRE(rec.size() == 3);
    CHECK(rec[0].area_id == "a");
    CHECK(*rec[0].trip_change == 50.0);
    CHECK(*rec[1].trip_change == -25.0);
    CHECK_FALSE(rec[2].trip_change.has_value());
}

TEST_CASE("compute_trip_change rejects mismatched ids and names them") {
    std::vector<TripCount> before{{"a", 1}, {"b", 1}};
    std::vector<TripCount> after{{"a", 1}, {"z", 1}};
    try {
        compute_trip_change(before, after);
        FAIL("expected MismatchedAreaIds");
    } catch (const MismatchedAreaIds& e) {
        CHECK(e.ids() == std::vector<std::string>{"b", "z"});
    }
}

TEST_CASE("standardize gives zero mean and unit sample sd, and round-trips") {
    Eigen::VectorXd y(3);
    y << 4, 7, 1;
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    ObservationTable t(test::units_at({{0, 0}, {1, 0}, {2, 0}}), "y", y, {"x1"}, x);
    auto s = standardize(t);
    CHECK(s.standardized());
    CHECK(s.x()(0, 0) == doctest::Approx(-1.0));
    CHECK(s.x().col(0).mean() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::sqrt(s.x().col(0).squaredNorm() / 2.0) == doctest::Approx(1.0));
    auto back = unstandardize(s);
    CHECK((back.x() - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.y() - y).cwiseAbs().maxCoeff() < 1e-12);
    // twice standardized composes with the original scaling
    auto twice = unstandardize(standardize(s));
    CHECK((twice.x() - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize rejects a constant column by name") {
    Eigen::MatrixXd x(3, 1);
    x << 5, 5, 5;
    ObservationTable t(test::units_at({{0, 0}, {1, 0}, {2, 0}}), "y", Eigen::Vector3d(1, 2, 3), {"flat"}, x);
    CHECK_THROWS_WITH_AS(standardize(t), doctest::Contains("flat"), Error);
}

TEST_CASE("round trip on random tables") {
    Rng rng(5);
    Eigen::MatrixXd x = test::normal_matrix(40, 4, rng) * 3.0;
    x.array() += 7.0;
    auto pts = test::random_points(40, rng);
    Eigen::VectorXd y = test::normal_matrix(40, 1, rng).col(0);
    auto t = test::make_table(pts, y, x);
    auto back = unstandardize(standardize(t));
    CHECK((back.x() - x).cwiseAbs().maxCoeff() < 1e-12);
}

namespace {
TableSchema county_schema() {
    TableSchema s;
    s.id_column = "id";
    s.u_column = "u";
    s.v_column = "v";
    s.trips_before_column = "before";
    s.trips_after_column = "after";
    s.covariate_columns = {"income"};
    return s;
}
}  // namespace

TEST_CASE("CSV ingestion derives trip change, sorts by id and reports dropped rows") {
    std::string text =
        "id,u,v,before,after,income\n"
        "c2,1,0,80,100,3\n"
        "c1,0,0,100,50,2\n"
        "c3,2,0,0,10,1\n"
        "c4,3,0,10,,1\n"
        "c5,4,1,10,9,4\n";
    auto loaded = load_csv(text, county_schema());
    CHECK(loaded.report.records_read == 5);
    CHECK(loaded.report.dropped.size() == 2);
    const auto& t = loaded.table;
    REQUIRE(t.n() == 3);
    CHECK(t.units()[0].id == "c1");
    CHECK(t.y()(0) == 50.0);
    CHECK(t.y()(1) == -25.0);
    CHECK(t.y_name() == "trip_change");
}

TEST_CASE("CSV ingestion errors") {
    CHECK_THROWS_WITH_AS(load_csv("", county_schema()), doctest::Contains("no rows"), Error);
    CHECK_THROWS_WITH_AS(load_csv("id,u,v,before,after,income\n", county_schema()), doctest::Contains("no rows"),
                         Error);
    CHECK_THROWS_WITH_AS(load_csv("id,u,v,before,after\na,0,0,1,1\n", county_schema()),
                         doctest::Contains("income"), Error);
    std::string dup = "id,u,v,before,after,income\nx7,0,0,1,1,1\nx7,1,1,2,1,2\n";
    CHECK_THROWS_WITH_AS(load_csv(dup, county_schema()), doctest::Contains("x7"), Error);
}

TEST_CASE("158-row synthetic county file loads as n=158, p=15") {
    auto data = generate(dmv_like_scenario());
    auto text = synthetic_csv(data);
    TableSchema s;
    s.id_column = "id";
    s.name_column = "name";
    s.u_column = "u";
    s.v_column = "v";
    s.trips_before_column = "trips_before";
    s.trips_after_column = "trips_after";
    s.covariate_columns = data.table.x_names();
    auto loaded = load_csv(text, s);
    CHECK(loaded.table.n() == 158);
    CHECK(loaded.table.p() == 15);
    CHECK((loaded.table.y() - data.table.y()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("GeoJSON ingestion uses polygon centroids when no coordinate columns") {
    std::string text = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":"b","y":2,"x1":1},
       "geometry":{"type":"Polygon","coordinates":[[[1,0],[2,0],[2,1],[1,1],[1,0]]]}},
      {"type":"Feature","properties":{"id":"a","y":1,"x1":3},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
      {"type":"Feature","properties":{"id":"c","y":5,"x1":2},
       "geometry":{"type":"MultiPolygon","coordinates":[[[[0,1],[1,1],[1,2],[0,2],[0,1]]]]}}]})";
    TableSchema s;
    s.id_column = "id";
    s.dependent_column = "y";
    s.dependent_name = "y";
    s.covariate_columns = {"x1"};
    auto loaded = load_geojson(text, s);
    const auto& t = loaded.table;
    REQUIRE(t.n() == 3);
    CHECK(t.has_polygons());
    CHECK(t.units()[0].id == "a");
    CHECK(t.units()[0].location.u == doctest::Approx(0.5));
    CHECK(t.units()[1].location.u == doctest::Approx(1.5));
    CHECK(t.units()[2].location.v == doctest::Approx(1.5));
}

TEST_CASE("csv helpers") {
    auto rows = csv::parse("a,\"b,c\",\"d\"\"e\"\r\n\n1,2,3\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "b,c");
    CHECK(rows[0][2] == "d\"e");
    std::ostringstream out;
    csv::write_row(out, {"x", "y,z", "q\"r"});
    CHECK(out.str() == "x,\"y,z\",\"q\"\"r\"\n");
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 1e21}) CHECK(*csv::parse_double(csv::format_double(v)) == v);
    CHECK(csv::format_fixed(-0.0001, 3) == "0.000");
    CHECK_FALSE(csv::parse_double("1.5x").has_value());
    CHECK(csv::is_missing("NA"));
    CHECK_THROWS(csv::parse("\"open"));
}
