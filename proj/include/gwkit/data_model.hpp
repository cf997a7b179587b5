#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gwkit/error.hpp"
#include "gwkit/geometry.hpp"

namespace gwkit {

struct AreaUnit {
    std::string id;
    std::string name;
    Point location;
    std::optional<MultiPolygon> polygon;
};

// Trip count for one areal unit in one period.
struct TripCount {
    std::string area_id;
    double trips = 0.0;
};

struct TripChangeRecord {
    std::string area_id;
    double trips_before = 0.0;
    double trips_after = 0.0;
    // Percent change; positive means fewer trips after. Empty when
    // trips_before is zero.
    std::optional<double> trip_change;
};

// (before - after) * 100 / before. Requires before > 0.
double trip_change_percent(double trips_before, double trips_after);

// The two inputs must cover the same set of area ids (in any order).
// Output is sorted by area id. Zero-before rows are kept with an empty
// trip_change.
//
// Throws MismatchedAreaIds when the id sets differ and Error for negative or
// non-finite counts.
std::vector<TripChangeRecord> compute_trip_change(std::span<const TripCount> before,
                                                  std::span<const TripCount> after);

class MismatchedAreaIds : public Error {
public:
    MismatchedAreaIds(std::string message, std::vector<std::string> ids)
        : Error(std::move(message)), ids_(std::move(ids)) {}
    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::vector<std::string> ids_;
};

struct ColumnScaling {
    double mean = 0.0;
    double std = 1.0;
};

// Immutable table of areal units with one dependent variable and a set of
// named covariates. Rows of y and x follow the order of units().
class ObservationTable {
public:
    ObservationTable(std::vector<AreaUnit> units, std::string y_name, Eigen::VectorXd y,
                     std::vector<std::string> x_names, Eigen::MatrixXd x);

    std::size_t n() const noexcept { return units_.size(); }
    std::size_t p() const noexcept { return x_names_.size(); }

    const std::vector<AreaUnit>& units() const noexcept { return units_; }
    const std::string& y_name() const noexcept { return y_name_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    const std::vector<std::string>& x_names() const noexcept { return x_names_; }
    const Eigen::MatrixXd& x() const noexcept { return x_; }

    bool standardized() const noexcept { return standardized_; }
    const ColumnScaling& y_scaling() const noexcept { return y_scaling_; }
    const std::vector<ColumnScaling>& x_scaling() const noexcept { return x_scaling_; }

    bool has_polygons() const;

    // Intercept column followed by the covariates.
    Eigen::MatrixXd design() const;
    // "Intercept" followed by the covariate names.
    std::vector<std::string> design_names() const;
    std::vector<Point> locations() const;

    std::size_t column_index(std::string_view name) const;

    // Copy with a different dependent variable (same units and covariates).
    ObservationTable with_y(std::string name, Eigen::VectorXd y) const;
    // Copy restricted to the named covariates, in the given order.
    ObservationTable select(std::span<const std::string> names) const;

    friend ObservationTable standardize(const ObservationTable& table);
    friend ObservationTable unstandardize(const ObservationTable& table);

private:
    std::vector<AreaUnit> units_;
    std::string y_name_;
    Eigen::VectorXd y_;
    std::vector<std::string> x_names_;
    Eigen::MatrixXd x_;
    bool standardized_ = false;
    ColumnScaling y_scaling_;
    std::vector<ColumnScaling> x_scaling_;
};

// Z-scores y and every covariate with the sample (n-1) standard deviation.
// The scaling parameters compose, so unstandardize() always returns to the
// original units. Throws for n < 2 or a zero-variance column (named).
ObservationTable standardize(const ObservationTable& table);
ObservationTable unstandardize(const ObservationTable& table);

// Maps input columns (CSV headers or GeoJSON property names) onto a table.
struct TableSchema {
    std::string id_column;
    std::optional<std::string> name_column;
    // Projected coordinates. When absent, the polygon centroid is used.
    std::optional<std::string> u_column;
    std::optional<std::string> v_column;
    // Either a ready dependent column, or a before/after trip-count pair
    // from which the trip change is derived.
    std::optional<std::string> dependent_column;
    std::optional<std::string> trips_before_column;
    std::optional<std::string> trips_after_column;
    std::string dependent_name = "trip_change";
    std::vector<std::string> covariate_columns;
};

struct DroppedRow {
    std::size_t record = 0;  // 1-based data record number
    std::string id;
    std::string reason;
};

struct IngestionReport {
    std::size_t records_read = 0;
    std::vector<DroppedRow> dropped;
};

struct LoadedTable {
    ObservationTable table;
    IngestionReport report;
};

// Loads a CSV or GeoJSON FeatureCollection (chosen by extension: .geojson
// or .json means GeoJSON). Rows with missing cells, or with zero trips
// before when trip change is derived, are dropped and listed in the report.
// Rows are sorted by id.
LoadedTable load_table(const std::filesystem::path& path, const TableSchema& schema);
LoadedTable load_csv(std::string_view text, const TableSchema& schema);
LoadedTable load_geojson(std::string_view text, const TableSchema& schema);

}  // namespace gwkit
