#include "gwkit/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>

#include "gwkit/csv.hpp"

namespace gwkit {

double trip_change_percent(double trips_before, double trips_after) {
    if (!(trips_before > 0.0)) throw Error("trip change undefined: trips_before must be positive");
    return (trips_before - trips_after) * 100.0 / trips_before;
}

std::vector<TripChangeRecord> compute_trip_change(std::span<const TripCount> before,
                                                  std::span<const TripCount> after) {
    auto index = [](std::span<const TripCount> counts, const char* label) {
        std::map<std::string, double> out;
        for (const auto& c : counts) {
            if (!std::isfinite(c.trips) || c.trips < 0.0)
                throw Error(std::string("negative or non-finite ") + label + " count for area '" +
                            c.area_id + "'");
            if (!out.emplace(c.area_id, c.trips).second)
                throw Error(std::string("duplicate area id '") + c.area_id + "' in " + label +
                            " counts");
        }
        return out;
    };
    auto b = index(before, "before");
    auto a = index(after, "after");

    std::vector<std::string> mismatched;
    for (const auto& [id, _] : b)
        if (!a.contains(id)) mismatched.push_back(id);
    for (const auto& [id, _] : a)
        if (!b.contains(id)) mismatched.push_back(id);
    if (!mismatched.empty()) {
        std::sort(mismatched.begin(), mismatched.end());
        std::string msg = "before/after counts cover different areas:";
        for (const auto& id : mismatched) msg += " " + id;
        throw MismatchedAreaIds(msg, mismatched);
    }

    std::vector<TripChangeRecord> out;
    out.reserve(b.size());
    for (const auto& [id, tb] : b) {
        TripChangeRecord rec{id, tb, a.at(id), std::nullopt};
        if (tb > 0.0) rec.trip_change = trip_change_percent(tb, rec.trips_after);
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// ObservationTable

ObservationTable::ObservationTable(std::vector<AreaUnit> units, std::string y_name,
                                   Eigen::VectorXd y, std::vector<std::string> x_names,
                                   Eigen::MatrixXd x)
    : units_(std::move(units)),
      y_name_(std::move(y_name)),
      y_(std::move(y)),
      x_names_(std::move(x_names)),
      x_(std::move(x)),
      x_scaling_(x_names_.size()) {
    const auto n = static_cast<Eigen::Index>(units_.size());
    if (y_.size() != n) throw Error("dependent variable length does not match number of units");
    if (x_.rows() != n || x_.cols() != static_cast<Eigen::Index>(x_names_.size()))
        throw Error("covariate matrix shape does not match units and column names");

    std::set<std::string> ids;
    for (const auto& u : units_) {
        if (!ids.insert(u.id).second) throw Error("duplicate id '" + u.id + "'");
        if (!std::isfinite(u.location.u) || !std::isfinite(u.location.v))
            throw Error("non-finite location for unit '" + u.id + "'");
    }
    std::set<std::string> names;
    for (const auto& name : x_names_)
        if (!names.insert(name).second) throw Error("duplicate covariate name '" + name + "'");
    if (!y_.allFinite()) throw Error("dependent variable has non-finite values");
    if (!x_.allFinite()) throw Error("covariates have non-finite values");
}

bool ObservationTable::has_polygons() const {
    return !units_.empty() &&
           std::all_of(units_.begin(), units_.end(), [](const AreaUnit& u) { return u.polygon.has_value(); });
}

Eigen::MatrixXd ObservationTable::design() const {
    Eigen::MatrixXd out(x_.rows(), x_.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(x_.cols()) = x_;
    return out;
}

std::vector<std::string> ObservationTable::design_names() const {
    std::vector<std::string> out{"Intercept"};
    out.insert(out.end(), x_names_.begin(), x_names_.end());
    return out;
}

std::vector<Point> ObservationTable::locations() const {
    std::vector<Point> out;
    out.reserve(units_.size());
    for (const auto& u : units_) out.push_back(u.location);
    return out;
}

std::size_t ObservationTable::column_index(std::string_view name) const {
    auto it = std::find(x_names_.begin(), x_names_.end(), name);
    if (it == x_names_.end()) throw Error("unknown covariate '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - x_names_.begin());
}

ObservationTable ObservationTable::with_y(std::string name, Eigen::VectorXd y) const {
    ObservationTable out(units_, std::move(name), std::move(y), x_names_, x_);
    out.standardized_ = standardized_;
    out.x_scaling_ = x_scaling_;
    return out;
}

ObservationTable ObservationTable::select(std::span<const std::string> names) const {
    Eigen::MatrixXd x(x_.rows(), static_cast<Eigen::Index>(names.size()));
    std::vector<ColumnScaling> scaling;
    for (std::size_t j = 0; j < names.size(); ++j) {
        std::size_t src = column_index(names[j]);
        x.col(static_cast<Eigen::Index>(j)) = x_.col(static_cast<Eigen::Index>(src));
        scaling.push_back(x_scaling_[src]);
    }
    ObservationTable out(units_, y_name_, y_, std::vector<std::string>(names.begin(), names.end()),
                         std::move(x));
    out.standardized_ = standardized_;
    out.y_scaling_ = y_scaling_;
    out.x_scaling_ = std::move(scaling);
    return out;
}

namespace {

ColumnScaling zscore(Eigen::Ref<Eigen::VectorXd> col, const std::string& name) {
    const double n = static_cast<double>(col.size());
    double mean = col.mean();
    double ss = (col.array() - mean).square().sum();
    double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
        throw Error("column '" + name + "' has zero variance; cannot standardize");
    col = (col.array() - mean) / sd;
    return {mean, sd};
}

ColumnScaling compose(const ColumnScaling& outer, const ColumnScaling& inner, bool has_outer) {
    if (!has_outer) return inner;
    return {outer.mean + outer.std * inner.mean, outer.std * inner.std};
}

}  // namespace

ObservationTable standardize(const ObservationTable& table) {
    if (table.n() < 2) throw Error("standardization needs at least 2 rows");
    Eigen::VectorXd y = table.y();
    Eigen::MatrixXd x = table.x();
    ColumnScaling ys = zscore(y, table.y_name());
    std::vector<ColumnScaling> xs(table.p());
    for (std::size_t j = 0; j < table.p(); ++j)
        xs[j] = zscore(x.col(static_cast<Eigen::Index>(j)), table.x_names()[j]);

    ObservationTable out(table.units(), table.y_name(), std::move(y), table.x_names(), std::move(x));
    out.standardized_ = true;
    out.y_scaling_ = compose(table.y_scaling(), ys, table.standardized());
    for (std::size_t j = 0; j < table.p(); ++j)
        out.x_scaling_[j] = compose(table.x_scaling()[j], xs[j], table.standardized());
    return out;
}

ObservationTable unstandardize(const ObservationTable& table) {
    if (!table.standardized()) return table;
    Eigen::VectorXd y = table.y().array() * table.y_scaling().std + table.y_scaling().mean;
    Eigen::MatrixXd x = table.x();
    for (std::size_t j = 0; j < table.p(); ++j) {
        const auto& s = table.x_scaling()[j];
        auto col = x.col(static_cast<Eigen::Index>(j));
        col = col.array() * s.std + s.mean;
    }
    return ObservationTable(table.units(), table.y_name(), std::move(y), table.x_names(), std::move(x));
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

// One input record with its fields looked up by column name.
struct RawRecord {
    std::size_t number = 0;
    std::map<std::string, std::string, std::less<>> text;   // string-valued fields
    std::map<std::string, double, std::less<>> numbers;      // JSON numeric fields
    std::set<std::string, std::less<>> nulls;                // explicit JSON nulls
    std::optional<MultiPolygon> geometry;
};

class Assembler {
public:
    explicit Assembler(const TableSchema& schema) : schema_(schema) {
        bool direct = schema.dependent_column.has_value();
        bool trips = schema.trips_before_column.has_value() || schema.trips_after_column.has_value();
        if (direct == trips)
            throw Error("schema must name either a dependent column or a trips_before/trips_after pair");
        if (trips && !(schema.trips_before_column && schema.trips_after_column))
            throw Error("schema names only one of trips_before/trips_after");
        if (schema.u_column.has_value() != schema.v_column.has_value())
            throw Error("schema must name both coordinate columns or neither");
        if (schema.id_column.empty()) throw Error("schema has no id column");
    }

    // Columns that must exist in the input header.
    std::vector<std::string> required_columns() const {
        std::vector<std::string> cols{schema_.id_column};
        if (schema_.name_column) cols.push_back(*schema_.name_column);
        if (schema_.u_column) {
            cols.push_back(*schema_.u_column);
            cols.push_back(*schema_.v_column);
        }
        if (schema_.dependent_column) cols.push_back(*schema_.dependent_column);
        if (schema_.trips_before_column) {
            cols.push_back(*schema_.trips_before_column);
            cols.push_back(*schema_.trips_after_column);
        }
        cols.insert(cols.end(), schema_.covariate_columns.begin(), schema_.covariate_columns.end());
        return cols;
    }

    LoadedTable assemble(std::vector<RawRecord> records) const {
        if (records.empty()) throw Error("no rows");

        IngestionReport report;
        report.records_read = records.size();

        std::set<std::string> seen;
        for (const auto& rec : records) {
            std::string id = text_field(rec, schema_.id_column);
            if (id.empty()) throw Error("record " + std::to_string(rec.number) + " has an empty id");
            if (!seen.insert(id).second) throw Error("duplicate id '" + id + "'");
        }

        struct Row {
            AreaUnit unit;
            double y;
            std::vector<double> x;
        };
        std::vector<Row> rows;
        for (auto& rec : records) {
            std::string id = text_field(rec, schema_.id_column);
            auto drop = [&](std::string reason) {
                report.dropped.push_back({rec.number, id, std::move(reason)});
            };

            std::vector<std::string> missing;
            auto get = [&](const std::string& col) -> std::optional<double> {
                auto v = numeric_field(rec, col);
                if (!v) missing.push_back(col);
                return v;
            };

            Row row;
            row.unit.id = id;
            row.unit.name = schema_.name_column ? text_field(rec, *schema_.name_column) : id;
            row.unit.polygon = rec.geometry;

            std::optional<double> u, v;
            if (schema_.u_column) {
                u = get(*schema_.u_column);
                v = get(*schema_.v_column);
            }
            std::optional<double> y, tb, ta;
            if (schema_.dependent_column) {
                y = get(*schema_.dependent_column);
            } else {
                tb = get(*schema_.trips_before_column);
                ta = get(*schema_.trips_after_column);
            }
            for (const auto& col : schema_.covariate_columns) {
                auto val = get(col);
                row.x.push_back(val.value_or(0.0));
            }
            if (!missing.empty()) {
                std::string reason = "missing value in";
                for (const auto& m : missing) reason += " " + m;
                drop(std::move(reason));
                continue;
            }

            if (schema_.u_column) {
                row.unit.location = {*u, *v};
            } else if (rec.geometry) {
                try {
                    row.unit.location = centroid(*rec.geometry);
                } catch (const Error& e) {
                    drop(std::string("invalid geometry: ") + e.what());
                    continue;
                }
            } else {
                drop("no geometry and no coordinate columns");
                continue;
            }

            if (schema_.dependent_column) {
                row.y = *y;
            } else {
                if (*tb < 0.0 || *ta < 0.0)
                    throw Error("negative trip count for id '" + id + "'");
                if (*tb == 0.0) {
                    drop("trips_before is zero; trip change undefined");
                    continue;
                }
                row.y = trip_change_percent(*tb, *ta);
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw Error("no rows remain after dropping incomplete records");

        std::sort(rows.begin(), rows.end(),
                  [](const Row& a, const Row& b) { return a.unit.id < b.unit.id; });

        const auto n = static_cast<Eigen::Index>(rows.size());
        const auto p = static_cast<Eigen::Index>(schema_.covariate_columns.size());
        std::vector<AreaUnit> units;
        Eigen::VectorXd y(n);
        Eigen::MatrixXd x(n, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& row = rows[static_cast<std::size_t>(i)];
            y(i) = row.y;
            for (Eigen::Index j = 0; j < p; ++j) x(i, j) = row.x[static_cast<std::size_t>(j)];
            units.push_back(std::move(row.unit));
        }
        std::string y_name = schema_.dependent_column ? *schema_.dependent_column : schema_.dependent_name;
        return {ObservationTable(std::move(units), std::move(y_name), std::move(y),
                                 schema_.covariate_columns, std::move(x)),
                std::move(report)};
    }

private:
    static std::string text_field(const RawRecord& rec, const std::string& col) {
        if (auto it = rec.text.find(col); it != rec.text.end()) return it->second;
        if (auto it = rec.numbers.find(col); it != rec.numbers.end()) return csv::format_double(it->second);
        return {};
    }

    static std::optional<double> numeric_field(const RawRecord& rec, const std::string& col) {
        if (auto it = rec.numbers.find(col); it != rec.numbers.end()) return it->second;
        if (rec.nulls.contains(col)) return std::nullopt;
        auto it = rec.text.find(col);
        if (it == rec.text.end() || csv::is_missing(it->second)) return std::nullopt;
        auto value = csv::parse_double(it->second);
        if (!value || !std::isfinite(*value))
            throw Error("non-numeric value '" + it->second + "' in column '" + col + "' (record " +
                        std::to_string(rec.number) + ")");
        return value;
    }

    const TableSchema& schema_;
};

Ring parse_ring(const nlohmann::json& coords) {
    Ring ring;
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2) throw Error("geojson: malformed position");
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return ring;
}

Polygon parse_polygon(const nlohmann::json& coords) {
    Polygon poly;
    for (const auto& ring : coords) poly.rings.push_back(parse_ring(ring));
    if (poly.rings.empty()) throw Error("geojson: polygon without rings");
    return poly;
}

std::optional<MultiPolygon> parse_geometry(const nlohmann::json& geom) {
    if (geom.is_null()) return std::nullopt;
    const std::string type = geom.at("type").get<std::string>();
    const auto& coords = geom.at("coordinates");
    if (type == "Polygon") return MultiPolygon{parse_polygon(coords)};
    if (type == "MultiPolygon") {
        MultiPolygon mp;
        for (const auto& poly : coords) mp.push_back(parse_polygon(poly));
        return mp;
    }
    if (type == "Point") {
        // a point carries a location but no areal shape; handled by the caller
        return std::nullopt;
    }
    throw Error("geojson: unsupported geometry type '" + type + "'");
}

}  // namespace

LoadedTable load_csv(std::string_view text, const TableSchema& schema) {
    Assembler assembler(schema);
    auto rows = csv::parse(text);
    if (rows.empty()) throw Error("no rows");
    const auto& header = rows.front();
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(header[i], i);
    for (const auto& col : assembler.required_columns())
        if (!column.contains(col)) throw Error("missing mapped column '" + col + "'");
    if (!schema.u_column) throw Error("CSV input needs coordinate columns");

    std::vector<RawRecord> records;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw Error("record " + std::to_string(r) + " has " + std::to_string(row.size()) +
                        " fields, header has " + std::to_string(header.size()));
        RawRecord rec;
        rec.number = r;
        for (const auto& col : assembler.required_columns()) rec.text[col] = row[column.at(col)];
        records.push_back(std::move(rec));
    }
    return assembler.assemble(std::move(records));
}

LoadedTable load_geojson(std::string_view text, const TableSchema& schema) {
    Assembler assembler(schema);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("geojson: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection")
        throw Error("geojson: expected a FeatureCollection");
    const auto& features = doc.at("features");
    if (features.empty()) throw Error("no rows");

    std::vector<RawRecord> records;
    std::size_t number = 0;
    for (const auto& feature : features) {
        RawRecord rec;
        rec.number = ++number;
        const auto& props = feature.contains("properties") && feature["properties"].is_object()
                                ? feature["properties"]
                                : nlohmann::json::object();
        for (const auto& col : assembler.required_columns()) {
            if (!props.contains(col)) {
                if (col == schema.id_column && feature.contains("id")) {
                    const auto& fid = feature["id"];
                    rec.text[col] = fid.is_string() ? fid.get<std::string>() : fid.dump();
                    continue;
                }
                throw Error("missing mapped column '" + col + "' in feature " + std::to_string(number));
            }
            const auto& value = props[col];
            if (value.is_null()) rec.nulls.insert(col);
            else if (value.is_number()) rec.numbers[col] = value.get<double>();
            else if (value.is_string()) rec.text[col] = value.get<std::string>();
            else throw Error("unsupported property type in column '" + col + "'");
        }
        try {
            if (feature.contains("geometry")) rec.geometry = parse_geometry(feature["geometry"]);
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("geojson: ") + e.what());
        }
        records.push_back(std::move(rec));
    }
    return assembler.assemble(std::move(records));
}

LoadedTable load_table(const std::filesystem::path& path, const TableSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".geojson" || ext == ".json") return load_geojson(buf.str(), schema);
    return load_csv(buf.str(), schema);
}

}  // namespace gwkit
