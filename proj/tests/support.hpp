#pragma once

// Small builders shared by the unit and acceptance tests.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwkit/data_model.hpp"
#include "gwkit/oracle.hpp"
#include "gwkit/rng.hpp"

namespace gwkit::test {

inline std::string id_of(std::size_t i) {
    std::string s = std::to_string(i);
    return "A" + std::string(6 - s.size(), '0') + s;  // ids sort in row order
}

inline std::vector<AreaUnit> units_at(const std::vector<Point>& pts) {
    std::vector<AreaUnit> units(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        units[i].id = id_of(i);
        units[i].name = units[i].id;
        units[i].location = pts[i];
    }
    return units;
}

// Unit square cells of an rows x cols grid, row-major, with polygons.
inline std::vector<AreaUnit> grid_units(std::size_t rows, std::size_t cols) {
    std::vector<AreaUnit> units;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            AreaUnit u;
            u.id = id_of(units.size());
            u.name = u.id;
            double x0 = static_cast<double>(c), y0 = static_cast<double>(r);
            u.location = {x0 + 0.5, y0 + 0.5};
            u.polygon = MultiPolygon{Polygon{{Ring{{x0, y0}, {x0 + 1, y0}, {x0 + 1, y0 + 1}, {x0, y0 + 1}}}}};
            units.push_back(std::move(u));
        }
    }
    return units;
}

inline std::vector<Point> random_points(std::size_t n, Rng& rng, double extent = 10.0) {
    std::vector<Point> pts(n);
    for (auto& p : pts) p = {rng.uniform(0.0, extent), rng.uniform(0.0, extent)};
    return pts;
}

inline std::vector<std::string> names(std::size_t p, const std::string& prefix = "x") {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < p; ++j) out.push_back(prefix + std::to_string(j + 1));
    return out;
}

inline Eigen::MatrixXd normal_matrix(std::size_t n, std::size_t p, Rng& rng) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    return x;
}

inline ObservationTable make_table(const std::vector<Point>& pts, const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    return ObservationTable(units_at(pts), "y", y, names(static_cast<std::size_t>(x.cols())), x);
}

inline oracle::Matrix to_oracle(const Eigen::MatrixXd& m) {
    oracle::Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return out;
}

inline oracle::Vector to_oracle(const Eigen::VectorXd& v) { return oracle::Vector(v.data(), v.data() + v.size()); }

inline double max_relative_error(const Eigen::VectorXd& got, const oracle::Vector& want) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < got.size(); ++i) {
        double w = want[static_cast<std::size_t>(i)];
        worst = std::max(worst, std::abs(got(i) - w) / std::max(1.0, std::abs(w)));
    }
    return worst;
}

// +1/-1 checkerboard over a rows x cols grid.
inline Eigen::VectorXd checkerboard(std::size_t rows, std::size_t cols) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows * cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) v(static_cast<Eigen::Index>(r * cols + c)) = (r + c) % 2 ? -1.0 : 1.0;
    return v;
}

// 9 x 9 grid: a 3 x 3 block of 10 centered on the middle cell, 0 elsewhere.
inline Eigen::VectorXd hot_block() {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(81);
    for (int r = 3; r <= 5; ++r)
        for (int c = 3; c <= 5; ++c) v(r * 9 + c) = 10.0;
    return v;
}

}  // namespace gwkit::test
