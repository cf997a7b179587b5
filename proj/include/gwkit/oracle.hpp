#pragma once

// Slow reference implementations used by the tests. Nothing here touches
// Eigen or the engine sources: matrices are row-major std::vector buffers and
// every solve is written out by hand.

#include <cstddef>
#include <utility>
#include <vector>

namespace gwkit::oracle {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

using Vector = std::vector<double>;

// Gaussian elimination with partial pivoting. Throws std::runtime_error when
// a pivot falls below tol times the largest absolute entry of a.
Vector solve(Matrix a, Vector b, double tol = 1e-13);

// Solves (X'WX) beta = X'Wy from explicitly formed normal equations.
Vector brute_force_wls(const Matrix& x, const Vector& w, const Vector& y);
Vector brute_force_ols(const Matrix& x, const Vector& y);

// VIF of column j of a covariate matrix (no intercept column) from the
// auxiliary regression on an intercept plus the other columns.
double vif(const Matrix& covariates, std::size_t j);

// Singular values via one-sided Jacobi rotations, descending.
Vector singular_values(Matrix a);
// Ratio of extreme singular values after scaling columns to unit norm.
double condition_number(const Matrix& a);

// Moran's I from the double sum over a dense weight matrix.
double morans_i(const Vector& x, const Matrix& w);

// Gi* z-score at unit i; w must include the diagonal.
double gstar(const Vector& x, const Matrix& w, std::size_t i);

// Cell adjacency on an r x c grid (row-major cells). Rook uses edge
// neighbors only, queen adds diagonals.
std::vector<std::vector<std::size_t>> grid_neighbors(std::size_t rows, std::size_t cols, bool queen);

// Independent kernel: d and b are distances, adaptive radius picked by the
// caller. Bisquare is zero at and beyond b.
double bisquare(double d, double b);
double gaussian(double d, double b);

// AICc of a GWR given the dense n x n weight matrix (row i holds the weights
// used at location i). Returns {aicc, trace S}.
std::pair<double, double> gwr_aicc(const Matrix& x, const Vector& y, const Matrix& weights);

}  // namespace gwkit::oracle
