#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwkit/bandwidth_search.hpp"
#include "gwkit/data_model.hpp"
#include "gwkit/spatial_weights.hpp"

namespace gwkit {

// Weighted least squares at one location.
struct LocalFit {
    Eigen::VectorXd coefficients;  // beta(i)
    // (X'W_iX)^-1 X'W_i, k x n; coefficients = projection * y.
    Eigen::MatrixXd projection;
    double leverage = 0.0;         // s_ii
    bool pseudo_inverse = false;   // near-singular design solved by SVD
};

// Solves the WLS problem for location i with observation weights w. When the
// weighted design is near singular, a pseudo-inverse (singular values below
// 1e-10 of the largest dropped) is used and flagged.
//
// Throws LocalRankDeficientError when fewer observations than parameters
// carry positive weight.
LocalFit fit_local(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                   std::size_t location);

// Local fit of the table's design at location i under a kernel.
LocalFit fit_gwr_at(std::size_t location, const ObservationTable& table, const KernelSpec& kernel,
                    const DistanceMatrix& distances);

// CN of a weighted design: ratio of extreme singular values after scaling
// columns to unit norm. +inf when the smallest singular value is zero at
// working precision.
double condition_number(const Eigen::MatrixXd& weighted_design);

struct GwrOptions {
    unsigned threads = 1;
    double cn_threshold = 30.0;
    bool keep_projections = false;
};

struct GwrModel {
    std::vector<std::string> names;     // design columns
    std::optional<KernelSpec> kernel;   // empty for caller-supplied weights
    Eigen::MatrixXd coefficients;       // n x k
    Eigen::MatrixXd std_errors;         // n x k
    Eigen::MatrixXd t_values;           // n x k
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    Eigen::VectorXd leverage;           // diagonal of S
    Eigen::VectorXd local_cn;
    std::vector<Eigen::MatrixXd> projections;  // per location, when kept
    double rss = 0.0;
    double trace_s = 0.0;               // effective number of parameters
    double sigma2 = 0.0;                // rss / (n - tr S)
    double aicc = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    std::size_t cn_flagged = 0;         // locations with CN above threshold
    std::vector<std::string> warnings;
};

// AICc = 2n ln(sigma) + n ln(2 pi) + n (n + tr S) / (n - 2 - tr S),
// sigma^2 = rss / n. +inf when n - 2 - tr S <= 0.
double gwr_aicc(double rss, double trace_s, std::size_t n);

using WeightFunction = std::function<Eigen::VectorXd(std::size_t)>;

GwrModel fit_gwr(const ObservationTable& table, const KernelSpec& kernel, const GwrOptions& options = {});

// Same fit with arbitrary per-location observation weights.
GwrModel fit_gwr(const ObservationTable& table, const WeightFunction& weights,
                 const GwrOptions& options = {});

// AICc of the GWR of y on x at one kernel setting; +inf when any local
// design is unusable.
double gwr_criterion(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const DistanceMatrix& distances,
                     const KernelSpec& kernel, unsigned threads = 1);

struct BandwidthSearchOptions {
    std::optional<double> lower;  // default: p + 2 (adaptive) or min distance (fixed)
    std::optional<double> upper;  // default: n (adaptive) or max distance (fixed)
    unsigned threads = 1;
    bool exhaustive = false;      // scan every candidate instead of golden-section
};

// Picks the bandwidth minimizing AICc.
BandwidthSearchResult select_bandwidth(const ObservationTable& table, KernelFamily family, BandwidthMode mode,
                                       const BandwidthSearchOptions& options = {});
BandwidthSearchResult select_bandwidth(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const DistanceMatrix& distances, KernelFamily family,
                                       BandwidthMode mode, const BandwidthSearchOptions& options);

// CN at every location for the table's design under the kernel.
Eigen::VectorXd local_condition_numbers(const ObservationTable& table, const KernelSpec& kernel,
                                        unsigned threads = 1);

}  // namespace gwkit
