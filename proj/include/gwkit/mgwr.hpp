#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwkit/data_model.hpp"
#include "gwkit/gwr.hpp"
#include "gwkit/spatial_weights.hpp"

namespace gwkit {

enum class MgwrInit { gwr, ols };

struct MgwrOptions {
    KernelFamily family = KernelFamily::bisquare;
    BandwidthMode mode = BandwidthMode::adaptive;
    std::optional<double> lower;  // bandwidth search bounds, as in BandwidthSearchOptions
    std::optional<double> upper;
    double tol = 1e-5;            // SOC-f threshold
    std::size_t max_iter = 200;
    MgwrInit init = MgwrInit::gwr;
    // GWR bandwidth for the initial fit; selected by AICc when empty.
    std::optional<double> init_bandwidth;
    // Per-term bandwidths held fixed instead of re-selected each pass.
    std::optional<std::vector<double>> fixed_bandwidths;
    bool allow_unstandardized = false;
    double alpha = 0.05;
    double cn_threshold = 30.0;
    unsigned threads = 1;
};

struct BackfitIteration {
    std::size_t iteration = 0;
    double soc = 0.0;
    double rss = 0.0;
    std::vector<double> bandwidths;
};

struct MgwrModel {
    std::vector<std::string> names;       // design columns, intercept first
    KernelFamily family = KernelFamily::bisquare;
    BandwidthMode mode = BandwidthMode::adaptive;
    Eigen::VectorXd bandwidths;           // one per term
    Eigen::MatrixXd coefficients;         // n x k
    Eigen::MatrixXd std_errors;
    Eigen::MatrixXd t_values;
    Eigen::MatrixXd contributions;        // n x k, X_j * beta_j
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    Eigen::VectorXd enp;                  // tr(R_j) per term
    Eigen::VectorXd adjusted_alpha;       // alpha / ENP_j (capped at alpha)
    Eigen::VectorXd critical_t;           // two-sided critical |t| per term
    Eigen::VectorXd local_cn;             // per-term bandwidths
    double init_bandwidth = 0.0;
    double trace_s = 0.0;
    double rss = 0.0;
    double sigma2 = 0.0;                  // rss / (n - tr S)
    double aicc = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<BackfitIteration> trace;
    std::size_t cn_flagged = 0;
    std::vector<std::string> warnings;

    // |t| above the term's critical value.
    bool significant(std::size_t location, std::size_t term) const;
};

// Multiscale GWR by backfitting. Each pass updates the terms in column
// order: partial residual, AICc bandwidth for the univariate GWR of that
// residual on X_j, refit. Per-term hat matrices R_j are tracked so that
// ENP_j = tr(R_j) and tr(S) = sum_j ENP_j. Stops when
// SOC-f = sqrt(mean(dyhat^2)) / sqrt(mean(yhat^2)) < tol.
//
// Requires a standardized table unless allow_unstandardized is set. On
// non-convergence the iterate with the smallest SOC-f is returned with
// converged = false.
MgwrModel fit_mgwr(const ObservationTable& table, const MgwrOptions& options = {});

struct MgwrSummaryRow {
    std::string name;
    double bandwidth = 0.0;
    double enp = 0.0;
    double critical_t = 0.0;
    double std = 0.0;  // population standard deviation of the surface
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
    std::size_t significant = 0;  // locations with |t| above critical_t
};

struct MgwrSummary {
    std::vector<MgwrSummaryRow> rows;
    std::size_t n = 0;
    double trace_s = 0.0;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    double aic = 0.0;
    double aicc = 0.0;
    double bic = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

MgwrSummary summarize_mgwr(const MgwrModel& model);

}  // namespace gwkit
