#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwkit/data_model.hpp"

namespace gwkit {

// Global OLS fit with a Table-2 style diagnostic block.
//
// Coefficient vectors are indexed like ObservationTable::design(): the
// intercept first, then the covariates.
struct GlobalFit {
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_values;
    Eigen::VectorXd p_values;
    Eigen::VectorXd vif;  // one entry per covariate (no intercept)
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double sigma2 = 0.0;  // rss / df_residuals
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t n = 0;
    std::size_t df_model = 0;
    std::size_t df_residuals = 0;
};

// Least squares via Householder QR. Two-sided p-values use Student's t with
// df_residuals degrees of freedom. The log-likelihood is the full Gaussian
// one, constants included, and AIC/BIC count p + 1 coefficients.
//
// Throws RankDeficientError naming a minimal dependent set of design columns,
// or Error when n <= p + 1.
GlobalFit fit_ols(const ObservationTable& table);

// Two-sided p-value for a t statistic.
double t_test_p_value(double t, double df);
// Two-sided p-value for a standard normal statistic.
double normal_p_value(double z);
// Critical value t* with P(|T| > t*) = alpha.
double t_critical(double alpha, double df);

enum VifFlag : unsigned {
    vif_none = 0,
    vif_above_5 = 1u << 0,    // informational
    vif_above_7_5 = 1u << 1,
    vif_above_10 = 1u << 2,
};

struct VifEntry {
    std::string column;
    double vif = 1.0;  // +inf under perfect collinearity
    unsigned flags = vif_none;
};

// VIF_j = 1 / (1 - R_j^2), R_j^2 from regressing covariate j on the other
// covariates plus an intercept. Columns are flagged, never dropped.
std::vector<VifEntry> compute_vif(const ObservationTable& table);

// Minimal linearly dependent subset of the design columns, empty when the
// design has full column rank. Columns are compared after scaling to unit
// norm; `tolerance` bounds the residual norm that counts as dependent.
std::vector<std::size_t> dependent_column_set(const Eigen::MatrixXd& design, double tolerance = 1e-10);

}  // namespace gwkit
