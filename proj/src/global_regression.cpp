#include "gwkit/global_regression.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

namespace gwkit {

double t_test_p_value(double t, double df) {
    if (std::isnan(t) || !(df > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double normal_p_value(double z) {
    if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
    return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

double t_critical(double alpha, double df) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    if (!(df > 0.0)) throw Error("degrees of freedom must be positive");
    boost::math::students_t dist(df);
    return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

std::vector<std::size_t> dependent_column_set(const Eigen::MatrixXd& design, double tolerance) {
    const Eigen::Index k = design.cols();
    std::vector<std::size_t> basis;
    for (Eigen::Index j = 0; j < k; ++j) {
        double norm = design.col(j).norm();
        if (norm == 0.0) return {static_cast<std::size_t>(j)};
        Eigen::VectorXd col = design.col(j) / norm;
        if (basis.empty()) {
            basis.push_back(static_cast<std::size_t>(j));
            continue;
        }
        Eigen::MatrixXd b(design.rows(), static_cast<Eigen::Index>(basis.size()));
        for (std::size_t c = 0; c < basis.size(); ++c) {
            auto src = design.col(static_cast<Eigen::Index>(basis[c]));
            b.col(static_cast<Eigen::Index>(c)) = src / src.norm();
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
        Eigen::VectorXd coef = qr.solve(col);
        double resid = (col - b * coef).norm();
        if (resid <= tolerance) {
            std::vector<std::size_t> set;
            double scale = coef.cwiseAbs().maxCoeff();
            for (std::size_t c = 0; c < basis.size(); ++c)
                if (std::abs(coef(static_cast<Eigen::Index>(c))) > 1e-8 * scale) set.push_back(basis[c]);
            set.push_back(static_cast<std::size_t>(j));
            return set;
        }
        basis.push_back(static_cast<std::size_t>(j));
    }
    return {};
}

std::vector<VifEntry> compute_vif(const ObservationTable& table) {
    const auto n = static_cast<Eigen::Index>(table.n());
    const auto p = static_cast<Eigen::Index>(table.p());
    if (p > 0 && n <= p) throw Error("VIF needs more rows than covariates");
    const Eigen::MatrixXd& x = table.x();

    std::vector<VifEntry> out;
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::MatrixXd aux(n, p);
        aux.col(0).setOnes();
        for (Eigen::Index c = 0, dst = 1; c < p; ++c)
            if (c != j) aux.col(dst++) = x.col(c);
        Eigen::VectorXd target = x.col(j);

        double tss = (target.array() - target.mean()).square().sum();
        double vif = std::numeric_limits<double>::infinity();
        if (tss > 0.0) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aux);
            Eigen::VectorXd coef = qr.solve(target);
            double rss = (target - aux * coef).squaredNorm();
            double unexplained = rss / tss;  // 1 - R^2
            if (unexplained > 1e-12) vif = 1.0 / unexplained;
        }

        VifEntry entry{table.x_names()[static_cast<std::size_t>(j)], vif, vif_none};
        if (vif > 5.0) entry.flags |= vif_above_5;
        if (vif > 7.5) entry.flags |= vif_above_7_5;
        if (vif > 10.0) entry.flags |= vif_above_10;
        out.push_back(std::move(entry));
    }
    return out;
}

GlobalFit fit_ols(const ObservationTable& table) {
    const std::size_t n = table.n();
    const std::size_t p = table.p();
    if (n <= p + 1)
        throw Error("OLS needs n > p + 1 (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");

    Eigen::MatrixXd x = table.design();
    auto names = table.design_names();
    if (auto dep = dependent_column_set(x); !dep.empty()) {
        std::vector<std::string> cols;
        std::string msg = "design matrix is rank deficient; dependent columns:";
        for (auto c : dep) {
            cols.push_back(names[c]);
            msg += " " + names[c];
        }
        throw RankDeficientError(msg, std::move(cols));
    }

    const Eigen::VectorXd& y = table.y();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    GlobalFit fit;
    fit.names = std::move(names);
    fit.n = n;
    fit.df_model = p;
    fit.df_residuals = n - p - 1;
    fit.coefficients = qr.solve(y);
    fit.fitted = x * fit.coefficients;
    fit.residuals = y - fit.fitted;
    fit.rss = fit.residuals.squaredNorm();
    fit.sigma2 = fit.rss / static_cast<double>(fit.df_residuals);

    // (X'X)^-1 = R^-1 R^-T
    const auto k = x.cols();
    Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::VectorXd diag = (r_inv * r_inv.transpose()).diagonal();
    fit.std_errors = (fit.sigma2 * diag.array()).sqrt();
    fit.t_values = fit.coefficients.array() / fit.std_errors.array();
    fit.p_values.resize(k);
    for (Eigen::Index j = 0; j < k; ++j)
        fit.p_values(j) = t_test_p_value(fit.t_values(j), static_cast<double>(fit.df_residuals));

    const double dn = static_cast<double>(n);
    double tss = (y.array() - y.mean()).square().sum();
    fit.r_squared = tss > 0.0 ? 1.0 - fit.rss / tss : std::numeric_limits<double>::quiet_NaN();
    fit.adj_r_squared = 1.0 - (1.0 - fit.r_squared) * (dn - 1.0) / static_cast<double>(fit.df_residuals);
    fit.log_likelihood = -0.5 * dn * (std::log(2.0 * std::numbers::pi) + std::log(fit.rss / dn) + 1.0);
    const double params = static_cast<double>(p + 1);
    fit.aic = -2.0 * fit.log_likelihood + 2.0 * params;
    fit.bic = -2.0 * fit.log_likelihood + std::log(dn) * params;

    auto vif = compute_vif(table);
    fit.vif.resize(static_cast<Eigen::Index>(vif.size()));
    for (std::size_t j = 0; j < vif.size(); ++j) fit.vif(static_cast<Eigen::Index>(j)) = vif[j].vif;
    return fit;
}

}  // namespace gwkit
