#include "gwkit/gwr.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include "gwkit/csv.hpp"
#include "gwkit/parallel.hpp"

namespace gwkit {

namespace {

// Local solution restricted to the rows with positive weight.
struct LocalSolve {
    std::vector<Eigen::Index> rows;  // observations with w > 0
    Eigen::MatrixXd projection;      // k x rows.size()
    bool pseudo_inverse = false;
};

LocalSolve solve_local(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, std::size_t location) {
    const Eigen::Index k = x.cols();
    LocalSolve out;
    for (Eigen::Index l = 0; l < w.size(); ++l)
        if (w(l) > 0.0) out.rows.push_back(l);
    const auto m = static_cast<Eigen::Index>(out.rows.size());
    if (m < k)
        throw LocalRankDeficientError("location " + std::to_string(location) + ": only " + std::to_string(m) +
                                          " observations carry positive weight for " + std::to_string(k) +
                                          " parameters; use a larger bandwidth",
                                      location);

    Eigen::MatrixXd xs = x(out.rows, Eigen::all);
    Eigen::VectorXd ws = w(out.rows);
    Eigen::MatrixXd xtw = (xs.array().colwise() * ws.array()).matrix().transpose();  // k x m
    Eigen::MatrixXd a = xtw * xs;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-14) {
        out.projection = llt.solve(xtw);
        return out;
    }

    Eigen::VectorXd sw = ws.array().sqrt();
    Eigen::MatrixXd b = sw.asDiagonal() * xs;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (!(sv(0) > 0.0))
        throw LocalRankDeficientError("location " + std::to_string(location) +
                                          ": weighted design is zero; use a larger bandwidth",
                                      location);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index s = 0; s < sv.size(); ++s)
        if (sv(s) > 1e-10 * sv(0)) inv(s) = 1.0 / sv(s);
    Eigen::MatrixXd pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();  // k x m
    out.projection = pinv * sw.asDiagonal();
    out.pseudo_inverse = true;
    return out;
}

double leverage_of(const Eigen::MatrixXd& x, const LocalSolve& s, std::size_t location) {
    const auto i = static_cast<Eigen::Index>(location);
    for (std::size_t c = 0; c < s.rows.size(); ++c)
        if (s.rows[c] == i) return x.row(i).dot(s.projection.col(static_cast<Eigen::Index>(c)));
    return 0.0;
}

}  // namespace

LocalFit fit_local(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                   std::size_t location) {
    if (x.rows() != y.size() || x.rows() != w.size()) throw Error("fit_local: dimension mismatch");
    auto s = solve_local(x, w, location);
    LocalFit out;
    out.pseudo_inverse = s.pseudo_inverse;
    out.coefficients = s.projection * y(s.rows);
    out.projection = Eigen::MatrixXd::Zero(x.cols(), x.rows());
    for (std::size_t c = 0; c < s.rows.size(); ++c)
        out.projection.col(s.rows[c]) = s.projection.col(static_cast<Eigen::Index>(c));
    out.leverage = leverage_of(x, s, location);
    return out;
}

LocalFit fit_gwr_at(std::size_t location, const ObservationTable& table, const KernelSpec& kernel,
                    const DistanceMatrix& distances) {
    return fit_local(table.design(), table.y(), kernel_weights_at(location, kernel, distances), location);
}

double condition_number(const Eigen::MatrixXd& weighted_design) {
    Eigen::MatrixXd scaled = weighted_design;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        double norm = scaled.col(j).norm();
        if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
        scaled.col(j) /= norm;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
    const auto& sv = svd.singularValues();
    double largest = sv(0), smallest = sv(sv.size() - 1);
    double floor = largest * static_cast<double>(std::max(scaled.rows(), scaled.cols())) *
                   std::numeric_limits<double>::epsilon();
    if (sv.size() < scaled.cols() || smallest <= floor) return std::numeric_limits<double>::infinity();
    return largest / smallest;
}

double gwr_aicc(double rss, double trace_s, std::size_t n) {
    const double dn = static_cast<double>(n);
    double denom = dn - 2.0 - trace_s;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return dn * std::log(rss / dn) + dn * std::log(2.0 * std::numbers::pi) + dn * (dn + trace_s) / denom;
}

GwrModel fit_gwr(const ObservationTable& table, const WeightFunction& weights, const GwrOptions& options) {
    const Eigen::MatrixXd x = table.design();
    const Eigen::VectorXd& y = table.y();
    const auto n = x.rows();
    const auto k = x.cols();

    GwrModel model;
    model.names = table.design_names();
    model.coefficients.resize(n, k);
    Eigen::MatrixXd squared_projection(n, k);
    model.fitted.resize(n);
    model.leverage.resize(n);
    model.local_cn.resize(n);
    if (options.keep_projections) model.projections.resize(static_cast<std::size_t>(n));
    std::vector<char> pinv(static_cast<std::size_t>(n), 0);

    parallel_for(static_cast<std::size_t>(n), options.threads, [&](std::size_t loc) {
        const auto i = static_cast<Eigen::Index>(loc);
        Eigen::VectorXd w = weights(loc);
        if (w.size() != n) throw Error("weight function returned wrong length");
        LocalFit f = fit_local(x, y, w, loc);
        model.coefficients.row(i) = f.coefficients.transpose();
        squared_projection.row(i) = f.projection.array().square().rowwise().sum().transpose();
        model.fitted(i) = x.row(i).dot(f.coefficients);
        model.leverage(i) = f.leverage;
        pinv[loc] = f.pseudo_inverse;
        model.local_cn(i) = condition_number(w.array().sqrt().matrix().asDiagonal() * x);
        if (options.keep_projections) model.projections[loc] = std::move(f.projection);
    });

    const double dn = static_cast<double>(n);
    model.residuals = y - model.fitted;
    model.rss = model.residuals.squaredNorm();
    model.trace_s = model.leverage.sum();
    model.sigma2 = model.rss / (dn - model.trace_s);
    model.std_errors = (model.sigma2 * squared_projection.array()).sqrt();
    model.t_values = model.coefficients.array() / model.std_errors.array();
    model.aicc = gwr_aicc(model.rss, model.trace_s, table.n());
    double llf = -0.5 * dn * (std::log(2.0 * std::numbers::pi) + std::log(model.rss / dn) + 1.0);
    model.aic = -2.0 * llf + 2.0 * (model.trace_s + 1.0);
    model.bic = -2.0 * llf + std::log(dn) * (model.trace_s + 1.0);
    double tss = (y.array() - y.mean()).square().sum();
    model.r_squared = 1.0 - model.rss / tss;
    model.adj_r_squared = 1.0 - (1.0 - model.r_squared) * (dn - 1.0) / (dn - model.trace_s);
    model.cn_flagged = static_cast<std::size_t>((model.local_cn.array() > options.cn_threshold).count());

    std::size_t pinv_count = 0;
    std::string first;
    for (std::size_t i = 0; i < pinv.size(); ++i)
        if (pinv[i]) {
            if (pinv_count++ < 5) first += " " + table.units()[i].id;
        }
    if (pinv_count)
        model.warnings.push_back(std::to_string(pinv_count) +
                                 " local designs near singular, pseudo-inverse used (e.g." + first + ")");
    return model;
}

GwrModel fit_gwr(const ObservationTable& table, const KernelSpec& kernel, const GwrOptions& options) {
    auto distances = DistanceMatrix::between(table.locations(), options.threads);
    auto model = fit_gwr(
        table, [&](std::size_t i) { return kernel_weights_at(i, kernel, distances); }, options);
    model.kernel = kernel;
    return model;
}

double gwr_criterion(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const DistanceMatrix& distances,
                     const KernelSpec& kernel, unsigned threads) {
    const auto n = static_cast<std::size_t>(x.rows());
    Eigen::VectorXd fitted(x.rows()), leverage(x.rows());
    std::atomic<bool> infeasible{false};
    parallel_for(n, threads, [&](std::size_t loc) {
        if (infeasible) return;
        try {
            Eigen::VectorXd w = kernel_weights_at(loc, kernel, distances);
            auto s = solve_local(x, w, loc);
            Eigen::VectorXd beta = s.projection * y(s.rows);
            const auto i = static_cast<Eigen::Index>(loc);
            fitted(i) = x.row(i).dot(beta);
            leverage(i) = leverage_of(x, s, loc);
        } catch (const LocalRankDeficientError&) {
            infeasible = true;
        }
    });
    if (infeasible) return std::numeric_limits<double>::infinity();
    return gwr_aicc((y - fitted).squaredNorm(), leverage.sum(), n);
}

BandwidthSearchResult select_bandwidth(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const DistanceMatrix& distances, KernelFamily family,
                                       BandwidthMode mode, const BandwidthSearchOptions& options) {
    const auto n = static_cast<double>(x.rows());
    auto objective = [&](double bw) {
        return gwr_criterion(x, y, distances, KernelSpec{family, mode, bw}, options.threads);
    };
    if (mode == BandwidthMode::adaptive) {
        // design includes the intercept, so p + 2 = cols + 1
        double lo = options.lower.value_or(static_cast<double>(x.cols()) + 1.0);
        double hi = options.upper.value_or(n);
        lo = std::clamp(std::ceil(lo), 1.0, n);
        hi = std::clamp(std::floor(hi), lo, n);
        return options.exhaustive ? exhaustive_integer(objective, static_cast<long>(lo), static_cast<long>(hi))
                                  : golden_section_integer(objective, static_cast<long>(lo), static_cast<long>(hi));
    }
    double lo = options.lower.value_or(distances.min_positive());
    double hi = options.upper.value_or(distances.max());
    if (!std::isfinite(lo) || !(hi >= lo)) throw Error("fixed bandwidth search: degenerate distance range");
    return golden_section_continuous(objective, lo, hi);
}

BandwidthSearchResult select_bandwidth(const ObservationTable& table, KernelFamily family, BandwidthMode mode,
                                       const BandwidthSearchOptions& options) {
    auto distances = DistanceMatrix::between(table.locations(), options.threads);
    return select_bandwidth(table.design(), table.y(), distances, family, mode, options);
}

Eigen::VectorXd local_condition_numbers(const ObservationTable& table, const KernelSpec& kernel,
                                        unsigned threads) {
    auto distances = DistanceMatrix::between(table.locations(), threads);
    const Eigen::MatrixXd x = table.design();
    Eigen::VectorXd cn(x.rows());
    parallel_for(table.n(), threads, [&](std::size_t i) {
        Eigen::VectorXd w = kernel_weights_at(i, kernel, distances);
        cn(static_cast<Eigen::Index>(i)) = condition_number(w.array().sqrt().matrix().asDiagonal() * x);
    });
    return cn;
}

}  // namespace gwkit
