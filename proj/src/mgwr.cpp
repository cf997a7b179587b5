#include "gwkit/mgwr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gwkit/csv.hpp"
#include "gwkit/global_regression.hpp"
#include "gwkit/parallel.hpp"

namespace gwkit {

namespace {

// Row i holds the univariate GWR coefficient weights at location i:
// beta_j(i) = B.row(i) * residual.
Eigen::MatrixXd univariate_smoother(const Eigen::VectorXd& xj, const KernelSpec& kernel,
                                    const DistanceMatrix& distances, const std::string& term,
                                    unsigned threads) {
    const auto n = xj.size();
    Eigen::MatrixXd b(n, n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t loc) {
        Eigen::VectorXd w = kernel_weights_at(loc, kernel, distances);
        Eigen::VectorXd wx = w.cwiseProduct(xj);
        double denom = wx.dot(xj);
        if (!(denom > 0.0))
            throw LocalRankDeficientError("term '" + term + "' has no weighted variation at location " +
                                              std::to_string(loc) + "; use a larger bandwidth",
                                          loc);
        b.row(static_cast<Eigen::Index>(loc)) = wx.transpose() / denom;
    });
    return b;
}

struct BackfitState {
    Eigen::MatrixXd betas;                 // n x k
    std::vector<Eigen::MatrixXd> coef_hat; // C_j, n x n: beta_j = C_j y
    Eigen::MatrixXd hat;                   // S = sum_j diag(x_j) C_j
    Eigen::VectorXd bandwidths;
};

}  // namespace

bool MgwrModel::significant(std::size_t location, std::size_t term) const {
    return std::abs(t_values(static_cast<Eigen::Index>(location), static_cast<Eigen::Index>(term))) >
           critical_t(static_cast<Eigen::Index>(term));
}

MgwrModel fit_mgwr(const ObservationTable& table, const MgwrOptions& options) {
    if (!table.standardized() && !options.allow_unstandardized)
        throw Error("MGWR requires a standardized table (per-term bandwidths are only comparable on a common scale)");
    const std::size_t n = table.n();
    const std::size_t k = table.p() + 1;
    if (n <= table.p() + 2) throw Error("MGWR needs n > p + 2");
    if (options.fixed_bandwidths && options.fixed_bandwidths->size() != k)
        throw Error("fixed_bandwidths needs one bandwidth per term (" + std::to_string(k) + ")");

    const Eigen::MatrixXd x = table.design();
    const Eigen::VectorXd& y = table.y();
    const auto names = table.design_names();
    const auto ni = static_cast<Eigen::Index>(n);
    const auto ki = static_cast<Eigen::Index>(k);
    auto distances = DistanceMatrix::between(table.locations(), options.threads);

    MgwrModel model;
    model.names = names;
    model.family = options.family;
    model.mode = options.mode;

    BandwidthSearchOptions search;
    search.lower = options.lower;
    if (!search.lower && options.mode == BandwidthMode::adaptive) search.lower = static_cast<double>(k + 1);
    search.upper = options.upper;
    search.threads = options.threads;

    // ---- initialization
    BackfitState state;
    state.coef_hat.assign(k, Eigen::MatrixXd(ni, ni));
    state.bandwidths = Eigen::VectorXd::Constant(ki, std::numeric_limits<double>::quiet_NaN());
    if (options.init == MgwrInit::gwr) {
        double bw0 = options.init_bandwidth
                         ? *options.init_bandwidth
                         : select_bandwidth(x, y, distances, options.family, options.mode, search).bandwidth;
        model.init_bandwidth = bw0;
        KernelSpec kernel{options.family, options.mode, bw0};
        GwrOptions gopt;
        gopt.threads = options.threads;
        gopt.keep_projections = true;
        auto gwr = fit_gwr(table, [&](std::size_t i) { return kernel_weights_at(i, kernel, distances); }, gopt);
        state.betas = gwr.coefficients;
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < ki; ++j)
                state.coef_hat[static_cast<std::size_t>(j)].row(i) =
                    gwr.projections[static_cast<std::size_t>(i)].row(j);
        state.bandwidths.setConstant(bw0);
    } else {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
        Eigen::MatrixXd proj = qr.solve(Eigen::MatrixXd::Identity(ni, ni));  // (X'X)^-1 X', k x n
        Eigen::VectorXd beta = proj * y;
        state.betas = beta.transpose().replicate(ni, 1);
        for (Eigen::Index j = 0; j < ki; ++j)
            state.coef_hat[static_cast<std::size_t>(j)] = proj.row(j).replicate(ni, 1);
        state.bandwidths.setConstant(static_cast<double>(n));
    }
    state.hat = Eigen::MatrixXd::Zero(ni, ni);
    for (Eigen::Index j = 0; j < ki; ++j)
        state.hat += x.col(j).asDiagonal() * state.coef_hat[static_cast<std::size_t>(j)];

    Eigen::MatrixXd contributions = x.cwiseProduct(state.betas);
    Eigen::VectorXd fitted = contributions.rowwise().sum();

    // ---- backfitting
    std::vector<std::pair<std::string, std::size_t>> search_notes;  // repeated search warnings, counted
    BackfitState best = state;
    std::size_t damped_steps = 0;
    double best_soc = std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(ni, ni);
    for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
        const Eigen::VectorXd previous = fitted;
        for (Eigen::Index j = 0; j < ki; ++j) {
            const auto term = static_cast<std::size_t>(j);
            const Eigen::VectorXd xj = x.col(j);
            Eigen::VectorXd partial = y - fitted + contributions.col(j);

            double bw;
            if (options.fixed_bandwidths) {
                bw = (*options.fixed_bandwidths)[term];
            } else {
                auto sel = select_bandwidth(Eigen::MatrixXd(xj), partial, distances, options.family,
                                            options.mode, search);
                bw = sel.bandwidth;
                for (auto& w : sel.warnings) {
                    std::string key = names[term] + ": " + w;
                    auto it = std::find_if(search_notes.begin(), search_notes.end(),
                                           [&](const auto& note) { return note.first == key; });
                    if (it == search_notes.end())
                        search_notes.emplace_back(std::move(key), 1);
                    else
                        ++it->second;
                }
            }
            Eigen::MatrixXd smoother = univariate_smoother(
                xj, KernelSpec{options.family, options.mode, bw}, distances, names[term], options.threads);
            Eigen::VectorXd beta = smoother * partial;

            // Plain backfitting is not a projection and can raise the RSS. When the full
            // step would, move only as far along it as the RSS keeps falling.
            const Eigen::VectorXd residual = y - fitted;
            const Eigen::VectorXd direction = xj.cwiseProduct(beta - state.betas.col(j));
            double step = 1.0;
            if ((residual - direction).squaredNorm() > residual.squaredNorm()) {
                double dd = direction.squaredNorm();
                step = dd > 0.0 ? std::clamp(residual.dot(direction) / dd, 0.0, 1.0) : 0.0;
                ++damped_steps;
            }
            if (step == 0.0) continue;
            state.bandwidths(j) = bw;
            beta = state.betas.col(j) + step * (beta - state.betas.col(j));

            Eigen::MatrixXd old_term_hat = xj.asDiagonal() * state.coef_hat[term];
            Eigen::MatrixXd full = smoother * (identity - state.hat + old_term_hat);
            state.coef_hat[term] += step * (full - state.coef_hat[term]);
            state.hat += xj.asDiagonal() * state.coef_hat[term] - old_term_hat;

            state.betas.col(j) = beta;
            Eigen::VectorXd contrib = xj.cwiseProduct(beta);
            fitted += contrib - contributions.col(j);
            contributions.col(j) = contrib;
        }
        // re-sum to keep the additive decomposition exact
        fitted = contributions.rowwise().sum();

        double change = std::sqrt((fitted - previous).squaredNorm() / static_cast<double>(n));
        double scale = std::sqrt(fitted.squaredNorm() / static_cast<double>(n));
        double soc = scale > 0.0 ? change / scale : (change > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        double rss = (y - fitted).squaredNorm();
        model.trace.push_back({iter, soc, rss,
                               std::vector<double>(state.bandwidths.data(), state.bandwidths.data() + ki)});
        model.iterations = iter;
        if (soc < best_soc) {
            best_soc = soc;
            best = state;
        }
        if (soc < options.tol) {
            model.converged = true;
            break;
        }
    }
    for (const auto& [note, count] : search_notes)
        model.warnings.push_back(note + " (" + std::to_string(count) + (count == 1 ? " iteration)" : " iterations)"));
    if (damped_steps > 0)
        model.warnings.push_back("backfitting shortened " + std::to_string(damped_steps) +
                                 " term updates to keep the RSS from rising");
    if (!model.converged) {
        model.warnings.push_back("backfitting did not converge in " + std::to_string(options.max_iter) +
                                 " iterations; returning the iterate with SOC-f " + csv::format_double(best_soc));
        state = std::move(best);
    }

    // ---- diagnostics
    const double dn = static_cast<double>(n);
    model.bandwidths = state.bandwidths;
    model.coefficients = state.betas;
    model.contributions = x.cwiseProduct(state.betas);
    model.fitted = model.contributions.rowwise().sum();
    model.residuals = y - model.fitted;
    model.rss = model.residuals.squaredNorm();
    model.enp.resize(ki);
    for (Eigen::Index j = 0; j < ki; ++j)
        model.enp(j) = x.col(j).cwiseProduct(state.coef_hat[static_cast<std::size_t>(j)].diagonal()).sum();
    model.trace_s = state.hat.trace();
    model.sigma2 = model.rss / (dn - model.trace_s);
    model.std_errors.resize(ni, ki);
    for (Eigen::Index j = 0; j < ki; ++j)
        model.std_errors.col(j) =
            (model.sigma2 * state.coef_hat[static_cast<std::size_t>(j)].rowwise().squaredNorm().array()).sqrt();
    model.t_values = model.coefficients.array() / model.std_errors.array();

    model.adjusted_alpha.resize(ki);
    model.critical_t.resize(ki);
    const double df = dn - model.trace_s;
    for (Eigen::Index j = 0; j < ki; ++j) {
        double a = model.enp(j) > 1.0 ? options.alpha / model.enp(j) : options.alpha;
        model.adjusted_alpha(j) = a;
        model.critical_t(j) = df > 0.0 ? t_critical(a, df) : std::numeric_limits<double>::infinity();
    }

    model.aicc = gwr_aicc(model.rss, model.trace_s, n);
    double llf = -0.5 * dn * (std::log(2.0 * std::numbers::pi) + std::log(model.rss / dn) + 1.0);
    model.aic = -2.0 * llf + 2.0 * (model.trace_s + 1.0);
    model.bic = -2.0 * llf + std::log(dn) * (model.trace_s + 1.0);
    double tss = (y.array() - y.mean()).square().sum();
    model.r_squared = 1.0 - model.rss / tss;
    model.adj_r_squared = 1.0 - (1.0 - model.r_squared) * (dn - 1.0) / (dn - model.trace_s);

    // local collinearity with each term weighted by its own kernel
    model.local_cn.resize(ni);
    parallel_for(n, options.threads, [&](std::size_t loc) {
        Eigen::MatrixXd weighted(ni, ki);
        for (Eigen::Index j = 0; j < ki; ++j) {
            KernelSpec kernel{options.family, options.mode, model.bandwidths(j)};
            weighted.col(j) = kernel_weights_at(loc, kernel, distances).array().sqrt() * x.col(j).array();
        }
        model.local_cn(static_cast<Eigen::Index>(loc)) = condition_number(weighted);
    });
    model.cn_flagged = static_cast<std::size_t>((model.local_cn.array() > options.cn_threshold).count());
    return model;
}

MgwrSummary summarize_mgwr(const MgwrModel& model) {
    MgwrSummary out;
    out.n = static_cast<std::size_t>(model.coefficients.rows());
    out.trace_s = model.trace_s;
    out.r_squared = model.r_squared;
    out.adj_r_squared = model.adj_r_squared;
    out.aic = model.aic;
    out.aicc = model.aicc;
    out.bic = model.bic;
    out.converged = model.converged;
    out.iterations = model.iterations;
    for (Eigen::Index j = 0; j < model.coefficients.cols(); ++j) {
        Eigen::VectorXd col = model.coefficients.col(j);
        std::vector<double> sorted(col.data(), col.data() + col.size());
        std::sort(sorted.begin(), sorted.end());
        std::size_t m = sorted.size();
        double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        double mean = col.mean();
        MgwrSummaryRow row;
        row.name = model.names[static_cast<std::size_t>(j)];
        row.bandwidth = model.bandwidths(j);
        row.enp = model.enp(j);
        row.critical_t = model.critical_t(j);
        row.std = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(m));
        row.min = sorted.front();
        row.median = median;
        row.max = sorted.back();
        for (std::size_t i = 0; i < m; ++i)
            if (model.significant(i, static_cast<std::size_t>(j))) ++row.significant;
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace gwkit
