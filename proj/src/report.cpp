#include "gwkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gwkit/csv.hpp"

namespace gwkit::report {

namespace {

using nlohmann::ordered_json;

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::size_t name_width(const std::vector<std::string>& names, std::size_t at_least) {
    std::size_t w = at_least;
    for (const auto& n : names) w = std::max(w, n.size());
    return w + 2;
}

std::string bandwidth_text(double b) {
    if (std::isfinite(b) && b == std::round(b) && std::abs(b) < 1e15)
        return std::to_string(static_cast<long long>(b));
    return csv::format_fixed(b, 3);
}

std::string fixed_or_inf(double v, int decimals) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return csv::format_fixed(v, decimals);
}

std::string fmt(double v) { return csv::format_double(v); }

std::string rows_to_csv(const std::vector<csv::Row>& rows) {
    std::ostringstream out;
    for (const auto& r : rows) csv::write_row(out, r);
    return out.str();
}

ordered_json geometry_of(const AreaUnit& unit) {
    if (!unit.polygon) return {{"type", "Point"}, {"coordinates", {unit.location.u, unit.location.v}}};
    auto ring_json = [](const Ring& ring) {
        ordered_json r = ordered_json::array();
        for (const auto& p : ring) r.push_back({p.u, p.v});
        if (!ring.empty() && !(ring.front() == ring.back())) r.push_back({ring.front().u, ring.front().v});
        return r;
    };
    auto polygon_json = [&](const Polygon& poly) {
        ordered_json rings = ordered_json::array();
        for (const auto& ring : poly.rings) rings.push_back(ring_json(ring));
        return rings;
    };
    if (unit.polygon->size() == 1) return {{"type", "Polygon"}, {"coordinates", polygon_json(unit.polygon->front())}};
    ordered_json polys = ordered_json::array();
    for (const auto& poly : *unit.polygon) polys.push_back(polygon_json(poly));
    return {{"type", "MultiPolygon"}, {"coordinates", polys}};
}

// Non-finite numbers have no JSON form; they become null.
ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string feature_collection(const ObservationTable& table, const std::vector<ordered_json>& properties) {
    ordered_json fc{{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto& unit = table.units()[i];
        fc["features"].push_back(
            {{"type", "Feature"}, {"id", unit.id}, {"properties", properties[i]}, {"geometry", geometry_of(unit)}});
    }
    return fc.dump(1) + "\n";
}

struct Spread {
    double mean, std, min, median, max;
};

Spread spread(const Eigen::VectorXd& col) {
    std::vector<double> s(col.data(), col.data() + col.size());
    std::sort(s.begin(), s.end());
    const std::size_t m = s.size();
    double mean = col.mean();
    return {mean, std::sqrt((col.array() - mean).square().sum() / static_cast<double>(m)), s.front(),
            m % 2 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]), s.back()};
}

void footer_line(std::ostringstream& out, const std::string& label, const std::string& value, std::size_t width) {
    out << pad_right(label, width) << value << '\n';
}

}  // namespace

std::string p_value_text(double p) {
    std::string s = fixed_or_inf(p, 3);
    if (p < 0.001)
        s += "***";
    else if (p < 0.01)
        s += "**";
    else if (p < 0.05)
        s += "*";
    return s;
}

// ---------------------------------------------------------------- OLS

std::string ols_text(const GlobalFit& fit, const std::vector<VifEntry>& vif, const std::string& dependent) {
    const std::size_t w = name_width(fit.names, 18);
    std::ostringstream out;
    out << "Dependent Variable: " << dependent << '\n';
    out << pad_right("", w) << pad_left("Est Coeff", 11) << pad_left("T-value", 11) << pad_left("P-Value", 12)
        << pad_left("VIF", 9) << '\n';
    for (std::size_t k = 0; k < fit.names.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        std::string v = k == 0 ? "-" : fixed_or_inf(vif.at(k - 1).vif, 2);
        out << pad_right(fit.names[k], w) << pad_left(fixed_or_inf(fit.coefficients(kk), 3), 11)
            << pad_left(fixed_or_inf(fit.t_values(kk), 3), 11) << pad_left(p_value_text(fit.p_values(kk)), 12)
            << pad_left(v, 9) << '\n';
    }
    footer_line(out, "r-squared:", csv::format_fixed(fit.r_squared, 3), w);
    footer_line(out, "adj. r-squared:", csv::format_fixed(fit.adj_r_squared, 3), w);
    footer_line(out, "method:", "Least Squares", w);
    footer_line(out, "No. Observations:", std::to_string(fit.n), w);
    footer_line(out, "Df Residuals:", std::to_string(fit.df_residuals), w);
    footer_line(out, "Df Model:", std::to_string(fit.df_model), w);
    footer_line(out, "AIC:", csv::format_fixed(fit.aic, 1), w);
    footer_line(out, "BIC:", csv::format_fixed(fit.bic, 1), w);
    return out.str();
}

std::string ols_csv(const GlobalFit& fit, const std::vector<VifEntry>& vif) {
    std::vector<csv::Row> rows{{"term", "coefficient", "std_error", "t_value", "p_value", "vif"}};
    for (std::size_t k = 0; k < fit.names.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        rows.push_back({fit.names[k], fmt(fit.coefficients(kk)), fmt(fit.std_errors(kk)), fmt(fit.t_values(kk)),
                        fmt(fit.p_values(kk)), k == 0 ? "" : fmt(vif.at(k - 1).vif)});
    }
    return rows_to_csv(rows);
}

std::string ols_diagnostics_csv(const GlobalFit& fit) {
    return rows_to_csv({{"statistic", "value"},
                        {"r_squared", fmt(fit.r_squared)},
                        {"adj_r_squared", fmt(fit.adj_r_squared)},
                        {"log_likelihood", fmt(fit.log_likelihood)},
                        {"aic", fmt(fit.aic)},
                        {"bic", fmt(fit.bic)},
                        {"sigma2", fmt(fit.sigma2)},
                        {"rss", fmt(fit.rss)},
                        {"n", std::to_string(fit.n)},
                        {"df_residuals", std::to_string(fit.df_residuals)},
                        {"df_model", std::to_string(fit.df_model)}});
}

// ---------------------------------------------------------------- Moran

std::string moran_text(const MoranResult& r, const std::string& variable, const std::string& weights) {
    const std::size_t w = 24;
    std::ostringstream out;
    out << "Global Moran's I: " << variable << '\n';
    footer_line(out, "weights:", weights, w);
    footer_line(out, "Moran's I:", csv::format_fixed(r.statistic, 4), w);
    footer_line(out, "Expected I:", csv::format_fixed(r.expected, 4), w);
    footer_line(out, "Variance:", csv::format_fixed(r.variance, 6), w);
    footer_line(out, "z-score:", csv::format_fixed(r.z_score, 3), w);
    footer_line(out, "p-value (normal):", p_value_text(r.p_analytic), w);
    if (r.permutations > 0) {
        footer_line(out, "p-value (permutation):", p_value_text(r.p_permutation), w);
        footer_line(out, "permutations:", std::to_string(r.permutations), w);
        footer_line(out, "seed:", std::to_string(r.seed), w);
    }
    for (const auto& warning : r.warnings) out << "warning: " << warning << '\n';
    return out.str();
}

std::string moran_csv(const MoranResult& r) {
    return rows_to_csv({{"statistic", "value"},
                        {"moran_i", fmt(r.statistic)},
                        {"expected", fmt(r.expected)},
                        {"variance", fmt(r.variance)},
                        {"z_score", fmt(r.z_score)},
                        {"p_analytic", fmt(r.p_analytic)},
                        {"p_permutation", r.permutations > 0 ? fmt(r.p_permutation) : ""},
                        {"permutations", std::to_string(r.permutations)},
                        {"seed", std::to_string(r.seed)}});
}

// ---------------------------------------------------------------- GWR

std::string gwr_text(const GwrModel& m, const std::string& dependent) {
    const std::size_t w = name_width(m.names, 18);
    const double bw = m.kernel ? m.kernel->bandwidth : std::nan("");
    std::ostringstream out;
    out << "Dependent Variable: " << dependent << '\n';
    if (m.kernel)
        out << "Kernel: " << to_string(m.kernel->family) << ", " << to_string(m.kernel->mode) << '\n';
    out << pad_right("", w) << pad_left("Bandwidth", 11) << pad_left("Mean", 9) << pad_left("STD", 9)
        << pad_left("Min", 9) << pad_left("Median", 9) << pad_left("Max", 9) << '\n';
    for (std::size_t k = 0; k < m.names.size(); ++k) {
        auto s = spread(m.coefficients.col(static_cast<Eigen::Index>(k)));
        out << pad_right(m.names[k], w) << pad_left(bandwidth_text(bw), 11) << pad_left(csv::format_fixed(s.mean, 2), 9)
            << pad_left(csv::format_fixed(s.std, 2), 9) << pad_left(csv::format_fixed(s.min, 2), 9)
            << pad_left(csv::format_fixed(s.median, 2), 9) << pad_left(csv::format_fixed(s.max, 2), 9) << '\n';
    }
    footer_line(out, "r-squared:", csv::format_fixed(m.r_squared, 3), w);
    footer_line(out, "adj. r-squared:", csv::format_fixed(m.adj_r_squared, 3), w);
    footer_line(out, "No. Observations:", std::to_string(m.fitted.size()), w);
    footer_line(out, "Effective params:", csv::format_fixed(m.trace_s, 3), w);
    footer_line(out, "AICc:", fixed_or_inf(m.aicc, 1), w);
    footer_line(out, "AIC:", csv::format_fixed(m.aic, 1), w);
    footer_line(out, "BIC:", csv::format_fixed(m.bic, 1), w);
    footer_line(out, "CN > threshold:", std::to_string(m.cn_flagged), w);
    for (const auto& warning : m.warnings) out << "warning: " << warning << '\n';
    return out.str();
}

std::string gwr_csv(const GwrModel& m) {
    const double bw = m.kernel ? m.kernel->bandwidth : std::nan("");
    std::vector<csv::Row> rows{{"term", "bandwidth", "mean", "std", "min", "median", "max"}};
    for (std::size_t k = 0; k < m.names.size(); ++k) {
        auto s = spread(m.coefficients.col(static_cast<Eigen::Index>(k)));
        rows.push_back({m.names[k], fmt(bw), fmt(s.mean), fmt(s.std), fmt(s.min), fmt(s.median), fmt(s.max)});
    }
    rows.push_back({"r_squared", fmt(m.r_squared)});
    rows.push_back({"adj_r_squared", fmt(m.adj_r_squared)});
    rows.push_back({"trace_s", fmt(m.trace_s)});
    rows.push_back({"aicc", fmt(m.aicc)});
    rows.push_back({"aic", fmt(m.aic)});
    rows.push_back({"bic", fmt(m.bic)});
    rows.push_back({"sigma2", fmt(m.sigma2)});
    rows.push_back({"rss", fmt(m.rss)});
    return rows_to_csv(rows);
}

std::string gwr_surfaces_csv(const GwrModel& m, const ObservationTable& table) {
    csv::Row header{"id", "u", "v", "fitted", "residual", "leverage", "local_cn"};
    for (const auto& nm : m.names) {
        header.push_back("beta_" + nm);
        header.push_back("se_" + nm);
        header.push_back("t_" + nm);
    }
    std::vector<csv::Row> rows{header};
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto& u = table.units()[i];
        csv::Row r{u.id,           fmt(u.location.u),  fmt(u.location.v), fmt(m.fitted(ii)),
                   fmt(m.residuals(ii)), fmt(m.leverage(ii)), fmt(m.local_cn(ii))};
        for (Eigen::Index k = 0; k < m.coefficients.cols(); ++k) {
            r.push_back(fmt(m.coefficients(ii, k)));
            r.push_back(fmt(m.std_errors(ii, k)));
            r.push_back(fmt(m.t_values(ii, k)));
        }
        rows.push_back(std::move(r));
    }
    return rows_to_csv(rows);
}

std::string gwr_surfaces_geojson(const GwrModel& m, const ObservationTable& table) {
    std::vector<ordered_json> props(table.n());
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        auto& p = props[i];
        p["id"] = table.units()[i].id;
        p["fitted"] = number(m.fitted(ii));
        p["residual"] = number(m.residuals(ii));
        p["local_cn"] = number(m.local_cn(ii));
        for (std::size_t k = 0; k < m.names.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            p["beta_" + m.names[k]] = number(m.coefficients(ii, kk));
            p["t_" + m.names[k]] = number(m.t_values(ii, kk));
        }
    }
    return feature_collection(table, props);
}

// ---------------------------------------------------------------- MGWR

std::string mgwr_text(const MgwrSummary& s, const std::string& dependent) {
    std::vector<std::string> names;
    for (const auto& r : s.rows) names.push_back(r.name);
    const std::size_t w = name_width(names, 18);
    std::ostringstream out;
    out << "Dependent Variable: " << dependent << '\n';
    out << pad_right("", w) << pad_left("Bandwidth", 11) << pad_left("STD", 9) << pad_left("Min", 9)
        << pad_left("Median", 9) << pad_left("Max", 9) << pad_left("ENP", 9) << pad_left("Crit t", 9) << '\n';
    for (const auto& r : s.rows) {
        out << pad_right(r.name, w) << pad_left(bandwidth_text(r.bandwidth), 11)
            << pad_left(csv::format_fixed(r.std, 2), 9) << pad_left(csv::format_fixed(r.min, 2), 9)
            << pad_left(csv::format_fixed(r.median, 2), 9) << pad_left(csv::format_fixed(r.max, 2), 9)
            << pad_left(csv::format_fixed(r.enp, 2), 9) << pad_left(fixed_or_inf(r.critical_t, 3), 9) << '\n';
    }
    footer_line(out, "r-squared:", csv::format_fixed(s.r_squared, 3), w);
    footer_line(out, "adj. r-squared:", csv::format_fixed(s.adj_r_squared, 3), w);
    footer_line(out, "AIC:", csv::format_fixed(s.aic, 1), w);
    footer_line(out, "BIC:", csv::format_fixed(s.bic, 1), w);
    footer_line(out, "AICc:", fixed_or_inf(s.aicc, 1), w);
    footer_line(out, "No. Observations:", std::to_string(s.n), w);
    footer_line(out, "Effective params:", csv::format_fixed(s.trace_s, 3), w);
    footer_line(out, "converged:", s.converged ? "yes" : "no", w);
    footer_line(out, "iterations:", std::to_string(s.iterations), w);
    return out.str();
}

std::string mgwr_csv(const MgwrSummary& s) {
    std::vector<csv::Row> rows{
        {"term", "bandwidth", "std", "min", "median", "max", "enp", "critical_t", "significant_count"}};
    for (const auto& r : s.rows)
        rows.push_back({r.name, fmt(r.bandwidth), fmt(r.std), fmt(r.min), fmt(r.median), fmt(r.max), fmt(r.enp),
                        fmt(r.critical_t), std::to_string(r.significant)});
    rows.push_back({"r_squared", fmt(s.r_squared)});
    rows.push_back({"adj_r_squared", fmt(s.adj_r_squared)});
    rows.push_back({"aic", fmt(s.aic)});
    rows.push_back({"bic", fmt(s.bic)});
    rows.push_back({"aicc", fmt(s.aicc)});
    rows.push_back({"trace_s", fmt(s.trace_s)});
    rows.push_back({"n", std::to_string(s.n)});
    rows.push_back({"converged", s.converged ? "1" : "0"});
    rows.push_back({"iterations", std::to_string(s.iterations)});
    return rows_to_csv(rows);
}

std::string mgwr_surfaces_csv(const MgwrModel& m, const ObservationTable& table) {
    csv::Row header{"id", "u", "v", "fitted", "residual", "local_cn"};
    for (const auto& nm : m.names) {
        header.push_back("beta_" + nm);
        header.push_back("se_" + nm);
        header.push_back("t_" + nm);
        header.push_back("sig_" + nm);
        header.push_back("masked_" + nm);
    }
    std::vector<csv::Row> rows{header};
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto& u = table.units()[i];
        csv::Row r{u.id, fmt(u.location.u), fmt(u.location.v), fmt(m.fitted(ii)), fmt(m.residuals(ii)),
                   fmt(m.local_cn(ii))};
        for (std::size_t k = 0; k < m.names.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            bool sig = m.significant(i, k);
            r.push_back(fmt(m.coefficients(ii, kk)));
            r.push_back(fmt(m.std_errors(ii, kk)));
            r.push_back(fmt(m.t_values(ii, kk)));
            r.push_back(sig ? "1" : "0");
            r.push_back(sig ? fmt(m.coefficients(ii, kk)) : "");
        }
        rows.push_back(std::move(r));
    }
    return rows_to_csv(rows);
}

std::string mgwr_surfaces_geojson(const MgwrModel& m, const ObservationTable& table) {
    std::vector<ordered_json> props(table.n());
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        auto& p = props[i];
        p["id"] = table.units()[i].id;
        p["fitted"] = number(m.fitted(ii));
        p["residual"] = number(m.residuals(ii));
        p["local_cn"] = number(m.local_cn(ii));
        for (std::size_t k = 0; k < m.names.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            bool sig = m.significant(i, k);
            p["beta_" + m.names[k]] = number(m.coefficients(ii, kk));
            p["t_" + m.names[k]] = number(m.t_values(ii, kk));
            p["sig_" + m.names[k]] = sig;
            p["masked_" + m.names[k]] = sig ? number(m.coefficients(ii, kk)) : ordered_json(nullptr);
        }
    }
    return feature_collection(table, props);
}

std::string mgwr_convergence_csv(const MgwrModel& m) {
    csv::Row header{"iteration", "soc", "rss"};
    for (const auto& nm : m.names) header.push_back("bw_" + nm);
    std::vector<csv::Row> rows{header};
    for (const auto& it : m.trace) {
        csv::Row r{std::to_string(it.iteration), fmt(it.soc), fmt(it.rss)};
        for (double b : it.bandwidths) r.push_back(fmt(b));
        rows.push_back(std::move(r));
    }
    return rows_to_csv(rows);
}

// ---------------------------------------------------------------- hot spots

std::string hotspots_csv(const HotSpotResult& h, const ObservationTable& table, const Eigen::VectorXd& values) {
    std::vector<csv::Row> rows{{"id", "u", "v", "value", "gi_z", "gi_p", "class"}};
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto& u = table.units()[i];
        rows.push_back({u.id, fmt(u.location.u), fmt(u.location.v), fmt(values(ii)), fmt(h.z_scores(ii)),
                        fmt(h.p_values(ii)), std::string(to_string(h.classes[i]))});
    }
    return rows_to_csv(rows);
}

std::string hotspots_geojson(const HotSpotResult& h, const ObservationTable& table, const Eigen::VectorXd& values) {
    std::vector<ordered_json> props(table.n());
    for (std::size_t i = 0; i < table.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        props[i]["id"] = table.units()[i].id;
        props[i]["value"] = number(values(ii));
        props[i]["gi_z"] = number(h.z_scores(ii));
        props[i]["gi_p"] = number(h.p_values(ii));
        props[i]["class"] = std::string(to_string(h.classes[i]));
    }
    return feature_collection(table, props);
}

}  // namespace gwkit::report
