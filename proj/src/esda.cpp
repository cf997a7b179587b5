#include "gwkit/esda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gwkit/global_regression.hpp"
#include "gwkit/parallel.hpp"
#include "gwkit/rng.hpp"

namespace gwkit {

namespace {

// sum_i z_i * sum_j w_ij z_j
double cross_product(const Eigen::VectorXd& z, const SpatialWeights& w) {
    double total = 0.0;
    for (std::size_t i = 0; i < w.n(); ++i) {
        double lag = 0.0;
        for (const auto& nb : w.row(i)) lag += nb.weight * z(static_cast<Eigen::Index>(nb.index));
        total += z(static_cast<Eigen::Index>(i)) * lag;
    }
    return total;
}

}  // namespace

MoranResult morans_i(const Eigen::VectorXd& values, const SpatialWeights& weights,
                     const MoranOptions& options) {
    const auto n = static_cast<std::size_t>(values.size());
    if (n < 3) throw Error("Moran's I needs at least 3 observations");
    if (weights.n() != n) throw Error("weights size does not match number of values");
    if (weights.includes_self()) throw Error("Moran's I weights must not include self-loops");
    const double s0 = weights.total_weight();
    if (!(s0 > 0.0)) throw Error("Moran's I weights are empty (every row has no neighbors)");

    Eigen::VectorXd z = values.array() - values.mean();
    const double m2 = z.squaredNorm();
    if (!(m2 > 1e-24 * std::max(1.0, values.squaredNorm())))
        throw Error("values have zero variance; Moran's I undefined");

    const double dn = static_cast<double>(n);
    MoranResult out;
    out.statistic = dn / s0 * cross_product(z, weights) / m2;
    out.expected = -1.0 / (dn - 1.0);
    out.permutations = options.permutations;
    out.seed = options.seed;

    // S1 = 1/2 sum_ij (w_ij + w_ji)^2, S2 = sum_i (w_i. + w_.i)^2
    Eigen::MatrixXd w = weights.dense();
    double s1 = 0.5 * (w + w.transpose()).array().square().sum();
    Eigen::VectorXd row_plus_col = w.rowwise().sum() + w.colwise().sum().transpose();
    double s2 = row_plus_col.squaredNorm();
    double ei2 = out.expected * out.expected;

    if (n > 3) {
        double m4 = z.array().pow(4).sum();
        double b2 = dn * m4 / (m2 * m2);
        double a = dn * ((dn * dn - 3.0 * dn + 3.0) * s1 - dn * s2 + 3.0 * s0 * s0);
        double b = b2 * ((dn * dn - dn) * s1 - 2.0 * dn * s2 + 6.0 * s0 * s0);
        out.variance = (a - b) / ((dn - 1.0) * (dn - 2.0) * (dn - 3.0) * s0 * s0) - ei2;
    } else {
        out.variance = (dn * dn * s1 - dn * s2 + 3.0 * s0 * s0) / ((dn * dn - 1.0) * s0 * s0) - ei2;
        out.warnings.push_back("n = 3: randomization variance undefined, normality variance used");
    }
    if (out.variance > 0.0) {
        out.z_score = (out.statistic - out.expected) / std::sqrt(out.variance);
        out.p_analytic = normal_p_value(out.z_score);
    } else {
        out.z_score = 0.0;
        out.p_analytic = 1.0;
        out.warnings.push_back("non-positive analytic variance; z-score set to 0");
    }

    if (options.permutations > 0) {
        std::vector<double> replicates(options.permutations);
        parallel_for(options.permutations, options.threads, [&](std::size_t r) {
            Rng rng(options.seed, r);
            Eigen::VectorXd shuffled = z;
            rng.shuffle(std::span<double>(shuffled.data(), n));
            replicates[r] = dn / s0 * cross_product(shuffled, weights) / m2;
        });
        std::size_t larger = static_cast<std::size_t>(std::count_if(
            replicates.begin(), replicates.end(), [&](double v) { return v >= out.statistic; }));
        if (2 * larger > options.permutations) larger = options.permutations - larger;
        out.p_permutation = static_cast<double>(larger + 1) / static_cast<double>(options.permutations + 1);
    }
    return out;
}

std::string_view to_string(HotSpotClass c) {
    switch (c) {
    case HotSpotClass::hot_99: return "hot-99";
    case HotSpotClass::hot_95: return "hot-95";
    case HotSpotClass::hot_90: return "hot-90";
    case HotSpotClass::not_significant: return "not-significant";
    case HotSpotClass::cold_90: return "cold-90";
    case HotSpotClass::cold_95: return "cold-95";
    case HotSpotClass::cold_99: return "cold-99";
    }
    return "?";
}

HotSpotClass classify_hot_spot(double z, const HotSpotThresholds& t) {
    if (!std::isfinite(z)) return HotSpotClass::not_significant;
    if (z >= t.z99) return HotSpotClass::hot_99;
    if (z >= t.z95) return HotSpotClass::hot_95;
    if (z >= t.z90) return HotSpotClass::hot_90;
    if (z <= -t.z99) return HotSpotClass::cold_99;
    if (z <= -t.z95) return HotSpotClass::cold_95;
    if (z <= -t.z90) return HotSpotClass::cold_90;
    return HotSpotClass::not_significant;
}

HotSpotResult getis_ord_gstar(const Eigen::VectorXd& values, const SpatialWeights& weights,
                              const HotSpotThresholds& thresholds) {
    const auto n = static_cast<std::size_t>(values.size());
    if (n < 3) throw Error("Gi* needs at least 3 observations");
    if (weights.n() != n) throw Error("weights size does not match number of values");
    if (!weights.includes_self()) throw Error("Gi* weights must include each unit as its own neighbor");

    const double dn = static_cast<double>(n);
    const double mean = values.mean();
    // population variance, computed from centered values
    double var = (values.array() - mean).square().sum() / dn;
    if (!(var > 1e-24 * std::max(1.0, mean * mean)))
        throw Error("values have zero variance; Gi* undefined");
    const double s = std::sqrt(var);

    HotSpotResult out;
    out.z_scores.resize(values.size());
    out.p_values.resize(values.size());
    out.classes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double wx = 0.0, wsum = 0.0, w2 = 0.0;
        for (const auto& nb : weights.row(i)) {
            wx += nb.weight * values(static_cast<Eigen::Index>(nb.index));
            wsum += nb.weight;
            w2 += nb.weight * nb.weight;
        }
        double spread = (dn * w2 - wsum * wsum) / (dn - 1.0);
        double z = 0.0;
        if (spread > 1e-12 * std::max(1.0, wsum * wsum)) {
            z = (wx - mean * wsum) / (s * std::sqrt(spread));
        } else {
            out.warnings.push_back("unit " + std::to_string(i) +
                                   ": Gi* denominator vanishes; marked not significant");
        }
        out.z_scores(static_cast<Eigen::Index>(i)) = z;
        out.p_values(static_cast<Eigen::Index>(i)) = normal_p_value(z);
        out.classes[i] = classify_hot_spot(z, thresholds);
    }
    return out;
}

}  // namespace gwkit
