#include "gwkit/spatial_weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "gwkit/csv.hpp"
#include "gwkit/parallel.hpp"

namespace gwkit {

// ---------------------------------------------------------------------------
// DistanceMatrix

namespace {

Eigen::MatrixXd sorted_columns(const Eigen::MatrixXd& d) {
    Eigen::MatrixXd s = d;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        auto col = s.col(j);
        std::sort(col.begin(), col.end());
    }
    return s;
}

}  // namespace

DistanceMatrix DistanceMatrix::between(std::span<const Point> points, unsigned threads) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd d(n, n);
    parallel_for(points.size(), threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < points.size(); ++j)
            d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                std::hypot(points[i].u - points[j].u, points[i].v - points[j].v);
    });
    return DistanceMatrix(std::move(d));
}

DistanceMatrix::DistanceMatrix(Eigen::MatrixXd distances) : d_(std::move(distances)) {
    if (d_.rows() != d_.cols()) throw Error("distance matrix must be square");
    if (!d_.allFinite()) throw Error("distance matrix has non-finite entries");
    for (Eigen::Index i = 0; i < d_.rows(); ++i) {
        if (d_(i, i) != 0.0) throw Error("distance matrix diagonal must be zero");
        for (Eigen::Index j = 0; j < i; ++j)
            if (std::abs(d_(i, j) - d_(j, i)) > 1e-9) throw Error("distance matrix is not symmetric");
    }
    sorted_ = sorted_columns(d_);
}

double DistanceMatrix::kth_nearest(std::size_t i, std::size_t k) const {
    if (k < 1 || k > size())
        throw Error("adaptive bandwidth " + std::to_string(k) + " outside [1, " +
                    std::to_string(size()) + "]");
    return sorted_(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(i));
}

double DistanceMatrix::min_positive() const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < sorted_.cols(); ++j)
        for (Eigen::Index r = 0; r < sorted_.rows(); ++r)
            if (sorted_(r, j) > 0.0) {
                best = std::min(best, sorted_(r, j));
                break;
            }
    return best;
}

double DistanceMatrix::max() const { return d_.size() ? d_.maxCoeff() : 0.0; }

// ---------------------------------------------------------------------------
// SpatialWeights

std::string_view to_string(WeightStyle style) {
    switch (style) {
    case WeightStyle::binary: return "binary";
    case WeightStyle::row_standardized: return "row-standardized";
    case WeightStyle::custom: return "custom";
    }
    return "?";
}

SpatialWeights::SpatialWeights(std::vector<std::vector<Neighbor>> rows, WeightStyle style,
                               bool includes_self)
    : rows_(std::move(rows)), style_(style), includes_self_(includes_self) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        auto& row = rows_[i];
        std::sort(row.begin(), row.end(),
                  [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
        for (std::size_t k = 0; k < row.size(); ++k) {
            const auto& nb = row[k];
            if (nb.index >= rows_.size()) throw Error("neighbor index out of range");
            if (!std::isfinite(nb.weight) || nb.weight < 0.0) throw Error("weights must be finite and nonnegative");
            if (nb.index == i && !includes_self_) throw Error("self-loop in weights without includes_self");
            if (k && row[k - 1].index == nb.index) throw Error("duplicate neighbor in weights row");
        }
    }
}

std::size_t SpatialWeights::nonzero_count() const {
    std::size_t count = 0;
    for (const auto& row : rows_) count += row.size();
    return count;
}

double SpatialWeights::total_weight() const {
    double total = 0.0;
    for (const auto& row : rows_)
        for (const auto& nb : row) total += nb.weight;
    return total;
}

std::vector<std::size_t> SpatialWeights::islands() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        bool has_other = std::any_of(rows_[i].begin(), rows_[i].end(),
                                     [&](const Neighbor& nb) { return nb.index != i; });
        if (!has_other) out.push_back(i);
    }
    return out;
}

bool SpatialWeights::is_symmetric() const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (const auto& nb : rows_[i]) {
            const auto& other = rows_[nb.index];
            auto it = std::lower_bound(other.begin(), other.end(), i,
                                       [](const Neighbor& a, std::size_t idx) { return a.index < idx; });
            if (it == other.end() || it->index != i || it->weight != nb.weight) return false;
        }
    }
    return true;
}

SpatialWeights SpatialWeights::row_standardized() const {
    auto rows = rows_;
    for (auto& row : rows) {
        double sum = 0.0;
        for (const auto& nb : row) sum += nb.weight;
        if (sum > 0.0)
            for (auto& nb : row) nb.weight /= sum;
    }
    return SpatialWeights(std::move(rows), WeightStyle::row_standardized, includes_self_);
}

SpatialWeights SpatialWeights::binary() const {
    auto rows = rows_;
    for (auto& row : rows)
        for (auto& nb : row) nb.weight = 1.0;
    return SpatialWeights(std::move(rows), WeightStyle::binary, includes_self_);
}

SpatialWeights SpatialWeights::binary_with_self() const {
    auto rows = binary().rows_;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& row = rows[i];
        bool present = std::any_of(row.begin(), row.end(), [&](const Neighbor& nb) { return nb.index == i; });
        if (!present) row.push_back({i, 1.0});
    }
    return SpatialWeights(std::move(rows), WeightStyle::binary, true);
}

Eigen::MatrixXd SpatialWeights::dense() const {
    const auto n = static_cast<Eigen::Index>(rows_.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < rows_.size(); ++i)
        for (const auto& nb : rows_[i])
            w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(nb.index)) = nb.weight;
    return w;
}

// ---------------------------------------------------------------------------
// Builders

WeightsBuild build_knn_weights(std::span<const Point> points, std::span<const std::string> ids,
                               const KnnOptions& options) {
    const std::size_t n = points.size();
    if (ids.size() != n) throw Error("knn: ids and points differ in length");
    if (options.k < 1 || options.k + 1 > n)
        throw Error("knn: k must lie in [1, n-1] (k=" + std::to_string(options.k) +
                    ", n=" + std::to_string(n) + ")");

    std::vector<std::string> warnings;
    std::vector<std::vector<Neighbor>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = std::hypot(points[i].u - points[j].u, points[i].v - points[j].v);
            if (d == 0.0 && j > i)
                warnings.push_back("duplicate coordinates for '" + ids[i] + "' and '" + ids[j] +
                                   "'; nearest-neighbor ties broken by id order");
            cand.emplace_back(d, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(options.k), cand.end());
        for (std::size_t r = 0; r < options.k; ++r) rows[i].push_back({cand[r].second, 1.0});
    }

    if (options.symmetrize) {
        std::vector<std::set<std::size_t>> sets(n);
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& nb : rows[i]) {
                sets[i].insert(nb.index);
                sets[nb.index].insert(i);
            }
        for (std::size_t i = 0; i < n; ++i) {
            rows[i].clear();
            for (auto j : sets[i]) rows[i].push_back({j, 1.0});
        }
    }

    SpatialWeights w(std::move(rows), WeightStyle::binary, false);
    if (options.row_standardize) w = w.row_standardized();
    return {std::move(w), std::move(warnings)};
}

WeightsBuild build_knn_weights(const ObservationTable& table, const KnnOptions& options) {
    auto points = table.locations();
    std::vector<std::string> ids;
    for (const auto& u : table.units()) ids.push_back(u.id);
    return build_knn_weights(points, ids, options);
}

WeightsBuild build_contiguity_weights(const ObservationTable& table, ContiguityRule rule,
                                      bool row_standardize) {
    if (!table.has_polygons()) throw Error("contiguity weights need a polygon for every unit");
    const auto& units = table.units();
    const std::size_t n = units.size();

    // tolerance relative to the overall extent of the study area
    BoundingBox extent{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    std::vector<BoundingBox> boxes;
    for (const auto& u : units) {
        boxes.push_back(bounding_box(*u.polygon));
        extent.min_u = std::min(extent.min_u, boxes.back().min_u);
        extent.min_v = std::min(extent.min_v, boxes.back().min_v);
        extent.max_u = std::max(extent.max_u, boxes.back().max_u);
        extent.max_v = std::max(extent.max_v, boxes.back().max_v);
    }
    double span = std::max(extent.max_u - extent.min_u, extent.max_v - extent.min_v);
    double tol = std::max(1e-12, 1e-9 * span);

    std::vector<std::vector<Neighbor>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!boxes[i].intersects(boxes[j], tol)) continue;
            bool adjacent = rule == ContiguityRule::queen
                                ? shares_point(*units[i].polygon, *units[j].polygon, tol)
                                : shares_edge(*units[i].polygon, *units[j].polygon, tol);
            if (adjacent) {
                rows[i].push_back({j, 1.0});
                rows[j].push_back({i, 1.0});
            }
        }
    }

    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < n; ++i)
        if (rows[i].empty()) warnings.push_back("unit '" + units[i].id + "' has no neighbors (island)");

    SpatialWeights w(std::move(rows), WeightStyle::binary, false);
    if (row_standardize) w = w.row_standardized();
    return {std::move(w), std::move(warnings)};
}

// ---------------------------------------------------------------------------
// Kernels

std::string_view to_string(KernelFamily family) {
    return family == KernelFamily::bisquare ? "bisquare" : "gaussian";
}

std::string_view to_string(BandwidthMode mode) {
    return mode == BandwidthMode::adaptive ? "adaptive" : "fixed";
}

KernelFamily parse_kernel_family(std::string_view text) {
    if (text == "bisquare") return KernelFamily::bisquare;
    if (text == "gaussian") return KernelFamily::gaussian;
    throw Error("unknown kernel family '" + std::string(text) + "'");
}

BandwidthMode parse_bandwidth_mode(std::string_view text) {
    if (text == "adaptive") return BandwidthMode::adaptive;
    if (text == "fixed") return BandwidthMode::fixed;
    throw Error("unknown bandwidth mode '" + std::string(text) + "'");
}

double kernel_radius(std::size_t i, const KernelSpec& spec, const DistanceMatrix& distances) {
    if (spec.mode == BandwidthMode::fixed) {
        if (!(spec.bandwidth > 0.0) || !std::isfinite(spec.bandwidth))
            throw Error("fixed bandwidth must be a positive distance");
        return spec.bandwidth;
    }
    double k = spec.bandwidth;
    if (k != std::floor(k) || k < 1.0 || k > static_cast<double>(distances.size()))
        throw Error("adaptive bandwidth must be an integer neighbor count in [1, " +
                    std::to_string(distances.size()) + "], got " + csv::format_double(k));
    return distances.kth_nearest(i, static_cast<std::size_t>(k));
}

double kernel_weight(KernelFamily family, double d, double b) {
    if (b <= 0.0) return d == 0.0 ? 1.0 : 0.0;
    double r = d / b;
    if (family == KernelFamily::bisquare) {
        if (r >= 1.0) return 0.0;
        double t = 1.0 - r * r;
        return t * t;
    }
    return std::exp(-0.5 * r * r);
}

Eigen::VectorXd kernel_weights_at(std::size_t i, const KernelSpec& spec,
                                  const DistanceMatrix& distances) {
    double b = kernel_radius(i, spec, distances);
    auto d = distances.from(i);
    Eigen::VectorXd w(d.size());
    for (Eigen::Index j = 0; j < d.size(); ++j) w(j) = kernel_weight(spec.family, d(j), b);
    w(static_cast<Eigen::Index>(i)) = 1.0;
    return w;
}

// ---------------------------------------------------------------------------
// Triplet CSV

void write_weights_csv(std::ostream& out, const SpatialWeights& weights,
                       std::span<const std::string> ids) {
    if (ids.size() != weights.n()) throw Error("weights export: id count mismatch");
    csv::write_row(out, {"i", "j", "w"});
    for (std::size_t i = 0; i < weights.n(); ++i)
        for (const auto& nb : weights.row(i))
            csv::write_row(out, {ids[i], ids[nb.index], csv::format_double(nb.weight)});
}

SpatialWeights read_weights_csv(std::string_view text, std::span<const std::string> ids) {
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);

    auto rows = csv::parse(text);
    if (rows.empty() || rows.front() != csv::Row{"i", "j", "w"})
        throw Error("weights import: expected header i,j,w");
    std::vector<std::vector<Neighbor>> adj(ids.size());
    bool self = false;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 3) throw Error("weights import: record " + std::to_string(r) + " needs 3 fields");
        auto a = index.find(row[0]);
        auto b = index.find(row[1]);
        if (a == index.end() || b == index.end())
            throw Error("weights import: unknown id in record " + std::to_string(r));
        auto w = csv::parse_double(row[2]);
        if (!w) throw Error("weights import: bad weight in record " + std::to_string(r));
        self = self || a->second == b->second;
        adj[a->second].push_back({b->second, *w});
    }

    bool all_one = true, rows_sum_one = true;
    for (const auto& row : adj) {
        double sum = 0.0;
        for (const auto& nb : row) {
            all_one = all_one && nb.weight == 1.0;
            sum += nb.weight;
        }
        if (!row.empty() && std::abs(sum - 1.0) > 1e-12) rows_sum_one = false;
    }
    WeightStyle style = all_one ? WeightStyle::binary
                                : (rows_sum_one ? WeightStyle::row_standardized : WeightStyle::custom);
    return SpatialWeights(std::move(adj), style, self);
}

}  // namespace gwkit
