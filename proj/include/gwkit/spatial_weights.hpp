#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gwkit/data_model.hpp"
#include "gwkit/geometry.hpp"

namespace gwkit {

// Dense symmetric Euclidean distances between unit locations, with each
// row's distances also kept in sorted order for nearest-neighbor queries.
class DistanceMatrix {
public:
    static DistanceMatrix between(std::span<const Point> points, unsigned threads = 1);

    // Takes ownership of a precomputed matrix. Throws unless it is square,
    // finite, symmetric within 1e-9 and has a zero diagonal.
    explicit DistanceMatrix(Eigen::MatrixXd distances);

    std::size_t size() const noexcept { return static_cast<std::size_t>(d_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return d_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    // Distances from location i to every location (column i of the matrix).
    auto from(std::size_t i) const { return d_.col(static_cast<Eigen::Index>(i)); }
    const Eigen::MatrixXd& matrix() const noexcept { return d_; }

    // Distance from i to its k-th nearest location, counting i itself as
    // the first (k = 1 gives 0). Requires 1 <= k <= size().
    double kth_nearest(std::size_t i, std::size_t k) const;

    double min_positive() const;
    double max() const;

private:
    Eigen::MatrixXd d_;
    Eigen::MatrixXd sorted_;  // column i holds sorted distances from i
};

enum class WeightStyle { binary, row_standardized, custom };

std::string_view to_string(WeightStyle style);

struct Neighbor {
    std::size_t index = 0;
    double weight = 0.0;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Sparse neighbor lists, one per areal unit, sorted by neighbor index.
class SpatialWeights {
public:
    SpatialWeights(std::vector<std::vector<Neighbor>> rows, WeightStyle style, bool includes_self);

    std::size_t n() const noexcept { return rows_.size(); }
    std::span<const Neighbor> row(std::size_t i) const { return rows_[i]; }
    WeightStyle style() const noexcept { return style_; }
    bool includes_self() const noexcept { return includes_self_; }

    std::size_t nonzero_count() const;
    double total_weight() const;
    std::vector<std::size_t> islands() const;
    // Pattern and values equal their transpose.
    bool is_symmetric() const;

    SpatialWeights row_standardized() const;
    // Every listed neighbor gets weight 1.
    SpatialWeights binary() const;
    // Binary weights with each unit added as its own neighbor.
    SpatialWeights binary_with_self() const;

    Eigen::MatrixXd dense() const;

    friend bool operator==(const SpatialWeights&, const SpatialWeights&) = default;

private:
    std::vector<std::vector<Neighbor>> rows_;
    WeightStyle style_;
    bool includes_self_;
};

struct WeightsBuild {
    SpatialWeights weights;
    std::vector<std::string> warnings;
};

struct KnnOptions {
    std::size_t k = 8;
    bool symmetrize = false;
    bool row_standardize = true;
};

// k nearest neighbors by Euclidean distance. Equal distances are broken by
// row order (the table is sorted by id, so this is id order); duplicate
// coordinates produce a warning.
WeightsBuild build_knn_weights(const ObservationTable& table, const KnnOptions& options);
WeightsBuild build_knn_weights(std::span<const Point> points, std::span<const std::string> ids,
                               const KnnOptions& options);

enum class ContiguityRule { queen, rook };

// Queen: the polygons share at least one boundary point. Rook: they share a
// boundary segment of positive length. Units without neighbors are kept with
// an empty row and reported as warnings.
WeightsBuild build_contiguity_weights(const ObservationTable& table, ContiguityRule rule,
                                      bool row_standardize = true);

enum class KernelFamily { bisquare, gaussian };
enum class BandwidthMode { adaptive, fixed };

std::string_view to_string(KernelFamily family);
std::string_view to_string(BandwidthMode mode);
KernelFamily parse_kernel_family(std::string_view text);
BandwidthMode parse_bandwidth_mode(std::string_view text);

// Kernel family plus bandwidth. Adaptive bandwidths are neighbor counts k
// (the kernel radius at location i is its k-th nearest distance, itself
// included); fixed bandwidths are distances h.
struct KernelSpec {
    KernelFamily family = KernelFamily::bisquare;
    BandwidthMode mode = BandwidthMode::adaptive;
    double bandwidth = 0.0;
};

// Kernel radius at location i.
double kernel_radius(std::size_t i, const KernelSpec& spec, const DistanceMatrix& distances);

// Kernel weight for distance d at radius b: bisquare (1-(d/b)^2)^2 inside b
// and 0 outside; gaussian exp(-(d/b)^2 / 2).
double kernel_weight(KernelFamily family, double d, double b);

// Weights of every location relative to location i.
Eigen::VectorXd kernel_weights_at(std::size_t i, const KernelSpec& spec,
                                  const DistanceMatrix& distances);

// Triplet export "i,j,w" keyed by unit id.
void write_weights_csv(std::ostream& out, const SpatialWeights& weights,
                       std::span<const std::string> ids);
SpatialWeights read_weights_csv(std::string_view text, std::span<const std::string> ids);

}  // namespace gwkit
