#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gwkit/spatial_weights.hpp"

namespace gwkit {

struct MoranOptions {
    std::size_t permutations = 999;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct MoranResult {
    double statistic = 0.0;  // I
    double expected = 0.0;   // -1/(n-1)
    double variance = 0.0;   // under randomization
    double z_score = 0.0;
    double p_analytic = 1.0;     // two-sided normal approximation
    double p_permutation = 1.0;  // (extremes + 1) / (permutations + 1)
    std::size_t permutations = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

// Global Moran's I with the randomization variance and a conditional
// permutation test. Replicate r shuffles the values with its own generator
// stream Rng(seed, r), so results do not depend on the thread count.
//
// The permutation p-value is folded one-sided: extremes counts replicates at
// least as large as the observed I, or at most as large when fewer than half
// of the replicates reach it.
//
// Throws for n < 3, constant values, self-loops or weights with no entries.
MoranResult morans_i(const Eigen::VectorXd& values, const SpatialWeights& weights,
                     const MoranOptions& options = {});

enum class HotSpotClass { hot_99, hot_95, hot_90, not_significant, cold_90, cold_95, cold_99 };

std::string_view to_string(HotSpotClass c);

// Two-sided z thresholds for the 90/95/99% confidence classes.
struct HotSpotThresholds {
    double z90 = 1.645;
    double z95 = 1.960;
    double z99 = 2.576;
};

HotSpotClass classify_hot_spot(double z, const HotSpotThresholds& thresholds = {});

struct HotSpotResult {
    Eigen::VectorXd z_scores;
    Eigen::VectorXd p_values;
    std::vector<HotSpotClass> classes;
    std::vector<std::string> warnings;
};

// Getis-Ord Gi* z-scores. `weights` must include each unit as its own
// neighbor. S is the population standard deviation of the values. Units
// whose denominator vanishes are reported not significant with a warning.
HotSpotResult getis_ord_gstar(const Eigen::VectorXd& values, const SpatialWeights& weights,
                              const HotSpotThresholds& thresholds = {});

}  // namespace gwkit
