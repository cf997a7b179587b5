#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gwkit {

struct BandwidthEvaluation {
    double bandwidth = 0.0;
    double score = 0.0;
};

struct BandwidthSearchResult {
    double bandwidth = 0.0;
    double score = 0.0;
    bool exhaustive = false;  // true when the fallback scan decided
    std::vector<BandwidthEvaluation> evaluations;  // sorted by bandwidth
    std::vector<std::string> warnings;
};

// Score to minimize. +inf (or NaN) marks an infeasible bandwidth.
using BandwidthObjective = std::function<double(double)>;

// Golden-section search over the integers in [lower, upper]. Equal scores
// favor the larger bandwidth. If any evaluated point beats the final
// bracket's minimum, the score is not unimodal and the result comes from an
// exhaustive scan instead (with a warning).
BandwidthSearchResult golden_section_integer(const BandwidthObjective& score, long lower, long upper);

// Evaluates every integer in [lower, upper].
BandwidthSearchResult exhaustive_integer(const BandwidthObjective& score, long lower, long upper);

// Golden-section search over the reals, stopping once the bracket is
// narrower than `relative_tolerance * upper`. Falls back to a 400-point
// grid followed by a local golden-section refinement when the bracket turns
// out inconsistent.
BandwidthSearchResult golden_section_continuous(const BandwidthObjective& score, double lower,
                                                double upper, double relative_tolerance = 1e-6);

}  // namespace gwkit
