#include "gwkit/bandwidth_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gwkit/error.hpp"

namespace gwkit {

namespace {

constexpr double golden = 0.6180339887498949;

double sanitize(double s) { return std::isnan(s) ? std::numeric_limits<double>::infinity() : s; }

// Strictly better, or equal and at a larger bandwidth.
bool better(double bw_a, double score_a, double bw_b, double score_b) {
    if (score_a != score_b) return score_a < score_b;
    return bw_a > bw_b;
}

template <typename Key>
class Cache {
public:
    explicit Cache(const BandwidthObjective& f) : f_(f) {}

    double operator()(Key bw) {
        auto it = values_.find(bw);
        if (it != values_.end()) return it->second;
        double s = sanitize(f_(static_cast<double>(bw)));
        values_.emplace(bw, s);
        return s;
    }

    // Best point over everything evaluated so far.
    std::pair<Key, double> best() const {
        auto it = values_.begin();
        std::pair<Key, double> out = *it;
        for (++it; it != values_.end(); ++it)
            if (better(static_cast<double>(it->first), it->second, static_cast<double>(out.first), out.second))
                out = *it;
        return out;
    }

    // True when the scores, read in bandwidth order, fall and then rise at most once.
    bool unimodal() const {
        bool rising = false;
        double last = std::numeric_limits<double>::quiet_NaN();
        for (const auto& [bw, s] : values_) {
            if (std::isinf(s)) {
                if (rising) return false;
                continue;
            }
            if (!std::isnan(last)) {
                if (s > last) rising = true;
                else if (s < last && rising) return false;
            }
            last = s;
        }
        return true;
    }

    std::vector<BandwidthEvaluation> evaluations() const {
        std::vector<BandwidthEvaluation> out;
        for (const auto& [bw, s] : values_) out.push_back({static_cast<double>(bw), s});
        return out;
    }

private:
    const BandwidthObjective& f_;
    std::map<Key, double> values_;
};

}  // namespace

BandwidthSearchResult exhaustive_integer(const BandwidthObjective& score, long lower, long upper) {
    if (lower > upper) throw Error("bandwidth search: empty integer range");
    Cache<long> f(score);
    for (long k = lower; k <= upper; ++k) f(k);
    auto [bw, s] = f.best();
    BandwidthSearchResult out;
    out.bandwidth = static_cast<double>(bw);
    out.score = s;
    out.exhaustive = true;
    out.evaluations = f.evaluations();
    return out;
}

BandwidthSearchResult golden_section_integer(const BandwidthObjective& score, long lower, long upper) {
    if (lower > upper) throw Error("bandwidth search: empty integer range");
    Cache<long> f(score);
    long a = lower, b = upper;
    f(a);
    f(b);
    while (b - a > 3) {
        long width = b - a;
        long x1 = a + static_cast<long>(std::lround((1.0 - golden) * static_cast<double>(width)));
        long x2 = a + static_cast<long>(std::lround(golden * static_cast<double>(width)));
        if (x1 <= a) x1 = a + 1;
        if (x2 >= b) x2 = b - 1;
        if (x2 <= x1) x2 = x1 + 1;
        double f1 = f(x1), f2 = f(x2);
        if (better(static_cast<double>(x1), f1, static_cast<double>(x2), f2))
            b = x2;
        else
            a = x1;
    }
    long best_bw = a;
    double best_score = f(a);
    for (long k = a + 1; k <= b; ++k) {
        double s = f(k);
        if (better(static_cast<double>(k), s, static_cast<double>(best_bw), best_score)) {
            best_bw = k;
            best_score = s;
        }
    }

    auto [global_bw, global_score] = f.best();
    if (global_bw != best_bw || !f.unimodal()) {
        auto out = exhaustive_integer(score, lower, upper);
        out.warnings.push_back("bandwidth criterion is not unimodal on [" + std::to_string(lower) + ", " +
                               std::to_string(upper) + "]; exhaustive scan used");
        return out;
    }
    BandwidthSearchResult out;
    out.bandwidth = static_cast<double>(best_bw);
    out.score = best_score;
    out.evaluations = f.evaluations();
    return out;
}

namespace {

std::pair<double, double> golden_continuous_bracket(Cache<double>& f, double a, double b, double tol) {
    double x1 = b - golden * (b - a);
    double x2 = a + golden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (better(x1, f1, x2, f2)) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - golden * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (b - a);
            f2 = f(x2);
        }
    }
    return better(x1, f1, x2, f2) ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace

BandwidthSearchResult golden_section_continuous(const BandwidthObjective& score, double lower,
                                                double upper, double relative_tolerance) {
    if (!(lower > 0.0) || !(upper >= lower)) throw Error("bandwidth search: invalid continuous range");
    const double tol = relative_tolerance * upper;
    Cache<double> f(score);
    f(lower);
    f(upper);
    auto [bw, s] = golden_continuous_bracket(f, lower, upper, tol);
    auto [global_bw, global_score] = f.best();
    BandwidthSearchResult out;
    if (better(global_bw, global_score, bw, s) && global_score < s) {
        // inconsistent bracket: scan a grid, then refine around its best cell
        const int points = 400;
        double step = (upper - lower) / points;
        for (int i = 0; i <= points; ++i) f(lower + step * i);
        auto [grid_bw, grid_score] = f.best();
        double lo = std::max(lower, grid_bw - step), hi = std::min(upper, grid_bw + step);
        golden_continuous_bracket(f, lo, hi, tol);
        std::tie(bw, s) = f.best();
        out.exhaustive = true;
        out.warnings.push_back("bandwidth criterion is not unimodal; grid scan used");
    }
    out.bandwidth = bw;
    out.score = s;
    out.evaluations = f.evaluations();
    return out;
}

}  // namespace gwkit
