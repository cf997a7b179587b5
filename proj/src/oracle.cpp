#include "gwkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gwkit::oracle {

Vector solve(Matrix a, Vector b, double tol) {
    const std::size_t n = a.rows;
    if (a.cols != n || b.size() != n) throw std::runtime_error("oracle::solve: shape mismatch");
    double scale = 0.0;
    for (double v : a.data) scale = std::max(scale, std::abs(v));
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (!(std::abs(a(piv, c)) > tol * scale)) throw std::runtime_error("oracle::solve: singular system");
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(piv, k));
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            double f = a(r, c) / a(c, c);
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a(r, k) -= f * a(c, k);
            b[r] -= f * b[c];
        }
    }
    Vector out(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a(i, k) * out[k];
        out[i] = s / a(i, i);
    }
    return out;
}

Vector brute_force_wls(const Matrix& x, const Vector& w, const Vector& y) {
    const std::size_t n = x.rows, k = x.cols;
    if (w.size() != n || y.size() != n) throw std::runtime_error("oracle::brute_force_wls: shape mismatch");
    Matrix xtwx(k, k);
    Vector xtwy(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            double wa = w[i] * x(i, a);
            xtwy[a] += wa * y[i];
            for (std::size_t b = 0; b < k; ++b) xtwx(a, b) += wa * x(i, b);
        }
    }
    return solve(std::move(xtwx), std::move(xtwy));
}

Vector brute_force_ols(const Matrix& x, const Vector& y) { return brute_force_wls(x, Vector(x.rows, 1.0), y); }

double vif(const Matrix& covariates, std::size_t j) {
    const std::size_t n = covariates.rows, p = covariates.cols;
    Matrix aux(n, p);  // intercept + others
    Vector target(n);
    for (std::size_t i = 0; i < n; ++i) {
        aux(i, 0) = 1.0;
        std::size_t c = 1;
        for (std::size_t k = 0; k < p; ++k)
            if (k != j) aux(i, c++) = covariates(i, k);
        target[i] = covariates(i, j);
    }
    Vector beta = brute_force_ols(aux, target);
    double mean = 0.0;
    for (double t : target) mean += t;
    mean /= static_cast<double>(n);
    double rss = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t k = 0; k < p; ++k) fit += aux(i, k) * beta[k];
        rss += (target[i] - fit) * (target[i] - fit);
        tss += (target[i] - mean) * (target[i] - mean);
    }
    return tss / rss;  // 1 / (1 - R^2)
}

Vector singular_values(Matrix a) {
    const std::size_t m = a.rows, n = a.cols;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += a(i, p) * a(i, p);
                    beta += a(i, q) * a(i, q);
                    gamma += a(i, p) * a(i, q);
                }
                if (gamma == 0.0) continue;
                double denom = std::sqrt(alpha * beta);
                if (denom > 0.0) off = std::max(off, std::abs(gamma) / denom);
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    double ap = a(i, p), aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
            }
        }
        if (off < 1e-15) break;
    }
    Vector sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

double condition_number(const Matrix& a) {
    Matrix scaled = a;
    for (std::size_t j = 0; j < a.cols; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < a.rows; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.rows; ++i) scaled(i, j) = a(i, j) / norm;
    }
    Vector sv = singular_values(scaled);
    if (sv.back() <= sv.front() * 1e-13) return std::numeric_limits<double>::infinity();
    return sv.front() / sv.back();
}

double morans_i(const Vector& x, const Matrix& w) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double num = 0.0, s0 = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        den += (x[i] - mean) * (x[i] - mean);
        for (std::size_t j = 0; j < n; ++j) {
            num += w(i, j) * (x[i] - mean) * (x[j] - mean);
            s0 += w(i, j);
        }
    }
    return static_cast<double>(n) / s0 * num / den;
}

double gstar(const Vector& x, const Matrix& w, std::size_t i) {
    const std::size_t n = x.size();
    const double dn = static_cast<double>(n);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= dn;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    double s = std::sqrt(var / dn);
    double wx = 0.0, sw = 0.0, sw2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        wx += w(i, j) * x[j];
        sw += w(i, j);
        sw2 += w(i, j) * w(i, j);
    }
    return (wx - mean * sw) / (s * std::sqrt((dn * sw2 - sw * sw) / (dn - 1.0)));
}

std::vector<std::vector<std::size_t>> grid_neighbors(std::size_t rows, std::size_t cols, bool queen) {
    std::vector<std::vector<std::size_t>> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    if (!queen && dr != 0 && dc != 0) continue;
                    long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) continue;
                    out[r * cols + c].push_back(static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc));
                }
            }
            std::sort(out[r * cols + c].begin(), out[r * cols + c].end());
        }
    }
    return out;
}

double bisquare(double d, double b) {
    if (b <= 0.0) return d == 0.0 ? 1.0 : 0.0;
    if (d >= b) return 0.0;
    double r = d / b;
    return (1.0 - r * r) * (1.0 - r * r);
}

double gaussian(double d, double b) {
    if (b <= 0.0) return d == 0.0 ? 1.0 : 0.0;
    double r = d / b;
    return std::exp(-0.5 * r * r);
}

std::pair<double, double> gwr_aicc(const Matrix& x, const Vector& y, const Matrix& weights) {
    const std::size_t n = x.rows, k = x.cols;
    double rss = 0.0, trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vector w(n);
        for (std::size_t l = 0; l < n; ++l) w[l] = weights(i, l);
        Vector beta = brute_force_wls(x, w, y);
        double fit = 0.0;
        for (std::size_t a = 0; a < k; ++a) fit += x(i, a) * beta[a];
        rss += (y[i] - fit) * (y[i] - fit);
        // s_ii = x_i' (X'W X)^-1 x_i w_ii: solve with the unit response at i
        Vector e(n, 0.0);
        e[i] = 1.0;
        Vector col = brute_force_wls(x, w, e);
        double sii = 0.0;
        for (std::size_t a = 0; a < k; ++a) sii += x(i, a) * col[a];
        trace += sii;
    }
    const double dn = static_cast<double>(n);
    double denom = dn - 2.0 - trace;
    if (denom <= 0.0) return {std::numeric_limits<double>::infinity(), trace};
    double aicc = dn * std::log(rss / dn) + dn * std::log(2.0 * std::numbers::pi) + dn * (dn + trace) / denom;
    return {aicc, trace};
}

}  // namespace gwkit::oracle
