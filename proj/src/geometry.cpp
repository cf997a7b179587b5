#include "gwkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gwkit/error.hpp"

namespace gwkit {

namespace {

struct Segment {
    Point a, b;
};

template <typename Fn>
void for_each_segment(const MultiPolygon& shape, Fn&& fn) {
    for (const auto& poly : shape) {
        for (const auto& ring : poly.rings) {
            if (ring.size() < 2) continue;
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) fn(Segment{ring[i], ring[i + 1]});
            if (!(ring.front() == ring.back())) fn(Segment{ring.back(), ring.front()});
        }
    }
}

// Signed shoelace area and first moments of a ring.
void ring_moments(const Ring& ring, double& signed_area, double& mu, double& mv) {
    signed_area = mu = mv = 0.0;
    std::size_t n = ring.size();
    if (n < 3) return;
    // shift to the first vertex to limit cancellation with large coordinates
    Point o = ring.front();
    for (std::size_t i = 0; i < n; ++i) {
        Point p{ring[i].u - o.u, ring[i].v - o.v};
        Point q{ring[(i + 1) % n].u - o.u, ring[(i + 1) % n].v - o.v};
        double cross = p.u * q.v - q.u * p.v;
        signed_area += cross;
        mu += (p.u + q.u) * cross;
        mv += (p.v + q.v) * cross;
    }
    signed_area *= 0.5;
    mu /= 6.0;
    mv /= 6.0;
    mu += o.u * signed_area;
    mv += o.v * signed_area;
}

double distance_to_segment(Point p, const Segment& s) {
    double du = s.b.u - s.a.u, dv = s.b.v - s.a.v;
    double len2 = du * du + dv * dv;
    double t = len2 > 0 ? ((p.u - s.a.u) * du + (p.v - s.a.v) * dv) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.u - (s.a.u + t * du), p.v - (s.a.v + t * dv));
}

// Length of the overlap of two segments when they are collinear within
// `tolerance`, otherwise 0.
double collinear_overlap(const Segment& s, const Segment& t, double tolerance) {
    double du = s.b.u - s.a.u, dv = s.b.v - s.a.v;
    double len = std::hypot(du, dv);
    if (len <= tolerance) return 0.0;
    // perpendicular distances of t's endpoints from the line through s
    auto offset = [&](Point p) { return std::abs((p.u - s.a.u) * dv - (p.v - s.a.v) * du) / len; };
    if (offset(t.a) > tolerance || offset(t.b) > tolerance) return 0.0;
    auto project = [&](Point p) { return ((p.u - s.a.u) * du + (p.v - s.a.v) * dv) / len; };
    double t0 = project(t.a), t1 = project(t.b);
    if (t0 > t1) std::swap(t0, t1);
    return std::max(0.0, std::min(len, t1) - std::max(0.0, t0));
}

}  // namespace

BoundingBox bounding_box(const MultiPolygon& shape) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    BoundingBox box{inf, inf, -inf, -inf};
    for (const auto& poly : shape)
        for (const auto& ring : poly.rings)
            for (const auto& p : ring) {
                box.min_u = std::min(box.min_u, p.u);
                box.min_v = std::min(box.min_v, p.v);
                box.max_u = std::max(box.max_u, p.u);
                box.max_v = std::max(box.max_v, p.v);
            }
    return box;
}

double area(const MultiPolygon& shape) {
    double total = 0.0;
    for (const auto& poly : shape) {
        for (std::size_t r = 0; r < poly.rings.size(); ++r) {
            double a, mu, mv;
            ring_moments(poly.rings[r], a, mu, mv);
            total += (r == 0 ? 1.0 : -1.0) * std::abs(a);
        }
    }
    return total;
}

Point centroid(const MultiPolygon& shape) {
    double total = 0.0, su = 0.0, sv = 0.0;
    for (const auto& poly : shape) {
        for (std::size_t r = 0; r < poly.rings.size(); ++r) {
            double a, mu, mv;
            ring_moments(poly.rings[r], a, mu, mv);
            if (a == 0.0) continue;
            // orient every ring so exteriors add and holes subtract
            double sign = (r == 0 ? 1.0 : -1.0) * (a > 0 ? 1.0 : -1.0);
            total += sign * a;
            su += sign * mu;
            sv += sign * mv;
        }
    }
    if (!(std::abs(total) > 0.0)) throw Error("polygon has zero area; centroid undefined");
    return {su / total, sv / total};
}

bool shares_point(const MultiPolygon& a, const MultiPolygon& b, double tolerance) {
    if (!bounding_box(a).intersects(bounding_box(b), tolerance)) return false;
    bool touch = false;
    auto vertex_on = [&](const MultiPolygon& vertices, const MultiPolygon& edges) {
        for (const auto& poly : vertices)
            for (const auto& ring : poly.rings)
                for (const auto& p : ring) {
                    bool hit = false;
                    for_each_segment(edges, [&](const Segment& s) {
                        if (!hit && distance_to_segment(p, s) <= tolerance) hit = true;
                    });
                    if (hit) return true;
                }
        return false;
    };
    touch = vertex_on(a, b) || vertex_on(b, a);
    return touch;
}

bool shares_edge(const MultiPolygon& a, const MultiPolygon& b, double tolerance) {
    if (!bounding_box(a).intersects(bounding_box(b), tolerance)) return false;
    bool found = false;
    for_each_segment(a, [&](const Segment& s) {
        if (found) return;
        for_each_segment(b, [&](const Segment& t) {
            if (!found && collinear_overlap(s, t, tolerance) > tolerance) found = true;
        });
    });
    return found;
}

}  // namespace gwkit
