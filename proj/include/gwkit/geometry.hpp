#pragma once

#include <vector>

namespace gwkit {

// Planar coordinate in projected units (meters).
struct Point {
    double u = 0.0;
    double v = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

// Closed ring. The closing vertex may or may not repeat the first one.
using Ring = std::vector<Point>;

// First ring is the exterior, any further rings are holes.
struct Polygon {
    std::vector<Ring> rings;
};

using MultiPolygon = std::vector<Polygon>;

struct BoundingBox {
    double min_u, min_v, max_u, max_v;
    bool intersects(const BoundingBox& other, double tolerance) const {
        return min_u <= other.max_u + tolerance && other.min_u <= max_u + tolerance &&
               min_v <= other.max_v + tolerance && other.min_v <= max_v + tolerance;
    }
};

BoundingBox bounding_box(const MultiPolygon& shape);

// Area-weighted centroid; holes subtract. Throws if the net area is zero.
Point centroid(const MultiPolygon& shape);

double area(const MultiPolygon& shape);

// True if the two shapes touch at one or more points (shared vertex, vertex
// on edge, or overlapping edges), within `tolerance`.
bool shares_point(const MultiPolygon& a, const MultiPolygon& b, double tolerance);

// True if the two shapes share a boundary segment of positive length
// (longer than `tolerance`).
bool shares_edge(const MultiPolygon& a, const MultiPolygon& b, double tolerance);

}  // namespace gwkit
