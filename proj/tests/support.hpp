#pragma once

#include "invsig/curve.hpp"
#include "invsig/random.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace invsig::test {

inline constexpr double kPi = std::numbers::pi;

inline PlanarCurve circle(std::size_t n, double radius = 1.0, Point2 center = {}) {
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        pts[i] = {center.x + radius * std::cos(t), center.y + radius * std::sin(t)};
    }
    return PlanarCurve(std::move(pts), true);
}

inline PlanarCurve ellipse(std::size_t n, double a, double b) {
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        pts[i] = {a * std::cos(t), b * std::sin(t)};
    }
    return PlanarCurve(std::move(pts), true);
}

// Open straight line from (0,0) with unit spacing along direction angle.
inline PlanarCurve line(std::size_t n, double angle = 0.3) {
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i);
        pts[i] = {s * std::cos(angle), s * std::sin(angle)};
    }
    return PlanarCurve(std::move(pts), false);
}

// Counterclockwise axis-aligned square [0, side]^2 with per_edge points on each edge.
inline PlanarCurve square(double side, std::size_t per_edge) {
    std::vector<Point2> pts;
    const Point2 corners[4] = {{0, 0}, {side, 0}, {side, side}, {0, side}};
    for (int e = 0; e < 4; ++e) {
        const Point2 a = corners[e];
        const Point2 b = corners[(e + 1) % 4];
        for (std::size_t k = 0; k < per_edge; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(per_edge);
            pts.push_back(a + t * (b - a));
        }
    }
    return PlanarCurve(std::move(pts), true);
}

// Star-shaped contour with sharp-ish lobes.
inline PlanarCurve star(std::size_t n, int lobes = 5, double depth = 0.4) {
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        const double r = 1.0 + depth * std::cos(lobes * t);
        pts[i] = {r * std::cos(t), r * std::sin(t)};
    }
    return PlanarCurve(std::move(pts), true);
}

// Convex hull (monotone chain) of random points, counterclockwise.
inline std::vector<Point2> random_convex_polygon(std::uint64_t seed, std::size_t samples = 12) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point2> p(samples);
    for (auto& q : p) q = {u(rng), u(rng)};
    std::sort(p.begin(), p.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::vector<Point2> hull(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(hull[k - 1] - hull[k - 2], p[i - 1] - hull[k - 2]) <= 0) --k;
        hull[k++] = p[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_point_diff(const PlanarCurve& a, const PlanarCurve& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, norm(a[i] - b[i]));
    return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("invsig_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace invsig::test
