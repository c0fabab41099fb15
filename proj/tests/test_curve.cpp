#include "doctest.h"
#include "support.hpp"

#include "invsig/curve.hpp"
#include "invsig/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace invsig;
using namespace invsig::test;

TEST_SUITE("curve") {

TEST_CASE("construction rejects invalid point sequences") {
    CHECK_THROWS_AS(PlanarCurve({{0, 0}, {1, 0}, {1, 0}}, true), Error);
    CHECK_THROWS_AS(PlanarCurve({{0, 0}, {1, 0}, {0, 0}}, true), Error);
    CHECK_THROWS_AS(PlanarCurve({{0, 0}, {1, NAN}, {2, 0}}, false), Error);
    CHECK_THROWS_AS(PlanarCurve({{0, 0}, {1, 0}}, true), Error);
    CHECK_THROWS_AS(PlanarCurve({{0, 0}}, false), Error);
    CHECK_NOTHROW(PlanarCurve({{0, 0}, {1, 0}}, false));
    CHECK_NOTHROW(PlanarCurve({{0, 0}, {1, 0}, {0, 0}}, false));
}

TEST_CASE("arc length of circle, segment and square") {
    const auto c = circle(500);
    const auto p = cumulative_arclength(c);
    CHECK(std::abs(p.total - 2.0 * kPi) / (2.0 * kPi) < 1e-3);
    CHECK(p.values.front() == 0.0);
    CHECK(std::is_sorted(p.values.begin(), p.values.end()));

    const auto seg = cumulative_arclength(PlanarCurve({{0, 0}, {3, 4}}, false));
    CHECK(seg.total == 5.0);
    CHECK(seg.values == std::vector<double>{0.0, 5.0});

    const auto sq = cumulative_arclength(PlanarCurve({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, true));
    CHECK(sq.total == 4.0);
    CHECK(sq.values == std::vector<double>{0.0, 1.0, 2.0, 3.0});
}

TEST_CASE("uniform resampling") {
    SUBCASE("equal arc gaps and first point kept") {
        const auto s = star(777);
        const auto r = resample_uniform(s, 500);
        REQUIRE(r.size() == 500);
        CHECK(r[0] == s[0]);
        CHECK(r.closed());
        // Gaps measured along the source polyline: place every output point back
        // on the input and compare arc positions.
        const auto src = cumulative_arclength(s);
        std::vector<double> pos;
        for (const auto& q : r.points()) {
            double best = 1e300, at = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                const Point2 a = s[i], b = s[(i + 1) % s.size()];
                const Point2 ab = b - a;
                const double t = std::clamp(dot(q - a, ab) / dot(ab, ab), 0.0, 1.0);
                const double d = norm(a + t * ab - q);
                if (d < best) {
                    best = d;
                    at = src.values[i] + t * norm(ab);
                }
            }
            pos.push_back(at);
        }
        const double gap = src.total / 500.0;
        for (std::size_t i = 1; i < pos.size(); ++i) {
            CHECK(std::abs((pos[i] - pos[i - 1]) - gap) / gap < 1e-9);
        }
    }
    SUBCASE("dense circle stays on the circle") {
        const auto r = resample_uniform(circle(10000), 100);
        for (const auto& q : r.points()) CHECK(std::abs(norm(q) - 1.0) < 1e-3);
    }
    SUBCASE("idempotent on equal-chord input") {
        const auto c = rotate(circle(500, 3.0), 0.7);
        CHECK(max_point_diff(resample_uniform(c, 500), c) < 1e-9);
        const auto once = resample_uniform(c, 250);
        CHECK(max_point_diff(resample_uniform(c, 250), once) == 0.0);
    }
    SUBCASE("open curves keep both ends") {
        const auto l = line(10);
        const auto r = resample_uniform(l, 4);
        CHECK(r[0] == l[0]);
        CHECK(norm(r[3] - l[9]) < 1e-12);
    }
    CHECK_THROWS_AS(resample_uniform(circle(10), 2), Error);
}

TEST_CASE("normalization") {
    const auto s = star(300);
    const auto n = normalize_curve(s);
    double mx = 0, my = 0;
    for (const auto& p : n.points()) {
        mx += p.x;
        my += p.y;
    }
    CHECK(std::abs(mx / 300) < 1e-12);
    CHECK(std::abs(my / 300) < 1e-12);
    double ss = 0;
    for (const auto& p : n.points()) ss += p.x * p.x + p.y * p.y;
    CHECK(std::abs(std::sqrt(ss / 600) - 1.0) < 1e-12);

    CHECK(max_point_diff(normalize_curve(scale(s, 7.0)), n) < 1e-9);
    std::vector<Point2> moved;
    for (const auto& p : s.points()) moved.push_back(p + Point2{100, -50});
    CHECK(max_point_diff(normalize_curve(PlanarCurve(moved, true)), n) < 1e-9);
    CHECK(max_point_diff(normalize_curve(n), n) < 1e-12);
}

TEST_CASE("random Euclidean transforms") {
    const auto s = star(120);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto t = random_euclidean_transform(s, seed);
        double worst = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            for (std::size_t j = i + 1; j < s.size(); ++j) {
                worst = std::max(worst, std::abs(norm(s[i] - s[j]) - norm(t[i] - t[j])));
            }
        }
        CHECK(worst < 1e-9);
        CHECK(t == random_euclidean_transform(s, seed));
    }

    SUBCASE("angle distribution is uniform on [-pi, pi]") {
        // Kolmogorov-Smirnov statistic against the uniform CDF, 1% level.
        const std::size_t n = 10000;
        std::vector<double> theta(n);
        std::size_t reflections = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto t = sample_euclidean_transform(derive_seed(99, i));
            theta[i] = t.angle;
            reflections += t.reflect ? 1 : 0;
            CHECK(std::abs(t.translation.x) <= 1.0);
            CHECK(std::abs(t.translation.y) <= 1.0);
        }
        std::sort(theta.begin(), theta.end());
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double cdf = (theta[i] + kPi) / (2 * kPi);
            d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
        }
        CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
        CHECK(theta.front() >= -kPi);
        CHECK(theta.back() <= kPi);
        // Binomial(10000, 1/2): 4 standard deviations is 200.
        CHECK(std::abs(static_cast<double>(reflections) - 5000.0) < 200.0);
    }
}

TEST_CASE("Gaussian noise") {
    const auto c = circle(500);
    CHECK(add_gaussian_noise(c, 0.0, 3) == c);
    CHECK(add_gaussian_noise(c, 0.05, 3) == add_gaussian_noise(c, 0.05, 3));
    CHECK_THROWS_AS(add_gaussian_noise(c, -0.1, 3), Error);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto n = add_gaussian_noise(c, 0.05, seed);
        std::vector<double> d;
        for (std::size_t i = 0; i < c.size(); ++i) {
            d.push_back(n[i].x - c[i].x);
            d.push_back(n[i].y - c[i].y);
        }
        const double mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
        double ss = 0;
        for (double v : d) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (d.size() - 1));
        CHECK(sd > 0.045);
        CHECK(sd < 0.055);
    }
}

TEST_CASE("decimation keeps anchors") {
    const auto c = circle(1000);
    CHECK(decimate(c, 1.0, {}, 1) == c);
    const std::vector<std::size_t> anchors{0, 125, 250, 375, 500, 625, 750, 875};
    for (double keep : {0.7, 0.5, 0.3, 0.1, 0.05}) {
        const auto idx = decimation_indices(1000, keep, anchors, 4);
        CHECK(idx.size() == static_cast<std::size_t>(std::lround(keep * 1000)));
        CHECK(std::is_sorted(idx.begin(), idx.end()));
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        for (auto a : anchors) CHECK(std::binary_search(idx.begin(), idx.end(), a));
        const auto d = decimate(c, keep, anchors, 4);
        REQUIRE(d.size() == idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) CHECK(d[i] == c[idx[i]]);
    }
    CHECK(decimate(c, 0.05, anchors, 4).size() == 50);
    CHECK_THROWS_AS(decimate(c, 0.01, anchors, 4), Error);
    CHECK_THROWS_AS(decimate(c, 0.5, std::vector<std::size_t>{1000}, 4), Error);
}

TEST_CASE("LOESS smoothing") {
    SUBCASE("reproduces a parabola") {
        std::vector<Point2> pts;
        for (int i = -50; i <= 50; ++i) {
            const double x = i * 0.02;
            pts.push_back({x, x * x});
        }
        const PlanarCurve p(pts, false);
        for (double span : {0.05, 0.2, 0.6}) CHECK(max_point_diff(smooth_loess(p, span), p) < 1e-9);
    }
    SUBCASE("reproduces a line") {
        const auto l = line(200);
        CHECK(max_point_diff(smooth_loess(l, 0.1), l) < 1e-9);
    }
    SUBCASE("reduces radial noise on a circle") {
        const auto noisy = add_gaussian_noise(circle(500), 0.05, 17);
        const auto smooth = smooth_loess(noisy, 0.1);
        auto rms = [](const PlanarCurve& c) {
            double s = 0;
            for (const auto& p : c.points()) s += std::pow(norm(p) - 1.0, 2);
            return std::sqrt(s / c.size());
        };
        CHECK(smooth.size() == noisy.size());
        CHECK(smooth.closed());
        CHECK(rms(smooth) < rms(noisy));
    }
    SUBCASE("commutes with rotation") {
        const auto s = add_gaussian_noise(star(400), 0.02, 5);
        const double a = 1.234;
        CHECK(max_point_diff(smooth_loess(rotate(s, a), 0.2), rotate(smooth_loess(s, 0.2), a)) < 1e-9);
    }
    CHECK_THROWS_AS(smooth_loess(circle(40), 0.1), Error);
}

TEST_CASE("orientation helpers") {
    const auto c = circle(50);
    CHECK(c.signed_area() > 0);
    CHECK(c.reversed().signed_area() < 0);
    CHECK(orient_counterclockwise(c.reversed()).signed_area() > 0);
    CHECK(c.cyclic_shift(5)[0] == c[5]);
    CHECK(std::abs(max_diameter(c) - 2.0) < 1e-3);
}

}  // TEST_SUITE
