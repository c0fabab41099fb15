#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace invsig {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 p);

/**
 * Ordered polyline in the plane. Closed curves keep their closing segment
 * implicit: the last point is never a copy of the first.
 *
 * Construction validates: all coordinates finite, no two consecutive points
 * identical (including last/first when closed), at least 2 points for an
 * open curve and 3 for a closed one.
 */
class PlanarCurve {
public:
    PlanarCurve(std::vector<Point2> points, bool closed);

    std::span<const Point2> points() const noexcept { return points_; }
    const Point2& operator[](std::size_t i) const { return points_[i]; }
    std::size_t size() const noexcept { return points_.size(); }
    bool closed() const noexcept { return closed_; }

    // Positive when a closed curve is traversed counterclockwise. The closing
    // segment is included even for open curves.
    double signed_area() const;
    Point2 centroid() const;

    PlanarCurve reversed() const;
    PlanarCurve cyclic_shift(std::size_t k) const;

    friend bool operator==(const PlanarCurve&, const PlanarCurve&) = default;

private:
    std::vector<Point2> points_;
    bool closed_;
};

struct ArcLengthProfile {
    std::vector<double> values;  // values[0] == 0
    double total = 0.0;          // includes the closing segment for closed curves
};

ArcLengthProfile cumulative_arclength(const PlanarCurve& curve);

// n points at equal arc-length spacing along the polyline; the first output
// point coincides with the first input point.
PlanarCurve resample_uniform(const PlanarCurve& curve, std::size_t n);

// Zero centroid, unit standard deviation over the 2N stacked coordinates.
PlanarCurve normalize_curve(const PlanarCurve& curve);

// The affine map normalize_curve applies: p -> (p - center) / scale.
struct Normalization {
    Point2 center{};
    double scale = 1.0;

    Point2 apply(Point2 p) const { return (1.0 / scale) * (p - center); }
};

Normalization normalization_of(const PlanarCurve& curve);

// Counterclockwise copy of a closed curve (open curves returned unchanged).
PlanarCurve orient_counterclockwise(const PlanarCurve& curve);

struct EuclideanTransform {
    bool reflect = false;  // y -> -y, applied first
    double angle = 0.0;    // radians
    Point2 translation{};

    static EuclideanTransform identity() { return {}; }
    Point2 apply(Point2 p) const;
};

// Reflection with probability 1/2, angle ~ U[-pi, pi], translation ~ U[-1, 1]^2.
EuclideanTransform sample_euclidean_transform(std::uint64_t seed);

PlanarCurve apply_transform(const PlanarCurve& curve, const EuclideanTransform& t);
PlanarCurve random_euclidean_transform(const PlanarCurve& curve, std::uint64_t seed);

PlanarCurve rotate(const PlanarCurve& curve, double angle, Point2 center = {});
PlanarCurve scale(const PlanarCurve& curve, double factor);

PlanarCurve add_gaussian_noise(const PlanarCurve& curve, double sigma, std::uint64_t seed);

// Keeps every anchor plus a uniform random subset of the remaining points so
// that round(keep_fraction * N) points survive, in traversal order.
PlanarCurve decimate(const PlanarCurve& curve, double keep_fraction,
                     std::span<const std::size_t> anchor_indices, std::uint64_t seed);

// Which input indices decimate() keeps, sorted ascending.
std::vector<std::size_t> decimation_indices(std::size_t n, double keep_fraction,
                                            std::span<const std::size_t> anchor_indices,
                                            std::uint64_t seed);

// Degree-2 local regression with tricube weights over index windows of
// round(span_fraction * N) points, applied to x and y independently.
PlanarCurve smooth_loess(const PlanarCurve& curve, double span_fraction);

double max_diameter(const PlanarCurve& curve);

}  // namespace invsig
