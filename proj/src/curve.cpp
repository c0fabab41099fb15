#include "invsig/curve.hpp"

#include "invsig/error.hpp"
#include "invsig/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace invsig {

double norm(Point2 p) { return std::hypot(p.x, p.y); }

PlanarCurve::PlanarCurve(std::vector<Point2> points, bool closed)
    : points_(std::move(points)), closed_(closed) {
    const std::size_t n = points_.size();
    const std::size_t min_points = closed_ ? 3 : 2;
    require(n >= min_points, ErrorCode::InvalidCurve,
            "curve needs at least " + std::to_string(min_points) + " points, got " +
                std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        require(std::isfinite(points_[i].x) && std::isfinite(points_[i].y),
                ErrorCode::InvalidCurve, "non-finite coordinate at point " + std::to_string(i));
        if (i + 1 < n) {
            require(points_[i] != points_[i + 1], ErrorCode::InvalidCurve,
                    "consecutive duplicate points at index " + std::to_string(i));
        }
    }
    if (closed_) {
        require(points_.front() != points_.back(), ErrorCode::InvalidCurve,
                "closed curve repeats its first point at the end");
    }
}

double PlanarCurve::signed_area() const {
    double twice = 0.0;
    const std::size_t n = points_.size();
    for (std::size_t i = 0; i < n; ++i) {
        twice += cross(points_[i], points_[(i + 1) % n]);
    }
    return 0.5 * twice;
}

Point2 PlanarCurve::centroid() const {
    Point2 sum{};
    for (const auto& p : points_) sum = sum + p;
    return (1.0 / static_cast<double>(points_.size())) * sum;
}

PlanarCurve PlanarCurve::reversed() const {
    std::vector<Point2> pts(points_.rbegin(), points_.rend());
    return PlanarCurve(std::move(pts), closed_);
}

PlanarCurve PlanarCurve::cyclic_shift(std::size_t k) const {
    std::vector<Point2> pts(points_);
    std::rotate(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(k % pts.size()), pts.end());
    return PlanarCurve(std::move(pts), closed_);
}

ArcLengthProfile cumulative_arclength(const PlanarCurve& curve) {
    const auto pts = curve.points();
    ArcLengthProfile profile;
    profile.values.resize(pts.size());
    double s = 0.0;
    profile.values[0] = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        s += norm(pts[i] - pts[i - 1]);
        profile.values[i] = s;
    }
    if (curve.closed()) s += norm(pts.front() - pts.back());
    profile.total = s;
    return profile;
}

PlanarCurve resample_uniform(const PlanarCurve& curve, std::size_t n) {
    require(n >= 3, ErrorCode::InvalidArgument, "resample target must be at least 3 points");
    const auto pts = curve.points();
    const auto profile = cumulative_arclength(curve);
    require(profile.total > 0.0, ErrorCode::DegenerateCurve, "cannot resample a zero-length curve");

    // Vertex list including the closing vertex for closed curves.
    std::vector<Point2> verts(pts.begin(), pts.end());
    std::vector<double> arc(profile.values);
    if (curve.closed()) {
        verts.push_back(pts.front());
        arc.push_back(profile.total);
    }

    const double step = curve.closed() ? profile.total / static_cast<double>(n)
                                       : profile.total / static_cast<double>(n - 1);
    std::vector<Point2> out;
    out.reserve(n);
    out.push_back(verts.front());
    std::size_t seg = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (!curve.closed() && k == n - 1) {
            out.push_back(verts.back());
            break;
        }
        const double s = step * static_cast<double>(k);
        while (seg + 2 < arc.size() && arc[seg + 1] <= s) ++seg;
        const double len = arc[seg + 1] - arc[seg];
        const double t = len > 0.0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
        out.push_back(verts[seg] + t * (verts[seg + 1] - verts[seg]));
    }
    return PlanarCurve(std::move(out), curve.closed());
}

Normalization normalization_of(const PlanarCurve& curve) {
    const Point2 c = curve.centroid();
    double sq = 0.0;
    for (const auto& p : curve.points()) {
        const Point2 d = p - c;
        sq += d.x * d.x + d.y * d.y;
    }
    const double sd = std::sqrt(sq / (2.0 * static_cast<double>(curve.size())));
    require(sd > 0.0, ErrorCode::DegenerateCurve, "cannot normalize a curve with zero variance");
    return {c, sd};
}

PlanarCurve normalize_curve(const PlanarCurve& curve) {
    const auto t = normalization_of(curve);
    std::vector<Point2> out;
    out.reserve(curve.size());
    for (const auto& p : curve.points()) out.push_back(t.apply(p));
    return PlanarCurve(std::move(out), curve.closed());
}

PlanarCurve orient_counterclockwise(const PlanarCurve& curve) {
    if (!curve.closed() || curve.signed_area() >= 0.0) return curve;
    // Keep the start point fixed while reversing the traversal.
    return curve.reversed().cyclic_shift(curve.size() - 1);
}

Point2 EuclideanTransform::apply(Point2 p) const {
    if (reflect) p.y = -p.y;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y};
}

EuclideanTransform sample_euclidean_transform(std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    EuclideanTransform t;
    t.reflect = coin(rng);
    t.angle = angle(rng);
    t.translation.x = shift(rng);
    t.translation.y = shift(rng);
    return t;
}

PlanarCurve apply_transform(const PlanarCurve& curve, const EuclideanTransform& t) {
    std::vector<Point2> out;
    out.reserve(curve.size());
    for (const auto& p : curve.points()) out.push_back(t.apply(p));
    return PlanarCurve(std::move(out), curve.closed());
}

PlanarCurve random_euclidean_transform(const PlanarCurve& curve, std::uint64_t seed) {
    return apply_transform(curve, sample_euclidean_transform(seed));
}

PlanarCurve rotate(const PlanarCurve& curve, double angle, Point2 center) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    std::vector<Point2> out;
    out.reserve(curve.size());
    for (const auto& p : curve.points()) {
        const Point2 d = p - center;
        out.push_back({center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y});
    }
    return PlanarCurve(std::move(out), curve.closed());
}

PlanarCurve scale(const PlanarCurve& curve, double factor) {
    require(factor > 0.0, ErrorCode::InvalidArgument, "scale factor must be positive");
    std::vector<Point2> out;
    out.reserve(curve.size());
    for (const auto& p : curve.points()) out.push_back(factor * p);
    return PlanarCurve(std::move(out), curve.closed());
}

PlanarCurve add_gaussian_noise(const PlanarCurve& curve, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument,
            "noise sigma must be a finite non-negative number");
    if (sigma == 0.0) return curve;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<Point2> out;
    out.reserve(curve.size());
    for (const auto& p : curve.points()) {
        const double dx = noise(rng);
        const double dy = noise(rng);
        out.push_back({p.x + dx, p.y + dy});
    }
    return PlanarCurve(std::move(out), curve.closed());
}

std::vector<std::size_t> decimation_indices(std::size_t n, double keep_fraction,
                                            std::span<const std::size_t> anchor_indices,
                                            std::uint64_t seed) {
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, ErrorCode::InvalidArgument,
            "keep_fraction must lie in (0, 1]");
    std::vector<bool> is_anchor(n, false);
    std::size_t anchors = 0;
    for (std::size_t a : anchor_indices) {
        require(a < n, ErrorCode::InvalidArgument,
                "anchor index " + std::to_string(a) + " out of range");
        if (!is_anchor[a]) ++anchors;
        is_anchor[a] = true;
    }
    const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(n)));
    require(keep >= anchors + 3, ErrorCode::InvalidArgument,
            "decimation keeps " + std::to_string(keep) + " points but needs at least " +
                std::to_string(anchors + 3));

    std::vector<std::size_t> free;
    free.reserve(n - anchors);
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_anchor[i]) free.push_back(i);
    }
    // Partial Fisher-Yates: the first (keep - anchors) entries are a uniform subset.
    Rng rng = make_rng(seed);
    const std::size_t extra = keep - anchors;
    for (std::size_t i = 0; i < extra; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, free.size() - 1);
        std::swap(free[i], free[pick(rng)]);
    }
    std::vector<std::size_t> kept(free.begin(), free.begin() + static_cast<std::ptrdiff_t>(extra));
    for (std::size_t i = 0; i < n; ++i) {
        if (is_anchor[i]) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

PlanarCurve decimate(const PlanarCurve& curve, double keep_fraction,
                     std::span<const std::size_t> anchor_indices, std::uint64_t seed) {
    const auto kept = decimation_indices(curve.size(), keep_fraction, anchor_indices, seed);
    if (kept.size() == curve.size()) return curve;
    std::vector<Point2> out;
    out.reserve(kept.size());
    for (std::size_t i : kept) out.push_back(curve[i]);
    return PlanarCurve(std::move(out), curve.closed());
}

namespace {

// Weights l such that sum_j l[j] * y[offsets[j]] is the degree-2 weighted
// least-squares fit evaluated at offset 0.
std::vector<double> loess_equivalent_kernel(std::span<const long> offsets) {
    long reach = 0;
    for (long o : offsets) reach = std::max(reach, std::labs(o));
    const double scale = static_cast<double>(reach + 1);

    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    std::vector<Eigen::Vector3d> rows;
    std::vector<double> weights;
    rows.reserve(offsets.size());
    weights.reserve(offsets.size());
    for (long o : offsets) {
        const double u = static_cast<double>(o) / scale;
        const double a = 1.0 - std::pow(std::abs(u), 3);
        const double w = a * a * a;
        const Eigen::Vector3d basis(1.0, u, u * u);
        normal += w * basis * basis.transpose();
        rows.push_back(basis);
        weights.push_back(w);
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
    require(lu.rank() == 3, ErrorCode::DegenerateCurve, "loess window is rank deficient");
    const Eigen::Vector3d e0 = lu.solve(Eigen::Vector3d::UnitX());

    std::vector<double> kernel(offsets.size());
    for (std::size_t j = 0; j < offsets.size(); ++j) kernel[j] = weights[j] * e0.dot(rows[j]);
    return kernel;
}

}  // namespace

PlanarCurve smooth_loess(const PlanarCurve& curve, double span_fraction) {
    require(span_fraction > 0.0 && span_fraction < 1.0, ErrorCode::InvalidArgument,
            "loess span fraction must lie in (0, 1)");
    const std::size_t n = curve.size();
    const auto w = static_cast<std::size_t>(std::llround(span_fraction * static_cast<double>(n)));
    require(w >= 5, ErrorCode::InvalidArgument,
            "loess window of " + std::to_string(w) + " points is smaller than 5");
    // Symmetric window of 2h+1 points, never larger than the curve itself.
    const auto h = static_cast<long>(std::min(w, n) - 1) / 2;
    const auto ln = static_cast<long>(n);
    const auto pts = curve.points();

    std::vector<Point2> out(n);
    std::vector<long> offsets;
    for (long o = -h; o <= h; ++o) offsets.push_back(o);
    const auto centered = loess_equivalent_kernel(offsets);

    for (long i = 0; i < ln; ++i) {
        long start = i - h;
        if (!curve.closed()) start = std::clamp(start, 0L, ln - (2 * h + 1));
        const bool symmetric = start == i - h;
        std::vector<double> local;
        if (!symmetric) {
            std::vector<long> shifted;
            for (long j = start; j < start + 2 * h + 1; ++j) shifted.push_back(j - i);
            local = loess_equivalent_kernel(shifted);
        }
        const auto& kernel = symmetric ? centered : local;
        Point2 acc{};
        for (long j = 0; j < 2 * h + 1; ++j) {
            long idx = start + j;
            if (curve.closed()) idx = ((idx % ln) + ln) % ln;
            acc = acc + kernel[static_cast<std::size_t>(j)] * pts[static_cast<std::size_t>(idx)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return PlanarCurve(std::move(out), curve.closed());
}

double max_diameter(const PlanarCurve& curve) {
    const auto pts = curve.points();
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            best = std::max(best, norm(pts[i] - pts[j]));
        }
    }
    return best;
}

}  // namespace invsig
