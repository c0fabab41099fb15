#include "invsig/invariants.hpp"

#include "invsig/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace invsig {

std::string_view to_string(SignatureMethod method) noexcept {
    switch (method) {
        case SignatureMethod::Curvature: return "curvature";
        case SignatureMethod::CurvatureS: return "curvature_s";
        case SignatureMethod::IntegralArea: return "integral_area";
        case SignatureMethod::Network: return "network";
    }
    return "unknown";
}

SignatureMethod parse_signature_method(std::string_view text) {
    for (auto m : {SignatureMethod::Curvature, SignatureMethod::CurvatureS,
                   SignatureMethod::IntegralArea, SignatureMethod::Network}) {
        if (to_string(m) == text) return m;
    }
    fail(ErrorCode::InvalidArgument, "unknown signature method '" + std::string(text) + "'");
}

GaussianKernelSet gaussian_derivative_kernels(double sigma) {
    require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument,
            "gaussian sigma must be positive");
    GaussianKernelSet set;
    set.sigma = sigma;
    set.radius = static_cast<int>(std::ceil(4.0 * sigma));
    const int len = 2 * set.radius + 1;
    set.g.resize(len);
    set.dg.resize(len);
    set.d2g.resize(len);

    const double s2 = sigma * sigma;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    for (int k = 0; k < len; ++k) {
        const double x = static_cast<double>(k - set.radius);
        const double e = norm * std::exp(-x * x / (2.0 * s2));
        set.g[k] = e;
        // Mirrored first derivative: taps[k] = g'(-x) = x / sigma^2 * g(x).
        set.dg[k] = x / s2 * e;
        set.d2g[k] = (x * x - s2) / (s2 * s2) * e;
    }

    double sum = 0.0;
    for (double v : set.g) sum += v;
    for (double& v : set.g) v /= sum;

    auto zero_mean = [](std::vector<double>& taps) {
        double total = 0.0;
        for (double v : taps) total += v;
        const double mean = total / static_cast<double>(taps.size());
        for (double& v : taps) v -= mean;
    };
    zero_mean(set.dg);
    zero_mean(set.d2g);

    double first = 0.0;
    double second = 0.0;
    for (int k = 0; k < len; ++k) {
        const double x = static_cast<double>(k - set.radius);
        first += x * set.dg[k];
        second += x * x * set.d2g[k];
    }
    for (double& v : set.dg) v /= first;
    for (double& v : set.d2g) v *= 2.0 / second;
    return set;
}

std::vector<double> correlate(std::span<const double> signal, std::span<const double> taps,
                              Boundary boundary) {
    require(taps.size() % 2 == 1, ErrorCode::InvalidArgument, "kernel length must be odd");
    const auto n = static_cast<long>(signal.size());
    const auto r = static_cast<long>(taps.size() / 2);
    require(n > r, ErrorCode::InvalidArgument,
            "signal of length " + std::to_string(n) + " is too short for kernel radius " +
                std::to_string(r));

    // Padded copy [r | signal | r] so the inner loop is branch-free.
    std::vector<double> padded(static_cast<std::size_t>(n + 2 * r));
    for (long i = -r; i < n + r; ++i) {
        double v = 0.0;
        if (i >= 0 && i < n) {
            v = signal[static_cast<std::size_t>(i)];
        } else if (boundary == Boundary::Wrap) {
            v = signal[static_cast<std::size_t>(((i % n) + n) % n)];
        } else {
            const long mirrored = i < 0 ? -i : 2 * (n - 1) - i;
            v = signal[static_cast<std::size_t>(mirrored)];
            if (boundary == Boundary::OddReflect) {
                const double edge = signal[static_cast<std::size_t>(i < 0 ? 0 : n - 1)];
                v = 2.0 * edge - v;
            }
        }
        padded[static_cast<std::size_t>(i + r)] = v;
    }

    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < taps.size(); ++k) {
            acc += taps[k] * padded[static_cast<std::size_t>(i) + k];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

namespace {

struct CurveDerivatives {
    std::vector<double> xp, yp, xpp, ypp;
};

Boundary curve_boundary(const PlanarCurve& curve) {
    return curve.closed() ? Boundary::Wrap : Boundary::OddReflect;
}

CurveDerivatives differentiate_curve(const PlanarCurve& curve, const GaussianKernelSet& k) {
    const std::size_t n = curve.size();
    require(n > k.g.size(), ErrorCode::InvalidArgument,
            "curve of " + std::to_string(n) + " points is too short for a kernel of " +
                std::to_string(k.g.size()) + " taps");
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = curve[i].x;
        y[i] = curve[i].y;
    }
    const Boundary b = curve_boundary(curve);
    return {correlate(x, k.dg, b), correlate(y, k.dg, b), correlate(x, k.d2g, b),
            correlate(y, k.d2g, b)};
}

double speed(double xp, double yp) {
    const double v = std::hypot(xp, yp);
    require(v >= 1e-12, ErrorCode::DegenerateCurve, "degenerate parameterization: |C_p| < 1e-12");
    return v;
}

}  // namespace

Signature euclidean_curvature(const PlanarCurve& curve, double sigma) {
    const auto kernels = gaussian_derivative_kernels(sigma);
    const auto d = differentiate_curve(curve, kernels);
    Signature sig{std::vector<double>(curve.size()), SignatureMethod::Curvature, sigma};
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double v = speed(d.xp[i], d.yp[i]);
        sig.values[i] = (d.xp[i] * d.ypp[i] - d.yp[i] * d.xpp[i]) / (v * v * v);
    }
    return sig;
}

Signature differentiate_wrt_arclength(const Signature& sig, const PlanarCurve& curve, double sigma) {
    require(sig.size() == curve.size(), ErrorCode::ShapeMismatch,
            "signature length " + std::to_string(sig.size()) + " does not match curve length " +
                std::to_string(curve.size()));
    const auto kernels = gaussian_derivative_kernels(sigma);
    const auto d = differentiate_curve(curve, kernels);
    const auto dsig = correlate(sig.values, kernels.dg, curve_boundary(curve));
    Signature out{std::vector<double>(curve.size()), SignatureMethod::CurvatureS, sigma};
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out.values[i] = dsig[i] / speed(d.xp[i], d.yp[i]);
    }
    return out;
}

std::vector<Signature> curvature_scale_space(const PlanarCurve& curve,
                                             std::span<const double> sigmas) {
    require(!sigmas.empty(), ErrorCode::InvalidArgument, "scale-space needs at least one sigma");
    for (std::size_t k = 1; k < sigmas.size(); ++k) {
        require(sigmas[k] > sigmas[k - 1], ErrorCode::InvalidArgument,
                "scale-space sigmas must be strictly ascending");
    }
    std::vector<Signature> out;
    out.reserve(sigmas.size());
    for (double s : sigmas) out.push_back(euclidean_curvature(curve, s));
    return out;
}

namespace {

// Signed area of disk(0, r) ∩ triangle(0, a, b), by splitting the edge at its
// circle crossings: chords inside the disk contribute a triangle, pieces
// outside contribute a circular sector.
double edge_contribution(Point2 a, Point2 b, double r) {
    const Point2 d = b - a;
    const double qa = dot(d, d);
    const double qb = dot(a, d);
    const double qc = dot(a, a) - r * r;
    const double disc = qb * qb - qa * qc;

    std::array<double, 4> ts{0.0, 0.0, 0.0, 0.0};
    std::size_t count = 1;
    if (disc > 0.0) {
        const double root = std::sqrt(disc);
        const double t1 = (-qb - root) / qa;
        const double t2 = (-qb + root) / qa;
        if (t1 > 0.0 && t1 < 1.0) ts[count++] = t1;
        if (t2 > 0.0 && t2 < 1.0) ts[count++] = t2;
    }
    ts[count++] = 1.0;

    const double r2 = r * r;
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < count; ++k) {
        const Point2 p = a + ts[k] * d;
        const Point2 q = a + ts[k + 1] * d;
        const Point2 mid = a + (0.5 * (ts[k] + ts[k + 1])) * d;
        if (dot(mid, mid) <= r2) {
            area += 0.5 * cross(p, q);
        } else {
            area += 0.5 * r2 * std::atan2(cross(p, q), dot(p, q));
        }
    }
    return area;
}

int orientation(Point2 a, Point2 b, Point2 c) {
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

}  // namespace

double disk_polygon_intersection_area(std::span<const Point2> polygon, Point2 center, double r) {
    require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument, "radius must be positive");
    const std::size_t n = polygon.size();
    double total = 0.0;
    double twice_area = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = polygon[i] - center;
        const Point2 b = polygon[(i + 1) % n] - center;
        total += edge_contribution(a, b, r);
        twice_area += cross(polygon[i], polygon[(i + 1) % n]);
    }
    if (twice_area < 0.0) total = -total;
    return std::clamp(total, 0.0, std::numbers::pi * r * r);
}

bool is_simple_polygon(const PlanarCurve& curve) {
    const auto pts = curve.points();
    const std::size_t n = pts.size();
    const std::size_t edges = curve.closed() ? n : n - 1;
    for (std::size_t i = 0; i < edges; ++i) {
        const Point2 a = pts[i];
        const Point2 b = pts[(i + 1) % n];
        for (std::size_t j = i + 1; j < edges; ++j) {
            const bool adjacent = j == i + 1 || (curve.closed() && i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(a, b, pts[j], pts[(j + 1) % n])) return false;
        }
    }
    return true;
}

Signature integral_area_invariant(const PlanarCurve& curve, double r, IntegralAreaOptions options) {
    require(curve.closed(), ErrorCode::InvalidCurve,
            "integral area invariant needs a closed curve (interior undefined otherwise)");
    require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument, "radius must be positive");
    if (options.self_intersection == SelfIntersectionPolicy::Reject) {
        require(is_simple_polygon(curve), ErrorCode::InvalidCurve,
                "integral area invariant needs a simple (non self-intersecting) polygon");
    }
    const auto pts = curve.points();
    Signature sig{std::vector<double>(pts.size()), SignatureMethod::IntegralArea, r};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        sig.values[i] = disk_polygon_intersection_area(pts, pts[i], r);
    }
    return sig;
}

std::vector<bool> reliable_samples(const PlanarCurve& curve, double sigma) {
    const int radius = gaussian_derivative_kernels(sigma).radius;
    const std::size_t n = curve.size();
    std::vector<bool> ok(n, true);
    if (curve.closed()) return ok;
    const auto r = static_cast<std::size_t>(radius);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < r || i + r >= n) ok[i] = false;
    }
    return ok;
}

std::string format_signature_csv(const Signature& sig) {
    std::string out = "index,value,method,scale\n";
    const auto method = to_string(sig.method);
    for (std::size_t i = 0; i < sig.values.size(); ++i) {
        out += fmt::format("{},{:.17g},{},{:.17g}\n", i, sig.values[i], method, sig.scale);
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

template <typename T>
T parse_field(std::string_view token, std::string_view source, std::size_t line) {
    T value{};
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
        fail(ErrorCode::MalformedFile, fmt::format("{}:{}: invalid field '{}'", source, line, token));
    }
    return value;
}

}  // namespace

Signature parse_signature_csv(std::string_view text, std::string_view source_name) {
    Signature sig;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!header) {
            if (line != "index,value,method,scale") {
                fail(ErrorCode::MalformedFile,
                     fmt::format("{}:{}: expected header 'index,value,method,scale'", source_name, line_no));
            }
            header = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 4) {
            fail(ErrorCode::MalformedFile, fmt::format("{}:{}: expected 4 fields", source_name, line_no));
        }
        const auto index = parse_field<std::size_t>(fields[0], source_name, line_no);
        if (index != sig.values.size()) {
            fail(ErrorCode::MalformedFile, fmt::format("{}:{}: index out of order", source_name, line_no));
        }
        const double value = parse_field<double>(fields[1], source_name, line_no);
        if (!std::isfinite(value)) {
            fail(ErrorCode::MalformedFile, fmt::format("{}:{}: non-finite value", source_name, line_no));
        }
        SignatureMethod method{};
        try {
            method = parse_signature_method(fields[2]);
        } catch (const Error& e) {
            fail(ErrorCode::MalformedFile, fmt::format("{}:{}: {}", source_name, line_no, e.what()));
        }
        const double scale = parse_field<double>(fields[3], source_name, line_no);
        if (sig.values.empty()) {
            sig.method = method;
            sig.scale = scale;
        } else if (method != sig.method || scale != sig.scale) {
            fail(ErrorCode::MalformedFile,
                 fmt::format("{}:{}: method or scale differs from earlier rows", source_name, line_no));
        }
        sig.values.push_back(value);
    }
    require(header, ErrorCode::MalformedFile, std::string(source_name) + ": empty signature file");
    return sig;
}

void write_signature(const Signature& sig, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << format_signature_csv(sig);
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

Signature read_signature(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_signature_csv(ss.str(), path.string());
}

}  // namespace invsig
