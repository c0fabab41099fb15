#pragma once

#include "invsig/curve.hpp"

#include <filesystem>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace invsig {

enum class SignatureMethod { Curvature, CurvatureS, IntegralArea, Network };

std::string_view to_string(SignatureMethod method) noexcept;
SignatureMethod parse_signature_method(std::string_view text);

// Per-point scalar function aligned index-for-index with a curve.
struct Signature {
    std::vector<double> values;
    SignatureMethod method = SignatureMethod::Curvature;
    double scale = 0.0;  // sigma, radius or network scale index

    std::size_t size() const noexcept { return values.size(); }
};

/**
 * Sampled Gaussian and its first two derivatives, stored in cross-correlation
 * order: out[i] = sum_k taps[k] * f[i + k - radius] estimates f, f' and f''
 * respectively. The derivative taps are therefore the mirrored closed forms.
 *
 * g is renormalized to unit sum. g' and g'' are mean-corrected to zero sum and
 * then rescaled so their first and second moments are exactly 1 and 2, which
 * makes them exact on linear and quadratic data despite the 4-sigma truncation.
 */
struct GaussianKernelSet {
    double sigma = 0.0;
    int radius = 0;
    std::vector<double> g;
    std::vector<double> dg;
    std::vector<double> d2g;
};

GaussianKernelSet gaussian_derivative_kernels(double sigma);

// Boundary handling for signal filtering.
enum class Boundary {
    Wrap,     // closed curves
    Reflect,  // mirror without repeating the edge sample: f[-k] = f[k]
    OddReflect,  // point reflection through the edge sample: f[-k] = 2 f[0] - f[k]
};

// Same-length cross-correlation of a signal with an odd-length kernel.
std::vector<double> correlate(std::span<const double> signal, std::span<const double> taps,
                              Boundary boundary);

// Curvature of the curve parameterized by sample index, via Gaussian-derivative
// filtering. Positive for counterclockwise convex curves.
Signature euclidean_curvature(const PlanarCurve& curve, double sigma);

// d(sig)/ds: g'-filtered signature divided by |C_p| from the same kernel set.
Signature differentiate_wrt_arclength(const Signature& sig, const PlanarCurve& curve, double sigma);

// False for open-curve samples within one kernel radius of either end, where
// the reflected padding dominates the estimate.
std::vector<bool> reliable_samples(const PlanarCurve& curve, double sigma);

std::vector<Signature> curvature_scale_space(const PlanarCurve& curve,
                                             std::span<const double> sigmas);

enum class SelfIntersectionPolicy {
    Reject,      // throw on self-intersecting polygons
    BestEffort,  // accept; area uses winding-weighted Green's sum clamped to [0, pi r^2]
};

struct IntegralAreaOptions {
    SelfIntersectionPolicy self_intersection = SelfIntersectionPolicy::Reject;
};

// Exact area of disk(center, r) intersected with the interior of a simple polygon.
// Orientation of the polygon does not matter.
double disk_polygon_intersection_area(std::span<const Point2> polygon, Point2 center, double r);

// Area of Disk(P_i, r) ∩ interior for each vertex of a closed curve.
Signature integral_area_invariant(const PlanarCurve& curve, double r,
                                  IntegralAreaOptions options = {});

// O(N^2) segment-pair test on the closed polyline.
bool is_simple_polygon(const PlanarCurve& curve);

// CSV with header "index,value,method,scale".
std::string format_signature_csv(const Signature& sig);
Signature parse_signature_csv(std::string_view text, std::string_view source_name = "<string>");
void write_signature(const Signature& sig, const std::filesystem::path& path);
Signature read_signature(const std::filesystem::path& path);

}  // namespace invsig
