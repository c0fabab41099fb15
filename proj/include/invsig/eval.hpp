#pragma once

#include "invsig/data.hpp"
#include "invsig/invariants.hpp"
#include "invsig/net.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace invsig {

// Subtract the mean, divide by the (population) standard deviation. A constant
// input maps to all zeros.
std::vector<double> z_normalize(std::span<const double> values);

// RMS difference of the z-normalized signatures, minimized over cyclic shifts
// of b when `closed`.
double signature_distance(std::span<const double> a, std::span<const double> b, bool closed);
double signature_distance(const Signature& a, const Signature& b, bool closed);

inline constexpr std::size_t kSignatureSetSize = 5;

struct SignatureSet {
    std::string shape_id;
    std::vector<Signature> signatures;  // ascending scale
    bool closed = true;

    void validate() const;
};

// max(h(A,B), h(B,A)), h(A,B) = max_a min_b signature_distance(a, b).
double hausdorff_set_distance(const SignatureSet& a, const SignatureSet& b);

// Integral-invariant radii as fractions of the curve's diameter.
inline constexpr std::array<double, kSignatureSetSize> kIntegralRadiusFractions{0.05, 0.10, 0.20,
                                                                                 0.35, 0.50};

SignatureSet integral_signature_set(const std::string& shape_id, const PlanarCurve& curve,
                                    IntegralAreaOptions options = {
                                        SelfIntersectionPolicy::BestEffort});
// models[k] is the network trained at scale index k+1.
SignatureSet network_signature_set(const std::string& shape_id, const PlanarCurve& curve,
                                   std::span<const Model> models);

// Canonical evaluation form: uniform resample then normalize.
PlanarCurve prepare_curve(const PlanarCurve& curve, std::size_t points = 500);

// ---------------------------------------------------------------------------
// Noise robustness
// ---------------------------------------------------------------------------

struct NoiseOptions {
    std::vector<double> sigmas{0.0, 0.01, 0.02, 0.05};
    double curvature_sigma = 2.0;
    double integral_radius_fraction = 0.1;  // of the clean curve's diameter
    std::size_t points = 500;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct NoiseRecord {
    std::string shape_id;
    SignatureMethod method;
    double sigma;
    double distance;
};

struct NoiseSummaryRow {
    SignatureMethod method;
    double sigma;
    double mean;
    double std;
};

struct NoiseReport {
    std::vector<NoiseRecord> records;  // shape-major, then sigma, then method
    std::vector<NoiseSummaryRow> summary;

    std::string records_csv() const;
    std::string summary_csv() const;  // method,sigma,mean,std
};

/**
 * Each shape is prepared, then for every sigma a copy is rotated by a random
 * angle about its centroid, perturbed with Gaussian noise and re-normalized
 * without resampling. The recorded value is signature_distance between clean
 * and corrupted signatures. `model` may be null to skip the network method.
 */
NoiseReport noise_experiment(std::span<const ShapeRecord> shapes, const Model* model,
                             const NoiseOptions& options = {});

// ---------------------------------------------------------------------------
// Sampling resilience
// ---------------------------------------------------------------------------

struct SamplingOptions {
    std::vector<double> keep_fractions{0.7, 0.5, 0.3, 0.1, 0.05};
    std::size_t anchor_count = 10;
    double curvature_sigma = 2.0;
    double integral_radius_fraction = 0.1;
    std::size_t points = 500;
    std::uint64_t seed = 0;
};

struct SamplingValue {
    SignatureMethod method;
    std::size_t anchor;        // 0-based anchor number
    std::size_t source_index;  // index into the high-resolution curve
    double keep_fraction;
    double value;  // z-normalized signature value at the nearest resampled point
};

struct SamplingSummaryRow {
    SignatureMethod method;
    std::size_t anchor;
    std::size_t source_index;
    double mean;
    double std;
};

struct SamplingReport {
    std::vector<SamplingValue> values;
    std::vector<SamplingSummaryRow> summary;

    std::string values_csv() const;
    std::string summary_csv() const;
};

// Anchors are evenly spaced indices i * N / anchor_count of the input curve.
std::vector<std::size_t> evenly_spaced_anchors(std::size_t n, std::size_t count);

SamplingReport sampling_experiment(const PlanarCurve& shape, const Model* model,
                                   const SamplingOptions& options = {});

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

enum class LadderKind { Integral, Network };

std::string_view to_string(LadderKind kind) noexcept;

struct RetrievalOptions {
    std::vector<double> sigmas{0.0, 0.02};
    std::size_t points = 500;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct RetrievalRow {
    LadderKind ladder;
    double sigma;
    double mean_precision;  // precision at k = same-category count - 1
    double duplicate_first_rate;  // fraction of queries whose planted twin ranks first
};

struct QueryResult {
    std::string query_id;
    std::vector<std::string> ranking;  // most similar first, query excluded
    double precision = 0.0;
    std::size_t duplicate_rank = 0;  // 1-based rank of the planted twin among all candidates
};

struct RetrievalReport {
    std::vector<RetrievalRow> rows;
    // Per ladder and sigma, in the same order as rows.
    std::vector<std::vector<QueryResult>> queries;

    std::string csv() const;  // method,sigma,mean_precision,duplicate_first_rate
};

/**
 * Every shape is prepared and corrupted (random rigid motion, then noise of the
 * given sigma, then re-normalized). Each query ranks all other shapes by
 * hausdorff_set_distance. A twin built from an exact copy of the query's
 * corrupted curve is planted among the candidates to check it ranks first.
 * `models` must hold 5 models for LadderKind::Network and may be empty otherwise.
 */
RetrievalReport retrieval_experiment(std::span<const ShapeRecord> shapes,
                                     std::span<const LadderKind> ladders,
                                     std::span<const Model> models,
                                     const RetrievalOptions& options = {});

// ---------------------------------------------------------------------------
// Invariance summary
// ---------------------------------------------------------------------------

struct InvarianceOptions {
    std::vector<int> scale_indices{1, 2, 3, 4, 5};  // smoothing partners per shape
    std::size_t points = 500;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct InvarianceReport {
    double d_pos = 0.0;
    double d_neg = 0.0;
    double ratio = 0.0;
    std::size_t shapes = 0;

    std::string csv() const;
};

// Mean RMS distance between network outputs over positive pairs (random rigid
// motions) and negative pairs (the shape against its own smoothed versions).
InvarianceReport invariance_report(const Model& model, std::span<const ShapeRecord> shapes,
                                   const InvarianceOptions& options = {});

}  // namespace invsig
