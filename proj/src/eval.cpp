#include "invsig/eval.hpp"

#include "invsig/error.hpp"
#include "invsig/parallel.hpp"
#include "invsig/random.hpp"
#include "invsig/siamese.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

namespace invsig {

namespace {

enum EvalStream : std::uint64_t {
    kStreamNoise = 11,
    kStreamRotation = 12,
    kStreamDecimate = 13,
    kStreamCorrupt = 14,
    kStreamInvariance = 15,
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(std::span<const double> v) {
    MeanStd out;
    if (v.empty()) return out;
    for (double x : v) out.mean += x;
    out.mean /= static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(v.size()));
    return out;
}

// RMS of a - shift(b), b[(i + s) mod n], on already z-normalized inputs.
double min_shift_rms(std::span<const double> a, std::span<const double> b, bool closed) {
    const std::size_t n = a.size();
    if (!closed) return rms_distance(a, b);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n; ++s) {
        double sq = 0.0;
        const std::size_t tail = n - s;
        for (std::size_t i = 0; i < tail; ++i) {
            const double d = a[i] - b[i + s];
            sq += d * d;
        }
        for (std::size_t i = tail; i < n; ++i) {
            const double d = a[i] - b[i - tail];
            sq += d * d;
        }
        best = std::min(best, sq);
    }
    return std::sqrt(best / static_cast<double>(n));
}

std::vector<std::vector<double>> normalized_members(const SignatureSet& set) {
    std::vector<std::vector<double>> out;
    out.reserve(set.signatures.size());
    for (const auto& s : set.signatures) out.push_back(z_normalize(s.values));
    return out;
}

double hausdorff_normalized(const std::vector<std::vector<double>>& a,
                            const std::vector<std::vector<double>>& b, bool closed) {
    std::vector<double> d(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            require(a[i].size() == b[j].size(), ErrorCode::ShapeMismatch,
                    "signature lengths differ: " + std::to_string(a[i].size()) + " vs " +
                        std::to_string(b[j].size()));
            d[i * b.size() + j] = min_shift_rms(a[i], b[j], closed);
        }
    }
    double ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b.size(); ++j) m = std::min(m, d[i * b.size() + j]);
        ab = std::max(ab, m);
    }
    double ba = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i) m = std::min(m, d[i * b.size() + j]);
        ba = std::max(ba, m);
    }
    return std::max(ab, ba);
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

std::vector<double> z_normalize(std::span<const double> values) {
    const auto [mean, sd] = mean_std(values);
    std::vector<double> out(values.size(), 0.0);
    if (!(sd > 0.0)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
    return out;
}

double signature_distance(std::span<const double> a, std::span<const double> b, bool closed) {
    require(a.size() == b.size(), ErrorCode::ShapeMismatch,
            "signature lengths differ: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
    require(!a.empty(), ErrorCode::ShapeMismatch, "signatures are empty");
    const auto za = z_normalize(a);
    const auto zb = z_normalize(b);
    return min_shift_rms(za, zb, closed);
}

double signature_distance(const Signature& a, const Signature& b, bool closed) {
    return signature_distance(a.values, b.values, closed);
}

void SignatureSet::validate() const {
    require(signatures.size() == kSignatureSetSize, ErrorCode::InvalidArgument,
            "signature set '" + shape_id + "' must hold " + std::to_string(kSignatureSetSize) +
                " signatures, has " + std::to_string(signatures.size()));
    for (const auto& s : signatures) {
        require(s.size() == signatures.front().size() && !s.values.empty(),
                ErrorCode::ShapeMismatch, "signature set '" + shape_id + "' has unequal lengths");
    }
}

double hausdorff_set_distance(const SignatureSet& a, const SignatureSet& b) {
    require(!a.signatures.empty() && !b.signatures.empty(), ErrorCode::InvalidArgument,
            "signature sets must not be empty");
    return hausdorff_normalized(normalized_members(a), normalized_members(b), a.closed && b.closed);
}

PlanarCurve prepare_curve(const PlanarCurve& curve, std::size_t points) {
    return normalize_curve(resample_uniform(curve, points));
}

SignatureSet integral_signature_set(const std::string& shape_id, const PlanarCurve& curve,
                                    IntegralAreaOptions options) {
    SignatureSet set{shape_id, {}, curve.closed()};
    const double diameter = max_diameter(curve);
    for (double f : kIntegralRadiusFractions) {
        set.signatures.push_back(integral_area_invariant(curve, f * diameter, options));
    }
    return set;
}

SignatureSet network_signature_set(const std::string& shape_id, const PlanarCurve& curve,
                                   std::span<const Model> models) {
    require(models.size() == kSignatureSetSize, ErrorCode::InvalidArgument,
            "network signature set needs " + std::to_string(kSignatureSetSize) + " models, got " +
                std::to_string(models.size()));
    SignatureSet set{shape_id, {}, curve.closed()};
    for (std::size_t k = 0; k < models.size(); ++k) {
        auto sig = forward(models[k], curve);
        sig.scale = static_cast<double>(k + 1);
        set.signatures.push_back(std::move(sig));
    }
    return set;
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

namespace {

struct MethodSignatures {
    std::vector<std::pair<SignatureMethod, Signature>> items;
};

MethodSignatures all_signatures(const PlanarCurve& curve, const Model* model, double sigma,
                                double radius) {
    MethodSignatures out;
    out.items.emplace_back(SignatureMethod::Curvature, euclidean_curvature(curve, sigma));
    if (curve.closed()) {
        out.items.emplace_back(
            SignatureMethod::IntegralArea,
            integral_area_invariant(curve, radius, {SelfIntersectionPolicy::BestEffort}));
    }
    if (model) out.items.emplace_back(SignatureMethod::Network, forward(*model, curve));
    return out;
}

}  // namespace

std::string NoiseReport::records_csv() const {
    std::string out = "shape_id,method,sigma,distance\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{}\n", r.shape_id, to_string(r.method), fmt_double(r.sigma),
                           fmt_double(r.distance));
    }
    return out;
}

std::string NoiseReport::summary_csv() const {
    std::string out = "method,sigma,mean,std\n";
    for (const auto& r : summary) {
        out += fmt::format("{},{},{},{}\n", to_string(r.method), fmt_double(r.sigma),
                           fmt_double(r.mean), fmt_double(r.std));
    }
    return out;
}

NoiseReport noise_experiment(std::span<const ShapeRecord> shapes, const Model* model,
                             const NoiseOptions& options) {
    require(!shapes.empty(), ErrorCode::InvalidArgument, "no shapes for the noise experiment");
    require(!options.sigmas.empty(), ErrorCode::InvalidArgument, "empty noise ladder");
    for (double s : options.sigmas) {
        require(s >= 0.0 && std::isfinite(s), ErrorCode::InvalidArgument,
                "noise sigmas must be non-negative");
    }
    require(options.integral_radius_fraction > 0.0, ErrorCode::InvalidArgument,
            "integral radius fraction must be positive");

    std::vector<std::vector<NoiseRecord>> per_shape(shapes.size());
    parallel_for(shapes.size(), options.threads, [&](std::size_t i) {
        const auto clean = prepare_curve(shapes[i].curve, options.points);
        const double radius = options.integral_radius_fraction * max_diameter(clean);
        const auto reference = all_signatures(clean, model, options.curvature_sigma, radius);
        for (std::size_t j = 0; j < options.sigmas.size(); ++j) {
            const auto seed = derive_seed(derive_seed(options.seed, kStreamNoise, i), j);
            Rng rng = make_rng(derive_seed(seed, kStreamRotation));
            std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
            const auto rotated = rotate(clean, angle(rng), clean.centroid());
            const auto corrupted =
                normalize_curve(add_gaussian_noise(rotated, options.sigmas[j], seed));
            const auto sigs = all_signatures(corrupted, model, options.curvature_sigma, radius);
            for (std::size_t m = 0; m < sigs.items.size(); ++m) {
                per_shape[i].push_back({shapes[i].id, sigs.items[m].first, options.sigmas[j],
                                        signature_distance(reference.items[m].second,
                                                           sigs.items[m].second, clean.closed())});
            }
        }
    });

    NoiseReport report;
    std::map<std::pair<int, std::size_t>, std::vector<double>> groups;
    for (auto& rows : per_shape) {
        for (auto& r : rows) {
            const auto sigma_index = static_cast<std::size_t>(
                std::find(options.sigmas.begin(), options.sigmas.end(), r.sigma) -
                options.sigmas.begin());
            groups[{static_cast<int>(r.method), sigma_index}].push_back(r.distance);
            report.records.push_back(std::move(r));
        }
    }
    for (const auto& [key, values] : groups) {
        const auto [mean, sd] = mean_std(values);
        report.summary.push_back({static_cast<SignatureMethod>(key.first),
                                  options.sigmas[key.second], mean, sd});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

std::vector<std::size_t> evenly_spaced_anchors(std::size_t n, std::size_t count) {
    require(count >= 1 && count <= n, ErrorCode::InvalidArgument,
            "anchor count must lie in 1..N");
    std::vector<std::size_t> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = k * n / count;
    return out;
}

std::string SamplingReport::values_csv() const {
    std::string out = "method,anchor,source_index,keep_fraction,value\n";
    for (const auto& v : values) {
        out += fmt::format("{},{},{},{},{}\n", to_string(v.method), v.anchor, v.source_index,
                           fmt_double(v.keep_fraction), fmt_double(v.value));
    }
    return out;
}

std::string SamplingReport::summary_csv() const {
    std::string out = "method,anchor,source_index,mean,std\n";
    for (const auto& r : summary) {
        out += fmt::format("{},{},{},{},{}\n", to_string(r.method), r.anchor, r.source_index,
                           fmt_double(r.mean), fmt_double(r.std));
    }
    return out;
}

SamplingReport sampling_experiment(const PlanarCurve& shape, const Model* model,
                                   const SamplingOptions& options) {
    require(shape.size() >= 1000, ErrorCode::InvalidArgument,
            "sampling experiment needs a curve with at least 1000 points, got " +
                std::to_string(shape.size()));
    require(!options.keep_fractions.empty(), ErrorCode::InvalidArgument, "no keep fractions");
    const auto anchors = evenly_spaced_anchors(shape.size(), options.anchor_count);

    // values[method][anchor][level]
    std::map<int, std::vector<std::vector<double>>> table;
    SamplingReport report;
    for (std::size_t level = 0; level < options.keep_fractions.size(); ++level) {
        const double keep = options.keep_fractions[level];
        const auto kept = decimation_indices(shape.size(), keep, anchors,
                                             derive_seed(options.seed, kStreamDecimate, level));
        for (auto a : anchors) {
            require(std::binary_search(kept.begin(), kept.end(), a), ErrorCode::InvalidArgument,
                    "anchor " + std::to_string(a) + " lost by decimation");
        }
        std::vector<Point2> pts;
        pts.reserve(kept.size());
        for (auto k : kept) pts.push_back(shape[k]);
        const auto resampled = resample_uniform(PlanarCurve(std::move(pts), shape.closed()),
                                                options.points);
        const auto norm = normalization_of(resampled);
        const auto curve = normalize_curve(resampled);
        const double radius = options.integral_radius_fraction * max_diameter(curve);
        const auto sigs = all_signatures(curve, model, options.curvature_sigma, radius);

        for (std::size_t a = 0; a < anchors.size(); ++a) {
            const Point2 target = norm.apply(shape[anchors[a]]);
            std::size_t nearest = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < curve.size(); ++i) {
                const Point2 d = curve[i] - target;
                const double dd = dot(d, d);
                if (dd < best) {
                    best = dd;
                    nearest = i;
                }
            }
            for (const auto& [method, sig] : sigs.items) {
                const auto z = z_normalize(sig.values);
                auto& slot = table[static_cast<int>(method)];
                slot.resize(anchors.size());
                slot[a].push_back(z[nearest]);
                report.values.push_back({method, a, anchors[a], keep, z[nearest]});
            }
        }
    }
    std::stable_sort(report.values.begin(), report.values.end(),
                     [](const SamplingValue& x, const SamplingValue& y) {
                         return std::tie(x.method, x.anchor) < std::tie(y.method, y.anchor);
                     });
    for (const auto& [method, per_anchor] : table) {
        for (std::size_t a = 0; a < per_anchor.size(); ++a) {
            const auto [mean, sd] = mean_std(per_anchor[a]);
            report.summary.push_back({static_cast<SignatureMethod>(method), a, anchors[a], mean, sd});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

std::string_view to_string(LadderKind kind) noexcept {
    return kind == LadderKind::Integral ? "integral_area" : "network";
}

std::string RetrievalReport::csv() const {
    std::string out = "method,sigma,mean_precision,duplicate_first_rate\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{}\n", to_string(r.ladder), fmt_double(r.sigma),
                           fmt_double(r.mean_precision), fmt_double(r.duplicate_first_rate));
    }
    return out;
}

RetrievalReport retrieval_experiment(std::span<const ShapeRecord> shapes,
                                     std::span<const LadderKind> ladders,
                                     std::span<const Model> models,
                                     const RetrievalOptions& options) {
    require(shapes.size() >= 2, ErrorCode::InvalidArgument, "retrieval needs at least 2 shapes");
    require(!ladders.empty() && !options.sigmas.empty(), ErrorCode::InvalidArgument,
            "retrieval needs at least one ladder and one noise level");
    for (auto kind : ladders) {
        if (kind == LadderKind::Network) {
            require(models.size() == kSignatureSetSize, ErrorCode::InvalidArgument,
                    "network retrieval needs " + std::to_string(kSignatureSetSize) + " models");
        }
    }
    const std::size_t n = shapes.size();

    RetrievalReport report;
    for (auto kind : ladders) {
        for (std::size_t si = 0; si < options.sigmas.size(); ++si) {
            const double sigma = options.sigmas[si];
            std::vector<PlanarCurve> corrupted;
            corrupted.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto seed = derive_seed(derive_seed(options.seed, kStreamCorrupt, i), si);
                const auto moved = random_euclidean_transform(
                    prepare_curve(shapes[i].curve, options.points), seed);
                corrupted.push_back(normalize_curve(add_gaussian_noise(moved, sigma, seed + 1)));
            }
            auto build = [&](std::size_t i) {
                return kind == LadderKind::Integral
                           ? integral_signature_set(shapes[i].id, corrupted[i])
                           : network_signature_set(shapes[i].id, corrupted[i], models);
            };
            std::vector<std::vector<std::vector<double>>> sets(n);
            std::vector<std::vector<std::vector<double>>> twins(n);
            std::vector<bool> closed(n);
            parallel_for(n, options.threads, [&](std::size_t i) {
                const auto set = build(i);
                set.validate();
                sets[i] = normalized_members(set);
                closed[i] = set.closed;
                // The twin is rebuilt from a copy of the corrupted curve.
                const PlanarCurve copy = corrupted[i];
                const auto twin = kind == LadderKind::Integral
                                      ? integral_signature_set(shapes[i].id, copy)
                                      : network_signature_set(shapes[i].id, copy, models);
                twins[i] = normalized_members(twin);
            });

            std::vector<double> dist(n * n, 0.0);
            std::vector<double> twin_dist(n, 0.0);
            const std::size_t pair_count = n * (n - 1) / 2;
            std::vector<std::pair<std::size_t, std::size_t>> index_pairs;
            index_pairs.reserve(pair_count);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) index_pairs.emplace_back(i, j);
            }
            parallel_for(index_pairs.size() + n, options.threads, [&](std::size_t k) {
                if (k < index_pairs.size()) {
                    const auto [i, j] = index_pairs[k];
                    const double d = hausdorff_normalized(sets[i], sets[j], closed[i] && closed[j]);
                    dist[i * n + j] = d;
                    dist[j * n + i] = d;
                } else {
                    const std::size_t i = k - index_pairs.size();
                    twin_dist[i] = hausdorff_normalized(sets[i], twins[i], closed[i]);
                }
            });

            std::vector<QueryResult> results;
            double precision_sum = 0.0;
            std::size_t twin_first = 0;
            for (std::size_t q = 0; q < n; ++q) {
                std::vector<std::size_t> order;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != q) order.push_back(j);
                }
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    return dist[q * n + a] < dist[q * n + b];
                });
                std::size_t same = 0;
                for (std::size_t j : order) same += shapes[j].category == shapes[q].category;
                QueryResult qr;
                qr.query_id = shapes[q].id;
                std::size_t hits = 0;
                for (std::size_t r = 0; r < order.size(); ++r) {
                    qr.ranking.push_back(shapes[order[r]].id);
                    if (r < same && shapes[order[r]].category == shapes[q].category) ++hits;
                }
                qr.precision = same == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(same);
                // Ties with real candidates count against the twin.
                std::size_t ahead = 0;
                for (std::size_t j : order) ahead += dist[q * n + j] <= twin_dist[q];
                qr.duplicate_rank = ahead + 1;
                twin_first += qr.duplicate_rank == 1;
                precision_sum += qr.precision;
                results.push_back(std::move(qr));
            }
            report.rows.push_back({kind, sigma, precision_sum / static_cast<double>(n),
                                   static_cast<double>(twin_first) / static_cast<double>(n)});
            report.queries.push_back(std::move(results));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Invariance
// ---------------------------------------------------------------------------

std::string InvarianceReport::csv() const {
    return fmt::format("shapes,d_pos,d_neg,ratio\n{},{},{},{}\n", shapes, fmt_double(d_pos),
                       fmt_double(d_neg), fmt_double(ratio));
}

InvarianceReport invariance_report(const Model& model, std::span<const ShapeRecord> shapes,
                                   const InvarianceOptions& options) {
    require(!shapes.empty(), ErrorCode::InvalidArgument, "no shapes for the invariance report");
    require(!options.scale_indices.empty(), ErrorCode::InvalidArgument, "no smoothing scales");
    const PairOptions pair_options{options.points, 0.0};
    std::vector<double> pos(shapes.size());
    std::vector<double> neg(shapes.size());
    parallel_for(shapes.size(), options.threads, [&](std::size_t i) {
        const auto seed = derive_seed(options.seed, kStreamInvariance, i);
        const auto p = make_positive_pair(shapes[i].curve, seed, 1, pair_options);
        pos[i] = rms_distance(forward_values(model, p.curve_a), forward_values(model, p.curve_b));
        const PlanarCurve self[1] = {shapes[i].curve};
        double total = 0.0;
        for (int s : options.scale_indices) {
            const auto q = make_negative_pair(shapes[i].curve, s, self,
                                              derive_seed(seed, static_cast<std::uint64_t>(s)),
                                              pair_options);
            total += rms_distance(forward_values(model, q.curve_a), forward_values(model, q.curve_b));
        }
        neg[i] = total / static_cast<double>(options.scale_indices.size());
    });
    InvarianceReport r;
    r.shapes = shapes.size();
    r.d_pos = std::accumulate(pos.begin(), pos.end(), 0.0) / static_cast<double>(shapes.size());
    r.d_neg = std::accumulate(neg.begin(), neg.end(), 0.0) / static_cast<double>(shapes.size());
    r.ratio = r.d_neg > 0.0 ? r.d_pos / r.d_neg : std::numeric_limits<double>::infinity();
    return r;
}

}  // namespace invsig
