#include "doctest.h"
#include "support.hpp"

#include "invsig/error.hpp"
#include "invsig/eval.hpp"
#include "invsig/svg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace invsig;
using namespace invsig::test;

namespace {

Signature sig_of(std::vector<double> v, double scale = 0) {
    Signature s;
    s.values = std::move(v);
    s.scale = scale;
    return s;
}

std::vector<double> sine(std::size_t n, double phase = 0.0, int cycles = 1) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(2 * kPi * cycles * i / n + phase);
    return v;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

SignatureSet set_of(std::string id, std::vector<std::vector<double>> members) {
    SignatureSet s;
    s.shape_id = std::move(id);
    for (std::size_t k = 0; k < members.size(); ++k) s.signatures.push_back(sig_of(members[k], k + 1.0));
    return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("z-normalization") {
    const auto z = z_normalize(std::vector<double>{1, 2, 3, 4});
    double m = 0, ss = 0;
    for (double v : z) m += v;
    for (double v : z) ss += v * v;
    CHECK(std::abs(m) < 1e-15);
    CHECK(std::abs(ss / 4 - 1) < 1e-15);
    for (double v : z_normalize(std::vector<double>(5, 3.0))) CHECK(v == 0.0);
}

TEST_CASE("signature distance") {
    const auto a = random_values(200, 1);
    CHECK(signature_distance(a, a, true) == 0.0);
    CHECK(signature_distance(a, a, false) == 0.0);

    std::vector<double> shifted(200);
    for (std::size_t i = 0; i < 200; ++i) shifted[i] = a[(i + 57) % 200];
    CHECK(signature_distance(a, shifted, true) < 1e-9);
    CHECK(signature_distance(a, shifted, false) > 0.5);

    // Constant versus unit sine: the z-normalized sine has unit RMS.
    CHECK(std::abs(signature_distance(std::vector<double>(500, 2.0), sine(500), true) - 1.0) < 1e-6);
    CHECK(std::abs(signature_distance(std::vector<double>(500, 2.0), sine(500), false) - 1.0) < 1e-6);

    // Affine re-scaling of values.
    const auto b = random_values(200, 2);
    for (auto [alpha, beta] : {std::pair{3.0, 1.0}, std::pair{0.01, -5.0}}) {
        std::vector<double> t(a);
        for (auto& v : t) v = alpha * v + beta;
        CHECK(std::abs(signature_distance(t, b, true) - signature_distance(a, b, true)) < 1e-9);
        CHECK(std::abs(signature_distance(a, t, false) - signature_distance(a, a, false)) < 1e-9);
    }
    CHECK(signature_distance(a, b, true) == doctest::Approx(signature_distance(b, a, true)));
    CHECK_THROWS_AS(signature_distance(a, random_values(100, 3), true), Error);

    // Brute-force oracle for the cyclic minimum.
    auto z1 = z_normalize(a), z2 = z_normalize(b);
    double best = 1e300;
    for (std::size_t s = 0; s < 200; ++s) {
        double acc = 0;
        for (std::size_t i = 0; i < 200; ++i) acc += std::pow(z1[i] - z2[(i + s) % 200], 2);
        best = std::min(best, std::sqrt(acc / 200));
    }
    CHECK(signature_distance(a, b, true) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("Hausdorff set distance") {
    const auto a = random_values(64, 4), b = random_values(64, 5), c = random_values(64, 6);
    const auto d = random_values(64, 7), e = random_values(64, 8);
    const auto A = set_of("A", {a, b, c, d, e});
    CHECK(hausdorff_set_distance(A, A) == 0.0);

    const auto one_a = set_of("a", {a});
    const auto one_b = set_of("b", {b});
    CHECK(hausdorff_set_distance(one_a, one_b) == signature_distance(a, b, true));

    std::vector<double> flat(64, 1.0);
    const auto with_far = set_of("af", {a, flat});
    CHECK(hausdorff_set_distance(one_a, with_far) == doctest::Approx(signature_distance(flat, a, true)));

    const auto B = set_of("B", {e, d, random_values(64, 9), b, a});
    CHECK(hausdorff_set_distance(A, B) == hausdorff_set_distance(B, A));
    CHECK(hausdorff_set_distance(A, B) > 0.0);

    SignatureSet bad = set_of("x", {a, b});
    bad.signatures[1].values.pop_back();
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("signature sets from curves") {
    const auto shape = prepare_curve(synth_shape(3, 1).curve);
    CHECK(shape.size() == 500);
    const auto s = integral_signature_set("x", shape);
    REQUIRE(s.signatures.size() == kSignatureSetSize);
    for (std::size_t k = 0; k < kSignatureSetSize; ++k) {
        CHECK(s.signatures[k].scale == doctest::Approx(kIntegralRadiusFractions[k] * max_diameter(shape)));
    }
    CHECK_NOTHROW(s.validate());
    // Rigid motions leave the set unchanged up to round-off.
    const auto moved = integral_signature_set("y", apply_transform(shape, {true, 1.0, {0.3, 0.2}}));
    CHECK(hausdorff_set_distance(s, moved) < 1e-6);

    std::vector<Model> models;
    for (int k = 0; k < 5; ++k) models.push_back(init_model({}, k));
    const auto n = network_signature_set("x", shape, models);
    CHECK(n.signatures.size() == 5);
    CHECK(n.signatures[4].scale == 5.0);
    CHECK_THROWS_AS(network_signature_set("x", shape, std::span<const Model>(models).first(3)), Error);
}

TEST_CASE("noise experiment") {
    const auto shapes = synth_collection(3, 4);
    const auto model = init_model({}, 1);
    NoiseOptions opt;
    opt.seed = 2;
    const auto r = noise_experiment(shapes, &model, opt);
    // 3 shapes x 4 sigmas x 3 methods.
    CHECK(r.records.size() == 36);
    CHECK(r.summary.size() == 12);
    std::map<std::pair<int, double>, int> rows;
    for (const auto& rec : r.records) {
        ++rows[{static_cast<int>(rec.method), rec.sigma}];
        if (rec.method == SignatureMethod::Curvature && rec.sigma == 0.0) CHECK(rec.distance < 1e-6);
        if (rec.method == SignatureMethod::IntegralArea && rec.sigma == 0.0) CHECK(rec.distance < 1e-6);
    }
    for (const auto& [key, count] : rows) CHECK(count == 3);
    CHECK(r.summary_csv().rfind("method,sigma,mean,std\n", 0) == 0);

    opt.threads = 3;
    const auto again = noise_experiment(shapes, &model, opt);
    CHECK(again.records_csv() == r.records_csv());
    CHECK(again.summary_csv() == r.summary_csv());

    const auto no_net = noise_experiment(shapes, nullptr, opt);
    CHECK(no_net.records.size() == 24);
}

TEST_CASE("sampling experiment") {
    const auto shape = synth_shape(5, 2).curve;
    const auto model = init_model({}, 3);
    SamplingOptions opt;
    opt.seed = 9;
    const auto r = sampling_experiment(shape, &model, opt);
    CHECK(r.values.size() == 3 * 5 * 10);
    CHECK(r.summary.size() == 3 * 10);
    const auto anchors = evenly_spaced_anchors(1000, 10);
    CHECK(anchors == std::vector<std::size_t>{0, 100, 200, 300, 400, 500, 600, 700, 800, 900});
    for (const auto& v : r.values) CHECK(v.source_index == anchors[v.anchor]);
    CHECK(sampling_experiment(shape, &model, opt).values_csv() == r.values_csv());

    SamplingOptions twice = opt;
    twice.keep_fractions = {1.0, 1.0};
    for (const auto& row : sampling_experiment(shape, &model, twice).summary) CHECK(row.std == 0.0);

    CHECK_THROWS_AS(sampling_experiment(circle(500), nullptr, opt), Error);
}

TEST_CASE("retrieval experiment") {
    SynthOptions so;
    const auto shapes = synth_collection(12, 6, so);
    const std::vector<LadderKind> ladders{LadderKind::Integral};
    RetrievalOptions opt;
    opt.sigmas = {0.0, 0.02};
    opt.seed = 1;
    const auto r = retrieval_experiment(shapes, ladders, {}, opt);
    REQUIRE(r.rows.size() == 2);
    REQUIRE(r.queries.size() == 2);
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        CHECK(r.rows[k].duplicate_first_rate == 1.0);
        CHECK(r.queries[k].size() == 12);
        double mean = 0;
        for (const auto& q : r.queries[k]) {
            CHECK(q.ranking.size() == 11);
            CHECK(q.duplicate_rank == 1);
            CHECK(std::find(q.ranking.begin(), q.ranking.end(), q.query_id) == q.ranking.end());
            mean += q.precision;
        }
        CHECK(r.rows[k].mean_precision == doctest::Approx(mean / 12));
    }
    CHECK(r.csv().rfind("method,sigma,mean_precision,duplicate_first_rate\n", 0) == 0);
    opt.threads = 2;
    CHECK(retrieval_experiment(shapes, ladders, {}, opt).csv() == r.csv());

    const std::vector<LadderKind> net{LadderKind::Network};
    CHECK_THROWS_AS(retrieval_experiment(shapes, net, {}, opt), Error);
}

TEST_CASE("invariance report") {
    const auto shapes = synth_collection(4, 8);
    const auto model = init_model({}, 2);
    InvarianceOptions opt;
    opt.seed = 3;
    const auto r = invariance_report(model, shapes, opt);
    CHECK(r.shapes == 4);
    CHECK(r.d_pos > 0);
    CHECK(r.d_neg > 0);
    CHECK(r.ratio == doctest::Approx(r.d_pos / r.d_neg));
    MESSAGE("untrained ratio " << r.ratio);
    CHECK(r.ratio > 0.3);
    CHECK(r.ratio < 3.0);
    opt.threads = 2;
    CHECK(invariance_report(model, shapes, opt).csv() == r.csv());
}

TEST_CASE("SVG plots are deterministic") {
    const std::vector<PlotSeries> series{{"a<b", {0, 1, 2}, {1, 3, 2}}, {"c&d", {0, 2}, {0, 1}}};
    const PlotSpec spec{"Title", "x", "y"};
    const auto svg = render_line_plot(series, spec);
    CHECK(svg == render_line_plot(series, spec));
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("a&lt;b") != std::string::npos);
    CHECK(svg.find("c&amp;d") != std::string::npos);
}

}  // TEST_SUITE
