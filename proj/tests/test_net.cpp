#include "doctest.h"
#include "support.hpp"

#include "invsig/error.hpp"
#include "invsig/net.hpp"

#include <cmath>
#include <fstream>
#include <random>

using namespace invsig;
using namespace invsig::test;

namespace {

Architecture tiny_arch() {
    Architecture a;
    a.stages = 1;
    a.convs_per_stage = 2;
    a.filters = 2;
    a.width = 3;
    a.stage_has_channel_max = {false};
    return a;
}

// Conv weights and biases scaled by layer shape, summed over the default architecture.
std::size_t expected_parameter_count(const Architecture& a) {
    std::size_t n = 0;
    std::size_t in = a.input_channels;
    for (std::size_t s = 0; s < a.stages; ++s) {
        for (std::size_t c = 0; c < a.convs_per_stage; ++c) {
            n += a.filters * in * a.width + a.filters;
            in = a.filters;
        }
        if (a.stage_has_channel_max[s]) in = 1;
    }
    return n + in + 1;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

double objective(const Model& m, const PlanarCurve& c, const std::vector<double>& g) {
    const auto s = forward_values(m, c);
    double v = 0;
    for (std::size_t i = 0; i < s.size(); ++i) v += g[i] * s[i];
    return v;
}

// Random biases so that no ReLU sits exactly at its kink.
Model perturbed_model(const Architecture& arch, std::uint64_t seed) {
    Model m = init_model(arch, seed);
    Rng rng(seed + 1);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto& layer : m.params.convs) {
        for (auto& b : layer.bias) b = u(rng);
    }
    m.params.linear_bias = u(rng);
    return m;
}

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale < 1e-12 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("architecture and initialization") {
    const Architecture arch;
    const auto m = init_model(arch, 7);
    CHECK(m.params.count() == expected_parameter_count(arch));
    CHECK(m.params.count() == 3781);
    CHECK(arch.receptive_radius() == 12);
    CHECK(m == init_model(arch, 7));
    CHECK_FALSE(m == init_model(arch, 8));
    for (const auto& layer : m.params.convs) {
        for (double b : layer.bias) CHECK(b == 0.0);
        const double bound = std::sqrt(1.0 / static_cast<double>(layer.in_channels * layer.width));
        for (double w : layer.weight) CHECK(std::abs(w) <= bound);
    }
    CHECK(m.params.linear_bias == 0.0);
    CHECK(m.params.convs[0].in_channels == 2);
    CHECK(m.params.convs[1].in_channels == 15);
    CHECK(m.params.convs[2].in_channels == 1);
    CHECK(m.params.convs[4].in_channels == 1);
    CHECK(m.params.linear_weight.size() == 15);

    Architecture bad;
    bad.width = 4;
    CHECK_THROWS_AS(init_model(bad, 0), Error);
}

TEST_CASE("conv1d examples") {
    Tensor x(1, 4);
    x.data = {1, 2, 3, 4};
    ConvLayer identity{1, 1, 3, {0, 1, 0}, {0}};
    CHECK(conv1d(x, identity, Padding::Wrap).data == x.data);
    CHECK(conv1d(x, identity, Padding::Reflect).data == x.data);

    Tensor ones(1, 8, 1.0);
    ConvLayer box{1, 1, 3, {1, 1, 1}, {0}};
    CHECK(conv1d(ones, box, Padding::Wrap).data == std::vector<double>(8, 3.0));

    // out[i] = x[i-1] - x[i+1] with wrap.
    ConvLayer diff{1, 1, 3, {1, 0, -1}, {0}};
    CHECK(conv1d(x, diff, Padding::Wrap).data == std::vector<double>{2, -2, -2, 2});
    ConvLayer mirrored{1, 1, 3, {-1, 0, 1}, {0}};
    CHECK(conv1d(x, mirrored, Padding::Wrap).data == std::vector<double>{-2, 2, 2, -2});
    // Reflect padding mirrors without repeating the edge: x[-1] = x[1].
    CHECK(conv1d(x, diff, Padding::Reflect).data == std::vector<double>{0, -2, -2, 0});

    ConvLayer biased{1, 1, 3, {0, 0, 0}, {0.5}};
    CHECK(conv1d(x, biased, Padding::Wrap).data == std::vector<double>(4, 0.5));

    ConvLayer wrong{1, 2, 3, std::vector<double>(6, 0.0), {0}};
    CHECK_THROWS_AS(conv1d(x, wrong, Padding::Wrap), Error);
}

TEST_CASE("channel max") {
    Tensor one(1, 3);
    one.data = {1, -2, 3};
    CHECK(channel_max(one).values.data == one.data);

    Tensor t(2, 2);
    t.at(0, 0) = 3;
    t.at(1, 0) = 1;
    t.at(0, 1) = 2;
    t.at(1, 1) = 5;
    const auto m = channel_max(t);
    CHECK(m.values.data == std::vector<double>{3, 5});
    CHECK(m.argmax == std::vector<std::uint32_t>{0, 1});

    Tensor tie(2, 1);
    tie.data = {4, 4};
    CHECK(channel_max(tie).argmax == std::vector<std::uint32_t>{0});
}

TEST_CASE("forward pass") {
    const auto m = init_model({}, 3);
    const auto c = normalize_curve(star(500));
    const auto s = forward(m, c);
    CHECK(s.size() == 500);
    CHECK(s.method == SignatureMethod::Network);

    Model zero = m;
    for (auto block : zero.params.blocks()) std::fill(block.begin(), block.end(), 0.0);
    for (double v : forward_values(zero, c)) CHECK(v == 0.0);

    SUBCASE("shift equivariance on closed curves") {
        const auto pm = perturbed_model({}, 5);
        const auto base = forward_values(pm, c);
        for (std::size_t k : {1u, 37u, 250u, 499u}) {
            const auto shifted = forward_values(pm, c.cyclic_shift(k));
            double worst = 0;
            for (std::size_t i = 0; i < 500; ++i) {
                worst = std::max(worst, std::abs(shifted[i] - base[(i + k) % 500]));
            }
            CHECK(worst < 1e-9);
        }
    }

    SUBCASE("receptive field radius is 12") {
        const auto pm = perturbed_model({}, 6);
        const auto base = forward_values(pm, c);
        std::vector<Point2> pts(c.points().begin(), c.points().end());
        const std::size_t j = 200;
        pts[j] = pts[j] + Point2{0.05, -0.03};
        const auto moved = forward_values(pm, PlanarCurve(pts, true));
        std::size_t reach = 0;
        for (std::size_t i = 0; i < 500; ++i) {
            const std::size_t dist = i > j ? i - j : j - i;
            if (moved[i] != base[i]) reach = std::max(reach, std::min(dist, 500 - dist));
        }
        CHECK(reach == 12);
    }

    CHECK_THROWS_AS(forward_values(m, circle(24)), Error);
    CHECK(forward_values(m, circle(25)).size() == 25);
}

TEST_CASE("backward matches finite differences on the reduced architecture") {
    const auto arch = tiny_arch();
    const auto c = normalize_curve(add_gaussian_noise(circle(16), 0.1, 2));
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto m = perturbed_model(arch, seed);
        const auto g = random_vector(16, seed + 100);
        const auto grads = backward(m, c, g);
        const double h = 1e-5;
        Model probe = m;
        auto pb = probe.params.blocks();
        const auto gb = grads.blocks();
        double worst = 0;
        for (std::size_t b = 0; b < pb.size(); ++b) {
            for (std::size_t i = 0; i < pb[b].size(); ++i) {
                const double orig = pb[b][i];
                pb[b][i] = orig + h;
                const double up = objective(probe, c, g);
                pb[b][i] = orig - h;
                const double down = objective(probe, c, g);
                pb[b][i] = orig;
                worst = std::max(worst, relative_error(gb[b][i], (up - down) / (2 * h)));
            }
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("backward spot check on the default architecture") {
    const auto m = perturbed_model({}, 11);
    const auto c = normalize_curve(add_gaussian_noise(star(64), 0.02, 3));
    const auto g = random_vector(64, 12);
    const auto grads = backward(m, c, g);

    Model probe = m;
    auto pb = probe.params.blocks();
    const auto gb = grads.blocks();
    std::vector<std::pair<std::size_t, std::size_t>> index;
    for (std::size_t b = 0; b < pb.size(); ++b) {
        for (std::size_t i = 0; i < pb[b].size(); ++i) index.emplace_back(b, i);
    }
    Rng rng(13);
    std::uniform_int_distribution<std::size_t> pick(0, index.size() - 1);
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const auto [b, i] = index[pick(rng)];
        const double orig = pb[b][i];
        pb[b][i] = orig + h;
        const double up = objective(probe, c, g);
        pb[b][i] = orig - h;
        const double down = objective(probe, c, g);
        pb[b][i] = orig;
        CHECK(relative_error(gb[b][i], (up - down) / (2 * h)) < 1e-4);
    }

    const auto zero = backward(m, c, std::vector<double>(64, 0.0));
    for (auto block : zero.blocks()) {
        for (double v : block) CHECK(v == 0.0);
    }
    CHECK_THROWS_AS(backward(m, c, std::vector<double>(63, 0.0)), Error);
}

TEST_CASE("open curves use reflect padding in the gradient") {
    const auto arch = tiny_arch();
    const auto m = perturbed_model(arch, 21);
    std::vector<Point2> pts;
    for (int i = 0; i < 16; ++i) pts.push_back({0.1 * i, std::sin(0.4 * i)});
    const PlanarCurve c(pts, false);
    const auto g = random_vector(16, 22);
    const auto grads = backward(m, c, g);
    Model probe = m;
    const double h = 1e-5;
    auto& w = probe.params.convs[0].weight;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double orig = w[i];
        w[i] = orig + h;
        const double up = objective(probe, c, g);
        w[i] = orig - h;
        const double down = objective(probe, c, g);
        w[i] = orig;
        CHECK(relative_error(grads.convs[0].weight[i], (up - down) / (2 * h)) < 1e-6);
    }
}

TEST_CASE("Adagrad update rule") {
    Architecture a = tiny_arch();
    Model m = init_model(a, 0);
    for (auto block : m.params.blocks()) std::fill(block.begin(), block.end(), 0.0);
    auto state = OptimizerState::for_model(m, 0.1, 0.0);
    auto grads = Parameters::zeros_like(m.params);
    grads.convs[0].weight[0] = 2.0;
    adagrad_step(m, grads, state);
    CHECK(m.params.convs[0].weight[0] == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(state.accumulators.convs[0].weight[0] == 4.0);
    // Zero gradient leaves parameter and accumulator untouched.
    CHECK(m.params.convs[0].weight[1] == 0.0);
    CHECK(state.accumulators.convs[0].weight[1] == 0.0);

    Model two = init_model(a, 0);
    for (auto block : two.params.blocks()) std::fill(block.begin(), block.end(), 0.0);
    auto s2 = OptimizerState::for_model(two, 0.1, 0.0);
    auto g1 = Parameters::zeros_like(two.params);
    g1.linear_bias = 1.0;
    adagrad_step(two, g1, s2);
    adagrad_step(two, g1, s2);
    CHECK(two.params.linear_bias == doctest::Approx(-0.1 * (1 + 1 / std::sqrt(2.0))).epsilon(1e-14));
    CHECK(std::abs(two.params.linear_bias + 0.17071) < 1e-5);

    SUBCASE("accumulators are monotone") {
        Model r = init_model({}, 1);
        auto st = OptimizerState::for_model(r);
        Parameters prev = st.accumulators;
        for (std::uint64_t k = 0; k < 5; ++k) {
            auto g = Parameters::zeros_like(r.params);
            auto blocks = g.blocks();
            std::size_t off = 0;
            const auto noise = random_vector(g.count(), k);
            for (auto block : blocks) {
                for (auto& v : block) v = noise[off++];
            }
            adagrad_step(r, g, st);
            const auto now = st.accumulators.blocks();
            const auto before = prev.blocks();
            for (std::size_t b = 0; b < now.size(); ++b) {
                for (std::size_t i = 0; i < now[b].size(); ++i) CHECK(now[b][i] >= before[b][i]);
            }
            prev = st.accumulators;
        }
    }

    SUBCASE("non-finite gradients are rejected without side effects") {
        Model r = init_model({}, 1);
        auto st = OptimizerState::for_model(r);
        const Model before = r;
        const auto acc = st.accumulators;
        auto g = Parameters::zeros_like(r.params);
        g.convs[5].bias[3] = NAN;
        CHECK_THROWS_AS(adagrad_step(r, g, st), Error);
        CHECK(r == before);
        CHECK(st.accumulators == acc);
    }
}

TEST_CASE("model persistence") {
    const auto dir = scratch_dir("net");
    const auto m = perturbed_model({}, 31);
    save_model(m, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    CHECK(back == m);
    CHECK(model_to_json(back) == model_to_json(m));

    Architecture seven;
    seven.filters = 7;
    save_model(init_model(seven, 1), dir / "seven.json");
    CHECK(load_model(dir / "seven.json").arch.filters == 7);

    const auto text = model_to_json(m);
    {
        std::ofstream out(dir / "truncated.json");
        out << text.substr(0, text.size() / 2);
    }
    try {
        load_model(dir / "truncated.json");
        FAIL("truncated model loaded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedFile);
        CHECK(std::string(e.what()).find("truncated.json") != std::string::npos);
    }

    auto bumped = text;
    bumped.replace(bumped.find("\"format_version\": 1"), 19, "\"format_version\": 2");
    try {
        model_from_json(bumped);
        FAIL("future version accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::VersionMismatch);
    }
    CHECK_THROWS_AS(load_model(dir / "missing.json"), Error);
}

}  // TEST_SUITE
