#include "invsig/siamese.hpp"

#include "invsig/error.hpp"
#include "invsig/parallel.hpp"
#include "invsig/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>

namespace invsig {

namespace {

// Stream identifiers for derive_seed.
enum SeedStream : std::uint64_t {
    kStreamTransform = 1,
    kStreamPartner = 2,
    kStreamPick = 3,
    kStreamPair = 4,
    kStreamInit = 5,
    kStreamShuffle = 6,
};

void check_scale_index(int scale_index) {
    require(scale_index >= 1 && scale_index <= kScaleCount, ErrorCode::InvalidArgument,
            "scale index must lie in 1.." + std::to_string(kScaleCount) + ", got " +
                std::to_string(scale_index));
}

}  // namespace

double smoothing_span(int scale_index) {
    check_scale_index(scale_index);
    return kScaleSpans[static_cast<std::size_t>(scale_index - 1)];
}

void Hyperparameters::validate() const {
    require(margin > 0.0, ErrorCode::InvalidArgument, "margin must be positive");
    require(learning_rate > 0.0, ErrorCode::InvalidArgument, "learning rate must be positive");
    require(batch_size >= 1, ErrorCode::InvalidArgument, "batch size must be positive");
    require(epochs >= 1, ErrorCode::InvalidArgument, "epochs must be positive");
}

double rms_distance(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorCode::ShapeMismatch,
            "signature lengths differ: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
    require(!a.empty(), ErrorCode::ShapeMismatch, "signatures are empty");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(a.size()));
}

double contrastive_loss(std::span<const double> a, std::span<const double> b, int label,
                        double margin) {
    require(label == 0 || label == 1, ErrorCode::InvalidArgument, "label must be 0 or 1");
    const double d = rms_distance(a, b);
    return label == 1 ? d : std::max(0.0, margin - d);
}

double contrastive_loss(const Signature& a, const Signature& b, int label, double margin) {
    return contrastive_loss(a.values, b.values, label, margin);
}

std::pair<std::vector<double>, std::vector<double>> contrastive_loss_grad(
    std::span<const double> a, std::span<const double> b, int label, double margin) {
    require(label == 0 || label == 1, ErrorCode::InvalidArgument, "label must be 0 or 1");
    const double d = rms_distance(a, b);
    const std::size_t n = a.size();
    std::vector<double> ga(n, 0.0);
    std::vector<double> gb(n, 0.0);
    if (d == 0.0) return {ga, gb};
    double coeff = 0.0;
    if (label == 1) {
        coeff = 1.0 / (static_cast<double>(n) * d);
    } else if (d < margin) {
        coeff = -1.0 / (static_cast<double>(n) * d);
    } else {
        return {ga, gb};
    }
    for (std::size_t i = 0; i < n; ++i) {
        ga[i] = coeff * (a[i] - b[i]);
        gb[i] = -ga[i];
    }
    return {ga, gb};
}

TrainingPair make_positive_pair(const PlanarCurve& curve, const EuclideanTransform& transform,
                                int scale_index, const PairOptions& options) {
    check_scale_index(scale_index);
    auto a = normalize_curve(resample_uniform(curve, options.points));
    auto b = normalize_curve(resample_uniform(apply_transform(curve, transform), options.points));
    return {std::move(a), std::move(b), 1, scale_index};
}

TrainingPair make_positive_pair(const PlanarCurve& curve, std::uint64_t seed, int scale_index,
                                const PairOptions& options) {
    return make_positive_pair(curve,
                              sample_euclidean_transform(derive_seed(seed, kStreamTransform)),
                              scale_index, options);
}

TrainingPair make_negative_pair(const PlanarCurve& curve, int scale_index,
                                std::span<const PlanarCurve> pool, std::uint64_t seed,
                                const PairOptions& options) {
    check_scale_index(scale_index);
    require(!pool.empty(), ErrorCode::InvalidArgument, "negative pair pool is empty");
    require(options.cross_shape_probability >= 0.0 && options.cross_shape_probability <= 1.0,
            ErrorCode::InvalidArgument, "cross-shape probability must lie in [0, 1]");

    const auto base = resample_uniform(curve, options.points);
    Rng rng = make_rng(derive_seed(seed, kStreamPartner));
    std::bernoulli_distribution cross(options.cross_shape_probability);

    std::optional<PlanarCurve> partner;
    if (cross(rng)) {
        std::vector<std::size_t> others;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (!(pool[i] == curve)) others.push_back(i);
        }
        if (!others.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
            partner = resample_uniform(pool[others[pick(rng)]], options.points);
        }
    }
    if (!partner) partner = smooth_loess(base, smoothing_span(scale_index));

    const auto transform = sample_euclidean_transform(derive_seed(seed, kStreamTransform));
    auto a = normalize_curve(base);
    auto b = normalize_curve(apply_transform(*partner, transform));
    return {std::move(a), std::move(b), 0, scale_index};
}

std::vector<TrainingPair> build_pairs(std::span<const PlanarCurve> shapes, std::size_t pair_count,
                                      double positive_fraction, int scale_index,
                                      std::uint64_t seed, const PairOptions& options) {
    require(!shapes.empty(), ErrorCode::InvalidArgument, "no shapes to build pairs from");
    require(positive_fraction >= 0.0 && positive_fraction <= 1.0, ErrorCode::InvalidArgument,
            "positive fraction must lie in [0, 1]");
    check_scale_index(scale_index);
    const auto positives = static_cast<std::size_t>(
        std::llround(positive_fraction * static_cast<double>(pair_count)));

    Rng rng = make_rng(derive_seed(seed, kStreamPick));
    std::uniform_int_distribution<std::size_t> pick(0, shapes.size() - 1);
    std::vector<std::size_t> sources(pair_count);
    for (auto& s : sources) s = pick(rng);

    std::vector<TrainingPair> pairs;
    pairs.reserve(pair_count);
    for (std::size_t k = 0; k < pair_count; ++k) {
        const auto pair_seed = derive_seed(seed, kStreamPair, k);
        const auto& curve = shapes[sources[k]];
        if (k < positives) {
            pairs.push_back(make_positive_pair(curve, pair_seed, scale_index, options));
        } else {
            pairs.push_back(make_negative_pair(curve, scale_index, shapes, pair_seed, options));
        }
    }
    return pairs;
}

namespace {

struct PairGradient {
    Parameters grads;
    double loss = 0.0;
};

// Both arms run the same Model; their parameter gradients are summed.
PairGradient pair_gradient(const Model& model, const TrainingPair& pair, double margin) {
    ForwardTrace trace_a;
    ForwardTrace trace_b;
    const auto sa = forward_values(model, pair.curve_a, &trace_a);
    const auto sb = forward_values(model, pair.curve_b, &trace_b);
    PairGradient out;
    out.loss = contrastive_loss(sa, sb, pair.label, margin);
    const auto [ga, gb] = contrastive_loss_grad(sa, sb, pair.label, margin);
    out.grads = backward(model, trace_a, ga);
    out.grads += backward(model, trace_b, gb);
    return out;
}

}  // namespace

double mean_pair_loss(const Model& model, std::span<const TrainingPair> pairs, double margin,
                      std::size_t threads) {
    require(!pairs.empty(), ErrorCode::InvalidArgument, "no pairs to evaluate");
    std::vector<double> losses(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        const auto sa = forward_values(model, pairs[i].curve_a);
        const auto sb = forward_values(model, pairs[i].curve_b);
        losses[i] = contrastive_loss(sa, sb, pairs[i].label, margin);
    });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(pairs.size());
}

Model initial_model(const Architecture& arch, std::uint64_t seed) {
    return init_model(arch, derive_seed(seed, kStreamInit));
}

TrainingResult train_on_pairs(std::span<const TrainingPair> pairs, const Hyperparameters& hp,
                              const TrainingOptions& options) {
    hp.validate();
    require(pairs.size() >= hp.batch_size, ErrorCode::InvalidArgument,
            "need at least batch_size (" + std::to_string(hp.batch_size) + ") pairs, got " +
                std::to_string(pairs.size()));

    TrainingResult result;
    result.model = initial_model(options.arch, hp.seed);
    auto state = OptimizerState::for_model(result.model, hp.learning_rate, options.adagrad_epsilon);

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<PairGradient> slots(hp.batch_size);

    for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
        Rng rng = make_rng(derive_seed(hp.seed, kStreamShuffle, epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const std::size_t count = std::min(hp.batch_size, order.size() - start);
            parallel_for(count, options.threads, [&](std::size_t i) {
                slots[i] = pair_gradient(result.model, pairs[order[start + i]], hp.margin);
            });
            // Fixed-order reduction keeps results independent of the thread count.
            Parameters batch = std::move(slots[0].grads);
            double batch_loss = slots[0].loss;
            for (std::size_t i = 1; i < count; ++i) {
                batch += slots[i].grads;
                batch_loss += slots[i].loss;
            }
            if (!std::isfinite(batch_loss)) {
                fail(ErrorCode::NonFinite, "non-finite loss in epoch " + std::to_string(epoch) +
                                               " at batch starting " + std::to_string(start));
            }
            batch *= 1.0 / static_cast<double>(count);
            adagrad_step(result.model, batch, state);
            epoch_loss += batch_loss;
        }
        const double mean = epoch_loss / static_cast<double>(order.size());
        result.loss_history.push_back(mean);
        if (!options.validation.empty()) {
            result.validation_history.push_back(
                mean_pair_loss(result.model, options.validation, hp.margin, options.threads));
        }
        if (options.on_epoch) options.on_epoch(epoch, result.model, mean);
    }
    return result;
}

TrainingResult train(std::span<const PlanarCurve> shapes, const Hyperparameters& hp,
                     int scale_index, std::size_t pair_count, const TrainingOptions& options) {
    hp.validate();
    require(pair_count >= hp.batch_size, ErrorCode::InvalidArgument,
            "pair count must be at least the batch size");
    const auto pairs = build_pairs(shapes, pair_count, options.positive_fraction, scale_index,
                                   hp.seed, options.pairs);
    return train_on_pairs(pairs, hp, options);
}

void write_loss_history(const std::filesystem::path& path, std::span<const double> history) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        out << fmt::format("{},{:.17g}\n", i + 1, history[i]);
    }
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace invsig
