#pragma once

#include "invsig/curve.hpp"
#include "invsig/invariants.hpp"
#include "invsig/net.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace invsig {

inline constexpr std::size_t kPairPoints = 500;
inline constexpr int kScaleCount = 5;

// LOESS span per scale index 1..5; larger index means a more abstract partner.
inline constexpr std::array<double, kScaleCount> kScaleSpans{0.05, 0.10, 0.20, 0.35, 0.50};

double smoothing_span(int scale_index);

struct TrainingPair {
    PlanarCurve curve_a;
    PlanarCurve curve_b;
    int label = 0;  // 1 = related by a Euclidean transform, 0 = dissimilar
    int scale_index = 1;

    friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

struct Hyperparameters {
    double margin = 1.0;
    double learning_rate = 5e-4;
    std::size_t batch_size = 10;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;

    void validate() const;
};

// Root-mean-square difference sqrt(sum (a_i - b_i)^2 / N).
double rms_distance(std::span<const double> a, std::span<const double> b);

// label * d + (1 - label) * max(0, margin - d), d = rms_distance(a, b).
double contrastive_loss(std::span<const double> a, std::span<const double> b, int label,
                        double margin);
double contrastive_loss(const Signature& a, const Signature& b, int label, double margin);

// Gradients with respect to a and b. Zero at d == 0 and wherever the hinge is flat.
std::pair<std::vector<double>, std::vector<double>> contrastive_loss_grad(
    std::span<const double> a, std::span<const double> b, int label, double margin);

struct PairOptions {
    std::size_t points = kPairPoints;
    // Probability that a negative partner is another pool shape instead of the
    // smoothed curve itself.
    double cross_shape_probability = 0.2;
};

TrainingPair make_positive_pair(const PlanarCurve& curve, const EuclideanTransform& transform,
                                int scale_index = 1, const PairOptions& options = {});
TrainingPair make_positive_pair(const PlanarCurve& curve, std::uint64_t seed, int scale_index = 1,
                                const PairOptions& options = {});

TrainingPair make_negative_pair(const PlanarCurve& curve, int scale_index,
                                std::span<const PlanarCurve> pool, std::uint64_t seed,
                                const PairOptions& options = {});

// round(positive_fraction * pair_count) positives first, then negatives; each
// pair draws its source shape uniformly from `shapes`.
std::vector<TrainingPair> build_pairs(std::span<const PlanarCurve> shapes, std::size_t pair_count,
                                      double positive_fraction, int scale_index,
                                      std::uint64_t seed, const PairOptions& options = {});

struct TrainingOptions {
    Architecture arch{};
    double positive_fraction = 0.5;
    PairOptions pairs{};
    std::size_t threads = 1;  // 0 = all cores; results do not depend on this
    double adagrad_epsilon = 1e-8;
    std::vector<TrainingPair> validation;
    // Called after every epoch with the 1-based epoch number.
    std::function<void(std::size_t epoch, const Model& model, double mean_loss)> on_epoch;
};

struct TrainingResult {
    Model model;
    std::vector<double> loss_history;        // mean training loss per epoch
    std::vector<double> validation_history;  // empty without validation pairs
};

// Mean contrastive loss of `pairs` under `model`.
double mean_pair_loss(const Model& model, std::span<const TrainingPair> pairs, double margin,
                      std::size_t threads = 1);

// The model training starts from under hp.seed.
Model initial_model(const Architecture& arch, std::uint64_t seed);

TrainingResult train_on_pairs(std::span<const TrainingPair> pairs, const Hyperparameters& hp,
                              const TrainingOptions& options = {});

TrainingResult train(std::span<const PlanarCurve> shapes, const Hyperparameters& hp,
                     int scale_index, std::size_t pair_count, const TrainingOptions& options = {});

// CSV "epoch,mean_loss", one row per epoch starting at 1.
void write_loss_history(const std::filesystem::path& path, std::span<const double> history);

}  // namespace invsig
