#pragma once

#include "invsig/curve.hpp"
#include "invsig/siamese.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace invsig {

enum class ShapeSource { Raster, Synthetic, File };

std::string_view to_string(ShapeSource source) noexcept;

struct ShapeRecord {
    std::string id;
    std::string category;
    PlanarCurve curve;
    ShapeSource source = ShapeSource::File;
};

// ---------------------------------------------------------------------------
// Rasters and contour tracing
// ---------------------------------------------------------------------------

struct BinaryRaster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, 1 = foreground

    BinaryRaster() = default;
    BinaryRaster(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h, 0) {}

    bool foreground(long x, long y) const {
        if (x < 0 || y < 0 || x >= static_cast<long>(width) || y >= static_cast<long>(height)) {
            return false;
        }
        return pixels[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] != 0;
    }
    void set(std::size_t x, std::size_t y, bool on = true) { pixels[y * width + x] = on ? 1 : 0; }
};

// Binary PGM (P5). Foreground is any pixel value above 127.
BinaryRaster read_pgm(const std::filesystem::path& path);
// Writes foreground as 255 and background as 0.
void write_pgm(const BinaryRaster& raster, const std::filesystem::path& path);

/**
 * Outer boundary of the single foreground component by Moore-neighbour
 * tracing (8-connected walk, Jacob's stopping rule).
 *
 * Points are pixel centres in a y-up frame (x = column, y = height-1-row),
 * returned counterclockwise as a closed curve. Rejects empty rasters, rasters
 * with more than one 4-connected component, and components under 10 pixels.
 */
PlanarCurve trace_contour(const BinaryRaster& raster);

// <root>/<category>/<id>.pgm, sorted by path. Ids are "<category>/<stem>".
std::vector<ShapeRecord> ingest_raster_directory(const std::filesystem::path& root,
                                                 std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Synthetic shapes
// ---------------------------------------------------------------------------

struct SynthOptions {
    std::size_t harmonics = 5;
    double amplitude = 0.35;
    std::size_t families = 6;
    std::size_t points = 1000;
    double perturbation = 0.15;  // per-shape jitter of template coefficients and phases
};

/**
 * Star-convex contour r(t) = 1 + sum_k a_k cos(k t + phi_k), |a_k| <= amplitude / k.
 * The template (a_k, phi_k) is fixed per family; `seed` jitters it and picks a
 * random rotation so members of a family differ but stay recognisable.
 */
ShapeRecord synth_shape(std::uint64_t seed, std::size_t family, const SynthOptions& options = {});

// Shape i belongs to family i % options.families.
std::vector<ShapeRecord> synth_collection(std::size_t count, std::uint64_t seed,
                                          const SynthOptions& options = {});

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitRatios {
    double train = 0.5;
    double validation = 0.25;
    double test = 0.25;
};

struct ShapeSplit {
    std::vector<ShapeRecord> train;
    std::vector<ShapeRecord> validation;
    std::vector<ShapeRecord> test;
};

// Category-stratified random partition, deterministic under seed.
ShapeSplit split_shapes(std::span<const ShapeRecord> shapes, SplitRatios ratios,
                        std::uint64_t seed);

std::vector<PlanarCurve> curves_of(std::span<const ShapeRecord> shapes);

// ---------------------------------------------------------------------------
// Curve files
// ---------------------------------------------------------------------------

// CSV: optional "# closed=true|false" first line (default true), then one
// "x,y" pair per line. Writers always emit the header and 17 significant digits.
std::string format_curve_csv(const PlanarCurve& curve);
PlanarCurve parse_curve_csv(std::string_view text, std::string_view source_name = "<string>");
PlanarCurve read_curve(const std::filesystem::path& path);
void write_curve(const PlanarCurve& curve, const std::filesystem::path& path);

// <root>/<category>/<stem>.csv
void write_shape_directory(std::span<const ShapeRecord> shapes, const std::filesystem::path& root);
// Loads .csv curves, or traces .pgm rasters, from <root>/<category>/.
std::vector<ShapeRecord> load_shape_directory(const std::filesystem::path& root,
                                              std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Pair datasets
// ---------------------------------------------------------------------------

// Writes every pair's curves under <dir>/curves/ and a manifest listing
// {curve_a_path, curve_b_path, label, scale_index} with paths relative to <dir>.
// Returns the manifest path.
std::filesystem::path write_pair_dataset(std::span<const TrainingPair> pairs,
                                         const std::filesystem::path& dir);
std::vector<TrainingPair> read_pair_dataset(const std::filesystem::path& manifest);

// build_pairs over the shapes' curves, optionally persisted with write_pair_dataset.
std::vector<TrainingPair> build_pair_dataset(std::span<const ShapeRecord> shapes,
                                             std::size_t pair_count, double positive_fraction,
                                             int scale_index, std::uint64_t seed,
                                             const std::filesystem::path& out_dir = {},
                                             const PairOptions& options = {});

}  // namespace invsig
