#include "invsig/data.hpp"

#include "invsig/error.hpp"
#include "invsig/parallel.hpp"
#include "invsig/random.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <set>
#include <sstream>

namespace invsig {

namespace fs = std::filesystem;

std::string_view to_string(ShapeSource source) noexcept {
    switch (source) {
        case ShapeSource::Raster: return "raster";
        case ShapeSource::Synthetic: return "synthetic";
        case ShapeSource::File: return "file";
    }
    return "unknown";
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

BinaryRaster read_pgm(const fs::path& path) {
    const std::string bytes = read_file(path);
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        for (;;) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };
    auto next_number = [&](const char* what) -> std::size_t {
        const std::string tok = next_token();
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        require(ec == std::errc{} && ptr == tok.data() + tok.size() && !tok.empty(),
                ErrorCode::MalformedFile, path.string() + ": bad PGM " + what);
        return value;
    };

    require(next_token() == "P5", ErrorCode::MalformedFile,
            path.string() + ": not a binary PGM (P5) file");
    const std::size_t width = next_number("width");
    const std::size_t height = next_number("height");
    const std::size_t maxval = next_number("maxval");
    require(width > 0 && height > 0, ErrorCode::MalformedFile, path.string() + ": empty PGM");
    require(maxval > 0 && maxval < 65536, ErrorCode::MalformedFile,
            path.string() + ": PGM maxval out of range");
    require(pos < bytes.size(), ErrorCode::MalformedFile, path.string() + ": truncated PGM header");
    ++pos;  // single whitespace before the raster

    const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
    require(bytes.size() - pos >= width * height * sample_bytes, ErrorCode::MalformedFile,
            path.string() + ": truncated PGM raster");
    BinaryRaster raster(width, height);
    for (std::size_t i = 0; i < width * height; ++i) {
        unsigned value = static_cast<unsigned char>(bytes[pos + i * sample_bytes]);
        if (sample_bytes == 2) {
            value = (value << 8) | static_cast<unsigned char>(bytes[pos + i * 2 + 1]);
        }
        raster.pixels[i] = value > 127 ? 1 : 0;
    }
    return raster;
}

void write_pgm(const BinaryRaster& raster, const fs::path& path) {
    std::string out = fmt::format("P5\n{} {}\n255\n", raster.width, raster.height);
    for (auto p : raster.pixels) out.push_back(static_cast<char>(p ? 255 : 0));
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Contour tracing
// ---------------------------------------------------------------------------

namespace {

struct Pixel {
    long x = 0;
    long y = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Clockwise on screen (y down), starting east.
constexpr std::array<Pixel, 8> kMoore{{{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                       {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

int direction_of(Pixel from, Pixel to) {
    const Pixel d{to.x - from.x, to.y - from.y};
    for (int i = 0; i < 8; ++i) {
        if (kMoore[static_cast<std::size_t>(i)] == d) return i;
    }
    fail(ErrorCode::InvalidArgument, "pixels are not 8-neighbours");
}

std::size_t count_components_4(const BinaryRaster& raster, std::size_t& foreground) {
    std::vector<std::uint8_t> seen(raster.pixels.size(), 0);
    std::size_t components = 0;
    foreground = 0;
    for (std::size_t start = 0; start < raster.pixels.size(); ++start) {
        if (!raster.pixels[start]) continue;
        ++foreground;
        if (seen[start]) continue;
        ++components;
        std::queue<std::size_t> todo;
        todo.push(start);
        seen[start] = 1;
        while (!todo.empty()) {
            const std::size_t idx = todo.front();
            todo.pop();
            const long x = static_cast<long>(idx % raster.width);
            const long y = static_cast<long>(idx / raster.width);
            const std::array<Pixel, 4> nbrs{{{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}}};
            for (const auto& p : nbrs) {
                if (!raster.foreground(p.x, p.y)) continue;
                const auto j = static_cast<std::size_t>(p.y) * raster.width + static_cast<std::size_t>(p.x);
                if (!seen[j]) {
                    seen[j] = 1;
                    todo.push(j);
                }
            }
        }
    }
    return components;
}

}  // namespace

PlanarCurve trace_contour(const BinaryRaster& raster) {
    require(raster.pixels.size() == raster.width * raster.height, ErrorCode::InvalidArgument,
            "raster size does not match its dimensions");
    std::size_t foreground = 0;
    const std::size_t components = count_components_4(raster, foreground);
    require(components > 0, ErrorCode::InvalidArgument, "raster has no foreground pixels");
    require(components == 1, ErrorCode::InvalidArgument,
            "raster has " + std::to_string(components) + " foreground components, expected 1");
    require(foreground >= 10, ErrorCode::InvalidArgument,
            "foreground component has " + std::to_string(foreground) +
                " pixels, at least 10 are required");

    Pixel start{};
    for (std::size_t i = 0; i < raster.pixels.size(); ++i) {
        if (raster.pixels[i]) {
            start = {static_cast<long>(i % raster.width), static_cast<long>(i / raster.width)};
            break;
        }
    }

    // Raster-scan start: its west neighbour is background.
    std::vector<Pixel> boundary{start};
    Pixel current = start;
    int backtrack = 4;
    std::optional<Pixel> second;
    const std::size_t guard = 4 * raster.pixels.size() + 16;
    for (std::size_t step = 0; step < guard; ++step) {
        int found = -1;
        for (int t = 1; t <= 8; ++t) {
            const int d = (backtrack + t) % 8;
            const Pixel q{current.x + kMoore[static_cast<std::size_t>(d)].x,
                          current.y + kMoore[static_cast<std::size_t>(d)].y};
            if (raster.foreground(q.x, q.y)) {
                found = d;
                break;
            }
        }
        require(found >= 0, ErrorCode::InvalidArgument, "isolated foreground pixel");
        const Pixel next{current.x + kMoore[static_cast<std::size_t>(found)].x,
                         current.y + kMoore[static_cast<std::size_t>(found)].y};
        if (!second) {
            second = next;
        } else if (current == start && next == *second) {
            break;
        }
        const int prev = (found + 7) % 8;
        const Pixel previous{current.x + kMoore[static_cast<std::size_t>(prev)].x,
                             current.y + kMoore[static_cast<std::size_t>(prev)].y};
        backtrack = direction_of(next, previous);
        current = next;
        boundary.push_back(current);
    }
    // The walk ends by re-entering the start pixel.
    if (boundary.size() > 1 && boundary.back() == start) boundary.pop_back();

    std::vector<Point2> pts;
    pts.reserve(boundary.size());
    const double top = static_cast<double>(raster.height) - 1.0;
    for (const auto& p : boundary) {
        const Point2 q{static_cast<double>(p.x), top - static_cast<double>(p.y)};
        if (!pts.empty() && pts.back() == q) continue;
        pts.push_back(q);
    }
    while (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
    return orient_counterclockwise(PlanarCurve(std::move(pts), true));
}

namespace {

std::vector<fs::path> list_category_files(const fs::path& root, std::string_view extension) {
    require(fs::is_directory(root), ErrorCode::Io, root.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& category : fs::directory_iterator(root)) {
        if (!category.is_directory()) continue;
        for (const auto& entry : fs::directory_iterator(category.path())) {
            if (entry.is_regular_file() && entry.path().extension() == extension) {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string record_id(const fs::path& file) {
    return file.parent_path().filename().string() + "/" + file.stem().string();
}

}  // namespace

std::vector<ShapeRecord> ingest_raster_directory(const fs::path& root, std::size_t threads) {
    const auto files = list_category_files(root, ".pgm");
    std::vector<std::optional<ShapeRecord>> slots(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
        try {
            slots[i] = ShapeRecord{record_id(files[i]), files[i].parent_path().filename().string(),
                                   trace_contour(read_pgm(files[i])), ShapeSource::Raster};
        } catch (const Error& e) {
            throw Error(e.code(), files[i].string() + ": " + e.what());
        }
    });
    std::vector<ShapeRecord> out;
    out.reserve(files.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic shapes
// ---------------------------------------------------------------------------

namespace {
constexpr double kMaxRadialDeviation = 0.9;
}  // namespace

ShapeRecord synth_shape(std::uint64_t seed, std::size_t family, const SynthOptions& options) {
    require(options.harmonics >= 1, ErrorCode::InvalidArgument, "need at least one harmonic");
    require(options.amplitude >= 0.0 && options.amplitude < 1.0, ErrorCode::InvalidArgument,
            "amplitude must lie in [0, 1)");
    require(options.families >= 1 && family < options.families, ErrorCode::InvalidArgument,
            "family index out of range");
    require(options.points >= 3, ErrorCode::InvalidArgument, "need at least 3 points");
    // Family template: independent of the shape seed.
    Rng templ = make_rng(derive_seed(0x5EEDF00DULL, family));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    std::vector<double> coeff(options.harmonics);
    std::vector<double> phi(options.harmonics);
    for (std::size_t k = 0; k < options.harmonics; ++k) {
        coeff[k] = unit(templ);
        phi[k] = phase(templ);
    }

    Rng rng = make_rng(derive_seed(seed, family));
    for (std::size_t k = 0; k < options.harmonics; ++k) {
        coeff[k] = std::clamp(coeff[k] + options.perturbation * unit(rng), -1.0, 1.0);
        phi[k] += options.perturbation * unit(rng);
    }
    const double rotation = phase(rng);

    // Keep the radius bounded away from zero.
    double total = 0.0;
    for (std::size_t k = 0; k < options.harmonics; ++k) {
        total += options.amplitude / static_cast<double>(k + 1) * std::abs(coeff[k]);
    }
    if (total > kMaxRadialDeviation) {
        for (auto& c : coeff) c *= kMaxRadialDeviation / total;
    }

    std::vector<Point2> pts;
    pts.reserve(options.points);
    for (std::size_t j = 0; j < options.points; ++j) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(options.points);
        double r = 1.0;
        for (std::size_t k = 0; k < options.harmonics; ++k) {
            const double order = static_cast<double>(k + 1);
            r += options.amplitude / order * coeff[k] * std::cos(order * t + phi[k]);
        }
        pts.push_back({r * std::cos(t + rotation), r * std::sin(t + rotation)});
    }
    return {fmt::format("family{}/shape_{:016x}", family, seed), fmt::format("family{}", family),
            PlanarCurve(std::move(pts), true), ShapeSource::Synthetic};
}

std::vector<ShapeRecord> synth_collection(std::size_t count, std::uint64_t seed,
                                          const SynthOptions& options) {
    std::vector<ShapeRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto rec = synth_shape(derive_seed(seed, 0x51A7, i), i % options.families, options);
        rec.id = fmt::format("{}/shape_{:04}", rec.category, i);
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

ShapeSplit split_shapes(std::span<const ShapeRecord> shapes, SplitRatios ratios, std::uint64_t seed) {
    require(!shapes.empty(), ErrorCode::InvalidArgument, "cannot split an empty collection");
    require(ratios.train >= 0.0 && ratios.validation >= 0.0 && ratios.test >= 0.0 &&
                std::abs(ratios.train + ratios.validation + ratios.test - 1.0) < 1e-9,
            ErrorCode::InvalidArgument, "split ratios must be non-negative and sum to 1");
    std::set<std::string> ids;
    std::map<std::string, std::vector<std::size_t>> by_category;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        require(ids.insert(shapes[i].id).second, ErrorCode::InvalidArgument,
                "duplicate shape id " + shapes[i].id);
        by_category[shapes[i].category].push_back(i);
    }

    ShapeSplit split;
    std::uint64_t category_index = 0;
    for (auto& [category, members] : by_category) {
        Rng rng = make_rng(derive_seed(seed, 0x5B11, category_index++));
        std::shuffle(members.begin(), members.end(), rng);
        const auto n = static_cast<double>(members.size());
        const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * n));
        const auto n_val = std::min(members.size() - n_train,
                                    static_cast<std::size_t>(std::llround(ratios.validation * n)));
        for (std::size_t j = 0; j < members.size(); ++j) {
            const auto& rec = shapes[members[j]];
            if (j < n_train) {
                split.train.push_back(rec);
            } else if (j < n_train + n_val) {
                split.validation.push_back(rec);
            } else {
                split.test.push_back(rec);
            }
        }
    }
    return split;
}

std::vector<PlanarCurve> curves_of(std::span<const ShapeRecord> shapes) {
    std::vector<PlanarCurve> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) out.push_back(s.curve);
    return out;
}

// ---------------------------------------------------------------------------
// Curve CSV
// ---------------------------------------------------------------------------

std::string format_curve_csv(const PlanarCurve& curve) {
    std::string out = curve.closed() ? "# closed=true\n" : "# closed=false\n";
    for (const auto& p : curve.points()) out += fmt::format("{:.17g},{:.17g}\n", p.x, p.y);
    return out;
}

namespace {

double parse_double(std::string_view token, std::string_view source, std::size_t line) {
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty() || !std::isfinite(value)) {
        fail(ErrorCode::MalformedFile, fmt::format("{}:{}: invalid number '{}'", source, line, token));
    }
    return value;
}

}  // namespace

PlanarCurve parse_curve_csv(std::string_view text, std::string_view source_name) {
    bool closed = true;
    std::vector<Point2> pts;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1 && !line.empty() && line.front() == '#') {
            if (line == "# closed=true") {
                closed = true;
            } else if (line == "# closed=false") {
                closed = false;
            } else {
                fail(ErrorCode::MalformedFile,
                     fmt::format("{}:1: unrecognised header '{}'", source_name, line));
            }
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            fail(ErrorCode::MalformedFile,
                 fmt::format("{}:{}: expected 'x,y'", source_name, line_no));
        }
        pts.push_back({parse_double(line.substr(0, comma), source_name, line_no),
                       parse_double(line.substr(comma + 1), source_name, line_no)});
    }
    try {
        return PlanarCurve(std::move(pts), closed);
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedFile, std::string(source_name) + ": " + e.what());
    }
}

PlanarCurve read_curve(const fs::path& path) {
    return parse_curve_csv(read_file(path), path.string());
}

void write_curve(const PlanarCurve& curve, const fs::path& path) {
    write_file(path, format_curve_csv(curve));
}

void write_shape_directory(std::span<const ShapeRecord> shapes, const fs::path& root) {
    for (const auto& s : shapes) {
        const auto slash = s.id.find('/');
        const std::string stem = slash == std::string::npos ? s.id : s.id.substr(slash + 1);
        write_curve(s.curve, root / s.category / (stem + ".csv"));
    }
}

std::vector<ShapeRecord> load_shape_directory(const fs::path& root, std::size_t threads) {
    auto files = list_category_files(root, ".csv");
    if (files.empty()) return ingest_raster_directory(root, threads);
    std::vector<ShapeRecord> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        out.push_back({record_id(f), f.parent_path().filename().string(), read_curve(f),
                       ShapeSource::File});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pair datasets
// ---------------------------------------------------------------------------

fs::path write_pair_dataset(std::span<const TrainingPair> pairs, const fs::path& dir) {
    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string a = fmt::format("curves/pair_{:06}_a.csv", i);
        const std::string b = fmt::format("curves/pair_{:06}_b.csv", i);
        write_curve(pairs[i].curve_a, dir / a);
        write_curve(pairs[i].curve_b, dir / b);
        manifest.push_back({{"curve_a_path", a},
                            {"curve_b_path", b},
                            {"label", pairs[i].label},
                            {"scale_index", pairs[i].scale_index}});
    }
    const fs::path path = dir / "manifest.json";
    write_file(path, manifest.dump(1) + "\n");
    return path;
}

std::vector<TrainingPair> read_pair_dataset(const fs::path& manifest_path) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedFile, manifest_path.string() + ": " + e.what());
    }
    require(manifest.is_array(), ErrorCode::MalformedFile,
            manifest_path.string() + ": manifest must be a JSON list");
    const fs::path base = manifest_path.parent_path();
    std::vector<TrainingPair> pairs;
    pairs.reserve(manifest.size());
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& entry = manifest[i];
        try {
            const int label = entry.at("label").get<int>();
            const int scale = entry.at("scale_index").get<int>();
            require(label == 0 || label == 1, ErrorCode::MalformedFile, "label must be 0 or 1");
            require(scale >= 1 && scale <= kScaleCount, ErrorCode::MalformedFile,
                    "scale_index out of range");
            fs::path a = entry.at("curve_a_path").get<std::string>();
            fs::path b = entry.at("curve_b_path").get<std::string>();
            if (a.is_relative()) a = base / a;
            if (b.is_relative()) b = base / b;
            pairs.push_back({read_curve(a), read_curve(b), label, scale});
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::MalformedFile,
                 fmt::format("{}: entry {}: {}", manifest_path.string(), i, e.what()));
        }
    }
    return pairs;
}

std::vector<TrainingPair> build_pair_dataset(std::span<const ShapeRecord> shapes,
                                             std::size_t pair_count, double positive_fraction,
                                             int scale_index, std::uint64_t seed,
                                             const fs::path& out_dir, const PairOptions& options) {
    const auto curves = curves_of(shapes);
    auto pairs = build_pairs(curves, pair_count, positive_fraction, scale_index, seed, options);
    if (!out_dir.empty()) write_pair_dataset(pairs, out_dir);
    return pairs;
}

}  // namespace invsig
