#include "cli.hpp"

#include "invsig/data.hpp"
#include "invsig/error.hpp"
#include "invsig/eval.hpp"
#include "invsig/invariants.hpp"
#include "invsig/net.hpp"
#include "invsig/parallel.hpp"
#include "invsig/siamese.hpp"
#include "invsig/svg.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <vector>

namespace invsig::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Global {
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string out = ".";
    bool verbose = false;
    bool svg = false;
};

struct DatasetSynth {
    std::size_t count = 30;
    SynthOptions synth{};
};

struct DatasetIngest {
    std::string input;
};

struct DatasetPairs {
    std::string shapes;
    std::size_t pairs = 10000;
    double positive_fraction = 0.5;
    int scale = 1;
    double cross_shape = 0.2;
    std::size_t points = kPairPoints;
};

struct Train {
    std::string shapes;
    std::string manifest;
    std::string validation;
    std::size_t pairs = 10000;
    double positive_fraction = 0.5;
    int scale = 1;
    double cross_shape = 0.2;
    std::size_t points = kPairPoints;
    double margin = 1.0;
    double lr = 5e-4;
    std::size_t batch = 10;
    std::size_t epochs = 30;
    double epsilon = 1e-8;
};

struct Sig {
    std::string model;
    std::string curve;
    std::size_t points = kPairPoints;
    std::string output = "signature.csv";
};

struct Invariant {
    std::string kind = "curvature";
    std::string curve;
    double sigma = 2.0;
    double radius = 0.0;
    double radius_fraction = 0.1;
    std::size_t points = 0;
    std::string output = "invariant.csv";
};

struct EvalNoise {
    std::string shapes;
    std::string model;
    NoiseOptions options{};
};

struct EvalSampling {
    std::string curve;
    std::string model;
    SamplingOptions options{};
};

struct EvalRetrieval {
    std::string shapes;
    std::string ladder = "integral";
    std::vector<std::string> models;
    RetrievalOptions options{};
};

struct EvalInvariance {
    std::string shapes;
    std::string model;
    InvarianceOptions options{};
};

struct ModelInspect {
    std::string model;
};

// Every resolved option of the selected subcommand, in declaration order.
// --threads and --out are left out: they do not influence results.
ordered_json resolved_config(const CLI::App& app, const CLI::App& leaf, const Global& global) {
    ordered_json cfg;
    std::string command;
    for (const CLI::App* a = &leaf; a != nullptr && a != &app; a = a->get_parent()) {
        command = command.empty() ? a->get_name() : a->get_name() + " " + command;
    }
    cfg["command"] = command;
    cfg["seed"] = global.seed;
    ordered_json options = ordered_json::object();
    for (const CLI::Option* opt : leaf.get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
        const std::string name = opt->get_single_name();
        if (opt->count() > 0) {
            const auto results = opt->results();
            if (opt->get_expected_max() > 1 || results.size() > 1) {
                options[name] = results;
            } else {
                options[name] = results.empty() ? std::string{} : results.front();
            }
        } else {
            options[name] = opt->get_default_str();
        }
    }
    cfg["options"] = std::move(options);
    cfg["svg"] = global.svg;
    return cfg;
}

std::vector<ShapeRecord> load_shapes(const std::string& dir, std::size_t threads) {
    auto shapes = load_shape_directory(dir, threads);
    require(!shapes.empty(), ErrorCode::Io, "no shapes found under " + dir);
    for (auto& s : shapes) s.curve = orient_counterclockwise(s.curve);
    return shapes;
}

PlanarCurve load_curve(const std::string& path) {
    return orient_counterclockwise(read_curve(path));
}

void log(const Global& g, std::ostream& err, const std::string& msg) {
    if (g.verbose) err << msg << '\n';
}

void run_dataset_synth(const Global& g, const DatasetSynth& o, std::ostream& err) {
    const auto shapes = synth_collection(o.count, g.seed, o.synth);
    write_shape_directory(shapes, g.out);
    log(g, err, fmt::format("wrote {} shapes to {}", shapes.size(), g.out));
}

void run_dataset_ingest(const Global& g, const DatasetIngest& o, std::ostream& err) {
    auto shapes = ingest_raster_directory(o.input, g.threads);
    for (auto& s : shapes) s.source = ShapeSource::File;
    write_shape_directory(shapes, g.out);
    log(g, err, fmt::format("traced {} rasters into {}", shapes.size(), g.out));
}

void run_dataset_pairs(const Global& g, const DatasetPairs& o, std::ostream& err) {
    const auto shapes = load_shapes(o.shapes, g.threads);
    const auto pairs = build_pair_dataset(shapes, o.pairs, o.positive_fraction, o.scale, g.seed,
                                          g.out, PairOptions{o.points, o.cross_shape});
    log(g, err, fmt::format("wrote {} pairs to {}", pairs.size(), g.out));
}

void run_train(const Global& g, const Train& o, std::ostream& err) {
    if (o.shapes.empty() == o.manifest.empty()) {
        throw UsageError("train needs exactly one of --shapes or --manifest");
    }
    Hyperparameters hp{o.margin, o.lr, o.batch, o.epochs, g.seed};
    TrainingOptions options;
    options.positive_fraction = o.positive_fraction;
    options.pairs = PairOptions{o.points, o.cross_shape};
    options.threads = g.threads;
    options.adagrad_epsilon = o.epsilon;
    if (!o.validation.empty()) options.validation = read_pair_dataset(o.validation);
    options.on_epoch = [&](std::size_t epoch, const Model&, double loss) {
        log(g, err, fmt::format("epoch {} mean_loss {:.6g}", epoch, loss));
    };

    std::vector<TrainingPair> pairs;
    if (!o.manifest.empty()) {
        pairs = read_pair_dataset(o.manifest);
    } else {
        const auto shapes = load_shapes(o.shapes, g.threads);
        pairs = build_pair_dataset(shapes, o.pairs, o.positive_fraction, o.scale, g.seed, {},
                                   options.pairs);
    }
    const auto result = train_on_pairs(pairs, hp, options);
    const fs::path out = g.out;
    save_model(result.model, out / "model.json");
    write_loss_history(out / "loss.csv", result.loss_history);
    if (!result.validation_history.empty()) {
        write_loss_history(out / "validation_loss.csv", result.validation_history);
    }
    if (g.svg) {
        std::vector<PlotSeries> series;
        PlotSeries train_series{"train", {}, result.loss_history};
        for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
            train_series.x.push_back(static_cast<double>(e + 1));
        }
        series.push_back(train_series);
        if (!result.validation_history.empty()) {
            series.push_back({"validation", train_series.x, result.validation_history});
        }
        write_text_file(out / "loss.svg",
                        render_line_plot(series, {"Contrastive loss", "epoch", "mean loss"}));
    }
}

void run_sig(const Global& g, const Sig& o) {
    const auto model = load_model(o.model);
    auto curve = load_curve(o.curve);
    if (o.points > 0) curve = prepare_curve(curve, o.points);
    const auto sig = forward(model, curve);
    const fs::path path = fs::path(g.out) / o.output;
    write_signature(sig, path);
    if (g.svg) {
        PlotSeries s{"network", {}, sig.values};
        for (std::size_t i = 0; i < sig.size(); ++i) s.x.push_back(static_cast<double>(i));
        write_text_file(fs::path(path).replace_extension(".svg"),
                        render_line_plot(std::span(&s, 1), {"Network signature", "index", "value"}));
    }
}

void run_invariant(const Global& g, const Invariant& o) {
    auto curve = load_curve(o.curve);
    if (o.points > 0) curve = resample_uniform(curve, o.points);
    const auto method = parse_signature_method(o.kind);
    Signature sig;
    switch (method) {
        case SignatureMethod::Curvature:
            sig = euclidean_curvature(curve, o.sigma);
            break;
        case SignatureMethod::CurvatureS:
            sig = differentiate_wrt_arclength(euclidean_curvature(curve, o.sigma), curve, o.sigma);
            break;
        case SignatureMethod::IntegralArea: {
            const double r = o.radius > 0.0 ? o.radius : o.radius_fraction * max_diameter(curve);
            sig = integral_area_invariant(curve, r);
            break;
        }
        case SignatureMethod::Network:
            throw UsageError("use the sig command for network signatures");
    }
    const fs::path path = fs::path(g.out) / o.output;
    write_signature(sig, path);
    if (g.svg) {
        PlotSeries s{o.kind, {}, sig.values};
        for (std::size_t i = 0; i < sig.size(); ++i) s.x.push_back(static_cast<double>(i));
        write_text_file(fs::path(path).replace_extension(".svg"),
                        render_line_plot(std::span(&s, 1), {"Invariant signature", "index", "value"}));
    }
}

std::optional<Model> maybe_model(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return load_model(path);
}

void run_eval_noise(const Global& g, EvalNoise o) {
    const auto shapes = load_shapes(o.shapes, g.threads);
    const auto model = maybe_model(o.model);
    o.options.seed = g.seed;
    o.options.threads = g.threads;
    const auto report = noise_experiment(shapes, model ? &*model : nullptr, o.options);
    const fs::path out = g.out;
    write_text_file(out / "noise_records.csv", report.records_csv());
    write_text_file(out / "noise_summary.csv", report.summary_csv());
    if (g.svg) {
        std::map<int, PlotSeries> by_method;
        for (const auto& row : report.summary) {
            auto& s = by_method[static_cast<int>(row.method)];
            s.label = std::string(to_string(row.method));
            s.x.push_back(row.sigma);
            s.y.push_back(row.mean);
        }
        std::vector<PlotSeries> series;
        for (auto& [k, s] : by_method) series.push_back(std::move(s));
        write_text_file(out / "noise.svg",
                        render_line_plot(series, {"Noise stability", "noise sigma", "mean distance"}));
    }
}

void run_eval_sampling(const Global& g, EvalSampling o) {
    const auto curve = load_curve(o.curve);
    const auto model = maybe_model(o.model);
    o.options.seed = g.seed;
    const auto report = sampling_experiment(curve, model ? &*model : nullptr, o.options);
    const fs::path out = g.out;
    write_text_file(out / "sampling_values.csv", report.values_csv());
    write_text_file(out / "sampling_summary.csv", report.summary_csv());
    if (g.svg) {
        std::map<int, PlotSeries> by_method;
        for (const auto& row : report.summary) {
            auto& s = by_method[static_cast<int>(row.method)];
            s.label = std::string(to_string(row.method));
            s.x.push_back(static_cast<double>(row.anchor));
            s.y.push_back(row.std);
        }
        std::vector<PlotSeries> series;
        for (auto& [k, s] : by_method) series.push_back(std::move(s));
        write_text_file(out / "sampling.svg",
                        render_line_plot(series, {"Sampling resilience", "anchor", "std across densities"}));
    }
}

void run_eval_retrieval(const Global& g, EvalRetrieval o) {
    std::vector<LadderKind> ladders;
    if (o.ladder == "integral" || o.ladder == "both") ladders.push_back(LadderKind::Integral);
    if (o.ladder == "network" || o.ladder == "both") ladders.push_back(LadderKind::Network);
    std::vector<Model> models;
    if (o.ladder != "integral") {
        if (o.models.size() != kSignatureSetSize) {
            throw UsageError(fmt::format("--ladder {} needs --models with {} files (scales 1..5)",
                                         o.ladder, kSignatureSetSize));
        }
        for (const auto& path : o.models) models.push_back(load_model(path));
    }
    const auto shapes = load_shapes(o.shapes, g.threads);
    o.options.seed = g.seed;
    o.options.threads = g.threads;
    const auto report = retrieval_experiment(shapes, ladders, models, o.options);
    const fs::path out = g.out;
    write_text_file(out / "retrieval.csv", report.csv());
    std::string queries = "method,sigma,query,precision,duplicate_rank,ranking\n";
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        for (const auto& q : report.queries[r]) {
            std::string ranking;
            for (std::size_t k = 0; k < q.ranking.size(); ++k) ranking += (k ? ";" : "") + q.ranking[k];
            queries += fmt::format("{},{:.17g},{},{:.17g},{},{}\n", to_string(report.rows[r].ladder),
                                   report.rows[r].sigma, q.query_id, q.precision, q.duplicate_rank,
                                   ranking);
        }
    }
    write_text_file(out / "retrieval_queries.csv", queries);
    if (g.svg) {
        std::map<int, PlotSeries> by_ladder;
        for (const auto& row : report.rows) {
            auto& s = by_ladder[static_cast<int>(row.ladder)];
            s.label = std::string(to_string(row.ladder));
            s.x.push_back(row.sigma);
            s.y.push_back(row.mean_precision);
        }
        std::vector<PlotSeries> series;
        for (auto& [k, s] : by_ladder) series.push_back(std::move(s));
        write_text_file(out / "retrieval.svg",
                        render_line_plot(series, {"Retrieval", "noise sigma", "mean precision@k"}));
    }
}

void run_eval_invariance(const Global& g, EvalInvariance o) {
    const auto shapes = load_shapes(o.shapes, g.threads);
    const auto model = load_model(o.model);
    o.options.seed = g.seed;
    o.options.threads = g.threads;
    write_text_file(fs::path(g.out) / "invariance.csv",
                    invariance_report(model, shapes, o.options).csv());
}

void run_model_inspect(const ModelInspect& o, std::ostream& out) {
    const auto model = load_model(o.model);
    ordered_json info;
    info["path"] = o.model;
    info["format_version"] = kModelFormatVersion;
    const auto& a = model.arch;
    info["architecture"] = {{"stages", a.stages},
                            {"convs_per_stage", a.convs_per_stage},
                            {"filters", a.filters},
                            {"width", a.width},
                            {"stage_has_channel_max", a.stage_has_channel_max},
                            {"input_channels", a.input_channels},
                            {"output_channels", a.output_channels}};
    info["parameter_count"] = model.params.count();
    info["receptive_radius"] = a.receptive_radius();
    ordered_json layers = ordered_json::array();
    for (std::size_t l = 0; l < model.params.convs.size(); ++l) {
        const auto& c = model.params.convs[l];
        double sq = 0.0;
        for (double w : c.weight) sq += w * w;
        layers.push_back({{"index", l},
                          {"shape", {c.out_channels, c.in_channels, c.width}},
                          {"weight_l2", std::sqrt(sq)}});
    }
    info["conv_layers"] = std::move(layers);
    out << info.dump(2) << '\n';
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Invariant curve signatures: datasets, training, signatures and experiments",
                 "invsig"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.fallthrough();

    Global g;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) g.out = env;
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
    app.add_option("--out", g.out, std::string("Output directory (default from $") + kOutDirEnv + ")");
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
    app.add_flag("--svg", g.svg, "Also write SVG plots");

    auto* dataset = app.add_subcommand("dataset", "Build shape collections and pair datasets");
    dataset->require_subcommand(1);

    DatasetSynth synth;
    auto* c_synth = dataset->add_subcommand("synth", "Generate synthetic star-shaped contours");
    c_synth->add_option("--count", synth.count, "Number of shapes");
    c_synth->add_option("--harmonics", synth.synth.harmonics, "Fourier harmonics per shape");
    c_synth->add_option("--amplitude", synth.synth.amplitude, "Amplitude bound");
    c_synth->add_option("--families", synth.synth.families, "Template families (categories)");
    c_synth->add_option("--points", synth.synth.points, "Points per contour");
    c_synth->add_option("--perturbation", synth.synth.perturbation, "Per-shape template jitter");

    DatasetIngest ingest;
    auto* c_ingest = dataset->add_subcommand("ingest", "Trace <input>/<category>/<id>.pgm rasters");
    c_ingest->add_option("--input", ingest.input, "Raster directory")->required()->check(CLI::ExistingDirectory);

    DatasetPairs pairs;
    auto* c_pairs = dataset->add_subcommand("pairs", "Write a training pair dataset and manifest");
    c_pairs->add_option("--shapes", pairs.shapes, "Shape directory")->required()->check(CLI::ExistingDirectory);
    c_pairs->add_option("--pairs", pairs.pairs, "Number of pairs");
    c_pairs->add_option("--positive-fraction", pairs.positive_fraction, "Fraction of positive pairs");
    c_pairs->add_option("--scale", pairs.scale, "Scale index of smoothed negatives")->check(CLI::Range(1, kScaleCount));
    c_pairs->add_option("--cross-shape", pairs.cross_shape, "Probability of a cross-shape negative");
    c_pairs->add_option("--points", pairs.points, "Points per resampled curve");

    Train train_opts;
    auto* c_train = app.add_subcommand("train", "Train a signature network");
    auto* o_shapes = c_train->add_option("--shapes", train_opts.shapes, "Shape directory")->check(CLI::ExistingDirectory);
    c_train->add_option("--manifest", train_opts.manifest, "Pair manifest instead of --shapes")
        ->check(CLI::ExistingFile)
        ->excludes(o_shapes);
    c_train->add_option("--validation", train_opts.validation, "Validation pair manifest")->check(CLI::ExistingFile);
    c_train->add_option("--pairs", train_opts.pairs, "Number of pairs built from --shapes");
    c_train->add_option("--positive-fraction", train_opts.positive_fraction, "Fraction of positive pairs");
    c_train->add_option("--scale", train_opts.scale, "Scale index of smoothed negatives")->check(CLI::Range(1, kScaleCount));
    c_train->add_option("--cross-shape", train_opts.cross_shape, "Probability of a cross-shape negative");
    c_train->add_option("--points", train_opts.points, "Points per resampled curve");
    c_train->add_option("--margin", train_opts.margin, "Contrastive margin");
    c_train->add_option("--lr", train_opts.lr, "Adagrad learning rate");
    c_train->add_option("--batch", train_opts.batch, "Batch size");
    c_train->add_option("--epochs", train_opts.epochs, "Training epochs");
    c_train->add_option("--epsilon", train_opts.epsilon, "Adagrad epsilon");

    Sig sig;
    auto* c_sig = app.add_subcommand("sig", "Network signature of a curve");
    c_sig->add_option("--model", sig.model, "Model file")->required()->check(CLI::ExistingFile);
    c_sig->add_option("--curve", sig.curve, "Curve CSV")->required()->check(CLI::ExistingFile);
    c_sig->add_option("--points", sig.points, "Resample and normalize to this many points (0 = as given)");
    c_sig->add_option("--output", sig.output, "Output file name inside --out");

    Invariant inv;
    auto* c_inv = app.add_subcommand("invariant", "Axiomatic invariant signature of a curve");
    c_inv->add_option("--kind", inv.kind, "curvature, curvature_s or integral_area")
        ->check(CLI::IsMember({"curvature", "curvature_s", "integral_area"}));
    c_inv->add_option("--curve", inv.curve, "Curve CSV")->required()->check(CLI::ExistingFile);
    c_inv->add_option("--sigma", inv.sigma, "Gaussian sigma in samples");
    c_inv->add_option("--radius", inv.radius, "Integral radius (0 = use --radius-fraction)");
    c_inv->add_option("--radius-fraction", inv.radius_fraction, "Integral radius as a fraction of the diameter");
    c_inv->add_option("--points", inv.points, "Uniform resample count (0 = as given)");
    c_inv->add_option("--output", inv.output, "Output file name inside --out");

    auto* eval = app.add_subcommand("eval", "Run an experiment");
    eval->require_subcommand(1);

    EvalNoise noise;
    auto* c_noise = eval->add_subcommand("noise", "Stability of signatures under noise and rotation");
    c_noise->add_option("--shapes", noise.shapes, "Shape directory")->required()->check(CLI::ExistingDirectory);
    c_noise->add_option("--model", noise.model, "Model file (omit to skip the network)")->check(CLI::ExistingFile);
    c_noise->add_option("--sigmas", noise.options.sigmas, "Noise ladder")->delimiter(',');
    c_noise->add_option("--curvature-sigma", noise.options.curvature_sigma, "Curvature sigma in samples");
    c_noise->add_option("--radius-fraction", noise.options.integral_radius_fraction, "Integral radius fraction");
    c_noise->add_option("--points", noise.options.points, "Points per curve");

    EvalSampling sampling;
    auto* c_sampling = eval->add_subcommand("sampling", "Signature values at anchors across point densities");
    c_sampling->add_option("--curve", sampling.curve, "High-resolution curve CSV")->required()->check(CLI::ExistingFile);
    c_sampling->add_option("--model", sampling.model, "Model file (omit to skip the network)")->check(CLI::ExistingFile);
    c_sampling->add_option("--keep", sampling.options.keep_fractions, "Keep fractions")->delimiter(',');
    c_sampling->add_option("--anchors", sampling.options.anchor_count, "Number of anchors");
    c_sampling->add_option("--curvature-sigma", sampling.options.curvature_sigma, "Curvature sigma in samples");
    c_sampling->add_option("--radius-fraction", sampling.options.integral_radius_fraction, "Integral radius fraction");
    c_sampling->add_option("--points", sampling.options.points, "Points per resampled curve");

    EvalRetrieval retrieval;
    auto* c_retrieval = eval->add_subcommand("retrieval", "Rank shapes by Hausdorff distance of signature sets");
    c_retrieval->add_option("--shapes", retrieval.shapes, "Shape directory")->required()->check(CLI::ExistingDirectory);
    c_retrieval->add_option("--ladder", retrieval.ladder, "integral, network or both")
        ->check(CLI::IsMember({"integral", "network", "both"}));
    c_retrieval->add_option("--models", retrieval.models, "Five model files, scales 1..5")->check(CLI::ExistingFile);
    c_retrieval->add_option("--sigmas", retrieval.options.sigmas, "Noise levels")->delimiter(',');
    c_retrieval->add_option("--points", retrieval.options.points, "Points per curve");

    EvalInvariance invariance;
    auto* c_invariance = eval->add_subcommand("invariance", "Positive/negative distance ratio of a model");
    c_invariance->add_option("--shapes", invariance.shapes, "Shape directory")->required()->check(CLI::ExistingDirectory);
    c_invariance->add_option("--model", invariance.model, "Model file")->required()->check(CLI::ExistingFile);
    c_invariance->add_option("--scales", invariance.options.scale_indices, "Smoothing scale indices")
        ->delimiter(',')
        ->check(CLI::Range(1, kScaleCount));
    c_invariance->add_option("--points", invariance.options.points, "Points per curve");

    auto* model_cmd = app.add_subcommand("model", "Model utilities");
    model_cmd->require_subcommand(1);
    ModelInspect inspect;
    auto* c_inspect = model_cmd->add_subcommand("inspect", "Print a model summary as JSON");
    c_inspect->add_option("--model", inspect.model, "Model file")->required()->check(CLI::ExistingFile);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << '\n';
        return 2;
    }

    const CLI::App* leaf = &app;
    while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();

    try {
        const fs::path out_dir = g.out;
        if (leaf != c_inspect) fs::create_directories(out_dir);
        if (leaf == c_synth) run_dataset_synth(g, synth, err);
        else if (leaf == c_ingest) run_dataset_ingest(g, ingest, err);
        else if (leaf == c_pairs) run_dataset_pairs(g, pairs, err);
        else if (leaf == c_train) run_train(g, train_opts, err);
        else if (leaf == c_sig) run_sig(g, sig);
        else if (leaf == c_inv) run_invariant(g, inv);
        else if (leaf == c_noise) run_eval_noise(g, noise);
        else if (leaf == c_sampling) run_eval_sampling(g, sampling);
        else if (leaf == c_retrieval) run_eval_retrieval(g, retrieval);
        else if (leaf == c_invariance) run_eval_invariance(g, invariance);
        else if (leaf == c_inspect) run_model_inspect(inspect, out);
        if (leaf != c_inspect) {
            write_text_file(out_dir / "run.json", resolved_config(app, *leaf, g).dump(2) + "\n");
        }
    } catch (const UsageError& e) {
        err << "error: usage: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace invsig::cli
