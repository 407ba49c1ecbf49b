#include "qpr/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qpr/cnn.hpp"
#include "qpr/error.hpp"
#include "qpr/image.hpp"
#include "qpr/ingest.hpp"
#include "qpr/io.hpp"
#include "qpr/metrics.hpp"
#include "qpr/parallel.hpp"
#include "qpr/sqi.hpp"
#include "qpr/synth.hpp"

namespace qpr::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const std::vector<std::string> kSubcommands{"segment", "qpr",   "stft",  "sqi",   "train-baseline", "infer",
                                            "eval",    "synth", "split", "bundle-init"};

// Error for one segment inside a batch.
struct SegmentFailure {
    std::string segment_id;
    std::string code;
    std::string message;
};

ordered_json error_line(const std::string& code, const std::string& message, const std::string& segment_id = {}) {
    ordered_json j;
    j["error"] = code;
    if (!segment_id.empty()) j["segment_id"] = segment_id;
    j["message"] = message;
    return j;
}

// Every option of a subcommand with its effective value, in declaration order.
ordered_json config_echo(const CLI::App& sub) {
    ordered_json j;
    j["subcommand"] = sub.get_name();
    ordered_json opts;
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name.empty()) continue;
        if (opt->get_type_size() == 0 || opt->get_items_expected_max() == 0) {
            opts[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            opts[name] = opt->results().size() == 1 ? ordered_json(opt->results().front()) : ordered_json(opt->results());
        } else {
            opts[name] = opt->get_default_str();
        }
    }
    j["options"] = std::move(opts);
    return j;
}

void write_json(const fs::path& path, const ordered_json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

void write_run_echo(const fs::path& output, const CLI::App& sub) {
    fs::path echo = output;
    echo += ".run.json";
    write_json(echo, config_echo(sub));
}

std::vector<ingest::SegmentRecord> sorted_by_id(std::vector<ingest::SegmentRecord> records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const auto& a, const auto& b) { return a.segment_id < b.segment_id; });
    return records;
}

bool held_out(ingest::Label l) { return l == ingest::Label::Uncategorized || l == ingest::Label::NoRefBP; }

struct Options {
    std::size_t jobs = 1;

    // segment
    std::string input, column = "ppg", subject, output, manifest, annotations;
    double fs = 100.0;
    std::size_t window = ingest::kSegmentLength;

    // qpr / stft
    std::string out_dir;
    std::size_t n_h = 20;
    double omega_min = 0.5, omega_max = 12.0;
    bool no_pgm = false, skip_invalid = false;
    std::size_t window_len = 64, hop = 8;

    // train-baseline / infer / eval
    std::string features, weights, images, baseline, predictions, truth, roc;
    std::size_t epochs = 2000;
    double lr = 0.1;
    double threshold = 0.5;
    std::uint64_t seed = 0;

    // synth
    std::size_t n_good = 0, n_bad = 0;
    double bpm_min = 50.0, bpm_max = 110.0;

    // split
    std::string train_out, test_out, mode = "random";
    double fraction = 0.8;

    bool zero = false;
};

// ----------------------------------------------------------------------------

int cmd_segment(const Options& o, const CLI::App& sub, std::ostream& out) {
    const auto raw = ingest::read_raw_column(o.input, o.column);
    const std::string subject = o.subject.empty() ? fs::path(o.input).stem().string() : o.subject;
    auto records = ingest::segment_recording(raw, subject, o.fs, o.window);

    ingest::DatasetManifest manifest = ingest::manifest_from_records(records, o.input, o.output);
    if (!o.annotations.empty()) {
        const auto ann = ingest::parse_annotations_csv(io::read_text(o.annotations));
        manifest = ingest::merge_annotations(manifest, ann);
        for (std::size_t i = 0; i < records.size(); ++i) records[i].label = manifest.entries[i].label;
    }
    ingest::save_segments_csv(records, o.output);
    const fs::path manifest_path = o.manifest.empty() ? fs::path(o.output + ".manifest.json") : fs::path(o.manifest);
    ordered_json mj = ingest::manifest_to_json(manifest);
    mj["config"] = config_echo(sub);
    write_json(manifest_path, mj);
    write_run_echo(o.output, sub);
    out << records.size() << " segments written to " << o.output << "\n";
    return 0;
}

void check_window(const std::vector<ingest::SegmentRecord>& records, std::size_t window) {
    for (const auto& r : records) {
        if (r.samples.size() != window) {
            throw Error("MalformedRow", "segment " + r.segment_id + " has " + std::to_string(r.samples.size()) +
                                            " samples, expected " + std::to_string(window));
        }
    }
}

int report_failures(const std::vector<SegmentFailure>& failures, bool skip_invalid, std::ostream& err) {
    for (const auto& f : failures) err << error_line(f.code, f.message, f.segment_id).dump() << "\n";
    return failures.empty() || skip_invalid ? 0 : 1;
}

int cmd_qpr(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    auto records = sorted_by_id(ingest::load_segments_csv(o.input, o.fs));
    check_window(records, o.window);
    image::SweepConfig cfg = image::SweepConfig::for_depth(o.n_h, o.omega_min, o.omega_max);
    cfg.validate();
    fs::create_directories(o.out_dir);

    std::vector<std::optional<image::QprImage>> images(records.size());
    std::vector<std::optional<SegmentFailure>> failed(records.size());
    parallel_for(records.size(), o.jobs, [&](std::size_t i) {
        const auto& r = records[i];
        if (held_out(r.label)) return;
        try {
            scsa::Signal signal;
            try {
                signal = ingest::normalized_signal(r);
            } catch (const Error& e) {
                if (e.code() != "ConstantSegment") throw;
                throw Error("NoValidCandidate", "cause=ConstantSegment: constant window cannot be imaged");
            }
            auto img = image::quantum_pattern_recognition(signal, cfg, r.segment_id);
            const fs::path base = fs::path(o.out_dir) / r.segment_id;
            image::write_qpri(fs::path(base) += ".qpri", img.pixels);
            if (!o.no_pgm) image::write_pgm(fs::path(base) += ".pgm", img.pixels);
            write_json(fs::path(base) += ".json", image::image_metadata(img, cfg));
            images[i] = std::move(img);
        } catch (const Error& e) {
            failed[i] = SegmentFailure{r.segment_id, e.code(), e.what()};
        }
    });

    ingest::DatasetManifest manifest;
    ordered_json index;
    index["config"] = config_echo(sub);
    index["images"] = ordered_json::array();
    std::vector<SegmentFailure> failures;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (failed[i]) failures.push_back(*failed[i]);
        if (!images[i]) continue;
        const auto& r = records[i];
        manifest.entries.push_back({r.segment_id, o.input, r.start_index, r.label, r.segment_id + ".qpri"});
        ordered_json e = image::image_metadata(*images[i], cfg);
        e["label"] = std::string(ingest::to_string(r.label));
        e["file"] = r.segment_id + ".qpri";
        index["images"].push_back(std::move(e));
    }
    index["failures"] = ordered_json::array();
    for (const auto& f : failures) index["failures"].push_back(error_line(f.code, f.message, f.segment_id));
    write_json(fs::path(o.out_dir) / "index.json", index);
    ordered_json mj = ingest::manifest_to_json(manifest);
    mj["config"] = config_echo(sub);
    write_json(fs::path(o.out_dir) / "manifest.json", mj);
    out << manifest.entries.size() << " images written to " << o.out_dir << ", " << failures.size() << " failed\n";
    return report_failures(failures, o.skip_invalid, err);
}

int cmd_stft(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    auto records = sorted_by_id(ingest::load_segments_csv(o.input, o.fs));
    check_window(records, o.window);
    fs::create_directories(o.out_dir);
    const image::StftConfig cfg{o.window_len, o.hop};

    std::vector<std::optional<SegmentFailure>> failed(records.size());
    std::vector<bool> written(records.size(), false);
    parallel_for(records.size(), o.jobs, [&](std::size_t i) {
        const auto& r = records[i];
        if (held_out(r.label)) return;
        try {
            scsa::Signal signal{std::vector<double>(r.samples.size(), 0.0), r.fs};
            try {
                signal = ingest::normalized_signal(r);
            } catch (const Error& e) {
                if (e.code() != "ConstantSegment") throw;  // constant window: all-zero spectrogram
            }
            const Matrix m = image::stft_image(signal, cfg);
            const fs::path base = fs::path(o.out_dir) / r.segment_id;
            image::write_qpri(fs::path(base) += ".stft.qpri", m);
            if (!o.no_pgm) image::write_pgm(fs::path(base) += ".stft.pgm", m);
            written[i] = true;
        } catch (const Error& e) {
            failed[i] = SegmentFailure{r.segment_id, e.code(), e.what()};
        }
    });

    ingest::DatasetManifest manifest;
    std::vector<SegmentFailure> failures;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (failed[i]) failures.push_back(*failed[i]);
        if (!written[i]) continue;
        const auto& r = records[i];
        manifest.entries.push_back({r.segment_id, o.input, r.start_index, r.label, r.segment_id + ".stft.qpri"});
    }
    ordered_json mj = ingest::manifest_to_json(manifest);
    mj["config"] = config_echo(sub);
    mj["fft_length"] = image::stft_fft_length(o.window_len);
    write_json(fs::path(o.out_dir) / "manifest.json", mj);
    out << manifest.entries.size() << " spectrograms written to " << o.out_dir << "\n";
    return report_failures(failures, o.skip_invalid, err);
}

int cmd_sqi(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    auto records = sorted_by_id(ingest::load_segments_csv(o.input, o.fs));
    std::vector<std::optional<sqi::SqiFeatures>> feats(records.size());
    std::vector<std::optional<SegmentFailure>> failed(records.size());
    parallel_for(records.size(), o.jobs, [&](std::size_t i) {
        const auto& r = records[i];
        if (held_out(r.label)) return;
        try {
            feats[i] = sqi::sqi_features(r.samples, r.segment_id);
        } catch (const Error& e) {
            failed[i] = SegmentFailure{r.segment_id, e.code(), e.what()};
        }
    });
    std::string csv = "segment_id,skewness,kurtosis,perfusion,label\n";
    std::vector<SegmentFailure> failures;
    std::size_t rows = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (failed[i]) failures.push_back(*failed[i]);
        if (!feats[i]) continue;
        const auto& f = *feats[i];
        csv += f.segment_id + ',' + io::format_double(f.skewness) + ',' + io::format_double(f.kurtosis) + ',' +
               io::format_double(f.perfusion) + ',' + std::string(ingest::to_string(records[i].label)) + '\n';
        ++rows;
    }
    io::write_file_atomic(o.output, csv);
    write_run_echo(o.output, sub);
    out << rows << " feature rows written to " << o.output << "\n";
    return report_failures(failures, o.skip_invalid, err);
}

struct FeatureTable {
    std::vector<std::string> ids;
    sqi::FeatureRows rows;
    std::vector<ingest::Label> labels;
};

FeatureTable read_features(const fs::path& path) {
    std::istringstream in(io::read_text(path));
    std::string line;
    std::getline(in, line);
    if (io::split_csv_line(line) !=
        std::vector<std::string>{"segment_id", "skewness", "kurtosis", "perfusion", "label"}) {
        throw Error("MalformedRow", path.string() + ":1: header must be segment_id,skewness,kurtosis,perfusion,label");
    }
    FeatureTable t;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != 5) throw Error("MalformedRow", path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
        t.ids.push_back(f[0]);
        t.rows.push_back({io::parse_double(f[1]), io::parse_double(f[2]), io::parse_double(f[3])});
        t.labels.push_back(ingest::parse_label(f[4]));
    }
    return t;
}

int cmd_train_baseline(const Options& o, const CLI::App& sub, std::ostream& out) {
    const auto table = read_features(o.features);
    sqi::FeatureRows x;
    std::vector<int> y;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (!ingest::in_pool(table.labels[i])) continue;
        x.push_back(table.rows[i]);
        y.push_back(table.labels[i] == ingest::Label::Good ? 1 : 0);
    }
    const auto model = sqi::train_linear_baseline(x, y, {o.epochs, o.lr, o.seed});
    ordered_json j = sqi::model_to_json(model);
    j["training_rows"] = x.size();
    j["config"] = config_echo(sub);
    write_json(o.output, j);
    out << "trained on " << x.size() << " rows, final loss " << io::format_double(model.final_loss) << "\n";
    return 0;
}

struct Prediction {
    std::string segment_id;
    double probability;
};

void write_predictions(const fs::path& path, std::vector<Prediction> preds, double threshold) {
    std::sort(preds.begin(), preds.end(), [](const auto& a, const auto& b) { return a.segment_id < b.segment_id; });
    std::string csv = "segment_id,probability,label_pred\n";
    for (const auto& p : preds) {
        csv += p.segment_id + ',' + io::format_double(p.probability) + ',' +
               (p.probability >= threshold ? "good" : "bad") + '\n';
    }
    io::write_file_atomic(path, csv);
}

int cmd_infer(const Options& o, const CLI::App& sub, std::ostream& out) {
    std::vector<Prediction> preds;
    if (!o.baseline.empty()) {
        if (o.features.empty()) throw Error("MissingArgument", "--baseline needs --features");
        const auto model = sqi::model_from_json(nlohmann::json::parse(io::read_text(o.baseline)));
        const auto table = read_features(o.features);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            if (held_out(table.labels[i])) continue;
            preds.push_back({table.ids[i], sqi::predict_linear(model, table.rows[i])});
        }
    } else {
        if (o.weights.empty() || o.images.empty()) {
            throw Error("MissingArgument", "infer needs --weights and --images, or --baseline and --features");
        }
        const auto bundle = cnn::load_weights(o.weights);
        cnn::validate_bundle(bundle);
        const fs::path dir = o.images;
        const auto manifest = ingest::manifest_from_json(nlohmann::json::parse(io::read_text(dir / "manifest.json")));
        std::vector<ingest::ManifestEntry> todo;
        for (const auto& e : manifest.entries) {
            if (!held_out(e.label)) todo.push_back(e);
        }
        preds.resize(todo.size());
        parallel_for(todo.size(), o.jobs, [&](std::size_t i) {
            const Matrix pixels = image::read_qpri(dir / todo[i].data_path);
            preds[i] = {todo[i].segment_id, cnn::forward(pixels, bundle)};
        });
    }
    write_predictions(o.output, preds, o.threshold);
    write_run_echo(o.output, sub);
    out << preds.size() << " predictions written to " << o.output << "\n";
    return 0;
}

std::map<std::string, ingest::Label> read_truth(const fs::path& path, double fs) {
    std::map<std::string, ingest::Label> truth;
    if (path.extension() == ".json") {
        for (const auto& e : ingest::manifest_from_json(nlohmann::json::parse(io::read_text(path))).entries) {
            truth[e.segment_id] = e.label;
        }
    } else {
        for (const auto& r : ingest::load_segments_csv(path, fs)) truth[r.segment_id] = r.label;
    }
    return truth;
}

int cmd_eval(const Options& o, const CLI::App& sub, std::ostream& out) {
    const auto truth = read_truth(o.truth, o.fs);
    std::istringstream in(io::read_text(o.predictions));
    std::string line;
    std::getline(in, line);
    if (io::split_csv_line(line) != std::vector<std::string>{"segment_id", "probability", "label_pred"}) {
        throw Error("MalformedRow", o.predictions + ":1: header must be segment_id,probability,label_pred");
    }
    std::vector<double> scores;
    std::vector<bool> predicted, actual;
    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != 3) {
            throw Error("MalformedRow", o.predictions + ":" + std::to_string(lineno) + ": expected 3 columns");
        }
        if (!seen.insert(f[0]).second) throw Error("DuplicateSegmentId", "duplicate prediction for " + f[0]);
        const auto it = truth.find(f[0]);
        if (it == truth.end()) throw Error("UnknownSegmentId", "no truth label for segment " + f[0]);
        if (!ingest::in_pool(it->second)) continue;
        const double p = io::parse_double(f[1]);
        scores.push_back(p);
        predicted.push_back(p >= o.threshold);
        actual.push_back(it->second == ingest::Label::Good);
    }
    const auto conf = metrics::confusion(predicted, actual);
    std::optional<metrics::RocCurve> roc;
    try {
        roc = metrics::roc_auc(scores, actual);
    } catch (const Error& e) {
        if (e.code() != "SingleClassInput") throw;
    }
    ordered_json j = metrics::metrics_json(conf, roc, o.threshold);
    j["config"] = config_echo(sub);
    write_json(o.output, j);
    if (!o.roc.empty() && roc) io::write_file_atomic(o.roc, metrics::roc_csv(*roc));
    const auto s = metrics::summarize(conf);
    out << "support " << conf.total() << ", acc " << (s.acc ? io::format_double(*s.acc) : "n/a") << ", auc "
        << (roc ? io::format_double(roc->auc) : "n/a") << "\n";
    return 0;
}

int cmd_synth(const Options& o, const CLI::App& sub, std::ostream& out) {
    synth::SynthConfig cfg;
    cfg.n_good = o.n_good;
    cfg.n_bad = o.n_bad;
    cfg.fs = o.fs;
    cfg.seed = o.seed;
    cfg.bpm_min = o.bpm_min;
    cfg.bpm_max = o.bpm_max;
    const auto records = synth::generate_dataset(cfg);
    if (o.output.empty()) {
        out << ingest::format_segments_csv(records);
        return 0;
    }
    ingest::save_segments_csv(records, o.output);
    write_run_echo(o.output, sub);
    return 0;
}

int cmd_split(const Options& o, const CLI::App& sub, std::ostream& out) {
    const auto records = ingest::load_segments_csv(o.input, o.fs);
    ingest::SplitMode mode;
    if (o.mode == "random") {
        mode = ingest::SplitMode::Random;
    } else if (o.mode == "subject") {
        mode = ingest::SplitMode::Subject;
    } else {
        throw Error("InvalidArgument", "--mode must be random or subject");
    }
    const auto split = ingest::split_records(records, o.fraction, o.seed, mode);
    ingest::save_segments_csv(split.train, o.train_out);
    ingest::save_segments_csv(split.test, o.test_out);
    write_run_echo(o.train_out, sub);
    out << split.train.size() << " train / " << split.test.size() << " test segments\n";
    return 0;
}

int cmd_bundle_init(const Options& o, const CLI::App& sub, std::ostream& out) {
    const auto bundle = o.zero ? cnn::zero_bundle() : cnn::synthetic_bundle(o.seed);
    cnn::save_weights(bundle, o.output);
    write_run_echo(o.output, sub);
    out << bundle.arrays().size() << " arrays, " << bundle.parameter_count() << " parameters written to " << o.output
        << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (!args.empty() && !args.front().starts_with("-") &&
        std::find(kSubcommands.begin(), kSubcommands.end(), args.front()) == kSubcommands.end()) {
        err << error_line("UnknownSubcommand", "unknown subcommand '" + args.front() + "'").dump() << "\n";
        return 1;
    }

    Options o;
    CLI::App app{"PPG signal quality toolkit: QPR images, SQI baseline, slim-CNN inference, metrics"};
    app.name("qpr-tool");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.add_option("--jobs", o.jobs, "Worker threads for per-segment work")->check(CLI::PositiveNumber);

    const auto add_fs = [&](CLI::App* s) { s->add_option("--fs", o.fs, "Sampling rate in Hz")->check(CLI::PositiveNumber); };

    auto* seg = app.add_subcommand("segment", "Window a raw recording into fixed-length segments");
    seg->add_option("--input", o.input, "Raw recording CSV with a header row")->required();
    seg->add_option("--column", o.column, "Column holding the PPG samples");
    seg->add_option("--subject", o.subject, "Subject name used in segment ids (default: input file stem)");
    add_fs(seg);
    seg->add_option("--window", o.window, "Segment length in samples");
    seg->add_option("--annotations", o.annotations, "Annotation CSV to merge (segment_id,label,annotator,timestamp)");
    seg->add_option("--manifest", o.manifest, "Manifest JSON path (default: <output>.manifest.json)");
    seg->add_option("--output", o.output, "Segment CSV to write")->required();

    auto* qpr = app.add_subcommand("qpr", "Compute QPR images for every segment");
    qpr->add_option("--input", o.input, "Segment CSV")->required();
    qpr->add_option("--out-dir", o.out_dir, "Directory for .qpri/.pgm/.json outputs")->required();
    qpr->add_option("--n-h", o.n_h, "Decomposition depth (image rows)")->check(CLI::PositiveNumber);
    qpr->add_option("--omega-min", o.omega_min, "Lower sweep bound of Omega (h = 1/Omega^2)");
    qpr->add_option("--omega-max", o.omega_max, "Upper sweep bound of Omega");
    qpr->add_option("--window", o.window, "Expected segment length in samples");
    add_fs(qpr);
    qpr->add_flag("--no-pgm", o.no_pgm, "Skip the 8-bit PGM sidecars");
    qpr->add_flag("--skip-invalid", o.skip_invalid, "Exit 0 even when some segments cannot be imaged");

    auto* stft = app.add_subcommand("stft", "Compute STFT comparison images for every segment");
    stft->add_option("--input", o.input, "Segment CSV")->required();
    stft->add_option("--out-dir", o.out_dir, "Directory for .stft.qpri/.stft.pgm outputs")->required();
    stft->add_option("--window-len", o.window_len, "STFT window length in samples")->check(CLI::PositiveNumber);
    stft->add_option("--hop", o.hop, "STFT hop in samples")->check(CLI::PositiveNumber);
    stft->add_option("--window", o.window, "Expected segment length in samples");
    add_fs(stft);
    stft->add_flag("--no-pgm", o.no_pgm, "Skip the 8-bit PGM sidecars");
    stft->add_flag("--skip-invalid", o.skip_invalid, "Exit 0 even when some segments fail");

    auto* sq = app.add_subcommand("sqi", "Compute skewness/kurtosis/perfusion features");
    sq->add_option("--input", o.input, "Segment CSV (raw, unnormalized samples)")->required();
    sq->add_option("--output", o.output, "Feature CSV to write")->required();
    add_fs(sq);
    sq->add_flag("--skip-invalid", o.skip_invalid, "Exit 0 even when some segments fail");

    auto* tb = app.add_subcommand("train-baseline", "Fit the logistic SQI baseline");
    tb->add_option("--features", o.features, "Feature CSV")->required();
    tb->add_option("--output", o.output, "Model JSON to write")->required();
    tb->add_option("--epochs", o.epochs, "Full-batch gradient steps");
    tb->add_option("--lr", o.lr, "Learning rate")->check(CLI::PositiveNumber);
    tb->add_option("--seed", o.seed, "Initialization seed");

    auto* inf = app.add_subcommand("infer", "Score segments with the CNN or the SQI baseline");
    inf->add_option("--weights", o.weights, "QPRW weight bundle");
    inf->add_option("--images", o.images, "Directory written by the qpr subcommand");
    inf->add_option("--baseline", o.baseline, "Baseline model JSON (instead of --weights)");
    inf->add_option("--features", o.features, "Feature CSV for --baseline");
    inf->add_option("--threshold", o.threshold, "Probability at or above which a segment is good");
    inf->add_option("--output", o.output, "Prediction CSV to write")->required();

    auto* ev = app.add_subcommand("eval", "Confusion statistics, ROC and AUC");
    ev->add_option("--predictions", o.predictions, "Prediction CSV")->required();
    ev->add_option("--truth", o.truth, "Segment CSV or manifest JSON with labels")->required();
    ev->add_option("--threshold", o.threshold, "Probability at or above which a segment is good");
    ev->add_option("--output", o.output, "Metrics JSON to write")->required();
    ev->add_option("--roc", o.roc, "ROC points CSV to write");
    add_fs(ev);

    auto* sy = app.add_subcommand("synth", "Generate labelled synthetic segments");
    sy->add_option("--n-good", o.n_good, "Good segments");
    sy->add_option("--n-bad", o.n_bad, "Bad segments");
    sy->add_option("--seed", o.seed, "Dataset seed");
    sy->add_option("--bpm-min", o.bpm_min, "Lowest beat rate");
    sy->add_option("--bpm-max", o.bpm_max, "Highest beat rate");
    add_fs(sy);
    sy->add_option("--output", o.output, "Segment CSV to write (default: standard output)");

    auto* sp = app.add_subcommand("split", "Random (or subject-wise) train/test split of the good/bad pool");
    sp->add_option("--input", o.input, "Segment CSV")->required();
    sp->add_option("--train", o.train_out, "Training segment CSV to write")->required();
    sp->add_option("--test", o.test_out, "Test segment CSV to write")->required();
    sp->add_option("--fraction", o.fraction, "Training fraction");
    sp->add_option("--seed", o.seed, "Shuffle seed")->required();
    sp->add_option("--mode", o.mode, "random or subject");
    add_fs(sp);

    auto* bi = app.add_subcommand("bundle-init", "Write a seeded synthetic weight bundle");
    bi->add_option("--seed", o.seed, "Initialization seed");
    bi->add_flag("--zero", o.zero, "All-zero weights (BN gamma/var = 1) instead of random ones");
    bi->add_option("--output", o.output, "QPRW file to write")->required();

    // CLI11 parses argv in reverse.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        (void)e;
        const CLI::App* target = &app;
        for (const auto* s : app.get_subcommands()) target = s;
        out << target->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::RequiredError& e) {
        err << error_line("MissingArgument", e.what()).dump() << "\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        err << error_line("InvalidArgument", e.what()).dump() << "\n";
        return 1;
    }

    try {
        if (*seg) return cmd_segment(o, *seg, out);
        if (*qpr) return cmd_qpr(o, *qpr, out, err);
        if (*stft) return cmd_stft(o, *stft, out, err);
        if (*sq) return cmd_sqi(o, *sq, out, err);
        if (*tb) return cmd_train_baseline(o, *tb, out);
        if (*inf) return cmd_infer(o, *inf, out);
        if (*ev) return cmd_eval(o, *ev, out);
        if (*sy) return cmd_synth(o, *sy, out);
        if (*sp) return cmd_split(o, *sp, out);
        if (*bi) return cmd_bundle_init(o, *bi, out);
    } catch (const Error& e) {
        err << error_line(e.code(), e.what()).dump() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << error_line("MalformedJson", e.what()).dump() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << error_line("IoError", e.what()).dump() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace qpr::cli
