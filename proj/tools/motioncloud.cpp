// motioncloud command-line front end.

#include "motioncloud/archive.hpp"
#include "motioncloud/error.hpp"
#include "motioncloud/evaluation.hpp"
#include "motioncloud/file_util.hpp"
#include "motioncloud/indexer.hpp"
#include "motioncloud/pipeline.hpp"
#include "motioncloud/service.hpp"
#include "motioncloud/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace motioncloud;

namespace {

struct Options {
    std::string data;
    std::string clip_dir;
    std::string model;
    std::string index;
    std::string kernel = "poly";
    std::string degree = "auto";
    double kernel_offset = 1.0;
    int k = kDefaultDimensions;
    int window = 250;
    int stride = 50;
    std::string alpha_variant = "peaked";
    double lambda1 = 2.5;
    double lambda2 = 25.0;
    double rho = 0.0;
    int knn_k = 7;
    std::uint64_t seed = 7;
    int top = 10;
    int port = 8080;
    int clips_per_class = 12;
    int frames = 64;
    int size = 256;
    std::string out;
};

void log(const std::string& msg) { std::cerr << "[motioncloud] " << msg << '\n'; }

MetricParams metric_from(const Options& o) {
    MetricParams m;
    m.alpha.variant = o.alpha_variant == "literal" ? AlphaVariant::literal : AlphaVariant::peaked;
    m.alpha.lambda1 = o.lambda1;
    m.alpha.lambda2 = o.lambda2;
    m.rho = o.rho;
    return m;
}

PipelineConfig pipeline_from(const Options& o) {
    PipelineConfig cfg;
    cfg.kind = o.kernel == "linear" ? EigenKind::linear : EigenKind::polynomial;
    if (o.degree != "auto") cfg.degree = std::stoi(o.degree);
    cfg.kernel_offset = o.kernel_offset;
    cfg.dimensions = o.k;
    cfg.metric = metric_from(o);
    cfg.knn_k = o.knn_k;
    return cfg;
}

std::vector<ClipFeatures> dataset_features(const fs::path& root, const PipelineConfig& cfg) {
    const auto clips = load_dataset(root);
    std::vector<ClipFeatures> out;
    out.reserve(clips.size());
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const auto& c = clips[i];
        log("features " + std::to_string(i + 1) + "/" + std::to_string(clips.size()) + ": " + c.clip_id);
        out.push_back(extract_features(load_sequence(c.directory, cfg.frame_size), cfg, c.clip_id, c.label));
    }
    return out;
}

json confusion_json(const ConfusionMatrix& cm) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < cm.percent.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < cm.percent.cols(); ++c) row.push_back(cm.percent(r, c));
        rows.push_back(row);
    }
    return {{"classes", cm.classes}, {"percent", rows}, {"accuracy", cm.accuracy()}};
}

json query_json(const QueryResult& r) {
    json hits = json::array();
    for (const auto& h : r.hits) {
        hits.push_back({{"video_id", h.video_id},
                        {"window", {h.start_frame, h.end_frame}},
                        {"similarity_pct", h.similarity},
                        {"predicted_class", h.predicted}});
    }
    return {{"results", hits}, {"null_query", r.null_query}};
}

int cmd_train(const Options& o) {
    const PipelineConfig cfg = pipeline_from(o);
    const auto features = dataset_features(o.data, cfg);
    log("training eigenspace on " + std::to_string(features.size()) + " clips");
    const ActionModel model = train_action_model(features, cfg);
    if (!model.degree_curve_degrees.empty()) {
        for (std::size_t i = 0; i < model.degree_curve_degrees.size(); ++i) {
            log("degree " + std::to_string(model.degree_curve_degrees[i]) +
                " separation ratio " + std::to_string(model.degree_curve_ratios[i]));
        }
    }
    fs::create_directories(o.out);
    AdvisoryLock lock(fs::path(o.out) / "model");
    save_action_model(model, o.out);
    std::cout << json{{"model", o.out}, {"clouds", model.clouds.size()}, {"degree", model.eigen.degree},
                      {"K", model.eigen.dims()}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_index(const Options& o) {
    const ActionModel model = load_action_model(o.model);
    const FrameSequence video = load_sequence(o.clip_dir, model.config.frame_size);
    const std::string video_id = fs::path(o.clip_dir).lexically_normal().filename().string().empty()
                                     ? fs::path(o.clip_dir).lexically_normal().parent_path().filename().string()
                                     : fs::path(o.clip_dir).lexically_normal().filename().string();
    IndexerConfig icfg;
    icfg.window = o.window;
    icfg.stride = o.stride;
    icfg.null_threshold = model.config.null_threshold;
    if (icfg.window <= icfg.stride || icfg.stride < 1) throw InvalidArgument("--window must exceed --stride >= 1");
    log("indexing " + video_id + " (" + std::to_string(video.frames.size()) + " frames)");
    auto records = index_timeline(video_id, video, model, icfg);

    AdvisoryLock lock(o.out);
    std::vector<IndexRecord> merged;
    if (fs::exists(o.out)) {
        for (auto& r : load_index(o.out)) {
            if (r.video_id != video_id) merged.push_back(std::move(r));
        }
    }
    const std::size_t added = records.size();
    for (auto& r : records) merged.push_back(std::move(r));
    save_index(merged, o.out, static_cast<int>(model.eigen.dims()));
    std::cout << json{{"index", o.out}, {"video_id", video_id}, {"windows", added}, {"records", merged.size()}}.dump()
              << '\n';
    return 0;
}

int cmd_query(const Options& o) {
    const ActionModel model = load_action_model(o.model);
    const auto index = load_index(o.index);
    const FrameSequence clip = load_sequence(o.clip_dir, model.config.frame_size);
    const QueryResult r = query_similarity(clip, model, index, o.top, metric_from(o));
    std::cout << query_json(r).dump(2) << '\n';
    return 0;
}

int cmd_classify(const Options& o) {
    const ActionModel model = load_action_model(o.model);
    const FrameSequence clip = load_sequence(o.clip_dir, model.config.frame_size);
    const ClipFeatures f = extract_features(clip, model.config);
    const Trajectory traj = model.trajectory(f.features);
    const CloudSignature sig = model.signature(traj);
    const Classification tpc = model.classify(sig, traj, metric_from(o));
    const KnnVote knn = model.classify_knn(traj, o.knn_k);
    json scores = json::object();
    for (const auto& [label, d] : tpc.scores) scores[label] = d;
    std::cout << json{{"class", tpc.label},
                      {"scores", scores},
                      {"null", model.is_null(sig)},
                      {"knn", {{"class", knn.label}, {"fraction", knn.fraction}}}}
                     .dump(2)
              << '\n';
    return 0;
}

int cmd_synth(const Options& o) {
    SynthSpec spec;
    spec.seed = o.seed;
    spec.clips_per_class = o.clips_per_class;
    spec.frames = o.frames;
    spec.size = {o.size, o.size};
    AdvisoryLock lock(fs::path(o.out) / "manifest.json");
    const auto clips = generate_clips(spec, o.out);
    std::cout << json{{"data", o.out}, {"clips", clips.size()}, {"seed", o.seed}}.dump() << '\n';
    return 0;
}

int cmd_eval(const Options& o) {
    PipelineConfig cfg = pipeline_from(o);
    const auto features = dataset_features(o.data, cfg);
    log("leave-one-clip-per-class-out over " + std::to_string(features.size()) + " clips");
    const ClassifierComparison cmp = compare_classifiers(features, cfg);
    const json report{{"tpc", confusion_json(cmp.tpc)},
                      {"knn", confusion_json(cmp.knn)},
                      {"tpc_accuracy", cmp.tpc_accuracy},
                      {"knn_accuracy", cmp.knn_accuracy},
                      {"folds", cmp.folds}};
    if (!o.out.empty()) {
        AdvisoryLock lock(o.out);
        atomic_write(o.out, report.dump(2));
    }
    std::cout << report.dump(2) << '\n';
    return 0;
}

int cmd_export(const Options& o) {
    const ActionModel model = load_action_model(o.model);
    const FrameSequence clip = load_sequence(o.clip_dir, model.config.frame_size);
    const ClipFeatures f = extract_features(clip, model.config);
    const Trajectory traj = model.trajectory(f.features);
    const CloudSignature sig = model.signature(traj);

    std::ostringstream csv;
    csv << "frame";
    for (Eigen::Index j = 0; j < traj.dims(); ++j) csv << ",y" << (j + 1);
    csv << '\n' << std::setprecision(9);
    for (Eigen::Index i = 0; i < traj.size(); ++i) {
        csv << traj.frame_index[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < traj.dims(); ++j) csv << ',' << traj.points(i, j);
        csv << '\n';
    }
    fs::create_directories(o.out);
    AdvisoryLock lock(fs::path(o.out) / "trajectory.csv");
    atomic_write(fs::path(o.out) / "trajectory.csv", csv.str());
    atomic_write(fs::path(o.out) / "signature.json", signature_to_json(sig));
    std::cout << json{{"trajectory", (fs::path(o.out) / "trajectory.csv").string()},
                      {"signature", (fs::path(o.out) / "signature.json").string()}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_serve(const Options& o) {
    ServiceConfig cfg;
    cfg.port = o.port;
    cfg.default_top = o.top;
    cfg.metric = metric_from(o);

    // Block termination signals here so the waiter thread receives them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    QueryService service(fs::path(o.model), fs::path(o.index), cfg);
    const int port = service.bind();
    log("serving on " + cfg.host + ":" + std::to_string(port));
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        log("signal " + std::to_string(sig) + ", shutting down");
        service.stop();
    });
    service.run();
    // run() also returns on bind failure; wake the waiter in that case
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motioncloud: trajectory point cloud action recognition and video search"};
    app.require_subcommand(1);
    Options o;

    const std::map<std::string, std::string> kernels{{"linear", "linear"}, {"poly", "poly"}};
    const std::map<std::string, std::string> variants{{"peaked", "peaked"}, {"literal", "literal"}};
    auto degree_check = CLI::Validator(
        [](std::string& v) -> std::string {
            if (v == "auto") return {};
            try {
                std::size_t used = 0;
                const int d = std::stoi(v, &used);
                if (used == v.size() && d >= 1) return {};
            } catch (const std::exception&) {
            }
            return "degree must be 'auto' or a positive integer";
        },
        "auto|N");

    auto add_model_flags = [&](CLI::App* c) {
        c->add_option("--kernel", o.kernel, "eigenspace kind")->transform(CLI::CheckedTransformer(kernels))
            ->capture_default_str();
        c->add_option("--degree", o.degree, "polynomial kernel degree")->check(degree_check)->capture_default_str();
        c->add_option("--kernel-offset", o.kernel_offset, "polynomial kernel offset c")->capture_default_str();
        c->add_option("--k", o.k, "eigenspace dimensions")->check(CLI::Range(3, 64))->capture_default_str();
    };
    auto add_metric_flags = [&](CLI::App* c) {
        c->add_option("--alpha-variant", o.alpha_variant, "plane-term modulation")
            ->transform(CLI::CheckedTransformer(variants))
            ->capture_default_str();
        c->add_option("--lambda1", o.lambda1, "alpha decay rate")->check(CLI::PositiveNumber)->capture_default_str();
        c->add_option("--lambda2", o.lambda2, "alpha rise rate")->check(CLI::PositiveNumber)->capture_default_str();
        c->add_option("--rho", o.rho, "fuzzy term weight")->check(CLI::NonNegativeNumber)->capture_default_str();
    };
    auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "random seed")->capture_default_str(); };

    auto* train = app.add_subcommand("train", "train an eigenspace and cloud model from a dataset");
    train->add_option("--data", o.data, "dataset root")->required()->check(CLI::ExistingDirectory);
    add_model_flags(train);
    add_metric_flags(train);
    train->add_option("--knn-k", o.knn_k, "baseline KNN neighbours")->check(CLI::PositiveNumber)->capture_default_str();
    add_seed(train);
    train->add_option("--out", o.out, "model directory")->required();

    auto* index = app.add_subcommand("index", "index a long frame sequence with sliding windows");
    index->add_option("--model", o.model, "model directory")->required()->check(CLI::ExistingDirectory);
    index->add_option("--clip-dir", o.clip_dir, "frame directory")->required()->check(CLI::ExistingDirectory);
    index->add_option("--window", o.window, "frames per window")->check(CLI::PositiveNumber)->capture_default_str();
    index->add_option("--stride", o.stride, "frames between windows")->check(CLI::PositiveNumber)->capture_default_str();
    index->add_option("--out", o.out, "index file (JSON lines)")->required();

    auto* query = app.add_subcommand("query", "rank indexed windows by similarity to a clip");
    query->add_option("--model", o.model, "model directory")->required()->check(CLI::ExistingDirectory);
    query->add_option("--index", o.index, "index file")->required()->check(CLI::ExistingFile);
    query->add_option("--clip-dir", o.clip_dir, "query frame directory")->required()->check(CLI::ExistingDirectory);
    query->add_option("--top", o.top, "results to return")->check(CLI::PositiveNumber)->capture_default_str();
    add_metric_flags(query);

    auto* classify = app.add_subcommand("classify", "classify a single clip");
    classify->add_option("--model", o.model, "model directory")->required()->check(CLI::ExistingDirectory);
    classify->add_option("--clip-dir", o.clip_dir, "frame directory")->required()->check(CLI::ExistingDirectory);
    classify->add_option("--knn-k", o.knn_k, "baseline KNN neighbours")->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_metric_flags(classify);

    auto* synth = app.add_subcommand("synth", "generate the synthetic action dataset");
    add_seed(synth);
    synth->add_option("--clips", o.clips_per_class, "clips per class")->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--frames", o.frames, "frames per clip")->check(CLI::Range(2, 100000))->capture_default_str();
    synth->add_option("--size", o.size, "frame side in pixels")->check(CLI::Range(32, 4096))->capture_default_str();
    synth->add_option("--out", o.out, "dataset root")->required();

    auto* eval = app.add_subcommand("eval", "cross-validate cloud classification against per-point KNN");
    eval->add_option("--data", o.data, "dataset root")->required()->check(CLI::ExistingDirectory);
    add_model_flags(eval);
    add_metric_flags(eval);
    eval->add_option("--knn-k", o.knn_k, "baseline KNN neighbours")->check(CLI::PositiveNumber)->capture_default_str();
    add_seed(eval);
    eval->add_option("--out", o.out, "optional JSON report path");

    auto* exp = app.add_subcommand("export", "write a clip's trajectory CSV and signature JSON");
    exp->add_option("--model", o.model, "model directory")->required()->check(CLI::ExistingDirectory);
    exp->add_option("--clip-dir", o.clip_dir, "frame directory")->required()->check(CLI::ExistingDirectory);
    exp->add_option("--out", o.out, "output directory")->required();

    auto* serve = app.add_subcommand("serve", "run the HTTP similarity service");
    serve->add_option("--model", o.model, "model directory")->required()->check(CLI::ExistingDirectory);
    serve->add_option("--index", o.index, "index file")->required()->check(CLI::ExistingFile);
    serve->add_option("--port", o.port, "listen port")->check(CLI::Range(0, 65535))->capture_default_str();
    serve->add_option("--top", o.top, "default result count")->check(CLI::PositiveNumber)->capture_default_str();
    add_metric_flags(serve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 1;
    }

    try {
        if (*train) return cmd_train(o);
        if (*index) return cmd_index(o);
        if (*query) return cmd_query(o);
        if (*classify) return cmd_classify(o);
        if (*synth) return cmd_synth(o);
        if (*eval) return cmd_eval(o);
        if (*exp) return cmd_export(o);
        if (*serve) return cmd_serve(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
