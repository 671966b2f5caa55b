// vidal: command line front end for the frame-selection loop.

#include "vidal/detector.hpp"
#include "vidal/error.hpp"
#include "vidal/eval.hpp"
#include "vidal/formats.hpp"
#include "vidal/loop.hpp"
#include "vidal/random.hpp"
#include "vidal/service.hpp"
#include "vidal/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <iostream>

namespace fs = std::filesystem;
using namespace vidal;

namespace {

std::vector<std::string> split_classes(const std::string& text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find(',', start), text.size());
        if (end > start)
            out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

void emit(const std::string& text, const std::string& path)
{
    if (path.empty() || path == "-")
        std::cout << text;
    else
        write_file_atomic(path, text);
}

struct AdapterOptions {
    std::string spec;
    std::string ground_truth;
    std::string noise;
    std::string workdir;
    std::uint64_t detector_seed = 0;
};

void add_adapter_options(CLI::App* cmd, AdapterOptions& o)
{
    cmd->add_option("--adapter", o.spec, "Detector: exec:CMD, http:URL, file:PATH or synthetic");
    cmd->add_option("--gt", o.ground_truth, "Ground truth annotations (synthetic adapter)");
    cmd->add_option("--noise", o.noise, "Noise profile document (synthetic adapter)");
    cmd->add_option("--workdir", o.workdir, "Working directory of the exec adapter (default: next to the state file)");
    cmd->add_option("--detector-seed", o.detector_seed, "Seed of the synthetic detector");
}

std::shared_ptr<DetectorAdapter> make_adapter(const AdapterOptions& o, const fs::path& state_path)
{
    const auto config = AdapterConfig::parse(o.spec);
    switch (config.kind) {
    case AdapterConfig::Kind::file: return std::make_shared<FileAdapter>(config.target);
    case AdapterConfig::Kind::http: return std::make_shared<HttpAdapter>(config.target);
    case AdapterConfig::Kind::exec: {
        const fs::path workdir = o.workdir.empty() ? fs::absolute(state_path).parent_path() / "detector" : fs::path(o.workdir);
        return std::make_shared<ExecAdapter>(config.target, workdir, fs::absolute(state_path));
    }
    case AdapterConfig::Kind::synthetic: {
        if (o.ground_truth.empty() || o.noise.empty())
            throw ValidationError("the synthetic adapter needs --gt and --noise");
        auto gt = parse_annotations(read_text_file(o.ground_truth)).frames;
        std::sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
        const auto noise = parse_noise(read_text_file(o.noise));
        return std::make_shared<SyntheticAdapter>(std::move(gt), noise.profile, noise.decay, o.detector_seed);
    }
    }
    throw ValidationError("unsupported adapter");
}

VideoMeta meta_from(const std::optional<VideoMeta>& embedded, std::size_t frames, int width, int height,
                    const std::string& classes)
{
    if (embedded && classes.empty())
        return *embedded;
    VideoMeta meta{width, height, frames, split_classes(classes)};
    meta.validate();
    return meta;
}

WorkbenchService* g_service = nullptr;

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Active frame selection for annotating video object-detection data"};
    app.require_subcommand(1);

    // init
    auto* init = app.add_subcommand("init", "Create a loop state with its initial guiding set");
    std::size_t frames = 0;
    int width = 0;
    int height = 0;
    std::string classes;
    LoopOptions loop;
    std::string strategy_text = "s1";
    std::string state_path;
    init->add_option("--frames", frames, "Number of frames")->required();
    init->add_option("--width", width, "Frame width in pixels")->required();
    init->add_option("--height", height, "Frame height in pixels")->required();
    init->add_option("--classes", classes, "Comma separated class names")->required();
    init->add_option("--init-count", loop.init_count, "Initial guiding frames")->capture_default_str();
    init->add_option("--test-fraction", loop.test_fraction, "Held-out test fraction")->capture_default_str();
    init->add_option("--seed", loop.seed, "Seed for the test split and passive sampling")->required();
    init->add_option("--strategy", strategy_text, "p|c|s1|s1-fixed|s2")->capture_default_str();
    init->add_option("--mu", loop.strategy.fixed_mu, "Fixed mu for s1-fixed")->capture_default_str();
    init->add_option("--batch", loop.strategy.batch_size, "Frames queried per iteration")->capture_default_str();
    init->add_option("--stop-fraction", loop.stop_fraction, "Stop once this fraction is labeled")->capture_default_str();
    init->add_option("--state", state_path, "State file to create")->required();

    // iterate
    auto* iterate = app.add_subcommand("iterate", "Score unlabeled frames and query the next batch");
    std::string detections_path;
    std::string report_path;
    std::optional<std::string> iterate_strategy;
    std::optional<double> iterate_mu;
    std::optional<std::size_t> iterate_batch;
    AdapterOptions adapter;
    iterate->add_option("--state", state_path, "State file")->required();
    auto* det_opt = iterate->add_option("--detections", detections_path, "Detections document for this iteration");
    add_adapter_options(iterate, adapter);
    iterate->add_option("--strategy", iterate_strategy, "p|c|s1|s1-fixed|s2 (updates the state)");
    iterate->add_option("--mu", iterate_mu, "Fixed mu for s1-fixed");
    iterate->add_option("--batch", iterate_batch, "Frames to query");
    iterate->add_option("--report", report_path, "Scores report path (default: next to the state file)");
    det_opt->excludes(iterate->get_option("--adapter"));

    // annotate
    auto* annotate = app.add_subcommand("annotate", "Ingest annotations for pending frames");
    std::string annotations_path;
    annotate->add_option("--state", state_path, "State file")->required();
    annotate->add_option("--annotations", annotations_path, "Annotations document")->required();

    // directive
    auto* directive = app.add_subcommand("directive", "Emit the training plan for the latest batch");
    std::uint64_t seed = 0;
    std::string out_path;
    directive->add_option("--state", state_path, "State file")->required();
    directive->add_option("--seed", seed, "Seed for guiding-set sampling")->required();
    directive->add_option("--out", out_path, "Output path (default: stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run the full loop against the synthetic detector");
    std::string gt_path;
    std::string noise_path;
    std::string thresholds;
    std::size_t iterations = 20;
    std::string config_path;
    simulate->add_option("--config", config_path, "Run configuration (replaces the other inputs except --iterations)");
    simulate->add_option("--gt", gt_path, "Ground truth annotations for every frame");
    simulate->add_option("--noise", noise_path, "Noise profile document");
    simulate->add_option("--strategy", strategy_text, "p|c|s1|s1-fixed|s2")->capture_default_str();
    simulate->add_option("--iterations", iterations, "Query iterations")->capture_default_str();
    auto* simulate_seed = simulate->add_option("--seed", seed, "Master seed");
    simulate->add_option("--report", report_path, "Simulation report path (default: stdout)");
    simulate->add_option("--width", width, "Frame width (when the ground truth has no meta)");
    simulate->add_option("--height", height, "Frame height (when the ground truth has no meta)");
    simulate->add_option("--classes", classes, "Class names (when the ground truth has no meta)");
    simulate->add_option("--init-count", loop.init_count, "Initial guiding frames")->capture_default_str();
    simulate->add_option("--test-fraction", loop.test_fraction, "Held-out test fraction")->capture_default_str();
    simulate->add_option("--batch", loop.strategy.batch_size, "Frames queried per iteration")->capture_default_str();
    simulate->add_option("--mu", loop.strategy.fixed_mu, "Fixed mu for s1-fixed")->capture_default_str();
    simulate->add_option("--thresholds", thresholds, "IoU thresholds, lo:step:hi or a list");

    // eval
    auto* evaluate = app.add_subcommand("eval", "mAP of a detections document against ground truth");
    evaluate->add_option("--gt", gt_path, "Ground truth annotations")->required();
    evaluate->add_option("--detections", detections_path, "Detections document")->required();
    evaluate->add_option("--thresholds", thresholds, "IoU thresholds, lo:step:hi or a list");
    evaluate->add_option("--report", report_path, "Report path (default: stdout)");

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP backend for the annotation workbench");
    std::string images_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--state", state_path, "State file")->required();
    serve->add_option("--images", images_dir, "Directory of extracted frame images")->required();
    serve->add_option("--port", port, "Port")->capture_default_str();
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    add_adapter_options(serve, adapter);

    // gen-gt
    auto* gen = app.add_subcommand("gen-gt", "Generate synthetic ground truth of moving boxes");
    SyntheticVideoOptions video;
    gen->add_option("--frames", frames, "Number of frames")->required();
    gen->add_option("--width", width, "Frame width")->required();
    gen->add_option("--height", height, "Frame height")->required();
    gen->add_option("--classes", classes, "Comma separated class names")->required();
    gen->add_option("--tracks", video.num_tracks, "Number of object tracks")->capture_default_str();
    gen->add_option("--min-size", video.min_size, "Minimum box side")->capture_default_str();
    gen->add_option("--max-size", video.max_size, "Maximum box side")->capture_default_str();
    gen->add_option("--seed", video.seed, "Seed")->required();
    gen->add_option("--out", out_path, "Output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) {
            VideoMeta meta{width, height, frames, split_classes(classes)};
            loop.strategy.kind = parse_strategy(strategy_text);
            loop.strategy.rng_seed = derive_seed(loop.seed, {2});
            const auto state = init_loop(meta, loop);
            persist_state(state, state_path);
            nlohmann::ordered_json out;
            out["iteration"] = state.iteration;
            out["annotate"] = state.pending;
            out["test"] = state.test;
            std::cout << out.dump(2) << "\n";
        } else if (iterate->parsed()) {
            auto state = load_state(state_path);
            if (iterate_strategy)
                state.strategy.kind = parse_strategy(*iterate_strategy);
            if (iterate_mu)
                state.strategy.fixed_mu = *iterate_mu;
            if (iterate_batch)
                state.strategy.batch_size = *iterate_batch;
            state.strategy.validate();

            DetectionSet detections;
            const auto request = next_request(state);
            if (!detections_path.empty()) {
                FileAdapter file(detections_path);
                detections = fetch_detections(file, request, state);
            } else if (!adapter.spec.empty()) {
                auto detector = make_adapter(adapter, state_path);
                detections = fetch_detections(*detector, request, state);
            } else {
                throw ValidationError("iterate needs --detections or --adapter");
            }
            const auto outcome = run_iteration(state, detections);
            persist_state(outcome.state, state_path);

            if (report_path.empty())
                report_path = (fs::path(state_path).parent_path() /
                               ("scores_" + std::to_string(outcome.state.history.back().iteration) + ".json"))
                                  .string();
            write_file_atomic(report_path, format_scores_report(outcome));
            nlohmann::ordered_json out;
            out["iteration"] = outcome.state.history.back().iteration;
            out["mu"] = outcome.mu;
            out["query"] = outcome.batch;
            out["report"] = report_path;
            std::cout << out.dump(2) << "\n";
        } else if (annotate->parsed()) {
            const auto state = load_state(state_path);
            const auto doc = parse_annotations(read_text_file(annotations_path));
            const auto next = ingest_annotations(state, doc.frames);
            persist_state(next, state_path);
            const auto view = queue_view(next);
            nlohmann::ordered_json out;
            out["iteration"] = view.iteration;
            out["pending"] = view.pending;
            out["iteration_complete"] = view.iteration_complete;
            out["stopped"] = view.stopped;
            std::cout << out.dump(2) << "\n";
        } else if (directive->parsed()) {
            emit(format_directive(training_directive(load_state(state_path), seed)), out_path);
        } else if (simulate->parsed() && !config_path.empty()) {
            const auto run = RunConfig::parse(read_text_file(config_path), fs::absolute(config_path).parent_path());
            if (run.adapter.kind != AdapterConfig::Kind::synthetic || !run.noise)
                throw ValidationError("simulate needs a synthetic adapter with a noise profile");
            auto gt_doc = parse_annotations(read_text_file(run.ground_truth_path));
            std::sort(gt_doc.frames.begin(), gt_doc.frames.end(),
                      [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
            SimulationConfig config;
            config.meta = run.meta;
            config.ground_truth = std::move(gt_doc.frames);
            config.noise = run.noise->profile;
            config.decay = run.noise->decay;
            config.loop = run.loop;
            config.detector_seed = run.detector_seed;
            config.eval = run.eval;
            config.iterations = iterations;
            emit(format_simulation_report(run_simulation(config)), report_path);
        } else if (simulate->parsed()) {
            if (gt_path.empty() || noise_path.empty() || simulate_seed->count() == 0)
                throw ValidationError("simulate needs --gt, --noise and --seed, or --config");
            auto gt_doc = parse_annotations(read_text_file(gt_path));
            std::sort(gt_doc.frames.begin(), gt_doc.frames.end(),
                      [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
            SimulationConfig config;
            config.meta = meta_from(gt_doc.meta, gt_doc.frames.size(), width, height, classes);
            config.ground_truth = std::move(gt_doc.frames);
            const auto noise = parse_noise(read_text_file(noise_path));
            config.noise = noise.profile;
            config.decay = noise.decay;
            config.loop = loop;
            config.loop.seed = seed;
            config.loop.strategy.kind = parse_strategy(strategy_text);
            config.loop.strategy.rng_seed = derive_seed(seed, {2});
            config.detector_seed = derive_seed(seed, {1});
            config.iterations = iterations;
            if (!thresholds.empty())
                config.eval.iou_thresholds = EvalConfig::parse_thresholds(thresholds);
            emit(format_simulation_report(run_simulation(config)), report_path);
        } else if (evaluate->parsed()) {
            const auto gt_doc = parse_annotations(read_text_file(gt_path));
            const auto det_doc = parse_detections(read_text_file(detections_path));
            std::size_t k = gt_doc.meta ? gt_doc.meta->num_classes() : 0;
            if (k == 0) {
                for (const auto& [_, frame] : det_doc.frames) {
                    if (!frame.detections.empty()) {
                        k = frame.detections.front().probs.size();
                        break;
                    }
                }
                for (const auto& frame : gt_doc.frames) {
                    for (const auto& o : frame.objects)
                        k = std::max(k, o.class_index + 1);
                }
            }
            std::map<FrameIndex, GroundTruthFrame> truth;
            for (const auto& frame : gt_doc.frames)
                truth[frame.frame_index] = frame;
            EvalConfig config;
            if (!thresholds.empty())
                config.iou_thresholds = EvalConfig::parse_thresholds(thresholds);
            const auto report = mean_ap(det_doc.frames, truth, k, config);
            emit(format_map_report(report, gt_doc.meta ? &*gt_doc.meta : nullptr), report_path);
        } else if (serve->parsed()) {
            WorkbenchService::Options options;
            options.state_path = state_path;
            options.images_dir = images_dir;
            if (!adapter.spec.empty())
                options.adapter = make_adapter(adapter, state_path);
            WorkbenchService service(std::move(options));
            g_service = &service;
            std::signal(SIGINT, [](int) {
                if (g_service)
                    g_service->stop();
            });
            std::cerr << "serving " << state_path << " on http://" << host << ":" << port << "\n";
            if (!service.listen(host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        } else if (gen->parsed()) {
            VideoMeta meta{width, height, frames, split_classes(classes)};
            AnnotationsDocument doc;
            doc.meta = meta;
            doc.frames = make_synthetic_video(meta, video);
            emit(format_annotations(doc), out_path);
        }
    } catch (const ConflictError& e) {
        std::cerr << "conflict: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
