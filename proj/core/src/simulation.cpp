#include "vidal/simulation.hpp"

#include "vidal/error.hpp"
#include "vidal/formats.hpp"

#include <json.hpp>

#include <algorithm>

namespace vidal {

namespace {

// detector stream used for test-set evaluation; query rounds use their iteration number
constexpr std::uint64_t kEvalStream = 0xe7a1'0000'0000ULL;

double test_map(const SyntheticAdapter& detector, const LoopState& state, const SimulationConfig& config)
{
    const std::vector<FrameIndex> frames(state.test.begin(), state.test.end());
    if (frames.empty())
        return 0.0;
    const auto predictions = detector.detect_frames(frames, state.labeled, state.meta, kEvalStream);
    std::map<FrameIndex, GroundTruthFrame> truth;
    for (const auto f : frames)
        truth[f] = config.ground_truth[f];
    return mean_ap(predictions, truth, state.meta.num_classes(), config.eval).map;
}

} // namespace

SimulationReport run_simulation(const SimulationConfig& config)
{
    config.meta.validate();
    if (config.ground_truth.size() != config.meta.num_frames)
        throw ValidationError("simulation needs ground truth for all " + std::to_string(config.meta.num_frames) +
                              " frames, got " + std::to_string(config.ground_truth.size()));
    for (const auto& gt : config.ground_truth)
        gt.validate(config.meta);

    SyntheticAdapter detector(config.ground_truth, config.noise, config.decay, config.detector_seed);
    LoopState state = init_loop(config.meta, config.loop);

    std::vector<GroundTruthFrame> guiding;
    for (const auto f : state.pending)
        guiding.push_back(config.ground_truth[f]);
    state = ingest_annotations(state, guiding);

    SimulationReport report;
    report.strategy = state.strategy.kind;
    report.steps.push_back({0, state.labeled.size(), state.initial_guiding, 1.0, 0.0, test_map(detector, state, config)});

    for (std::size_t round = 0; round < config.iterations && !state.stopped(); ++round) {
        const auto request = next_request(state);
        const auto detections = fetch_detections(detector, request, state);
        auto outcome = run_iteration(state, detections);

        std::vector<GroundTruthFrame> labels;
        for (const auto f : outcome.batch)
            labels.push_back(config.ground_truth[f]);
        const std::size_t iteration = outcome.state.iteration;
        state = ingest_annotations(outcome.state, labels);

        SimulationStep step;
        step.iteration = iteration;
        step.labeled = state.labeled.size();
        step.queried = outcome.batch;
        step.mu = outcome.mu;
        for (const auto& scored : outcome.report)
            step.max_frame_score = std::max(step.max_frame_score, scored.bundle.frame_score);
        step.test_map = test_map(detector, state, config);
        report.steps.push_back(std::move(step));
    }
    report.stopped = state.stopped();
    report.final_state = std::move(state);
    return report;
}

std::string format_simulation_report(const SimulationReport& report)
{
    nlohmann::ordered_json j;
    j["schema"] = kSimulationSchema;
    j["strategy"] = std::string(to_string(report.strategy));
    j["stopped"] = report.stopped;
    j["final_map"] = report.final_map();
    auto steps = nlohmann::ordered_json::array();
    for (const auto& step : report.steps) {
        nlohmann::ordered_json s;
        s["iteration"] = step.iteration;
        s["labeled"] = step.labeled;
        s["queried"] = step.queried;
        s["mu"] = step.mu;
        s["max_frame_score"] = step.max_frame_score;
        s["map"] = step.test_map;
        steps.push_back(std::move(s));
    }
    j["iterations"] = std::move(steps);
    return j.dump(2) + "\n";
}

} // namespace vidal
