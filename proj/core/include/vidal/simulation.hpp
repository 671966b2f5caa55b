#pragma once

#include "vidal/detector.hpp"
#include "vidal/eval.hpp"
#include "vidal/loop.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vidal {

/// Closed-loop run against the synthetic detector: the "model" after each
/// round is the decay model centred on the labeled frames, and its quality is
/// the mAP of synthetic detections on the held-out test frames.
struct SimulationConfig {
    VideoMeta meta;
    std::vector<GroundTruthFrame> ground_truth; ///< one entry per frame, index order
    NoiseProfile noise;
    LearningDecay decay;
    LoopOptions loop;
    std::size_t iterations = 20;
    std::uint64_t detector_seed = 0;
    EvalConfig eval;
};

struct SimulationStep {
    std::size_t iteration = 0;
    std::size_t labeled = 0;
    std::vector<FrameIndex> queried;
    double mu = 1.0;
    double max_frame_score = 0.0;
    double test_map = 0.0;
};

struct SimulationReport {
    StrategyKind strategy = StrategyKind::s1_dynamic;
    /// Step 0 is the model trained on the initial guiding set only.
    std::vector<SimulationStep> steps;
    LoopState final_state;
    bool stopped = false;

    double final_map() const { return steps.empty() ? 0.0 : steps.back().test_map; }
};

SimulationReport run_simulation(const SimulationConfig& config);

std::string format_simulation_report(const SimulationReport& report);

} // namespace vidal
