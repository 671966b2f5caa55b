#pragma once

#include "vidal/model.hpp"
#include "vidal/scoring.hpp"
#include "vidal/strategy.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <vector>

namespace vidal {

using DetectionSet = std::map<FrameIndex, FrameDetections>;

struct QueryRecord {
    std::size_t iteration = 0;
    std::vector<FrameIndex> frames;      ///< in selection order
    std::vector<double> frame_scores;    ///< S, parallel to `frames`
    std::vector<double> weighted_scores; ///< S * w, parallel to `frames`
    double mu = 1.0;

    bool operator==(const QueryRecord&) const = default;
};

/// Everything the query/annotate/train loop needs to resume.
///
/// Frames are partitioned into labeled, unlabeled and test. Frames waiting
/// for annotation (`pending`) are still unlabeled. `iteration` counts the
/// batches annotated so far, the initial guiding set being batch 0.
struct LoopState {
    VideoMeta meta;
    StrategyConfig strategy;
    std::size_t iteration = 0;
    std::set<FrameIndex> labeled;
    std::set<FrameIndex> unlabeled;
    std::set<FrameIndex> test;
    std::map<FrameIndex, GroundTruthFrame> annotations;
    std::vector<FrameIndex> initial_guiding;
    std::vector<FrameIndex> pending;
    std::vector<QueryRecord> history;
    /// Detector output for the pending frames, kept for annotation prefill.
    DetectionSet pending_predictions;

    double stop_fraction = 0.8;
    double confidence_threshold = kDefaultConfidenceThreshold;
    bool test_as_neighbors = true;
    bool normalize_entropy = true;

    /// Labeled-frame count at which the loop stops: ceil(stop_fraction * non-test frames).
    std::size_t stop_target() const;
    bool stopped() const { return labeled.size() >= stop_target(); }
    bool batch_pending() const { return !pending.empty(); }

    /// Unlabeled frames that may still be queried (not pending).
    std::vector<FrameIndex> queryable() const;

    /// Throws StateError if any structural invariant is broken.
    void validate() const;

    bool operator==(const LoopState&) const = default;
};

/// round(j (m-1) / (q-1)) for j = 0..q-1, deduplicated. Needs 2 <= q <= m.
std::vector<FrameIndex> initial_guiding_set(std::size_t num_frames, std::size_t count);

/// Seeded sample of round(fraction * m) frames, never touching `exempt`.
std::vector<FrameIndex> make_test_split(std::size_t num_frames, double fraction, std::uint64_t seed,
                                        std::span<const FrameIndex> exempt);

struct LoopOptions {
    std::size_t init_count = 10;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
    StrategyConfig strategy;
    double stop_fraction = 0.8;
};

/// Fresh loop with the initial guiding set pending annotation.
LoopState init_loop(const VideoMeta& meta, const LoopOptions& options);

struct ScoredFrame {
    FrameScoreBundle bundle;
    double weight = 0.0;
    double weighted_score = 0.0;
};

struct IterationOutcome {
    LoopState state;
    std::vector<FrameIndex> batch;
    std::vector<ScoredFrame> report; ///< every scored frame, ascending index
    double mu = 1.0;
};

/// One query step. `detections` must hold every queryable frame; test-frame
/// detections are optional and only serve as temporal neighbors. The input
/// state is left untouched.
IterationOutcome run_iteration(const LoopState& state, const DetectionSet& detections);

/// Moves annotated pending frames from unlabeled to labeled. Partial batches
/// are accepted; the iteration counter advances once the batch is complete.
/// Resubmitting a frame's stored annotation is a no-op; anything else that
/// touches a frame outside the pending batch is a ConflictError.
LoopState ingest_annotations(const LoopState& state, std::span<const GroundTruthFrame> labels);

struct TrainingDirective {
    std::size_t iteration = 0;
    std::size_t epochs = 10;
    std::size_t minibatch_size = 20;
    double learning_rate = 0.001;
    std::vector<FrameIndex> queried;
    /// One mini-batch per epoch: the queried frames plus a guiding-set sample.
    std::vector<std::vector<FrameIndex>> batches;
};

/// Incremental training plan for the latest completed query batch.
TrainingDirective training_directive(const LoopState& state, std::uint64_t seed);

} // namespace vidal
