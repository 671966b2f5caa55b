#include "vidal/loop.hpp"

#include "vidal/error.hpp"
#include "vidal/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vidal {

namespace {

std::string frame_list(std::span<const FrameIndex> frames)
{
    std::string out;
    for (const auto f : frames) {
        if (!out.empty())
            out += ", ";
        out += std::to_string(f);
    }
    return out;
}

} // namespace

std::size_t LoopState::stop_target() const
{
    const double eligible = static_cast<double>(meta.num_frames - test.size());
    // the epsilon keeps 0.8 * 270 from rounding up to 217
    return static_cast<std::size_t>(std::ceil(stop_fraction * eligible - 1e-9));
}

std::vector<FrameIndex> LoopState::queryable() const
{
    std::vector<FrameIndex> out;
    for (const auto f : unlabeled) {
        if (std::find(pending.begin(), pending.end(), f) == pending.end())
            out.push_back(f);
    }
    return out;
}

void LoopState::validate() const
{
    meta.validate();
    strategy.validate();
    if (!(stop_fraction > 0.0 && stop_fraction <= 1.0))
        throw StateError("stop fraction must lie in (0, 1]");

    std::vector<int> seen(meta.num_frames, 0);
    for (const auto* set : {&labeled, &unlabeled, &test}) {
        for (const auto f : *set) {
            if (f >= meta.num_frames)
                throw StateError("frame " + std::to_string(f) + " outside the video");
            if (++seen[f] > 1)
                throw StateError("frame " + std::to_string(f) + " is in more than one of labeled/unlabeled/test");
        }
    }
    for (FrameIndex f = 0; f < meta.num_frames; ++f) {
        if (seen[f] == 0)
            throw StateError("frame " + std::to_string(f) + " is in none of labeled/unlabeled/test");
    }

    if (annotations.size() != labeled.size())
        throw StateError("annotation count does not match the labeled set");
    for (const auto& [frame, gt] : annotations) {
        if (!labeled.contains(frame))
            throw StateError("frame " + std::to_string(frame) + " is annotated but not labeled");
        if (gt.frame_index != frame)
            throw StateError("annotation keyed by frame " + std::to_string(frame) + " describes another frame");
        gt.validate(meta);
    }

    for (const auto f : pending) {
        if (!unlabeled.contains(f))
            throw StateError("pending frame " + std::to_string(f) + " is not unlabeled");
    }
    for (const auto& [frame, _] : pending_predictions) {
        if (std::find(pending.begin(), pending.end(), frame) == pending.end())
            throw StateError("prediction stored for frame " + std::to_string(frame) + " which is not pending");
    }

    std::vector<int> queried(meta.num_frames, 0);
    for (const auto& record : history) {
        if (record.weighted_scores.size() != record.frames.size() || record.frame_scores.size() != record.frames.size())
            throw StateError("query record scores do not match its frames");
        for (const auto f : record.frames) {
            if (f >= meta.num_frames || ++queried[f] > 1)
                throw StateError("frame " + std::to_string(f) + " queried more than once");
            const bool waiting = std::find(pending.begin(), pending.end(), f) != pending.end();
            if (!labeled.contains(f) && !waiting)
                throw StateError("queried frame " + std::to_string(f) + " is neither labeled nor pending");
        }
    }
}

std::vector<FrameIndex> initial_guiding_set(std::size_t num_frames, std::size_t count)
{
    if (count < 2)
        throw ValidationError("the initial guiding set needs at least 2 frames");
    if (count > num_frames)
        throw ValidationError("cannot pick " + std::to_string(count) + " guiding frames from " +
                              std::to_string(num_frames));
    std::vector<FrameIndex> frames;
    frames.reserve(count);
    const double span = static_cast<double>(num_frames - 1);
    for (std::size_t j = 0; j < count; ++j) {
        const double position = static_cast<double>(j) * span / static_cast<double>(count - 1);
        frames.push_back(static_cast<FrameIndex>(std::llround(position)));
    }
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    return frames;
}

std::vector<FrameIndex> make_test_split(std::size_t num_frames, double fraction, std::uint64_t seed,
                                        std::span<const FrameIndex> exempt)
{
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw ValidationError("test fraction must lie in [0, 1)");
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(num_frames)));

    std::vector<FrameIndex> candidates;
    for (FrameIndex f = 0; f < num_frames; ++f) {
        if (std::find(exempt.begin(), exempt.end(), f) == exempt.end())
            candidates.push_back(f);
    }
    if (count > candidates.size())
        throw ValidationError("test split of " + std::to_string(count) + " frames does not fit next to " +
                              std::to_string(num_frames - candidates.size()) + " guiding frames");

    Rng rng(derive_seed(seed, {0x7e57}));
    auto test = rng.sample(std::move(candidates), count);
    std::sort(test.begin(), test.end());
    return test;
}

LoopState init_loop(const VideoMeta& meta, const LoopOptions& options)
{
    meta.validate();
    options.strategy.validate();

    LoopState state;
    state.meta = meta;
    state.strategy = options.strategy;
    state.stop_fraction = options.stop_fraction;
    state.initial_guiding = initial_guiding_set(meta.num_frames, options.init_count);
    const auto test = make_test_split(meta.num_frames, options.test_fraction, options.seed, state.initial_guiding);
    state.test.insert(test.begin(), test.end());
    for (FrameIndex f = 0; f < meta.num_frames; ++f) {
        if (!state.test.contains(f))
            state.unlabeled.insert(f);
    }
    state.pending = state.initial_guiding;
    state.validate();
    return state;
}

namespace {

// Detections each frame contributes to scoring, or nothing when the frame
// cannot act as a neighbor.
std::vector<std::optional<FrameDetections>> scoring_inputs(const LoopState& state, const DetectionSet& detections)
{
    const std::size_t k = state.meta.num_classes();
    std::vector<std::optional<FrameDetections>> frames(state.meta.num_frames);
    for (const auto& [frame, gt] : state.annotations)
        frames[frame] = gt.as_detections(k);

    std::vector<FrameIndex> missing;
    for (const auto f : state.unlabeled) {
        const auto it = detections.find(f);
        if (it == detections.end()) {
            missing.push_back(f);
            continue;
        }
        frames[f] = filter_detections(it->second, state.confidence_threshold);
        frames[f]->frame_index = f;
    }
    if (!missing.empty())
        throw ValidationError("missing detections for unlabeled frame(s) " + frame_list(missing));

    if (state.test_as_neighbors) {
        for (const auto f : state.test) {
            const auto it = detections.find(f);
            if (it != detections.end()) {
                frames[f] = filter_detections(it->second, state.confidence_threshold);
                frames[f]->frame_index = f;
            }
        }
    }
    return frames;
}

} // namespace

IterationOutcome run_iteration(const LoopState& state, const DetectionSet& detections)
{
    if (state.stopped())
        throw StateError("stopped: " + std::to_string(state.labeled.size()) + " of " +
                         std::to_string(state.stop_target()) + " target frames already labeled");
    if (state.batch_pending())
        throw StateError("iteration " + std::to_string(state.iteration) + " still has " +
                         std::to_string(state.pending.size()) + " frame(s) awaiting annotation");
    if (state.labeled.empty())
        throw StateError("no labeled frames yet");

    const auto frames = scoring_inputs(state, detections);
    const std::size_t k = state.meta.num_classes();

    std::vector<InstanceCurve::Node> nodes;
    nodes.reserve(state.annotations.size());
    for (const auto& [frame, gt] : state.annotations)
        nodes.push_back({frame, class_counts(gt, k)});
    const auto curve = fit_instance_curve(std::move(nodes), state.meta.num_frames);

    const std::vector<FrameIndex> guiding(state.labeled.begin(), state.labeled.end());
    const auto weights = build_weight_curve(guiding, state.meta.num_frames);

    const auto pool = state.queryable();
    const ScoringOptions options{state.normalize_entropy};
    std::vector<FrameScoreBundle> bundles;
    bundles.reserve(pool.size());
    for (const auto f : pool) {
        const FrameDetections* previous = nullptr;
        const FrameDetections* next = nullptr;
        for (FrameIndex j = f; j-- > 0;) {
            if (frames[j]) {
                previous = &*frames[j];
                break;
            }
        }
        for (FrameIndex j = f + 1; j < frames.size(); ++j) {
            if (frames[j]) {
                next = &*frames[j];
                break;
            }
        }
        bundles.push_back(score_frame(previous, *frames[f], next, curve, state.meta, options));
    }

    const double mu = state.strategy.kind == StrategyKind::passive ? 1.0 : strategy_mu(bundles, state.strategy);
    aggregate_bundles(bundles, state.strategy, mu);

    StrategyConfig round = state.strategy;
    round.rng_seed = derive_seed(state.strategy.rng_seed, {state.iteration});
    round.batch_size = std::min(state.strategy.batch_size, state.stop_target() - state.labeled.size());
    const auto batch = weighted_select(bundles, weights, round, pool);

    IterationOutcome outcome;
    outcome.mu = mu;
    outcome.batch = batch;
    outcome.report.reserve(bundles.size());
    for (auto& bundle : bundles) {
        const double w = weights.at(bundle.frame_index);
        const double weighted = bundle.frame_score * w;
        outcome.report.push_back({std::move(bundle), w, weighted});
    }

    QueryRecord record{state.iteration, batch, {}, {}, mu};
    for (const auto f : batch) {
        const auto it = std::find_if(outcome.report.begin(), outcome.report.end(),
                                     [f](const ScoredFrame& s) { return s.bundle.frame_index == f; });
        record.frame_scores.push_back(it->bundle.frame_score);
        record.weighted_scores.push_back(it->weighted_score);
    }

    outcome.state = state;
    outcome.state.history.push_back(std::move(record));
    outcome.state.pending = batch;
    outcome.state.pending_predictions.clear();
    for (const auto f : batch)
        outcome.state.pending_predictions[f] = detections.at(f);
    return outcome;
}

LoopState ingest_annotations(const LoopState& state, std::span<const GroundTruthFrame> labels)
{
    LoopState next = state;
    for (const auto& label : labels) {
        const FrameIndex f = label.frame_index;
        if (state.labeled.contains(f) && state.annotations.at(f) == label)
            continue;
        if (next.labeled.contains(f)) {
            const bool earlier_in_call = !state.labeled.contains(f);
            throw ConflictError(earlier_in_call ? "duplicate annotation for frame " + std::to_string(f)
                                                : "frame " + std::to_string(f) + " is already annotated");
        }
        if (next.test.contains(f))
            throw ConflictError("frame " + std::to_string(f) + " belongs to the test set and cannot be annotated");
        const auto it = std::find(next.pending.begin(), next.pending.end(), f);
        if (it == next.pending.end())
            throw ConflictError("frame " + std::to_string(f) + " is not awaiting annotation");
        label.validate(next.meta);

        next.pending.erase(it);
        next.pending_predictions.erase(f);
        next.unlabeled.erase(f);
        next.labeled.insert(f);
        next.annotations[f] = label;
    }
    if (!labels.empty() && next.pending.empty() && !state.pending.empty())
        ++next.iteration;
    return next;
}

TrainingDirective training_directive(const LoopState& state, std::uint64_t seed)
{
    const QueryRecord* latest = nullptr;
    for (auto it = state.history.rbegin(); it != state.history.rend(); ++it) {
        const bool complete = std::all_of(it->frames.begin(), it->frames.end(),
                                          [&](FrameIndex f) { return state.labeled.contains(f); });
        if (complete) {
            latest = &*it;
            break;
        }
    }
    if (latest == nullptr)
        throw StateError("no completed query batch to train on");

    TrainingDirective directive;
    directive.iteration = latest->iteration;
    directive.queried = latest->frames;

    std::vector<FrameIndex> guiding;
    for (const auto f : state.labeled) {
        if (std::find(latest->frames.begin(), latest->frames.end(), f) == latest->frames.end())
            guiding.push_back(f);
    }
    const std::size_t fill = directive.minibatch_size > directive.queried.size()
        ? directive.minibatch_size - directive.queried.size()
        : 0;

    for (std::size_t epoch = 0; epoch < directive.epochs; ++epoch) {
        Rng rng(derive_seed(seed, {latest->iteration, epoch}));
        auto batch = directive.queried;
        const auto sample = rng.sample(guiding, fill);
        batch.insert(batch.end(), sample.begin(), sample.end());
        directive.batches.push_back(std::move(batch));
    }
    return directive;
}

} // namespace vidal
