#pragma once

#include "vidal/loop.hpp"
#include "vidal/model.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vidal {

// Synthetic detector ---------------------------------------------------------

struct NoiseParams {
    double p_miss = 0.0;            ///< per-object drop probability
    double p_spurious = 0.0;        ///< expected spurious boxes per frame
    double jitter_sigma = 0.0;      ///< box noise std as a fraction of box size
    double class_temperature = 0.0; ///< 0 = one-hot

    NoiseParams scaled(double factor) const;
    bool operator==(const NoiseParams&) const = default;
};

struct NoiseRange {
    FrameIndex begin = 0; ///< inclusive
    FrameIndex end = 0;   ///< exclusive
    NoiseParams params;

    bool operator==(const NoiseRange&) const = default;
};

/// Detector error model over frame ranges that tile [0, m).
struct NoiseProfile {
    std::vector<NoiseRange> ranges;

    static NoiseProfile uniform(std::size_t num_frames, const NoiseParams& params);

    const NoiseParams& at(FrameIndex frame) const;
    void validate(std::size_t num_frames) const;
};

/// Noise shrinks near annotated frames: factor max(floor, min(1, d / d0)).
struct LearningDecay {
    double d0 = 1.0;
    double floor = 0.0;

    void validate() const;
};

/// Noise of frame `frame` given the frames the model has been trained on.
NoiseParams effective_noise(FrameIndex frame, const NoiseProfile& profile, const LearningDecay& decay,
                            const std::set<FrameIndex>& labeled);

/// Corrupts ground truth: drops, jitter, temperature-softened class
/// distributions and Poisson spurious boxes. Every object consumes the same
/// draws whatever the noise level, so outputs for one seed are monotone in
/// the noise parameters.
FrameDetections synthesize_detections(const GroundTruthFrame& gt, const NoiseParams& params, const VideoMeta& meta,
                                      std::uint64_t seed);

/// Softmax of a one-hot logit vector at temperature tau (tau = 0 gives one-hot).
ClassDistribution softened_one_hot(std::size_t k, ClassIndex cls, double tau);

struct SyntheticVideoOptions {
    std::size_t num_tracks = 6;
    double min_size = 12.0;
    double max_size = 40.0;
    double max_speed = 2.5;         ///< pixels per frame
    double min_lifetime = 0.3;      ///< fraction of the video a track stays visible
    std::uint64_t seed = 0;
};

/// Ground truth for a video of boxes moving at constant velocity and bouncing
/// off the frame edges; tracks appear and disappear so instance counts vary.
std::vector<GroundTruthFrame> make_synthetic_video(const VideoMeta& meta, const SyntheticVideoOptions& options);

// Adapters --------------------------------------------------------------------

struct DetectionRequest {
    std::size_t iteration = 0;
    std::vector<FrameIndex> required; ///< must all be answered
    std::vector<FrameIndex> optional; ///< kept when answered (test-frame neighbors)
};

class DetectorAdapter {
public:
    virtual ~DetectorAdapter() = default;
    virtual std::string name() const = 0;
    /// Raw detector answer; fetch_detections() validates it.
    virtual DetectionSet detect(const DetectionRequest& request, const LoopState& state) = 0;
};

/// Replays a detections document. A directory resolves to `iteration_<K>.json` inside it.
class FileAdapter : public DetectorAdapter {
public:
    explicit FileAdapter(std::filesystem::path path) : path_(std::move(path)) {}
    std::string name() const override { return "file"; }
    DetectionSet detect(const DetectionRequest& request, const LoopState& state) override;

private:
    std::filesystem::path path_;
};

/// Runs a shell command in `workdir` after writing request.json there; reads
/// detections.json back. A nonzero exit status is a failure.
class ExecAdapter : public DetectorAdapter {
public:
    ExecAdapter(std::string command, std::filesystem::path workdir, std::filesystem::path state_path);
    std::string name() const override { return "exec"; }
    DetectionSet detect(const DetectionRequest& request, const LoopState& state) override;

private:
    std::string command_;
    std::filesystem::path workdir_;
    std::filesystem::path state_path_;
};

/// POSTs {iteration, frame_indices} as JSON; the body of the reply is a detections document.
class HttpAdapter : public DetectorAdapter {
public:
    explicit HttpAdapter(std::string url);
    std::string name() const override { return "http"; }
    DetectionSet detect(const DetectionRequest& request, const LoopState& state) override;

private:
    std::string origin_;
    std::string path_;
};

/// In-process simulator: corrupts the ground truth of each requested frame
/// with the noise the current labeled set leaves it with.
class SyntheticAdapter : public DetectorAdapter {
public:
    SyntheticAdapter(std::vector<GroundTruthFrame> ground_truth, NoiseProfile profile, LearningDecay decay,
                     std::uint64_t seed);
    std::string name() const override { return "synthetic"; }
    DetectionSet detect(const DetectionRequest& request, const LoopState& state) override;

    /// Detections of `frames` for a model trained on `labeled`, drawn from the stream `stream`.
    DetectionSet detect_frames(std::span<const FrameIndex> frames, const std::set<FrameIndex>& labeled,
                               const VideoMeta& meta, std::uint64_t stream) const;

private:
    std::vector<GroundTruthFrame> ground_truth_;
    NoiseProfile profile_;
    LearningDecay decay_;
    std::uint64_t seed_;
};

/// Asks the adapter and checks the answer: every required frame present,
/// distributions of length k, boxes valid. Unrequested frames are dropped.
DetectionSet fetch_detections(DetectorAdapter& adapter, const DetectionRequest& request, const LoopState& state);

/// Request for the next iteration: queryable frames required, test frames optional.
DetectionRequest next_request(const LoopState& state);

} // namespace vidal
