#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vidal {

using FrameIndex = std::size_t;
using ClassIndex = std::size_t;

/// Frame geometry and label space of one video piece.
struct VideoMeta {
    int width = 0;
    int height = 0;
    std::size_t num_frames = 0;
    std::vector<std::string> class_names;

    std::size_t num_classes() const noexcept { return class_names.size(); }

    /// Throws ValidationError unless W, H >= 1, m >= 2 and k >= 2.
    void validate() const;

    bool operator==(const VideoMeta&) const = default;
};

/// Axis-aligned box, center based, in pixels. May extend past the frame.
struct BBox {
    double cx = 0.0;
    double cy = 0.0;
    double bw = 0.0;
    double bh = 0.0;

    double left() const noexcept { return cx - bw / 2.0; }
    double right() const noexcept { return cx + bw / 2.0; }
    double top() const noexcept { return cy - bh / 2.0; }
    double bottom() const noexcept { return cy + bh / 2.0; }
    double area() const noexcept { return bw * bh; }

    static BBox from_corners(double x0, double y0, double x1, double y1);

    void validate() const;

    bool operator==(const BBox&) const = default;
};

/// Class probability vector. Construction checks the 1e-6 sum tolerance and
/// then renormalizes so the stored entries sum to 1.
class ClassDistribution {
public:
    static constexpr double kSumTolerance = 1e-6;

    ClassDistribution() = default;
    explicit ClassDistribution(std::vector<double> probs);

    /// Certain label: 1 at `cls`, 0 elsewhere.
    static ClassDistribution one_hot(std::size_t k, ClassIndex cls);

    std::span<const double> probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }

    /// Most probable class; ties resolve to the lowest index.
    ClassIndex argmax() const noexcept;
    double max_prob() const noexcept;

    bool operator==(const ClassDistribution&) const = default;

private:
    std::vector<double> probs_;
};

struct Detection {
    BBox bbox;
    ClassDistribution probs;

    bool operator==(const Detection&) const = default;
};

struct FrameDetections {
    FrameIndex frame_index = 0;
    std::vector<Detection> detections;

    bool operator==(const FrameDetections&) const = default;
};

struct LabeledObject {
    BBox bbox;
    ClassIndex class_index = 0;

    bool operator==(const LabeledObject&) const = default;
};

struct GroundTruthFrame {
    FrameIndex frame_index = 0;
    std::vector<LabeledObject> objects;

    /// Ground truth seen as detector output: same boxes, one-hot distributions.
    FrameDetections as_detections(std::size_t num_classes) const;

    void validate(const VideoMeta& meta) const;

    bool operator==(const GroundTruthFrame&) const = default;
};

inline constexpr double kDefaultConfidenceThreshold = 0.5;

/// Keeps detections whose maximum class probability is >= threshold, in order.
FrameDetections filter_detections(const FrameDetections& frame, double threshold);

/// Per-class count of detections, class = argmax of the distribution.
std::vector<std::size_t> class_counts(const FrameDetections& frame, std::size_t num_classes);

/// Per-class count of annotated objects.
std::vector<std::size_t> class_counts(const GroundTruthFrame& frame, std::size_t num_classes);

} // namespace vidal
