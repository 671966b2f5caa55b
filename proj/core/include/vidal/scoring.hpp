#pragma once

#include "vidal/model.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace vidal {

/// Entropy of a class distribution in nats (0 log 0 = 0). When `normalize`
/// is set the result is divided by log k and lies in [0, 1].
double instance_entropy(const ClassDistribution& probs, bool normalize = true);

/// Max-aggregated entropy over detections assigned (argmax) to `cls`;
/// 0 when the class has no detections. Expects a confidence-filtered frame.
double classification_score(const FrameDetections& frame, ClassIndex cls, bool normalize = true);

/// Estimated instance count per class over the whole video: straight lines
/// between consecutive annotated frames, held constant past the outermost ones.
class InstanceCurve {
public:
    struct Node {
        FrameIndex frame;
        std::vector<std::size_t> counts;
    };

    InstanceCurve() = default;
    InstanceCurve(std::vector<Node> nodes, std::size_t num_frames);

    double at(FrameIndex frame, ClassIndex cls) const;
    std::size_t num_frames() const noexcept { return num_frames_; }
    std::size_t num_classes() const noexcept { return nodes_.empty() ? 0 : nodes_.front().counts.size(); }

private:
    std::vector<Node> nodes_;
    std::size_t num_frames_ = 0;
};

/// Fits the curve through `labeled` (sorted, unique frames). Throws on an empty set.
InstanceCurve fit_instance_curve(std::vector<InstanceCurve::Node> labeled, std::size_t num_frames);

/// min(1, |n - n_est| / n_est); for n_est == 0 the result is 0 if n == 0 else 1.
double instance_discontinuity(std::size_t n, double n_est);

/// Binary W x H occupancy grid, bit-packed per row.
class LocalizationMatrix {
public:
    LocalizationMatrix() = default;
    LocalizationMatrix(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    bool at(int x, int y) const;
    void set(int x, int y);
    /// Sets columns [x0, x1) of rows [y0, y1); bounds must already be clamped.
    void fill(int x0, int x1, int y0, int y1);

    std::size_t popcount() const noexcept;
    bool empty() const noexcept { return popcount() == 0; }

    /// Bit counts of a AND b and a OR b. Throws on a dimension mismatch.
    static std::pair<std::size_t, std::size_t> overlap(const LocalizationMatrix& a, const LocalizationMatrix& b);

    bool operator==(const LocalizationMatrix&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Union of the class-`cls` boxes. Edges are rounded half-up and clamped to
/// the frame, so a box covers columns [x0, x1) and rows [y0, y1).
LocalizationMatrix rasterize_class(const FrameDetections& frame, ClassIndex cls, const VideoMeta& meta);

/// Intersection over union of the set bits; 1 when both matrices are empty.
double matrix_iou(const LocalizationMatrix& a, const LocalizationMatrix& b);

/// 1 - mean IoU of `current` against the neighbors that are present.
/// Throws when both neighbors are absent.
double bbox_discontinuity(const LocalizationMatrix* previous, const LocalizationMatrix& current,
                          const LocalizationMatrix* next);

struct ClassScores {
    double classification = 0.0; ///< C
    double delta_n = 0.0;        ///< instance-count discontinuity
    double delta_h = 0.0;        ///< box discontinuity, 1 - mean IoU
    double aggregated = 0.0;     ///< S, filled in by the query strategy

    /// max(delta_h, delta_n)
    double localization() const noexcept { return delta_h > delta_n ? delta_h : delta_n; }
};

struct FrameScoreBundle {
    FrameIndex frame_index = 0;
    std::vector<ClassScores> per_class;
    double frame_score = 0.0; ///< max over classes of S

    /// Frame-level localization / classification signals (max over classes).
    double localization() const noexcept;
    double classification() const noexcept;
};

struct ScoringOptions {
    bool normalize_entropy = true;
};

/// Per-class C, delta_n and delta_h for frame `current`. `current` and the
/// neighbors must already be confidence-filtered (ground truth passes as is).
FrameScoreBundle score_frame(const FrameDetections* previous, const FrameDetections& current,
                             const FrameDetections* next, const InstanceCurve& curve, const VideoMeta& meta,
                             const ScoringOptions& options = {});

} // namespace vidal
