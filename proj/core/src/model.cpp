#include "vidal/model.hpp"

#include "vidal/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace vidal {

void VideoMeta::validate() const
{
    if (width < 1 || height < 1)
        throw ValidationError("video frame size must be at least 1x1, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    if (num_frames < 2)
        throw ValidationError("video needs at least 2 frames, got " + std::to_string(num_frames));
    if (class_names.size() < 2)
        throw ValidationError("class list needs at least 2 entries, got " + std::to_string(class_names.size()));
}

BBox BBox::from_corners(double x0, double y0, double x1, double y1)
{
    return {(x0 + x1) / 2.0, (y0 + y1) / 2.0, std::abs(x1 - x0), std::abs(y1 - y0)};
}

void BBox::validate() const
{
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(bw) || !std::isfinite(bh))
        throw ValidationError("bounding box has non-finite coordinates");
    if (bw < 0.0 || bh < 0.0)
        throw ValidationError("bounding box has negative size");
}

ClassDistribution::ClassDistribution(std::vector<double> probs) : probs_(std::move(probs))
{
    if (probs_.size() < 2)
        throw ValidationError("class distribution needs at least two classes");
    for (const double p : probs_) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
            throw ValidationError("class probability outside [0, 1]");
    }
    const double sum = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw ValidationError("class distribution sums to " + std::to_string(sum) + ", expected 1");
    // values already normalized to rounding error are left alone so that
    // re-parsing a written distribution is exact
    if (std::abs(sum - 1.0) > 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(probs_.size())) {
        for (double& p : probs_)
            p /= sum;
    }
}

ClassDistribution ClassDistribution::one_hot(std::size_t k, ClassIndex cls)
{
    if (cls >= k)
        throw ValidationError("class index " + std::to_string(cls) + " out of range for k=" + std::to_string(k));
    std::vector<double> probs(k, 0.0);
    probs[cls] = 1.0;
    return ClassDistribution(std::move(probs));
}

ClassIndex ClassDistribution::argmax() const noexcept
{
    // max_element returns the first maximum, i.e. the lowest index on ties
    return static_cast<ClassIndex>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double ClassDistribution::max_prob() const noexcept
{
    return probs_.empty() ? 0.0 : *std::max_element(probs_.begin(), probs_.end());
}

FrameDetections GroundTruthFrame::as_detections(std::size_t num_classes) const
{
    FrameDetections out{frame_index, {}};
    out.detections.reserve(objects.size());
    for (const auto& object : objects)
        out.detections.push_back({object.bbox, ClassDistribution::one_hot(num_classes, object.class_index)});
    return out;
}

void GroundTruthFrame::validate(const VideoMeta& meta) const
{
    if (frame_index >= meta.num_frames)
        throw ValidationError("frame " + std::to_string(frame_index) + " outside the video");
    for (const auto& object : objects) {
        object.bbox.validate();
        if (object.class_index >= meta.num_classes())
            throw ValidationError("frame " + std::to_string(frame_index) + ": class index " +
                                  std::to_string(object.class_index) + " out of range");
    }
}

FrameDetections filter_detections(const FrameDetections& frame, double threshold)
{
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw ValidationError("confidence threshold must lie in [0, 1]");
    FrameDetections out{frame.frame_index, {}};
    std::copy_if(frame.detections.begin(), frame.detections.end(), std::back_inserter(out.detections),
                 [threshold](const Detection& d) { return d.probs.max_prob() >= threshold; });
    return out;
}

std::vector<std::size_t> class_counts(const FrameDetections& frame, std::size_t num_classes)
{
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& d : frame.detections) {
        const auto cls = d.probs.argmax();
        if (cls < num_classes)
            ++counts[cls];
    }
    return counts;
}

std::vector<std::size_t> class_counts(const GroundTruthFrame& frame, std::size_t num_classes)
{
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& object : frame.objects) {
        if (object.class_index < num_classes)
            ++counts[object.class_index];
    }
    return counts;
}

} // namespace vidal
