#pragma once

#include "vidal/model.hpp"

#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace vidal {

struct EvalConfig {
    std::vector<double> iou_thresholds = default_thresholds();
    static constexpr int kRecallPoints = 11;

    /// 0.50, 0.55, ..., 0.95
    static std::vector<double> default_thresholds();
    /// Parses "lo:step:hi" or a comma separated list.
    static std::vector<double> parse_thresholds(std::string_view text);

    void validate() const;
};

double box_iou(const BBox& a, const BBox& b);

struct RankedDetection {
    double confidence = 0.0;
    bool true_positive = false;
};

/// 11-point interpolated AP. Ranking is by confidence, descending; equal
/// confidences keep their input order. With no ground truth the result is 1
/// if there are no detections and 0 otherwise.
double average_precision(std::span<const RankedDetection> detections, std::size_t num_ground_truth);

/// Greedy matching for one class in one frame: detections taken by
/// confidence, each matched to the unmatched ground-truth box with the
/// highest IoU at or above the threshold. Returns TP flags in input order.
std::vector<bool> match_frame(std::span<const BBox> detections, std::span<const double> confidences,
                              std::span<const BBox> ground_truth, double iou_threshold);

struct MapReport {
    double map = 0.0;
    std::vector<ClassIndex> classes;      ///< classes that were averaged
    std::vector<double> thresholds;
    std::vector<std::vector<double>> ap;  ///< ap[class row][threshold]
};

/// Mean AP over classes and IoU thresholds. A detection's class is its argmax
/// and its confidence its max probability. Only classes with at least one
/// ground-truth object are averaged; predictions of absent classes are
/// ignored. Throws if there is no ground truth at all.
MapReport mean_ap(const std::map<FrameIndex, FrameDetections>& predictions,
                  const std::map<FrameIndex, GroundTruthFrame>& ground_truth, std::size_t num_classes,
                  const EvalConfig& config = {});

} // namespace vidal
