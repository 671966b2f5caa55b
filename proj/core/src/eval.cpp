#include "vidal/eval.hpp"

#include "vidal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vidal {

std::vector<double> EvalConfig::default_thresholds()
{
    return parse_thresholds("0.5:0.05:0.95");
}

std::vector<double> EvalConfig::parse_thresholds(std::string_view text)
{
    auto to_double = [](std::string_view part) {
        const std::string s(part);
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty())
            throw ValidationError("bad IoU threshold '" + s + "'");
        return value;
    };

    std::vector<double> out;
    if (text.find(':') != std::string_view::npos) {
        const auto first = text.find(':');
        const auto second = text.find(':', first + 1);
        if (second == std::string_view::npos)
            throw ValidationError("threshold range must look like lo:step:hi");
        const double lo = to_double(text.substr(0, first));
        const double step = to_double(text.substr(first + 1, second - first - 1));
        const double hi = to_double(text.substr(second + 1));
        if (!(step > 0.0))
            throw ValidationError("threshold step must be positive");
        for (int i = 0;; ++i) {
            const double value = std::round((lo + i * step) * 1e12) / 1e12;
            if (value > hi + 1e-9)
                break;
            out.push_back(value);
        }
    } else {
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto end = std::min(text.find(',', start), text.size());
            out.push_back(to_double(text.substr(start, end - start)));
            start = end + 1;
        }
    }
    EvalConfig{out}.validate();
    return out;
}

void EvalConfig::validate() const
{
    if (iou_thresholds.empty())
        throw ValidationError("at least one IoU threshold is required");
    for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
        const double t = iou_thresholds[i];
        if (!(t > 0.0 && t < 1.0))
            throw ValidationError("IoU thresholds must lie in (0, 1)");
        if (i > 0 && !(t > iou_thresholds[i - 1]))
            throw ValidationError("IoU thresholds must be strictly increasing");
    }
}

double box_iou(const BBox& a, const BBox& b)
{
    const double w = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
    const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
    const double inter = (w > 0.0 && h > 0.0) ? w * h : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (!(uni > 0.0))
        return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double average_precision(std::span<const RankedDetection> detections, std::size_t num_ground_truth)
{
    if (num_ground_truth == 0)
        return detections.empty() ? 1.0 : 0.0;

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].confidence > detections[b].confidence;
    });

    // best[j]: max precision among ranks whose recall reaches j / 10
    std::vector<double> best(EvalConfig::kRecallPoints, 0.0);
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (detections[order[rank]].true_positive)
            ++tp;
        const double precision = static_cast<double>(tp) / static_cast<double>(rank + 1);
        for (int j = 0; j < EvalConfig::kRecallPoints; ++j) {
            // recall >= j/10, compared exactly in integers
            if (10 * tp >= static_cast<std::size_t>(j) * num_ground_truth)
                best[j] = std::max(best[j], precision);
        }
    }
    return std::accumulate(best.begin(), best.end(), 0.0) / EvalConfig::kRecallPoints;
}

std::vector<bool> match_frame(std::span<const BBox> detections, std::span<const double> confidences,
                              std::span<const BBox> ground_truth, double iou_threshold)
{
    if (detections.size() != confidences.size())
        throw ValidationError("detections and confidences differ in length");

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return confidences[a] > confidences[b]; });

    std::vector<bool> taken(ground_truth.size(), false);
    std::vector<bool> tp(detections.size(), false);
    for (const auto d : order) {
        double best_iou = -1.0;
        std::size_t best = ground_truth.size();
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (taken[g])
                continue;
            const double iou = box_iou(detections[d], ground_truth[g]);
            if (iou >= iou_threshold && iou > best_iou) {
                best_iou = iou;
                best = g;
            }
        }
        if (best < ground_truth.size()) {
            taken[best] = true;
            tp[d] = true;
        }
    }
    return tp;
}

MapReport mean_ap(const std::map<FrameIndex, FrameDetections>& predictions,
                  const std::map<FrameIndex, GroundTruthFrame>& ground_truth, std::size_t num_classes,
                  const EvalConfig& config)
{
    config.validate();
    if (ground_truth.empty())
        throw ValidationError("mAP needs ground truth for at least one frame");

    std::vector<std::size_t> gt_per_class(num_classes, 0);
    std::vector<std::size_t> pred_per_class(num_classes, 0);
    for (const auto& [frame, gt] : ground_truth) {
        for (const auto& object : gt.objects) {
            if (object.class_index >= num_classes)
                throw ValidationError("ground-truth class index out of range in frame " + std::to_string(frame));
            ++gt_per_class[object.class_index];
        }
        const auto it = predictions.find(frame);
        if (it == predictions.end())
            continue;
        for (const auto& d : it->second.detections) {
            if (d.probs.size() != num_classes)
                throw ValidationError("prediction in frame " + std::to_string(frame) + " has the wrong class count");
            ++pred_per_class[d.probs.argmax()];
        }
    }

    MapReport report;
    report.thresholds = config.iou_thresholds;
    for (ClassIndex c = 0; c < num_classes; ++c) {
        if (gt_per_class[c] > 0)
            report.classes.push_back(c);
    }

    double total = 0.0;
    std::size_t cells = 0;
    for (const auto c : report.classes) {
        std::vector<double> row;
        for (const double threshold : config.iou_thresholds) {
            std::vector<RankedDetection> ranked;
            for (const auto& [frame, gt] : ground_truth) {
                std::vector<BBox> gt_boxes;
                for (const auto& object : gt.objects) {
                    if (object.class_index == c)
                        gt_boxes.push_back(object.bbox);
                }
                const auto it = predictions.find(frame);
                if (it == predictions.end())
                    continue;
                std::vector<BBox> boxes;
                std::vector<double> confidences;
                for (const auto& d : it->second.detections) {
                    if (d.probs.argmax() == c) {
                        boxes.push_back(d.bbox);
                        confidences.push_back(d.probs.max_prob());
                    }
                }
                const auto tp = match_frame(boxes, confidences, gt_boxes, threshold);
                for (std::size_t i = 0; i < boxes.size(); ++i)
                    ranked.push_back({confidences[i], tp[i]});
            }
            const double ap = average_precision(ranked, gt_per_class[c]);
            row.push_back(ap);
            total += ap;
            ++cells;
        }
        report.ap.push_back(std::move(row));
    }
    if (cells == 0) {
        // no positives anywhere: only an empty prediction set is correct
        const bool any = std::any_of(pred_per_class.begin(), pred_per_class.end(), [](std::size_t n) { return n > 0; });
        report.map = any ? 0.0 : 1.0;
    } else {
        report.map = total / static_cast<double>(cells);
    }
    return report;
}

} // namespace vidal
