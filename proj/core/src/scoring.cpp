#include "vidal/scoring.hpp"

#include "vidal/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <string>

namespace vidal {

double instance_entropy(const ClassDistribution& probs, bool normalize)
{
    double entropy = 0.0;
    for (const double p : probs.probs()) {
        if (p > 0.0)
            entropy -= p * std::log(p);
    }
    if (!normalize)
        return entropy;
    if (probs.size() < 2)
        return 0.0;
    return std::clamp(entropy / std::log(static_cast<double>(probs.size())), 0.0, 1.0);
}

double classification_score(const FrameDetections& frame, ClassIndex cls, bool normalize)
{
    double score = 0.0;
    for (const auto& d : frame.detections) {
        if (d.probs.argmax() == cls)
            score = std::max(score, instance_entropy(d.probs, normalize));
    }
    return score;
}

// InstanceCurve ---------------------------------------------------------------

InstanceCurve::InstanceCurve(std::vector<Node> nodes, std::size_t num_frames)
    : nodes_(std::move(nodes)), num_frames_(num_frames)
{
    if (nodes_.empty())
        throw ValidationError("instance curve needs at least one annotated frame");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].counts.size() != nodes_.front().counts.size())
            throw ValidationError("instance curve nodes disagree on the class count");
        if (nodes_[i].frame >= num_frames_)
            throw ValidationError("instance curve node " + std::to_string(nodes_[i].frame) + " outside the video");
        if (i > 0 && nodes_[i].frame <= nodes_[i - 1].frame)
            throw ValidationError("instance curve nodes must be sorted and unique");
    }
}

double InstanceCurve::at(FrameIndex frame, ClassIndex cls) const
{
    if (nodes_.empty())
        throw StateError("instance curve is empty");
    if (cls >= num_classes())
        throw ValidationError("class index out of range for instance curve");

    if (frame <= nodes_.front().frame)
        return static_cast<double>(nodes_.front().counts[cls]);
    if (frame >= nodes_.back().frame)
        return static_cast<double>(nodes_.back().counts[cls]);

    const auto upper = std::upper_bound(nodes_.begin(), nodes_.end(), frame,
                                        [](FrameIndex f, const Node& node) { return f < node.frame; });
    const Node& b = *upper;
    const Node& a = *(upper - 1);
    if (frame == a.frame)
        return static_cast<double>(a.counts[cls]);
    const double t = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
    return (1.0 - t) * static_cast<double>(a.counts[cls]) + t * static_cast<double>(b.counts[cls]);
}

InstanceCurve fit_instance_curve(std::vector<InstanceCurve::Node> labeled, std::size_t num_frames)
{
    return InstanceCurve(std::move(labeled), num_frames);
}

double instance_discontinuity(std::size_t n, double n_est)
{
    if (n_est < 0.0 || !std::isfinite(n_est))
        throw ValidationError("estimated instance count must be finite and non-negative");
    const double detected = static_cast<double>(n);
    if (n_est == 0.0)
        return n == 0 ? 0.0 : 1.0;
    return std::min(1.0, std::abs(detected - n_est) / n_est);
}

// LocalizationMatrix ---------------------------------------------------------

LocalizationMatrix::LocalizationMatrix(int width, int height)
    : width_(width), height_(height), words_per_row_((static_cast<std::size_t>(width) + 63) / 64)
{
    if (width < 1 || height < 1)
        throw ValidationError("localization matrix needs positive dimensions");
    bits_.assign(words_per_row_ * static_cast<std::size_t>(height), 0);
}

bool LocalizationMatrix::at(int x, int y) const
{
    if (x < 0 || y < 0 || x >= width_ || y >= height_)
        throw ValidationError("pixel outside the localization matrix");
    const auto word = bits_[static_cast<std::size_t>(y) * words_per_row_ + static_cast<std::size_t>(x) / 64];
    return (word >> (x % 64)) & 1U;
}

void LocalizationMatrix::set(int x, int y)
{
    fill(x, x + 1, y, y + 1);
}

void LocalizationMatrix::fill(int x0, int x1, int y0, int y1)
{
    if (x0 < 0 || y0 < 0 || x1 > width_ || y1 > height_)
        throw ValidationError("fill range outside the localization matrix");
    if (x0 >= x1 || y0 >= y1)
        return;

    const std::size_t first_word = static_cast<std::size_t>(x0) / 64;
    const std::size_t last_word = static_cast<std::size_t>(x1 - 1) / 64;
    for (int y = y0; y < y1; ++y) {
        std::uint64_t* row = bits_.data() + static_cast<std::size_t>(y) * words_per_row_;
        for (std::size_t w = first_word; w <= last_word; ++w) {
            const int lo = std::max(x0, static_cast<int>(w * 64)) - static_cast<int>(w * 64);
            const int hi = std::min(x1, static_cast<int>(w * 64 + 64)) - static_cast<int>(w * 64);
            const std::uint64_t upper = hi == 64 ? ~0ULL : ((1ULL << hi) - 1);
            const std::uint64_t lower = (1ULL << lo) - 1;
            row[w] |= upper & ~lower;
        }
    }
}

std::size_t LocalizationMatrix::popcount() const noexcept
{
    std::size_t count = 0;
    for (const auto word : bits_)
        count += static_cast<std::size_t>(std::popcount(word));
    return count;
}

std::pair<std::size_t, std::size_t> LocalizationMatrix::overlap(const LocalizationMatrix& a,
                                                                 const LocalizationMatrix& b)
{
    if (a.width_ != b.width_ || a.height_ != b.height_)
        throw ValidationError("localization matrices differ in size: " + std::to_string(a.width_) + "x" +
                              std::to_string(a.height_) + " vs " + std::to_string(b.width_) + "x" +
                              std::to_string(b.height_));
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.bits_.size(); ++i) {
        inter += static_cast<std::size_t>(std::popcount(a.bits_[i] & b.bits_[i]));
        uni += static_cast<std::size_t>(std::popcount(a.bits_[i] | b.bits_[i]));
    }
    return {inter, uni};
}

namespace {

int rounded_edge(double value, int limit)
{
    const double rounded = std::floor(value + 0.5);
    if (!(rounded > 0.0))
        return 0;
    if (rounded >= static_cast<double>(limit))
        return limit;
    return static_cast<int>(rounded);
}

} // namespace

LocalizationMatrix rasterize_class(const FrameDetections& frame, ClassIndex cls, const VideoMeta& meta)
{
    LocalizationMatrix matrix(meta.width, meta.height);
    for (const auto& d : frame.detections) {
        if (d.probs.argmax() != cls)
            continue;
        const int x0 = rounded_edge(d.bbox.left(), meta.width);
        const int x1 = rounded_edge(d.bbox.right(), meta.width);
        const int y0 = rounded_edge(d.bbox.top(), meta.height);
        const int y1 = rounded_edge(d.bbox.bottom(), meta.height);
        matrix.fill(x0, x1, y0, y1);
    }
    return matrix;
}

double matrix_iou(const LocalizationMatrix& a, const LocalizationMatrix& b)
{
    const auto [inter, uni] = LocalizationMatrix::overlap(a, b);
    if (uni == 0)
        return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double bbox_discontinuity(const LocalizationMatrix* previous, const LocalizationMatrix& current,
                          const LocalizationMatrix* next)
{
    if (previous == nullptr && next == nullptr)
        throw ValidationError("box discontinuity needs at least one neighboring frame");
    double sum = 0.0;
    int present = 0;
    for (const auto* neighbor : {previous, next}) {
        if (neighbor != nullptr) {
            sum += matrix_iou(current, *neighbor);
            ++present;
        }
    }
    return std::clamp(1.0 - sum / present, 0.0, 1.0);
}

// Frame bundles ----------------------------------------------------------------

double FrameScoreBundle::localization() const noexcept
{
    double value = 0.0;
    for (const auto& c : per_class)
        value = std::max(value, c.localization());
    return value;
}

double FrameScoreBundle::classification() const noexcept
{
    double value = 0.0;
    for (const auto& c : per_class)
        value = std::max(value, c.classification);
    return value;
}

FrameScoreBundle score_frame(const FrameDetections* previous, const FrameDetections& current,
                             const FrameDetections* next, const InstanceCurve& curve, const VideoMeta& meta,
                             const ScoringOptions& options)
{
    if (previous == nullptr && next == nullptr)
        throw ValidationError("frame " + std::to_string(current.frame_index) + " has no neighboring frame to score against");

    const std::size_t k = meta.num_classes();
    FrameScoreBundle bundle;
    bundle.frame_index = current.frame_index;
    bundle.per_class.resize(k);

    const auto counts = class_counts(current, k);
    for (ClassIndex c = 0; c < k; ++c) {
        auto& scores = bundle.per_class[c];
        scores.classification = classification_score(current, c, options.normalize_entropy);
        scores.delta_n = instance_discontinuity(counts[c], curve.at(current.frame_index, c));

        const auto here = rasterize_class(current, c, meta);
        std::optional<LocalizationMatrix> before;
        std::optional<LocalizationMatrix> after;
        if (previous != nullptr)
            before = rasterize_class(*previous, c, meta);
        if (next != nullptr)
            after = rasterize_class(*next, c, meta);
        scores.delta_h = bbox_discontinuity(before ? &*before : nullptr, here, after ? &*after : nullptr);
    }
    return bundle;
}

} // namespace vidal
