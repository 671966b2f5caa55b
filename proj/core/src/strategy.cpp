#include "vidal/strategy.hpp"

#include "vidal/error.hpp"
#include "vidal/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace vidal {

std::string_view to_string(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::passive: return "p";
    case StrategyKind::classification_only: return "c";
    case StrategyKind::s1_dynamic: return "s1";
    case StrategyKind::s1_fixed: return "s1-fixed";
    case StrategyKind::s2: return "s2";
    }
    return "?";
}

StrategyKind parse_strategy(std::string_view text)
{
    if (text == "p" || text == "passive")
        return StrategyKind::passive;
    if (text == "c" || text == "classification_only" || text == "classification")
        return StrategyKind::classification_only;
    if (text == "s1" || text == "s1_dynamic")
        return StrategyKind::s1_dynamic;
    if (text == "s1-fixed" || text == "s1_fixed")
        return StrategyKind::s1_fixed;
    if (text == "s2")
        return StrategyKind::s2;
    throw ValidationError("unknown strategy '" + std::string(text) + "' (expected p, c, s1, s1-fixed or s2)");
}

void StrategyConfig::validate() const
{
    if (batch_size < 1)
        throw ValidationError("batch size must be at least 1");
    if (!(fixed_mu > 0.0) || !std::isfinite(fixed_mu))
        throw ValidationError("fixed mu must be a positive number");
}

double compute_mu(std::span<const FrameScoreBundle> unlabeled)
{
    if (unlabeled.empty())
        throw ValidationError("mu is undefined without unlabeled frames");
    double localization = 0.0;
    double classification = 0.0;
    for (const auto& bundle : unlabeled) {
        localization += bundle.localization();
        classification += bundle.classification();
    }
    const double n = static_cast<double>(unlabeled.size());
    localization /= n;
    classification /= n;
    if (classification == 0.0)
        return 1.0;
    return std::max(kMinimumMu, localization / classification);
}

double aggregate_s1(double delta_h, double delta_n, double c, double mu)
{
    return std::abs(std::max(delta_h, delta_n) - mu * c);
}

double aggregate_s2(double delta_h, double delta_n, double c)
{
    return std::max(delta_h, delta_n) + c;
}

double strategy_mu(std::span<const FrameScoreBundle> unlabeled, const StrategyConfig& config)
{
    switch (config.kind) {
    case StrategyKind::s1_dynamic: return compute_mu(unlabeled);
    case StrategyKind::s1_fixed: return config.fixed_mu;
    default: return 1.0;
    }
}

void aggregate_bundles(std::span<FrameScoreBundle> bundles, const StrategyConfig& config, double mu)
{
    for (auto& bundle : bundles) {
        double best = 0.0;
        for (auto& c : bundle.per_class) {
            switch (config.kind) {
            case StrategyKind::passive: c.aggregated = 0.0; break;
            case StrategyKind::classification_only: c.aggregated = c.classification; break;
            case StrategyKind::s1_dynamic:
            case StrategyKind::s1_fixed: c.aggregated = aggregate_s1(c.delta_h, c.delta_n, c.classification, mu); break;
            case StrategyKind::s2: c.aggregated = aggregate_s2(c.delta_h, c.delta_n, c.classification); break;
            }
            best = std::max(best, c.aggregated);
        }
        bundle.frame_score = best;
    }
}

WeightCurve build_weight_curve(std::span<const FrameIndex> guiding, std::size_t num_frames)
{
    if (guiding.empty())
        throw ValidationError("weight curve needs at least one guiding frame");
    std::vector<FrameIndex> nodes(guiding.begin(), guiding.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    if (nodes.back() >= num_frames)
        throw ValidationError("guiding frame " + std::to_string(nodes.back()) + " outside the video");

    std::vector<double> weights(num_frames, 0.0);

    for (std::size_t g = 0; g + 1 < nodes.size(); ++g) {
        const FrameIndex a = nodes[g];
        const FrameIndex b = nodes[g + 1];
        const double gap = static_cast<double>(b - a);
        for (FrameIndex i = a + 1; i < b; ++i)
            weights[i] = 2.0 * static_cast<double>(std::min(i - a, b - i)) / gap;
    }

    const double mean_gap = nodes.size() > 1
        ? static_cast<double>(nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1)
        : static_cast<double>(num_frames);
    const double ramp = std::max(1.0, std::ceil(mean_gap / 2.0));
    for (FrameIndex i = 0; i < nodes.front(); ++i)
        weights[i] = std::min(1.0, static_cast<double>(nodes.front() - i) / ramp);
    for (FrameIndex i = nodes.back() + 1; i < num_frames; ++i)
        weights[i] = std::min(1.0, static_cast<double>(i - nodes.back()) / ramp);

    return WeightCurve(std::move(weights));
}

std::vector<FrameIndex> weighted_select(std::span<const FrameScoreBundle> bundles, const WeightCurve& weights,
                                        const StrategyConfig& config, std::span<const FrameIndex> unlabeled)
{
    config.validate();
    if (unlabeled.empty())
        throw ValidationError("no unlabeled frames to select from");

    std::vector<FrameIndex> pool(unlabeled.begin(), unlabeled.end());
    std::sort(pool.begin(), pool.end());
    const std::size_t count = std::min(config.batch_size, pool.size());

    if (config.kind == StrategyKind::passive) {
        Rng rng(config.rng_seed);
        auto picked = rng.sample(std::move(pool), count);
        std::sort(picked.begin(), picked.end());
        return picked;
    }

    std::map<FrameIndex, double> score_of;
    for (const auto& bundle : bundles)
        score_of[bundle.frame_index] = bundle.frame_score;

    std::vector<std::pair<double, FrameIndex>> ranked;
    ranked.reserve(pool.size());
    for (const auto frame : pool) {
        const auto it = score_of.find(frame);
        if (it == score_of.end())
            throw ValidationError("no score for unlabeled frame " + std::to_string(frame));
        ranked.emplace_back(it->second * weights.at(frame), frame);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });

    std::vector<FrameIndex> batch;
    batch.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        batch.push_back(ranked[i].second);
    return batch;
}

} // namespace vidal
