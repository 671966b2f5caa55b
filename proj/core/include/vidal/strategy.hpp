#pragma once

#include "vidal/model.hpp"
#include "vidal/scoring.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace vidal {

enum class StrategyKind {
    passive,             ///< P: uniform random
    classification_only, ///< C: entropy only
    s1_dynamic,          ///< S1 with mu recomputed every iteration
    s1_fixed,            ///< S1 with a fixed mu
    s2,                  ///< S2: sum aggregation
};

std::string_view to_string(StrategyKind kind);
/// Accepts the CLI spellings (p, c, s1, s1-fixed, s2) and the long names.
StrategyKind parse_strategy(std::string_view text);

struct StrategyConfig {
    StrategyKind kind = StrategyKind::s1_dynamic;
    double fixed_mu = 1.0;
    std::size_t batch_size = 10;
    std::uint64_t rng_seed = 0;

    void validate() const;

    bool operator==(const StrategyConfig&) const = default;
};

inline constexpr double kMinimumMu = 1e-9;

/// Mean frame localization uncertainty over mean frame classification
/// uncertainty. 1 when the classification mean is 0, clamped below at 1e-9.
double compute_mu(std::span<const FrameScoreBundle> unlabeled);

/// |max(delta_h, delta_n) - mu * c|
double aggregate_s1(double delta_h, double delta_n, double c, double mu);
/// max(delta_h, delta_n) + c
double aggregate_s2(double delta_h, double delta_n, double c);

/// Fills every ClassScores::aggregated and the frame score of each bundle.
/// `mu` is only read by the S1 strategies. Passive leaves all scores at 0.
void aggregate_bundles(std::span<FrameScoreBundle> bundles, const StrategyConfig& config, double mu);

/// mu the strategy uses this round: computed for s1_dynamic, fixed_mu for s1_fixed, 1 otherwise.
double strategy_mu(std::span<const FrameScoreBundle> unlabeled, const StrategyConfig& config);

class WeightCurve {
public:
    WeightCurve() = default;
    explicit WeightCurve(std::vector<double> weights) : weights_(std::move(weights)) {}

    double at(FrameIndex frame) const { return weights_.at(frame); }
    std::size_t size() const noexcept { return weights_.size(); }
    std::span<const double> values() const noexcept { return weights_; }

private:
    std::vector<double> weights_;
};

/// Zero on every guiding frame, rising linearly to the midpoint of each gap.
/// Before the first / after the last guiding frame the ramp has the slope of
/// half the mean guiding gap and saturates at 1.
WeightCurve build_weight_curve(std::span<const FrameIndex> guiding, std::size_t num_frames);

/// Picks the query batch out of `unlabeled`. Scoring strategies rank by
/// frame_score * weight (ties to the lower index); passive draws a seeded
/// uniform sample. Bundles must cover every unlabeled frame (any order).
std::vector<FrameIndex> weighted_select(std::span<const FrameScoreBundle> bundles, const WeightCurve& weights,
                                        const StrategyConfig& config, std::span<const FrameIndex> unlabeled);

} // namespace vidal
