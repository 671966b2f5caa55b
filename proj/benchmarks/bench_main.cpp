#include "vidal/detector.hpp"
#include "vidal/eval.hpp"
#include "vidal/loop.hpp"
#include "vidal/random.hpp"
#include "vidal/scoring.hpp"
#include "vidal/strategy.hpp"

#include <benchmark/benchmark.h>

using namespace vidal;

namespace {

VideoMeta meta_of(int w, int h, std::size_t m)
{
    return {w, h, m, {"a", "b", "c"}};
}

std::vector<GroundTruthFrame> video(const VideoMeta& meta)
{
    SyntheticVideoOptions o;
    o.seed = 1;
    o.num_tracks = 10;
    o.min_size = meta.width / 20.0;
    o.max_size = meta.width / 6.0;
    return make_synthetic_video(meta, o);
}

void BM_RasterizeIoU(benchmark::State& state)
{
    const auto meta = meta_of(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4, 2);
    const auto gt = video(meta);
    const auto a = gt[0].as_detections(3);
    const auto b = gt[1].as_detections(3);
    for (auto _ : state) {
        const auto ha = rasterize_class(a, 0, meta);
        const auto hb = rasterize_class(b, 0, meta);
        benchmark::DoNotOptimize(matrix_iou(ha, hb));
    }
}
BENCHMARK(BM_RasterizeIoU)->Arg(160)->Arg(640)->Arg(1920);

void BM_ScoreFrame(benchmark::State& state)
{
    const auto meta = meta_of(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 9 / 16, 3);
    const auto gt = video(meta);
    const NoiseParams noise{0.2, 1.0, 0.1, 0.5};
    const auto prev = gt[0].as_detections(3);
    const auto cur = filter_detections(synthesize_detections(gt[1], noise, meta, 7), 0.5);
    const auto next = gt[2].as_detections(3);
    const auto curve = fit_instance_curve({{0, class_counts(gt[0], 3)}, {2, class_counts(gt[2], 3)}}, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(score_frame(&prev, cur, &next, curve, meta));
}
BENCHMARK(BM_ScoreFrame)->Arg(640)->Arg(1920);

void BM_WeightedSelect(benchmark::State& state)
{
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto guiding = initial_guiding_set(m, 10);
    const auto weights = build_weight_curve(guiding, m);
    Rng rng(3);
    std::vector<FrameScoreBundle> bundles;
    std::vector<FrameIndex> unlabeled;
    for (FrameIndex f = 0; f < m; ++f) {
        if (std::binary_search(guiding.begin(), guiding.end(), f))
            continue;
        FrameScoreBundle b;
        b.frame_index = f;
        b.frame_score = rng.uniform();
        bundles.push_back(b);
        unlabeled.push_back(f);
    }
    const StrategyConfig config{StrategyKind::s1_dynamic, 1.0, 10, 0};
    for (auto _ : state)
        benchmark::DoNotOptimize(weighted_select(bundles, weights, config, unlabeled));
}
BENCHMARK(BM_WeightedSelect)->Arg(500)->Arg(10000);

void BM_MeanAP(benchmark::State& state)
{
    const auto meta = meta_of(640, 480, static_cast<std::size_t>(state.range(0)));
    const auto gt = video(meta);
    std::map<FrameIndex, GroundTruthFrame> truth;
    std::map<FrameIndex, FrameDetections> predictions;
    for (const auto& g : gt) {
        truth[g.frame_index] = g;
        predictions[g.frame_index] = synthesize_detections(g, {0.1, 1.0, 0.1, 0.5}, meta, g.frame_index);
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(mean_ap(predictions, truth, 3));
}
BENCHMARK(BM_MeanAP)->Arg(30)->Arg(300);

void BM_RunIteration(benchmark::State& state)
{
    const auto meta = meta_of(320, 240, static_cast<std::size_t>(state.range(0)));
    const auto gt = video(meta);
    SyntheticAdapter detector(gt, NoiseProfile::uniform(meta.num_frames, {0.2, 0.5, 0.1, 0.5}), {10, 0.1}, 5);
    auto s = init_loop(meta, {});
    std::vector<GroundTruthFrame> labels;
    for (auto f : s.pending)
        labels.push_back(gt[f]);
    s = ingest_annotations(s, labels);
    const auto detections = fetch_detections(detector, next_request(s), s);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_iteration(s, detections));
}
BENCHMARK(BM_RunIteration)->Arg(300)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
