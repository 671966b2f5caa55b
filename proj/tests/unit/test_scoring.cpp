#include "support.hpp"
#include "vidal/error.hpp"
#include "vidal/scoring.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vidal;
using vidal::test::det;

namespace {

long double entropy_oracle(std::initializer_list<long double> p)
{
    long double h = 0;
    for (auto v : p) {
        if (v > 0)
            h -= v * std::log(v);
    }
    return h;
}

} // namespace

TEST(Entropy, Identities)
{
    EXPECT_EQ(instance_entropy(ClassDistribution({1.0, 0.0})), 0.0);
    EXPECT_NEAR(instance_entropy(ClassDistribution({0.5, 0.5})), 1.0, 1e-15);
    const long double raw = entropy_oracle({0.7L, 0.2L, 0.1L});
    EXPECT_NEAR(instance_entropy(ClassDistribution({0.7, 0.2, 0.1}), false), static_cast<double>(raw), 1e-12);
    EXPECT_NEAR(instance_entropy(ClassDistribution({0.7, 0.2, 0.1})), static_cast<double>(raw / std::log(3.0L)),
                1e-12);
    EXPECT_NEAR(instance_entropy(ClassDistribution({0.7, 0.2, 0.1})), 0.729846699162097535, 1e-9);
}

TEST(Entropy, ZeroOnlyForOneHotAndPermutationInvariant)
{
    Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> p(4);
        double s = 0;
        for (auto& v : p)
            s += (v = rng.uniform() + 1e-3);
        for (auto& v : p)
            v /= s;
        const double h = instance_entropy(ClassDistribution(p));
        EXPECT_GT(h, 0.0);
        EXPECT_LE(h, 1.0 + 1e-12);
        std::reverse(p.begin(), p.end());
        EXPECT_NEAR(instance_entropy(ClassDistribution(p)), h, 1e-14);
    }
    EXPECT_NEAR(instance_entropy(ClassDistribution({0.25, 0.25, 0.25, 0.25})), 1.0, 1e-15);
}

TEST(ClassificationScore, MaxOverAssignedDetections)
{
    FrameDetections f{0,
                      {det(0, 0, 1, 1, {0.9, 0.1}), det(0, 0, 1, 1, {0.6, 0.4}), det(0, 0, 1, 1, {0.2, 0.8})}};
    const double e1 = instance_entropy(ClassDistribution({0.9, 0.1}));
    const double e2 = instance_entropy(ClassDistribution({0.6, 0.4}));
    EXPECT_DOUBLE_EQ(classification_score(f, 0), std::max(e1, e2));
    EXPECT_DOUBLE_EQ(classification_score(f, 1), instance_entropy(ClassDistribution({0.2, 0.8})));
    EXPECT_EQ(classification_score(FrameDetections{}, 0), 0.0);
    FrameDetections tie{0, {det(0, 0, 1, 1, {0.5, 0.5})}};
    EXPECT_NEAR(classification_score(tie, 0), 1.0, 1e-15);
    EXPECT_EQ(classification_score(tie, 1), 0.0);
}

TEST(InstanceCurve, InterpolatesAndExtrapolates)
{
    const auto curve = fit_instance_curve({{0, {2, 0}}, {10, {4, 1}}}, 15);
    EXPECT_DOUBLE_EQ(curve.at(5, 0), 3.0);
    EXPECT_DOUBLE_EQ(curve.at(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(curve.at(10, 0), 4.0);
    EXPECT_DOUBLE_EQ(curve.at(12, 0), 4.0);
    EXPECT_DOUBLE_EQ(curve.at(5, 1), 0.5);

    const auto shifted = fit_instance_curve({{3, {1, 1}}, {7, {5, 1}}}, 12);
    EXPECT_DOUBLE_EQ(shifted.at(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(shifted.at(11, 0), 5.0);
    EXPECT_THROW(fit_instance_curve({}, 10), ValidationError);
}

TEST(InstanceCurve, ConvexCombinationBetweenNodes)
{
    Rng rng(21);
    std::vector<InstanceCurve::Node> nodes;
    for (FrameIndex f = 0; f < 100; f += 1 + rng.below(9))
        nodes.push_back({f, {static_cast<std::size_t>(rng.below(6))}});
    const auto curve = fit_instance_curve(nodes, 110);
    for (const auto& n : nodes)
        EXPECT_EQ(curve.at(n.frame, 0), static_cast<double>(n.counts[0]));
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double lo = std::min(nodes[i].counts[0], nodes[i + 1].counts[0]);
        const double hi = std::max(nodes[i].counts[0], nodes[i + 1].counts[0]);
        for (auto f = nodes[i].frame; f <= nodes[i + 1].frame; ++f) {
            EXPECT_GE(curve.at(f, 0), lo - 1e-12);
            EXPECT_LE(curve.at(f, 0), hi + 1e-12);
        }
    }
}

TEST(InstanceDiscontinuity, Examples)
{
    EXPECT_EQ(instance_discontinuity(5, 5.0), 0.0);
    EXPECT_EQ(instance_discontinuity(6, 4.0), 0.5);
    EXPECT_EQ(instance_discontinuity(10, 4.0), 1.0);
    EXPECT_EQ(instance_discontinuity(3, 0.0), 1.0);
    EXPECT_EQ(instance_discontinuity(0, 0.0), 0.0);
    double previous = 0.0;
    for (std::size_t n = 7; n < 30; ++n) {
        const double v = instance_discontinuity(n, 7.0);
        EXPECT_GE(v, previous);
        EXPECT_LE(v, 1.0);
        previous = v;
    }
}

TEST(Rasterize, SpecBox)
{
    const auto meta = test::make_meta(10, 10, 2);
    FrameDetections f{0, {det(5, 5, 4, 2, {1, 0})}};
    const auto h = rasterize_class(f, 0, meta);
    EXPECT_EQ(h.popcount(), 8u);
    for (int x = 3; x <= 6; ++x) {
        EXPECT_TRUE(h.at(x, 4));
        EXPECT_TRUE(h.at(x, 5));
    }
    EXPECT_FALSE(h.at(7, 4));
    EXPECT_FALSE(h.at(3, 6));
    EXPECT_EQ(rasterize_class(f, 1, meta).popcount(), 0u);
}

TEST(Rasterize, OutsideAndUnion)
{
    const auto meta = test::make_meta(10, 10, 2);
    FrameDetections outside{0, {det(-20, 5, 4, 4, {1, 0}), det(5, 30, 4, 4, {1, 0})}};
    EXPECT_TRUE(rasterize_class(outside, 0, meta).empty());
    FrameDetections one{0, {det(4, 4, 3, 5, {1, 0})}};
    FrameDetections two{0, {det(4, 4, 3, 5, {1, 0}), det(4, 4, 3, 5, {0.9, 0.1})}};
    EXPECT_EQ(rasterize_class(one, 0, meta), rasterize_class(two, 0, meta));
    FrameDetections edge{0, {det(9.5, 9.5, 5, 5, {1, 0})}};
    EXPECT_EQ(rasterize_class(edge, 0, meta).popcount(), 9u);
}

TEST(Rasterize, MatchesPixelOracleOnWideFrames)
{
    // widths that straddle the 64-bit word boundary
    Rng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = 60 + static_cast<int>(rng.below(140));
        const int h = 1 + static_cast<int>(rng.below(40));
        const auto meta = test::make_meta(w, h, 2);
        FrameDetections f;
        std::vector<BBox> boxes;
        for (int b = 0; b < 4; ++b) {
            BBox box{rng.uniform(-10, w + 10), rng.uniform(-10, h + 10), rng.uniform(0, 90), rng.uniform(0, 30)};
            boxes.push_back(box);
            f.detections.push_back({box, ClassDistribution::one_hot(2, 0)});
        }
        const auto grid = test::brute_raster(boxes, w, h);
        const auto m = rasterize_class(f, 0, meta);
        std::size_t count = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                ASSERT_EQ(m.at(x, y), grid[y][x]) << "trial " << trial << " pixel " << x << "," << y;
                count += grid[y][x];
            }
        }
        EXPECT_EQ(m.popcount(), count);
    }
}

TEST(MatrixIoU, Examples)
{
    LocalizationMatrix a(20, 20), b(20, 20);
    EXPECT_EQ(matrix_iou(a, b), 1.0);
    a.fill(0, 10, 0, 10);
    EXPECT_EQ(matrix_iou(a, a), 1.0);
    b.fill(10, 20, 10, 20);
    EXPECT_EQ(matrix_iou(a, b), 0.0);
    LocalizationMatrix c(20, 20);
    c.fill(5, 15, 0, 10);
    EXPECT_DOUBLE_EQ(matrix_iou(a, c), 50.0 / 150.0);
    EXPECT_DOUBLE_EQ(matrix_iou(c, a), matrix_iou(a, c));
    EXPECT_THROW(matrix_iou(a, LocalizationMatrix(20, 21)), ValidationError);
    LocalizationMatrix empty(20, 20);
    EXPECT_EQ(matrix_iou(a, empty), 0.0);
}

TEST(BBoxDiscontinuity, NeighborRules)
{
    LocalizationMatrix cur(10, 1), same(10, 1), p(10, 1), n(10, 1);
    cur.fill(0, 10, 0, 1);
    same.fill(0, 10, 0, 1);
    EXPECT_EQ(bbox_discontinuity(&same, cur, &same), 0.0);
    p.fill(0, 8, 0, 1);  // IoU 0.8
    n.fill(0, 6, 0, 1);  // IoU 0.6
    EXPECT_NEAR(bbox_discontinuity(&p, cur, &n), 0.3, 1e-15);
    LocalizationMatrix q(10, 1);
    q.fill(0, 9, 0, 1);
    EXPECT_NEAR(bbox_discontinuity(nullptr, cur, &q), 0.1, 1e-15);
    EXPECT_NEAR(bbox_discontinuity(&q, cur, nullptr), 0.1, 1e-15);
    EXPECT_THROW(bbox_discontinuity(nullptr, cur, nullptr), ValidationError);
}

TEST(ScoreFrame, PerfectDetectorScoresZero)
{
    const auto meta = test::make_meta(50, 40, 3, 2);
    GroundTruthFrame g0{0, {{BBox{10, 10, 8, 8}, 0}, {BBox{30, 20, 10, 6}, 1}}};
    GroundTruthFrame g1{1, {{BBox{11, 10, 8, 8}, 0}, {BBox{30, 21, 10, 6}, 1}}};
    GroundTruthFrame g2{2, {{BBox{12, 10, 8, 8}, 0}, {BBox{30, 22, 10, 6}, 1}}};
    const auto d0 = g0.as_detections(2), d1 = g1.as_detections(2), d2 = g2.as_detections(2);
    const auto curve = fit_instance_curve({{0, {1, 1}}, {2, {1, 1}}}, 3);
    const auto bundle = score_frame(&d0, d1, &d2, curve, meta);
    ASSERT_EQ(bundle.per_class.size(), 2u);
    EXPECT_EQ(bundle.frame_index, 1u);
    for (const auto& s : bundle.per_class) {
        EXPECT_EQ(s.classification, 0.0);
        EXPECT_EQ(s.delta_n, 0.0);
        EXPECT_GT(s.delta_h, 0.0);  // boxes moved by a pixel
        EXPECT_LT(s.delta_h, 0.3);
    }
    const auto still = score_frame(&d1, d1, &d1, curve, meta);
    for (const auto& s : still.per_class) {
        EXPECT_EQ(s.delta_h, 0.0);
    }
}

TEST(ScoreFrame, EmptyFrameAgainstOccupiedNeighbors)
{
    const auto meta = test::make_meta(50, 40, 3, 3);
    GroundTruthFrame g{0, {{BBox{10, 10, 8, 8}, 0}, {BBox{30, 20, 10, 6}, 1}}};
    const auto n0 = g.as_detections(3);
    auto n2 = n0;
    n2.frame_index = 2;
    const auto curve = fit_instance_curve({{0, {1, 1, 0}}, {2, {1, 1, 0}}}, 3);
    const auto bundle = score_frame(&n0, FrameDetections{1, {}}, &n2, curve, meta);
    EXPECT_EQ(bundle.per_class[0].delta_h, 1.0);
    EXPECT_EQ(bundle.per_class[1].delta_h, 1.0);
    EXPECT_EQ(bundle.per_class[2].delta_h, 0.0);
    EXPECT_EQ(bundle.per_class[0].delta_n, 1.0);
    EXPECT_EQ(bundle.per_class[2].delta_n, 0.0);
    EXPECT_THROW(score_frame(nullptr, n0, nullptr, curve, meta), ValidationError);
}

TEST(ScoreFrame, ComponentsStayInUnitRange)
{
    Rng rng(5);
    const auto meta = test::make_meta(64, 48, 3, 3);
    const auto curve = fit_instance_curve({{0, {1, 2, 0}}, {2, {3, 0, 1}}}, 3);
    auto random_frame = [&](FrameIndex idx) {
        FrameDetections f{idx, {}};
        const auto n = rng.below(6);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::vector<double> p{rng.uniform() + 0.01, rng.uniform() + 0.01, rng.uniform() + 0.01};
            const double s = p[0] + p[1] + p[2];
            for (auto& v : p)
                v /= s;
            f.detections.push_back(det(rng.uniform(0, 64), rng.uniform(0, 48), rng.uniform(1, 30),
                                       rng.uniform(1, 30), p));
        }
        return f;
    };
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_frame(0), b = random_frame(1), c = random_frame(2);
        const auto bundle = score_frame(&a, b, &c, curve, meta);
        for (const auto& s : bundle.per_class) {
            for (double v : {s.classification, s.delta_n, s.delta_h}) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
}
