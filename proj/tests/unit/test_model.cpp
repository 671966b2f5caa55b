#include "support.hpp"
#include "vidal/error.hpp"
#include "vidal/random.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace vidal;
using vidal::test::det;

TEST(VideoMeta, RejectsDegenerateShapes)
{
    EXPECT_NO_THROW(test::make_meta(1, 1, 2).validate());
    EXPECT_THROW(test::make_meta(0, 10, 5).validate(), ValidationError);
    EXPECT_THROW(test::make_meta(10, 10, 1).validate(), ValidationError);
    EXPECT_THROW(test::make_meta(10, 10, 5, 1).validate(), ValidationError);
}

TEST(BBox, CornersRoundTrip)
{
    const auto b = BBox::from_corners(2, 3, 10, 7);
    EXPECT_DOUBLE_EQ(b.cx, 6);
    EXPECT_DOUBLE_EQ(b.cy, 5);
    EXPECT_DOUBLE_EQ(b.bw, 8);
    EXPECT_DOUBLE_EQ(b.bh, 4);
    EXPECT_DOUBLE_EQ(b.left(), 2);
    EXPECT_DOUBLE_EQ(b.bottom(), 7);
    EXPECT_THROW((BBox{0, 0, -1, 2}.validate()), ValidationError);
    EXPECT_THROW((BBox{std::nan(""), 0, 1, 2}.validate()), ValidationError);
}

TEST(ClassDistribution, ToleranceAndRenormalization)
{
    ClassDistribution ok({0.3, 0.7 + 5e-7});
    EXPECT_NEAR(ok[0] + ok[1], 1.0, 1e-15);
    EXPECT_THROW(ClassDistribution({0.3, 0.7 + 2e-6}), ValidationError);
    EXPECT_THROW(ClassDistribution({-0.1, 1.1}), ValidationError);
    EXPECT_THROW(ClassDistribution({1.0}), ValidationError);
}

TEST(ClassDistribution, RenormalizationIsIdempotent)
{
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(5);
        for (auto& v : p)
            v = rng.uniform();
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p)
            v /= s;
        ClassDistribution once(p);
        ClassDistribution twice(std::vector<double>(once.probs().begin(), once.probs().end()));
        EXPECT_EQ(once, twice);
    }
}

TEST(ClassDistribution, ArgmaxTiesGoLow)
{
    EXPECT_EQ(ClassDistribution({0.5, 0.5}).argmax(), 0u);
    EXPECT_EQ(ClassDistribution({0.2, 0.4, 0.4}).argmax(), 1u);
    EXPECT_DOUBLE_EQ(ClassDistribution({0.2, 0.4, 0.4}).max_prob(), 0.4);
    EXPECT_EQ(ClassDistribution::one_hot(3, 2).argmax(), 2u);
}

TEST(FilterDetections, Examples)
{
    FrameDetections f{0, {det(1, 1, 1, 1, {0.9, 0.1}), det(1, 1, 1, 1, {0.4, 0.6}), det(1, 1, 1, 1, {0.6, 0.4})}};
    EXPECT_EQ(filter_detections(f, 0.0).detections.size(), 3u);
    FrameDetections h{0, {det(1, 1, 1, 1, {0.9, 0.05, 0.05}), det(1, 1, 1, 1, {0.4, 0.3, 0.3}),
                          det(1, 1, 1, 1, {0.6, 0.2, 0.2})}};
    const auto kept = filter_detections(h, 0.5);
    ASSERT_EQ(kept.detections.size(), 2u);
    EXPECT_DOUBLE_EQ(kept.detections[0].probs.max_prob(), 0.9);
    EXPECT_DOUBLE_EQ(kept.detections[1].probs.max_prob(), 0.6);
    EXPECT_TRUE(filter_detections(h, 1.0).detections.empty());
    EXPECT_EQ(filter_detections(kept, 0.5), kept);
}

TEST(ClassCounts, ArgmaxPerRow)
{
    const auto k = std::size_t{2};
    EXPECT_EQ(class_counts(FrameDetections{}, k), (std::vector<std::size_t>{0, 0}));
    FrameDetections three{0, {det(0, 0, 1, 1, {0.9, 0.1}), det(0, 0, 1, 1, {0.8, 0.2}), det(0, 0, 1, 1, {0.7, 0.3})}};
    EXPECT_EQ(class_counts(three, k), (std::vector<std::size_t>{3, 0}));
    FrameDetections mixed{0, {det(0, 0, 1, 1, {0.6, 0.4}), det(0, 0, 1, 1, {0.3, 0.7})}};
    EXPECT_EQ(class_counts(mixed, k), (std::vector<std::size_t>{1, 1}));

    GroundTruthFrame gt{4, {{BBox{1, 1, 2, 2}, 1}, {BBox{3, 3, 2, 2}, 1}}};
    EXPECT_EQ(class_counts(gt, 3), (std::vector<std::size_t>{0, 2, 0}));
    const auto as_det = gt.as_detections(3);
    EXPECT_EQ(as_det.frame_index, 4u);
    EXPECT_EQ(as_det.detections[0].probs, ClassDistribution::one_hot(3, 1));
}

TEST(GroundTruthFrame, Validation)
{
    const auto meta = test::make_meta(10, 10, 5, 2);
    EXPECT_NO_THROW((GroundTruthFrame{4, {{BBox{1, 1, 2, 2}, 1}}}.validate(meta)));
    EXPECT_THROW((GroundTruthFrame{5, {}}.validate(meta)), ValidationError);
    EXPECT_THROW((GroundTruthFrame{0, {{BBox{1, 1, 2, 2}, 2}}}.validate(meta)), ValidationError);
}

TEST(Random, DeterministicStreams)
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_NE(derive_seed(1, {2}), derive_seed(1, {3}));
    EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
    EXPECT_EQ(derive_seed(9, {4}), derive_seed(9, {4}));

    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(r.below(7), 7u);
    }
    EXPECT_EQ(Rng::poisson_from_uniform(0.0, 0.99), 0u);
    EXPECT_EQ(Rng::poisson_from_uniform(1.0, 0.0), 0u);
    // P(0) = e^-1 ~ 0.368, P(<=1) ~ 0.736
    EXPECT_EQ(Rng::poisson_from_uniform(1.0, 0.5), 1u);
    EXPECT_EQ(Rng::poisson_from_uniform(1.0, 0.8), 2u);
}

TEST(Random, PoissonAndNormalMoments)
{
    Rng r(77);
    const int n = 20000;
    double sum = 0, sq = 0, psum = 0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
        psum += r.poisson(2.5);
    }
    EXPECT_NEAR(sum / n, 0.0, 0.03);
    EXPECT_NEAR(sq / n, 1.0, 0.04);
    EXPECT_NEAR(psum / n, 2.5, 0.05);
}

TEST(Random, SampleIsSubsetWithoutRepeats)
{
    Rng r(3);
    std::vector<int> pool(50);
    std::iota(pool.begin(), pool.end(), 0);
    auto s = r.sample(pool, 20);
    ASSERT_EQ(s.size(), 20u);
    std::sort(s.begin(), s.end());
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
    EXPECT_EQ(r.sample(pool, 80).size(), 50u);
}
