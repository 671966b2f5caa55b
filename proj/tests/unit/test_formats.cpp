#include "support.hpp"
#include "vidal/detector.hpp"
#include "vidal/error.hpp"
#include "vidal/formats.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>

using namespace vidal;

namespace {

struct Scenario {
    VideoMeta meta = test::make_meta(96, 64, 90, 3);
    std::vector<GroundTruthFrame> gt;
    std::unique_ptr<SyntheticAdapter> detector;

    Scenario()
    {
        SyntheticVideoOptions o;
        o.seed = 2;
        gt = make_synthetic_video(meta, o);
        detector = std::make_unique<SyntheticAdapter>(gt, NoiseProfile::uniform(90, {0.1, 0.5, 0.1, 0.5}),
                                                      LearningDecay{8, 0.1}, 3);
    }

    std::vector<GroundTruthFrame> labels(std::span<const FrameIndex> frames) const
    {
        std::vector<GroundTruthFrame> out;
        for (auto f : frames)
            out.push_back(gt[f]);
        return out;
    }

    /// State after `rounds` completed query batches, plus one still pending when `leave_pending`.
    LoopState run(std::size_t rounds, bool leave_pending)
    {
        auto s = init_loop(meta, {});
        s = ingest_annotations(s, labels(s.pending));
        for (std::size_t r = 0; r < rounds + (leave_pending ? 1 : 0); ++r) {
            const auto out = run_iteration(s, fetch_detections(*detector, next_request(s), s));
            s = out.state;
            if (r < rounds)
                s = ingest_annotations(s, labels(out.batch));
        }
        return s;
    }
};

} // namespace

TEST(DetectionsFormat, RoundTripAndValidation)
{
    DetectionsDocument doc;
    doc.iteration = 4;
    doc.frames[3] = {3, {test::det(1.5, 2.25, 3, 4, {0.1, 0.2, 0.7})}};
    doc.frames[8] = {8, {}};
    const auto text = format_detections(doc);
    const auto back = parse_detections(text, 3);
    EXPECT_EQ(back.iteration, 4u);
    EXPECT_EQ(back.frames, doc.frames);
    EXPECT_EQ(format_detections(back), text);
    EXPECT_THROW(parse_detections(text, 2), ValidationError);

    const std::string dup = R"({"schema":"vidal.detections.v1","iteration":0,"frames":[{"index":1,"detections":[]},{"index":1,"detections":[]}]})";
    EXPECT_THROW(parse_detections(dup), ValidationError);
    const std::string bad_sum = R"({"schema":"vidal.detections.v1","iteration":0,"frames":[{"index":1,"detections":[{"bbox":[1,1,1,1],"probs":[0.5,0.6]}]}]})";
    EXPECT_THROW(parse_detections(bad_sum), ValidationError);
    const std::string wrong_schema = R"({"schema":"vidal.detections.v9","iteration":0,"frames":[]})";
    EXPECT_THROW(parse_detections(wrong_schema), ValidationError);
    EXPECT_THROW(parse_detections("{"), ValidationError);
}

TEST(DetectionsFormat, ProbabilitiesRenormalized)
{
    const std::string text = R"({"schema":"vidal.detections.v1","iteration":0,"frames":[{"index":1,"detections":[{"bbox":[1,1,1,1],"probs":[0.3333333,0.3333333,0.3333333]}]}]})";
    const auto doc = parse_detections(text);
    const auto p = doc.frames.at(1).detections.at(0).probs.probs();
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
}

TEST(AnnotationsFormat, RoundTripWithAndWithoutMeta)
{
    AnnotationsDocument doc;
    doc.frames = {{2, {{BBox{1, 2, 3, 4}, 1}}}, {5, {}}};
    const auto text = format_annotations(doc);
    const auto back = parse_annotations(text);
    EXPECT_EQ(back.frames, doc.frames);
    EXPECT_FALSE(back.meta);
    doc.meta = test::make_meta(10, 10, 6, 2);
    EXPECT_EQ(parse_annotations(format_annotations(doc)).meta, doc.meta);
    const std::string negative = R"({"schema":"vidal.annotations.v1","frames":[{"index":0,"objects":[{"bbox":[1,1,-1,1],"class":0}]}]})";
    EXPECT_THROW(parse_annotations(negative), ValidationError);
}

TEST(FrameObjects, AcceptedShapesAndFieldErrors)
{
    EXPECT_EQ(parse_frame_objects(R"([{"bbox":[1,2,3,4],"class":1}])", 3).size(), 1u);
    EXPECT_EQ(parse_frame_objects(R"({"objects":[]})", 3).size(), 0u);
    const std::string doc = R"({"schema":"vidal.annotations.v1","frames":[{"index":3,"objects":[{"bbox":[1,2,3,4],"class":0}]}]})";
    EXPECT_EQ(parse_frame_objects(doc, 3).size(), 1u);
    EXPECT_THROW(parse_frame_objects(doc, 4), ValidationError);
    try {
        parse_frame_objects(R"([{"bbox":[1,2,-3,4],"class":0},{"bbox":[1,2],"class":0},{"bbox":[1,2,3,4]}])", 0);
        FAIL();
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[0]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[1]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
    }
}

TEST(StateFormat, FreshStateIsByteStable)
{
    test::TempDir dir("state-fresh");
    Scenario sc;
    const auto s = init_loop(sc.meta, {});
    const auto path = dir / "state.json";
    persist_state(s, path);
    const auto first = read_text_file(path);
    const auto loaded = load_state(path);
    EXPECT_EQ(loaded, s);
    persist_state(loaded, path);
    EXPECT_EQ(read_text_file(path), first);
}

TEST(StateFormat, HistoryAndPendingSurviveRoundTrip)
{
    test::TempDir dir("state-history");
    Scenario sc;
    const auto s = sc.run(3, true);
    ASSERT_EQ(s.history.size(), 4u);
    ASSERT_FALSE(s.pending_predictions.empty());
    const auto path = dir / "state.json";
    persist_state(s, path);
    const auto loaded = load_state(path);
    EXPECT_EQ(loaded, s);
    EXPECT_EQ(format_state(loaded), format_state(s));
    // the reloaded state continues exactly like the original
    const auto done = ingest_annotations(loaded, sc.labels(loaded.pending));
    const auto done_orig = ingest_annotations(s, sc.labels(s.pending));
    EXPECT_EQ(run_iteration(done, sc.detector->detect(next_request(done), done)).batch,
              run_iteration(done_orig, sc.detector->detect(next_request(done_orig), done_orig)).batch);
}

TEST(StateFormat, CorruptFilesFailWithoutTouchingDisk)
{
    test::TempDir dir("state-corrupt");
    Scenario sc;
    const auto s = sc.run(1, false);
    const auto good = format_state(s);
    const auto path = dir / "state.json";
    for (std::size_t cut : {std::size_t{0}, std::size_t{1}, good.size() / 3, good.size() - 3}) {
        {
            std::ofstream(path, std::ios::binary) << good.substr(0, cut);
        }
        const auto before = read_text_file(path);
        EXPECT_THROW(load_state(path), ValidationError) << cut;
        EXPECT_EQ(read_text_file(path), before);
    }
    auto tamper = [&](const std::string& from, const std::string& to) {
        auto text = good;
        const auto at = text.find(from);
        EXPECT_NE(at, std::string::npos) << from;
        text.replace(at, from.size(), to);
        return text;
    };
    EXPECT_THROW(parse_state(tamper("vidal.state.v1", "vidal.state.v0")), ValidationError);
    // a labeled frame also listed as test breaks the partition
    auto overlap = nlohmann::json::parse(good);
    overlap["test"].push_back(overlap["labeled"][0]);
    EXPECT_THROW(parse_state(overlap.dump()), ValidationError);
    auto missing = nlohmann::json::parse(good);
    missing["unlabeled"].erase(missing["unlabeled"].begin());
    EXPECT_THROW(parse_state(missing.dump()), ValidationError);
    EXPECT_THROW(load_state(dir / "absent.json"), Error);
}

TEST(StateFormat, PersistRefusesInvalidState)
{
    test::TempDir dir("state-invalid");
    Scenario sc;
    auto s = init_loop(sc.meta, {});
    const auto path = dir / "state.json";
    persist_state(s, path);
    const auto before = read_text_file(path);
    s.test.insert(*s.unlabeled.begin());
    EXPECT_THROW(persist_state(s, path), StateError);
    EXPECT_EQ(read_text_file(path), before);
}

TEST(ReportsFormat, ScoresAndDirective)
{
    Scenario sc;
    auto s = init_loop(sc.meta, {});
    s = ingest_annotations(s, sc.labels(s.pending));
    const auto out = run_iteration(s, sc.detector->detect(next_request(s), s));
    const auto report = nlohmann::json::parse(format_scores_report(out));
    EXPECT_EQ(report["schema"], "vidal.scores.v1");
    EXPECT_EQ(report["query"].size(), 10u);
    EXPECT_EQ(report["frames"].size(), out.report.size());
    const auto& first = report["frames"][0];
    for (const char* key : {"index", "weight", "per_class", "frame_score", "weighted_score"})
        EXPECT_TRUE(first.contains(key)) << key;
    for (const char* key : {"C", "dn", "dh", "S"})
        EXPECT_TRUE(first["per_class"][0].contains(key)) << key;
    EXPECT_EQ(format_scores_report(out), format_scores_report(out));

    const auto done = ingest_annotations(out.state, sc.labels(out.batch));
    const auto directive = nlohmann::json::parse(format_directive(training_directive(done, 4)));
    EXPECT_EQ(directive["schema"], "vidal.directive.v1");
    EXPECT_EQ(directive["epochs"], 10);
    EXPECT_EQ(directive["batches"].size(), 10u);
}

TEST(NoiseFormat, RoundTrip)
{
    NoiseDocument doc;
    doc.profile = {{{0, 40, {0.1, 0.2, 0.05, 0.3}}, {40, 90, {0.5, 2, 0.3, 1.5}}}};
    doc.decay = {12, 0.2};
    const auto back = parse_noise(format_noise(doc));
    EXPECT_EQ(back.profile.ranges, doc.profile.ranges);
    EXPECT_EQ(back.decay.d0, 12);
    EXPECT_EQ(back.decay.floor, 0.2);
    const std::string no_decay = R"({"schema":"vidal.noise.v1","ranges":[{"begin":0,"end":5,"p_miss":0,"p_spurious":0,"jitter_sigma":0,"class_temperature":0}]})";
    EXPECT_EQ(parse_noise(no_decay).decay.floor, 1.0);
}

TEST(RunConfig, ParsesAndChecksPaths)
{
    test::TempDir dir("runcfg");
    std::filesystem::create_directories(dir / "images");
    {
        std::ofstream(dir / "gt.json") << format_annotations({});
    }
    const std::string text = R"({
      "schema": "vidal.run.v1",
      "video": {"width": 96, "height": 64, "frames": 50, "classes": ["a", "b"]},
      "strategy": {"kind": "s2", "batch": 5, "seed": 9},
      "adapter": "synthetic",
      "noise": {"schema":"vidal.noise.v1","ranges":[{"begin":0,"end":50,"p_miss":0.1,"p_spurious":0.2,"jitter_sigma":0.1,"class_temperature":0.5}]},
      "loop": {"seed": 3},
      "detector_seed": 4,
      "paths": {"state": "state.json", "images": "images", "ground_truth": "gt.json"}
    })";
    const auto cfg = RunConfig::parse(text, dir.path());
    EXPECT_EQ(cfg.strategy.kind, StrategyKind::s2);
    EXPECT_EQ(cfg.strategy.batch_size, 5u);
    EXPECT_EQ(cfg.detector_seed, 4u);
    EXPECT_EQ(cfg.loop.seed, 3u);
    EXPECT_EQ(cfg.state_path, dir / "state.json");
    EXPECT_EQ(cfg.images_dir, dir / "images");
    ASSERT_TRUE(cfg.noise);

    auto without_seed = nlohmann::json::parse(text);
    without_seed.erase("detector_seed");
    EXPECT_THROW(RunConfig::parse(without_seed.dump(), dir.path()), ValidationError);
    auto bad_path = nlohmann::json::parse(text);
    bad_path["paths"]["images"] = "nowhere";
    EXPECT_THROW(RunConfig::parse(bad_path.dump(), dir.path()), ValidationError);

    EXPECT_EQ(AdapterConfig::parse("exec:python3 det.py").target, "python3 det.py");
    EXPECT_EQ(AdapterConfig::parse("http://host:1/x").target, "http://host:1/x");
    EXPECT_THROW(AdapterConfig::parse("grpc:x"), ValidationError);
}
