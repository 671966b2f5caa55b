#pragma once

#include "vidal/detector.hpp"
#include "vidal/eval.hpp"
#include "vidal/loop.hpp"
#include "vidal/model.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vidal {

// On-disk documents. All UTF-8 JSON with fixed field names; writers are
// deterministic so identical inputs give byte-identical files.

inline constexpr std::string_view kDetectionsSchema = "vidal.detections.v1";
inline constexpr std::string_view kAnnotationsSchema = "vidal.annotations.v1";
inline constexpr std::string_view kStateSchema = "vidal.state.v1";
inline constexpr std::string_view kScoresSchema = "vidal.scores.v1";
inline constexpr std::string_view kDirectiveSchema = "vidal.directive.v1";
inline constexpr std::string_view kEvalSchema = "vidal.eval.v1";
inline constexpr std::string_view kNoiseSchema = "vidal.noise.v1";
inline constexpr std::string_view kSimulationSchema = "vidal.simulation.v1";
inline constexpr std::string_view kRunConfigSchema = "vidal.run.v1";

struct DetectionsDocument {
    std::size_t iteration = 0;
    DetectionSet frames;
};

/// `num_classes` (when given) is checked against every probability vector.
DetectionsDocument parse_detections(std::string_view text, std::optional<std::size_t> num_classes = std::nullopt);
std::string format_detections(const DetectionsDocument& doc);

struct AnnotationsDocument {
    std::vector<GroundTruthFrame> frames;
    std::optional<VideoMeta> meta; ///< optional "meta" block (written by gen-gt)
};

AnnotationsDocument parse_annotations(std::string_view text);
std::string format_annotations(const AnnotationsDocument& doc);

/// Objects of a single frame, as posted by the workbench: either a bare
/// array of {bbox, class} or an annotations document with one frame.
std::vector<LabeledObject> parse_frame_objects(std::string_view text, FrameIndex frame);

std::string format_state(const LoopState& state);
/// Checks the schema version and every LoopState invariant.
LoopState parse_state(std::string_view text);

std::string format_scores_report(const IterationOutcome& outcome);
std::string format_directive(const TrainingDirective& directive);
std::string format_map_report(const MapReport& report, const VideoMeta* meta = nullptr);

struct NoiseDocument {
    NoiseProfile profile;
    LearningDecay decay;
};

NoiseDocument parse_noise(std::string_view text);
std::string format_noise(const NoiseDocument& doc);

// Files -----------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

void persist_state(const LoopState& state, const std::filesystem::path& path);
LoopState load_state(const std::filesystem::path& path);

// Run configuration -------------------------------------------------------------

/// Parsed adapter spec: "file:PATH", "exec:CMD", "http:URL" or "synthetic".
struct AdapterConfig {
    enum class Kind { file, exec, http, synthetic } kind = Kind::synthetic;
    std::string target;

    static AdapterConfig parse(std::string_view text);
};

struct RunConfig {
    VideoMeta meta;
    StrategyConfig strategy;
    EvalConfig eval;
    AdapterConfig adapter;
    std::optional<NoiseDocument> noise;
    LoopOptions loop;
    std::uint64_t detector_seed = 0;
    std::filesystem::path state_path;
    std::filesystem::path images_dir;
    std::filesystem::path detections_dir;
    std::filesystem::path ground_truth_path;

    /// Relative paths resolve against `base_dir`; referenced inputs must exist.
    static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir);
};

} // namespace vidal
