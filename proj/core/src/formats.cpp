#include "vidal/formats.hpp"

#include "vidal/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace vidal {

using Json = nlohmann::ordered_json;

namespace {

Json parse_json(std::string_view text, std::string_view what)
{
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

const Json& field(const Json& object, const char* key, const std::string& where)
{
    if (!object.is_object())
        throw ValidationError(where + ": expected an object");
    const auto it = object.find(key);
    if (it == object.end())
        throw ValidationError(where + ": missing field '" + key + "'");
    return *it;
}

template <typename T>
T get(const Json& object, const char* key, const std::string& where)
{
    const Json& value = field(object, key, where);
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!value.is_boolean())
                throw ValidationError(where + "." + key + ": expected true or false");
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.template get<long long>() >= 0))
                throw ValidationError(where + "." + key + ": expected a non-negative integer");
        } else if constexpr (std::is_arithmetic_v<T>) {
            if (!value.is_number())
                throw ValidationError(where + "." + key + ": expected a number");
        }
        return value.template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T get_or(const Json& object, const char* key, const std::string& where, T fallback)
{
    return object.contains(key) ? get<T>(object, key, where) : fallback;
}

void check_schema(const Json& doc, std::string_view expected, std::string_view what)
{
    if (!doc.is_object())
        throw ValidationError(std::string(what) + ": top level must be an object");
    const auto it = doc.find("schema");
    if (it == doc.end() || !it->is_string())
        throw ValidationError(std::string(what) + ": missing schema field");
    if (it->get<std::string>() != expected)
        throw ValidationError(std::string(what) + ": unsupported schema '" + it->get<std::string>() + "', expected '" +
                              std::string(expected) + "'");
}

Json bbox_json(const BBox& b)
{
    return Json::array({b.cx, b.cy, b.bw, b.bh});
}

BBox parse_bbox(const Json& value, const std::string& where)
{
    if (!value.is_array() || value.size() != 4)
        throw ValidationError(where + ": bbox must be [cx, cy, bw, bh]");
    for (const auto& v : value) {
        if (!v.is_number())
            throw ValidationError(where + ": bbox entries must be numbers");
    }
    BBox box{value[0].get<double>(), value[1].get<double>(), value[2].get<double>(), value[3].get<double>()};
    try {
        box.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
    return box;
}

Json detection_json(const Detection& d)
{
    Json j;
    j["bbox"] = bbox_json(d.bbox);
    j["probs"] = Json(std::vector<double>(d.probs.probs().begin(), d.probs.probs().end()));
    return j;
}

Detection parse_detection(const Json& value, const std::string& where, std::optional<std::size_t> k)
{
    Detection d;
    d.bbox = parse_bbox(field(value, "bbox", where), where + ".bbox");
    const Json& probs = field(value, "probs", where);
    if (!probs.is_array())
        throw ValidationError(where + ".probs: expected an array");
    std::vector<double> p;
    for (const auto& v : probs) {
        if (!v.is_number())
            throw ValidationError(where + ".probs: entries must be numbers");
        p.push_back(v.get<double>());
    }
    if (k && p.size() != *k)
        throw ValidationError(where + ".probs: expected " + std::to_string(*k) + " entries, got " +
                              std::to_string(p.size()));
    try {
        d.probs = ClassDistribution(std::move(p));
    } catch (const ValidationError& e) {
        throw ValidationError(where + ".probs: " + e.what());
    }
    return d;
}

Json object_json(const LabeledObject& o)
{
    Json j;
    j["bbox"] = bbox_json(o.bbox);
    j["class"] = o.class_index;
    return j;
}

std::vector<LabeledObject> parse_objects(const Json& array, const std::string& where)
{
    if (!array.is_array())
        throw ValidationError(where + ": expected an array of objects");
    std::vector<LabeledObject> objects;
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < array.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        try {
            LabeledObject o;
            o.bbox = parse_bbox(field(array[i], "bbox", at), at + ".bbox");
            o.class_index = get<std::size_t>(array[i], "class", at);
            objects.push_back(o);
        } catch (const ValidationError& e) {
            problems.emplace_back(e.what());
        }
    }
    if (!problems.empty()) {
        std::string message = "invalid objects: ";
        for (std::size_t i = 0; i < problems.size(); ++i)
            message += (i ? "; " : "") + problems[i];
        throw ValidationError(message);
    }
    return objects;
}

Json meta_json(const VideoMeta& meta)
{
    Json j;
    j["width"] = meta.width;
    j["height"] = meta.height;
    j["num_frames"] = meta.num_frames;
    j["classes"] = meta.class_names;
    return j;
}

VideoMeta parse_meta(const Json& j, const std::string& where)
{
    VideoMeta meta;
    meta.width = get<int>(j, "width", where);
    meta.height = get<int>(j, "height", where);
    meta.num_frames = get<std::size_t>(j, "num_frames", where);
    meta.class_names = get<std::vector<std::string>>(j, "classes", where);
    meta.validate();
    return meta;
}

template <typename Container>
Json index_array(const Container& frames)
{
    Json j = Json::array();
    for (const auto f : frames)
        j.push_back(f);
    return j;
}

std::vector<FrameIndex> parse_indices(const Json& j, const char* key, const std::string& where)
{
    return get<std::vector<FrameIndex>>(j, key, where);
}

Json strategy_json(const StrategyConfig& s)
{
    Json j;
    j["kind"] = std::string(to_string(s.kind));
    j["fixed_mu"] = s.fixed_mu;
    j["batch_size"] = s.batch_size;
    j["rng_seed"] = s.rng_seed;
    return j;
}

StrategyConfig parse_strategy_json(const Json& j, const std::string& where)
{
    StrategyConfig s;
    s.kind = parse_strategy(get<std::string>(j, "kind", where));
    s.fixed_mu = get<double>(j, "fixed_mu", where);
    s.batch_size = get<std::size_t>(j, "batch_size", where);
    s.rng_seed = get<std::uint64_t>(j, "rng_seed", where);
    s.validate();
    return s;
}

Json frames_object(const DetectionSet& set)
{
    Json j = Json::object();
    for (const auto& [frame, dets] : set) {
        Json list = Json::array();
        for (const auto& d : dets.detections)
            list.push_back(detection_json(d));
        j[std::to_string(frame)] = std::move(list);
    }
    return j;
}

FrameIndex parse_key(const std::string& key, const std::string& where)
{
    std::size_t used = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(key, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != key.size())
        throw ValidationError(where + ": '" + key + "' is not a frame index");
    return static_cast<FrameIndex>(value);
}

} // namespace

// Detections --------------------------------------------------------------------

DetectionsDocument parse_detections(std::string_view text, std::optional<std::size_t> num_classes)
{
    const Json doc = parse_json(text, "detections document");
    check_schema(doc, kDetectionsSchema, "detections document");
    DetectionsDocument out;
    out.iteration = get<std::size_t>(doc, "iteration", "detections");
    const Json& frames = field(doc, "frames", "detections");
    if (!frames.is_array())
        throw ValidationError("detections.frames: expected an array");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string where = "detections.frames[" + std::to_string(i) + "]";
        FrameDetections frame;
        frame.frame_index = get<std::size_t>(frames[i], "index", where);
        const Json& list = field(frames[i], "detections", where);
        if (!list.is_array())
            throw ValidationError(where + ".detections: expected an array");
        for (std::size_t d = 0; d < list.size(); ++d)
            frame.detections.push_back(
                parse_detection(list[d], where + ".detections[" + std::to_string(d) + "]", num_classes));
        if (out.frames.contains(frame.frame_index))
            throw ValidationError(where + ": frame " + std::to_string(frame.frame_index) + " listed twice");
        out.frames.emplace(frame.frame_index, std::move(frame));
    }
    return out;
}

std::string format_detections(const DetectionsDocument& doc)
{
    Json j;
    j["schema"] = kDetectionsSchema;
    j["iteration"] = doc.iteration;
    Json frames = Json::array();
    for (const auto& [index, frame] : doc.frames) {
        Json f;
        f["index"] = index;
        f["detections"] = Json::array();
        for (const auto& d : frame.detections)
            f["detections"].push_back(detection_json(d));
        frames.push_back(std::move(f));
    }
    j["frames"] = std::move(frames);
    return j.dump(2) + "\n";
}

// Annotations -------------------------------------------------------------------

AnnotationsDocument parse_annotations(std::string_view text)
{
    const Json doc = parse_json(text, "annotations document");
    check_schema(doc, kAnnotationsSchema, "annotations document");
    AnnotationsDocument out;
    if (doc.contains("meta"))
        out.meta = parse_meta(doc["meta"], "annotations.meta");
    const Json& frames = field(doc, "frames", "annotations");
    if (!frames.is_array())
        throw ValidationError("annotations.frames: expected an array");
    std::set<FrameIndex> seen;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string where = "annotations.frames[" + std::to_string(i) + "]";
        GroundTruthFrame frame;
        frame.frame_index = get<std::size_t>(frames[i], "index", where);
        frame.objects = parse_objects(field(frames[i], "objects", where), where + ".objects");
        if (!seen.insert(frame.frame_index).second)
            throw ValidationError(where + ": frame " + std::to_string(frame.frame_index) + " listed twice");
        if (out.meta)
            frame.validate(*out.meta);
        out.frames.push_back(std::move(frame));
    }
    return out;
}

std::string format_annotations(const AnnotationsDocument& doc)
{
    Json j;
    j["schema"] = kAnnotationsSchema;
    if (doc.meta)
        j["meta"] = meta_json(*doc.meta);
    Json frames = Json::array();
    for (const auto& frame : doc.frames) {
        Json f;
        f["index"] = frame.frame_index;
        f["objects"] = Json::array();
        for (const auto& o : frame.objects)
            f["objects"].push_back(object_json(o));
        frames.push_back(std::move(f));
    }
    j["frames"] = std::move(frames);
    return j.dump(2) + "\n";
}

std::vector<LabeledObject> parse_frame_objects(std::string_view text, FrameIndex frame)
{
    const Json doc = parse_json(text, "annotation submission");
    if (doc.is_array())
        return parse_objects(doc, "objects");
    if (doc.is_object() && doc.contains("schema")) {
        auto parsed = parse_annotations(text);
        if (parsed.frames.size() != 1 || parsed.frames.front().frame_index != frame)
            throw ValidationError("annotation submission must describe exactly frame " + std::to_string(frame));
        return parsed.frames.front().objects;
    }
    if (doc.is_object() && doc.contains("objects"))
        return parse_objects(doc["objects"], "objects");
    throw ValidationError("annotation submission must be an object list, {\"objects\": [...]} or an annotations document");
}

// State ---------------------------------------------------------------------------

std::string format_state(const LoopState& state)
{
    Json j;
    j["schema"] = kStateSchema;
    j["meta"] = meta_json(state.meta);
    j["strategy"] = strategy_json(state.strategy);
    j["iteration"] = state.iteration;
    j["stop_fraction"] = state.stop_fraction;
    j["confidence_threshold"] = state.confidence_threshold;
    j["test_as_neighbors"] = state.test_as_neighbors;
    j["normalize_entropy"] = state.normalize_entropy;
    j["labeled"] = index_array(state.labeled);
    j["unlabeled"] = index_array(state.unlabeled);
    j["test"] = index_array(state.test);
    j["initial_guiding"] = index_array(state.initial_guiding);
    j["pending"] = index_array(state.pending);

    Json annotations = Json::object();
    for (const auto& [frame, gt] : state.annotations) {
        Json list = Json::array();
        for (const auto& o : gt.objects)
            list.push_back(object_json(o));
        annotations[std::to_string(frame)] = std::move(list);
    }
    j["annotations"] = std::move(annotations);
    j["pending_predictions"] = frames_object(state.pending_predictions);

    Json history = Json::array();
    for (const auto& record : state.history) {
        Json r;
        r["iteration"] = record.iteration;
        r["frames"] = index_array(record.frames);
        r["frame_scores"] = record.frame_scores;
        r["weighted_scores"] = record.weighted_scores;
        r["mu"] = record.mu;
        history.push_back(std::move(r));
    }
    j["history"] = std::move(history);
    return j.dump(2) + "\n";
}

LoopState parse_state(std::string_view text)
{
    const Json doc = parse_json(text, "state file");
    check_schema(doc, kStateSchema, "state file");
    LoopState state;
    state.meta = parse_meta(field(doc, "meta", "state"), "state.meta");
    state.strategy = parse_strategy_json(field(doc, "strategy", "state"), "state.strategy");
    state.iteration = get<std::size_t>(doc, "iteration", "state");
    state.stop_fraction = get<double>(doc, "stop_fraction", "state");
    state.confidence_threshold = get<double>(doc, "confidence_threshold", "state");
    state.test_as_neighbors = get<bool>(doc, "test_as_neighbors", "state");
    state.normalize_entropy = get<bool>(doc, "normalize_entropy", "state");

    for (const auto f : parse_indices(doc, "labeled", "state"))
        state.labeled.insert(f);
    for (const auto f : parse_indices(doc, "unlabeled", "state"))
        state.unlabeled.insert(f);
    for (const auto f : parse_indices(doc, "test", "state"))
        state.test.insert(f);
    state.initial_guiding = parse_indices(doc, "initial_guiding", "state");
    state.pending = parse_indices(doc, "pending", "state");

    const Json& annotations = field(doc, "annotations", "state");
    if (!annotations.is_object())
        throw ValidationError("state.annotations: expected an object keyed by frame index");
    for (const auto& [key, list] : annotations.items()) {
        const std::string where = "state.annotations." + key;
        GroundTruthFrame gt;
        gt.frame_index = parse_key(key, where);
        gt.objects = parse_objects(list, where);
        state.annotations[gt.frame_index] = std::move(gt);
    }

    const Json& predictions = field(doc, "pending_predictions", "state");
    if (!predictions.is_object())
        throw ValidationError("state.pending_predictions: expected an object keyed by frame index");
    for (const auto& [key, list] : predictions.items()) {
        const std::string where = "state.pending_predictions." + key;
        FrameDetections frame;
        frame.frame_index = parse_key(key, where);
        if (!list.is_array())
            throw ValidationError(where + ": expected an array");
        for (std::size_t d = 0; d < list.size(); ++d)
            frame.detections.push_back(
                parse_detection(list[d], where + "[" + std::to_string(d) + "]", state.meta.num_classes()));
        state.pending_predictions[frame.frame_index] = std::move(frame);
    }

    const Json& history = field(doc, "history", "state");
    if (!history.is_array())
        throw ValidationError("state.history: expected an array");
    for (std::size_t i = 0; i < history.size(); ++i) {
        const std::string where = "state.history[" + std::to_string(i) + "]";
        QueryRecord record;
        record.iteration = get<std::size_t>(history[i], "iteration", where);
        record.frames = parse_indices(history[i], "frames", where);
        record.frame_scores = get<std::vector<double>>(history[i], "frame_scores", where);
        record.weighted_scores = get<std::vector<double>>(history[i], "weighted_scores", where);
        record.mu = get<double>(history[i], "mu", where);
        state.history.push_back(std::move(record));
    }

    try {
        state.validate();
    } catch (const Error& e) {
        throw ValidationError(std::string("state file violates loop invariants: ") + e.what());
    }
    return state;
}

// Reports ---------------------------------------------------------------------------

std::string format_scores_report(const IterationOutcome& outcome)
{
    Json j;
    j["schema"] = kScoresSchema;
    j["iteration"] = outcome.state.history.empty() ? 0 : outcome.state.history.back().iteration;
    j["strategy"] = std::string(to_string(outcome.state.strategy.kind));
    j["mu"] = outcome.mu;
    j["query"] = index_array(outcome.batch);
    Json frames = Json::array();
    for (const auto& scored : outcome.report) {
        Json f;
        f["index"] = scored.bundle.frame_index;
        f["weight"] = scored.weight;
        Json per_class = Json::array();
        for (const auto& c : scored.bundle.per_class) {
            Json entry;
            entry["C"] = c.classification;
            entry["dn"] = c.delta_n;
            entry["dh"] = c.delta_h;
            entry["S"] = c.aggregated;
            per_class.push_back(std::move(entry));
        }
        f["per_class"] = std::move(per_class);
        f["frame_score"] = scored.bundle.frame_score;
        f["weighted_score"] = scored.weighted_score;
        frames.push_back(std::move(f));
    }
    j["frames"] = std::move(frames);
    return j.dump(2) + "\n";
}

std::string format_directive(const TrainingDirective& directive)
{
    Json j;
    j["schema"] = kDirectiveSchema;
    j["iteration"] = directive.iteration;
    j["epochs"] = directive.epochs;
    j["minibatch_size"] = directive.minibatch_size;
    j["learning_rate"] = directive.learning_rate;
    j["queried"] = index_array(directive.queried);
    Json batches = Json::array();
    for (const auto& batch : directive.batches)
        batches.push_back(index_array(batch));
    j["batches"] = std::move(batches);
    return j.dump(2) + "\n";
}

std::string format_map_report(const MapReport& report, const VideoMeta* meta)
{
    Json j;
    j["schema"] = kEvalSchema;
    j["map"] = report.map;
    j["thresholds"] = report.thresholds;
    Json classes = Json::array();
    for (std::size_t row = 0; row < report.classes.size(); ++row) {
        Json c;
        c["class"] = report.classes[row];
        if (meta != nullptr && report.classes[row] < meta->class_names.size())
            c["name"] = meta->class_names[report.classes[row]];
        c["ap"] = report.ap[row];
        double sum = 0.0;
        for (const double v : report.ap[row])
            sum += v;
        c["mean_ap"] = report.ap[row].empty() ? 0.0 : sum / static_cast<double>(report.ap[row].size());
        classes.push_back(std::move(c));
    }
    j["classes"] = std::move(classes);
    return j.dump(2) + "\n";
}

// Noise ----------------------------------------------------------------------------

NoiseDocument parse_noise(std::string_view text)
{
    const Json doc = parse_json(text, "noise document");
    check_schema(doc, kNoiseSchema, "noise document");
    NoiseDocument out;
    const Json& ranges = field(doc, "ranges", "noise");
    if (!ranges.is_array())
        throw ValidationError("noise.ranges: expected an array");
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const std::string where = "noise.ranges[" + std::to_string(i) + "]";
        NoiseRange r;
        r.begin = get<std::size_t>(ranges[i], "begin", where);
        r.end = get<std::size_t>(ranges[i], "end", where);
        r.params.p_miss = get<double>(ranges[i], "p_miss", where);
        r.params.p_spurious = get<double>(ranges[i], "p_spurious", where);
        r.params.jitter_sigma = get<double>(ranges[i], "jitter_sigma", where);
        r.params.class_temperature = get<double>(ranges[i], "class_temperature", where);
        out.profile.ranges.push_back(r);
    }
    if (doc.contains("decay")) {
        out.decay.d0 = get<double>(doc["decay"], "d0", "noise.decay");
        out.decay.floor = get<double>(doc["decay"], "floor", "noise.decay");
    } else {
        // no decay: every frame keeps its full noise
        out.decay = LearningDecay{1.0, 1.0};
    }
    out.decay.validate();
    return out;
}

std::string format_noise(const NoiseDocument& doc)
{
    Json j;
    j["schema"] = kNoiseSchema;
    Json ranges = Json::array();
    for (const auto& r : doc.profile.ranges) {
        Json e;
        e["begin"] = r.begin;
        e["end"] = r.end;
        e["p_miss"] = r.params.p_miss;
        e["p_spurious"] = r.params.p_spurious;
        e["jitter_sigma"] = r.params.jitter_sigma;
        e["class_temperature"] = r.params.class_temperature;
        ranges.push_back(std::move(e));
    }
    j["ranges"] = std::move(ranges);
    j["decay"] = {{"d0", doc.decay.d0}, {"floor", doc.decay.floor}};
    return j.dump(2) + "\n";
}

// Files -------------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto temp = path;
    temp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + temp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out)
            throw Error("short write to " + temp.string());
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::filesystem::remove(temp);
        throw Error("cannot replace " + path.string() + ": " + ec.message());
    }
}

void persist_state(const LoopState& state, const std::filesystem::path& path)
{
    state.validate();
    write_file_atomic(path, format_state(state));
}

LoopState load_state(const std::filesystem::path& path)
{
    try {
        return parse_state(read_text_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// Run configuration ---------------------------------------------------------------------

AdapterConfig AdapterConfig::parse(std::string_view text)
{
    const auto colon = text.find(':');
    const std::string head(text.substr(0, colon));
    const std::string rest = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
    if (head == "synthetic")
        return {Kind::synthetic, rest};
    if (head == "exec" && !rest.empty())
        return {Kind::exec, rest};
    if (head == "http" && !rest.empty())
        return {Kind::http, "http:" + rest};
    if (head == "file" && !rest.empty())
        return {Kind::file, rest};
    throw ValidationError("adapter must be file:PATH, exec:CMD, http:URL or synthetic, got '" + std::string(text) + "'");
}

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir)
{
    const Json doc = parse_json(text, "run configuration");
    check_schema(doc, kRunConfigSchema, "run configuration");
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    RunConfig config;
    const Json& video = field(doc, "video", "run");
    config.meta.width = get<int>(video, "width", "run.video");
    config.meta.height = get<int>(video, "height", "run.video");
    config.meta.num_frames = get<std::size_t>(video, "frames", "run.video");
    config.meta.class_names = get<std::vector<std::string>>(video, "classes", "run.video");
    config.meta.validate();

    const Json& strategy = field(doc, "strategy", "run");
    config.strategy.kind = parse_strategy(get<std::string>(strategy, "kind", "run.strategy"));
    config.strategy.fixed_mu = get_or<double>(strategy, "mu", "run.strategy", 1.0);
    config.strategy.batch_size = get_or<std::size_t>(strategy, "batch", "run.strategy", 10);
    config.strategy.rng_seed = get<std::uint64_t>(strategy, "seed", "run.strategy");
    config.strategy.validate();

    if (doc.contains("eval")) {
        const Json& thresholds = field(doc["eval"], "thresholds", "run.eval");
        config.eval.iou_thresholds = thresholds.is_string()
            ? EvalConfig::parse_thresholds(thresholds.get<std::string>())
            : get<std::vector<double>>(doc["eval"], "thresholds", "run.eval");
        config.eval.validate();
    }

    config.adapter = AdapterConfig::parse(get_or<std::string>(doc, "adapter", "run", "synthetic"));

    const Json& loop = field(doc, "loop", "run");
    config.loop.init_count = get_or<std::size_t>(loop, "init_count", "run.loop", 10);
    config.loop.test_fraction = get_or<double>(loop, "test_fraction", "run.loop", 0.1);
    config.loop.stop_fraction = get_or<double>(loop, "stop_fraction", "run.loop", 0.8);
    config.loop.seed = get<std::uint64_t>(loop, "seed", "run.loop");
    config.loop.strategy = config.strategy;
    config.detector_seed = get<std::uint64_t>(doc, "detector_seed", "run");

    if (doc.contains("noise")) {
        const Json& noise = doc["noise"];
        if (noise.is_string()) {
            const auto path = resolve(noise.get<std::string>());
            if (!std::filesystem::exists(path))
                throw ValidationError("run.noise: " + path.string() + " does not exist");
            config.noise = parse_noise(read_text_file(path));
        } else {
            config.noise = parse_noise(noise.dump());
        }
        config.noise->profile.validate(config.meta.num_frames);
    }

    if (doc.contains("paths")) {
        const Json& paths = doc["paths"];
        auto existing = [&](const char* key, std::filesystem::path& target) {
            if (!paths.contains(key))
                return;
            target = resolve(get<std::string>(paths, key, "run.paths"));
            if (!std::filesystem::exists(target))
                throw ValidationError(std::string("run.paths.") + key + ": " + target.string() + " does not exist");
        };
        existing("images", config.images_dir);
        existing("detections", config.detections_dir);
        existing("ground_truth", config.ground_truth_path);
        if (paths.contains("state")) {
            config.state_path = resolve(get<std::string>(paths, "state", "run.paths"));
            const auto parent = config.state_path.parent_path();
            if (!parent.empty() && !std::filesystem::is_directory(parent))
                throw ValidationError("run.paths.state: directory " + parent.string() + " does not exist");
        }
    }
    if (config.adapter.kind == AdapterConfig::Kind::synthetic && config.ground_truth_path.empty())
        throw ValidationError("run: the synthetic adapter needs paths.ground_truth");
    return config;
}

} // namespace vidal
