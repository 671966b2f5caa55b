#include "vidal/detector.hpp"

#include "vidal/error.hpp"
#include "vidal/formats.hpp"
#include "vidal/random.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sys/wait.h>

namespace vidal {

NoiseParams NoiseParams::scaled(double factor) const
{
    return {p_miss * factor, p_spurious * factor, jitter_sigma * factor, class_temperature * factor};
}

NoiseProfile NoiseProfile::uniform(std::size_t num_frames, const NoiseParams& params)
{
    return NoiseProfile{{NoiseRange{0, num_frames, params}}};
}

const NoiseParams& NoiseProfile::at(FrameIndex frame) const
{
    for (const auto& range : ranges) {
        if (frame >= range.begin && frame < range.end)
            return range.params;
    }
    throw ValidationError("noise profile does not cover frame " + std::to_string(frame));
}

void NoiseProfile::validate(std::size_t num_frames) const
{
    FrameIndex expected = 0;
    for (const auto& range : ranges) {
        if (range.begin != expected || range.end <= range.begin)
            throw ValidationError("noise ranges must tile the video in order without gaps or overlaps (at frame " +
                                  std::to_string(expected) + ")");
        const auto& p = range.params;
        if (!(p.p_miss >= 0.0 && p.p_miss <= 1.0))
            throw ValidationError("p_miss must lie in [0, 1]");
        if (!(p.p_spurious >= 0.0) || !std::isfinite(p.p_spurious))
            throw ValidationError("p_spurious must be a non-negative rate");
        if (!(p.jitter_sigma >= 0.0) || !std::isfinite(p.jitter_sigma))
            throw ValidationError("jitter_sigma must be non-negative");
        if (!(p.class_temperature >= 0.0) || std::isnan(p.class_temperature))
            throw ValidationError("class_temperature must be non-negative");
        expected = range.end;
    }
    if (expected != num_frames)
        throw ValidationError("noise ranges cover " + std::to_string(expected) + " of " + std::to_string(num_frames) +
                              " frames");
}

void LearningDecay::validate() const
{
    if (!(d0 >= 1.0))
        throw ValidationError("decay distance scale d0 must be at least 1");
    if (!(floor >= 0.0 && floor <= 1.0))
        throw ValidationError("decay floor must lie in [0, 1]");
}

NoiseParams effective_noise(FrameIndex frame, const NoiseProfile& profile, const LearningDecay& decay,
                            const std::set<FrameIndex>& labeled)
{
    if (labeled.empty())
        throw ValidationError("effective noise needs at least one labeled frame");
    const auto above = labeled.lower_bound(frame);
    std::size_t distance = std::numeric_limits<std::size_t>::max();
    if (above != labeled.end())
        distance = *above - frame;
    if (above != labeled.begin())
        distance = std::min(distance, frame - *std::prev(above));
    const double factor = std::max(decay.floor, std::min(1.0, static_cast<double>(distance) / decay.d0));
    return profile.at(frame).scaled(factor);
}

ClassDistribution softened_one_hot(std::size_t k, ClassIndex cls, double tau)
{
    if (!(tau > 0.0))
        return ClassDistribution::one_hot(k, cls);
    const double other = std::exp(-1.0 / tau);
    const double top = 1.0 / (1.0 + static_cast<double>(k - 1) * other);
    std::vector<double> probs(k, other * top);
    probs[cls] = top;
    return ClassDistribution(std::move(probs));
}

namespace {

ClassDistribution weak_distribution(std::size_t k, ClassIndex cls, double top)
{
    std::vector<double> probs(k, (1.0 - top) / static_cast<double>(k - 1));
    probs[cls] = top;
    return ClassDistribution(std::move(probs));
}

} // namespace

FrameDetections synthesize_detections(const GroundTruthFrame& gt, const NoiseParams& params, const VideoMeta& meta,
                                      std::uint64_t seed)
{
    const std::size_t k = meta.num_classes();
    FrameDetections out{gt.frame_index, {}};

    Rng objects(derive_seed(seed, {1}));
    double area_sum = 0.0;
    for (const auto& object : gt.objects) {
        area_sum += object.bbox.area();
        // fixed draw count per object keeps the streams aligned across noise levels
        const double u_miss = objects.uniform();
        const double dx = objects.normal();
        const double dy = objects.normal();
        const double dw = objects.normal();
        const double dh = objects.normal();
        const double heat = 0.5 + objects.uniform();
        if (u_miss < params.p_miss)
            continue;

        const double s = params.jitter_sigma;
        BBox box = object.bbox;
        box.cx += s * object.bbox.bw * dx;
        box.cy += s * object.bbox.bh * dy;
        box.bw = std::max(0.0, object.bbox.bw * (1.0 + s * dw));
        box.bh = std::max(0.0, object.bbox.bh * (1.0 + s * dh));
        out.detections.push_back({box, softened_one_hot(k, object.class_index, params.class_temperature * heat)});
    }

    Rng spurious(derive_seed(seed, {2}));
    const unsigned count = Rng::poisson_from_uniform(params.p_spurious, spurious.uniform());
    const double mean_area = gt.objects.empty() ? 0.01 * meta.width * meta.height
                                                : area_sum / static_cast<double>(gt.objects.size());
    for (unsigned i = 0; i < count; ++i) {
        const double area = mean_area * spurious.uniform(0.2, 1.0);
        const double aspect = std::exp(spurious.uniform(std::log(0.5), std::log(2.0)));
        BBox box;
        box.bw = std::sqrt(area * aspect);
        box.bh = area / box.bw;
        box.cx = spurious.uniform(0.0, meta.width);
        box.cy = spurious.uniform(0.0, meta.height);
        const auto cls = static_cast<ClassIndex>(spurious.below(k));
        const double top = spurious.uniform(0.45, 0.65);
        out.detections.push_back({box, weak_distribution(k, cls, top)});
    }
    return out;
}

namespace {

// position of a point bouncing between lo and hi
double bounce(double start, double velocity, double t, double lo, double hi)
{
    const double span = hi - lo;
    if (span <= 0.0)
        return lo;
    double x = std::fmod(start - lo + velocity * t, 2.0 * span);
    if (x < 0.0)
        x += 2.0 * span;
    return lo + (x <= span ? x : 2.0 * span - x);
}

} // namespace

std::vector<GroundTruthFrame> make_synthetic_video(const VideoMeta& meta, const SyntheticVideoOptions& options)
{
    meta.validate();
    if (!(options.min_size > 0.0 && options.max_size >= options.min_size))
        throw ValidationError("synthetic object sizes must satisfy 0 < min_size <= max_size");
    if (!(options.min_lifetime > 0.0 && options.min_lifetime <= 1.0))
        throw ValidationError("min_lifetime must lie in (0, 1]");

    struct Track {
        ClassIndex cls;
        double w, h, x0, y0, vx, vy;
        std::size_t first, last;
    };

    Rng rng(derive_seed(options.seed, {0x5eed}));
    const auto m = meta.num_frames;
    std::vector<Track> tracks;
    for (std::size_t t = 0; t < options.num_tracks; ++t) {
        Track track{};
        track.cls = static_cast<ClassIndex>(rng.below(meta.num_classes()));
        track.w = std::min(rng.uniform(options.min_size, options.max_size), static_cast<double>(meta.width));
        track.h = std::min(rng.uniform(options.min_size, options.max_size), static_cast<double>(meta.height));
        track.x0 = rng.uniform(track.w / 2, meta.width - track.w / 2);
        track.y0 = rng.uniform(track.h / 2, meta.height - track.h / 2);
        track.vx = rng.uniform(-options.max_speed, options.max_speed);
        track.vy = rng.uniform(-options.max_speed, options.max_speed);
        const auto length = static_cast<std::size_t>(std::ceil(rng.uniform(options.min_lifetime, 1.0) * m));
        const auto slack = m - std::min(length, m);
        track.first = slack == 0 ? 0 : static_cast<std::size_t>(rng.below(slack + 1));
        track.last = std::min(m, track.first + length);
        tracks.push_back(track);
    }

    std::vector<GroundTruthFrame> frames(m);
    for (FrameIndex f = 0; f < m; ++f) {
        frames[f].frame_index = f;
        for (const auto& track : tracks) {
            if (f < track.first || f >= track.last)
                continue;
            const double t = static_cast<double>(f - track.first);
            BBox box;
            box.bw = track.w;
            box.bh = track.h;
            box.cx = bounce(track.x0, track.vx, t, track.w / 2, meta.width - track.w / 2);
            box.cy = bounce(track.y0, track.vy, t, track.h / 2, meta.height - track.h / 2);
            frames[f].objects.push_back({box, track.cls});
        }
    }
    return frames;
}

// Adapters --------------------------------------------------------------------

namespace {

std::vector<FrameIndex> all_frames(const DetectionRequest& request)
{
    std::vector<FrameIndex> frames = request.required;
    frames.insert(frames.end(), request.optional.begin(), request.optional.end());
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    return frames;
}

DetectionSet parse_reply(std::string_view text, std::size_t k, const std::string& context)
{
    try {
        return parse_detections(text, k).frames;
    } catch (const ValidationError& e) {
        throw AdapterError(context + ": " + e.what());
    }
}

std::string shell_quote(const std::string& text)
{
    std::string out = "'";
    for (const char c : text) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

} // namespace

DetectionSet FileAdapter::detect(const DetectionRequest& request, const LoopState& state)
{
    auto path = path_;
    if (std::filesystem::is_directory(path))
        path /= "iteration_" + std::to_string(request.iteration) + ".json";
    if (!std::filesystem::exists(path))
        throw AdapterError("iteration " + std::to_string(request.iteration) + ": detections file " + path.string() +
                           " does not exist");
    return parse_reply(read_text_file(path), state.meta.num_classes(),
                       "iteration " + std::to_string(request.iteration) + ": " + path.string());
}

ExecAdapter::ExecAdapter(std::string command, std::filesystem::path workdir, std::filesystem::path state_path)
    : command_(std::move(command)), workdir_(std::move(workdir)), state_path_(std::move(state_path))
{
}

DetectionSet ExecAdapter::detect(const DetectionRequest& request, const LoopState& state)
{
    std::filesystem::create_directories(workdir_);
    const auto request_path = workdir_ / "request.json";
    const auto response_path = workdir_ / "detections.json";
    std::filesystem::remove(response_path);

    nlohmann::ordered_json body;
    body["iteration"] = request.iteration;
    body["frame_indices"] = all_frames(request);
    body["state_path"] = state_path_.string();
    write_file_atomic(request_path, body.dump(2) + "\n");

    const std::string shell = "cd " + shell_quote(workdir_.string()) + " && " + command_;
    const int status = std::system(shell.c_str());
    const std::string context = "iteration " + std::to_string(request.iteration) + ": detector command '" + command_ + "'";
    if (status == -1)
        throw AdapterError(context + " could not be started");
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw AdapterError(context + " failed with exit status " +
                           std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status));
    if (!std::filesystem::exists(response_path))
        throw AdapterError(context + " did not write " + response_path.string());
    return parse_reply(read_text_file(response_path), state.meta.num_classes(), context);
}

HttpAdapter::HttpAdapter(std::string url)
{
    const auto scheme = url.find("://");
    if (scheme == std::string::npos || url.substr(0, scheme) != "http")
        throw ValidationError("http adapter needs an http:// URL, got '" + url + "'");
    const auto path_start = url.find('/', scheme + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

DetectionSet HttpAdapter::detect(const DetectionRequest& request, const LoopState& state)
{
    nlohmann::ordered_json body;
    body["iteration"] = request.iteration;
    body["frame_indices"] = all_frames(request);

    httplib::Client client(origin_);
    client.set_connection_timeout(10);
    client.set_read_timeout(600);
    const std::string context = "iteration " + std::to_string(request.iteration) + ": endpoint " + origin_ + path_;
    const auto response = client.Post(path_, body.dump(), "application/json");
    if (!response)
        throw AdapterError(context + " unreachable (" + httplib::to_string(response.error()) + ")");
    if (response->status != 200)
        throw AdapterError(context + " answered HTTP " + std::to_string(response->status));
    return parse_reply(response->body, state.meta.num_classes(), context);
}

SyntheticAdapter::SyntheticAdapter(std::vector<GroundTruthFrame> ground_truth, NoiseProfile profile,
                                   LearningDecay decay, std::uint64_t seed)
    : ground_truth_(std::move(ground_truth)), profile_(std::move(profile)), decay_(decay), seed_(seed)
{
    profile_.validate(ground_truth_.size());
    decay_.validate();
    for (std::size_t i = 0; i < ground_truth_.size(); ++i) {
        if (ground_truth_[i].frame_index != i)
            throw ValidationError("synthetic ground truth must list frames 0..m-1 in order");
    }
}

DetectionSet SyntheticAdapter::detect_frames(std::span<const FrameIndex> frames, const std::set<FrameIndex>& labeled,
                                             const VideoMeta& meta, std::uint64_t stream) const
{
    if (ground_truth_.size() != meta.num_frames)
        throw ValidationError("synthetic ground truth has " + std::to_string(ground_truth_.size()) +
                              " frames, the video has " + std::to_string(meta.num_frames));
    DetectionSet out;
    for (const auto f : frames) {
        const auto params = labeled.empty() ? profile_.at(f) : effective_noise(f, profile_, decay_, labeled);
        out[f] = synthesize_detections(ground_truth_.at(f), params, meta, derive_seed(seed_, {stream, f}));
    }
    return out;
}

DetectionSet SyntheticAdapter::detect(const DetectionRequest& request, const LoopState& state)
{
    return detect_frames(all_frames(request), state.labeled, state.meta, request.iteration);
}

DetectionSet fetch_detections(DetectorAdapter& adapter, const DetectionRequest& request, const LoopState& state)
{
    auto raw = adapter.detect(request, state);
    const std::string context = "iteration " + std::to_string(request.iteration) + ": " + adapter.name() + " adapter";

    std::vector<FrameIndex> missing;
    for (const auto f : request.required) {
        if (!raw.contains(f))
            missing.push_back(f);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto f : missing)
            list += (list.empty() ? "" : ", ") + std::to_string(f);
        throw AdapterError(context + " returned no detections for frame(s) " + list);
    }

    const std::set<FrameIndex> wanted = [&] {
        std::set<FrameIndex> s(request.required.begin(), request.required.end());
        s.insert(request.optional.begin(), request.optional.end());
        return s;
    }();
    DetectionSet out;
    for (auto& [frame, dets] : raw) {
        if (!wanted.contains(frame))
            continue;
        for (const auto& d : dets.detections) {
            d.bbox.validate();
            if (d.probs.size() != state.meta.num_classes())
                throw AdapterError(context + ": frame " + std::to_string(frame) + " has a distribution of length " +
                                   std::to_string(d.probs.size()) + ", expected " +
                                   std::to_string(state.meta.num_classes()));
        }
        dets.frame_index = frame;
        out.emplace(frame, std::move(dets));
    }
    return out;
}

DetectionRequest next_request(const LoopState& state)
{
    DetectionRequest request;
    request.iteration = state.iteration;
    request.required = state.queryable();
    request.optional.assign(state.test.begin(), state.test.end());
    return request;
}

} // namespace vidal
