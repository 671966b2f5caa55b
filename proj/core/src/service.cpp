#include "vidal/service.hpp"

#include "vidal/error.hpp"
#include "vidal/formats.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>

namespace vidal {

using Json = nlohmann::ordered_json;

namespace {

// Frames of the batch currently being annotated (or the last finished one).
std::vector<FrameIndex> current_batch(const LoopState& state)
{
    if (state.history.empty())
        return state.initial_guiding;
    return state.history.back().frames;
}

Json queue_json(const LoopState& state, bool can_iterate)
{
    const auto view = queue_view(state);
    Json j;
    j["iteration"] = view.iteration;
    j["pending_count"] = view.pending.size();
    j["pending"] = view.pending;
    j["done"] = view.done;
    j["iteration_complete"] = view.iteration_complete;
    j["stopped"] = view.stopped;
    j["can_iterate"] = can_iterate && view.iteration_complete && !view.stopped;

    Json items = Json::array();
    const auto batch = current_batch(state);
    const QueryRecord* record = state.history.empty() ? nullptr : &state.history.back();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Json item;
        item["frame_index"] = batch[i];
        item["status"] = state.labeled.contains(batch[i]) ? "done" : "pending";
        item["frame_score"] = record ? record->frame_scores[i] : 0.0;
        item["weighted_score"] = record ? record->weighted_scores[i] : 0.0;
        items.push_back(std::move(item));
    }
    j["items"] = std::move(items);
    return j;
}

HttpResponse json_response(int status, const Json& body)
{
    return {status, body.dump(2) + "\n", "application/json"};
}

HttpResponse error_response(int status, const std::string& message)
{
    Json body;
    body["error"] = message;
    return json_response(status, body);
}

std::string content_type_for(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        return "image/png";
    if (ext == ".jpg" || ext == ".jpeg")
        return "image/jpeg";
    if (ext == ".bmp")
        return "image/bmp";
    if (ext == ".webp")
        return "image/webp";
    return "application/octet-stream";
}

// Trailing digits of a file stem, e.g. "frame_000012" -> 12.
std::optional<FrameIndex> frame_of(const std::filesystem::path& path)
{
    const auto stem = path.stem().string();
    auto start = stem.size();
    while (start > 0 && std::isdigit(static_cast<unsigned char>(stem[start - 1])))
        --start;
    if (start == stem.size() || stem.size() - start > 18)
        return std::nullopt;
    return static_cast<FrameIndex>(std::stoull(stem.substr(start)));
}

} // namespace

QueueView queue_view(const LoopState& state)
{
    QueueView view;
    view.iteration = state.iteration;
    view.pending = state.pending;
    for (const auto f : current_batch(state)) {
        if (state.labeled.contains(f))
            view.done.push_back(f);
    }
    view.iteration_complete = state.pending.empty();
    view.stopped = state.stopped();
    return view;
}

QueueView handle_annotation_submission(LoopState& state, const std::filesystem::path& state_path, FrameIndex frame,
                                       std::vector<LabeledObject> objects)
{
    const GroundTruthFrame label{frame, std::move(objects)};
    auto next = ingest_annotations(state, std::span<const GroundTruthFrame>(&label, 1));
    if (next == state)
        return queue_view(state);
    persist_state(next, state_path);
    state = std::move(next);
    return queue_view(state);
}

struct WorkbenchService::Server {
    httplib::Server http;
};

WorkbenchService::WorkbenchService(Options options)
    : options_(std::move(options)),
      state_(std::make_shared<const LoopState>(load_state(options_.state_path))),
      server_(std::make_unique<Server>())
{
    auto& http = server_->http;
    auto reply = [](httplib::Response& res, const HttpResponse& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    auto frame_param = [](const httplib::Request& req) { return static_cast<FrameIndex>(std::stoull(req.matches[1])); };

    http.Get("/api/state", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, get_state()); });
    http.Get("/api/queue", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, get_queue()); });
    http.Get("/api/history",
             [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, get_history()); });
    http.Get(R"(/api/frames/(\d+)/image)", [this, reply, frame_param](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_frame_image(frame_param(req)));
    });
    http.Get(R"(/api/frames/(\d+)/predictions)",
             [this, reply, frame_param](const httplib::Request& req, httplib::Response& res) {
                 reply(res, get_frame_predictions(frame_param(req)));
             });
    http.Post(R"(/api/frames/(\d+)/annotations)",
              [this, reply, frame_param](const httplib::Request& req, httplib::Response& res) {
                  reply(res, post_annotations(frame_param(req), req.body));
              });
    http.Post("/api/iterate", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, post_iterate()); });
}

WorkbenchService::~WorkbenchService()
{
    stop();
}

std::shared_ptr<const LoopState> WorkbenchService::snapshot() const
{
    std::shared_lock lock(snapshot_mutex_);
    return state_;
}

HttpResponse WorkbenchService::get_state() const
{
    return {200, format_state(*snapshot()), "application/json"};
}

HttpResponse WorkbenchService::get_queue() const
{
    return json_response(200, queue_json(*snapshot(), options_.adapter != nullptr));
}

HttpResponse WorkbenchService::get_history() const
{
    const auto state = snapshot();
    Json j;
    j["iteration"] = state->iteration;
    j["labeled"] = state->labeled.size();
    j["stop_target"] = state->stop_target();
    Json records = Json::array();
    for (const auto& record : state->history) {
        Json r;
        r["iteration"] = record.iteration;
        r["frames"] = record.frames;
        r["frame_scores"] = record.frame_scores;
        r["weighted_scores"] = record.weighted_scores;
        r["mu"] = record.mu;
        r["complete"] = std::all_of(record.frames.begin(), record.frames.end(),
                                    [&](FrameIndex f) { return state->labeled.contains(f); });
        records.push_back(std::move(r));
    }
    j["history"] = std::move(records);
    return json_response(200, j);
}

HttpResponse WorkbenchService::get_frame_image(FrameIndex frame) const
{
    const auto state = snapshot();
    if (frame >= state->meta.num_frames)
        return error_response(404, "frame " + std::to_string(frame) + " outside the video");
    std::error_code ec;
    if (options_.images_dir.empty() || !std::filesystem::is_directory(options_.images_dir, ec))
        return error_response(404, "no image directory configured");
    for (const auto& entry : std::filesystem::directory_iterator(options_.images_dir, ec)) {
        if (!entry.is_regular_file())
            continue;
        if (frame_of(entry.path()) == frame)
            return {200, read_text_file(entry.path()), content_type_for(entry.path())};
    }
    return error_response(404, "no image for frame " + std::to_string(frame));
}

HttpResponse WorkbenchService::get_frame_predictions(FrameIndex frame) const
{
    const auto state = snapshot();
    const auto it = state->pending_predictions.find(frame);
    if (it == state->pending_predictions.end())
        return error_response(404, "no stored predictions for frame " + std::to_string(frame));
    DetectionsDocument doc;
    doc.iteration = state->iteration;
    doc.frames[frame] = it->second;
    return {200, format_detections(doc), "application/json"};
}

HttpResponse WorkbenchService::post_annotations(FrameIndex frame, const std::string& body)
{
    std::lock_guard write(write_mutex_);
    auto state = *snapshot();
    try {
        handle_annotation_submission(state, options_.state_path, frame, parse_frame_objects(body, frame));
    } catch (const ConflictError& e) {
        return error_response(409, e.what());
    } catch (const ValidationError& e) {
        return error_response(400, e.what());
    } catch (const Error& e) {
        return error_response(500, e.what());
    }
    {
        std::unique_lock lock(snapshot_mutex_);
        state_ = std::make_shared<const LoopState>(state);
    }
    return json_response(200, queue_json(state, options_.adapter != nullptr));
}

HttpResponse WorkbenchService::post_iterate()
{
    std::lock_guard write(write_mutex_);
    if (!options_.adapter)
        return error_response(503, "no detector adapter configured");
    const auto current = snapshot();
    IterationOutcome outcome;
    try {
        const auto detections = fetch_detections(*options_.adapter, next_request(*current), *current);
        outcome = run_iteration(*current, detections);
        persist_state(outcome.state, options_.state_path);
    } catch (const StateError& e) {
        return error_response(409, e.what());
    } catch (const AdapterError& e) {
        return error_response(502, e.what());
    } catch (const ValidationError& e) {
        return error_response(400, e.what());
    } catch (const Error& e) {
        return error_response(500, e.what());
    }
    {
        std::unique_lock lock(snapshot_mutex_);
        state_ = std::make_shared<const LoopState>(outcome.state);
    }
    return {200, format_scores_report(outcome), "application/json"};
}

bool WorkbenchService::listen(const std::string& host, int port)
{
    return server_->http.listen(host, port);
}

int WorkbenchService::bind_any_port(const std::string& host)
{
    return server_->http.bind_to_any_port(host);
}

bool WorkbenchService::listen_after_bind()
{
    return server_->http.listen_after_bind();
}

void WorkbenchService::stop()
{
    if (server_)
        server_->http.stop();
}

void WorkbenchService::wait_until_ready() const
{
    server_->http.wait_until_ready();
}

} // namespace vidal
