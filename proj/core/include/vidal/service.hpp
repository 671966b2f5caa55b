#pragma once

#include "vidal/detector.hpp"
#include "vidal/loop.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

namespace vidal {

struct QueueView {
    std::size_t iteration = 0;
    std::vector<FrameIndex> pending;
    std::vector<FrameIndex> done; ///< annotated frames of the current batch
    bool iteration_complete = false;
    bool stopped = false;
};

QueueView queue_view(const LoopState& state);

/// Ingests one frame's annotation and persists the new state before
/// returning. Throws ConflictError for a frame that is not pending and
/// ValidationError for malformed boxes.
QueueView handle_annotation_submission(LoopState& state, const std::filesystem::path& state_path, FrameIndex frame,
                                       std::vector<LabeledObject> objects);

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Backend of the annotation workbench. Reads run against an immutable
/// snapshot; mutations are serialized and persisted before the snapshot is
/// swapped.
class WorkbenchService {
public:
    struct Options {
        std::filesystem::path state_path;
        std::filesystem::path images_dir;
        std::shared_ptr<DetectorAdapter> adapter; ///< may be null: POST /api/iterate then fails
    };

    explicit WorkbenchService(Options options);
    ~WorkbenchService();

    HttpResponse get_state() const;
    HttpResponse get_queue() const;
    HttpResponse get_history() const;
    HttpResponse get_frame_image(FrameIndex frame) const;
    HttpResponse get_frame_predictions(FrameIndex frame) const;
    HttpResponse post_annotations(FrameIndex frame, const std::string& body);
    HttpResponse post_iterate();

    /// Blocks serving HTTP until stop() is called.
    bool listen(const std::string& host, int port);
    /// Binds to an ephemeral port and returns it (for tests); serve with listen_after_bind().
    int bind_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

    std::shared_ptr<const LoopState> snapshot() const;

private:
    struct Server;

    Options options_;
    mutable std::shared_mutex snapshot_mutex_;
    std::mutex write_mutex_;
    std::shared_ptr<const LoopState> state_;
    std::unique_ptr<Server> server_;
};

} // namespace vidal
