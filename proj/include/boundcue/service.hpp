#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

namespace boundcue {

struct ServiceOptions {
    /// One subdirectory per image id holding image.png, annotations.json and
    /// optionally z_star.bczf.
    std::filesystem::path root;
    /// Job workers; 0 reads BOUNDCUE_THREADS, falling back to 2.
    int workers = 0;
    /// Queued (not yet running) jobs before POST answers 503.
    std::size_t queue_capacity = 16;
};

/// HTTP API over a data root. Jobs run FIFO, never two at once for the same
/// image id.
class Service {
  public:
    explicit Service(ServiceOptions opts);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Blocks serving on host:port. Returns false if the port cannot be bound.
    bool listen(const std::string& host, int port);
    /// Binds a free port, serves on a background thread and returns the port.
    int start(const std::string& host = "127.0.0.1");
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Worker count from BOUNDCUE_THREADS (>= 1), else `fallback`.
int worker_threads(int fallback);

}  // namespace boundcue
