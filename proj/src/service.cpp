#include <boundcue/service.hpp>

#include <boundcue/commands.hpp>
#include <boundcue/errors.hpp>
#include <boundcue/io.hpp>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

namespace boundcue {

using json = nlohmann::json;

int worker_threads(int fallback) {
    if (const char* env = std::getenv("BOUNDCUE_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
    }
    return std::max(1, fallback);
}

namespace {

struct Job {
    std::string id;
    std::string image_id;
    std::string key;
    LoadedJob input;
    std::optional<HeightField> truth;

    // guarded by Impl::mu
    std::string status = "queued";
    std::string error;
    json metrics;
    json diagnostics;
    std::string mesh;
    std::string depth;

    std::atomic<double> progress{0.0};
};

/// 400/404 carrier for request handlers.
struct HttpError {
    int status;
    std::string message;
    std::string field;
    json extra = json::object();
};

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const HttpError& e) {
    json body{{"error", e.message}};
    if (!e.field.empty()) body["field"] = e.field;
    body.update(e.extra);
    reply(res, e.status, body);
}

bool valid_id(const std::string& id) {
    static const std::regex re("[A-Za-z0-9_.-]+");
    return std::regex_match(id, re) && id != "." && id != "..";
}

}  // namespace

struct Service::Impl {
    ServiceOptions opts;
    httplib::Server server;
    std::thread server_thread;

    std::mutex mu;
    std::condition_variable cv;
    bool stopping = false;
    std::deque<std::shared_ptr<Job>> pending;
    std::map<std::string, std::shared_ptr<Job>> jobs;
    std::set<std::string> busy_images;
    std::vector<std::thread> workers;
    std::uint64_t next_id = 1;

    std::mutex files;  // annotation reads/writes

    explicit Impl(ServiceOptions o) : opts(std::move(o)) {
        routes();
        const int n = opts.workers > 0 ? opts.workers : worker_threads(2);
        for (int i = 0; i < n; ++i) workers.emplace_back([this] { work(); });
    }

    ~Impl() {
        server.stop();
        if (server_thread.joinable()) server_thread.join();
        {
            std::lock_guard lk(mu);
            stopping = true;
        }
        cv.notify_all();
        for (auto& t : workers) t.join();
    }

    fs::path dir(const std::string& id) const { return opts.root / id; }

    std::string checked_id(const std::string& id) const {
        if (!valid_id(id) || !fs::is_directory(dir(id)))
            throw HttpError{404, "unknown image id '" + id + "'", ""};
        return id;
    }

    // --- jobs -------------------------------------------------------------

    void work() {
        while (true) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return stopping || runnable() != pending.end(); });
                if (stopping) return;
                auto it = runnable();
                job = *it;
                pending.erase(it);
                busy_images.insert(job->image_id);
                job->status = "running";
            }
            run(*job);
            {
                std::lock_guard lk(mu);
                busy_images.erase(job->image_id);
            }
            cv.notify_all();
        }
    }

    std::deque<std::shared_ptr<Job>>::iterator runnable() {
        return std::find_if(pending.begin(), pending.end(),
                            [&](const auto& j) { return !busy_images.count(j->image_id); });
    }

    void run(Job& job) {
        const auto& in = job.input;
        try {
            const auto r = solve(in.image ? &*in.image : nullptr, in.annotations, in.variant,
                                 in.config.solver, in.config.model, {},
                                 [&job](double p) { job.progress = p; });
            json metrics;
            if (job.truth) {
                const auto m = evaluate(r.z, *job.truth);
                metrics = {{"n_mse", m.n_mse}, {"z_mae", m.z_mae}, {"pixels", m.pixels}};
            }
            auto diagnostics = json::parse(diagnostics_json(r, in, 0));
            auto mesh = encode_obj(r.z);
            auto depth = encode_pfm(r.z);
            std::lock_guard lk(mu);
            job.metrics = std::move(metrics);
            job.diagnostics = std::move(diagnostics);
            job.mesh = std::move(mesh);
            job.depth = std::move(depth);
            job.progress = 1.0;
            job.status = "done";
        } catch (const std::exception& e) {
            std::lock_guard lk(mu);
            job.error = e.what();
            job.status = "failed";
        }
    }

    json submit(const std::string& body) {
        json req;
        try {
            req = json::parse(body);
        } catch (const json::parse_error&) {
            throw HttpError{400, "request body is not valid JSON", "(body)"};
        }
        if (!req.is_object()) throw HttpError{400, "request body must be an object", "(body)"};
        for (const auto& [k, v] : req.items())
            if (k != "id" && k != "variant" && k != "config") throw HttpError{400, "unknown key", k};
        if (!req.contains("id") || !req["id"].is_string())
            throw HttpError{400, "id must be a string", "id"};
        if (!req.contains("variant") || !req["variant"].is_string())
            throw HttpError{400, "variant must be a string", "variant"};
        const std::string id = checked_id(req["id"].get<std::string>());

        auto job = std::make_shared<Job>();
        job->image_id = id;
        Variant v;
        try {
            v = parse_variant(req["variant"].get<std::string>());
        } catch (const Error& e) {
            throw HttpError{400, e.what(), "variant"};
        }
        job->input.variant = {v, variant_weights(v)};
        json config = json::object();
        if (req.contains("config") && !req["config"].is_null()) {
            config = req["config"];
            try {
                job->input.config = parse_config(config.dump(), "config");
            } catch (const SchemaError& e) {
                throw HttpError{400, e.what(), e.field()};
            }
        }

        {
            std::lock_guard lk(files);
            const auto ann = dir(id) / kSceneAnnotations;
            if (!fs::exists(ann)) throw HttpError{404, "image '" + id + "' has no annotations", ""};
            try {
                job->input.annotations = load_annotations(ann);
            } catch (const SchemaError& e) {
                throw HttpError{400, e.what(), e.field()};
            }
        }
        const auto& mask = job->input.annotations.silhouette_mask;
        if (uses_shading(v)) {
            const auto img = dir(id) / kSceneImage;
            if (!fs::exists(img)) throw HttpError{400, "variant requires an image", "variant"};
            const Image png = read_png(img);
            if (png.width != mask.width() || png.height != mask.height())
                throw HttpError{400, "image size differs from the annotations", "id"};
            job->input.image = to_log_image(png, mask);
        }
        const auto truth = dir(id) / kSceneTruth;
        if (fs::exists(truth)) {
            auto z = read_bczf(truth);
            if (z.width() == mask.width() && z.height() == mask.height()) job->truth = std::move(z);
        }
        job->key = id + "|" + std::string(to_string(v)) + "|" + config.dump();

        std::lock_guard lk(mu);
        for (const auto& [jid, j] : jobs)
            if (j->key == job->key && (j->status == "queued" || j->status == "running"))
                throw HttpError{409, "an identical job is already " + j->status, "", {{"job_id", jid}}};
        if (pending.size() >= opts.queue_capacity) throw HttpError{503, "job queue is full", ""};
        job->id = "job-" + std::to_string(next_id++);
        jobs[job->id] = job;
        pending.push_back(job);
        cv.notify_all();
        return {{"job_id", job->id}};
    }

    std::shared_ptr<Job> find_job(const std::string& id) {
        std::lock_guard lk(mu);
        auto it = jobs.find(id);
        if (it == jobs.end()) throw HttpError{404, "unknown job '" + id + "'", ""};
        return it->second;
    }

    json job_status(const std::string& id) {
        auto job = find_job(id);
        std::lock_guard lk(mu);
        json j{{"job_id", job->id},
               {"image_id", job->image_id},
               {"variant", std::string(to_string(job->input.variant.name))},
               {"status", job->status},
               {"progress", job->progress.load()}};
        if (job->status == "done") {
            if (!job->metrics.is_null()) j["metrics"] = job->metrics;
            j["diagnostics"] = job->diagnostics;
        }
        if (job->status == "failed") j["error"] = job->error;
        return j;
    }

    std::string job_artifact(const std::string& id, bool mesh) {
        auto job = find_job(id);
        std::lock_guard lk(mu);
        if (job->status != "done")
            throw HttpError{409, "job " + id + " is " + job->status + ", not done", ""};
        return mesh ? job->mesh : job->depth;
    }

    // --- routes -----------------------------------------------------------

    template <typename F>
    static httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const HttpError& e) {
                reply_error(res, e);
            } catch (const std::exception& e) {
                reply_error(res, {500, e.what(), ""});
            }
        };
    }

    void routes() {
        server.Get("/api/images", guarded([this](const httplib::Request&, httplib::Response& res) {
            json list = json::array();
            std::vector<fs::path> dirs;
            if (fs::is_directory(opts.root))
                for (const auto& e : fs::directory_iterator(opts.root))
                    if (e.is_directory() && valid_id(e.path().filename().string())) dirs.push_back(e.path());
            std::sort(dirs.begin(), dirs.end());
            for (const auto& d : dirs)
                list.push_back({{"id", d.filename().string()},
                                {"has_image", fs::exists(d / kSceneImage)},
                                {"has_annotations", fs::exists(d / kSceneAnnotations)},
                                {"has_ground_truth", fs::exists(d / kSceneTruth)}});
            reply(res, 200, {{"images", list}});
        }));

        server.Get(R"(/api/images/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto id = checked_id(req.matches[1]);
            const auto p = dir(id) / kSceneImage;
            if (!fs::exists(p)) throw HttpError{404, "image '" + id + "' has no PNG", ""};
            res.set_content(read_file(p), "image/png");
        }));

        server.Get(R"(/api/annotations/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto id = checked_id(req.matches[1]);
                       std::lock_guard lk(files);
                       const auto p = dir(id) / kSceneAnnotations;
                       if (!fs::exists(p)) throw HttpError{404, "image '" + id + "' has no annotations", ""};
                       res.set_content(read_file(p), "application/json");
                   }));

        server.Put(R"(/api/annotations/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto id = checked_id(req.matches[1]);
                       AnnotationDocument doc;
                       try {
                           doc = parse_annotation_document(req.body, dir(id));
                       } catch (const SchemaError& e) {
                           throw HttpError{400, e.what(), e.field()};
                       } catch (const BoundsError& e) {
                           throw HttpError{400, e.what(),
                                           "contours[" + std::to_string(e.polyline_index()) + "].points"};
                       } catch (const Error& e) {
                           throw HttpError{400, e.what(), "mask"};
                       }
                       const auto img = dir(id) / kSceneImage;
                       if (fs::exists(img)) {
                           const Image png = read_png(img);
                           if (png.width != doc.width || png.height != doc.height)
                               throw HttpError{400, "image block does not match the stored PNG", "image"};
                       }
                       const auto text = serialize_annotation_document(doc);
                       std::lock_guard lk(files);
                       write_file(dir(id) / kSceneAnnotations, text);
                       res.status = 200;
                       res.set_content(text, "application/json");
                   }));

        server.Post("/api/reconstruct", guarded([this](const httplib::Request& req, httplib::Response& res) {
            reply(res, 202, submit(req.body));
        }));

        server.Get(R"(/api/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            reply(res, 200, job_status(req.matches[1]));
        }));
        server.Get(R"(/api/jobs/([^/]+)/mesh)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       res.set_content(job_artifact(req.matches[1], true), "model/obj");
                   }));
        server.Get(R"(/api/jobs/([^/]+)/depth)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       res.set_content(job_artifact(req.matches[1], false), "application/octet-stream");
                   }));
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) reply(res, res.status, {{"error", httplib::status_message(res.status)}});
        });
    }
};

Service::Service(ServiceOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) {}
Service::~Service() = default;

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::start(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0) throw Error("cannot bind a port on " + host);
    impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::stop() {
    impl_->server.stop();
    if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

}  // namespace boundcue
