#include "support.hpp"

#include <boundcue/commands.hpp>
#include <boundcue/io.hpp>
#include <boundcue/service.hpp>

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

using namespace bct;
using json = nlohmann::json;

namespace {

const char* kQuick = R"({"solver":{"max_iters":60}})";

fs::path data_root() {
    static const fs::path root = [] {
        const auto r = fs::temp_directory_path() / "boundcue_service";
        fs::remove_all(r);
        write_scene(r / "composite", make_scene(SceneKind::Composite, 64), 0);
        write_scene(r / "slabs", make_scene(SceneKind::TwoSlabs, 48), 0);
        const auto hemi = make_scene(SceneKind::Hemisphere, 32);
        fs::create_directories(r / "bare");
        write_file(r / "bare" / kSceneAnnotations, serialize_annotation_document(hemi.document));
        return r;
    }();
    return root;
}

struct Fixture {
    Service service{{.root = data_root(), .workers = 2}};
    int port = service.start();
    httplib::Client client{"127.0.0.1", port};

    Fixture() { client.set_read_timeout(60, 0); }

    json get_json(const std::string& path, int expect = 200) {
        auto r = client.Get(path);
        REQUIRE(r);
        CHECK(r->status == expect);
        return json::parse(r->body);
    }

    httplib::Result post(const json& body) {
        return client.Post("/api/reconstruct", body.dump(), "application/json");
    }

    json wait(const std::string& job) {
        for (int i = 0; i < 600; ++i) {
            auto j = get_json("/api/jobs/" + job);
            if (j["status"] == "done" || j["status"] == "failed") return j;
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        FAIL("job did not finish: " << job);
        return {};
    }
};

std::string serial_depth(const std::string& id, Variant v) {
    const auto a = load_annotations(data_root() / id / kSceneAnnotations);
    const auto cfg = parse_config(kQuick);
    return encode_pfm(solve(nullptr, a, {v, variant_weights(v)}, cfg.solver, cfg.model).z);
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("image listing and PNG download") {
    Fixture f;
    const auto list = f.get_json("/api/images")["images"];
    REQUIRE(list.size() == 3);
    CHECK(list[0]["id"] == "bare");
    CHECK(list[0]["has_image"] == false);
    CHECK(list[1]["id"] == "composite");
    CHECK(list[1]["has_ground_truth"] == true);
    auto png = f.client.Get("/api/images/composite");
    REQUIRE(png);
    CHECK(png->status == 200);
    CHECK(png->get_header_value("Content-Type") == "image/png");
    CHECK(png->body == read_file(data_root() / "composite" / kSceneImage));
    CHECK(f.client.Get("/api/images/bare")->status == 404);
    CHECK(f.client.Get("/api/images/nothing")->status == 404);
}

TEST_CASE("PUT rejects a fold without convexity") {
    Fixture f;
    const std::string doc =
        R"({"version":1,"image":{"width":32,"height":32},"contours":[{"kind":"fold","points":[[4,4],[20,20]]}]})";
    auto r = f.client.Put("/api/annotations/bare", doc, "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(json::parse(r->body)["field"] == "contours[0].convexity");
    auto bad = f.client.Put("/api/annotations/bare", "{not json", "application/json");
    CHECK(bad->status == 400);
    auto oob = f.client.Put(
        "/api/annotations/bare",
        R"({"version":1,"image":{"width":32,"height":32},"mask":"rle:0,1024","contours":[{"kind":"silhouette_sharp","points":[[4,4],[40,4]]}]})",
        "application/json");
    CHECK(oob->status == 400);
    CHECK(json::parse(oob->body)["field"] == "contours[0].points");
}

TEST_CASE("PUT stores the canonical form and GET returns it") {
    Fixture f;
    const auto before = f.client.Get("/api/annotations/bare")->body;
    const std::string doc =
        R"({"version":1,"image":{"width":32,"height":32},"contours":[)"
        R"({"kind":"silhouette_smooth","points":[[6,6],[25,6],[25,25],[6,25],[6,6]]},)"
        R"({"kind":"fold","convexity":"convex","points":[[15,9],[15,22]]}]})";
    auto r = f.client.Put("/api/annotations/bare", doc, "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto stored = f.client.Get("/api/annotations/bare")->body;
    CHECK(stored == r->body);
    CHECK(stored == serialize_annotation_document(parse_annotation_document(doc)));
    // restore
    CHECK(f.client.Put("/api/annotations/bare", before, "application/json")->status == 200);
}

TEST_CASE("reconstruct request validation") {
    Fixture f;
    CHECK(f.post({{"id", "nothing"}, {"variant", "silh"}})->status == 404);
    auto r = f.post({{"id", "composite"}, {"variant", "everything"}});
    CHECK(r->status == 400);
    CHECK(json::parse(r->body)["field"] == "variant");
    r = f.post({{"id", "bare"}, {"variant", "shading"}});
    CHECK(r->status == 400);
    CHECK(json::parse(r->body)["error"].get<std::string>().find("variant requires an image") != std::string::npos);
    r = f.post({{"id", "composite"}, {"variant", "silh"}, {"config", {{"solver", {{"bogus", 1}}}}}});
    CHECK(r->status == 400);
    CHECK(json::parse(r->body)["field"] == "config.solver.bogus");
    CHECK(f.client.Post("/api/reconstruct", "[", "application/json")->status == 400);
    CHECK(f.client.Get("/api/jobs/job-999")->status == 404);
    CHECK(f.client.Get("/api/jobs/job-999/mesh")->status == 404);
}

TEST_CASE("composite job reports metrics and serves its mesh") {
    Fixture f;
    auto r = f.post({{"id", "composite"}, {"variant", "occ_folds"}, {"config", json::parse(kQuick)}});
    REQUIRE(r);
    REQUIRE(r->status == 202);
    const std::string job = json::parse(r->body)["job_id"];

    // duplicate while queued or running
    auto dup = f.post({{"id", "composite"}, {"variant", "occ_folds"}, {"config", json::parse(kQuick)}});
    auto early = f.client.Get("/api/jobs/" + job + "/mesh");
    const auto done = f.wait(job);
    if (dup->status == 409) CHECK(json::parse(dup->body)["job_id"] == job);
    if (early->status != 200) CHECK(early->status == 409);

    REQUIRE(done["status"] == "done");
    CHECK(done["progress"] == 1.0);
    CHECK(done["metrics"]["n_mse"].get<double>() >= 0.0);
    CHECK(done["metrics"].contains("z_mae"));
    CHECK(done["diagnostics"]["variant"] == "occ_folds");
    auto mesh = f.client.Get("/api/jobs/" + job + "/mesh");
    REQUIRE(mesh);
    CHECK(mesh->status == 200);
    CHECK(mesh->body.find("v ") != std::string::npos);
    CHECK(mesh->body.find("\nf ") != std::string::npos);
    auto depth = f.client.Get("/api/jobs/" + job + "/depth");
    CHECK(depth->status == 200);
    CHECK(depth->body.rfind("Pf\n64 64\n", 0) == 0);
}

TEST_CASE("concurrent jobs on two images match serial runs") {
    Fixture f;
    auto a = f.post({{"id", "composite"}, {"variant", "folds"}, {"config", json::parse(kQuick)}});
    auto b = f.post({{"id", "slabs"}, {"variant", "selfocc"}, {"config", json::parse(kQuick)}});
    REQUIRE(a->status == 202);
    REQUIRE(b->status == 202);
    const std::string ja = json::parse(a->body)["job_id"], jb = json::parse(b->body)["job_id"];
    CHECK(f.wait(ja)["status"] == "done");
    CHECK(f.wait(jb)["status"] == "done");
    CHECK(f.client.Get("/api/jobs/" + ja + "/depth")->body == serial_depth("composite", Variant::Folds));
    CHECK(f.client.Get("/api/jobs/" + jb + "/depth")->body == serial_depth("slabs", Variant::SelfOcc));
}

TEST_CASE("a full queue answers 503") {
    Service service({.root = data_root(), .workers = 1, .queue_capacity = 1});
    const int port = service.start();
    httplib::Client c("127.0.0.1", port);
    std::vector<int> codes;
    for (const char* v : {"silh", "selfocc", "folds", "occ_folds"})
        codes.push_back(c.Post("/api/reconstruct", json{{"id", "composite"}, {"variant", v}, {"config", json::parse(kQuick)}}.dump(),
                               "application/json")->status);
    CHECK(std::count(codes.begin(), codes.end(), 503) >= 1);
    CHECK(codes[0] == 202);
}

TEST_CASE("worker count honours BOUNDCUE_THREADS") {
    ::setenv("BOUNDCUE_THREADS", "3", 1);
    CHECK(worker_threads(2) == 3);
    ::setenv("BOUNDCUE_THREADS", "zero", 1);
    CHECK(worker_threads(2) == 2);
    ::unsetenv("BOUNDCUE_THREADS");
    CHECK(worker_threads(5) == 5);
}

}
