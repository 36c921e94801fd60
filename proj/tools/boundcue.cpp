#include <boundcue/commands.hpp>
#include <boundcue/service.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

using namespace boundcue;

int main(int argc, char** argv) {
    CLI::App app{"Single-image depth from boundary cues"};
    app.require_subcommand(1);

    ReconstructJob job;
    std::string image, config;
    auto* rec = app.add_subcommand("reconstruct", "reconstruct a height field");
    rec->add_option("--image", image, "16-bit PNG");
    rec->add_option("--annotations", job.annotations, "annotation JSON")->required();
    rec->add_option("--variant", job.variant, "silh, selfocc, folds, occ_folds, silh_sfs, full")
        ->capture_default_str();
    rec->add_option("--config", config, "JSON config");
    rec->add_option("--out", job.out, "output directory")->required();
    rec->add_option("--seed", job.seed)->capture_default_str();

    std::string scene;
    std::vector<std::string> variants;
    std::string ablate_out;
    auto* abl = app.add_subcommand("ablate", "run variants on a scene with ground truth");
    abl->add_option("--scene", scene, "scene directory")->required();
    abl->add_option("--variants", variants, "comma-separated; default all applicable")->delimiter(',');
    abl->add_option("--config", config, "JSON config");
    abl->add_option("--out", ablate_out, "CSV path; stdout if omitted");

    std::string kind;
    int size = 64;
    std::string synth_out;
    std::uint64_t seed = 0;
    auto* syn = app.add_subcommand("synth", "write a synthetic scene");
    syn->add_option("--kind", kind, "hemisphere, cube, wedge, two_slabs, composite")->required();
    syn->add_option("--size", size)->capture_default_str();
    syn->add_option("--out", synth_out)->required();
    syn->add_option("--seed", seed)->capture_default_str();

    std::string corrupt;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gc->add_option("--seed", seed)->capture_default_str();
    gc->add_option("--corrupt", corrupt, "term whose gradient is scaled by 1.01");

    std::string depth, truth;
    auto* ev = app.add_subcommand("evaluate", "N-MSE and Z-MAE against ground truth");
    ev->add_option("--depth", depth)->required();
    ev->add_option("--truth", truth)->required();

    int port = 8080;
    std::string root, host = "127.0.0.1";
    auto* srv = app.add_subcommand("serve", "HTTP API");
    srv->add_option("--port", port)->capture_default_str();
    srv->add_option("--host", host)->capture_default_str();
    srv->add_option("--root", root, "directory of image ids")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    if (*rec) {
        if (!image.empty()) job.image = image;
        if (!config.empty()) job.config = config;
        return cmd_reconstruct(job, std::cerr);
    }
    if (*abl) {
        std::optional<fs::path> cfg, out;
        if (!config.empty()) cfg = config;
        if (!ablate_out.empty()) out = ablate_out;
        return cmd_ablate(scene, variants, cfg, out, std::cout, std::cerr);
    }
    if (*syn) return cmd_synth(kind, size, synth_out, seed, std::cerr);
    if (*gc) return cmd_gradcheck(seed, corrupt, std::cout, std::cerr);
    if (*ev) return cmd_evaluate(depth, truth, std::cout, std::cerr);
    if (*srv) {
        if (!fs::is_directory(root)) {
            std::cerr << "error: root is not a directory: " << root << "\n";
            return kExitInput;
        }
        Service service({.root = root});
        std::cerr << "serving " << root << " on http://" << host << ":" << port << "\n";
        if (!service.listen(host, port)) {
            std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
            return kExitInput;
        }
    }
    return kExitOk;
}
