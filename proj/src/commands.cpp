#include <boundcue/commands.hpp>

#include <boundcue/errors.hpp>
#include <boundcue/gradcheck.hpp>
#include <boundcue/io.hpp>

#include <json.hpp>

#include <chrono>
#include <limits>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace boundcue {

using json = nlohmann::json;

namespace {

AnnotationSet load_annotation_file(const fs::path& p) {
    if (!fs::exists(p)) throw Error("annotation file not found: " + p.string());
    return load_annotations(p);
}

LogImage load_image(const fs::path& p, const Mask& mask) {
    if (!fs::exists(p)) throw Error("image file not found: " + p.string());
    const Image img = read_png(p);
    if (img.width != mask.width() || img.height != mask.height())
        throw Error("image " + p.string() + " is " + std::to_string(img.width) + "x" +
                    std::to_string(img.height) + " but the annotations are " +
                    std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
    return to_log_image(img, mask);
}

}  // namespace

LoadedJob load_job(const ReconstructJob& job) {
    LoadedJob lj;
    const Variant v = parse_variant(job.variant);
    lj.variant = {v, variant_weights(v)};
    if (job.config) lj.config = load_config(*job.config);
    lj.annotations = load_annotation_file(job.annotations);
    if (uses_shading(v) && !job.image)
        throw Error("variant requires an image: " + std::string(to_string(v)) + " (pass --image)");
    if (job.image) lj.image = load_image(*job.image, lj.annotations.silhouette_mask);
    return lj;
}

bool non_converged(const SolveDiagnostics& d) { return !d.converged || d.line_search_failed; }

std::string diagnostics_json(const SolveResult& r, const LoadedJob& job, std::uint64_t seed) {
    const auto& d = r.diagnostics;
    CueWeights w = job.variant.weights;
    w.lambda_f = job.config.model.lambda_f;
    w.lambda_k = job.config.model.lambda_k;
    const auto value = evaluate_objective(job.image ? &*job.image : nullptr, job.annotations, w,
                                          job.config.model, r.z.values,
                                          r.light.value_or(IlluminationSH{}));
    const auto& g = value.geometric;
    json j;
    j["variant"] = std::string(to_string(job.variant.name));
    j["seed"] = seed;
    j["converged"] = d.converged;
    j["line_search_failed"] = d.line_search_failed;
    j["levels"] = d.levels;
    j["iterations"] = d.iterations;
    j["initial_energy"] = d.initial_energy;
    j["final_energy"] = d.final_energy;
    j["initial_grad_inf"] = d.initial_grad_inf;
    j["final_grad_inf"] = d.final_grad_inf;
    j["terms"] = {{"f_sfc", g.f_sfc},   {"f_selfocc", g.f_selfocc}, {"f_fold", g.f_fold},
                  {"f_fold_exact", g.f_fold_exact}, {"f_flat", g.f_flat}, {"f_smooth", g.f_smooth},
                  {"f_reg", g.f_reg},   {"total", value.total}};
    if (value.shading) {
        j["terms"]["g_reflectance"] = value.shading->g;
        j["terms"]["h_illumination"] = value.shading->h;
    }
    j["skipped"] = {{"sfc", d.skipped_sfc}, {"selfocc", d.skipped_selfocc}, {"fold", d.skipped_fold}};
    j["clamped_pixels"] = d.clamped_pixels;
    j["warnings"] = d.warnings;
    if (r.light) j["light"] = std::vector<double>(r.light->coeffs.begin(), r.light->coeffs.end());
    j["wall_seconds"] = d.wall_seconds;
    return j.dump(2) + "\n";
}

void write_artifacts(const fs::path& out, const SolveResult& r, const LoadedJob& job,
                     std::uint64_t seed) {
    fs::create_directories(out);
    write_bczf(out / ArtifactNames::depth, r.z);
    write_file(out / ArtifactNames::pfm, encode_pfm(r.z));
    write_file(out / ArtifactNames::mesh, encode_obj(r.z));
    write_png(out / ArtifactNames::normals, normals_image(normals(r.z), r.z.mask), 8);
    write_file(out / ArtifactNames::trace, trace_csv(r.trace));
    write_file(out / ArtifactNames::diagnostics, diagnostics_json(r, job, seed));
}

int cmd_reconstruct(const ReconstructJob& job, std::ostream& err) {
    LoadedJob lj;
    try {
        lj = load_job(job);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    SolveResult r;
    try {
        r = solve(lj.image ? &*lj.image : nullptr, lj.annotations, lj.variant, lj.config.solver,
                  lj.config.model);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    try {
        write_artifacts(job.out, r, lj, job.seed);
    } catch (const std::exception& e) {
        err << "error: writing artifacts to " << job.out.string() << ": " << e.what() << "\n";
        return kExitInput;
    }
    for (const auto& w : r.diagnostics.warnings) err << "warning: " << w << "\n";
    if (non_converged(r.diagnostics)) {
        err << "warning: solver did not converge ("
            << (r.diagnostics.line_search_failed ? "line search failed" : "iteration limit reached")
            << ")\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

std::vector<Variant> parse_variant_list(const std::string& csv) {
    std::vector<Variant> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(parse_variant(item.substr(b, e - b + 1)));
    }
    return out;
}

std::vector<AblationRow> run_ablation(const fs::path& scene, const std::vector<Variant>& variants,
                                      const RunConfig& config) {
    const auto annotations = load_annotation_file(scene / kSceneAnnotations);
    if (!fs::exists(scene / kSceneTruth))
        throw Error("scene has no ground truth: " + (scene / kSceneTruth).string());
    const HeightField truth = read_bczf(scene / kSceneTruth);
    std::optional<LogImage> image;
    if (fs::exists(scene / kSceneImage))
        image = load_image(scene / kSceneImage, annotations.silhouette_mask);

    std::vector<AblationRow> rows;
    for (Variant v : variants) {
        AblationRow row;
        row.variant = std::string(to_string(v));
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (uses_shading(v) && !image) throw Error("variant requires an image");
            const auto r = solve(image ? &*image : nullptr, annotations, {v, variant_weights(v)},
                                 config.solver, config.model);
            const auto m = evaluate(r.z, truth);
            row.n_mse = m.n_mse;
            row.z_mae = m.z_mae;
            row.status = "ok";
        } catch (const std::exception& e) {
            row.n_mse = row.z_mae = std::numeric_limits<double>::quiet_NaN();
            row.status = std::string("error: ") + e.what();
        }
        row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows.push_back(row);
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "variant,n_mse,z_mae,wall_time,status\n";
    char buf[64];
    for (const auto& r : rows) {
        std::string status = r.status;
        for (auto& c : status)
            if (c == ',' || c == '\n') c = ';';
        os << r.variant << ',';
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.3f,", r.n_mse, r.z_mae, r.wall_time);
        os << buf << status << '\n';
    }
    return os.str();
}

int cmd_ablate(const fs::path& scene, const std::vector<std::string>& names,
               const std::optional<fs::path>& config, const std::optional<fs::path>& out,
               std::ostream& stdout_, std::ostream& err) {
    std::vector<AblationRow> rows;
    try {
        const RunConfig cfg = config ? load_config(*config) : RunConfig{};
        std::vector<Variant> variants;
        for (const auto& n : names) {
            const auto part = parse_variant_list(n);
            variants.insert(variants.end(), part.begin(), part.end());
        }
        if (variants.empty()) {
            if (fs::exists(scene / kSceneImage))
                variants.assign(std::begin(kAllVariants), std::end(kAllVariants));
            else
                variants.assign(std::begin(kGeometricVariants), std::end(kGeometricVariants));
        }
        rows = run_ablation(scene, variants, cfg);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    const auto csv = ablation_csv(rows);
    try {
        if (out)
            write_file(*out, csv);
        else
            stdout_ << csv;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    for (const auto& r : rows)
        if (r.status != "ok") err << "warning: " << r.variant << ": " << r.status << "\n";
    return kExitOk;
}

void write_scene(const fs::path& dir, const SyntheticScene& s, std::uint64_t seed) {
    fs::create_directories(dir);
    const auto light = default_scene_light();
    const auto refl = synthetic_reflectance(s.z_star.mask, seed);
    const auto img = render_scene(s, light, refl);
    write_png(dir / kSceneImage, to_linear_image(img), 16);
    write_bczf(dir / kSceneTruth, s.z_star);
    write_file(dir / kSceneAnnotations, serialize_annotation_document(s.document));
    write_file(dir / kSceneLight, serialize_light(light));
}

int cmd_synth(const std::string& kind, int size, const fs::path& out, std::uint64_t seed,
              std::ostream& err) {
    try {
        const auto s = make_scene(parse_scene_kind(kind), size, {.seed = seed});
        write_scene(out, s, seed);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& corrupt, std::ostream& out,
                  std::ostream& err) {
    GradcheckReport r;
    try {
        GradcheckOptions o;
        o.seed = seed;
        o.corrupt_term = corrupt;
        r = run_gradcheck(o);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    out << r.text();
    return r.passed ? kExitOk : 1;
}

std::string metrics_json(const MetricReport& m) {
    return json{{"n_mse", m.n_mse}, {"z_mae", m.z_mae}, {"pixels", m.pixels}}.dump() + "\n";
}

int cmd_evaluate(const fs::path& depth, const fs::path& truth, std::ostream& out, std::ostream& err) {
    try {
        for (const auto& p : {depth, truth})
            if (!fs::exists(p)) throw Error("file not found: " + p.string());
        out << metrics_json(evaluate(read_bczf(depth), read_bczf(truth)));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}

}  // namespace boundcue
