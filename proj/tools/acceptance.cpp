// Prints one PASS/FAIL line per acceptance criterion (1-8).
#include <boundcue/commands.hpp>
#include <boundcue/energies.hpp>
#include <boundcue/gradcheck.hpp>
#include <boundcue/io.hpp>
#include <boundcue/metrics.hpp>
#include <boundcue/synth.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>

using namespace boundcue;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SolveResult run(const SyntheticScene& s, Variant v) {
    return solve(nullptr, s.annotations, {v, variant_weights(v)});
}

Outcome gradients() {
    const auto t0 = Clock::now();
    const auto r = run_gradcheck({});
    const double t = seconds_since(t0);
    const std::set<std::string> required{"f_sfc",         "f_selfocc",      "f_fold",
                                         "f_flat",        "f_smooth",       "g_reflectance",
                                         "h_illumination", "render_log_shading"};
    bool ok = t < 60.0;
    double worst = 0;
    std::size_t covered = 0;
    for (const auto& term : r.terms) {
        if (!required.count(term.name)) continue;
        ++covered;
        worst = std::max(worst, term.worst_rel_error);
        ok = ok && term.passed && term.instances >= 20;
    }
    ok = ok && covered == required.size();
    return {ok, fmt("%zu terms, worst rel error %.2e, %.1f s", covered, worst, t)};
}

Outcome fold_algebra() {
    // Wedge: crease along +y, left normal (-1,0,1)/sqrt2, right (1,0,1)/sqrt2,
    // N_l x N_r = (0,1,0) so c = 1 and max(0, 1/sqrt2 - 1) = 0.
    // Flat plane: N_l = N_r, c = 0, loss = 1/sqrt2.
    // 45 degree crease: N_l = (-1/sqrt2,-1/2,1/2), N_r = (1/sqrt2,-1/2,1/2),
    // N_l x N_r = (0,1,1)/sqrt2, c = 1/sqrt2 = eps, loss 0.
    const auto s = make_scene(SceneKind::Wedge, 64, {.wedge_angle = 90});
    const auto& f = s.annotations.samples_fold;
    const FoldConfig exact{.smoothing_tau = 0.0};
    const double n = double(f.size());
    const auto wedge = f_fold(s.z_star, f, exact);
    HeightField flat(64, 64, 3.0);
    flat.mask = s.z_star.mask;
    const double flat_loss = f_fold(flat, f, exact).exact_value / n;
    HeightField tilted = s.z_star;
    const int cx = 32;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) tilted(x, y) = -std::sqrt(2.0) * std::abs(x - cx) + y;
    const double tilted_loss = f_fold(tilted, f, exact).exact_value;
    const bool ok = f.size() > 0 && wedge.skipped == 0 && wedge.exact_value / n <= 1e-12 &&
                    std::abs(flat_loss - 1 / std::sqrt(2.0)) <= 1e-6 && tilted_loss / n <= 1e-12;
    return {ok, fmt("%zu samples, wedge %.1e, flat %.9f, 45deg crease %.1e", f.size(),
                    wedge.exact_value / n, flat_loss, tilted_loss / n)};
}

Outcome hemisphere() {
    const auto s = make_scene(SceneKind::Hemisphere, 64);
    const auto t0 = Clock::now();
    const auto r = run(s, Variant::Silh);
    const double t = seconds_since(t0);
    const auto m = evaluate(r.z, s.z_star);
    return {m.n_mse <= 0.15 && m.z_mae <= 2.0 && t <= 300,
            fmt("n_mse %.4f (<= 0.15), z_mae %.3f (<= 2.0), %.1f s", m.n_mse, m.z_mae, t)};
}

Outcome cue_ordering() {
    const auto s = make_scene(SceneKind::Composite, 64);
    const auto t0 = Clock::now();
    double e[4];
    const Variant vs[4] = {Variant::Silh, Variant::SelfOcc, Variant::Folds, Variant::OccFolds};
    for (int i = 0; i < 4; ++i) e[i] = n_mse(run(s, vs[i]).z, s.z_star);
    const double t = seconds_since(t0);
    const bool ok = e[3] <= e[1] && e[3] <= e[2] && e[1] <= e[0] && e[2] <= e[0] && t <= 1200;
    return {ok, fmt("n_mse silh %.4f, selfocc %.4f, folds %.4f, occ_folds %.4f, %.1f s", e[0], e[1],
                    e[2], e[3], t)};
}

Outcome emergent_height() {
    const auto s = make_scene(SceneKind::TwoSlabs, 64);
    const auto r = run(s, Variant::SelfOcc);
    // samples sit one pixel on the figure side; the ground is two pixels
    // further along the target normal
    double sum = 0;
    std::size_t n = 0;
    for (const auto& smp : s.annotations.samples_selfocc) {
        const Pixel p = smp.pixel;
        const Pixel q{p.x + 2 * int(std::lround(smp.target_normal.x)),
                      p.y + 2 * int(std::lround(smp.target_normal.y))};
        if (!in_mask(r.z.mask, p) || !in_mask(r.z.mask, q)) continue;
        sum += r.z(p.x, p.y) - r.z(q.x, q.y);
        ++n;
    }
    const double mean = n ? sum / n : 0.0;
    return {n > 0 && mean > 0, fmt("mean foreground - background %.4f over %zu samples", mean, n)};
}

Outcome shading_sanity() {
    const auto s = make_scene(SceneKind::Hemisphere, 64);
    const auto light = default_scene_light();
    const auto refl = synthetic_reflectance(s.z_star.mask, 0);
    const auto img = render_scene(s, light, refl);
    const auto back = eliminate_reflectance(img, s.z_star, light);
    double err = 0;
    for (std::size_t i = 0; i < back.mask.size(); ++i)
        if (back.mask[i])
            for (int c = 0; c < kChannels; ++c) err = std::max(err, std::abs(back.at(i, c) - refl.at(i, c)));
    SolveStart start;
    start.z = s.z_star.values;
    start.light = light;
    SolveConfig cfg;
    cfg.levels = 1;
    const auto r = solve(&img, s.annotations, {Variant::Shading, variant_weights(Variant::Shading)}, cfg, {}, start);
    const auto& d = r.diagnostics;
    return {err <= 1e-9 && d.final_energy <= d.initial_energy,
            fmt("energy %.4f -> %.4f, reflectance round trip %.1e", d.initial_energy, d.final_energy, err)};
}

Outcome metric_checks() {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01(0, 2);
    HeightField a(16, 16), b(16, 16);
    for (auto& v : a.values.data()) v = n01(rng);
    for (auto& v : b.values.data()) v = n01(rng);
    auto shifted = a;
    for (auto& v : shifted.values.data()) v += 12.5;
    const double base = z_mae(a, b);
    const double inv = std::abs(z_mae(shifted, b) - base);
    double best = INFINITY;
    for (double t = -15; t <= 15; t += 1e-4) {
        double s = 0;
        for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i] + t);
        best = std::min(best, s / a.values.size());
    }
    HeightField flat(16, 16, 0.0), slope(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) slope(x, y) = x;
    const double nm = n_mse(flat, slope);
    const double target = M_PI * M_PI / 16;
    const bool ok = inv <= 1e-12 * std::max(1.0, base) && std::abs(base - best) <= 1e-3 &&
                    std::abs(nm - target) <= 1e-3;
    return {ok, fmt("shift invariance %.1e, brute force gap %.1e, n_mse %.6f vs %.6f", inv,
                    std::abs(base - best), nm, target)};
}

Outcome determinism(const std::string& cli) {
    const auto root = fs::temp_directory_path() / "boundcue_acceptance";
    fs::remove_all(root);
    write_scene(root / "scene", make_scene(SceneKind::Composite, 64), 0);
    auto once = [&](const std::string& out) {
        const std::string cmd = "\"" + cli + "\" reconstruct --image \"" + (root / "scene" / kSceneImage).string() +
                                "\" --annotations \"" + (root / "scene" / kSceneAnnotations).string() +
                                "\" --variant occ_folds --seed 7 --out \"" + (root / out).string() + "\" 2>/dev/null";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    const int c1 = once("a"), c2 = once("b");
    if ((c1 != 0 && c1 != 2) || (c2 != 0 && c2 != 2))
        return {false, fmt("reconstruct exited %d and %d", c1, c2)};
    const auto a = read_file(root / "a" / ArtifactNames::depth);
    const auto b = read_file(root / "b" / ArtifactNames::depth);
    return {a == b && !a.empty(), fmt("depth.bczf %zu bytes, %s", a.size(), a == b ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string cli = BOUNDCUE_CLI_PATH;
    std::vector<int> only, known;
    app.add_option("--cli", cli, "path to the boundcue executable")->capture_default_str();
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--known-failure", known,
                   "criteria whose failure is documented; they still print FAIL but do not "
                   "change the exit status");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient suite", gradients},
        {"fold algebra", fold_algebra},
        {"hemisphere reconstruction", hemisphere},
        {"cue ordering on composite", cue_ordering},
        {"self-occlusion emergent height", emergent_height},
        {"shading sanity", shading_sanity},
        {"metrics", metric_checks},
        {"determinism", [&] { return determinism(cli); }},
    };
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool documented = std::find(known.begin(), known.end(), id) != known.end();
        std::printf("criterion %d %s: %s  (%s)%s\n", id, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), !o.pass && documented ? " [known failure, see README]" : "");
        std::fflush(stdout);
        if (!o.pass && !documented) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
