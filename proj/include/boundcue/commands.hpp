#pragma once

#include <boundcue/config.hpp>
#include <boundcue/metrics.hpp>
#include <boundcue/optimizer.hpp>
#include <boundcue/synth.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace boundcue {

namespace fs = std::filesystem;

/// File names inside a scene directory (written by `synth`, read by
/// `ablate` and the HTTP service).
inline constexpr const char* kSceneImage = "image.png";
inline constexpr const char* kSceneAnnotations = "annotations.json";
inline constexpr const char* kSceneTruth = "z_star.bczf";
inline constexpr const char* kSceneLight = "light.json";

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNotConverged = 2;

struct ReconstructJob {
    std::optional<fs::path> image;
    fs::path annotations;
    std::string variant = "silh";
    std::optional<fs::path> config;
    fs::path out;
    std::uint64_t seed = 0;
};

/// Inputs resolved and loaded; throws Error with a message naming the bad
/// path or field.
struct LoadedJob {
    AnnotationSet annotations;
    std::optional<LogImage> image;
    VariantSpec variant;
    RunConfig config;
};
LoadedJob load_job(const ReconstructJob& job);

/// Artifact file names written by `reconstruct`.
struct ArtifactNames {
    static constexpr const char* depth = "depth.bczf";
    static constexpr const char* pfm = "depth.pfm";
    static constexpr const char* mesh = "mesh.obj";
    static constexpr const char* normals = "normals.png";
    static constexpr const char* trace = "trace.csv";
    static constexpr const char* diagnostics = "diagnostics.json";
};

/// JSON summary of a solve: flags, energies, skipped samples, wall time.
std::string diagnostics_json(const SolveResult& r, const LoadedJob& job, std::uint64_t seed);

void write_artifacts(const fs::path& out, const SolveResult& r, const LoadedJob& job,
                     std::uint64_t seed);

/// Solver non-convergence: iteration cap hit at the finest level or a
/// failed line search.
bool non_converged(const SolveDiagnostics& d);

int cmd_reconstruct(const ReconstructJob& job, std::ostream& err);

struct AblationRow {
    std::string variant;
    double n_mse = 0.0;
    double z_mae = 0.0;
    double wall_time = 0.0;
    std::string status;  // "ok" or "error: ..."
};

/// Runs each variant on a scene directory holding annotations and ground
/// truth. Per-variant failures become rows; only unreadable scenes throw.
std::vector<AblationRow> run_ablation(const fs::path& scene, const std::vector<Variant>& variants,
                                      const RunConfig& config);
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// `variants` empty: every variant the scene supports. Writes CSV to `out`
/// or to `stdout` when `out` is empty.
int cmd_ablate(const fs::path& scene, const std::vector<std::string>& variants,
               const std::optional<fs::path>& config, const std::optional<fs::path>& out,
               std::ostream& stdout_, std::ostream& err);

/// Writes image.png (16-bit), z_star.bczf, annotations.json and light.json.
void write_scene(const fs::path& dir, const SyntheticScene& s, std::uint64_t seed);
int cmd_synth(const std::string& kind, int size, const fs::path& out, std::uint64_t seed,
              std::ostream& err);

int cmd_gradcheck(std::uint64_t seed, const std::string& corrupt, std::ostream& out,
                  std::ostream& err);

/// {"n_mse": ..., "z_mae": ..., "pixels": ...}
std::string metrics_json(const MetricReport& m);
int cmd_evaluate(const fs::path& depth, const fs::path& truth, std::ostream& out, std::ostream& err);

/// Comma-separated list; throws Error on an unknown name.
std::vector<Variant> parse_variant_list(const std::string& csv);

}  // namespace boundcue
