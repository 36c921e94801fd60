#pragma once

#include <boundcue/annotations.hpp>
#include <boundcue/energies.hpp>
#include <boundcue/geometry.hpp>
#include <boundcue/shading.hpp>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boundcue {

/// The six cue combinations. Silhouette constraints and the regularizer are
/// present in every one.
enum class Variant { Silh, SelfOcc, Folds, OccFolds, Shading, ShadingOccFolds };

inline constexpr Variant kAllVariants[] = {Variant::Silh,     Variant::SelfOcc,
                                           Variant::Folds,    Variant::OccFolds,
                                           Variant::Shading,  Variant::ShadingOccFolds};
inline constexpr Variant kGeometricVariants[] = {Variant::Silh, Variant::SelfOcc, Variant::Folds,
                                                 Variant::OccFolds};

std::string_view to_string(Variant v);
/// Accepts "silh", "selfocc", "folds", "occ_folds", "shading",
/// "shading_occ_folds" and the "+selfocc" / "+occ+folds" spellings. Throws
/// Error listing the valid names otherwise.
Variant parse_variant(std::string_view name);
CueWeights variant_weights(Variant v);
inline bool uses_shading(Variant v) {
    return v == Variant::Shading || v == Variant::ShadingOccFolds;
}

struct VariantSpec {
    Variant name = Variant::Silh;
    CueWeights weights = variant_weights(Variant::Silh);
};

enum class InitPolicy { Dome, Zero };

struct SolveConfig {
    /// 0 halves the grid until its smaller side would drop below `min_size`.
    int levels = 0;
    int min_size = 16;
    int max_iters = 400;
    double tol = 1e-7;
    int memory = 10;
    InitPolicy init = InitPolicy::Dome;
};

/// Everything that shapes the objective apart from the cue deltas.
struct ModelConfig {
    EnergyParams energy;
    ShadingParams shading;
    double lambda_f = 1.0;
    double lambda_k = 1.0;
};

/// Optional warm start at the finest level; overrides `SolveConfig::init`.
struct SolveStart {
    std::optional<Grid<double>> z;
    std::optional<IlluminationSH> light;
};

struct TraceRow {
    int level = 0;  // 0 = finest
    int iter = 0;   // 0 = initial point
    double f_sfc = 0.0;
    double f_selfocc = 0.0;
    double f_fold = 0.0;
    double f_flat = 0.0;
    double f_smooth = 0.0;
    double f_sfs = 0.0;
    double total = 0.0;
};

struct SolveDiagnostics {
    std::size_t skipped_sfc = 0;
    std::size_t skipped_selfocc = 0;
    std::size_t skipped_fold = 0;
    std::size_t clamped_pixels = 0;
    bool line_search_failed = false;
    bool converged = true;
    int levels = 0;
    int iterations = 0;
    double initial_energy = 0.0;  // finest level, at the policy initialization
    double final_energy = 0.0;
    double initial_grad_inf = 0.0;
    double final_grad_inf = 0.0;
    double wall_seconds = 0.0;
    std::vector<std::string> warnings;
};

struct SolveResult {
    HeightField z;
    std::optional<IlluminationSH> light;
    std::optional<ReflectanceMap> reflectance;
    std::vector<TraceRow> trace;
    SolveDiagnostics diagnostics;
};

/// Fraction of the iteration budget used so far, in [0, 1].
using ProgressFn = std::function<void(double)>;

/// Coarse-to-fine L-BFGS on the weighted objective over Z (and L when the
/// variant uses shading). Throws Error on bad inputs or a non-finite
/// initial energy.
SolveResult solve(const LogImage* image, const AnnotationSet& annotations, const VariantSpec& variant,
                  const SolveConfig& cfg = {}, const ModelConfig& model = {},
                  const SolveStart& start = {}, const ProgressFn& progress = {});

/// Full objective (geometric terms plus the weighted shading terms) at a
/// given state; used for reporting and checks.
struct ObjectiveValue {
    EnergyReport geometric;
    std::optional<ShadingEnergy> shading;
    double total = 0.0;
};
ObjectiveValue evaluate_objective(const LogImage* image, const AnnotationSet& annotations,
                                  const CueWeights& w, const ModelConfig& model,
                                  const Grid<double>& z, const IlluminationSH& light);

/// Euclidean distance from each mask pixel to the nearest pixel off the mask
/// (outside the image counts as off).
Grid<double> distance_transform(const Mask& mask);

/// Bilinear x2 upsampling with heights doubled; only on-mask coarse samples
/// contribute.
Grid<double> upsample_heights(const Grid<double>& coarse, const Mask& coarse_mask,
                              const Mask& fine_mask);
/// 2x2 mean with heights halved.
Grid<double> downsample_heights(const Grid<double>& fine, const Mask& fine_mask,
                                const Mask& coarse_mask);
LogImage downsample_image(const LogImage& img, const Mask& coarse_mask);

std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace boundcue
