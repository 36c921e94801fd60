#pragma once

#include <boundcue/annotations.hpp>
#include <boundcue/geometry.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

namespace boundcue {

/// Term weights. Variants switch the deltas between 0 and 1.
struct CueWeights {
    double sfc = 0.0;
    double selfocc = 0.0;
    double fold = 0.0;
    double reg = 1.0;
    double sfs = 0.0;
    double lambda_f = 1.0;
    double lambda_k = 1.0;

    friend bool operator==(const CueWeights&, const CueWeights&) = default;
};

struct FoldConfig {
    double epsilon = 1.0 / std::sqrt(2.0);
    /// Softplus temperature for the hinge; 0 evaluates the exact hinge.
    double smoothing_tau = 1e-3;
};

/// Zero-mean Gaussian scale mixture used as a robust penalty.
struct GsmParams {
    std::vector<double> weights;
    std::vector<double> sigmas;

    /// Curvature-difference prior: K = 4.
    static GsmParams curvature_default();
    /// Log-albedo difference prior.
    static GsmParams reflectance_default();

    /// Throws std::invalid_argument unless weights >= 0 sum to 1 and sigmas
    /// are positive and strictly increasing.
    void validate() const;

    /// Negative log-likelihood of a value with square `x2`, shifted so that
    /// cost(0) = 0.
    double cost_sq(double x2) const;
    /// d cost / d(x^2).
    double cost_sq_derivative(double x2) const;
    double cost(double x) const { return cost_sq(x * x); }
    double cost_derivative(double x) const { return 2.0 * x * cost_sq_derivative(x * x); }
};

enum class ContourLoss { Charbonnier, Squared };

struct EnergyParams {
    FoldConfig fold;
    GsmParams gsm = GsmParams::curvature_default();
    /// Charbonnier smoothing for the silhouette and self-occlusion norms.
    double contour_tau = 1e-3;
    ContourLoss loss = ContourLoss::Charbonnier;
};

struct TermResult {
    double value = 0.0;
    Grid<double> gradient;
    /// Samples dropped because a required pixel had no valid normal.
    std::size_t skipped = 0;
};

struct FoldTermResult : TermResult {
    /// Same samples under the unsmoothed hinge max(0, epsilon - c).
    double exact_value = 0.0;
};

/// Cross-fold alignment (N_left x N_right) . (u_x, u_y, 0).
double fold_alignment(const Vec3& left, const Vec3& right, const Vec2& u);

TermResult f_sfc(const HeightField& z, const std::vector<ContourSample>& samples,
                 const EnergyParams& params = {});
TermResult f_selfocc(const HeightField& z, const std::vector<ContourSample>& samples,
                     const EnergyParams& params = {});
FoldTermResult f_fold(const HeightField& z, const std::vector<FoldSample>& samples,
                      const FoldConfig& cfg = {});
TermResult f_flat(const HeightField& z);
TermResult f_smooth(const HeightField& z, const GsmParams& gsm = GsmParams::curvature_default());

struct EnergyReport {
    double f_sfc = 0.0;
    double f_selfocc = 0.0;
    double f_fold = 0.0;
    double f_fold_exact = 0.0;
    double f_flat = 0.0;
    double f_smooth = 0.0;
    double f_reg = 0.0;
    double total = 0.0;

    Grid<double> grad_sfc;
    Grid<double> grad_selfocc;
    Grid<double> grad_fold;
    Grid<double> grad_flat;
    Grid<double> grad_smooth;
    Grid<double> grad_total;

    std::size_t skipped_sfc = 0;
    std::size_t skipped_selfocc = 0;
    std::size_t skipped_fold = 0;
};

/// Weighted geometric objective:
/// d_sfc f_sfc + d_selfocc f_selfocc + d_fold f_fold + d_reg (l_f f_flat + l_k f_smooth).
EnergyReport total_energy(const HeightField& z, const AnnotationSet& annotations,
                          const CueWeights& w, const EnergyParams& params = {});

/// Shared-evaluation form used by the solver: normals and curvature computed
/// once. Per-term gradients are left empty when `per_term_gradients` is false.
EnergyReport total_energy(const Stencil& stencil, const Grid<double>& z,
                          const AnnotationSet& annotations, const CueWeights& w,
                          const EnergyParams& params, bool per_term_gradients);

}  // namespace boundcue
