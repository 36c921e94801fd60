#pragma once

#include <boundcue/energies.hpp>
#include <boundcue/geometry.hpp>
#include <boundcue/io.hpp>

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <vector>

namespace boundcue {

inline constexpr int kShCoeffs = 9;
inline constexpr int kChannels = 3;
inline constexpr int kLightDims = kShCoeffs * kChannels;

/// Second-order SH lighting, channel-major: [L00, L1-1, L10, L11, L2-2,
/// L2-1, L20, L21, L22] for R, then G, then B.
struct IlluminationSH {
    std::array<double, kLightDims> coeffs{};

    static IlluminationSH constant(double l00);
    double& operator()(int channel, int k) { return coeffs[channel * kShCoeffs + k]; }
    double operator()(int channel, int k) const { return coeffs[channel * kShCoeffs + k]; }
    friend bool operator==(const IlluminationSH&, const IlluminationSH&) = default;
};

/// Three-channel field on the image grid.
struct ColorField {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // interleaved RGB
    Mask mask;

    ColorField() = default;
    ColorField(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * kChannels, fill),
          mask(w, h, 1) {}

    double& at(std::size_t pixel, int c) { return data[pixel * kChannels + c]; }
    double at(std::size_t pixel, int c) const { return data[pixel * kChannels + c]; }
    double& at(int x, int y, int c) { return at(mask.index(x, y), c); }
    double at(int x, int y, int c) const { return at(mask.index(x, y), c); }
};

/// Log-intensities I.
struct LogImage : ColorField {
    using ColorField::ColorField;
    static constexpr double kFloor = 1e-4;
};

/// Log-albedo R.
struct ReflectanceMap : ColorField {
    using ColorField::ColorField;
};

/// Gaussian prior on the 27 SH coefficients.
struct IlluminationPrior {
    std::array<double, kLightDims> mean{};
    Eigen::Matrix<double, kLightDims, kLightDims> precision =
        Eigen::Matrix<double, kLightDims, kLightDims>::Zero();

    /// Gray DC light (L00 = 2 per channel) with precision 0.1 I.
    static IlluminationPrior default_prior();
    /// Throws std::invalid_argument if not symmetric PSD.
    void validate() const;
};

/// Ramamoorthi-Hanrahan irradiance matrix for one channel: E = n~^T M n~
/// with n~ = (x, y, z, 1).
Eigen::Matrix4d irradiance_matrix(const double* sh9);

/// Irradiance at unit normal `n` for one channel.
double irradiance(const double* sh9, const Vec3& n);

struct ShadingRender {
    ColorField log_shading;  // mask = pixels with a valid normal
    std::size_t clamped = 0;
};

inline constexpr double kIrradianceFloor = 1e-6;

/// S(Z, L) = log(irradiance), clamped at kIrradianceFloor.
ShadingRender render_log_shading(const HeightField& z, const IlluminationSH& light);
ShadingRender render_log_shading(const Stencil& s, const NormalField& nf,
                                 const IlluminationSH& light);

struct ShadingGradient {
    Grid<double> z;
    std::array<double, kLightDims> light{};
};

/// Gradient of <S(Z, L), cotangent> with respect to Z and L.
ShadingGradient render_log_shading_vjp(const HeightField& z, const IlluminationSH& light,
                                       const ColorField& cotangent);
void render_log_shading_vjp(const Stencil& s, const NormalField& nf, const IlluminationSH& light,
                            const ColorField& cotangent, Grid<double>& grad_z,
                            std::array<double, kLightDims>& grad_light);

/// R = I - S(Z, L) on pixels where both are defined.
ReflectanceMap eliminate_reflectance(const LogImage& image, const HeightField& z,
                                     const IlluminationSH& light);

/// c_sfs = R + S(Z, L) - I.
ColorField rendering_residual(const ReflectanceMap& r, const HeightField& z,
                              const IlluminationSH& light, const LogImage& image);

struct ReflectanceTerm {
    double value = 0.0;
    ColorField gradient;
};

/// Sum over 4-neighbor mask pairs of a GSM cost on |R_i - R_j|.
ReflectanceTerm g_reflectance(const ReflectanceMap& r,
                              const GsmParams& gsm = GsmParams::reflectance_default());

struct IlluminationTerm {
    double value = 0.0;
    std::array<double, kLightDims> gradient{};
};

IlluminationTerm h_illumination(const IlluminationSH& light,
                                const IlluminationPrior& prior = IlluminationPrior::default_prior());

struct ShadingParams {
    GsmParams reflectance_gsm = GsmParams::reflectance_default();
    IlluminationPrior prior = IlluminationPrior::default_prior();
};

struct ShadingEnergy {
    double g = 0.0;
    double h = 0.0;
    double total = 0.0;  // g + h
    Grid<double> grad_z;
    std::array<double, kLightDims> grad_light{};
    std::size_t clamped = 0;
};

/// g(I - S(Z, L)) + h(L) with gradients through the elimination.
ShadingEnergy shading_energy(const Stencil& s, const Grid<double>& z, const LogImage& image,
                             const IlluminationSH& light, const ShadingParams& params);
ShadingEnergy shading_energy(const HeightField& z, const LogImage& image,
                             const IlluminationSH& light, const ShadingParams& params = {});

/// log(max(v, floor)) per channel; grayscale input is replicated.
LogImage to_log_image(const Image& img, const Mask& mask);
/// exp(I) clipped to [0, 1], RGB.
Image to_linear_image(const LogImage& img);

}  // namespace boundcue
