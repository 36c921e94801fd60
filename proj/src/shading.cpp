#include <boundcue/shading.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace boundcue {

namespace {

// Ramamoorthi & Hanrahan, "An Efficient Representation for Irradiance
// Environment Maps".
constexpr double kC1 = 0.429043;
constexpr double kC2 = 0.511664;
constexpr double kC3 = 0.743125;
constexpr double kC4 = 0.886227;
constexpr double kC5 = 0.247708;

enum Sh { L00, L1m1, L10, L11, L2m2, L2m1, L20, L21, L22 };

/// Irradiance basis: E = sum_k L_k b_k(n).
std::array<double, kShCoeffs> basis(const Vec3& n) {
    return {kC4,
            2.0 * kC2 * n.y,
            2.0 * kC2 * n.z,
            2.0 * kC2 * n.x,
            2.0 * kC1 * n.x * n.y,
            2.0 * kC1 * n.y * n.z,
            kC3 * n.z * n.z - kC5,
            2.0 * kC1 * n.x * n.z,
            kC1 * (n.x * n.x - n.y * n.y)};
}

Vec3 irradiance_gradient(const double* L, const Vec3& n) {
    return {2.0 * kC2 * L[L11] + 2.0 * kC1 * (L[L2m2] * n.y + L[L21] * n.z + L[L22] * n.x),
            2.0 * kC2 * L[L1m1] + 2.0 * kC1 * (L[L2m2] * n.x + L[L2m1] * n.z - L[L22] * n.y),
            2.0 * kC2 * L[L10] + 2.0 * kC1 * (L[L2m1] * n.y + L[L21] * n.x) +
                2.0 * kC3 * L[L20] * n.z};
}

}  // namespace

IlluminationSH IlluminationSH::constant(double l00) {
    IlluminationSH l;
    for (int c = 0; c < kChannels; ++c) l(c, L00) = l00;
    return l;
}

IlluminationPrior IlluminationPrior::default_prior() {
    IlluminationPrior p;
    p.mean = IlluminationSH::constant(2.0).coeffs;
    p.precision = 0.1 * Eigen::Matrix<double, kLightDims, kLightDims>::Identity();
    return p;
}

void IlluminationPrior::validate() const {
    if (!(precision - precision.transpose()).isZero(1e-9))
        throw std::invalid_argument("illumination precision must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kLightDims, kLightDims>> es(precision);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::invalid_argument("illumination precision must be positive semidefinite");
    for (double m : mean)
        if (!std::isfinite(m)) throw std::invalid_argument("illumination mean must be finite");
}

Eigen::Matrix4d irradiance_matrix(const double* L) {
    Eigen::Matrix4d m;
    m << kC1 * L[L22], kC1 * L[L2m2], kC1 * L[L21], kC2 * L[L11],
         kC1 * L[L2m2], -kC1 * L[L22], kC1 * L[L2m1], kC2 * L[L1m1],
         kC1 * L[L21], kC1 * L[L2m1], kC3 * L[L20], kC2 * L[L10],
         kC2 * L[L11], kC2 * L[L1m1], kC2 * L[L10], kC4 * L[L00] - kC5 * L[L20];
    return m;
}

double irradiance(const double* L, const Vec3& n) {
    const auto b = basis(n);
    double e = 0.0;
    for (int k = 0; k < kShCoeffs; ++k) e += L[k] * b[k];
    return e;
}

ShadingRender render_log_shading(const Stencil& s, const NormalField& nf,
                                 const IlluminationSH& light) {
    const int w = s.width(), h = s.height();
    ShadingRender out{ColorField(w, h, 0.0), 0};
    out.log_shading.mask = s.normal_valid_mask();
    for (std::size_t i = 0; i < nf.n.size(); ++i) {
        if (!s.normal_valid(i)) continue;
        const auto b = basis(nf.n[i]);
        for (int c = 0; c < kChannels; ++c) {
            double e = 0.0;
            for (int k = 0; k < kShCoeffs; ++k) e += light(c, k) * b[k];
            if (e < kIrradianceFloor) {
                e = kIrradianceFloor;
                ++out.clamped;
            }
            out.log_shading.at(i, c) = std::log(e);
        }
    }
    return out;
}

ShadingRender render_log_shading(const HeightField& z, const IlluminationSH& light) {
    validate(z);
    Stencil s(z.mask);
    return render_log_shading(s, normals(s, z.values), light);
}

void render_log_shading_vjp(const Stencil& s, const NormalField& nf, const IlluminationSH& light,
                            const ColorField& cot, Grid<double>& grad_z,
                            std::array<double, kLightDims>& grad_light) {
    Grid<Vec3> ncot(s.width(), s.height(), Vec3{});
    for (std::size_t i = 0; i < nf.n.size(); ++i) {
        if (!s.normal_valid(i)) continue;
        const Vec3& n = nf.n[i];
        const auto b = basis(n);
        for (int c = 0; c < kChannels; ++c) {
            const double g = cot.at(i, c);
            if (g == 0.0) continue;
            const double* L = &light.coeffs[c * kShCoeffs];
            double e = 0.0;
            for (int k = 0; k < kShCoeffs; ++k) e += L[k] * b[k];
            if (e < kIrradianceFloor) continue;  // clamped: locally constant
            const double ge = g / e;
            for (int k = 0; k < kShCoeffs; ++k) grad_light[c * kShCoeffs + k] += ge * b[k];
            const Vec3 de = irradiance_gradient(L, n);
            ncot[i].x += ge * de.x;
            ncot[i].y += ge * de.y;
            ncot[i].z += ge * de.z;
        }
    }
    normals_vjp(s, nf, ncot, grad_z);
}

ShadingGradient render_log_shading_vjp(const HeightField& z, const IlluminationSH& light,
                                       const ColorField& cotangent) {
    validate(z);
    Stencil s(z.mask);
    const auto nf = normals(s, z.values);
    ShadingGradient g{Grid<double>(z.width(), z.height(), 0.0), {}};
    render_log_shading_vjp(s, nf, light, cotangent, g.z, g.light);
    return g;
}

namespace {

void check_same_grid(const ColorField& a, const HeightField& z) {
    if (a.width != z.width() || a.height != z.height())
        throw std::invalid_argument("image and height field differ in shape");
}

}  // namespace

ReflectanceMap eliminate_reflectance(const LogImage& image, const HeightField& z,
                                     const IlluminationSH& light) {
    check_same_grid(image, z);
    const auto s = render_log_shading(z, light);
    ReflectanceMap r(image.width, image.height, 0.0);
    for (std::size_t i = 0; i < r.mask.size(); ++i) {
        r.mask[i] = image.mask[i] && s.log_shading.mask[i];
        if (!r.mask[i]) continue;
        for (int c = 0; c < kChannels; ++c)
            r.at(i, c) = image.at(i, c) - s.log_shading.at(i, c);
    }
    return r;
}

ColorField rendering_residual(const ReflectanceMap& r, const HeightField& z,
                              const IlluminationSH& light, const LogImage& image) {
    check_same_grid(image, z);
    const auto s = render_log_shading(z, light);
    ColorField out(image.width, image.height, 0.0);
    for (std::size_t i = 0; i < out.mask.size(); ++i) {
        out.mask[i] = r.mask[i] && image.mask[i] && s.log_shading.mask[i];
        if (!out.mask[i]) continue;
        for (int c = 0; c < kChannels; ++c)
            out.at(i, c) = r.at(i, c) + s.log_shading.at(i, c) - image.at(i, c);
    }
    return out;
}

ReflectanceTerm g_reflectance(const ReflectanceMap& r, const GsmParams& gsm) {
    ReflectanceTerm t{0.0, ColorField(r.width, r.height, 0.0)};
    KahanSum sum;
    auto pair = [&](std::size_t i, std::size_t j) {
        double d[kChannels];
        double d2 = 0.0;
        for (int c = 0; c < kChannels; ++c) {
            d[c] = r.at(i, c) - r.at(j, c);
            d2 += d[c] * d[c];
        }
        sum += gsm.cost_sq(d2);
        const double g = 2.0 * gsm.cost_sq_derivative(d2);
        for (int c = 0; c < kChannels; ++c) {
            t.gradient.at(i, c) += g * d[c];
            t.gradient.at(j, c) -= g * d[c];
        }
    };
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) {
            if (!r.mask(x, y)) continue;
            const std::size_t i = r.mask.index(x, y);
            if (x + 1 < r.width && r.mask(x + 1, y)) pair(i, r.mask.index(x + 1, y));
            if (y + 1 < r.height && r.mask(x, y + 1)) pair(i, r.mask.index(x, y + 1));
        }
    t.value = sum.value();
    return t;
}

IlluminationTerm h_illumination(const IlluminationSH& light, const IlluminationPrior& prior) {
    Eigen::Matrix<double, kLightDims, 1> d;
    for (int k = 0; k < kLightDims; ++k) d[k] = light.coeffs[k] - prior.mean[k];
    const Eigen::Matrix<double, kLightDims, 1> g = prior.precision * d;
    IlluminationTerm t;
    t.value = 0.5 * d.dot(g);
    for (int k = 0; k < kLightDims; ++k) t.gradient[k] = g[k];
    return t;
}

ShadingEnergy shading_energy(const Stencil& s, const Grid<double>& z, const LogImage& image,
                             const IlluminationSH& light, const ShadingParams& params) {
    const auto nf = normals(s, z);
    const auto render = render_log_shading(s, nf, light);
    ReflectanceMap r(image.width, image.height, 0.0);
    for (std::size_t i = 0; i < r.mask.size(); ++i) {
        r.mask[i] = image.mask[i] && render.log_shading.mask[i];
        if (!r.mask[i]) continue;
        for (int c = 0; c < kChannels; ++c)
            r.at(i, c) = image.at(i, c) - render.log_shading.at(i, c);
    }
    const auto g = g_reflectance(r, params.reflectance_gsm);
    const auto h = h_illumination(light, params.prior);

    ShadingEnergy e;
    e.g = g.value;
    e.h = h.value;
    e.total = g.value + h.value;
    e.clamped = render.clamped;
    e.grad_light = h.gradient;
    e.grad_z = Grid<double>(s.width(), s.height(), 0.0);

    // dR/dS = -1
    ColorField cot(image.width, image.height, 0.0);
    for (std::size_t i = 0; i < cot.data.size(); ++i) cot.data[i] = -g.gradient.data[i];
    render_log_shading_vjp(s, nf, light, cot, e.grad_z, e.grad_light);
    return e;
}

ShadingEnergy shading_energy(const HeightField& z, const LogImage& image,
                             const IlluminationSH& light, const ShadingParams& params) {
    validate(z);
    check_same_grid(image, z);
    return shading_energy(Stencil(z.mask), z.values, image, light, params);
}

LogImage to_log_image(const Image& img, const Mask& mask) {
    if (img.channels < 1) throw std::invalid_argument("image has no channels");
    LogImage out(img.width, img.height, 0.0);
    if (mask.width() == img.width && mask.height() == img.height) out.mask = mask;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < kChannels; ++c) {
                const int src = img.channels >= 3 ? c : 0;
                out.at(x, y, c) = std::log(std::max(img.at(x, y, src), LogImage::kFloor));
            }
    return out;
}

Image to_linear_image(const LogImage& img) {
    Image out{img.width, img.height, 3, std::vector<double>(img.data.size())};
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = std::clamp(std::exp(img.data[i]), 0.0, 1.0);
    return out;
}

}  // namespace boundcue
