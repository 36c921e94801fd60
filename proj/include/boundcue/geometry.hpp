#pragma once

#include <boundcue/grid.hpp>

namespace boundcue {

/// Heights over the image plane, viewed orthographically from +z. Height
/// units equal pixel spacing. Values outside `mask` are ignored.
struct HeightField {
    Grid<double> values;
    Mask mask;

    HeightField() = default;
    HeightField(int width, int height, double fill = 0.0)
        : values(width, height, fill), mask(width, height, 1) {}
    HeightField(Grid<double> v, Mask m) : values(std::move(v)), mask(std::move(m)) {}

    int width() const { return values.width(); }
    int height() const { return values.height(); }
    double& operator()(int x, int y) { return values(x, y); }
    double operator()(int x, int y) const { return values(x, y); }
};

/// Throws std::invalid_argument on shape mismatch, W or H < 3, or
/// non-finite heights on the mask.
void validate(const HeightField& z);

/// Per-pixel finite-difference stencils restricted to the mask. Central
/// differences where both neighbors are on the mask, one-sided otherwise.
class Stencil {
  public:
    explicit Stencil(const Mask& mask);

    struct Axis {
        int lo = -1;  // linear index of the minus-side sample
        int hi = -1;  // linear index of the plus-side sample
        double scale = 0.0;
        bool defined() const { return lo >= 0; }
    };

    int width() const { return width_; }
    int height() const { return height_; }
    const Axis& dx(std::size_t i) const { return dx_[i]; }
    const Axis& dy(std::size_t i) const { return dy_[i]; }
    /// On the mask with a derivative in both directions.
    bool normal_valid(std::size_t i) const { return normal_valid_[i] != 0; }
    /// Full 3x3 neighborhood on the mask.
    bool curvature_valid(std::size_t i) const { return curvature_valid_[i] != 0; }
    const Mask& normal_valid_mask() const { return normal_valid_; }
    const Mask& curvature_valid_mask() const { return curvature_valid_; }

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Axis> dx_;
    std::vector<Axis> dy_;
    Mask normal_valid_;
    Mask curvature_valid_;
};

struct NormalField {
    Grid<Vec3> n;
    Grid<double> zx;  // slopes used to build n
    Grid<double> zy;
    Mask valid;
};

/// N = (-Z_x, -Z_y, 1) / sqrt(1 + Z_x^2 + Z_y^2). Pixels outside `valid`
/// hold (0, 0, 1).
NormalField normals(const HeightField& z);
NormalField normals(const Stencil& s, const Grid<double>& z);

struct CurvatureField {
    Grid<double> h;
    Mask valid;
};

/// Mean curvature, positive for a dome facing the viewer. Zero outside `valid`.
CurvatureField mean_curvature(const HeightField& z);
CurvatureField mean_curvature(const Stencil& s, const Grid<double>& z);

/// d<normals(Z), cotangent>/dZ. Cotangent entries at invalid pixels are ignored.
Grid<double> jacobian_vjp(const HeightField& z, const Grid<Vec3>& normal_cotangent);
/// d<mean_curvature(Z), cotangent>/dZ.
Grid<double> jacobian_vjp(const HeightField& z, const Grid<double>& curvature_cotangent);

/// Accumulating forms; `grad` must already have the grid's shape.
void normals_vjp(const Stencil& s, const NormalField& nf, const Grid<Vec3>& cotangent,
                 Grid<double>& grad);
void mean_curvature_vjp(const Stencil& s, const Grid<double>& z, const Grid<double>& cotangent,
                        Grid<double>& grad);

}  // namespace boundcue
