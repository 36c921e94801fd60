#include <boundcue/geometry.hpp>

#include <cmath>
#include <stdexcept>

namespace boundcue {

void validate(const HeightField& z) {
    if (!z.values.same_shape(z.mask))
        throw std::invalid_argument("height field and mask differ in shape");
    if (z.width() < 3 || z.height() < 3)
        throw std::invalid_argument("height field must be at least 3x3");
    for (std::size_t i = 0; i < z.values.size(); ++i)
        if (z.mask[i] && !std::isfinite(z.values[i]))
            throw std::invalid_argument("non-finite height on the mask");
}

Stencil::Stencil(const Mask& mask)
    : width_(mask.width()),
      height_(mask.height()),
      dx_(mask.size()),
      dy_(mask.size()),
      normal_valid_(mask.width(), mask.height(), 0),
      curvature_valid_(mask.width(), mask.height(), 0) {
    auto axis = [&](int x, int y, int ox, int oy) {
        Axis a;
        const bool minus = in_mask(mask, x - ox, y - oy);
        const bool plus = in_mask(mask, x + ox, y + oy);
        const int here = static_cast<int>(mask.index(x, y));
        if (minus && plus) {
            a = {static_cast<int>(mask.index(x - ox, y - oy)),
                 static_cast<int>(mask.index(x + ox, y + oy)), 0.5};
        } else if (plus) {
            a = {here, static_cast<int>(mask.index(x + ox, y + oy)), 1.0};
        } else if (minus) {
            a = {static_cast<int>(mask.index(x - ox, y - oy)), here, 1.0};
        }
        return a;
    };

    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (!mask(x, y)) continue;
            const std::size_t i = mask.index(x, y);
            dx_[i] = axis(x, y, 1, 0);
            dy_[i] = axis(x, y, 0, 1);
            normal_valid_[i] = dx_[i].defined() && dy_[i].defined();
            bool full = true;
            for (int oy = -1; oy <= 1 && full; ++oy)
                for (int ox = -1; ox <= 1 && full; ++ox) full = in_mask(mask, x + ox, y + oy);
            curvature_valid_[i] = full;
        }
    }
}

NormalField normals(const Stencil& s, const Grid<double>& z) {
    const int w = s.width(), h = s.height();
    NormalField nf{Grid<Vec3>(w, h, Vec3{0, 0, 1}), Grid<double>(w, h, 0.0),
                   Grid<double>(w, h, 0.0), s.normal_valid_mask()};
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!s.normal_valid(i)) continue;
        const auto& ax = s.dx(i);
        const auto& ay = s.dy(i);
        const double p = ax.scale * (z[ax.hi] - z[ax.lo]);
        const double q = ay.scale * (z[ay.hi] - z[ay.lo]);
        const double inv = 1.0 / std::sqrt(1.0 + p * p + q * q);
        nf.zx[i] = p;
        nf.zy[i] = q;
        nf.n[i] = {-p * inv, -q * inv, inv};
    }
    return nf;
}

NormalField normals(const HeightField& z) {
    validate(z);
    return normals(Stencil(z.mask), z.values);
}

void normals_vjp(const Stencil& s, const NormalField& nf, const Grid<Vec3>& cot,
                 Grid<double>& grad) {
    for (std::size_t i = 0; i < cot.size(); ++i) {
        if (!s.normal_valid(i)) continue;
        const Vec3& c = cot[i];
        if (c.x == 0.0 && c.y == 0.0 && c.z == 0.0) continue;
        const double p = nf.zx[i], q = nf.zy[i];
        const double w2 = 1.0 + p * p + q * q;
        const double inv3 = 1.0 / (w2 * std::sqrt(w2));
        // dN/dp = (-(1+q^2), pq, -p) / w^3 ; dN/dq = (pq, -(1+p^2), -q) / w^3
        const double gp = (-(1.0 + q * q) * c.x + p * q * c.y - p * c.z) * inv3;
        const double gq = (p * q * c.x - (1.0 + p * p) * c.y - q * c.z) * inv3;
        const auto& ax = s.dx(i);
        const auto& ay = s.dy(i);
        grad[ax.hi] += ax.scale * gp;
        grad[ax.lo] -= ax.scale * gp;
        grad[ay.hi] += ay.scale * gq;
        grad[ay.lo] -= ay.scale * gq;
    }
}

Grid<double> jacobian_vjp(const HeightField& z, const Grid<Vec3>& normal_cotangent) {
    validate(z);
    if (!normal_cotangent.same_shape(z.values))
        throw std::invalid_argument("cotangent shape mismatch");
    Stencil s(z.mask);
    const auto nf = normals(s, z.values);
    Grid<double> grad(z.width(), z.height(), 0.0);
    normals_vjp(s, nf, normal_cotangent, grad);
    return grad;
}

namespace {

struct SecondOrder {
    double p, q, zxx, zyy, zxy;
};

SecondOrder second_order(const Grid<double>& z, int x, int y) {
    SecondOrder d;
    d.p = 0.5 * (z(x + 1, y) - z(x - 1, y));
    d.q = 0.5 * (z(x, y + 1) - z(x, y - 1));
    d.zxx = z(x + 1, y) - 2.0 * z(x, y) + z(x - 1, y);
    d.zyy = z(x, y + 1) - 2.0 * z(x, y) + z(x, y - 1);
    d.zxy = 0.25 * (z(x + 1, y + 1) - z(x + 1, y - 1) - z(x - 1, y + 1) + z(x - 1, y - 1));
    return d;
}

}  // namespace

CurvatureField mean_curvature(const Stencil& s, const Grid<double>& z) {
    const int w = s.width(), h = s.height();
    CurvatureField cf{Grid<double>(w, h, 0.0), s.curvature_valid_mask()};
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const std::size_t i = z.index(x, y);
            if (!s.curvature_valid(i)) continue;
            const auto d = second_order(z, x, y);
            const double w2 = 1.0 + d.p * d.p + d.q * d.q;
            const double num =
                (1.0 + d.p * d.p) * d.zyy - 2.0 * d.p * d.q * d.zxy + (1.0 + d.q * d.q) * d.zxx;
            cf.h[i] = -num / (2.0 * w2 * std::sqrt(w2));
        }
    }
    return cf;
}

CurvatureField mean_curvature(const HeightField& z) {
    validate(z);
    return mean_curvature(Stencil(z.mask), z.values);
}

void mean_curvature_vjp(const Stencil& s, const Grid<double>& z, const Grid<double>& cot,
                        Grid<double>& grad) {
    const int w = s.width(), h = s.height();
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const std::size_t i = z.index(x, y);
            if (!s.curvature_valid(i) || cot[i] == 0.0) continue;
            const double c = cot[i];
            const auto d = second_order(z, x, y);
            const double w2 = 1.0 + d.p * d.p + d.q * d.q;
            const double wn = std::sqrt(w2);
            const double den = 2.0 * w2 * wn;
            const double num =
                (1.0 + d.p * d.p) * d.zyy - 2.0 * d.p * d.q * d.zxy + (1.0 + d.q * d.q) * d.zxx;
            // H = -num / den, den = 2 w^3, d(den)/dp = 6 p w.
            const double g_zxx = -c * (1.0 + d.q * d.q) / den;
            const double g_zyy = -c * (1.0 + d.p * d.p) / den;
            const double g_zxy = c * 2.0 * d.p * d.q / den;
            const double g_p =
                c * (-(2.0 * d.p * d.zyy - 2.0 * d.q * d.zxy) / den + num * 6.0 * d.p * wn / (den * den));
            const double g_q =
                c * (-(2.0 * d.q * d.zxx - 2.0 * d.p * d.zxy) / den + num * 6.0 * d.q * wn / (den * den));

            grad(x + 1, y) += g_zxx + 0.5 * g_p;
            grad(x - 1, y) += g_zxx - 0.5 * g_p;
            grad(x, y) += -2.0 * g_zxx - 2.0 * g_zyy;
            grad(x, y + 1) += g_zyy + 0.5 * g_q;
            grad(x, y - 1) += g_zyy - 0.5 * g_q;
            grad(x + 1, y + 1) += 0.25 * g_zxy;
            grad(x + 1, y - 1) -= 0.25 * g_zxy;
            grad(x - 1, y + 1) -= 0.25 * g_zxy;
            grad(x - 1, y - 1) += 0.25 * g_zxy;
        }
    }
}

Grid<double> jacobian_vjp(const HeightField& z, const Grid<double>& curvature_cotangent) {
    validate(z);
    if (!curvature_cotangent.same_shape(z.values))
        throw std::invalid_argument("cotangent shape mismatch");
    Stencil s(z.mask);
    Grid<double> grad(z.width(), z.height(), 0.0);
    mean_curvature_vjp(s, z.values, curvature_cotangent, grad);
    return grad;
}

}  // namespace boundcue
