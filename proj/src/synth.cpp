#include <boundcue/synth.hpp>

#include <boundcue/errors.hpp>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>

namespace boundcue {

std::string_view to_string(SceneKind k) {
    switch (k) {
        case SceneKind::Hemisphere: return "hemisphere";
        case SceneKind::Cube: return "cube";
        case SceneKind::Wedge: return "wedge";
        case SceneKind::TwoSlabs: return "two_slabs";
        case SceneKind::Composite: return "composite";
    }
    return "?";
}

SceneKind parse_scene_kind(std::string_view name) {
    for (SceneKind k : {SceneKind::Hemisphere, SceneKind::Cube, SceneKind::Wedge,
                        SceneKind::TwoSlabs, SceneKind::Composite})
        if (name == to_string(k)) return k;
    if (name == "twoslabs") return SceneKind::TwoSlabs;
    throw Error("unknown scene kind '" + std::string(name) +
                "' (valid: hemisphere, cube, wedge, two_slabs, composite)");
}

namespace {

constexpr double kPi = std::numbers::pi;

Polyline make_polyline(ContourKind kind, std::vector<Vec2> pts) {
    Polyline p;
    p.kind = kind;
    p.points = std::move(pts);
    return p;
}

/// Closed rectangle through pixel centers, clockwise on screen.
std::vector<Vec2> rect_loop(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

std::vector<Vec2> arc(Vec2 c, double r, double a0, double a1, int segments) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= segments; ++i) {
        const double a = a0 + (a1 - a0) * i / segments;
        pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
    return pts;
}

int circle_segments(double r) { return std::max(64, static_cast<int>(std::ceil(2.0 * kPi * r / 1.5))); }

void finish(SyntheticScene& s, int size, Mask mask, std::vector<Polyline> contours) {
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (!mask[i]) s.z_star.values[i] = 0.0;
    s.z_star.mask = mask;
    s.document = {size, size, mask, contours};
    s.annotations = build_annotation_set(mask, contours);
}

SyntheticScene hemisphere(int size, const SceneParams& p) {
    const double r = p.radius > 0.0 ? p.radius : 0.375 * size;
    if (r < 4.0 || r > size / 2.0 - 1.0)
        throw Error("hemisphere radius must lie in [4, size/2 - 1]");
    const Vec2 c{size / 2.0, size / 2.0};
    SyntheticScene s{"hemisphere", HeightField(size, size), {}, {}, c};
    Mask mask(size, size, 0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
            if (d2 <= r * r) {
                mask(x, y) = 1;
                s.z_star(x, y) = std::sqrt(std::max(r * r - d2, 0.0));
            }
        }
    auto rim = arc(c, r - 0.5, 0.0, 2.0 * kPi, circle_segments(r));
    rim.back() = rim.front();
    finish(s, size, std::move(mask), {make_polyline(ContourKind::SilhouetteSmooth, rim)});
    return s;
}

SyntheticScene cube(int size) {
    // Corner view: three faces with orthonormal normals, each tilted so the
    // cube diagonal points at the viewer.
    const Vec2 c{std::floor(size / 2.0), std::floor(size / 2.0)};
    const double R = 0.4 * size;
    const double slope = std::sqrt(2.0);
    const double s30 = 0.5, c30 = std::sqrt(3.0) / 2.0;
    // In-plane directions of the face normals; ridges run along their negatives.
    const Vec2 d[3] = {{0.0, 1.0}, {-c30, -s30}, {c30, -s30}};
    std::vector<Vec2> hex;
    for (int k = 0; k < 6; ++k) {
        const double a = -kPi / 2.0 + k * kPi / 3.0;
        hex.push_back({std::cos(a), std::sin(a)});
    }
    SyntheticScene s{"cube", HeightField(size, size), {}, {}, std::nullopt};
    Mask mask(size, size, 0);
    const double top = slope * R + 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const Vec2 q{x - c.x, y - c.y};
            bool inside = true;
            for (int k = 0; k < 6 && inside; ++k) {
                // hex edge k..k+1, inward test via the apothem
                const Vec2 mid = (hex[k] + hex[(k + 1) % 6]) * 0.5;
                inside = q.dot(mid.normalized()) <= R * mid.norm();
            }
            if (!inside) continue;
            mask(x, y) = 1;
            double z = std::numeric_limits<double>::infinity();
            for (const auto& dk : d) z = std::min(z, -slope * dk.dot(q));
            s.z_star(x, y) = top + z;
        }
    std::vector<Vec2> outline;
    for (const auto& h : hex) outline.push_back(c + h * (R - 0.5));
    outline.push_back(outline.front());
    std::vector<Polyline> contours{make_polyline(ContourKind::SilhouetteSharp, outline)};
    for (const auto& dk : d) {
        auto fold = make_polyline(ContourKind::Fold, {c - dk * 2.0, c - dk * (R - 3.0)});
        fold.convexity = Convexity::Convex;
        contours.push_back(fold);
    }
    finish(s, size, std::move(mask), std::move(contours));
    return s;
}

SyntheticScene wedge(int size, const SceneParams& p) {
    if (!(p.wedge_angle > 10.0 && p.wedge_angle < 170.0))
        throw Error("wedge angle must lie in (10, 170) degrees");
    const double tilt = (180.0 - p.wedge_angle) / 2.0 * kPi / 180.0;
    const double slope = std::tan(tilt);
    const int m = size / 8;
    const int cx = size / 2;
    const double top = slope * (size / 2.0) + 2.0;
    SyntheticScene s{"wedge", HeightField(size, size), {}, {}, std::nullopt};
    Mask mask(size, size, 0);
    for (int y = m; y <= size - 1 - m; ++y)
        for (int x = m; x <= size - 1 - m; ++x) {
            mask(x, y) = 1;
            s.z_star(x, y) = top - slope * std::abs(x - cx);
        }
    const double lo = m, hi = size - 1 - m;
    auto fold = make_polyline(ContourKind::Fold, {{double(cx), lo + 2.0}, {double(cx), hi - 2.0}});
    fold.convexity = Convexity::Convex;
    finish(s, size, std::move(mask),
           {make_polyline(ContourKind::SilhouetteSharp, rect_loop(lo, lo, hi, hi)), fold});
    return s;
}

SyntheticScene two_slabs(int size, const SceneParams& p) {
    if (!(p.slab_back > 0.0) || !(p.slab_front >= 1.0))
        throw Error("slab thicknesses must be positive and the step at least 1");
    const int m = size / 8;
    const int a = static_cast<int>(std::lround(0.3 * size)), b = size - 1 - a;
    SyntheticScene s{"two_slabs", HeightField(size, size), {}, {}, std::nullopt};
    Mask mask(size, size, 0);
    // Edges sit on pixel boundaries, so the 1-pixel anti-aliasing band has
    // no fractional coverage.
    for (int y = m; y <= size - 1 - m; ++y)
        for (int x = m; x <= size - 1 - m; ++x) {
            mask(x, y) = 1;
            const bool front = x >= a && x <= b && y >= a && y <= b;
            s.z_star(x, y) = p.slab_back + (front ? p.slab_front : 0.0);
        }
    const double lo = m, hi = size - 1 - m;
    // Occlusion loop on the first background ring, figure inside (clockwise => right).
    auto occ = make_polyline(ContourKind::SelfOcclusion, rect_loop(a - 1, a - 1, b + 1, b + 1));
    occ.figure_side = FigureSide::Right;
    finish(s, size, std::move(mask),
           {make_polyline(ContourKind::SilhouetteSharp, rect_loop(lo, lo, hi, hi)), occ});
    return s;
}

SyntheticScene composite(int size) {
    const Vec2 c{std::floor(size / 2.0), std::round(0.45 * size)};
    const double r = 0.4 * size;
    const int chord = static_cast<int>(std::floor(c.y + 0.55 * r));
    const int hw = static_cast<int>(std::lround(0.125 * size));
    const int hh = static_cast<int>(std::lround(0.16 * size));
    const int bx0 = static_cast<int>(c.x) - hw, bx1 = static_cast<int>(c.x) + hw;
    const int by0 = static_cast<int>(c.y) - hh, by1 = static_cast<int>(c.y) + hh;
    const double roof = r + 4.0 + hw;  // eaves clear the dome by >= 4

    SyntheticScene s{"composite", HeightField(size, size), {}, {}, c};
    Mask mask(size, size, 0);
    for (int y = 0; y <= chord && y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
            if (d2 > r * r) continue;
            mask(x, y) = 1;
            if (x >= bx0 && x <= bx1 && y >= by0 && y <= by1)
                s.z_star(x, y) = roof - std::abs(x - c.x);
            else
                s.z_star(x, y) = std::sqrt(std::max(r * r - d2, 0.0));
        }

    const double rr = r - 0.5;
    const double dy = chord - c.y;
    const double a0 = std::atan2(dy, std::sqrt(rr * rr - dy * dy));
    auto rim = arc(c, rr, a0, -kPi - a0, circle_segments(r));
    std::vector<Polyline> contours{make_polyline(ContourKind::SilhouetteSmooth, rim)};
    contours.push_back(make_polyline(ContourKind::SilhouetteSharp, {rim.back(), rim.front()}));
    contours.back().points[0].y = contours.back().points[1].y = chord;
    auto occ = make_polyline(ContourKind::SelfOcclusion,
                             rect_loop(bx0 - 1, by0 - 1, bx1 + 1, by1 + 1));
    occ.figure_side = FigureSide::Right;
    contours.push_back(occ);
    auto fold = make_polyline(ContourKind::Fold, {{c.x, by0 + 2.0}, {c.x, by1 - 2.0}});
    fold.convexity = Convexity::Convex;
    contours.push_back(fold);
    finish(s, size, std::move(mask), std::move(contours));
    return s;
}

double angle_between(Vec2 a, Vec2 b) {
    return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

}  // namespace

SyntheticScene make_scene(SceneKind kind, int size, const SceneParams& params) {
    if (size < 32) throw Error("scene size must be at least 32");
    switch (kind) {
        case SceneKind::Hemisphere: return hemisphere(size, params);
        case SceneKind::Cube: return cube(size);
        case SceneKind::Wedge: return wedge(size, params);
        case SceneKind::TwoSlabs: return two_slabs(size, params);
        case SceneKind::Composite: return composite(size);
    }
    throw Error("unknown scene kind");
}

std::vector<std::string> consistency_violations(const SyntheticScene& s) {
    std::vector<std::string> out;
    const auto& a = s.annotations;
    const auto nf = normals(s.z_star);
    if (s.rim_center) {
        for (const auto& smp : a.samples_smooth) {
            // analytic normal taken where the contour is, not at the shifted sample
            const Vec2 radial{smp.pixel.x + std::lround(smp.target_normal.x) - s.rim_center->x,
                              smp.pixel.y + std::lround(smp.target_normal.y) - s.rim_center->y};
            if (angle_between(radial, smp.target_normal) > 0.05)
                out.push_back("rim normal off at (" + std::to_string(smp.pixel.x) + "," +
                              std::to_string(smp.pixel.y) + ")");
        }
    }
    for (const auto& f : a.samples_fold) {
        const Vec3 l = nf.n[f.probe_left], r = nf.n[f.probe_right];
        if (!nf.valid[f.probe_left] || !nf.valid[f.probe_right] ||
            std::acos(std::clamp(l.dot(r), -1.0, 1.0)) < 0.1)
            out.push_back("fold sample at (" + std::to_string(f.pixel.x) + "," +
                          std::to_string(f.pixel.y) + ") has no crease");
    }
    for (const auto& smp : a.samples_selfocc) {
        const Pixel ground{smp.pixel.x + static_cast<int>(std::lround(smp.target_normal.x)),
                           smp.pixel.y + static_cast<int>(std::lround(smp.target_normal.y))};
        if (!in_mask(s.z_star.mask, ground) || !in_mask(s.z_star.mask, smp.pixel) ||
            s.z_star.values[smp.pixel] - s.z_star.values[ground] < 1.0)
            out.push_back("occlusion sample at (" + std::to_string(smp.pixel.x) + "," +
                          std::to_string(smp.pixel.y) + ") has no depth step");
    }
    return out;
}

ReflectanceMap synthetic_reflectance(const Mask& mask, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr int kWaves = 3;
    struct Wave {
        double fx, fy, phase, amp;
    };
    Wave waves[kChannels][kWaves];
    for (auto& ch : waves)
        for (auto& w : ch) {
            const double theta = 2.0 * kPi * u(rng);
            const double freq = 2.0 * kPi * (0.01 + 0.03 * u(rng));
            w = {freq * std::cos(theta), freq * std::sin(theta), 2.0 * kPi * u(rng),
                 0.03 + 0.04 * u(rng)};
        }
    ReflectanceMap r(mask.width(), mask.height(), 0.0);
    r.mask = mask;
    const double base = std::log(0.28);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            for (int c = 0; c < kChannels; ++c) {
                double v = base;
                for (const auto& w : waves[c]) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
                r.at(x, y, c) = v;
            }
    return r;
}

IlluminationSH default_scene_light() {
    IlluminationSH l = IlluminationSH::constant(2.0);
    for (int c = 0; c < kChannels; ++c) {
        l(c, 1) = -0.4;  // L1-1 (y)
        l(c, 2) = 0.6;   // L10 (z)
        l(c, 3) = -0.4;  // L11 (x)
    }
    return l;
}

LogImage render_scene(const SyntheticScene& s, const IlluminationSH& light,
                      const ReflectanceMap& reflectance) {
    if (reflectance.width != s.z_star.width() || reflectance.height != s.z_star.height())
        throw Error("reflectance map does not match the scene size");
    const auto shading = render_log_shading(s.z_star, light);
    if (shading.clamped > 0)
        throw Error("illumination gives nonpositive irradiance on " +
                    std::to_string(shading.clamped) + " samples; choose a brighter light");
    LogImage img(s.z_star.width(), s.z_star.height(), std::log(LogImage::kFloor));
    img.mask = s.z_star.mask;
    for (std::size_t i = 0; i < img.mask.size(); ++i) {
        if (!img.mask[i] || !shading.log_shading.mask[i]) continue;
        for (int c = 0; c < kChannels; ++c)
            img.at(i, c) = reflectance.at(i, c) + shading.log_shading.at(i, c);
    }
    return img;
}

}  // namespace boundcue
