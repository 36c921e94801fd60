#pragma once

#include <boundcue/annotations.hpp>
#include <boundcue/geometry.hpp>

#include <cmath>
#include <functional>
#include <random>

namespace bct {

using namespace boundcue;

inline HeightField field(int w, int h, const std::function<double(int, int)>& f) {
    HeightField z(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) z(x, y) = f(x, y);
    return z;
}

inline Mask disk_mask(int w, int h, double cx, double cy, double r) {
    Mask m(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m(x, y) = std::hypot(x - cx, y - cy) <= r;
    return m;
}

/// Hemisphere of radius r centered at (cx, cy), masked to its disk.
inline HeightField hemisphere(int size, double r) {
    const double c = size / 2.0;
    auto z = field(size, size, [&](int x, int y) {
        const double d2 = (x - c) * (x - c) + (y - c) * (y - c);
        return d2 < r * r ? std::sqrt(r * r - d2) : 0.0;
    });
    z.mask = disk_mask(size, size, c, c, r);
    return z;
}

inline Grid<double> random_grid(int w, int h, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Grid<double> g(w, h);
    for (auto& v : g.data()) v = n(rng);
    return g;
}

inline Polyline line(ContourKind k, std::vector<Vec2> pts) {
    Polyline p;
    p.kind = k;
    p.points = std::move(pts);
    if (k == ContourKind::Fold) p.convexity = Convexity::Convex;
    if (k == ContourKind::SelfOcclusion) p.figure_side = FigureSide::Left;
    return p;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace bct
