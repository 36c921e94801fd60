#include "support.hpp"

#include <doctest.h>

using namespace bct;

namespace {

template <typename F>
double fd(HeightField z, int x, int y, double h, F f) {
    const double z0 = z(x, y);
    z(x, y) = z0 + h;
    const double p = f(z);
    z(x, y) = z0 - h;
    const double m = f(z);
    return (p - m) / (2 * h);
}

double max_rel(const Grid<double>& a, const Grid<double>& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / std::max(den, 1e-12);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("flat plane normals are +z") {
    const auto nf = normals(HeightField(8, 8, 0.0));
    for (const auto& n : nf.n.data()) CHECK(n == Vec3{0, 0, 1});
}

TEST_CASE("unit slope plane") {
    const auto nf = normals(field(8, 8, [](int x, int) { return double(x); }));
    for (int y = 1; y < 7; ++y)
        for (int x = 1; x < 7; ++x) {
            CHECK(nf.n(x, y).x == doctest::Approx(-std::sqrt(0.5)));
            CHECK(nf.n(x, y).y == doctest::Approx(0.0));
            CHECK(nf.n(x, y).z == doctest::Approx(std::sqrt(0.5)));
        }
}

TEST_CASE("hemisphere normals against the analytic sphere") {
    const auto z = hemisphere(64, 16);
    const auto nf = normals(z);
    const auto apex = nf.n(32, 32);
    CHECK(apex.x == doctest::Approx(0.0));
    CHECK(apex.y == doctest::Approx(0.0));
    CHECK(apex.z == doctest::Approx(1.0));
    const auto n = nf.n(40, 32);
    CHECK(std::abs(n.x - 0.5) < 0.05);
    CHECK(std::abs(n.y) < 0.05);
    CHECK(std::abs(n.z - std::sqrt(3.0) / 2) < 0.05);
}

TEST_CASE("one-sided differences at the mask edge") {
    auto z = field(6, 6, [](int x, int y) { return 2.0 * x - y; });
    const auto nf = normals(z);
    // corner pixel has only forward neighbors but the plane is still exact
    CHECK(nf.n(0, 0).x == doctest::Approx(-2.0 / std::sqrt(6.0)));
    CHECK(nf.n(0, 0).y == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(nf.valid(0, 0));
}

TEST_CASE("isolated pixel has no normal") {
    HeightField z(5, 5, 1.0);
    z.mask = Mask(5, 5, 0);
    z.mask(2, 2) = 1;
    CHECK(!normals(z).valid(2, 2));
}

TEST_CASE("planes have zero curvature") {
    for (const auto& z : {HeightField(8, 8, 3.0), field(8, 8, [](int x, int) { return double(x); })}) {
        const auto c = mean_curvature(z);
        for (int y = 1; y < 7; ++y)
            for (int x = 1; x < 7; ++x) CHECK(c.h(x, y) == doctest::Approx(0.0));
    }
}

TEST_CASE("hemisphere curvature is about 1/r, positive for a dome") {
    const double r = 24;
    const auto z = hemisphere(64, r);
    const auto c = mean_curvature(z);
    int n = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (std::hypot(x - 32.0, y - 32.0) < 0.7 * r) {
                ++n;
                CHECK(std::abs(c.h(x, y) * r - 1.0) < 0.1);
            }
    CHECK(n > 100);
}

TEST_CASE("curvature needs the full 3x3 neighborhood") {
    const auto z = hemisphere(32, 10);
    const auto c = mean_curvature(z);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            bool full = true;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) full = full && in_mask(z.mask, x + dx, y + dy);
            CHECK(bool(c.valid(x, y)) == full);
        }
}

TEST_CASE("zero cotangent gives zero gradient") {
    std::mt19937_64 rng(1);
    HeightField z(8, 8);
    z.values = random_grid(8, 8, rng);
    const auto gn = jacobian_vjp(z, Grid<Vec3>(8, 8));
    const auto gk = jacobian_vjp(z, Grid<double>(8, 8));
    for (double v : gn.data()) CHECK(v == 0.0);
    for (double v : gk.data()) CHECK(v == 0.0);
}

TEST_CASE("normals vjp against central differences") {
    std::mt19937_64 rng(7);
    HeightField z(8, 8);
    z.values = random_grid(8, 8, rng);
    z.mask(0, 0) = 0;
    z.mask(5, 3) = 0;
    Grid<Vec3> cot(8, 8);
    std::normal_distribution<double> n01;
    for (auto& c : cot.data()) c = {n01(rng), n01(rng), n01(rng)};
    const auto g = jacobian_vjp(z, cot);
    auto f = [&](const HeightField& zz) {
        const auto nf = normals(zz);
        double s = 0;
        for (std::size_t i = 0; i < nf.n.size(); ++i)
            if (nf.valid[i]) s += nf.n[i].dot(cot[i]);
        return s;
    };
    Grid<double> num(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            if (z.mask(x, y)) num(x, y) = fd(z, x, y, 1e-5, f);
    CHECK(max_rel(g, num) <= 1e-5);
}

TEST_CASE("curvature vjp against central differences") {
    std::mt19937_64 rng(11);
    HeightField z(8, 8);
    z.values = random_grid(8, 8, rng);
    z.mask(7, 7) = 0;
    const auto cot = random_grid(8, 8, rng);
    const auto g = jacobian_vjp(z, cot);
    auto f = [&](const HeightField& zz) {
        const auto c = mean_curvature(zz);
        double s = 0;
        for (std::size_t i = 0; i < c.h.size(); ++i)
            if (c.valid[i]) s += c.h[i] * cot[i];
        return s;
    };
    Grid<double> num(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            if (z.mask(x, y)) num(x, y) = fd(z, x, y, 1e-5, f);
    CHECK(max_rel(g, num) <= 1e-4);
}

TEST_CASE("validate rejects bad height fields") {
    HeightField z(8, 8);
    CHECK_NOTHROW(validate(z));
    z(3, 3) = std::nan("");
    CHECK_THROWS(validate(z));
    CHECK_THROWS(validate(HeightField(2, 8)));
}

}
