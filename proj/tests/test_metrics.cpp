#include "support.hpp"

#include <boundcue/metrics.hpp>

#include <doctest.h>

#include <limits>

using namespace bct;

TEST_SUITE("metrics") {

TEST_CASE("identical fields score zero") {
    const auto z = hemisphere(32, 12);
    CHECK(n_mse(z, z) == 0.0);
    CHECK(z_mae(z, z) == 0.0);
}

TEST_CASE("flat versus unit slope is (pi/4)^2") {
    const auto flat = HeightField(16, 16, 0.0);
    const auto slope = field(16, 16, [](int x, int) { return double(x); });
    CHECK(n_mse(flat, slope) == doctest::Approx(M_PI * M_PI / 16).epsilon(1e-3 / 0.61685));
    CHECK(std::abs(n_mse(flat, slope) - 0.61685) <= 1e-3);
}

TEST_CASE("offsets do not change either metric") {
    std::mt19937_64 rng(3);
    HeightField a(12, 12), b(12, 12);
    a.values = random_grid(12, 12, rng);
    b.values = random_grid(12, 12, rng);
    auto shifted = a;
    for (auto& v : shifted.values.data()) v += 7;
    CHECK(n_mse(shifted, b) == doctest::Approx(n_mse(a, b)).epsilon(1e-12));
    CHECK(std::abs(z_mae(shifted, b) - z_mae(a, b)) <= 1e-12);
    auto b5 = b;
    for (auto& v : b5.values.data()) v += 5;
    CHECK(z_mae(b5, b) == doctest::Approx(0.0));
}

TEST_CASE("one pixel off by d on an odd-sized mask") {
    // median shift is 0, leaving d/n
    for (int n : {3, 5, 9}) {
        HeightField a(n, 3, 1.0), b(n, 3, 1.0);
        a.mask = Mask(n, 3, 0);
        for (int x = 0; x < n; ++x) a.mask(x, 1) = 1;
        b.mask = a.mask;
        a(2, 1) += 4.0;
        CHECK(z_mae(a, b) == doctest::Approx(4.0 / n));
    }
}

TEST_CASE("z_mae is symmetric and matches a brute-force search over t") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 5; ++k) {
        HeightField a(9, 7), b(9, 7);
        a.values = random_grid(9, 7, rng, 2.0);
        b.values = random_grid(9, 7, rng, 2.0);
        CHECK(z_mae(a, b) == doctest::Approx(z_mae(b, a)));
        double best = std::numeric_limits<double>::infinity();
        for (double t = -10; t <= 10; t += 1e-4) {
            double s = 0;
            for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i] + t);
            best = std::min(best, s / a.values.size());
        }
        CHECK(std::abs(z_mae(a, b) - best) <= 1e-3);
    }
}

TEST_CASE("metrics restrict to the mask intersection") {
    auto a = hemisphere(32, 10);
    auto b = a;
    b.mask = disk_mask(32, 32, 16, 16, 6);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (!b.mask(x, y)) b(x, y) = 100;  // ignored
    CHECK(z_mae(a, b) == 0.0);
    const auto r = evaluate(a, b);
    CHECK(r.pixels > 0);
    CHECK(r.pixels <= mask_count(b.mask));
}

}
