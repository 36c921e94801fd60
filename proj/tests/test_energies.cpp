#include "support.hpp"

#include <boundcue/energies.hpp>
#include <boundcue/synth.hpp>

#include <doctest.h>

using namespace bct;

namespace {

const double kEps = 1.0 / std::sqrt(2.0);

// Crease along x = cx, crease direction u = (0, 1). Left of the crease
// (x < cx) has slopes (sx, sy), the right side (-sx, sy).
HeightField roof(int size, double sx, double sy) {
    const int cx = size / 2;
    return field(size, size, [=](int x, int y) { return -sx * std::abs(x - cx) + sy * y; });
}

std::vector<FoldSample> crease_samples(int size) {
    const auto chain =
        rasterize_polyline(line(ContourKind::Fold, {{size / 2.0, 2}, {size / 2.0, size - 3.0}}));
    return fold_samples(chain, Convexity::Convex, size, size);
}

}  // namespace

TEST_SUITE("energies") {

TEST_CASE("fold alignment of the 90 degree convex roof is 1") {
    const double a = std::sqrt(0.5);
    CHECK(fold_alignment({-a, 0, a}, {a, 0, a}, {0, 1}) == doctest::Approx(1.0).epsilon(1e-15));
    // flat across the fold
    CHECK(fold_alignment({0, 0, 1}, {0, 0, 1}, {0, 1}) == 0.0);
}

TEST_CASE("fold loss on the analytic 90 degree wedge is zero") {
    // Left normal (-1, 0, 1)/sqrt2, right (1, 0, 1)/sqrt2:
    // N_l x N_r = (0, 1, 0), dotted with (u, 0) = (0, 1, 0) gives c = 1, so
    // max(0, 1/sqrt2 - 1) = 0 per sample.
    const auto z = roof(16, 1.0, 0.0);
    const auto s = crease_samples(16);
    REQUIRE(!s.empty());
    const auto r = f_fold(z, s);
    CHECK(r.skipped == 0);
    CHECK(r.exact_value == 0.0);
    CHECK(r.value < 1e-12);
}

TEST_CASE("flat plane across a fold costs 1/sqrt2 per sample") {
    // N_l = N_r = (0, 0, 1): the cross product vanishes, c = 0, loss = eps.
    const auto s = crease_samples(16);
    const auto r = f_fold(HeightField(16, 16, 2.0), s);
    const double n = double(s.size());
    CHECK(std::abs(r.exact_value / n - kEps) <= 1e-6);
    // softplus sits above the hinge by at most tau * log 2
    CHECK(r.value / n >= kEps);
    CHECK(r.value / n - kEps <= 1e-3 * std::log(2.0) + 1e-12);
}

TEST_CASE("crease tilted 45 degrees out of the image plane sits at the hinge") {
    // Normals N_l = (-1/sqrt2, -1/2, 1/2), N_r = (1/sqrt2, -1/2, 1/2) are
    // orthogonal and both orthogonal to d = (0, 1, 1)/sqrt2, so
    // N_l x N_r = d and c = d . (0, 1, 0) = 1/sqrt2 = eps. As heights:
    // Z = -sqrt2 |x - cx| + y.
    const double a = std::sqrt(0.5);
    CHECK(fold_alignment({-a, -0.5, 0.5}, {a, -0.5, 0.5}, {0, 1}) ==
          doctest::Approx(kEps).epsilon(1e-15));
    const auto z = roof(16, std::sqrt(2.0), 1.0);
    const auto r = f_fold(z, crease_samples(16), {.smoothing_tau = 0.0});
    CHECK(r.exact_value < 1e-12);
    CHECK(r.value < 1e-12);
}

TEST_CASE("concave fold labels penalize a convex roof") {
    const auto chain = rasterize_polyline(line(ContourKind::Fold, {{8, 2}, {8, 13}}));
    const auto s = fold_samples(chain, Convexity::Concave, 16, 16);
    const auto r = f_fold(roof(16, 1.0, 0.0), s);
    // c flips to -1
    CHECK(r.exact_value / s.size() == doctest::Approx(kEps + 1.0));
}

TEST_CASE("fold samples with off-mask probes are skipped") {
    auto z = roof(16, 1.0, 0.0);
    const auto s = crease_samples(16);
    z.mask(7, s[0].pixel.y) = 0;
    CHECK(f_fold(z, s).skipped >= 1);
}

TEST_CASE("f_sfc on a flat field with a horizontal target") {
    ContourSample s;
    s.pixel = {4, 4};
    s.tangent = {0, 1};
    s.target_normal = {1, 0};
    const auto r = f_sfc(HeightField(8, 8), {s});
    const double tau = 1e-3;
    CHECK(r.value == doctest::Approx(std::sqrt(1 + tau * tau) - tau));
    s.target_normal = {0, 1};
    CHECK(f_selfocc(HeightField(8, 8), {s}).value == doctest::Approx(std::sqrt(1 + tau * tau) - tau));
}

TEST_CASE("empty sample lists cost nothing") {
    std::mt19937_64 rng(3);
    HeightField z(8, 8);
    z.values = random_grid(8, 8, rng);
    for (const auto& r : {f_sfc(z, {}), f_selfocc(z, {})}) {
        CHECK(r.value == 0.0);
        for (double g : r.gradient.data()) CHECK(g == 0.0);
    }
    CHECK(f_fold(z, {}).value == 0.0);
}

TEST_CASE("hemisphere rim normals nearly satisfy f_sfc") {
    const auto s = make_scene(SceneKind::Hemisphere, 64, {.radius = 24});
    const auto& samples = s.annotations.samples_smooth;
    REQUIRE(!samples.empty());
    // A sample at distance d from the center cannot do better than
    // |N_xy| = d / r, so 1 - d / r is the floor; allow 0.01 for differencing.
    double floor = 0;
    for (const auto& smp : samples) floor += 1 - std::hypot(smp.pixel.x - 32.0, smp.pixel.y - 32.0) / 24;
    CHECK(f_sfc(s.z_star, samples).value <= floor + 0.01 * samples.size());
}

TEST_CASE("f_flat") {
    CHECK(f_flat(HeightField(8, 8, 1.5)).value == 0.0);
    const auto z = field(8, 8, [](int x, int) { return double(x); });
    // every pixel gets slope 1 (one-sided at the border): -log(sqrt2/2) each
    CHECK(f_flat(z).value / 64 == doctest::Approx(0.5 * std::log(2.0)));
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        HeightField r(10, 10);
        r.values = random_grid(10, 10, rng, 3.0);
        CHECK(f_flat(r).value >= 0.0);
    }
}

TEST_CASE("f_smooth") {
    CHECK(f_smooth(HeightField(8, 8)).value == 0.0);

    // interior of a sphere: mask eroded 3 pixels inside the rim
    const double r = 24;
    auto z = hemisphere(64, r);
    z.mask = disk_mask(64, 64, 32, 32, r - 3);
    const double interior = f_smooth(z).value;
    auto bumpy = z;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01(0, 0.2);
    for (auto& v : bumpy.values.data()) v += n01(rng);
    CHECK(interior < 0.01 * f_smooth(bumpy).value);
    CHECK(interior / mask_count(z.mask) < 1e-3);

    // even in the curvature differences
    auto neg = z;
    for (auto& v : neg.values.data()) v = -v;
    CHECK(f_smooth(neg).value == doctest::Approx(interior).epsilon(1e-12));
}

TEST_CASE("total energy: switched-off terms and the flat plane") {
    const auto scene = make_scene(SceneKind::Composite, 48);
    std::mt19937_64 rng(9);
    HeightField z(48, 48);
    z.values = random_grid(48, 48, rng);
    z.mask = scene.annotations.silhouette_mask;
    const CueWeights none{.sfc = 0, .selfocc = 0, .fold = 0, .reg = 0, .sfs = 0};
    const auto r0 = total_energy(z, scene.annotations, none);
    CHECK(r0.total == 0.0);
    for (double g : r0.grad_total.data()) CHECK(g == 0.0);

    HeightField flat(48, 48, 0.0);
    flat.mask = z.mask;
    CHECK(total_energy(flat, scene.annotations, CueWeights{.reg = 1}).total == 0.0);
}

TEST_CASE("total energy equals the separately computed terms") {
    const auto scene = make_scene(SceneKind::Composite, 48);
    std::mt19937_64 rng(12);
    HeightField z(48, 48);
    z.values = random_grid(48, 48, rng);
    z.mask = scene.annotations.silhouette_mask;
    const auto& a = scene.annotations;
    const CueWeights w{.sfc = 1, .selfocc = 0.5, .fold = 2, .reg = 1, .lambda_f = 0.7, .lambda_k = 1.3};
    const auto r = total_energy(z, a, w);
    // sharp silhouette samples carry no normal constraint
    const double expect = f_sfc(z, a.samples_smooth).value + 0.5 * f_selfocc(z, a.samples_selfocc).value +
                          2 * f_fold(z, a.samples_fold).value +
                          0.7 * f_flat(z).value + 1.3 * f_smooth(z).value;
    CHECK(r.total == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("GSM parameters are validated") {
    CHECK_NOTHROW(GsmParams::curvature_default().validate());
    CHECK_THROWS((GsmParams{{0.5, 0.6}, {1, 2}}.validate()));
    CHECK_THROWS((GsmParams{{0.5, 0.5}, {2, 1}}.validate()));
    const auto g = GsmParams::curvature_default();
    CHECK(g.cost(0.0) == 0.0);
    CHECK(g.cost(0.3) == doctest::Approx(g.cost(-0.3)));
}

}
