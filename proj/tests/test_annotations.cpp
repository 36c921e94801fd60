#include "support.hpp"

#include <boundcue/errors.hpp>

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace bct;

namespace {

std::string square_doc(const std::string& kind) {
    return R"({"version":1,"image":{"width":32,"height":32},"contours":[{"kind":")" + kind +
           R"(","points":[[8,8],[23,8],[23,23],[8,23],[8,8]]}]})";
}

std::vector<Pixel> pixels_of(const std::vector<ChainPixel>& c) {
    std::vector<Pixel> out;
    for (const auto& p : c) out.push_back(p.pixel);
    return out;
}

// Bresenham reference for |dy| <= |dx|, dx > 0, ties rounded up.
std::vector<Pixel> midpoint_line(int x0, int y0, int x1, int y1) {
    std::vector<Pixel> out;
    const double slope = double(y1 - y0) / (x1 - x0);
    for (int x = x0; x <= x1; ++x) out.push_back({x, int(std::floor(y0 + slope * (x - x0) + 0.5))});
    return out;
}

}  // namespace

TEST_SUITE("annotations") {

TEST_CASE("no polylines and a full mask give empty sample lists") {
    const auto set = parse_annotations(
        R"({"version":1,"image":{"width":32,"height":32},"mask":"rle:0,1024","contours":[]})", 32, 32);
    CHECK(mask_count(set.silhouette_mask) == 1024);
    CHECK(set.samples_smooth.empty());
    CHECK(set.samples_sharp.empty());
    CHECK(set.samples_selfocc.empty());
    CHECK(set.samples_fold.empty());
}

TEST_CASE("closed square silhouette: normals point out of the filled interior") {
    const auto set = parse_annotations(square_doc("silhouette_smooth"), 32, 32);
    REQUIRE(!set.samples_smooth.empty());
    const Mask& m = set.silhouette_mask;
    bool saw_top_mid = false;
    for (const auto& s : set.samples_smooth) {
        // brute force: walking along the normal from the sample leaves the mask
        // sooner than walking against it
        auto run = [&](Vec2 dir) {
            int k = 0;
            while (k < 40 && in_mask(m, int(std::lround(s.pixel.x + dir.x * k)),
                                     int(std::lround(s.pixel.y + dir.y * k))))
                ++k;
            return k;
        };
        CHECK(run(s.target_normal) < run(-s.target_normal));
        if (s.pixel.x == 15 && s.pixel.y == 9) {
            saw_top_mid = true;
            CHECK(s.target_normal.x == doctest::Approx(0.0));
            CHECK(s.target_normal.y == doctest::Approx(-1.0));
        }
    }
    CHECK(saw_top_mid);
}

TEST_CASE("square outline is filled as the mask") {
    const auto set = parse_annotations(square_doc("silhouette_sharp"), 32, 32);
    CHECK(mask_count(set.silhouette_mask) == 16 * 16);
    CHECK(set.samples_smooth.empty());
    CHECK(!set.samples_sharp.empty());
}

TEST_CASE("fold along +y: v follows (-u_y, u_x), concave flips it and swaps probes") {
    Polyline p = line(ContourKind::Fold, {{10, 4}, {10, 20}});
    const auto chain = rasterize_polyline(p);
    const auto convex = fold_samples(chain, Convexity::Convex, 32, 32);
    const auto concave = fold_samples(chain, Convexity::Concave, 32, 32);
    REQUIRE(convex.size() == chain.size());
    REQUIRE(concave.size() == convex.size());
    for (std::size_t i = 0; i < convex.size(); ++i) {
        CHECK(convex[i].tangent.y == doctest::Approx(1.0));
        CHECK(convex[i].v.x == doctest::Approx(-1.0));
        CHECK(convex[i].v.y == doctest::Approx(0.0));
        CHECK(concave[i].v.x == doctest::Approx(1.0));
        CHECK(convex[i].probe_left == Pixel{9, convex[i].pixel.y});
        CHECK(convex[i].probe_right == Pixel{11, convex[i].pixel.y});
        CHECK(concave[i].probe_left == convex[i].probe_right);
        CHECK(concave[i].probe_right == convex[i].probe_left);
        CHECK(convex[i].probe_left != convex[i].probe_right);
    }
}

TEST_CASE("fold probes outside the image drop the sample") {
    const auto chain = rasterize_polyline(line(ContourKind::Fold, {{0, 2}, {0, 6}}));
    CHECK(fold_samples(chain, Convexity::Convex, 8, 8).empty());
}

TEST_CASE("rasterize axis-aligned and diagonal segments") {
    auto c = rasterize_polyline(line(ContourKind::SilhouetteSharp, {{0, 0}, {3, 0}}));
    CHECK(pixels_of(c) == std::vector<Pixel>{{0, 0}, {1, 0}, {2, 0}, {3, 0}});
    for (const auto& p : c) {
        CHECK(p.tangent.x == doctest::Approx(1.0));
        CHECK(p.tangent.y == doctest::Approx(0.0));
    }
    c = rasterize_polyline(line(ContourKind::SilhouetteSharp, {{0, 0}, {2, 2}}));
    CHECK(pixels_of(c) == std::vector<Pixel>{{0, 0}, {1, 1}, {2, 2}});
    for (const auto& p : c) {
        CHECK(p.tangent.x == doctest::Approx(std::sqrt(0.5)));
        CHECK(p.tangent.y == doctest::Approx(std::sqrt(0.5)));
    }
}

TEST_CASE("rasterize matches a midpoint line reference") {
    CHECK(pixels_of(rasterize_polyline(line(ContourKind::SilhouetteSharp, {{0, 0}, {4, 2}}))) ==
          midpoint_line(0, 0, 4, 2));
    CHECK(pixels_of(rasterize_polyline(line(ContourKind::SilhouetteSharp, {{1, 3}, {12, 7}}))) ==
          midpoint_line(1, 3, 12, 7));
}

TEST_CASE("rasterized chains are 8-connected without repeats") {
    const auto c = rasterize_polyline(
        line(ContourKind::SilhouetteSmooth, {{2.3, 4.1}, {17.8, 9.6}, {5.5, 20.2}, {2.3, 4.1}}));
    std::set<Pixel> seen;
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(seen.insert(c[i].pixel).second);
        CHECK(std::abs(c[i].tangent.norm() - 1.0) < 1e-12);
        if (i) {
            CHECK(std::abs(c[i].pixel.x - c[i - 1].pixel.x) <= 1);
            CHECK(std::abs(c[i].pixel.y - c[i - 1].pixel.y) <= 1);
        }
    }
}

TEST_CASE("horizontal chain above a lower half-plane mask") {
    Mask m(16, 16, 0);
    for (int y = 8; y < 16; ++y)
        for (int x = 0; x < 16; ++x) m(x, y) = 1;
    const auto chain = rasterize_polyline(line(ContourKind::SilhouetteSmooth, {{2, 8}, {13, 8}}));
    for (const auto& s : contour_normals(chain, MaskOutward{&m}, ContourKind::SilhouetteSmooth)) {
        CHECK(s.target_normal.x == doctest::Approx(0.0));
        CHECK(s.target_normal.y == doctest::Approx(-1.0));
        CHECK(s.pixel.y == 9);
        CHECK(!s.ambiguous);
    }
    // reversed travel gives the same normals
    const auto rev = rasterize_polyline(line(ContourKind::SilhouetteSmooth, {{13, 8}, {2, 8}}));
    for (const auto& s : contour_normals(rev, MaskOutward{&m}, ContourKind::SilhouetteSmooth))
        CHECK(s.target_normal.y == doctest::Approx(-1.0));
}

TEST_CASE("circle silhouette normals follow the radial direction") {
    const double c = 16, r = 10;
    const Mask m = disk_mask(32, 32, c, c, r);
    std::vector<Vec2> pts;
    for (int k = 0; k <= 64; ++k) {
        const double a = 2 * M_PI * k / 64;
        pts.push_back({c + r * std::cos(a), c + r * std::sin(a)});
    }
    const auto chain = rasterize_polyline(line(ContourKind::SilhouetteSmooth, pts));
    const auto samples = contour_normals(chain, MaskOutward{&m}, ContourKind::SilhouetteSmooth);
    REQUIRE(samples.size() == chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Vec2 radial =
            Vec2{chain[i].pixel.x - c, chain[i].pixel.y - c}.normalized();
        const double ang = std::acos(std::clamp(radial.dot(samples[i].target_normal), -1.0, 1.0));
        CHECK(ang < 0.2);
    }
}

TEST_CASE("self-occlusion side table for the four axis directions") {
    // The normal points away from the figure. Travelling +x, Left is the
    // upper half-plane (smaller y), so the normal is +y.
    struct Row {
        Vec2 a, b;
        FigureSide side;
        Vec2 normal;
    };
    const Row rows[] = {
        {{2, 5}, {9, 5}, FigureSide::Left, {0, 1}},   {{2, 5}, {9, 5}, FigureSide::Right, {0, -1}},
        {{9, 5}, {2, 5}, FigureSide::Left, {0, -1}},  {{9, 5}, {2, 5}, FigureSide::Right, {0, 1}},
        {{5, 2}, {5, 9}, FigureSide::Left, {-1, 0}},  {{5, 2}, {5, 9}, FigureSide::Right, {1, 0}},
        {{5, 9}, {5, 2}, FigureSide::Left, {1, 0}},   {{5, 9}, {5, 2}, FigureSide::Right, {-1, 0}},
    };
    for (const auto& r : rows) {
        const auto chain = rasterize_polyline(line(ContourKind::SelfOcclusion, {r.a, r.b}));
        const auto samples = contour_normals(chain, FigureSideOf{r.side}, ContourKind::SelfOcclusion);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            CHECK(s.target_normal.x == doctest::Approx(r.normal.x));
            CHECK(s.target_normal.y == doctest::Approx(r.normal.y));
            // one pixel toward the figure
            CHECK(s.pixel.x == chain[i].pixel.x - int(r.normal.x));
            CHECK(s.pixel.y == chain[i].pixel.y - int(r.normal.y));
        }
    }
}

TEST_CASE("reversed self-occlusion with the opposite side yields identical samples") {
    const auto fwd = rasterize_polyline(line(ContourKind::SelfOcclusion, {{3, 3}, {12, 7}}));
    const auto rev = rasterize_polyline(line(ContourKind::SelfOcclusion, {{12, 7}, {3, 3}}));
    auto a = contour_normals(fwd, FigureSideOf{FigureSide::Left}, ContourKind::SelfOcclusion);
    auto b = contour_normals(rev, FigureSideOf{FigureSide::Right}, ContourKind::SelfOcclusion);
    auto key = [](const ContourSample& s) {
        return std::tuple(s.pixel.x, s.pixel.y, std::lround(s.target_normal.x * 1e6),
                          std::lround(s.target_normal.y * 1e6));
    };
    std::set<decltype(key(a[0]))> ka, kb;
    for (const auto& s : a) ka.insert(key(s));
    for (const auto& s : b) kb.insert(key(s));
    CHECK(ka == kb);
}

TEST_CASE("schema errors name the field") {
    auto field_of = [](const std::string& doc) {
        try {
            parse_annotation_document(doc);
        } catch (const SchemaError& e) {
            return e.field();
        }
        return std::string("(none)");
    };
    CHECK(field_of(R"({"version":1,"image":{"width":32,"height":32},"contours":[{"kind":"fold","points":[[1,1],[5,5]]}]})") ==
          "contours[0].convexity");
    CHECK(field_of(R"({"version":1,"image":{"width":32,"height":32},"contours":[{"kind":"self_occlusion","points":[[1,1],[5,5]]}]})") ==
          "contours[0].figure_side");
    CHECK(field_of(R"({"version":1,"image":{"width":32,"height":32},"contours":[{"kind":"blob","points":[[1,1],[5,5]]}]})") ==
          "contours[0].kind");
    CHECK(field_of(R"({"version":1,"image":{"width":32},"contours":[]})") == "image.height");
    CHECK(field_of(R"({"image":{"width":32,"height":32},"contours":[]})") == "version");
}

TEST_CASE("out-of-bounds polyline raises a bounds error with its index") {
    const std::string doc =
        R"({"version":1,"image":{"width":16,"height":16},"mask":"rle:0,256","contours":[)"
        R"({"kind":"silhouette_sharp","points":[[1,1],[5,1]]},)"
        R"({"kind":"silhouette_sharp","points":[[1,1],[40,1]]}]})";
    try {
        parse_annotation_document(doc);
        FAIL("expected BoundsError");
    } catch (const BoundsError& e) {
        CHECK(e.polyline_index() == 1);
    }
}

TEST_CASE("serialize then parse is lossless") {
    const auto doc = parse_annotation_document(
        R"({"version":1,"image":{"width":32,"height":32},"contours":[)"
        R"({"kind":"silhouette_smooth","points":[[8,8],[23.5,8],[23,23.25],[8,23],[8,8]]},)"
        R"({"kind":"fold","convexity":"concave","points":[[12,12],[18,18]]},)"
        R"({"kind":"self_occlusion","figure_side":"right","points":[[10,20],[20,20]]}]})");
    const auto text = serialize_annotation_document(doc);
    const auto again = parse_annotation_document(text);
    CHECK(again.contours == doc.contours);
    CHECK(again.mask == doc.mask);
    CHECK(serialize_annotation_document(again) == text);
}

TEST_CASE("RLE round trip") {
    const Mask m = disk_mask(23, 17, 11, 8, 6);
    CHECK(decode_rle(encode_rle(m), 23, 17) == m);
}

TEST_CASE("downsample: straight chain halves, tangent kept") {
    Mask m(32, 32, 1);
    AnnotationSet a = build_annotation_set(m, {line(ContourKind::Fold, {{4, 10}, {19, 10}})});
    a.contours[0].convexity = Convexity::Convex;
    a = build_annotation_set(m, a.contours);
    REQUIRE(a.samples_fold.size() == 16);
    const auto d = downsample_annotations(a);
    CHECK(d.samples_fold.size() == 8);
    for (const auto& s : d.samples_fold) CHECK(s.tangent.x == doctest::Approx(1.0));
}

TEST_CASE("downsample: circle area quarters") {
    const Mask m = disk_mask(64, 64, 31.5, 31.5, 20);
    AnnotationSet a = build_annotation_set(m, {});
    const auto d = downsample_annotations(a);
    CHECK(d.width() == 32);
    const double ratio = double(mask_count(d.silhouette_mask)) / mask_count(m);
    CHECK(ratio == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("downsample: empty set stays empty") {
    const auto d = downsample_annotations(build_annotation_set(Mask(16, 16, 0), {}));
    CHECK(mask_count(d.silhouette_mask) == 0);
    CHECK(d.samples_smooth.empty());
    CHECK(d.samples_fold.empty());
}

}
