#include "support.hpp"

#include <boundcue/config.hpp>
#include <boundcue/errors.hpp>
#include <boundcue/io.hpp>

#include <doctest.h>

#include <filesystem>

using namespace bct;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / "boundcue_unit";
    fs::create_directories(d);
    return d / name;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("BCZF round trip keeps float32 heights and the mask") {
    auto z = hemisphere(20, 7);
    const auto back = decode_bczf(encode_bczf(z));
    CHECK(back.mask == z.mask);
    for (std::size_t i = 0; i < z.values.size(); ++i)
        if (z.mask[i]) CHECK(back.values[i] == double(float(z.values[i])));
    const auto bytes = encode_bczf(z);
    CHECK(bytes.substr(0, 4) == "BCZF");
    CHECK(bytes.size() == 16 + 4 * 400);
    CHECK_THROWS_AS(decode_bczf("BCZF\x01"), Error);
}

TEST_CASE("PFM header and size") {
    HeightField z(5, 3, 2.0);
    const auto pfm = encode_pfm(z);
    CHECK(pfm.rfind("Pf\n5 3\n-1", 0) == 0);
    const auto body = pfm.find('\n', pfm.find("-1")) + 1;
    CHECK(pfm.size() == body + 5 * 3 * 4);
}

TEST_CASE("OBJ has a vertex per pixel and two faces per full quad") {
    const auto obj = encode_obj(HeightField(4, 3, 1.0));
    auto count = [&](const std::string& prefix) {
        std::size_t n = 0, pos = 0;
        while ((pos = obj.find("\n" + prefix, pos)) != std::string::npos) ++n, ++pos;
        return n + (obj.rfind(prefix, 0) == 0);
    };
    CHECK(count("v ") == 12);
    CHECK(count("f ") == 2 * 3 * 2);
}

TEST_CASE("16-bit PNG round trip") {
    Image img{7, 5, 3, {}};
    img.data.resize(7 * 5 * 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = double(i % 65536) / 65535.0 * 100 / 105;
    const auto p = scratch("rt16.png");
    write_png(p, img, 16);
    const auto back = read_png(p);
    REQUIRE(back.width == 7);
    REQUIRE(back.channels == 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 65535);
    CHECK_THROWS_AS(read_png(scratch("missing.png")), Error);
}

}

TEST_SUITE("config") {

TEST_CASE("defaults and overrides") {
    const auto d = parse_config("{}");
    CHECK(d.model.lambda_f == 1.0);
    CHECK(d.model.energy.fold.smoothing_tau == doctest::Approx(1e-3));
    const auto c = parse_config(
        R"({"solver":{"max_iters":50,"levels":2,"init":"zero"},"fold":{"epsilon":0.5},)"
        R"("contour":{"loss":"squared"},"gsm":{"weights":[0.5,0.5],"sigmas":[0.1,1]}})");
    CHECK(c.solver.max_iters == 50);
    CHECK(c.solver.levels == 2);
    CHECK(c.solver.init == InitPolicy::Zero);
    CHECK(c.model.energy.fold.epsilon == 0.5);
    CHECK(c.model.energy.loss == ContourLoss::Squared);
    CHECK(c.model.energy.gsm.sigmas.size() == 2);
}

TEST_CASE("bad keys and values name their path") {
    auto field_of = [](const std::string& text, const std::string& root) {
        try {
            parse_config(text, root);
        } catch (const SchemaError& e) {
            return e.field();
        }
        return std::string("(none)");
    };
    CHECK(field_of(R"({"solver":{"iters":3}})", "") == "solver.iters");
    CHECK(field_of(R"({"solver":{"max_iters":-3}})", "config") == "config.solver.max_iters");
    CHECK(field_of(R"({"gsm":{"weights":[0.5,0.6],"sigmas":[1,2]}})", "") .rfind("gsm", 0) == 0);
    CHECK(field_of("[1,2]", "") == "(root)");
}

TEST_CASE("light serialization round trip") {
    IlluminationSH l;
    for (int k = 0; k < kLightDims; ++k) l.coeffs[k] = 0.1 * k - 1;
    CHECK(parse_light(serialize_light(l)) == l);
    CHECK_THROWS_AS(parse_light("[1,2,3]"), Error);
}

}
