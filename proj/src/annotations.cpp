#include <boundcue/annotations.hpp>

#include <boundcue/errors.hpp>
#include <boundcue/io.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace boundcue {

using nlohmann::json;

std::string_view to_string(ContourKind k) {
    switch (k) {
        case ContourKind::SilhouetteSmooth: return "silhouette_smooth";
        case ContourKind::SilhouetteSharp: return "silhouette_sharp";
        case ContourKind::SelfOcclusion: return "self_occlusion";
        case ContourKind::Fold: return "fold";
    }
    return "?";
}

std::string_view to_string(Convexity c) { return c == Convexity::Convex ? "convex" : "concave"; }
std::string_view to_string(FigureSide s) { return s == FigureSide::Left ? "left" : "right"; }

namespace {

/// Rounds half toward +inf; translation-invariant, unlike std::round.
int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

Pixel round_pixel(Vec2 p) { return {round_half_up(p.x), round_half_up(p.y)}; }

Pixel round_away(Vec2 p) {
    return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool inside(Pixel p, int width, int height) {
    return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height;
}

void check_bounds(const Polyline& p, std::size_t index, int width, int height) {
    for (std::size_t k = 0; k < p.points.size(); ++k) {
        const auto& q = p.points[k];
        if (!std::isfinite(q.x) || !std::isfinite(q.y) || !inside(round_pixel(q), width, height)) {
            std::ostringstream os;
            os << "point " << k << " (" << q.x << ", " << q.y << ") lies outside the "
               << width << "x" << height << " image";
            throw BoundsError(index, os.str());
        }
    }
}

}  // namespace

void validate(const Polyline& p) {
    if (p.points.size() < 2) throw ValidationError("points", "at least two points required");
    for (std::size_t k = 1; k < p.points.size(); ++k)
        if (p.points[k] == p.points[k - 1])
            throw ValidationError("points", "consecutive points " + std::to_string(k - 1) +
                                                " and " + std::to_string(k) + " coincide");
    const bool fold = p.kind == ContourKind::Fold;
    const bool occ = p.kind == ContourKind::SelfOcclusion;
    if (fold && !p.convexity) throw ValidationError("convexity", "fold requires convexity");
    if (!fold && p.convexity) throw ValidationError("convexity", "only folds carry convexity");
    if (occ && !p.figure_side)
        throw ValidationError("figure_side", "self_occlusion requires figure_side");
    if (!occ && p.figure_side)
        throw ValidationError("figure_side", "only self_occlusion carries figure_side");
}

std::vector<ChainPixel> rasterize_polyline(const Polyline& p) {
    validate(p);
    std::vector<ChainPixel> chain;
    std::vector<Vec2> first_tangent;
    std::map<Pixel, std::size_t> seen;

    auto emit = [&](Pixel px, Vec2 u) {
        auto [it, fresh] = seen.try_emplace(px, chain.size());
        if (fresh) {
            chain.push_back({px, u});
            first_tangent.push_back(u);
        } else {
            chain[it->second].tangent = chain[it->second].tangent + u;
        }
    };

    for (std::size_t s = 0; s + 1 < p.points.size(); ++s) {
        const Vec2 u = (p.points[s + 1] - p.points[s]).normalized();
        const Pixel a = round_pixel(p.points[s]);
        const Pixel b = round_pixel(p.points[s + 1]);
        const long long dx = b.x - a.x, dy = b.y - a.y;
        const long long n = std::max(std::llabs(dx), std::llabs(dy));
        if (n == 0) {
            emit(a, u);
            continue;
        }
        const bool x_major = std::llabs(dx) >= std::llabs(dy);
        for (long long k = 0; k <= n; ++k) {
            Pixel px;
            if (x_major) {
                px.x = static_cast<int>(a.x + k * (dx > 0 ? 1 : -1));
                // y = a.y + k*dy/n, rounded half up
                px.y = static_cast<int>(floor_div(2 * (a.y * n + k * dy) + n, 2 * n));
            } else {
                px.y = static_cast<int>(a.y + k * (dy > 0 ? 1 : -1));
                px.x = static_cast<int>(floor_div(2 * (a.x * n + k * dx) + n, 2 * n));
            }
            emit(px, u);
        }
    }

    for (std::size_t i = 0; i < chain.size(); ++i) {
        const double len = chain[i].tangent.norm();
        chain[i].tangent = len > 1e-12 ? chain[i].tangent * (1.0 / len) : first_tangent[i];
    }
    return chain;
}

std::vector<ContourSample> contour_normals(const std::vector<ChainPixel>& chain,
                                           const NormalSide& side, ContourKind kind) {
    std::vector<ContourSample> out;
    out.reserve(chain.size());
    for (const auto& c : chain) {
        const Vec2 r = c.tangent.perp();
        Vec2 n = r;
        bool ambiguous = false;
        if (const auto* mo = std::get_if<MaskOutward>(&side)) {
            const Mask& m = *mo->mask;
            const Pixel step = round_away(r);
            auto occupancy = [&](int cx, int cy) {
                int occ = 0;
                for (int oy = -1; oy <= 1; ++oy)
                    for (int ox = -1; ox <= 1; ++ox) occ += in_mask(m, cx + ox, cy + oy);
                return occ;
            };
            const int plus = occupancy(c.pixel.x + step.x, c.pixel.y + step.y);
            const int minus = occupancy(c.pixel.x - step.x, c.pixel.y - step.y);
            if (plus > minus) n = -r;
            ambiguous = plus == minus;
        } else {
            // Screen-left of travel is -perp (y grows downward); the normal
            // points away from the figure.
            n = std::get<FigureSideOf>(side).side == FigureSide::Left ? r : -r;
        }
        const Pixel shift = round_away(n);
        out.push_back({{c.pixel.x - shift.x, c.pixel.y - shift.y}, c.tangent, n, kind, ambiguous});
    }
    return out;
}

std::vector<FoldSample> fold_samples(const std::vector<ChainPixel>& chain, Convexity convexity,
                                     int width, int height) {
    std::vector<FoldSample> out;
    out.reserve(chain.size());
    for (const auto& c : chain) {
        Vec2 v = c.tangent.perp();
        if (convexity == Convexity::Concave) v = -v;
        const Vec2 p{static_cast<double>(c.pixel.x), static_cast<double>(c.pixel.y)};
        const Pixel left = round_away(p + v);
        const Pixel right = round_away(p - v);
        if (!inside(left, width, height) || !inside(right, width, height)) continue;
        out.push_back({c.pixel, c.tangent, v, left, right});
    }
    return out;
}

AnnotationSet build_annotation_set(const Mask& mask, const std::vector<Polyline>& contours) {
    AnnotationSet set;
    set.silhouette_mask = mask;
    set.contours = contours;
    const int w = mask.width(), h = mask.height();

    std::set<std::pair<Pixel, int>> used;
    auto keep = [&](std::vector<ContourSample>& dst, const std::vector<ContourSample>& src,
                    std::size_t index) {
        std::size_t dropped = 0, ambiguous = 0;
        for (const auto& s : src) {
            if (!inside(s.pixel, w, h)) {
                ++dropped;
                continue;
            }
            if (!used.insert({s.pixel, static_cast<int>(s.kind)}).second) continue;
            ambiguous += s.ambiguous;
            dst.push_back(s);
        }
        if (dropped)
            set.warnings.push_back("contours[" + std::to_string(index) + "]: " +
                                   std::to_string(dropped) + " samples fell outside the image");
        if (ambiguous)
            set.warnings.push_back("contours[" + std::to_string(index) + "]: " +
                                   std::to_string(ambiguous) +
                                   " samples had an ambiguous figure side");
    };

    std::set<Pixel> fold_pixels;
    for (std::size_t i = 0; i < contours.size(); ++i) {
        const Polyline& p = contours[i];
        try {
            validate(p);
        } catch (const ValidationError& e) {
            throw ValidationError("contours[" + std::to_string(i) + "]." + e.field(), e.what());
        }
        check_bounds(p, i, w, h);
        const auto chain = rasterize_polyline(p);
        switch (p.kind) {
            case ContourKind::SilhouetteSmooth:
                keep(set.samples_smooth, contour_normals(chain, MaskOutward{&mask}, p.kind), i);
                break;
            case ContourKind::SilhouetteSharp:
                keep(set.samples_sharp, contour_normals(chain, MaskOutward{&mask}, p.kind), i);
                break;
            case ContourKind::SelfOcclusion:
                keep(set.samples_selfocc,
                     contour_normals(chain, FigureSideOf{*p.figure_side}, p.kind), i);
                break;
            case ContourKind::Fold: {
                const auto folds = fold_samples(chain, *p.convexity, w, h);
                if (folds.size() < chain.size())
                    set.warnings.push_back("contours[" + std::to_string(i) + "]: " +
                                           std::to_string(chain.size() - folds.size()) +
                                           " fold probes fell outside the image");
                for (const auto& f : folds)
                    if (fold_pixels.insert(f.pixel).second) set.samples_fold.push_back(f);
                break;
            }
        }
    }
    return set;
}

Mask fill_silhouette(int width, int height, const std::vector<Polyline>& contours) {
    std::vector<std::pair<Vec2, Vec2>> edges;
    for (const auto& p : contours) {
        if (p.kind != ContourKind::SilhouetteSmooth && p.kind != ContourKind::SilhouetteSharp)
            continue;
        for (std::size_t k = 0; k < p.points.size(); ++k)
            edges.emplace_back(p.points[k], p.points[(k + 1) % p.points.size()]);
    }
    if (edges.empty()) return Mask(width, height, 1);

    Mask m(width, height, 0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            bool in = false;
            for (const auto& [a, b] : edges) {
                if ((a.y > y) == (b.y > y)) continue;
                const double xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (x < xc) in = !in;
            }
            m(x, y) = in;
        }
    }
    for (const auto& p : contours) {
        if (p.kind != ContourKind::SilhouetteSmooth && p.kind != ContourKind::SilhouetteSharp)
            continue;
        for (const auto& c : rasterize_polyline(p))
            if (m.contains(c.pixel)) m[c.pixel] = 1;
    }
    return m;
}

std::vector<std::size_t> encode_rle(const Mask& m) {
    std::vector<std::size_t> runs;
    std::uint8_t current = 0;
    std::size_t run = 0;
    for (auto v : m.data()) {
        const std::uint8_t b = v ? 1 : 0;
        if (b != current) {
            runs.push_back(run);
            run = 0;
            current = b;
        }
        ++run;
    }
    runs.push_back(run);
    return runs;
}

Mask decode_rle(const std::vector<std::size_t>& runs, int width, int height) {
    Mask m(width, height, 0);
    std::size_t pos = 0;
    std::uint8_t value = 0;
    for (auto r : runs) {
        if (r > m.size() - pos) throw SchemaError("mask", "RLE runs exceed the image area");
        std::fill_n(m.data().begin() + static_cast<std::ptrdiff_t>(pos), r, value);
        pos += r;
        value ^= 1u;
    }
    if (pos != m.size()) throw SchemaError("mask", "RLE runs do not cover the image");
    return m;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

int positive_int(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() <= 0 || v.get<long long>() > 1 << 16)
        throw SchemaError(path, "expected a positive integer");
    return v.get<int>();
}

Mask parse_mask(const json& v, int width, int height, const std::filesystem::path& base_dir) {
    if (!v.is_string()) throw SchemaError("mask", "expected a path or \"rle:\" string");
    const auto s = v.get<std::string>();
    if (s.rfind("rle:", 0) == 0) {
        std::vector<std::size_t> runs;
        std::string body = s.substr(4);
        std::replace(body.begin(), body.end(), ',', ' ');
        std::istringstream in(body);
        std::string tok;
        while (in >> tok) {
            if (tok.find_first_not_of("0123456789") != std::string::npos)
                throw SchemaError("mask", "RLE run '" + tok + "' is not a count");
            runs.push_back(std::stoull(tok));
        }
        return decode_rle(runs, width, height);
    }
    const auto file = base_dir.empty() ? std::filesystem::path(s) : base_dir / s;
    Image img;
    try {
        img = read_png(file);
    } catch (const Error& e) {
        throw SchemaError("mask", e.what());
    }
    if (img.width != width || img.height != height)
        throw SchemaError("mask", "mask image size differs from the image block");
    Mask m(width, height, 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) m(x, y) = img.at(x, y, 0) > 0.5;
    return m;
}

Polyline parse_polyline(const json& c, const std::string& path) {
    if (!c.is_object()) throw SchemaError(path, "expected an object");
    Polyline p;
    const auto& kind = require(c, "kind", path);
    const std::string kind_s = kind.is_string() ? kind.get<std::string>() : std::string();
    if (kind_s == "silhouette_smooth") p.kind = ContourKind::SilhouetteSmooth;
    else if (kind_s == "silhouette_sharp") p.kind = ContourKind::SilhouetteSharp;
    else if (kind_s == "self_occlusion") p.kind = ContourKind::SelfOcclusion;
    else if (kind_s == "fold") p.kind = ContourKind::Fold;
    else
        throw SchemaError(path + ".kind",
                          "expected silhouette_smooth, silhouette_sharp, self_occlusion or fold");

    const auto& pts = require(c, "points", path);
    if (!pts.is_array()) throw SchemaError(path + ".points", "expected an array of [x, y]");
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto& q = pts[k];
        if (!q.is_array() || q.size() != 2 || !q[0].is_number() || !q[1].is_number())
            throw SchemaError(path + ".points[" + std::to_string(k) + "]", "expected [x, y]");
        p.points.push_back({q[0].get<double>(), q[1].get<double>()});
    }

    if (auto it = c.find("convexity"); it != c.end()) {
        const std::string v = it->is_string() ? it->get<std::string>() : std::string();
        if (v == "convex") p.convexity = Convexity::Convex;
        else if (v == "concave") p.convexity = Convexity::Concave;
        else throw SchemaError(path + ".convexity", "expected convex or concave");
    }
    if (auto it = c.find("figure_side"); it != c.end()) {
        const std::string v = it->is_string() ? it->get<std::string>() : std::string();
        if (v == "left") p.figure_side = FigureSide::Left;
        else if (v == "right") p.figure_side = FigureSide::Right;
        else throw SchemaError(path + ".figure_side", "expected left or right");
    }
    try {
        validate(p);
    } catch (const ValidationError& e) {
        throw ValidationError(path + "." + e.field(), e.what());
    }
    return p;
}

}  // namespace

AnnotationDocument parse_annotation_document(std::string_view json_text,
                                             const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError("document", e.what());
    }
    if (!doc.is_object()) throw SchemaError("document", "expected a JSON object");

    const auto& version = require(doc, "version", "");
    if (!version.is_number_integer() || version.get<int>() != 1)
        throw SchemaError("version", "unsupported version (expected 1)");

    const auto& image = require(doc, "image", "");
    if (!image.is_object()) throw SchemaError("image", "expected {width, height}");
    AnnotationDocument out;
    out.width = positive_int(require(image, "width", "image"), "image.width");
    out.height = positive_int(require(image, "height", "image"), "image.height");

    const auto& contours = require(doc, "contours", "");
    if (!contours.is_array()) throw SchemaError("contours", "expected an array");
    for (std::size_t i = 0; i < contours.size(); ++i) {
        out.contours.push_back(parse_polyline(contours[i], "contours[" + std::to_string(i) + "]"));
        check_bounds(out.contours.back(), i, out.width, out.height);
    }

    if (auto it = doc.find("mask"); it != doc.end() && !it->is_null())
        out.mask = parse_mask(*it, out.width, out.height, base_dir);
    else
        out.mask = fill_silhouette(out.width, out.height, out.contours);
    return out;
}

std::string serialize_annotation_document(const AnnotationDocument& doc) {
    json j;
    j["version"] = 1;
    j["image"] = {{"width", doc.width}, {"height", doc.height}};
    std::string rle = "rle:";
    const auto runs = encode_rle(doc.mask);
    for (std::size_t i = 0; i < runs.size(); ++i) rle += (i ? "," : "") + std::to_string(runs[i]);
    j["mask"] = rle;
    j["contours"] = json::array();
    for (const auto& p : doc.contours) {
        json c;
        c["kind"] = std::string(to_string(p.kind));
        json pts = json::array();
        for (const auto& q : p.points) pts.push_back({q.x, q.y});
        c["points"] = std::move(pts);
        if (p.convexity) c["convexity"] = std::string(to_string(*p.convexity));
        if (p.figure_side) c["figure_side"] = std::string(to_string(*p.figure_side));
        j["contours"].push_back(std::move(c));
    }
    return j.dump(2) + "\n";
}

AnnotationSet parse_annotations(std::string_view json_text, int width, int height,
                                const std::filesystem::path& base_dir) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("image extent must be positive");
    auto doc = parse_annotation_document(json_text, base_dir);
    if (doc.width != width || doc.height != height)
        throw SchemaError("image", "annotation image size " + std::to_string(doc.width) + "x" +
                                       std::to_string(doc.height) + " does not match " +
                                       std::to_string(width) + "x" + std::to_string(height));
    return build_annotation_set(doc.mask, doc.contours);
}

AnnotationSet load_annotations(const std::filesystem::path& file) {
    const auto text = read_file(file);
    auto doc = parse_annotation_document(text, file.parent_path());
    return build_annotation_set(doc.mask, doc.contours);
}

Mask downsample_mask(const Mask& m) {
    const int w = (m.width() + 1) / 2, h = (m.height() + 1) / 2;
    Mask out(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int present = 0, figure = 0;
            for (int oy = 0; oy < 2; ++oy)
                for (int ox = 0; ox < 2; ++ox) {
                    const int fx = 2 * x + ox, fy = 2 * y + oy;
                    if (!m.contains(fx, fy)) continue;
                    ++present;
                    figure += m(fx, fy) != 0;
                }
            out(x, y) = 2 * figure >= present;
        }
    return out;
}

AnnotationSet downsample_annotations(const AnnotationSet& a) {
    const Mask mask = downsample_mask(a.silhouette_mask);
    std::vector<Polyline> coarse;
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < a.contours.size(); ++i) {
        Polyline p = a.contours[i];
        for (auto& q : p.points) q = {(q.x - 0.5) / 2.0, (q.y - 0.5) / 2.0};
        if (rasterize_polyline(p).size() < 2) {
            warnings.push_back("contours[" + std::to_string(i) +
                               "]: collapsed below 2 pixels when downsampled; dropped");
            continue;
        }
        coarse.push_back(std::move(p));
    }
    auto out = build_annotation_set(mask, coarse);
    out.warnings.insert(out.warnings.begin(), warnings.begin(), warnings.end());
    return out;
}

}  // namespace boundcue
