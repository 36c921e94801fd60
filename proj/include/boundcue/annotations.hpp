#pragma once

#include <boundcue/grid.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace boundcue {

enum class ContourKind { SilhouetteSmooth, SilhouetteSharp, SelfOcclusion, Fold };
enum class Convexity { Convex, Concave };

/// Side of a self-occlusion that is the nearer surface, relative to the
/// direction of travel as seen on screen (x right, y down). Travelling +x,
/// `Left` is the upper half-plane.
enum class FigureSide { Left, Right };

std::string_view to_string(ContourKind k);
std::string_view to_string(Convexity c);
std::string_view to_string(FigureSide s);

/// A labeled contour in image coordinates (pixel centers at integers).
struct Polyline {
    ContourKind kind = ContourKind::SilhouetteSmooth;
    std::vector<Vec2> points;
    std::optional<Convexity> convexity;     // Fold only
    std::optional<FigureSide> figure_side;  // SelfOcclusion only

    friend bool operator==(const Polyline&, const Polyline&) = default;
};

/// Throws ValidationError (field relative to the polyline, e.g. "points").
void validate(const Polyline& p);

struct ChainPixel {
    Pixel pixel;
    Vec2 tangent;
};

struct ContourSample {
    Pixel pixel;
    Vec2 tangent;
    Vec2 target_normal;
    ContourKind kind = ContourKind::SilhouetteSmooth;
    /// Side inference had equal evidence on both sides.
    bool ambiguous = false;

    friend bool operator==(const ContourSample&, const ContourSample&) = default;
};

struct FoldSample {
    Pixel pixel;
    Vec2 tangent;
    /// Perpendicular (-u_y, u_x), negated for concave folds.
    Vec2 v;
    Pixel probe_left;
    Pixel probe_right;

    friend bool operator==(const FoldSample&, const FoldSample&) = default;
};

struct AnnotationSet {
    Mask silhouette_mask;
    /// Source polylines, kept so coarser levels can re-rasterize them.
    std::vector<Polyline> contours;
    std::vector<ContourSample> samples_smooth;
    std::vector<ContourSample> samples_sharp;
    std::vector<ContourSample> samples_selfocc;
    std::vector<FoldSample> samples_fold;
    std::vector<std::string> warnings;

    int width() const { return silhouette_mask.width(); }
    int height() const { return silhouette_mask.height(); }
};

/// Parsed annotation file, before rasterization.
struct AnnotationDocument {
    int width = 0;
    int height = 0;
    Mask mask;
    std::vector<Polyline> contours;
};

/// Parses and validates an annotation JSON document. Relative mask paths are
/// resolved against `base_dir`. Throws SchemaError / ValidationError /
/// BoundsError.
AnnotationDocument parse_annotation_document(std::string_view json_text,
                                             const std::filesystem::path& base_dir = {});

/// Canonical JSON form; the mask is always written inline as RLE.
std::string serialize_annotation_document(const AnnotationDocument& doc);

/// Parse + rasterize. `width`/`height` must match the document's image block.
AnnotationSet parse_annotations(std::string_view json_text, int width, int height,
                                const std::filesystem::path& base_dir = {});

AnnotationSet load_annotations(const std::filesystem::path& file);

/// Rasterizes every polyline against `mask` and assembles the sample lists.
AnnotationSet build_annotation_set(const Mask& mask, const std::vector<Polyline>& contours);

/// 8-connected chain of unique pixels. Minor-axis ties round toward +inf in
/// absolute coordinates, so reversing a polyline yields the same pixels.
/// Joint pixels carry the normalized sum of the tangents that produced them.
std::vector<ChainPixel> rasterize_polyline(const Polyline& p);

struct MaskOutward {
    const Mask* mask;
};
struct FigureSideOf {
    FigureSide side;
};
using NormalSide = std::variant<MaskOutward, FigureSideOf>;

/// Rotates tangents into outward target normals and steps each pixel one
/// pixel toward the figure.
std::vector<ContourSample> contour_normals(const std::vector<ChainPixel>& chain,
                                           const NormalSide& side, ContourKind kind);

/// Left/right probes across a fold chain.
std::vector<FoldSample> fold_samples(const std::vector<ChainPixel>& chain, Convexity convexity,
                                     int width, int height);

/// Half-resolution copy: polylines scaled about pixel centers and
/// re-rasterized, mask reduced by 2x2 majority (ties count as figure).
AnnotationSet downsample_annotations(const AnnotationSet& a);

Mask downsample_mask(const Mask& m);

/// Even-odd fill of the closed silhouette polylines plus their raster pixels.
Mask fill_silhouette(int width, int height, const std::vector<Polyline>& contours);

/// Row-major run lengths alternating background/figure, background first.
std::vector<std::size_t> encode_rle(const Mask& m);
Mask decode_rle(const std::vector<std::size_t>& runs, int width, int height);

}  // namespace boundcue
