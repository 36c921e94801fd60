#pragma once

#include <boundcue/annotations.hpp>
#include <boundcue/geometry.hpp>
#include <boundcue/shading.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boundcue {

enum class SceneKind { Hemisphere, Cube, Wedge, TwoSlabs, Composite };

std::string_view to_string(SceneKind k);
SceneKind parse_scene_kind(std::string_view name);

struct SceneParams {
    /// Hemisphere radius; 0 means 0.375 * size.
    double radius = 0.0;
    /// Dihedral angle of the wedge crease, degrees, in (10, 170).
    double wedge_angle = 90.0;
    /// Foreground slab thickness stacked on the background slab.
    double slab_front = 10.0;
    double slab_back = 4.0;
    /// Drives the synthetic albedo pattern only; geometry is fixed.
    std::uint64_t seed = 0;
};

struct SyntheticScene {
    std::string name;
    HeightField z_star;
    AnnotationDocument document;
    AnnotationSet annotations;
    /// Center of the circular smooth rim, for scenes that have one.
    std::optional<Vec2> rim_center;
};

/// Throws Error for size < 32 or out-of-range parameters.
SyntheticScene make_scene(SceneKind kind, int size, const SceneParams& params = {});

/// Reports every broken annotation-consistency rule; empty when consistent.
std::vector<std::string> consistency_violations(const SyntheticScene& s);

/// Slowly varying log-albedo, deterministic in `seed`.
ReflectanceMap synthetic_reflectance(const Mask& mask, std::uint64_t seed);

/// Gray key light from the upper left on top of the prior mean.
IlluminationSH default_scene_light();

/// I = R + S(Z*, L). Throws Error when any valid normal gets nonpositive
/// irradiance.
LogImage render_scene(const SyntheticScene& s, const IlluminationSH& light,
                      const ReflectanceMap& reflectance);

}  // namespace boundcue
