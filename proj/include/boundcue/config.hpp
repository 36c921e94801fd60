#pragma once

#include <boundcue/optimizer.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace boundcue {

/// Solver and model settings read from a JSON file.
struct RunConfig {
    SolveConfig solver;
    ModelConfig model;
};

/// Keys (all optional):
///   fold.epsilon, fold.smoothing_tau
///   gsm.weights, gsm.sigmas               curvature prior
///   reg.lambda_f, reg.lambda_k
///   contour.loss ("charbonnier" | "squared"), contour.tau
///   solver.levels, solver.max_iters, solver.tol, solver.memory,
///   solver.init ("dome" | "zero")
///   shading.gsm.weights, shading.gsm.sigmas
///   shading.prior.mean [27], shading.prior.precision [27][27]
/// Unknown keys and bad values throw SchemaError naming the dotted path,
/// prefixed with `root` when given.
RunConfig parse_config(std::string_view json_text, const std::string& root = {});
RunConfig load_config(const std::filesystem::path& file);

/// JSON array of 27 numbers, channel-major.
IlluminationSH parse_light(std::string_view json_text);
std::string serialize_light(const IlluminationSH& light);

}  // namespace boundcue
