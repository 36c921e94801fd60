#pragma once

#include <boundcue/geometry.hpp>

#include <cstddef>

namespace boundcue {

struct MetricReport {
    double n_mse = 0.0;  // radians^2
    double z_mae = 0.0;  // height units
    std::size_t pixels = 0;
};

/// Mean squared angle between the normal fields, over pixels where both
/// masks hold and both normals are defined. Throws Error on an empty overlap.
double n_mse(const HeightField& z, const HeightField& z_star);

/// min_t mean |Z - Z* + t| over the mask intersection. The minimizer is the
/// median of Z* - Z, so no search is needed.
double z_mae(const HeightField& z, const HeightField& z_star);

MetricReport evaluate(const HeightField& z, const HeightField& z_star);

}  // namespace boundcue
