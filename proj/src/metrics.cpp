#include <boundcue/metrics.hpp>

#include <boundcue/errors.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace boundcue {

namespace {

void check_pair(const HeightField& z, const HeightField& z_star) {
    if (!z.values.same_shape(z_star.values))
        throw std::invalid_argument("height fields differ in shape");
}

}  // namespace

double n_mse(const HeightField& z, const HeightField& z_star) {
    check_pair(z, z_star);
    const auto a = normals(z);
    const auto b = normals(z_star);
    KahanSum sum;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.n.size(); ++i) {
        if (!a.valid[i] || !b.valid[i]) continue;
        // atan2 stays exact near 0 where acos loses half the digits
        const double theta = std::atan2(a.n[i].cross(b.n[i]).norm(), a.n[i].dot(b.n[i]));
        sum += theta * theta;
        ++n;
    }
    if (n == 0) throw Error("n_mse: masks do not overlap");
    return sum.value() / static_cast<double>(n);
}

double z_mae(const HeightField& z, const HeightField& z_star) {
    check_pair(z, z_star);
    std::vector<double> diff;
    for (std::size_t i = 0; i < z.values.size(); ++i)
        if (z.mask[i] && z_star.mask[i]) diff.push_back(z_star.values[i] - z.values[i]);
    if (diff.empty()) throw Error("z_mae: masks do not overlap");
    std::vector<double> sorted = diff;
    auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double t = *mid;
    KahanSum sum;
    for (double d : diff) sum += std::abs(d - t);
    return sum.value() / static_cast<double>(diff.size());
}

MetricReport evaluate(const HeightField& z, const HeightField& z_star) {
    MetricReport r;
    r.n_mse = n_mse(z, z_star);
    r.z_mae = z_mae(z, z_star);
    for (std::size_t i = 0; i < z.mask.size(); ++i) r.pixels += z.mask[i] && z_star.mask[i];
    return r;
}

}  // namespace boundcue
