#include <boundcue/energies.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace boundcue {

GsmParams GsmParams::curvature_default() {
    return {{0.4, 0.3, 0.2, 0.1}, {0.01, 0.05, 0.2, 1.0}};
}

GsmParams GsmParams::reflectance_default() { return {{0.6, 0.3, 0.1}, {0.05, 0.2, 1.0}}; }

void GsmParams::validate() const {
    if (weights.empty() || weights.size() != sigmas.size())
        throw std::invalid_argument("GSM needs matching, nonempty weights and sigmas");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("GSM weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("GSM weights must sum to 1");
    for (std::size_t k = 0; k < sigmas.size(); ++k) {
        if (!(sigmas[k] > 0.0)) throw std::invalid_argument("GSM sigmas must be positive");
        if (k > 0 && !(sigmas[k] > sigmas[k - 1]))
            throw std::invalid_argument("GSM sigmas must be strictly increasing");
    }
}

namespace {

// log of w_k / sigma_k * exp(-x2 / (2 sigma_k^2)), for each component
template <typename F>
void for_each_log_component(const GsmParams& g, double x2, F&& f) {
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
        if (g.weights[k] <= 0.0) continue;
        const double s2 = g.sigmas[k] * g.sigmas[k];
        f(k, std::log(g.weights[k] / g.sigmas[k]) - 0.5 * x2 / s2);
    }
}

double log_sum(const GsmParams& g, double x2) {
    double mx = -INFINITY;
    for_each_log_component(g, x2, [&](std::size_t, double l) { mx = std::max(mx, l); });
    double s = 0.0;
    for_each_log_component(g, x2, [&](std::size_t, double l) { s += std::exp(l - mx); });
    return mx + std::log(s);
}

}  // namespace

double GsmParams::cost_sq(double x2) const { return log_sum(*this, 0.0) - log_sum(*this, x2); }

double GsmParams::cost_sq_derivative(double x2) const {
    const double total = log_sum(*this, x2);
    double d = 0.0;
    for_each_log_component(*this, x2, [&](std::size_t k, double l) {
        d += std::exp(l - total) * 0.5 / (sigmas[k] * sigmas[k]);
    });
    return d;
}

double fold_alignment(const Vec3& l, const Vec3& r, const Vec2& u) {
    return u.x * (l.y * r.z - l.z * r.y) + u.y * (l.z * r.x - l.x * r.z);
}

namespace {

struct Eval {
    const Stencil& stencil;
    NormalField nf;
    CurvatureField cf;
};

double contour_kernel(const Eval& ev, const std::vector<ContourSample>& samples,
                      const EnergyParams& params, Grid<Vec3>& cot, double weight,
                      std::size_t& skipped) {
    KahanSum sum;
    const double tau = params.contour_tau;
    for (const auto& s : samples) {
        if (!ev.nf.n.contains(s.pixel) || !ev.stencil.normal_valid(ev.nf.n.index(s.pixel.x, s.pixel.y))) {
            ++skipped;
            continue;
        }
        const Vec3& n = ev.nf.n[s.pixel];
        const double ex = n.x - s.target_normal.x;
        const double ey = n.y - s.target_normal.y;
        const double r2 = ex * ex + ey * ey;
        Vec3& c = cot[s.pixel];
        if (params.loss == ContourLoss::Squared) {
            sum += r2;
            c.x += weight * 2.0 * ex;
            c.y += weight * 2.0 * ey;
        } else {
            const double root = std::sqrt(r2 + tau * tau);
            sum += root - tau;
            c.x += weight * ex / root;
            c.y += weight * ey / root;
        }
    }
    return sum.value();
}

struct FoldSums {
    double smooth;
    double exact;
};

FoldSums fold_kernel(const Eval& ev, const std::vector<FoldSample>& samples,
                     const FoldConfig& cfg, Grid<Vec3>& cot, double weight,
                     std::size_t& skipped) {
    KahanSum smooth, exact;
    const double tau = cfg.smoothing_tau;
    const auto& grid = ev.nf.n;
    for (const auto& s : samples) {
        if (!grid.contains(s.probe_left) || !grid.contains(s.probe_right) ||
            !ev.stencil.normal_valid(grid.index(s.probe_left.x, s.probe_left.y)) ||
            !ev.stencil.normal_valid(grid.index(s.probe_right.x, s.probe_right.y))) {
            ++skipped;
            continue;
        }
        const Vec3& l = grid[s.probe_left];
        const Vec3& r = grid[s.probe_right];
        const Vec2& u = s.tangent;
        const double a = cfg.epsilon - fold_alignment(l, r, u);
        exact += std::max(0.0, a);
        double dloss_dc;
        if (tau > 0.0) {
            const double t = a / tau;
            smooth += tau * (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))));
            dloss_dc = -1.0 / (1.0 + std::exp(-t));
        } else {
            smooth += std::max(0.0, a);
            dloss_dc = a > 0.0 ? -1.0 : 0.0;
        }
        const double g = weight * dloss_dc;
        Vec3& cl = cot[s.probe_left];
        cl.x += g * (-u.y * r.z);
        cl.y += g * (u.x * r.z);
        cl.z += g * (-u.x * r.y + u.y * r.x);
        Vec3& cr = cot[s.probe_right];
        cr.x += g * (u.y * l.z);
        cr.y += g * (-u.x * l.z);
        cr.z += g * (u.x * l.y - u.y * l.x);
    }
    return {smooth.value(), exact.value()};
}

double flat_kernel(const Eval& ev, Grid<Vec3>& cot, double weight) {
    KahanSum sum;
    for (std::size_t i = 0; i < cot.size(); ++i) {
        if (!ev.stencil.normal_valid(i)) continue;
        const double nz = ev.nf.n[i].z;
        sum += -std::log(nz);
        cot[i].z += -weight / nz;
    }
    return sum.value();
}

double smooth_kernel(const Eval& ev, const GsmParams& gsm, Grid<double>& cot, double weight) {
    KahanSum sum;
    const auto& h = ev.cf.h;
    const int w = h.width(), hh = h.height();
    for (int y = 0; y < hh; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = h.index(x, y);
            if (!ev.stencil.curvature_valid(i)) continue;
            for (int oy = -2; oy <= 2; ++oy) {
                for (int ox = -2; ox <= 2; ++ox) {
                    if (ox == 0 && oy == 0) continue;
                    const int jx = x + ox, jy = y + oy;
                    if (!h.contains(jx, jy)) continue;
                    const std::size_t j = h.index(jx, jy);
                    if (!ev.stencil.curvature_valid(j)) continue;
                    const double d = h[i] - h[j];
                    sum += gsm.cost(d);
                    const double g = weight * gsm.cost_derivative(d);
                    cot[i] += g;
                    cot[j] -= g;
                }
            }
        }
    }
    return sum.value();
}

Grid<double> normals_grad(const Eval& ev, const Grid<Vec3>& cot) {
    Grid<double> g(ev.stencil.width(), ev.stencil.height(), 0.0);
    normals_vjp(ev.stencil, ev.nf, cot, g);
    return g;
}

}  // namespace

namespace {

TermResult contour_term(const HeightField& z, const std::vector<ContourSample>& samples,
                        const EnergyParams& params) {
    validate(z);
    Stencil s(z.mask);
    Eval ev{s, normals(s, z.values), {}};
    Grid<Vec3> cot(z.width(), z.height(), Vec3{});
    TermResult r;
    r.value = contour_kernel(ev, samples, params, cot, 1.0, r.skipped);
    r.gradient = normals_grad(ev, cot);
    return r;
}

}  // namespace

TermResult f_sfc(const HeightField& z, const std::vector<ContourSample>& samples,
                 const EnergyParams& params) {
    return contour_term(z, samples, params);
}

TermResult f_selfocc(const HeightField& z, const std::vector<ContourSample>& samples,
                     const EnergyParams& params) {
    return contour_term(z, samples, params);
}

FoldTermResult f_fold(const HeightField& z, const std::vector<FoldSample>& samples,
                      const FoldConfig& cfg) {
    validate(z);
    Stencil s(z.mask);
    Eval ev{s, normals(s, z.values), {}};
    Grid<Vec3> cot(z.width(), z.height(), Vec3{});
    FoldTermResult r;
    const auto sums = fold_kernel(ev, samples, cfg, cot, 1.0, r.skipped);
    r.value = sums.smooth;
    r.exact_value = sums.exact;
    r.gradient = normals_grad(ev, cot);
    return r;
}

TermResult f_flat(const HeightField& z) {
    validate(z);
    Stencil s(z.mask);
    Eval ev{s, normals(s, z.values), {}};
    Grid<Vec3> cot(z.width(), z.height(), Vec3{});
    TermResult r;
    r.value = flat_kernel(ev, cot, 1.0);
    r.gradient = normals_grad(ev, cot);
    return r;
}

TermResult f_smooth(const HeightField& z, const GsmParams& gsm) {
    validate(z);
    Stencil s(z.mask);
    Eval ev{s, {}, mean_curvature(s, z.values)};
    Grid<double> cot(z.width(), z.height(), 0.0);
    TermResult r;
    r.value = smooth_kernel(ev, gsm, cot, 1.0);
    r.gradient = Grid<double>(z.width(), z.height(), 0.0);
    mean_curvature_vjp(s, z.values, cot, r.gradient);
    return r;
}

EnergyReport total_energy(const Stencil& stencil, const Grid<double>& z,
                          const AnnotationSet& a, const CueWeights& w,
                          const EnergyParams& params, bool per_term) {
    Eval ev{stencil, normals(stencil, z), mean_curvature(stencil, z)};
    const int W = z.width(), H = z.height();
    EnergyReport rep;

    const double wk = w.reg * w.lambda_k;
    const double wf = w.reg * w.lambda_f;
    Grid<Vec3> shared(W, H, Vec3{});
    Grid<double> hcot(W, H, 0.0);

    auto run_normal_term = [&](double weight, auto&& kernel, Grid<double>& per_term_grad) {
        if (per_term) {
            Grid<Vec3> cot(W, H, Vec3{});
            const auto v = kernel(cot, 1.0);
            per_term_grad = normals_grad(ev, cot);
            return v;
        }
        return kernel(shared, weight);
    };

    rep.f_sfc = run_normal_term(
        w.sfc,
        [&](Grid<Vec3>& cot, double k) {
            return contour_kernel(ev, a.samples_smooth, params, cot, k, rep.skipped_sfc);
        },
        rep.grad_sfc);
    rep.f_selfocc = run_normal_term(
        w.selfocc,
        [&](Grid<Vec3>& cot, double k) {
            return contour_kernel(ev, a.samples_selfocc, params, cot, k, rep.skipped_selfocc);
        },
        rep.grad_selfocc);
    const auto fold = run_normal_term(
        w.fold,
        [&](Grid<Vec3>& cot, double k) {
            return fold_kernel(ev, a.samples_fold, params.fold, cot, k, rep.skipped_fold);
        },
        rep.grad_fold);
    rep.f_fold = fold.smooth;
    rep.f_fold_exact = fold.exact;
    rep.f_flat = run_normal_term(
        wf, [&](Grid<Vec3>& cot, double k) { return flat_kernel(ev, cot, k); }, rep.grad_flat);

    if (per_term) {
        Grid<double> cot(W, H, 0.0);
        rep.f_smooth = smooth_kernel(ev, params.gsm, cot, 1.0);
        rep.grad_smooth = Grid<double>(W, H, 0.0);
        mean_curvature_vjp(stencil, z, cot, rep.grad_smooth);
    } else {
        rep.f_smooth = smooth_kernel(ev, params.gsm, hcot, wk);
    }

    rep.f_reg = w.lambda_f * rep.f_flat + w.lambda_k * rep.f_smooth;
    rep.total = w.sfc * rep.f_sfc + w.selfocc * rep.f_selfocc + w.fold * rep.f_fold +
                w.reg * rep.f_reg;

    rep.grad_total = Grid<double>(W, H, 0.0);
    if (per_term) {
        for (std::size_t i = 0; i < rep.grad_total.size(); ++i)
            rep.grad_total[i] = w.sfc * rep.grad_sfc[i] + w.selfocc * rep.grad_selfocc[i] +
                                w.fold * rep.grad_fold[i] + wf * rep.grad_flat[i] +
                                wk * rep.grad_smooth[i];
    } else {
        normals_vjp(stencil, ev.nf, shared, rep.grad_total);
        mean_curvature_vjp(stencil, z, hcot, rep.grad_total);
    }
    return rep;
}

EnergyReport total_energy(const HeightField& z, const AnnotationSet& annotations,
                          const CueWeights& w, const EnergyParams& params) {
    validate(z);
    if (!z.mask.same_shape(annotations.silhouette_mask))
        throw std::invalid_argument("height field and annotations differ in shape");
    return total_energy(Stencil(z.mask), z.values, annotations, w, params, true);
}

}  // namespace boundcue
