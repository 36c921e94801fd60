#include <boundcue/gradcheck.hpp>

#include <boundcue/energies.hpp>
#include <boundcue/errors.hpp>
#include <boundcue/shading.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>

namespace boundcue {

namespace {

/// Parameters flattened to one vector, with a scalar function and its gradient.
struct Check {
    std::vector<double> x;
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

double rel_error(const Check& c, double h) {
    const auto analytic = c.gradient(c.x);
    std::vector<double> x = c.x;
    double num_max = 0.0, diff_max = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = c.value(x);
        x[i] = x0 - h;
        const double fm = c.value(x);
        x[i] = x0;
        const double fd = (fp - fm) / (2.0 * h);
        num_max = std::max(num_max, std::abs(fd));
        diff_max = std::max(diff_max, std::abs(fd - analytic[i]));
    }
    return diff_max / std::max(num_max, 1e-6);
}

struct Instance {
    HeightField z;
    std::vector<std::size_t> free;  // on-mask pixel indices
    std::vector<ContourSample> smooth, selfocc;
    std::vector<FoldSample> folds;
    IlluminationSH light;
    LogImage image;
    ReflectanceMap reflectance;
    IlluminationPrior prior;
    ColorField cotangent;
};

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53);
    }
    int integer(int lo, int hi) { return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }

  private:
    std::mt19937_64 eng_;
};

Instance make_instance(Rng& rng, int w, int h, bool elliptic) {
    Instance in;
    in.z = HeightField(w, h, 0.0);
    if (elliptic) {
        const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
        const double rx = w / 2.0 + rng.uniform(-0.5, 1.0), ry = h / 2.0 + rng.uniform(-0.5, 1.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                in.z.mask(x, y) = dx * dx + dy * dy <= 1.0;
            }
    }
    // a few smooth bumps with moderate slopes
    for (int k = 0; k < 3; ++k) {
        const double bx = rng.uniform(0, w - 1), by = rng.uniform(0, h - 1);
        const double amp = rng.uniform(-3.0, 3.0), s = rng.uniform(2.0, 5.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                in.z(x, y) += amp * std::exp(-((x - bx) * (x - bx) + (y - by) * (y - by)) / (2 * s * s));
    }
    for (auto& v : in.z.values.data()) v += rng.uniform(-0.05, 0.05);

    Stencil st(in.z.mask);
    std::vector<Pixel> valid;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = in.z.values.index(x, y);
            if (in.z.mask[i]) in.free.push_back(i);
            if (st.normal_valid(i)) valid.push_back({x, y});
        }
    auto random_unit = [&] {
        const double a = rng.uniform(0.0, 2.0 * 3.14159265358979);
        return Vec2{std::cos(a), std::sin(a)};
    };
    for (int k = 0; k < 10; ++k) {
        const Pixel p = valid[rng.integer(0, static_cast<int>(valid.size()) - 1)];
        const Vec2 u = random_unit();
        in.smooth.push_back({p, u, u.perp(), ContourKind::SilhouetteSmooth, false});
        const Pixel q = valid[rng.integer(0, static_cast<int>(valid.size()) - 1)];
        const Vec2 t = random_unit();
        in.selfocc.push_back({q, t, -t.perp(), ContourKind::SelfOcclusion, false});
    }
    for (int k = 0; k < 40 && in.folds.size() < 8; ++k) {
        const Pixel p = valid[rng.integer(0, static_cast<int>(valid.size()) - 1)];
        const Vec2 u = random_unit();
        Vec2 v = u.perp();
        if (k % 2) v = -v;
        const Pixel l{static_cast<int>(std::lround(p.x + v.x)), static_cast<int>(std::lround(p.y + v.y))};
        const Pixel r{static_cast<int>(std::lround(p.x - v.x)), static_cast<int>(std::lround(p.y - v.y))};
        if (!in.z.mask.contains(l) || !in.z.mask.contains(r) || l == r) continue;
        if (!st.normal_valid(in.z.mask.index(l.x, l.y)) || !st.normal_valid(in.z.mask.index(r.x, r.y)))
            continue;
        in.folds.push_back({p, u, v, l, r});
    }

    in.light = IlluminationSH::constant(2.0);
    for (auto& c : in.light.coeffs) c += rng.uniform(-0.15, 0.15);
    in.image = LogImage(w, h, 0.0);
    in.image.mask = in.z.mask;
    in.reflectance = ReflectanceMap(w, h, 0.0);
    in.reflectance.mask = in.z.mask;
    in.cotangent = ColorField(w, h, 0.0);
    for (auto& v : in.image.data) v = rng.uniform(-2.0, 0.0);
    for (auto& v : in.reflectance.data) v = rng.uniform(-1.0, 0.0);
    for (auto& v : in.cotangent.data) v = rng.uniform(-1.0, 1.0);
    in.prior = IlluminationPrior::default_prior();
    for (int i = 0; i < kLightDims; ++i) {
        in.prior.mean[i] = rng.uniform(-1.0, 2.0);
        for (int j = 0; j <= i; ++j) {
            const double v = rng.uniform(-0.05, 0.05);
            in.prior.precision(i, j) += v;
            if (i != j) in.prior.precision(j, i) += v;
        }
        in.prior.precision(i, i) += 1.0;
    }
    return in;
}

HeightField with_z(const Instance& in, const std::vector<double>& x) {
    HeightField z = in.z;
    for (std::size_t k = 0; k < in.free.size(); ++k) z.values[in.free[k]] = x[k];
    return z;
}

IlluminationSH with_light(const std::vector<double>& x, std::size_t offset) {
    IlluminationSH l;
    for (int k = 0; k < kLightDims; ++k) l.coeffs[k] = x[offset + k];
    return l;
}

std::vector<double> z_params(const Instance& in) {
    std::vector<double> x;
    for (auto i : in.free) x.push_back(in.z.values[i]);
    return x;
}

std::vector<double> gather(const Instance& in, const Grid<double>& g) {
    std::vector<double> out;
    for (auto i : in.free) out.push_back(g[i]);
    return out;
}

/// Z-only check for a term returning TermResult.
template <typename F>
Check z_check(const Instance& in, F term) {
    return {z_params(in), [&in, term](const std::vector<double>& x) { return term(with_z(in, x)).value; },
            [&in, term](const std::vector<double>& x) { return gather(in, term(with_z(in, x)).gradient); }};
}

std::map<std::string, Check> checks_for(const Instance& in) {
    std::map<std::string, Check> c;
    const EnergyParams params;
    c["f_sfc"] = z_check(in, [&in, params](const HeightField& z) { return f_sfc(z, in.smooth, params); });
    c["f_selfocc"] =
        z_check(in, [&in, params](const HeightField& z) { return f_selfocc(z, in.selfocc, params); });
    c["f_fold"] = z_check(in, [&in](const HeightField& z) { return TermResult(f_fold(z, in.folds)); });
    c["f_flat"] = z_check(in, [](const HeightField& z) { return f_flat(z); });
    c["f_smooth"] = z_check(in, [](const HeightField& z) { return f_smooth(z); });

    {
        std::vector<double> x = in.reflectance.data;
        auto rmap = [&in](const std::vector<double>& v) {
            ReflectanceMap r = in.reflectance;
            r.data = v;
            return r;
        };
        c["g_reflectance"] = {x, [rmap](const std::vector<double>& v) { return g_reflectance(rmap(v)).value; },
                              [rmap](const std::vector<double>& v) { return g_reflectance(rmap(v)).gradient.data; }};
    }
    {
        std::vector<double> x(in.light.coeffs.begin(), in.light.coeffs.end());
        c["h_illumination"] = {
            x, [&in](const std::vector<double>& v) { return h_illumination(with_light(v, 0), in.prior).value; },
            [&in](const std::vector<double>& v) {
                const auto g = h_illumination(with_light(v, 0), in.prior).gradient;
                return std::vector<double>(g.begin(), g.end());
            }};
    }
    {
        // <S(Z, L), C> over Z and L jointly
        std::vector<double> x = z_params(in);
        const std::size_t off = x.size();
        x.insert(x.end(), in.light.coeffs.begin(), in.light.coeffs.end());
        c["render_log_shading"] = {
            x,
            [&in, off](const std::vector<double>& v) {
                const auto s = render_log_shading(with_z(in, v), with_light(v, off));
                double acc = 0.0;
                for (std::size_t i = 0; i < s.log_shading.mask.size(); ++i)
                    if (s.log_shading.mask[i])
                        for (int ch = 0; ch < kChannels; ++ch)
                            acc += s.log_shading.at(i, ch) * in.cotangent.at(i, ch);
                return acc;
            },
            [&in, off](const std::vector<double>& v) {
                const auto g = render_log_shading_vjp(with_z(in, v), with_light(v, off), in.cotangent);
                auto out = gather(in, g.z);
                out.insert(out.end(), g.light.begin(), g.light.end());
                return out;
            }};
        c["shading_energy"] = {
            x,
            [&in, off](const std::vector<double>& v) {
                return shading_energy(with_z(in, v), in.image, with_light(v, off)).total;
            },
            [&in, off](const std::vector<double>& v) {
                const auto e = shading_energy(with_z(in, v), in.image, with_light(v, off));
                auto out = gather(in, e.grad_z);
                out.insert(out.end(), e.grad_light.begin(), e.grad_light.end());
                return out;
            }};
    }
    {
        AnnotationSet a;
        a.silhouette_mask = in.z.mask;
        a.samples_smooth = in.smooth;
        a.samples_selfocc = in.selfocc;
        a.samples_fold = in.folds;
        CueWeights w{1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0};
        auto total = [a, w](const HeightField& z) {
            const auto r = total_energy(z, a, w);
            return TermResult{r.total, r.grad_total, 0};
        };
        c["total_energy"] = z_check(in, total);
    }
    return c;
}

}  // namespace

const std::vector<std::string>& gradcheck_terms() {
    static const std::vector<std::string> names = {
        "f_sfc",         "f_selfocc",      "f_fold",             "f_flat",         "f_smooth",
        "g_reflectance", "h_illumination", "render_log_shading", "shading_energy", "total_energy"};
    return names;
}

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
    if (opts.instances < 1 || opts.min_size < 4 || opts.max_size < opts.min_size)
        throw Error("invalid gradcheck options");
    const auto& names = gradcheck_terms();
    if (!opts.corrupt_term.empty() &&
        std::find(names.begin(), names.end(), opts.corrupt_term) == names.end())
        throw Error("unknown term '" + opts.corrupt_term + "'");

    Rng rng(opts.seed);
    std::map<std::string, GradcheckTerm> acc;
    for (const auto& n : names) acc[n].name = n;
    for (int k = 0; k < opts.instances; ++k) {
        const int w = rng.integer(opts.min_size, opts.max_size);
        const int h = rng.integer(opts.min_size, opts.max_size);
        const Instance in = make_instance(rng, w, h, k % 2 == 1);
        auto checks = checks_for(in);
        for (auto& [name, check] : checks) {
            if (name == opts.corrupt_term) {
                auto inner = check.gradient;
                check.gradient = [inner](const std::vector<double>& x) {
                    auto g = inner(x);
                    for (auto& v : g) v *= 1.01;
                    return g;
                };
            }
            auto& t = acc[name];
            const double err = rel_error(check, opts.step);
            t.worst_rel_error = std::max(t.worst_rel_error, std::isfinite(err) ? err : 1e300);
            ++t.instances;
        }
    }
    GradcheckReport report;
    for (const auto& n : names) {
        auto t = acc[n];
        t.passed = t.worst_rel_error <= opts.tolerance;
        report.passed = report.passed && t.passed;
        report.terms.push_back(t);
    }
    return report;
}

std::string GradcheckReport::text() const {
    std::string out;
    char line[160];
    for (const auto& t : terms) {
        std::snprintf(line, sizeof line, "%-20s instances=%-3d worst_rel_error=%.3e %s\n", t.name.c_str(),
                      t.instances, t.worst_rel_error, t.passed ? "ok" : "FAIL");
        out += line;
    }
    out += passed ? "gradcheck: ok\n" : "gradcheck: FAIL\n";
    return out;
}

}  // namespace boundcue
