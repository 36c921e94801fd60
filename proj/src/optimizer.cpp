#include <boundcue/optimizer.hpp>

#include <boundcue/errors.hpp>
#include <boundcue/lbfgs.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace boundcue {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::Silh: return "silh";
        case Variant::SelfOcc: return "selfocc";
        case Variant::Folds: return "folds";
        case Variant::OccFolds: return "occ_folds";
        case Variant::Shading: return "shading";
        case Variant::ShadingOccFolds: return "shading_occ_folds";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    std::string s(name);
    if (!s.empty() && s.front() == '+') s.erase(0, 1);
    std::replace(s.begin(), s.end(), '+', '_');
    for (Variant v : kAllVariants)
        if (s == to_string(v)) return v;
    std::string valid;
    for (Variant v : kAllVariants) valid += (valid.empty() ? "" : ", ") + std::string(to_string(v));
    throw Error("unknown variant '" + std::string(name) + "' (valid: " + valid + ")");
}

CueWeights variant_weights(Variant v) {
    CueWeights w;
    w.sfc = 1.0;
    w.reg = 1.0;
    switch (v) {
        case Variant::Silh: break;
        case Variant::SelfOcc: w.selfocc = 1.0; break;
        case Variant::Folds: w.fold = 1.0; break;
        case Variant::OccFolds: w.selfocc = w.fold = 1.0; break;
        case Variant::Shading: w.sfs = 1.0; break;
        case Variant::ShadingOccFolds: w.sfs = w.selfocc = w.fold = 1.0; break;
    }
    return w;
}

Grid<double> distance_transform(const Mask& mask) {
    // Felzenszwalb & Huttenlocher squared EDT, one row/column at a time.
    const int w = mask.width(), h = mask.height();
    constexpr double inf = 1e20;
    auto pass = [](std::vector<double>& f) {
        // f is padded with zeros at both ends (off-image is background)
        const int n = static_cast<int>(f.size());
        std::vector<double> d(n);
        std::vector<int> v(n);
        std::vector<double> zb(n + 1);
        int k = 0;
        v[0] = 0;
        zb[0] = -inf;
        zb[1] = inf;
        for (int q = 1; q < n; ++q) {
            double s;
            while (true) {
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]));
                if (s > zb[k]) break;
                --k;
            }
            ++k;
            v[k] = q;
            zb[k] = s;
            zb[k + 1] = inf;
        }
        k = 0;
        for (int q = 0; q < n; ++q) {
            while (zb[k + 1] < q) ++k;
            d[q] = (q - v[k]) * (q - v[k]) + f[v[k]];
        }
        f = std::move(d);
    };

    Grid<double> sq(w + 2, h + 2, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) sq(x + 1, y + 1) = mask(x, y) ? inf : 0.0;
    std::vector<double> line;
    for (int x = 0; x < w + 2; ++x) {
        line.resize(h + 2);
        for (int y = 0; y < h + 2; ++y) line[y] = sq(x, y);
        pass(line);
        for (int y = 0; y < h + 2; ++y) sq(x, y) = line[y];
    }
    for (int y = 0; y < h + 2; ++y) {
        line.resize(w + 2);
        for (int x = 0; x < w + 2; ++x) line[x] = sq(x, y);
        pass(line);
        for (int x = 0; x < w + 2; ++x) sq(x, y) = line[x];
    }
    Grid<double> out(w, h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = mask(x, y) ? std::sqrt(sq(x + 1, y + 1)) : 0.0;
    return out;
}

Grid<double> upsample_heights(const Grid<double>& coarse, const Mask& cmask, const Mask& fmask) {
    const int w = fmask.width(), h = fmask.height();
    Grid<double> out(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!fmask(x, y)) continue;
            const double cx = (x - 0.5) / 2.0, cy = (y - 0.5) / 2.0;
            const int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
            const double tx = cx - x0, ty = cy - y0;
            double acc = 0.0, wsum = 0.0;
            for (int oy = 0; oy < 2; ++oy)
                for (int ox = 0; ox < 2; ++ox) {
                    const int sx = x0 + ox, sy = y0 + oy;
                    if (!in_mask(cmask, sx, sy)) continue;
                    const double wt = (ox ? tx : 1.0 - tx) * (oy ? ty : 1.0 - ty);
                    acc += wt * coarse(sx, sy);
                    wsum += wt;
                }
            if (wsum > 1e-12) {
                out(x, y) = 2.0 * acc / wsum;
            } else {
                const int sx = std::clamp(static_cast<int>(std::lround(cx)), 0, cmask.width() - 1);
                const int sy = std::clamp(static_cast<int>(std::lround(cy)), 0, cmask.height() - 1);
                out(x, y) = cmask(sx, sy) ? 2.0 * coarse(sx, sy) : 0.0;
            }
        }
    }
    return out;
}

Grid<double> downsample_heights(const Grid<double>& fine, const Mask& fmask, const Mask& cmask) {
    Grid<double> out(cmask.width(), cmask.height(), 0.0);
    for (int y = 0; y < cmask.height(); ++y)
        for (int x = 0; x < cmask.width(); ++x) {
            if (!cmask(x, y)) continue;
            double acc = 0.0;
            int n = 0;
            for (int oy = 0; oy < 2; ++oy)
                for (int ox = 0; ox < 2; ++ox)
                    if (in_mask(fmask, 2 * x + ox, 2 * y + oy)) {
                        acc += fine(2 * x + ox, 2 * y + oy);
                        ++n;
                    }
            out(x, y) = n ? 0.5 * acc / n : 0.0;
        }
    return out;
}

LogImage downsample_image(const LogImage& img, const Mask& cmask) {
    LogImage out(cmask.width(), cmask.height(), 0.0);
    out.mask = cmask;
    for (int y = 0; y < cmask.height(); ++y)
        for (int x = 0; x < cmask.width(); ++x) {
            double acc[kChannels] = {0, 0, 0};
            int n = 0, any = 0;
            double any_acc[kChannels] = {0, 0, 0};
            for (int oy = 0; oy < 2; ++oy)
                for (int ox = 0; ox < 2; ++ox) {
                    const int fx = 2 * x + ox, fy = 2 * y + oy;
                    if (fx >= img.width || fy >= img.height) continue;
                    ++any;
                    for (int c = 0; c < kChannels; ++c) any_acc[c] += img.at(fx, fy, c);
                    if (!img.mask(fx, fy)) continue;
                    ++n;
                    for (int c = 0; c < kChannels; ++c) acc[c] += img.at(fx, fy, c);
                }
            for (int c = 0; c < kChannels; ++c)
                out.at(x, y, c) = n ? acc[c] / n : (any ? any_acc[c] / any : 0.0);
        }
    return out;
}

ObjectiveValue evaluate_objective(const LogImage* image, const AnnotationSet& a,
                                  const CueWeights& w, const ModelConfig& model,
                                  const Grid<double>& z, const IlluminationSH& light) {
    Stencil s(a.silhouette_mask);
    ObjectiveValue v;
    v.geometric = total_energy(s, z, a, w, model.energy, true);
    v.total = v.geometric.total;
    if (w.sfs != 0.0) {
        if (!image) throw Error("shading objective requires an image");
        v.shading = shading_energy(s, z, *image, light, model.shading);
        v.total += w.sfs * v.shading->total;
    }
    return v;
}

namespace {

struct Level {
    AnnotationSet annotations;
    std::optional<LogImage> image;
};

/// Packs on-mask heights (and the light) into one parameter vector.
class Problem {
  public:
    Problem(const Level& level, const CueWeights& w, const ModelConfig& model)
        : level_(level), w_(w), model_(model), stencil_(level.annotations.silhouette_mask) {
        const Mask& m = level.annotations.silhouette_mask;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i]) index_.push_back(i);
        with_light_ = w.sfs != 0.0;
    }

    Eigen::Index size() const {
        return static_cast<Eigen::Index>(index_.size()) + (with_light_ ? kLightDims : 0);
    }

    Eigen::VectorXd pack(const Grid<double>& z, const IlluminationSH& light) const {
        Eigen::VectorXd x(size());
        for (std::size_t k = 0; k < index_.size(); ++k) x[static_cast<Eigen::Index>(k)] = z[index_[k]];
        if (with_light_)
            for (int k = 0; k < kLightDims; ++k)
                x[static_cast<Eigen::Index>(index_.size()) + k] = light.coeffs[k];
        return x;
    }

    void unpack(const Eigen::VectorXd& x, Grid<double>& z, IlluminationSH& light) const {
        const Mask& m = level_.annotations.silhouette_mask;
        z = Grid<double>(m.width(), m.height(), 0.0);
        for (std::size_t k = 0; k < index_.size(); ++k) z[index_[k]] = x[static_cast<Eigen::Index>(k)];
        if (with_light_)
            for (int k = 0; k < kLightDims; ++k)
                light.coeffs[k] = x[static_cast<Eigen::Index>(index_.size()) + k];
    }

    struct Terms {
        TraceRow row;
        EnergyReport geometric;
        std::size_t clamped = 0;
    };

    double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad, const IlluminationSH& fixed_light,
                    Terms* terms = nullptr) const {
        Grid<double> z;
        IlluminationSH light = fixed_light;
        unpack(x, z, light);
        auto rep = total_energy(stencil_, z, level_.annotations, w_, model_.energy, false);
        double total = rep.total;
        grad.resize(size());
        for (std::size_t k = 0; k < index_.size(); ++k)
            grad[static_cast<Eigen::Index>(k)] = rep.grad_total[index_[k]];
        double sfs = 0.0;
        std::size_t clamped = 0;
        if (with_light_) {
            const auto se = shading_energy(stencil_, z, *level_.image, light, model_.shading);
            sfs = se.total;
            clamped = se.clamped;
            total += w_.sfs * se.total;
            for (std::size_t k = 0; k < index_.size(); ++k)
                grad[static_cast<Eigen::Index>(k)] += w_.sfs * se.grad_z[index_[k]];
            for (int k = 0; k < kLightDims; ++k)
                grad[static_cast<Eigen::Index>(index_.size()) + k] = w_.sfs * se.grad_light[k];
        }
        if (terms) {
            terms->row = {0, 0, rep.f_sfc, rep.f_selfocc, rep.f_fold, rep.f_flat,
                          rep.f_smooth, sfs, total};
            terms->clamped = clamped;
            terms->geometric = std::move(rep);
        }
        return total;
    }

    /// Names the first non-finite term, if any.
    static std::optional<std::string> non_finite_term(const TraceRow& r) {
        const std::pair<const char*, double> terms[] = {
            {"f_sfc", r.f_sfc},   {"f_selfocc", r.f_selfocc}, {"f_fold", r.f_fold},
            {"f_flat", r.f_flat}, {"f_smooth", r.f_smooth},   {"shading", r.f_sfs}};
        for (const auto& [name, v] : terms)
            if (!std::isfinite(v)) return std::string(name);
        return std::nullopt;
    }

  private:
    const Level& level_;
    CueWeights w_;
    const ModelConfig& model_;
    Stencil stencil_;
    std::vector<std::size_t> index_;
    bool with_light_ = false;
};

Grid<double> policy_init(const Mask& m, InitPolicy p) {
    if (p == InitPolicy::Zero) return Grid<double>(m.width(), m.height(), 0.0);
    auto d = distance_transform(m);
    for (auto& v : d.data()) v *= 0.5;
    return d;
}

}  // namespace

SolveResult solve(const LogImage* image, const AnnotationSet& annotations,
                  const VariantSpec& variant, const SolveConfig& cfg, const ModelConfig& model,
                  const SolveStart& start, const ProgressFn& progress) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool shading = variant.weights.sfs != 0.0;
    const Mask& mask = annotations.silhouette_mask;
    if (mask_count(mask) == 0) throw Error("annotation mask is empty");
    if (mask.width() < 3 || mask.height() < 3) throw Error("image must be at least 3x3");
    if (shading && !image) throw Error("variant requires an image: " +
                                       std::string(to_string(variant.name)));
    if (image && (image->width != mask.width() || image->height != mask.height()))
        throw Error("image size differs from the annotations");
    if (cfg.levels < 0 || cfg.max_iters < 0 || !(cfg.tol > 0.0) || cfg.memory < 1)
        throw Error("invalid solver configuration");

    CueWeights w = variant.weights;
    w.lambda_f = model.lambda_f;
    w.lambda_k = model.lambda_k;

    // pyramid, finest first
    std::vector<Level> levels;
    levels.push_back({annotations, std::nullopt});
    if (shading) {
        LogImage img = *image;
        img.mask = mask;
        levels[0].image = std::move(img);
    }
    const int max_levels = cfg.levels > 0 ? cfg.levels : 64;
    while (static_cast<int>(levels.size()) < max_levels) {
        const auto& fine = levels.back().annotations.silhouette_mask;
        const int cw = (fine.width() + 1) / 2, ch = (fine.height() + 1) / 2;
        if (std::min(cw, ch) < (cfg.levels > 0 ? 3 : cfg.min_size)) break;
        Level next{downsample_annotations(levels.back().annotations), std::nullopt};
        if (mask_count(next.annotations.silhouette_mask) == 0) break;
        if (shading) next.image = downsample_image(*levels.back().image, next.annotations.silhouette_mask);
        levels.push_back(std::move(next));
    }

    SolveResult result;
    auto& diag = result.diagnostics;
    diag.levels = static_cast<int>(levels.size());
    for (const auto& msg : annotations.warnings) diag.warnings.push_back(msg);

    IlluminationSH light = start.light.value_or(IlluminationSH{model.shading.prior.mean});
    Grid<double> z;
    const int coarsest = static_cast<int>(levels.size()) - 1;
    if (start.z) {
        if (!start.z->same_shape(mask)) throw Error("initial height field has the wrong shape");
        z = *start.z;
        for (int l = 1; l <= coarsest; ++l)
            z = downsample_heights(z, levels[l - 1].annotations.silhouette_mask,
                                   levels[l].annotations.silhouette_mask);
    } else {
        z = policy_init(levels[coarsest].annotations.silhouette_mask, cfg.init);
    }

    LbfgsOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.rel_tol = cfg.tol;
    opts.memory = cfg.memory;

    for (int l = coarsest; l >= 0; --l) {
        const Level& level = levels[l];
        const Mask& lmask = level.annotations.silhouette_mask;
        if (l < coarsest) z = upsample_heights(z, levels[l + 1].annotations.silhouette_mask, lmask);

        Problem problem(level, w, model);
        Problem::Terms terms;
        Eigen::VectorXd grad;

        if (l == 0) {
            // Energy bound is stated against the policy start at full resolution.
            const Grid<double> z0 = start.z ? *start.z : policy_init(lmask, cfg.init);
            const IlluminationSH l0 = start.light.value_or(IlluminationSH{model.shading.prior.mean});
            Problem::Terms t0;
            const double e0 = problem.evaluate(problem.pack(z0, l0), grad, l0, &t0);
            if (auto bad = Problem::non_finite_term(t0.row))
                throw Error("non-finite energy at initialization in term " + *bad);
            diag.initial_energy = e0;
            diag.initial_grad_inf = grad.lpNorm<Eigen::Infinity>();
            Problem::Terms tu;
            const double eu = problem.evaluate(problem.pack(z, light), grad, light, &tu);
            if (!(eu <= e0)) {
                z = z0;
                light = l0;
            }
        }

        const IlluminationSH fixed_light = light;
        Eigen::VectorXd x0 = problem.pack(z, light);
        const double f0 = problem.evaluate(x0, grad, fixed_light, &terms);
        if (auto bad = Problem::non_finite_term(terms.row))
            throw Error("non-finite energy at initialization in term " + *bad);
        (void)f0;
        terms.row.level = l;
        terms.row.iter = 0;
        result.trace.push_back(terms.row);

        Eigen::VectorXd last_x = x0;
        Problem::Terms last_terms = terms;
        const auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            Problem::Terms t;
            const double f = problem.evaluate(x, g, fixed_light, &t);
            last_x = x;
            last_terms = std::move(t);
            return f;
        };
        const auto on_iter = [&](int iter, const Eigen::VectorXd& x, double, const Eigen::VectorXd&) {
            if (!(x.size() == last_x.size() && x == last_x)) {
                Eigen::VectorXd g;
                problem.evaluate(x, g, fixed_light, &last_terms);
                last_x = x;
            }
            TraceRow row = last_terms.row;
            row.level = l;
            row.iter = iter;
            result.trace.push_back(row);
            if (progress && cfg.max_iters > 0)
                progress((coarsest - l + static_cast<double>(iter) / cfg.max_iters) / (coarsest + 1));
        };
        const auto r = minimize_lbfgs(objective, x0, opts, on_iter);
        problem.unpack(r.x, z, light);
        diag.iterations += r.iterations;
        diag.line_search_failed = diag.line_search_failed || r.line_search_failed;
        if (l == 0) {
            diag.converged = r.converged;
            diag.final_energy = r.f;
            diag.final_grad_inf = r.g.lpNorm<Eigen::Infinity>();
        }
    }

    // final bookkeeping at full resolution
    const auto final_value = evaluate_objective(levels[0].image ? &*levels[0].image : nullptr,
                                                annotations, w, model, z, light);
    diag.skipped_sfc = final_value.geometric.skipped_sfc;
    diag.skipped_selfocc = final_value.geometric.skipped_selfocc;
    diag.skipped_fold = final_value.geometric.skipped_fold;
    if (final_value.shading) diag.clamped_pixels = final_value.shading->clamped;

    result.z = HeightField(z, mask);
    if (shading) {
        result.light = light;
        result.reflectance = eliminate_reflectance(*levels[0].image, result.z, light);
    }
    if (progress) progress(1.0);
    diag.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream os;
    os << "level,iter,f_sfc,f_selfocc,f_fold,f_flat,f_smooth,f_sfs,total\n";
    os << std::setprecision(17);
    for (const auto& r : trace)
        os << r.level << ',' << r.iter << ',' << r.f_sfc << ',' << r.f_selfocc << ',' << r.f_fold
           << ',' << r.f_flat << ',' << r.f_smooth << ',' << r.f_sfs << ',' << r.total << '\n';
    return os.str();
}

}  // namespace boundcue
