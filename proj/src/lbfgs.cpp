#include <boundcue/lbfgs.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

namespace boundcue {

namespace {

struct Point {
    double alpha = 0.0;
    double f = 0.0;
    double d = 0.0;  // directional derivative
    Eigen::VectorXd x;
    Eigen::VectorXd g;
};

/// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db),
/// safeguarded to the interior of the bracket.
double interpolate(const Point& a, const Point& b) {
    const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
    const double span = hi - lo;
    double t = 0.5 * (a.alpha + b.alpha);
    if (std::isfinite(b.f) && std::isfinite(b.d)) {
        const double d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
        const double disc = d1 * d1 - a.d * b.d;
        if (disc >= 0.0) {
            const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
            const double c =
                b.alpha - (b.alpha - a.alpha) * (b.d + d2 - d1) / (b.d - a.d + 2.0 * d2);
            if (std::isfinite(c)) t = c;
        }
    }
    return std::clamp(t, lo + 0.1 * span, hi - 0.1 * span);
}

class LineSearch {
  public:
    LineSearch(const Objective& f, const LbfgsOptions& o, const Eigen::VectorXd& x,
               const Eigen::VectorXd& p, double f0, double d0)
        : f_(f), o_(o), x_(x), p_(p), f0_(f0), d0_(d0) {}

    /// Returns true with `out` satisfying the strong Wolfe conditions, or the
    /// best sufficient-decrease point if the budget runs out.
    bool run(double alpha, Point& out) {
        Point prev{0.0, f0_, d0_, x_, {}};
        for (int i = 0; i < o_.max_line_search; ++i) {
            Point cur = eval(alpha);
            if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur, out);
            if (std::abs(cur.d) <= -o_.c2 * d0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.d >= 0.0) return zoom(cur, prev, out);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return fallback(out);
    }

  private:
    Point eval(double alpha) {
        ++evals_;
        Point pt;
        pt.alpha = alpha;
        pt.x = x_ + alpha * p_;
        pt.g.resize(x_.size());
        pt.f = f_(pt.x, pt.g);
        if (!std::isfinite(pt.f) || !pt.g.allFinite()) {
            pt.f = std::numeric_limits<double>::infinity();
            pt.d = std::numeric_limits<double>::quiet_NaN();
        } else {
            pt.d = pt.g.dot(p_);
        }
        if (armijo(pt) && (!best_ || pt.f < best_->f)) best_ = pt;
        return pt;
    }

    bool armijo(const Point& pt) const {
        return std::isfinite(pt.f) && pt.f <= f0_ + o_.c1 * pt.alpha * d0_;
    }

    bool zoom(Point lo, Point hi, Point& out) {
        while (evals_ < o_.max_line_search) {
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
            Point cur = eval(interpolate(lo, hi));
            if (!armijo(cur) || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.d) <= -o_.c2 * d0_) {
                    out = std::move(cur);
                    return true;
                }
                if (cur.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return fallback(out);
    }

    bool fallback(Point& out) {
        if (!best_ || !(best_->f < f0_)) return false;
        out = *best_;
        return true;
    }

    const Objective& f_;
    const LbfgsOptions& o_;
    const Eigen::VectorXd& x_;
    const Eigen::VectorXd& p_;
    double f0_, d0_;
    int evals_ = 0;
    std::optional<Point> best_;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts,
                           const IterationCallback& on_iteration) {
    LbfgsResult r;
    r.x = std::move(x0);
    r.g.resize(r.x.size());
    r.f = f(r.x, r.g);
    if (r.x.size() == 0 || r.g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
        r.converged = true;
        return r;
    }

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    Eigen::VectorXd p(r.x.size());

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        // two-loop recursion
        Eigen::VectorXd q = r.g;
        std::vector<double> a(s_hist.size());
        for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
            a[k] = rho_hist[k] * s_hist[k].dot(q);
            q -= a[k] * y_hist[k];
        }
        if (!s_hist.empty()) {
            q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        } else {
            q /= std::max(r.g.lpNorm<Eigen::Infinity>(), 1e-300);
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double b = rho_hist[k] * y_hist[k].dot(q);
            q += s_hist[k] * (a[k] - b);
        }
        p = -q;
        double d0 = r.g.dot(p);
        if (!(d0 < 0.0)) {
            // not a descent direction; restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            p = -r.g / std::max(r.g.lpNorm<Eigen::Infinity>(), 1e-300);
            d0 = r.g.dot(p);
        }

        LineSearch ls(f, opts, r.x, p, r.f, d0);
        Point next;
        if (!ls.run(1.0, next)) {
            r.line_search_failed = true;
            break;
        }

        Eigen::VectorXd s = next.x - r.x;
        Eigen::VectorXd y = next.g - r.g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double f_prev = r.f;
        r.x = std::move(next.x);
        r.g = std::move(next.g);
        r.f = next.f;
        r.iterations = iter;
        if (on_iteration) on_iteration(iter, r.x, r.f, r.g);

        const double scale = std::max({std::abs(f_prev), std::abs(r.f), 1e-10});
        if ((f_prev - r.f) / scale < opts.rel_tol ||
            r.g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
            r.converged = true;
            break;
        }
    }
    return r;
}

}  // namespace boundcue
