#include "eaglemine/dtm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "eaglemine/bvn.hpp"
#include "eaglemine/errors.hpp"

namespace eaglemine {

namespace {

constexpr double kMassFloor = 1e-280;  // below this the rectangle mass is unusable
constexpr double kProbFloor = 1e-300;

struct Unpacked {
    double mu_r, mu_c, sx, l21, l22, sy, rho;
};

Unpacked unpack(const double th[5]) {
    Unpacked u;
    u.mu_r = th[0];
    u.mu_c = th[1];
    u.sx = std::exp(std::clamp(th[2], -30.0, 30.0));
    u.l21 = th[3];
    u.l22 = std::exp(std::clamp(th[4], -30.0, 30.0));
    u.sy = std::hypot(u.l21, u.l22);
    u.rho = u.l21 / u.sy;
    return u;
}

void params_to_theta(const DtmParams& p, double th[5]) {
    if (!(p.s_rr > 0.0)) throw DegenerateError("covariance not positive definite");
    double l11 = std::sqrt(p.s_rr);
    double l21 = p.s_rc / l11;
    double l22sq = p.s_cc - l21 * l21;
    if (!(l22sq > 0.0)) throw DegenerateError("covariance not positive definite");
    th[0] = p.mu_r;
    th[1] = p.mu_c;
    th[2] = std::log(l11);
    th[3] = l21;
    th[4] = 0.5 * std::log(l22sq);
}

DtmParams theta_to_params(const double th[5]) {
    Unpacked u = unpack(th);
    DtmParams p;
    p.mu_r = u.mu_r;
    p.mu_c = u.mu_c;
    p.s_rr = u.sx * u.sx;
    p.s_rc = u.sx * u.l21;
    p.s_cc = u.sy * u.sy;
    return p;
}

void check_params(const DtmParams& p) {
    double th[5];
    params_to_theta(p, th);  // throws when not positive definite
}

/// Gradient accumulator in the geometric coordinates (mu_r, mu_c, sx, sy, rho).
struct Acc {
    double mu_r = 0, mu_c = 0, sx = 0, sy = 0, rho = 0;
};

void chain_to_theta(const Acc& a, const Unpacked& u, double g[5]) {
    double sy3 = u.sy * u.sy * u.sy;
    g[0] = a.mu_r;
    g[1] = a.mu_c;
    g[2] = a.sx * u.sx;
    g[3] = a.sy * (u.l21 / u.sy) + a.rho * (u.l22 * u.l22 / sy3);
    g[4] = (a.sy * (u.l22 / u.sy) + a.rho * (-u.l21 * u.l22 / sy3)) * u.l22;
}

/// Adds sign * coef * d(corner value) to the accumulator; uu/vv are the
/// standardized corner coordinates (ignored for an infinite coordinate, where
/// the corresponding partial is zero anyway).
void add_corner(Acc& a, const CornerEval& e, double sign, double coef, double uu, double vv,
                const Unpacked& u) {
    double f = sign * coef;
    a.mu_r += f * e.du * (-1.0 / u.sx);
    a.sx += f * e.du * (-uu / u.sx);
    a.mu_c += f * e.dv * (-1.0 / u.sy);
    a.sy += f * e.dv * (-vv / u.sy);
    a.rho += f * e.dr;
}

/// Quadrant mass P(X > 0, Y > 0) and optionally its gradient contribution.
double quadrant_mass(const Unpacked& u, Acc* acc) {
    double u0 = (0.0 - u.mu_r) / u.sx;
    double v0 = (0.0 - u.mu_c) / u.sy;
    if (!acc) return std::max(bvn_upper(u0, v0, u.rho), kProbFloor);
    CornerEval e00 = bvn_corner(u0, false, v0, false, u.rho);
    CornerEval e0i = bvn_corner(u0, false, 0.0, true, u.rho);
    CornerEval ei0 = bvn_corner(0.0, true, v0, false, u.rho);
    double m = 1.0 - e0i.val - ei0.val + e00.val;
    add_corner(*acc, e00, +1.0, 1.0, u0, v0, u);
    add_corner(*acc, e0i, -1.0, 1.0, u0, 0.0, u);
    add_corner(*acc, ei0, -1.0, 1.0, 0.0, v0, u);
    return std::max(m, kProbFloor);
}

double quadrant_mass(const DtmParams& p) {
    double th[5];
    params_to_theta(p, th);
    Unpacked u = unpack(th);
    return quadrant_mass(u, nullptr);
}

/// Mean log-likelihood of one truncated Gaussian over weighted cells, with
/// corner CDF values shared across the sample's bounding box.
class SingleObjective {
public:
    explicit SingleObjective(const IslandSample& s) : s_(s) {
        W_ = 0.0;
        bool first = true;
        for (std::size_t i = 0; i < s.cells.size(); ++i) {
            double w = s.weights[i];
            if (!(w >= 0.0) || !std::isfinite(w))
                throw StructuralError("island sample weights must be finite and >= 0");
            if (w <= 0.0) continue;
            W_ += w;
            const Cell& c = s.cells[i];
            if (first) {
                r0_ = r1_ = c.r;
                c0_ = c1_ = c.c;
                first = false;
            } else {
                r0_ = std::min(r0_, c.r);
                r1_ = std::max(r1_, c.r);
                c0_ = std::min(c0_, c.c);
                c1_ = std::max(c1_, c.c);
            }
        }
        if (!(W_ > 0.0)) throw DegenerateError("island sample has no weight");
        nr_ = r1_ - r0_ + 2;  // corner lattice dimensions
        nc_ = c1_ - c0_ + 2;
        corners_.resize(std::size_t(nr_) * nc_);
        us_.resize(std::size_t(nr_));
        vs_.resize(std::size_t(nc_));
        // Elongated islands fill a small fraction of their bounding box, so
        // only the lattice corners adjacent to a weighted cell are evaluated.
        for (std::size_t i = 0; i < s.cells.size(); ++i) {
            if (s.weights[i] <= 0.0) continue;
            std::size_t ir = std::size_t(s.cells[i].r - r0_);
            std::size_t jc = std::size_t(s.cells[i].c - c0_);
            needed_.push_back(int(ir * nc_ + jc));
            needed_.push_back(int(ir * nc_ + jc + 1));
            needed_.push_back(int((ir + 1) * nc_ + jc));
            needed_.push_back(int((ir + 1) * nc_ + jc + 1));
        }
        std::sort(needed_.begin(), needed_.end());
        needed_.erase(std::unique(needed_.begin(), needed_.end()), needed_.end());
    }

    double total_weight() const { return W_; }

    double eval(const double th[5], double g[5]) const {
        Unpacked u = unpack(th);
        for (int i = 0; i < nr_; ++i) us_[std::size_t(i)] = (double(r0_ + i) - u.mu_r) / u.sx;
        for (int j = 0; j < nc_; ++j) vs_[std::size_t(j)] = (double(c0_ + j) - u.mu_c) / u.sy;
        for (int idx : needed_)
            corners_[std::size_t(idx)] = bvn_corner(us_[std::size_t(idx / nc_)], false,
                                                    vs_[std::size_t(idx % nc_)], false, u.rho);

        Acc acc, accq;
        double mq = quadrant_mass(u, g ? &accq : nullptr);
        double sumlog = 0.0;
        for (std::size_t i = 0; i < s_.cells.size(); ++i) {
            double w = s_.weights[i];
            if (w <= 0.0) continue;
            const Cell& c = s_.cells[i];
            int ir = c.r - r0_, jc = c.c - c0_;
            const CornerEval& e00 = corners_[std::size_t(ir) * nc_ + jc];
            const CornerEval& e01 = corners_[std::size_t(ir) * nc_ + jc + 1];
            const CornerEval& e10 = corners_[std::size_t(ir + 1) * nc_ + jc];
            const CornerEval& e11 = corners_[std::size_t(ir + 1) * nc_ + jc + 1];
            double m = e11.val - e01.val - e10.val + e00.val;
            if (m > kMassFloor) {
                sumlog += w * std::log(m);
                if (g) {
                    double coef = w / m;
                    add_corner(acc, e11, +1.0, coef, us_[std::size_t(ir + 1)], vs_[std::size_t(jc + 1)], u);
                    add_corner(acc, e01, -1.0, coef, us_[std::size_t(ir)], vs_[std::size_t(jc + 1)], u);
                    add_corner(acc, e10, -1.0, coef, us_[std::size_t(ir + 1)], vs_[std::size_t(jc)], u);
                    add_corner(acc, e00, +1.0, coef, us_[std::size_t(ir)], vs_[std::size_t(jc)], u);
                }
            } else {
                // Deep-tail cell: midpoint density times unit area, evaluated in
                // logs so it cannot underflow.
                double uc = (double(c.r) + 0.5 - u.mu_r) / u.sx;
                double vc = (double(c.c) + 0.5 - u.mu_c) / u.sy;
                double d = 1.0 - u.rho * u.rho;
                double q = uc * uc - 2.0 * u.rho * uc * vc + vc * vc;
                double logm = -std::log(2.0 * M_PI * u.sx * u.sy) - 0.5 * std::log(d) - q / (2.0 * d);
                sumlog += w * logm;
                if (g) {
                    double dlu = -(uc - u.rho * vc) / d;
                    double dlv = -(vc - u.rho * uc) / d;
                    double dlr = u.rho / d + (uc * vc * d - u.rho * q) / (d * d);
                    acc.mu_r += w * dlu * (-1.0 / u.sx);
                    acc.sx += w * (-1.0 / u.sx + dlu * (-uc / u.sx));
                    acc.mu_c += w * dlv * (-1.0 / u.sy);
                    acc.sy += w * (-1.0 / u.sy + dlv * (-vc / u.sy));
                    acc.rho += w * dlr;
                }
            }
        }
        double f = sumlog / W_ - std::log(mq);
        if (g) {
            Acc total;
            total.mu_r = acc.mu_r / W_ - accq.mu_r / mq;
            total.mu_c = acc.mu_c / W_ - accq.mu_c / mq;
            total.sx = acc.sx / W_ - accq.sx / mq;
            total.sy = acc.sy / W_ - accq.sy / mq;
            total.rho = acc.rho / W_ - accq.rho / mq;
            chain_to_theta(total, u, g);
        }
        return f;
    }

private:
    const IslandSample& s_;
    double W_ = 0.0;
    int r0_ = 0, r1_ = 0, c0_ = 0, c1_ = 0;
    int nr_ = 0, nc_ = 0;
    std::vector<int> needed_;  // flattened lattice indices of referenced corners
    mutable std::vector<CornerEval> corners_;
    mutable std::vector<double> us_, vs_;
};

/// BFGS minimization in 5 dimensions with Armijo backtracking. Returns the
/// iteration count; sets `converged` when the gradient inf-norm drops below
/// gtol, or when successive accepted steps stop reducing the function in
/// relative terms. The second test matters on elongated islands: near the
/// optimum the corner-difference likelihood carries cancellation noise, the
/// gradient test can be unsatisfiable there, and without a stagnation stop
/// the search would spin through max_iters full backtracking sweeps with the
/// iterate frozen in place. The threshold follows the relative-reduction
/// convention of common bound-constrained quasi-Newton codes (1e7 * machine
/// epsilon, roughly nine significant digits). Deterministic.
int bfgs5(const std::function<double(const double*, double*)>& f, double x[5], int max_iters,
          double gtol, double& fval, bool& converged) {
    constexpr double kStagnationTol = 1e7 * std::numeric_limits<double>::epsilon();
    double g[5], gn[5], d[5], xn[5], s[5], y[5];
    double H[5][5];
    auto reset_h = [&] {
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) H[i][j] = i == j ? 1.0 : 0.0;
    };
    reset_h();
    fval = f(x, g);
    converged = false;
    int stalled_steps = 0;
    int it = 0;
    for (; it < max_iters; ++it) {
        double gmax = 0.0;
        for (double gi : g) gmax = std::max(gmax, std::fabs(gi));
        if (gmax <= gtol) {
            converged = true;
            break;
        }
        for (int i = 0; i < 5; ++i) {
            d[i] = 0.0;
            for (int j = 0; j < 5; ++j) d[i] -= H[i][j] * g[j];
        }
        double slope = 0.0;
        for (int i = 0; i < 5; ++i) slope += d[i] * g[i];
        if (!(slope < 0.0)) {  // numerical breakdown: steepest descent restart
            reset_h();
            for (int i = 0; i < 5; ++i) d[i] = -g[i];
            slope = 0.0;
            for (int i = 0; i < 5; ++i) slope += d[i] * g[i];
            if (!(slope < 0.0)) break;
        }
        double step = 1.0;
        double fn = fval;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (int i = 0; i < 5; ++i) xn[i] = x[i] + step * d[i];
            fn = f(xn, gn);
            if (std::isfinite(fn) && fn <= fval + 1e-4 * step * slope) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) break;  // stalled; caller judges convergence by the flag
        for (int i = 0; i < 5; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
            x[i] = xn[i];
            g[i] = gn[i];
        }
        double decrease = fval - fn;
        fval = fn;
        if (decrease <= kStagnationTol * std::max(std::fabs(fval), 1.0)) {
            if (++stalled_steps >= 2) {
                converged = true;
                ++it;
                break;
            }
        } else {
            stalled_steps = 0;
        }
        double sy = 0.0, snorm = 0.0, ynorm = 0.0;
        for (int i = 0; i < 5; ++i) {
            sy += s[i] * y[i];
            snorm += s[i] * s[i];
            ynorm += y[i] * y[i];
        }
        if (sy > 1e-12 * std::sqrt(snorm * ynorm)) {
            double rho = 1.0 / sy;
            double Hy[5];
            for (int i = 0; i < 5; ++i) {
                Hy[i] = 0.0;
                for (int j = 0; j < 5; ++j) Hy[i] += H[i][j] * y[j];
            }
            double yHy = 0.0;
            for (int i = 0; i < 5; ++i) yHy += y[i] * Hy[i];
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < 5; ++j)
                    H[i][j] += (1.0 + rho * yHy) * rho * s[i] * s[j] - rho * (Hy[i] * s[j] + s[i] * Hy[j]);
        } else {
            reset_h();
        }
    }
    return it;
}

/// Weighted moments of the sample with a 1/12 digitization floor on the
/// diagonal so single-row or single-column islands stay positive definite.
DtmParams moment_params(const IslandSample& s) {
    double W = 0.0, mr = 0.0, mc = 0.0;
    int npos = 0;
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        double w = s.weights[i];
        if (w <= 0.0) continue;
        ++npos;
        W += w;
        mr += w * (double(s.cells[i].r) + 0.5);
        mc += w * (double(s.cells[i].c) + 0.5);
    }
    if (npos < 3) throw DegenerateError("need at least 3 positive-weight cells to fit");
    mr /= W;
    mc /= W;
    double srr = 0.0, src = 0.0, scc = 0.0;
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        double w = s.weights[i];
        if (w <= 0.0) continue;
        double dr = double(s.cells[i].r) + 0.5 - mr;
        double dc = double(s.cells[i].c) + 0.5 - mc;
        srr += w * dr * dr;
        src += w * dr * dc;
        scc += w * dc * dc;
    }
    DtmParams p;
    p.mu_r = mr;
    p.mu_c = mc;
    p.s_rr = srr / W + 1.0 / 12.0;
    p.s_rc = src / W;
    p.s_cc = scc / W + 1.0 / 12.0;
    return p;
}

}  // namespace

IslandSample island_sample(const Island& isl, const Histogram& h) {
    IslandSample s;
    s.cells = isl.cells;
    s.cells.insert(s.cells.end(), isl.ring.begin(), isl.ring.end());
    std::sort(s.cells.begin(), s.cells.end());
    s.cells.erase(std::unique(s.cells.begin(), s.cells.end()), s.cells.end());
    s.weights.reserve(s.cells.size());
    for (const Cell& c : s.cells) s.weights.push_back(double(h.at(c.r, c.c)));
    return s;
}

double cell_probability(const DtmParams& p, const Cell& cell) {
    check_params(p);
    double sx = std::sqrt(p.s_rr), sy = std::sqrt(p.s_cc);
    double rho = p.s_rc / (sx * sy);
    double ul = (double(cell.r) - p.mu_r) / sx, uh = (double(cell.r) + 1.0 - p.mu_r) / sx;
    double vl = (double(cell.c) - p.mu_c) / sy, vh = (double(cell.c) + 1.0 - p.mu_c) / sy;
    double m = bvn_cdf(uh, vh, rho) - bvn_cdf(ul, vh, rho) - bvn_cdf(uh, vl, rho) +
               bvn_cdf(ul, vl, rho);
    double mq = std::max(bvn_upper((0.0 - p.mu_r) / sx, (0.0 - p.mu_c) / sy, rho), kProbFloor);
    return std::clamp(m / mq, 0.0, 1.0);
}

double model_cell_probability(const DtmModel& m, const Cell& cell) {
    if (m.kind == ModelKind::single) return cell_probability(m.comp[0], cell);
    return 0.5 * cell_probability(m.comp[0], cell) + 0.5 * cell_probability(m.comp[1], cell);
}

std::vector<double> cell_probabilities(const DtmParams& p, const std::vector<Cell>& cells) {
    std::vector<double> probs(cells.size(), 0.0);
    if (cells.empty()) return probs;
    check_params(p);
    int r0 = cells[0].r, r1 = cells[0].r, c0 = cells[0].c, c1 = cells[0].c;
    for (const Cell& c : cells) {
        r0 = std::min(r0, c.r);
        r1 = std::max(r1, c.r);
        c0 = std::min(c0, c.c);
        c1 = std::max(c1, c.c);
    }
    std::int64_t nr = std::int64_t(r1) - r0 + 2, nc = std::int64_t(c1) - c0 + 2;
    if (nr * nc > std::int64_t(4) * std::int64_t(cells.size()) + 1024) {
        for (std::size_t i = 0; i < cells.size(); ++i) probs[i] = cell_probability(p, cells[i]);
        return probs;
    }
    double sx = std::sqrt(p.s_rr), sy = std::sqrt(p.s_cc);
    double rho = p.s_rc / (sx * sy);
    double mq = std::max(bvn_upper((0.0 - p.mu_r) / sx, (0.0 - p.mu_c) / sy, rho), kProbFloor);
    std::vector<double> cdf(std::size_t(nr) * nc);
    for (std::int64_t i = 0; i < nr; ++i) {
        double u = (double(r0 + i) - p.mu_r) / sx;
        for (std::int64_t j = 0; j < nc; ++j) {
            double v = (double(c0 + j) - p.mu_c) / sy;
            cdf[std::size_t(i) * nc + j] = bvn_cdf(u, v, rho);
        }
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
        std::int64_t ir = cells[k].r - r0, jc = cells[k].c - c0;
        double m = cdf[std::size_t(ir + 1) * nc + jc + 1] - cdf[std::size_t(ir) * nc + jc + 1] -
                   cdf[std::size_t(ir + 1) * nc + jc] + cdf[std::size_t(ir) * nc + jc];
        probs[k] = std::clamp(m / mq, 0.0, 1.0);
    }
    return probs;
}

std::vector<double> model_cell_probabilities(const DtmModel& m, const std::vector<Cell>& cells) {
    std::vector<double> p0 = cell_probabilities(m.comp[0], cells);
    if (m.kind == ModelKind::single) return p0;
    std::vector<double> p1 = cell_probabilities(m.comp[1], cells);
    for (std::size_t i = 0; i < p0.size(); ++i) p0[i] = 0.5 * p0[i] + 0.5 * p1[i];
    return p0;
}

double single_objective(const DtmParams& p, const IslandSample& s, double grad[5]) {
    SingleObjective obj(s);
    double th[5];
    params_to_theta(p, th);
    if (!grad) return obj.eval(th, nullptr);
    double f = obj.eval(th, grad);
    return f;
}

FitResult fit_single_from(const DtmParams& init, const IslandSample& s, const FitOptions& opt) {
    SingleObjective obj(s);
    double th[5];
    params_to_theta(init, th);
    auto f = [&obj](const double* x, double* g) {
        double v = obj.eval(x, g);
        if (g)
            for (int i = 0; i < 5; ++i) g[i] = -g[i];
        return -v;
    };
    double fval = 0.0;
    bool conv = false;
    FitResult res;
    res.iterations = bfgs5(f, th, opt.max_iters, opt.grad_tol, fval, conv);
    res.params = theta_to_params(th);
    res.converged = conv;
    res.mean_loglik = -fval;
    return res;
}

FitResult fit_single(const IslandSample& s, const FitOptions& opt) {
    return fit_single_from(moment_params(s), s, opt);
}

namespace {

/// Principal axis of the weighted coordinate covariance; unit length.
void principal_axis(const DtmParams& mom, bool major, double e[2], double& lambda) {
    double a = mom.s_rr, b = mom.s_rc, c = mom.s_cc;
    double half = 0.5 * (a + c);
    double disc = std::sqrt(std::max(0.25 * (a - c) * (a - c) + b * b, 0.0));
    double l = major ? half + disc : half - disc;
    lambda = std::max(l, 1e-12);
    double v0 = b, v1 = l - a;
    double w0 = l - c, w1 = b;
    if (v0 * v0 + v1 * v1 < w0 * w0 + w1 * w1) {
        v0 = w0;
        v1 = w1;
    }
    double n = std::hypot(v0, v1);
    if (n < 1e-30) {  // isotropic: fall back to an axis-aligned direction
        v0 = major == (a >= c) ? 1.0 : 0.0;
        v1 = 1.0 - v0;
        n = 1.0;
    }
    e[0] = v0 / n;
    e[1] = v1 / n;
}

void split_init(const IslandSample& s, bool along_major, DtmParams out[2]) {
    DtmParams mom = moment_params(s);
    double e[2], lambda;
    principal_axis(mom, along_major, e, lambda);

    IslandSample lo, hi;
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        double proj = (double(s.cells[i].r) + 0.5 - mom.mu_r) * e[0] +
                      (double(s.cells[i].c) + 0.5 - mom.mu_c) * e[1];
        IslandSample& side = proj >= 0.0 ? hi : lo;
        side.cells.push_back(s.cells[i]);
        side.weights.push_back(s.weights[i]);
    }
    auto npos = [](const IslandSample& x) {
        int n = 0;
        for (double w : x.weights)
            if (w > 0.0) ++n;
        return n;
    };
    if (npos(lo) >= 3 && npos(hi) >= 3) {
        out[0] = moment_params(lo);
        out[1] = moment_params(hi);
        return;
    }
    // One side too thin: offset two copies of the shrunk moment fit instead.
    double off = std::max(0.8 * std::sqrt(lambda), 0.75);
    for (int k = 0; k < 2; ++k) {
        double sgn = k == 0 ? -1.0 : 1.0;
        out[k] = mom;
        out[k].mu_r = mom.mu_r + sgn * off * e[0];
        out[k].mu_c = mom.mu_c + sgn * off * e[1];
        out[k].s_rr = 0.5 * mom.s_rr + 1.0 / 24.0;
        out[k].s_rc = 0.5 * mom.s_rc;
        out[k].s_cc = 0.5 * mom.s_cc + 1.0 / 24.0;
    }
}

bool component_sane(const DtmParams& p) {
    double det = p.s_rr * p.s_cc - p.s_rc * p.s_rc;
    if (!(det > 1e-12)) return false;
    if (!(p.s_rr > 1e-10) || !(p.s_cc > 1e-10)) return false;
    if (!std::isfinite(p.mu_r) || !std::isfinite(p.mu_c)) return false;
    return quadrant_mass(p) > 1e-12;
}

}  // namespace

MixtureFit fit_mixture(const IslandSample& s, const MixtureOptions& opt) {
    MixtureFit res;
    split_init(s, true, res.comp);

    const double ninf = -std::numeric_limits<double>::infinity();
    double prev_ll = ninf;
    int restarts = 0;
    IslandSample sub;
    sub.cells = s.cells;
    sub.weights.resize(s.weights.size());

    std::vector<double> p0, p1;
    auto data_ll = [&]() {
        p0 = cell_probabilities(res.comp[0], s.cells);
        p1 = cell_probabilities(res.comp[1], s.cells);
        double ll = 0.0;
        for (std::size_t i = 0; i < s.cells.size(); ++i) {
            if (s.weights[i] <= 0.0) continue;
            ll += s.weights[i] * std::log(std::max(0.5 * p0[i] + 0.5 * p1[i], kProbFloor));
        }
        return ll;
    };

    for (int outer = 1; outer <= opt.max_outer; ++outer) {
        res.iterations = outer;
        double ll = data_ll();
        res.ll_trace.push_back(ll);
        if (outer > 1 && ll - prev_ll < opt.ll_tol * (1.0 + std::fabs(ll))) {
            res.converged = true;
            break;
        }
        prev_ll = ll;

        bool collapse = false;
        for (int k = 0; k < 2 && !collapse; ++k) {
            const std::vector<double>& own = k == 0 ? p0 : p1;
            const std::vector<double>& other = k == 0 ? p1 : p0;
            for (std::size_t i = 0; i < sub.weights.size(); ++i) {
                double tot = own[i] + other[i];
                double q = tot > 0.0 ? own[i] / tot : 0.5;
                sub.weights[i] = s.weights[i] * q;
            }
            try {
                FitResult fr = fit_single_from(res.comp[k], sub, opt.inner);
                if (!component_sane(fr.params)) collapse = true;
                else res.comp[k] = fr.params;
            } catch (const DegenerateError&) {
                collapse = true;
            }
        }
        if (collapse) {
            if (restarts++ == 0) {
                // Retry once, splitting across the minor axis instead.
                split_init(s, false, res.comp);
                res.collapsed = true;
                prev_ll = ninf;
                continue;
            }
            res.converged = false;
            break;
        }
    }
    res.loglik = data_ll();
    return res;
}

std::int64_t estimate_n(const IslandSample& s) {
    double W = 0.0;
    for (double w : s.weights) W += w;
    return std::max<std::int64_t>(1, std::llround(W));
}

std::int64_t l1_optimal_n(const DtmModel& m, const IslandSample& s) {
    std::vector<double> probs = model_cell_probabilities(m, s.cells);
    std::vector<std::pair<double, double>> bp;  // (w/P breakpoint, weight P)
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        bp.emplace_back(s.weights[i] / probs[i], probs[i]);
        total += probs[i];
    }
    auto objective = [&](std::int64_t n) {
        double f = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i)
            f += std::fabs(double(n) * probs[i] - s.weights[i]);
        return f;
    };
    if (bp.empty()) return 1;
    std::sort(bp.begin(), bp.end());
    double run = 0.0, star = bp.back().first;
    for (const auto& [x, w] : bp) {
        run += w;
        if (run >= 0.5 * total) {
            star = x;
            break;
        }
    }
    std::int64_t lo = std::max<std::int64_t>(1, std::int64_t(std::floor(star)));
    std::int64_t best = lo;
    double bestf = objective(lo);
    for (std::int64_t cand : {lo + 1, lo - 1}) {
        if (cand < 1) continue;
        double f = objective(cand);
        if (f < bestf || (f == bestf && cand < best)) {
            bestf = f;
            best = cand;
        }
    }
    return best;
}

double log_likelihood(const DtmModel& m, const IslandSample& s, bool* floored) {
    std::vector<double> probs = model_cell_probabilities(m, s.cells);
    if (floored) *floored = false;
    double ll = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (s.weights[i] <= 0.0) continue;
        double p = probs[i];
        if (p < kProbFloor) {
            p = kProbFloor;
            if (floored) *floored = true;
        }
        ll += s.weights[i] * std::log(p);
    }
    return ll;
}

namespace {

nlohmann::json params_json(const DtmParams& p) {
    return {{"mu", {p.mu_r, p.mu_c}}, {"sigma", {p.s_rr, p.s_rc, p.s_cc}}};
}

DtmParams params_from_json(const nlohmann::json& j) {
    DtmParams p;
    p.mu_r = j.at("mu").at(0).get<double>();
    p.mu_c = j.at("mu").at(1).get<double>();
    p.s_rr = j.at("sigma").at(0).get<double>();
    p.s_rc = j.at("sigma").at(1).get<double>();
    p.s_cc = j.at("sigma").at(2).get<double>();
    return p;
}

}  // namespace

std::string DtmModel::to_json() const {
    nlohmann::json j;
    j["kind"] = kind == ModelKind::single ? "single" : "mixture2";
    nlohmann::json comps = nlohmann::json::array();
    comps.push_back(params_json(comp[0]));
    if (kind == ModelKind::mixture2) comps.push_back(params_json(comp[1]));
    j["components"] = std::move(comps);
    j["n"] = n;
    j["island"] = island_id;
    j["converged"] = converged;
    j["collapsed"] = collapsed;
    j["forced"] = forced;
    return j.dump();
}

DtmModel DtmModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DtmModel m;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "single") m.kind = ModelKind::single;
    else if (kind == "mixture2") m.kind = ModelKind::mixture2;
    else throw ParseError("unknown model kind '" + kind + "'");
    const auto& comps = j.at("components");
    if (comps.size() != (m.kind == ModelKind::single ? 1u : 2u))
        throw ParseError("model kind does not match component count");
    m.comp[0] = params_from_json(comps.at(0));
    if (m.kind == ModelKind::mixture2) m.comp[1] = params_from_json(comps.at(1));
    m.n = j.at("n").get<std::int64_t>();
    m.island_id = j.value("island", -1);
    m.converged = j.value("converged", true);
    m.collapsed = j.value("collapsed", false);
    m.forced = j.value("forced", false);
    return m;
}

}  // namespace eaglemine
