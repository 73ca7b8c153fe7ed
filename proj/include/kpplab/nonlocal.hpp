#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "kpplab/common.hpp"
#include "kpplab/grid.hpp"
#include "kpplab/reaction.hpp"

namespace kpplab {

// One-dimensional nonlocal diffusion
//   L u(x) = p.v. int K(nu) [u(x+nu) - u(x)] dnu
// for even kernels. Evenness removes the principal value:
//   L u(x) = int_{nu>0} K(nu) [u(x+nu) + u(x-nu) - 2 u(x)] dnu.

struct Kernel {
    enum class Family { box, exp_tail, fractional_cutoff, tabulated };
    Family family = Family::box;
    double amp = 0.5;    // box/exp amplitude
    double cut = 1.0;    // support radius for box/fractional
    double decay = 1.0;  // exp_tail rate
    double s = 0.5;      // fractional order (kernel ~ r^{-1-s})
    double alpha = 0.5;  // the (0,1] constant of the two-sided envelope
    std::vector<std::pair<double, double>> table;  // tabulated (r, weight), r ascending

    double weight(double r) const {
        switch (family) {
            case Family::box: return r <= cut ? amp : 0.0;
            case Family::exp_tail: return amp * std::exp(-decay * r);
            case Family::fractional_cutoff: return r <= cut ? std::pow(r, -1.0 - s) : 0.0;
            case Family::tabulated: {
                if (table.empty() || r >= table.back().first) return 0.0;
                auto it = std::lower_bound(table.begin(), table.end(), r,
                                           [](const auto& a, double v) { return a.first < v; });
                if (it == table.begin()) return it->second;
                auto lo = *(it - 1);
                auto hi = *it;
                double w = (r - lo.first) / (hi.first - lo.first);
                return (1 - w) * lo.second + w * hi.second;
            }
        }
        return 0.0;
    }

    // envelope K(r) of the singular part: chi_(0,alpha] <= kappa <= chi * r^{-d-2+alpha}
    double kappa_env(double r) const {
        if (r <= 0.0 || r > alpha) return 0.0;
        if (family == Family::fractional_cutoff) return std::pow(r, -1.0 - s);
        return 1.0;
    }

    bool singular_at_zero() const { return family == Family::fractional_cutoff; }

    // finite support radius, or +inf for exponential tails
    double support() const {
        switch (family) {
            case Family::box: return cut;
            case Family::fractional_cutoff: return cut;
            case Family::exp_tail: return std::numeric_limits<double>::infinity();
            case Family::tabulated: return table.empty() ? 0.0 : table.back().first;
        }
        return 0.0;
    }

    // truncation radius R with alpha^{-1} * 2 int_R^inf e^{-alpha r} dr <= eps
    double reach(double eps) const {
        double sup = support();
        if (std::isfinite(sup)) return sup;
        double R = std::log(2.0 / (alpha * alpha * eps)) / alpha;
        // also honor the actual kernel decay when it is faster
        double Rk = std::log(std::max(2.0 * amp / (decay * eps), 2.0)) / decay;
        return std::max(1.0, std::min(R, Rk));
    }

    std::vector<double> breakpoints() const {
        std::vector<double> bp;
        if (family == Family::box || family == Family::fractional_cutoff) bp.push_back(cut);
        if (family == Family::tabulated)
            for (const auto& [r, w] : table) bp.push_back(r);
        bp.push_back(alpha);
        std::sort(bp.begin(), bp.end());
        return bp;
    }

    // int_a^b K(r) (r - shift)^k dr, with a >= 0; [a,b] must not straddle a
    // breakpoint (the builder splits first). Analytic for the singular family
    // near 0, 16-point Gauss-Legendre otherwise.
    double moment(int k, double a, double b, double shift = 0.0) const {
        if (b <= a) return 0.0;
        if (family == Family::fractional_cutoff && a < 1e-14 && shift == 0.0) {
            // int_0^b r^{k-1-s} dr, requires k > s
            double e = static_cast<double>(k) - s;
            if (e <= 0.0) throw std::invalid_argument("kernel moment diverges near 0");
            return std::pow(std::min(b, cut), e) / e;
        }
        return gl16([&](double r) { return weight(r) * std::pow(r - shift, k); }, a, b);
    }
};

inline Kernel make_box_kernel(double amp = 0.5, double cut = 1.0) {
    Kernel k;
    k.family = Kernel::Family::box;
    k.amp = amp;
    k.cut = cut;
    k.alpha = std::min({1.0, amp, cut});
    return k;
}

inline Kernel make_exp_kernel(double amp = 1.0, double decay = 1.0) {
    Kernel k;
    k.family = Kernel::Family::exp_tail;
    k.amp = amp;
    k.decay = decay;
    k.alpha = std::min(1.0, std::min(0.5, 1.0 / std::max(1.0, decay)));
    return k;
}

inline Kernel make_fractional_kernel(double s = 0.5, double cut = 1.0) {
    Kernel k;
    k.family = Kernel::Family::fractional_cutoff;
    k.s = s;
    k.cut = cut;
    k.alpha = std::min({1.0, 2.0 - s, cut});
    return k;
}

struct KernelValidation {
    bool pass = true;
    double worst_lower = 0.0;  // max over samples of (alpha*kappa - K)+
    double worst_upper = 0.0;  // max over samples of (K - alpha^{-1} max{kappa, e^{-alpha r}})+
    double worst_env = 0.0;    // envelope bound violations of kappa itself
};

inline KernelValidation validate_kernel(const Kernel& k, int nsamples = 2000) {
    KernelValidation v;
    double R = std::min(k.reach(1e-10), 60.0);
    for (int i = 1; i <= nsamples; ++i) {
        double r = R * i / nsamples;
        double K = k.weight(r);
        double kap = k.kappa_env(r);
        v.worst_lower = std::max(v.worst_lower, k.alpha * kap - K);
        double up = std::max(kap, std::exp(-k.alpha * r)) / k.alpha;
        v.worst_upper = std::max(v.worst_upper, K - up);
        double chi = (r <= k.alpha) ? 1.0 : 0.0;
        v.worst_env = std::max(v.worst_env, chi - kap);
        if (r <= k.alpha) v.worst_env = std::max(v.worst_env, kap - std::pow(r, -3.0 + k.alpha));
    }
    // fine sampling near 0 for the singular envelope
    for (int i = 1; i <= 200; ++i) {
        double r = k.alpha * i / 2000.0;
        double K = k.weight(r);
        double kap = k.kappa_env(r);
        v.worst_lower = std::max(v.worst_lower, k.alpha * kap - K);
        v.worst_env = std::max(v.worst_env, 1.0 - kap);
        v.worst_env = std::max(v.worst_env, kap - std::pow(r, -3.0 + k.alpha));
    }
    double tol = 1e-9;
    v.pass = v.worst_lower <= tol && v.worst_upper <= tol && v.worst_env <= tol;
    return v;
}

// --- discrete operator ---------------------------------------------------------
// Precomputed pair weights: L u_i ~= sum_{o>=1} pw[o] * (u_{i+o} + u_{i-o} - 2 u_i).
// Construction: product integration of the even second difference
// SD(nu) = u(x+nu)+u(x-nu)-2u(x) against exact kernel moments.
//  - (0, h/4]: SD ~ SD(h/4) (nu/(h/4))^2, analytic moment (closes the
//    singular cell; SD = O(nu^2) by smoothness)
//  - (h/4, 4h]: sub-grid refined 4x, linear product integration; off-grid SD
//    values via cubic interpolation, folded into node weights
//  - (4h, R]: quadratic (three-node) product integration per node pair
// Cells are split at kernel breakpoints so moments see smooth integrands.

struct NonlocalOp {
    double h = 0.0;
    double R = 0.0;         // truncation radius
    double eps_tail = 0.0;  // bound on the neglected tail mass
    double mass = 0.0;      // int_{|nu|<=R} K dnu (operator norm bound)
    std::vector<double> pw;  // pw[o], o = 1..reach
    double min_weight = 0.0;

    int reach_nodes() const { return static_cast<int>(pw.size()) - 1; }

    // apply to a state; out-of-domain values by boundary policy
    GridState apply(const GridState& s) const {
        const Grid& g = s.grid;
        if (g.dim != 1) throw std::invalid_argument("nonlocal apply: 1D states only");
        const int O = reach_nodes();
        const int nx = g.nx;
        std::vector<double> padded(static_cast<std::size_t>(nx) + 2 * O, 0.0);
        const bool mirror = (g.bc == Boundary::neumann_zero);
        for (int i = 0; i < nx; ++i) padded[O + i] = s.v[i];
        for (int i = 0; i < O; ++i) {
            padded[i] = mirror ? s.v[0] : 0.0;
            padded[O + nx + i] = mirror ? s.v[nx - 1] : 0.0;
        }
        GridState out(g, s.time);
        for (int i = 0; i < nx; ++i) {
            const double* c = padded.data() + O + i;
            double u = c[0];
            double acc = 0.0;
            for (int o = 1; o <= O; ++o) acc += pw[o] * (c[o] + c[-o] - 2.0 * u);
            out.v[i] = acc;
        }
        return out;
    }

    // apply to an analytic profile at a single point (for residual checks the
    // profile is known in closed form, so no boundary truncation enters)
    double apply_analytic(const std::function<double(double)>& f, double x) const {
        double u = f(x);
        double acc = 0.0;
        for (int o = 1; o <= reach_nodes(); ++o)
            acc += pw[o] * (f(x + o * h) + f(x - o * h) - 2.0 * u);
        return acc;
    }
};

inline NonlocalOp build_nonlocal_op(const Kernel& k, double h, double eps_tail = 1e-8,
                                    double R_override = 0.0) {
    NonlocalOp op;
    op.h = h;
    op.R = R_override > 0.0 ? R_override : k.reach(eps_tail);
    op.eps_tail = eps_tail;
    if (std::isfinite(k.support())) op.eps_tail = 0.0;

    const double R = op.R;
    const int J = static_cast<int>(std::ceil(R / h - 1e-12));
    // reach + 2 nodes for the cubic folding at the inner sub-grid
    op.pw.assign(static_cast<std::size_t>(J) + 3, 0.0);
    double center = 0.0;  // accumulates -2*sum of quadrature mass (diagnostic only)

    std::vector<double> bps = k.breakpoints();
    auto split_moment = [&](int mk, double a, double b, double shift) {
        double total = 0.0;
        double lo = a;
        for (double bp : bps) {
            if (bp > lo + 1e-15 && bp < b - 1e-15) {
                total += k.moment(mk, lo, bp, shift);
                lo = bp;
            }
        }
        total += k.moment(mk, lo, b, shift);
        return total;
    };

    // fold a quadrature weight w on SD(nu) into pair weights; nu = (j + theta) h
    auto fold = [&](double nu, double w) {
        if (w == 0.0) return;
        double pos = nu / h;
        int j = static_cast<int>(std::floor(pos + 1e-12));
        double theta = pos - j;
        if (theta < 1e-9 || theta > 1.0 - 1e-9) {
            int o = static_cast<int>(std::lround(pos));
            if (o >= 1) {
                op.pw[o] += w;
                center -= 2.0 * w;
            }
            return;
        }
        // Catmull-Rom coefficients on nodes j-1, j, j+1, j+2
        double t2 = theta * theta, t3 = t2 * theta;
        double c[4] = {0.5 * (-t3 + 2.0 * t2 - theta), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                       0.5 * (-3.0 * t3 + 4.0 * t2 + theta), 0.5 * (t3 - t2)};
        for (int kk = -1; kk <= 2; ++kk) {
            int o = std::abs(j + kk);
            double cw = w * c[kk + 1];
            if (o == 0)
                center += 2.0 * cw;  // pair(0) = 2 u_i
            else
                op.pw[o] += cw;
        }
        center -= 2.0 * w;
    };

    const double w4 = h / 4.0;
    const double inner_end = std::min(4.0 * h, R);
    // innermost cell (0, h/4]: SD(nu) ~ SD(h/4) * (nu/(h/4))^2
    {
        double m2 = split_moment(2, 0.0, std::min(w4, R), 0.0);
        fold(w4, m2 / (w4 * w4));
    }
    // refined sub-cells (h/4, 4h]: linear product integration
    for (int m = 1; m * w4 < inner_end - 1e-15; ++m) {
        double a = m * w4, b = std::min((m + 1) * w4, inner_end);
        double m0 = split_moment(0, a, b, 0.0);
        double m1 = split_moment(1, a, b, a);
        double wa = m0 - m1 / (b - a);
        double wb = m1 / (b - a);
        fold(a, wa);
        fold(b, wb);
    }
    // outer cells: quadratic product integration over node pairs
    for (int j0 = 4; j0 * h < R - 1e-15; j0 += 2) {
        double n0 = j0 * h, n1 = (j0 + 1) * h, n2 = (j0 + 2) * h;
        double b = std::min(n2, R);
        // Lagrange basis on nodes n0, n1, n2 integrated over [n0, b]
        double m0 = split_moment(0, n0, b, 0.0);
        double m1 = split_moment(1, n0, b, n0);
        double m2 = split_moment(2, n0, b, n0);
        double hh = h;
        // l0 = (nu-n1)(nu-n2)/(2h^2) with nu-n1 = (nu-n0)-h etc.
        double w0 = (m2 - 3.0 * hh * m1 + 2.0 * hh * hh * m0) / (2.0 * hh * hh);
        double w1 = -(m2 - 2.0 * hh * m1) / (hh * hh);
        double w2 = (m2 - hh * m1) / (2.0 * hh * hh);
        fold(n0, w0);
        fold(n1, w1);
        fold(n2, w2);
    }
    (void)center;

    op.mass = 2.0 * split_moment(0, std::min(h * 1e-6, R), R, 0.0);
    if (k.singular_at_zero()) {
        // mass below h*1e-6 is irrelevant for the dt bound; the scheme never
        // sees it (closed analytically with the nu^2 bound)
        op.mass = 2.0 * split_moment(0, std::min(w4, R), R, 0.0) +
                  2.0 * split_moment(2, 0.0, std::min(w4, R), 0.0) / (w4 * w4);
    }
    op.min_weight = op.pw.empty() ? 0.0 : *std::min_element(op.pw.begin() + 1, op.pw.end());
    return op;
}

// Direct quadrature of L f(x) for a closed-form profile f: Gauss-Legendre on
// cells split at kernel breakpoints and at caller-supplied kink locations of
// f (absolute positions where f has a C^0/C^1 kink). Used by residual checks,
// where truncating to a grid would pollute the margins.
inline double nonlocal_apply_quadrature(const Kernel& k, const std::function<double(double)>& f,
                                        double x, double R, const std::vector<double>& kinks = {},
                                        double max_cell = 0.25) {
    const double u = f(x);
    auto integrand = [&](double nu) { return k.weight(nu) * (f(x + nu) + f(x - nu) - 2.0 * u); };
    // collect cell edges in nu-space
    std::vector<double> edges;
    edges.push_back(0.0);
    edges.push_back(R);
    for (double bp : k.breakpoints())
        if (bp > 0.0 && bp < R) edges.push_back(bp);
    for (double kx : kinks) {
        for (double nu : {kx - x, x - kx})
            if (nu > 0.0 && nu < R) edges.push_back(nu);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    double acc = 0.0;
    const bool sing = k.singular_at_zero();
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        double a = edges[e], b = edges[e + 1];
        int nsub = std::max(1, static_cast<int>(std::ceil((b - a) / max_cell)));
        for (int m = 0; m < nsub; ++m) {
            double aa = a + (b - a) * m / nsub, bb = a + (b - a) * (m + 1) / nsub;
            if (sing && aa < 1e-14) {
                // singular head: second difference is O(nu^2), close analytically
                double d2 = (f(x + bb) + f(x - bb) - 2.0 * u) / (bb * bb);
                acc += d2 * k.moment(2, 0.0, bb, 0.0);
            } else {
                acc += gl16(integrand, aa, bb);
            }
        }
    }
    return acc;
}

// --- time stepping ----------------------------------------------------------------

struct NonlocalProblem {
    Kernel kernel;
    KppReaction reaction;
    Grid grid;
    GridState initial;
    double eps_tail = 1e-8;
};

inline double stable_dt_nonlocal(const NonlocalOp& op, const KppReaction& r,
                                 double cadence = 0.0) {
    double raw = 1.0 / (2.0 * op.mass + r.lipschitz_bound);
    if (cadence > 0.0) {
        double n = std::ceil(cadence / raw - 1e-12);
        return cadence / n;
    }
    return raw;
}

struct NonlocalTrajectory {
    std::vector<GridState> snaps;
    double dt = 0.0;
    double max_clamp = 0.0;

    const GridState& at_time(double t, double tol = 1e-9) const {
        for (const auto& s : snaps)
            if (std::fabs(s.time - t) <= tol) return s;
        throw std::invalid_argument("nonlocal trajectory: no snapshot at t=" + fmt_g(t));
    }
};

inline NonlocalTrajectory solve_nonlocal(const NonlocalProblem& p, double t_end, double cadence,
                                         double dt = 0.0) {
    const Grid& g = p.grid;
    if (g.dim != 1) throw std::invalid_argument("solve_nonlocal: 1D only");
    NonlocalOp op = build_nonlocal_op(p.kernel, g.h, p.eps_tail);
    if (op.min_weight < -1e-13 * std::max(1.0, op.mass))
        throw NumericalAbort("nonlocal scheme: negative quadrature weight breaks monotonicity");
    if (dt <= 0.0) dt = stable_dt_nonlocal(op, p.reaction, cadence);

    const int O = op.reach_nodes();
    const int nx = g.nx;
    const bool mirror = (g.bc == Boundary::neumann_zero);
    std::vector<double> cur(static_cast<std::size_t>(nx) + 2 * O, 0.0), nxt;
    for (int i = 0; i < nx; ++i) cur[O + i] = p.initial.v[i];
    nxt = cur;

    const bool sep = p.reaction.fu0.is_separable();
    std::vector<double> fu0(nx, 1.0);
    if (sep)
        for (int i = 0; i < nx; ++i) fu0[i] = p.reaction.fu0.base(g.x(i));

    NonlocalTrajectory traj;
    traj.dt = dt;
    double t = p.initial.time;
    long long step = 0;
    long long total_steps = static_cast<long long>(std::ceil((t_end - t) / dt - 1e-9));
    long long snap_every = std::max<long long>(1, static_cast<long long>(std::llround(cadence / dt)));
    auto snap = [&]() {
        GridState s(g, t);
        for (int i = 0; i < nx; ++i) s.v[i] = cur[O + i];
        traj.snaps.push_back(std::move(s));
    };
    snap();
    const GKind gk = p.reaction.g;
    while (step < total_steps) {
        for (int i = 0; i < O; ++i) {
            cur[i] = mirror ? cur[O] : 0.0;
            cur[O + nx + i] = mirror ? cur[O + nx - 1] : 0.0;
        }
        double tf = p.reaction.fu0.temporal(t);
        for (int i = 0; i < nx; ++i) {
            const double* c = cur.data() + O + i;
            double u = c[0];
            double acc = 0.0;
            for (int o = 1; o <= O; ++o) acc += op.pw[o] * (c[o] + c[-o] - 2.0 * u);
            double fu = sep ? tf * fu0[i] : p.reaction.fu0(t, g.x(i));
            double un = u + dt * (acc + fu * g_eval(gk, u));
            if (un > 1.0) { traj.max_clamp = std::max(traj.max_clamp, un - 1.0); un = 1.0; }
            else if (un < 0.0) { traj.max_clamp = std::max(traj.max_clamp, -un); un = 0.0; }
            nxt[O + i] = un;
        }
        cur.swap(nxt);
        t += dt;
        ++step;
        if (step % snap_every == 0) snap();
        if ((step & 2047) == 0)
            for (int i = 0; i < nx; ++i)
                if (!std::isfinite(cur[O + i]))
                    throw NumericalAbort("nonlocal solver: non-finite value at t=" + fmt_g(t));
    }
    return traj;
}

}  // namespace kpplab
