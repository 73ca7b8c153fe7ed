#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "kpplab/common.hpp"
#include "kpplab/nonlocal.hpp"
#include "kpplab/reaction.hpp"

namespace kpplab {

// The nonlocal plateau profile: zeta: R -> [-1/2, 1/2], constant 1/2 left of
// y0 = 0 and -1/2 right of y4, concave then convex with the inflection at y1,
// zeta(y2) = 1/4, zeta(y3) = 0, zeta'' = 1/100 on [y2, y3], |zeta^(j)| <= 1.
// Built from a continuous piecewise-linear zeta'' integrated in closed form;
// the two free segment lengths are solved so the level anchors are exact.

struct ZetaShape {
    // piecewise description: breakpoints b[i], zeta'' linear on [b[i], b[i+1]]
    std::vector<double> b;     // breakpoints, b.front() = y0 = 0
    std::vector<double> dd;    // zeta'' at breakpoints
    std::vector<double> d1;    // zeta' at breakpoints (cumulative)
    std::vector<double> d0;    // zeta at breakpoints (cumulative)
    double y0 = 0, y1 = 0, y2 = 0, y3 = 0, y4 = 0;

    double zeta(double y) const { return eval<0>(y); }
    double zeta_p(double y) const { return eval<1>(y); }
    double zeta_pp(double y) const { return eval<2>(y); }

    template <int DERIV>
    double eval(double y) const {
        if (y <= b.front()) return DERIV == 0 ? d0.front() : 0.0;
        if (y >= b.back()) return DERIV == 0 ? d0.back() : 0.0;
        std::size_t i = 0;
        while (i + 2 < b.size() && y > b[i + 1]) ++i;
        double t = y - b[i];
        double L = b[i + 1] - b[i];
        double slope = (dd[i + 1] - dd[i]) / L;  // zeta''' on this piece
        if constexpr (DERIV == 2) return dd[i] + slope * t;
        if constexpr (DERIV == 1) return d1[i] + dd[i] * t + 0.5 * slope * t * t;
        return d0[i] + d1[i] * t + 0.5 * dd[i] * t * t + slope * t * t * t / 6.0;
    }
};

namespace zeta_detail {

// integrate the piecewise-linear zeta'' twice, filling d1/d0
inline void integrate(ZetaShape& z, double zeta0) {
    std::size_t n = z.b.size();
    z.d1.assign(n, 0.0);
    z.d0.assign(n, 0.0);
    z.d0[0] = zeta0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double L = z.b[i + 1] - z.b[i];
        double slope = (z.dd[i + 1] - z.dd[i]) / L;
        z.d1[i + 1] = z.d1[i] + z.dd[i] * L + 0.5 * slope * L * L;
        z.d0[i + 1] = z.d0[i] + z.d1[i] * L + 0.5 * z.dd[i] * L * L + slope * L * L * L / 6.0;
    }
}

}  // namespace zeta_detail

inline ZetaShape build_zeta_shape() {
    // curvature constants: m on [y2,y3] is pinned to 1/100; the concave side
    // uses a gentler cap so |zeta'| stays small everywhere
    const double m = 0.01, mc = 0.02, ramp = 0.25;
    const double w12 = 0.5, w23 = 5.0;
    const double s2 = 0.25 / w23 + m * w23 / 2.0;   // |zeta'(y2)|
    const double s1 = s2 + m * w12 / 2.0;           // |zeta'(y1)|
    const double core = s1 / mc - ramp;             // trapezoid core length
    if (core <= 0.0) throw std::runtime_error("zeta shape: infeasible curvature budget");

    // drop over [y1, y2]: slope from -s1 to -s2 with zeta'' ramping 0 -> m
    const double drop12 = s1 * w12 - m * w12 * w12 / 6.0;
    // trapezoid drop over [0, ramp+core+ramp] (slope 0 -> -s1), then a linear
    // pad at slope -s1 solves the total drop 1/4 over [0, y2]
    ZetaShape trap;
    trap.b = {0.0, ramp, ramp + core, ramp + core + ramp};
    trap.dd = {0.0, -mc, -mc, 0.0};
    zeta_detail::integrate(trap, 0.5);
    double trap_drop = 0.5 - trap.d0.back();
    double pad = (0.25 - drop12 - trap_drop) / s1;
    if (pad < 0.05) throw std::runtime_error("zeta shape: concave drop budget exhausted");

    // tail after y3: slope -s3 constant, then a triangular taper to slope 0
    const double s3 = s2 - m * w23;
    if (s3 <= 0.0) throw std::runtime_error("zeta shape: tail slope not negative");
    const double mt = m;
    const double taper = 2.0 * s3 / mt;  // triangular zeta'': peak mt at midpoint
    // taper drop: integrate slope from -s3 to 0 under triangular curvature
    // first half: zeta' = -s3 + mt t^2 / taper; second half symmetric
    // computed exactly below by assembling and integrating the full shape with
    // tail length solved from the residual drop
    ZetaShape tap;
    tap.b = {0.0, taper / 2.0, taper};
    tap.dd = {0.0, mt, 0.0};
    tap.d1.assign(3, 0.0);
    tap.d0.assign(3, 0.0);
    tap.d1[0] = -s3;
    tap.d0[0] = 0.0;
    for (std::size_t i = 0; i + 1 < 3; ++i) {
        double L = tap.b[i + 1] - tap.b[i];
        double slope = (tap.dd[i + 1] - tap.dd[i]) / L;
        tap.d1[i + 1] = tap.d1[i] + tap.dd[i] * L + 0.5 * slope * L * L;
        tap.d0[i + 1] = tap.d0[i] + tap.d1[i] * L + 0.5 * tap.dd[i] * L * L + slope * L * L * L / 6.0;
    }
    double taper_drop = -tap.d0.back();        // positive
    double end_slope = tap.d1.back();          // should be ~0
    if (std::fabs(end_slope) > 1e-12) throw std::runtime_error("zeta shape: taper slope mismatch");
    double tail = (0.5 - taper_drop) / s3;     // [y3, y3+tail] at constant slope
    if (tail < 0.0) throw std::runtime_error("zeta shape: tail budget negative");

    ZetaShape z;
    double y1 = ramp + core + ramp + pad;
    double y2 = y1 + w12;
    double y3 = y2 + w23;
    z.b = {0.0, ramp, ramp + core, y1, y2, y3, y3 + tail, y3 + tail + taper / 2.0,
           y3 + tail + taper};
    z.dd = {0.0, -mc, -mc, 0.0, m, m, 0.0, mt, 0.0};
    zeta_detail::integrate(z, 0.5);
    z.y0 = 0.0;
    z.y1 = y1;
    z.y2 = y2;
    z.y3 = y3;
    z.y4 = z.b.back();
    return z;
}

// --- the constructed subsolution u_{v,0} ------------------------------------------

struct ZetaProfile {
    ZetaShape shape;
    Kernel kernel;
    double eta = 0.25;
    double C = 0.0;        // front constant: profile argument eta|x| - 200 - C t
    double C_prime = 0.0;  // (1/2) inf_{u<=1/2} f0(u)/u
    double C_second = 0.0; // measured min of L(profile) on the [y2,y3] band
    double R = 1.0;        // kernel truncation radius used in the checks
    double v0 = 0.5;
    double margin_43 = 0.0, margin_45 = 0.0;  // discrete check margins

    double profile_arg(double t, double x) const { return eta * std::fabs(x) - 200.0 - C * t; }
    double amplitude(double v, double t) const {
        return std::min(std::exp(C * t / 2.0) * v, v0);
    }
    // u_{v,0}(t,x) = ( amp * 2 zeta(eta|x| - 200 - C t) )_+
    double subsolution(double v, double t, double x) const {
        double val = amplitude(v, t) * 2.0 * shape.zeta(profile_arg(t, x));
        return std::max(val, 0.0);
    }
    // radius where the profile argument equals y (kinks of the truncation)
    double radius_of(double y, double t) const { return (y + 200.0 + C * t) / eta; }
    double plateau_radius(double t) const { return radius_of(shape.y0, t); }
    double zero_radius(double t) const { return radius_of(shape.y3, t); }
    double level_quarter_radius(double t) const { return radius_of(shape.y2, t); }
};

// C' from the reaction's homogeneous lower envelope f0(u) = inf_fu0 * g(u):
// C' = (1/2) inf_{u in (0, 1/2]} f0(u)/u.
inline double zeta_c_prime(const KppReaction& r) {
    double inf_fu0 = r.inf_fu0();
    double m = 1e300;
    for (int i = 1; i <= 512; ++i) {
        double u = 0.5 * i / 512.0;
        m = std::min(m, g_eval(r.g, u) / u);
    }
    return 0.5 * inf_fu0 * m;
}

struct ZetaSearchOptions {
    double eta_start = 0.25;
    double eta_shrink = 0.7;
    int max_shrinks = 24;
    double quad_cell = 0.2;  // nu-quadrature cell width for the profile checks
};

// Chooses R and eta so the discrete analogs of the three profile inequalities
// hold with margin >= 0:
//  (a) L phi + C' phi >= 0 where phi >= 1/4 (plateau & concave side)
//  (b) C'' := min L phi > 0 on the band phi in [0, 1/4]
//  (c) L phi + 2 C' phi - C (|grad phi| + phi) >= 0 wherever phi >= 0,
//      with C = min{C', C''}/2.
inline ZetaProfile zeta_profile(const Kernel& kernel, const KppReaction& reaction,
                                const ZetaSearchOptions& opt = ZetaSearchOptions{}) {
    ZetaProfile P;
    P.shape = build_zeta_shape();
    P.kernel = kernel;
    P.C_prime = zeta_c_prime(reaction);
    if (P.C_prime <= 0.0) throw std::invalid_argument("zeta_profile: C' must be positive");
    P.R = kernel.reach(std::min(1e-8, P.C_prime * 1e-4));

    const ZetaShape& Z = P.shape;
    double eta = opt.eta_start;
    for (int trial = 0;; ++trial) {
        if (trial > opt.max_shrinks)
            throw std::runtime_error("zeta_profile: eta search failed (kernel too weak near 0)");
        // unit profile phi(x) = zeta(eta x - 200) on x >= 0, evaluated radially
        auto phi = [&](double x) { return Z.zeta(eta * std::fabs(x) - 200.0); };
        auto Lphi = [&](double x) {
            return nonlocal_apply_quadrature(kernel, phi, x, P.R, {}, opt.quad_cell);
        };
        // sample arguments across the profile
        bool ok = true;
        double c2 = 1e300, m43 = 1e300;
        const int N = 160;
        std::vector<double> args;
        for (int i = 0; i <= N; ++i) args.push_back(-3.0 + (Z.y4 + 3.0 - (-3.0)) * i / N);
        // refine near the working bands
        for (int i = 0; i <= 40; ++i) args.push_back(Z.y2 + (Z.y3 - Z.y2) * i / 40.0);
        std::vector<std::pair<double, double>> samples;  // (arg, L phi)
        for (double a : args) {
            double x = (a + 200.0) / eta;
            samples.emplace_back(a, Lphi(x));
        }
        for (const auto& [a, L] : samples) {
            double val = Z.zeta(a);
            if (val >= 0.25 - 1e-12) m43 = std::min(m43, L + P.C_prime * val);
            if (val >= -1e-12 && val <= 0.25 + 1e-12) c2 = std::min(c2, L);
        }
        if (m43 < 0.0 || c2 <= 0.0) ok = false;
        double Cbig = 0.5 * std::min(P.C_prime, c2);
        double m45 = 1e300;
        if (ok) {
            for (const auto& [a, L] : samples) {
                double val = Z.zeta(a);
                if (val < 0.0) continue;
                double grad = eta * std::fabs(Z.zeta_p(a));
                m45 = std::min(m45, L + 2.0 * P.C_prime * val - Cbig * (grad + val));
            }
            if (m45 < 0.0) ok = false;
        }
        if (ok) {
            P.eta = eta;
            P.C = Cbig;
            P.C_second = c2;
            P.margin_43 = m43;
            P.margin_45 = m45;
            return P;
        }
        eta *= opt.eta_shrink;
    }
}

// Residual of the moving truncated subsolution on grid nodes and times:
//   L u + f(t,x,u) - u_t  with u = u_{v,0}; u_t by the worse one-sided quotient.
struct ZetaResidualReport {
    double min_residual = 1e300;
    double at_x = 0.0, at_t = 0.0;
    std::size_t nodes = 0;
};

inline ZetaResidualReport zeta_residual_check(const ZetaProfile& P, const KppReaction& reaction,
                                              double v, const std::vector<double>& times,
                                              double x_max, double dx, double eps_t = 1e-7) {
    ZetaResidualReport rep;
    for (double t : times) {
        std::vector<double> kinks = {P.zero_radius(t), -P.zero_radius(t)};
        auto u_now = [&](double x) { return P.subsolution(v, t, x); };
        for (double x = 0.0; x <= x_max; x += dx) {
            double uu = u_now(x);
            double L = nonlocal_apply_quadrature(P.kernel, u_now, x, P.R, kinks, 0.2);
            double up = P.subsolution(v, t + eps_t, x);
            double um = P.subsolution(v, t - eps_t, x);
            double ut = std::max((uu - um) / eps_t, (up - uu) / eps_t);
            double res = L + reaction.eval(t, x, uu) - ut;
            ++rep.nodes;
            if (res < rep.min_residual) {
                rep.min_residual = res;
                rep.at_x = x;
                rep.at_t = t;
            }
        }
    }
    return rep;
}

}  // namespace kpplab
