#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "kpplab/common.hpp"
#include "kpplab/grid.hpp"
#include "kpplab/local_solver.hpp"
#include "kpplab/reaction.hpp"

namespace kpplab {

// Plateau subsolution ladder from the virtual-linearity proof (local case):
// radially symmetric, ballistically spreading plateaus at levels v_k -> 1.

struct PlateauProfile {
    double beta = 1.0, lambda = 1.0, B = 2.0;
    int dim = 1;
    double Lambda_up = 1.0;  // A <= Lambda I
    std::complex<double> z;  // second-quadrant root of lambda z^2 + (2 sqrt(beta lambda)-B/3) z + (beta-C)
    double C = 0.0;          // (B/4) sqrt(beta/lambda)
    double p = 0.0, q = 0.0; // plateau radius offset 3(d+Lambda)/B and speed B/3
    double y0 = 0, y1 = 0, y2 = 0, y3 = 0;
    double s1 = 0.0;         // xi'(y2) < 0, slope of the linear stretch
    double eq215_min_margin = 0.0;
    double eq215_worst_node = 0.0;

    double coeff1() const { return 2.0 * std::sqrt(beta * lambda) - B / 3.0; }

    double xi_tilde(double y) const {
        return std::exp(y * z.real()) * std::sin(y * z.imag());
    }
    double xi_tilde_p(double y) const {
        return std::exp(y * z.real()) *
               (z.real() * std::sin(y * z.imag()) + z.imag() * std::cos(y * z.imag()));
    }
    double xi(double y) const {
        if (y > y3) return 0.0;
        if (y >= y2) return xi_tilde(y);
        return xi_tilde(y2) + s1 * (y - y2);
    }
    double xi_p(double y) const {
        if (y > y3) return 0.0;
        if (y >= y2) return xi_tilde_p(y);
        return s1;
    }

    // C^2 concave completion below y1: zeta'(y) = s1 * S((y-y0)/W) on [y0,y1]
    // with the cubic smoothstep S; constant zeta(y0) below y0.
    double W() const { return y1 - y0; }
    double zeta(double y) const {
        if (y >= y1) return xi(y);
        if (y <= y0) return zeta_max();
        double r = (y - y0) / W();
        // zeta(y) = xi(y1) + |s1| W Integral_r^1 S, S(r)=3r^2-2r^3, int S = r^3 - r^4/2
        double I = 0.5 - (r * r * r - 0.5 * r * r * r * r);
        return xi(y1) - s1 * W() * I;
    }
    double zeta_p(double y) const {
        if (y >= y1) return xi_p(y);
        if (y <= y0) return 0.0;
        double r = (y - y0) / W();
        return s1 * (3.0 * r * r - 2.0 * r * r * r);
    }
    double zeta_pp(double y) const {
        if (y >= y1) {
            if (y > y3) return 0.0;
            if (y >= y2) {
                double re = z.real(), im = z.imag();
                return std::exp(y * re) *
                       ((re * re - im * im) * std::sin(y * im) + 2.0 * re * im * std::cos(y * im));
            }
            return 0.0;
        }
        if (y <= y0) return 0.0;
        double r = (y - y0) / W();
        return s1 * (6.0 * r - 6.0 * r * r) / W();
    }
    double zeta_max() const { return xi(y1) - s1 * W() * 0.5; }
};

// Equation-style residual of the completed profile at y:
// min{lambda, Lambda sgn zeta''}|zeta''| - (2 sqrt(beta lambda) - B/3)|zeta'| + (beta - C) zeta
inline double eq215_residual(const PlateauProfile& P, double y) {
    double zpp = P.zeta_pp(y), zp = P.zeta_p(y), zv = P.zeta(y);
    double first = (zpp >= 0.0 ? P.lambda : -P.Lambda_up) * std::fabs(zpp);
    return first - P.coeff1() * std::fabs(zp) + (P.beta - P.C) * zv;
}

inline PlateauProfile build_profile(double beta, double lambda, double B, int d,
                                    double Lambda_up) {
    if (B <= 0.0 || B > 2.0 * std::sqrt(beta * lambda) + 1e-12)
        throw std::invalid_argument("build_profile: need B in (0, 2 sqrt(beta lambda)]");
    PlateauProfile P;
    P.beta = beta;
    P.lambda = lambda;
    P.B = B;
    P.dim = d;
    P.Lambda_up = Lambda_up;
    P.C = (B / 4.0) * std::sqrt(beta / lambda);
    P.p = 3.0 * (d + Lambda_up) / B;
    P.q = B / 3.0;

    double co = P.coeff1();
    double disc = co * co - 4.0 * lambda * (beta - P.C);
    if (disc >= 0.0)
        throw std::runtime_error("build_profile: quadratic has real roots (discriminant >= 0)");
    P.z = std::complex<double>(-co / (2.0 * lambda), std::sqrt(-disc) / (2.0 * lambda));

    P.y3 = M_PI / P.z.imag();
    // greatest inflection point of xi_tilde below y3: tan(y Im) = -2 Re Im / (Re^2 - Im^2)
    double re = P.z.real(), im = P.z.imag();
    double ang = std::atan2(-2.0 * re * im, re * re - im * im);
    if (ang <= 0.0) ang += M_PI;
    P.y2 = ang / im;
    P.s1 = P.xi_tilde_p(P.y2);
    if (!(P.y2 > 0.0 && P.y2 < P.y3) || P.s1 >= 0.0)
        throw std::runtime_error("build_profile: inflection point search failed");

    // completion: pick y1 < y2 and widen the blend until the discrete margin
    // of the plateau inequality is nonnegative on a fine node set
    double gap = std::min(1.0, 0.45 * P.y2);
    P.y1 = P.y2 - gap;
    bool ok = false;
    for (double W = gap; W <= 4096.0 * gap; W *= 1.5) {
        P.y0 = P.y1 - W;
        double worst = 1e300, worst_y = P.y0;
        int N = 4000;
        for (int i = 0; i <= N; ++i) {
            double y = P.y0 + (P.y3 - P.y0) * i / N;
            double rres = eq215_residual(P, y);
            if (rres < worst) {
                worst = rres;
                worst_y = y;
            }
        }
        P.eq215_min_margin = worst;
        P.eq215_worst_node = worst_y;
        // the inequality is an identity at y2, so allow round-off there
        if (worst >= -1e-12 * beta) {
            ok = true;
            break;
        }
    }
    if (!ok)
        throw std::runtime_error("build_profile: smoothing search failed; worst node y=" +
                                 fmt_g(P.eq215_worst_node) + " margin=" +
                                 fmt_g(P.eq215_min_margin));
    return P;
}

// --- ladder ------------------------------------------------------------------

struct Ladder {
    PlateauProfile prof;
    double v_init = 0.0;  // starting level v <= v0
    double v0 = 0.0;      // psi(v0) <= C/2
    double L = 1.0;       // Lipschitz constant of f0 (>= 1 per construction)
    double sigma = 0.0;   // max{(2/C) ln 2, (y3-y0)/q}
    double t_v0 = 0.0;    // max{(2/C) ln(v0/v), (y3-y0)/q}
    std::vector<double> v;  // v[0]=v0 < v[1] < ... -> 1
    std::vector<double> r;  // r[k] = f0(v[k-1])/(2beta - C + L), k>=1

    int K() const { return static_cast<int>(v.size()) - 1; }
    double t_vk(int k) const { return t_v0 + k * sigma; }

    // closed-form subsolution members; rad = |x|
    double member(int k, double t, double rad) const {
        const PlateauProfile& P = prof;
        double zmax = P.zeta_max();
        // u_{v,0}
        double amp0 = std::min(std::exp(P.C * t / 2.0) * v_init, v0);
        double best = amp0 * P.zeta(rad + P.y0 - P.p - P.q * t) / zmax;
        for (int j = 1; j <= k; ++j) {
            double tj = t_vk(j - 1);
            if (t < tj) break;
            double chi_radius = P.y3 - P.y0 + P.p + P.q * (t - tj);
            if (rad >= chi_radius) continue;
            double amp = std::min(std::exp(P.C * (t - tj) / 2.0) * r[j], 2.0 * r[j]);
            double val = v[j - 1] - r[j] + amp * P.zeta(rad + P.y0 - P.p - P.q * (t - tj)) / zmax;
            best = std::max(best, val);
        }
        return best;
    }

    GridState member_state(int k, double t, const Grid& g) const {
        GridState s(g, t);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double rad = g.dim == 1 ? std::fabs(g.x(i)) : std::hypot(g.x(i), g.y(j));
                s.at(i, j) = member(k, t, rad);
            }
        return s;
    }
};

inline Ladder build_ladder(const PlateauProfile& P, const std::function<double(double)>& f0,
                           double v_init, const std::function<double(double)>& psi,
                           double L_f0 = 1.0) {
    Ladder lad;
    lad.prof = P;
    lad.L = std::max(1.0, L_f0);

    // v0: largest level with psi(v0) <= C/2, found on a fine grid
    double v0 = 0.0;
    for (int i = 1; i <= 4096; ++i) {
        double u = i / 4096.0 * 0.999;
        if (psi(u) <= P.C / 2.0) v0 = u;
    }
    if (v0 <= 0.0) throw std::runtime_error("build_ladder: no level with psi(v) <= C/2");
    lad.v0 = v0;
    if (v_init <= 0.0 || v_init > v0)
        throw std::invalid_argument("build_ladder: need v in (0, v0], v0=" + fmt_g(v0));
    lad.v_init = v_init;

    // f0 must be strictly positive inside (0,1)
    for (int i = 1; i < 64; ++i) {
        double u = i / 64.0;
        if (f0(u) <= 0.0)
            throw std::invalid_argument("build_ladder: f0 not strictly positive on (0,1)");
    }

    lad.sigma = std::max(2.0 / P.C * std::log(2.0), (P.y3 - P.y0) / P.q);
    lad.t_v0 = std::max(2.0 / P.C * std::log(v0 / v_init), (P.y3 - P.y0) / P.q);

    lad.v.push_back(v0);
    lad.r.push_back(0.0);
    double denom = 2.0 * P.beta - P.C + lad.L;
    for (int k = 1; k <= 4000; ++k) {
        double rk = f0(lad.v.back()) / denom;
        lad.r.push_back(rk);
        lad.v.push_back(lad.v.back() + rk);
        if (lad.v.back() >= 0.99) break;
    }
    return lad;
}

// --- verification ---------------------------------------------------------------

struct ResidualReport {
    double min_residual = 1e300;
    double at_x = 0.0, at_y = 0.0, at_t = 0.0;
    std::size_t nodes_checked = 0;
};

// Discrete residual L_h u + f(t,x,u) - u_t of a closed-form space-time function
// u(t, x) given by `member`, on the given grid and times. u_t is taken as the
// worse (larger) of the two one-sided difference quotients, which is the
// conservative choice at the level-cap kink.
inline ResidualReport verify_subsolution(const std::function<double(double, double)>& member,
                                         const CoefficientField& field, const KppReaction& reaction,
                                         const Grid& grid, const std::vector<double>& times,
                                         double eps_t = 1e-7) {
    ResidualReport rep;
    for (double t : times) {
        GridState s(grid, t);
        GridState sm(grid, t), sp(grid, t);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                double rad = grid.dim == 1 ? std::fabs(grid.x(i)) : std::hypot(grid.x(i), grid.y(j));
                s.at(i, j) = member(t, rad);
                sm.at(i, j) = member(t - eps_t, rad);
                sp.at(i, j) = member(t + eps_t, rad);
            }
        GridState Lu = apply_local_operator(s, field, t);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                double ut_lo = (s.at(i, j) - sm.at(i, j)) / eps_t;
                double ut_hi = (sp.at(i, j) - s.at(i, j)) / eps_t;
                double ut = std::max(ut_lo, ut_hi);
                double res =
                    Lu.at(i, j) + reaction.eval(t, grid.x(i), s.at(i, j), grid.y(j)) - ut;
                ++rep.nodes_checked;
                if (res < rep.min_residual) {
                    rep.min_residual = res;
                    rep.at_x = grid.x(i);
                    rep.at_y = grid.dim == 2 ? grid.y(j) : 0.0;
                    rep.at_t = t;
                }
            }
    }
    return rep;
}

// max over nodes of (member(k, t) - member(k-1, t))_+ at the gluing time
inline double ladder_ordering_violation(const Ladder& lad, int k, const Grid& g) {
    double t = lad.t_vk(k - 1);
    GridState hi = lad.member_state(k - 1, t, g);
    GridState lo = lad.member_state(k, t, g);
    double viol = 0.0;
    for (std::size_t i = 0; i < lo.v.size(); ++i) viol = std::max(viol, lo.v[i] - hi.v[i]);
    return viol;
}

// --- hair-trigger probe -----------------------------------------------------------

struct HairTriggerTable {
    double theta = 0.5, radius = 1.0;
    std::vector<double> levels;               // theta'
    std::vector<std::optional<double>> first_time;  // absent when t_end reached first
    double center_growth_rate = 0.0;  // fitted d/dt log u(t, 0) while u <= v0 ref level

    std::optional<double> at(double level) const {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (std::fabs(levels[i] - level) < 1e-12) return first_time[i];
        return std::nullopt;
    }
};

inline HairTriggerTable hair_trigger_probe(const LocalProblem& p, double theta, double radius,
                                           const std::vector<double>& levels, double t_end,
                                           double cadence = 0.25, double growth_ref = 0.25) {
    // precondition: initial datum dominates theta * chi_{B_1}
    for (int j = 0; j < p.grid.ny; ++j)
        for (int i = 0; i < p.grid.nx; ++i) {
            double rad = p.grid.dim == 1 ? std::fabs(p.grid.x(i))
                                         : std::hypot(p.grid.x(i), p.grid.y(j));
            if (rad <= 1.0 && p.initial.at(i, j) < theta - 1e-12)
                throw std::invalid_argument("hair_trigger_probe: initial < theta on B_1");
        }
    HairTriggerTable table;
    table.theta = theta;
    table.radius = radius;
    table.levels = levels;
    table.first_time.assign(levels.size(), std::nullopt);

    double dt = stable_dt(p, cadence);
    LocalStepper st(p, dt);
    std::vector<double> log_t, log_u;
    auto probe = [&](double t) {
        GridState s = st.snapshot();
        double mn = 1e300;
        for (int j = 0; j < p.grid.ny; ++j)
            for (int i = 0; i < p.grid.nx; ++i) {
                double rad = p.grid.dim == 1 ? std::fabs(p.grid.x(i))
                                             : std::hypot(p.grid.x(i), p.grid.y(j));
                if (rad <= radius) mn = std::min(mn, s.at(i, j));
            }
        for (std::size_t k = 0; k < levels.size(); ++k)
            if (!table.first_time[k] && mn >= levels[k]) table.first_time[k] = t;
        double uc = interpolate(s, 0.0, 0.0);
        if (uc > 0.0 && uc <= growth_ref) {
            log_t.push_back(t);
            log_u.push_back(std::log(uc));
        }
    };
    probe(0.0);
    long long k = 0;
    while (st.time() < t_end - 1e-12) {
        st.step();
        double next_probe = (k + 1) * cadence;
        if (st.time() + 1e-12 >= next_probe) {
            probe(st.time());
            ++k;
        }
    }
    if (log_t.size() >= 3) table.center_growth_rate = lsq_slope(log_t, log_u);
    return table;
}

}  // namespace kpplab
