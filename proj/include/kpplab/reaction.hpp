#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "kpplab/common.hpp"
#include "kpplab/grid.hpp"

namespace kpplab {

// Environments (homogenization module) plug into coefficient fields through
// this interface. Fields built on it must be separable in time:
//   value(t,x) = base(x) * temporal(t),  temporal periodic with period().
// Solvers cache base() on the grid once and apply the scalar factor per step.
class EnvBase {
public:
    virtual ~EnvBase() = default;
    virtual double base(double x, double y) const = 0;
    virtual double temporal(double t) const = 0;
    virtual double period() const = 0;
    virtual double inf_value() const = 0;
    virtual double sup_value() const = 0;
};

struct TabulatedField {
    // samples on a regular (t,x[,y]) lattice loaded from CSV; nearest-in-t,
    // multilinear-in-x interpolation
    int dim = 1;
    double t0 = 0, dt = 1;
    int nt = 1;
    GridState slice0;                 // spatial layout template
    std::vector<std::vector<double>>  // per time index, node values
        values;
};

enum class FuKind { constant, two_plus_sin_x, sinx_cos2pit, environment, tabulated };

// Scalar space-time coefficient, e.g. f_u(t,x,0) or a diffusion entry.
struct SpaceTimeField {
    FuKind kind = FuKind::constant;
    double c0 = 1.0;  // constant value, or additive base where noted
    std::shared_ptr<const EnvBase> env;
    std::shared_ptr<const TabulatedField> tab;

    double operator()(double t, double x, double y = 0.0) const {
        switch (kind) {
            case FuKind::constant: return c0;
            case FuKind::two_plus_sin_x: return 2.0 + std::sin(x);
            case FuKind::sinx_cos2pit: return 2.0 + std::sin(x) * std::cos(2.0 * M_PI * t);
            case FuKind::environment: return env->base(x, y) * env->temporal(t);
            case FuKind::tabulated: return tab_eval(t, x, y);
        }
        return c0;
    }

    bool is_const() const { return kind == FuKind::constant; }
    // separable fields admit a cached spatial base and a scalar in t
    bool is_separable() const {
        return kind == FuKind::constant || kind == FuKind::two_plus_sin_x ||
               kind == FuKind::environment;
    }
    double base(double x, double y = 0.0) const {
        switch (kind) {
            case FuKind::constant: return c0;
            case FuKind::two_plus_sin_x: return 2.0 + std::sin(x);
            case FuKind::environment: return env->base(x, y);
            default: return (*this)(0.0, x, y);
        }
    }
    double temporal(double t) const {
        return kind == FuKind::environment ? env->temporal(t) : 1.0;
    }

    double inf_bound() const {
        switch (kind) {
            case FuKind::constant: return c0;
            case FuKind::two_plus_sin_x: return 1.0;
            case FuKind::sinx_cos2pit: return 1.0;
            case FuKind::environment: return env->inf_value();
            case FuKind::tabulated: return tab_extreme(false);
        }
        return c0;
    }
    double sup_bound() const {
        switch (kind) {
            case FuKind::constant: return c0;
            case FuKind::two_plus_sin_x: return 3.0;
            case FuKind::sinx_cos2pit: return 3.0;
            case FuKind::environment: return env->sup_value();
            case FuKind::tabulated: return tab_extreme(true);
        }
        return c0;
    }

    static SpaceTimeField constant(double v) {
        SpaceTimeField f;
        f.kind = FuKind::constant;
        f.c0 = v;
        return f;
    }

private:
    double tab_eval(double t, double x, double y) const {
        const TabulatedField& T = *tab;
        int it = 0;
        if (T.nt > 1) {
            it = static_cast<int>(std::lround((t - T.t0) / T.dt));
            it = std::clamp(it, 0, T.nt - 1);
        }
        GridState s = T.slice0;
        s.v = T.values[it];
        return interpolate(s, x, y);
    }
    double tab_extreme(bool want_max) const {
        double m = want_max ? -1e300 : 1e300;
        for (const auto& sl : tab->values)
            for (double v : sl) m = want_max ? std::max(m, v) : std::min(m, v);
        return m;
    }
};

// --- KPP reactions -----------------------------------------------------------
// All reactions here have the product form f(t,x,u) = fu0(t,x) * g(u) with
// g'(0) = 1 (except the invalid fixtures used as negative tests), so
// f_u(t,x,0) = fu0(t,x) analytically.

enum class GKind {
    linear_cap,       // min{u, 1-u}, the linearized template
    logistic,         // u(1-u)
    quad_degenerate,  // u^2(1-u): g'(0)=0, fails the KPP axioms
    hump,             // u(0.5+u)(1-u)/0.5 scaled so g'(0)=1 but f/u increases near 0
};

inline double g_eval(GKind k, double u) {
    switch (k) {
        case GKind::linear_cap: return std::min(u, 1.0 - u);
        case GKind::logistic: return u * (1.0 - u);
        case GKind::quad_degenerate: return u * u * (1.0 - u);
        case GKind::hump: return u * (0.5 + u) * (1.0 - u) / 0.5;
    }
    return 0.0;
}

inline double g_deriv0(GKind k) {
    switch (k) {
        case GKind::linear_cap: return 1.0;
        case GKind::logistic: return 1.0;
        case GKind::quad_degenerate: return 0.0;
        case GKind::hump: return 1.0;
    }
    return 0.0;
}

inline double g_lipschitz(GKind k) {
    switch (k) {
        case GKind::linear_cap: return 1.0;
        case GKind::logistic: return 1.0;
        case GKind::quad_degenerate: return 1.0;
        case GKind::hump: return 2.6;
    }
    return 1.0;
}

inline const char* g_name(GKind k) {
    switch (k) {
        case GKind::linear_cap: return "linear_cap";
        case GKind::logistic: return "logistic";
        case GKind::quad_degenerate: return "quad_degenerate";
        case GKind::hump: return "hump";
    }
    return "?";
}

struct KppReaction {
    SpaceTimeField fu0;  // f_u(t,x,0)
    GKind g = GKind::logistic;
    double gamma = 0.5;        // threshold for the monotone second claim
    bool monotone_flag = true;  // u -> f/u non-increasing on (0,gamma]
    double lipschitz_bound = 1.0;

    double eval(double t, double x, double u, double y = 0.0) const {
        return fu0(t, x, y) * g_eval(g, u);
    }
    double deriv_at_zero(double t, double x, double y = 0.0) const {
        return fu0(t, x, y) * g_deriv0(g);
    }
    double g_of(double u) const { return g_eval(g, u); }

    // defect modulus of the scalar profile: sup_u'<=u (1 - g(u')/u'), scaled
    // by sup fu0 when assembled into psi
    double inf_fu0() const { return fu0.inf_bound(); }
    double sup_fu0() const { return fu0.sup_bound(); }

    static KppReaction make(GKind g, SpaceTimeField fu0) {
        KppReaction r;
        r.g = g;
        r.fu0 = std::move(fu0);
        r.lipschitz_bound = r.sup_fu0() * g_lipschitz(g);
        switch (g) {
            case GKind::linear_cap:
            case GKind::logistic:
                r.gamma = 0.5;
                r.monotone_flag = true;
                break;
            default:
                r.gamma = 0.5;
                r.monotone_flag = false;
                break;
        }
        return r;
    }
    static KppReaction logistic(double fu0_const = 1.0) {
        return make(GKind::logistic, SpaceTimeField::constant(fu0_const));
    }
    static KppReaction linear_cap(double fu0_const = 1.0) {
        return make(GKind::linear_cap, SpaceTimeField::constant(fu0_const));
    }
};

// linearized template f'(t,x,u) = f_u(t,x,0) min{u, 1-u}
inline KppReaction linearize(const KppReaction& r) {
    KppReaction lin = KppReaction::make(GKind::linear_cap, r.fu0);
    return lin;
}

// --- coefficient fields -------------------------------------------------------

struct CoefficientField {
    int dim = 1;
    SpaceTimeField a11 = SpaceTimeField::constant(1.0);
    SpaceTimeField a12 = SpaceTimeField::constant(0.0);
    SpaceTimeField a22 = SpaceTimeField::constant(1.0);
    SpaceTimeField b1 = SpaceTimeField::constant(0.0);
    SpaceTimeField b2 = SpaceTimeField::constant(0.0);
    double lambda = 1.0;   // ellipticity lower bound
    double Lambda = 1.0;   // upper bound on eigenvalues of A
    double b_sup = 0.0;    // sup |b|
    double time_period = 0.0;  // 0 = not declared

    bool uniform() const {
        return a11.is_const() && a12.is_const() && a22.is_const() && b1.is_const() &&
               b2.is_const();
    }

    static CoefficientField laplacian_1d(double lam = 1.0, double b = 0.0) {
        CoefficientField f;
        f.dim = 1;
        f.a11 = SpaceTimeField::constant(lam);
        f.b1 = SpaceTimeField::constant(b);
        f.lambda = lam;
        f.Lambda = lam;
        f.b_sup = std::fabs(b);
        return f;
    }
    static CoefficientField laplacian_2d(double lam = 1.0, double bx = 0.0, double by = 0.0) {
        CoefficientField f;
        f.dim = 2;
        f.a11 = SpaceTimeField::constant(lam);
        f.a22 = SpaceTimeField::constant(lam);
        f.b1 = SpaceTimeField::constant(bx);
        f.b2 = SpaceTimeField::constant(by);
        f.lambda = lam;
        f.Lambda = lam;
        f.b_sup = std::hypot(bx, by);
        return f;
    }
};

// gamma from the virtual-linearity proofs: min{alpha, 1/(2 sqrt(beta*lambda)), 1/2}
// with alpha <= min{1/max|A_ij|, 1/sup fu0}; the supersolution speed bound is
// a = (1+d+d^2)/gamma.
inline double proof_gamma(const KppReaction& r, const CoefficientField& f) {
    double maxA = std::max({std::fabs(f.a11.sup_bound()), std::fabs(f.a12.sup_bound()),
                            std::fabs(f.a22.sup_bound())});
    double alpha = std::min(1.0 / std::max(maxA, 1e-300), 1.0 / std::max(r.sup_fu0(), 1e-300));
    double beta = r.inf_fu0();
    return std::min({alpha, 1.0 / (2.0 * std::sqrt(beta * f.lambda)), 0.5});
}

inline double supersolution_speed(const KppReaction& r, const CoefficientField& f) {
    double g = proof_gamma(r, f);
    double d = f.dim;
    return (1.0 + d + d * d) / g;
}

// --- validation ----------------------------------------------------------------

struct SamplePlan {
    int nt = 8, nx = 64, nu = 64;
    double t_max = 4.0;
    double x_min = -16.0, x_max = 16.0;
    double u_min = 1e-4;  // log-spaced u samples down to here
    std::vector<double> u_samples() const {
        std::vector<double> us(nu);
        // log-spaced near 0, then linear fill of (0,1)
        for (int i = 0; i < nu; ++i) {
            double s = static_cast<double>(i) / (nu - 1);
            us[i] = std::exp(std::log(u_min) * (1.0 - s));  // u_min .. 1
            us[i] = std::min(us[i], 1.0 - 1e-6);
        }
        std::sort(us.begin(), us.end());
        return us;
    }
};

struct AxiomCheck {
    std::string name;
    bool pass = true;
    double worst = 0.0;  // worst violation magnitude
};

struct ValidationReport {
    bool pass = true;
    std::vector<AxiomCheck> axioms;
    std::vector<double> u_samples;
    std::vector<double> psi;  // measured defect modulus, monotone envelope
    double inf_fu0 = 0.0;
    double tol = 0.0;

    double psi_at(double u) const {
        // monotone tabulated function; evaluate by upper envelope interpolation
        if (u_samples.empty()) return 0.0;
        auto it = std::lower_bound(u_samples.begin(), u_samples.end(), u);
        if (it == u_samples.end()) return psi.back();
        std::size_t k = static_cast<std::size_t>(it - u_samples.begin());
        return psi[k];
    }
};

inline ValidationReport validate_kpp(const KppReaction& r, const CoefficientField& field,
                                     const SamplePlan& plan = SamplePlan{}) {
    ValidationReport rep;
    rep.tol = 1e-12 * std::max(1.0, r.lipschitz_bound);
    auto us = plan.u_samples();
    rep.u_samples = us;
    rep.psi.assign(us.size(), 0.0);

    AxiomCheck zero{"f(.,.,0)=0 and f(.,.,1)=0"};
    AxiomCheck dominated{"f(t,x,u) <= f_u(t,x,0) u"};
    AxiomCheck positive_slope{"inf f_u(.,.,0) > 0"};
    AxiomCheck positive_mid{"inf f(t,x,u) > 0 for u in (0,1)"};
    AxiomCheck elliptic{"A >= lambda I at samples"};

    std::vector<double> min_f_per_u(us.size(), 1e300);
    double inf_fu0 = 1e300;
    for (int it = 0; it < plan.nt; ++it) {
        double t = plan.t_max * it / std::max(1, plan.nt - 1);
        for (int ix = 0; ix < plan.nx; ++ix) {
            double x = plan.x_min + (plan.x_max - plan.x_min) * ix / std::max(1, plan.nx - 1);
            double fu0 = r.deriv_at_zero(t, x);
            inf_fu0 = std::min(inf_fu0, fu0);
            double z0 = std::fabs(r.eval(t, x, 0.0));
            double z1 = std::fabs(r.eval(t, x, 1.0));
            zero.worst = std::max({zero.worst, z0, z1});
            // ellipticity: smallest eigenvalue of [[a11,a12],[a12,a22]]
            double a11 = field.a11(t, x), a12 = field.dim == 2 ? field.a12(t, x) : 0.0,
                   a22 = field.dim == 2 ? field.a22(t, x) : field.lambda;
            double mine;
            if (field.dim == 1) {
                mine = a11;
            } else {
                double tr = a11 + a22, det = a11 * a22 - a12 * a12;
                mine = tr / 2.0 - std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
            }
            elliptic.worst = std::max(elliptic.worst, field.lambda - mine);
            for (std::size_t k = 0; k < us.size(); ++k) {
                double u = us[k];
                double f = r.eval(t, x, u);
                dominated.worst = std::max(dominated.worst, f - fu0 * u);
                min_f_per_u[k] = std::min(min_f_per_u[k], f);
                rep.psi[k] = std::max(rep.psi[k], fu0 - f / u);
            }
        }
    }
    rep.inf_fu0 = inf_fu0;
    if (zero.worst > rep.tol) {
        zero.pass = false;
        rep.pass = false;
    }
    if (dominated.worst > rep.tol) {
        dominated.pass = false;
        rep.pass = false;
    }
    if (inf_fu0 <= rep.tol) {
        positive_slope.pass = false;
        positive_slope.worst = -inf_fu0;
        rep.pass = false;
    }
    double global_min_f = *std::min_element(min_f_per_u.begin(), min_f_per_u.end());
    positive_mid.worst = std::max(0.0, -global_min_f);
    if (global_min_f <= 0.0) {
        positive_mid.pass = false;
        rep.pass = false;
    }
    if (elliptic.worst > 1e-9) {
        elliptic.pass = false;
        rep.pass = false;
    }
    if (zero.worst > 1e-6 * std::max(1.0, r.lipschitz_bound))
        throw std::invalid_argument("validate_kpp: eval(t,x,0) far from 0; not a reaction");

    // monotone envelope so psi is non-decreasing
    for (std::size_t k = 1; k < rep.psi.size(); ++k)
        rep.psi[k] = std::max(rep.psi[k], rep.psi[k - 1]);
    for (auto& p : rep.psi) p = std::max(p, 0.0);

    rep.axioms = {zero, dominated, positive_slope, positive_mid, elliptic};
    return rep;
}

struct GateResult {
    bool ok = false;
    double margin = 0.0;  // B = 2 sqrt(inf fu0 * lambda) - b_sup
};

// Theorem hypothesis gate: |b|^2 < 4 lambda inf f_u(.,.,0)
inline GateResult gate_theorem11(const KppReaction& r, const CoefficientField& f) {
    GateResult g;
    double inf_fu0 = r.inf_fu0();
    g.margin = 2.0 * std::sqrt(inf_fu0 * f.lambda) - f.b_sup;
    g.ok = f.b_sup * f.b_sup < 4.0 * f.lambda * inf_fu0;
    return g;
}

}  // namespace kpplab
