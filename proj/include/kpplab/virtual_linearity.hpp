#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kpplab/common.hpp"
#include "kpplab/grid.hpp"
#include "kpplab/jobs.hpp"
#include "kpplab/local_solver.hpp"
#include "kpplab/reaction.hpp"

namespace kpplab {

// Theorem-style sandwich experiment: the full nonlinear solution u against the
// envelope of cube-restricted solutions u_n' evolved under the linearized
// template reaction, compared at time shifts t -> t - delta*t (lower) and
// t -> t + t^delta or t + delta*t (upper).

enum class EnvelopeVariant { sup, capped };
enum class ShiftRule { t_power_delta, delta_t };

struct SandwichOptions {
    double cube_scale = 1.0;
    double cadence = 2.0;    // spacing of sampled report times
    double t_start = 4.0;
    EnvelopeVariant variant = EnvelopeVariant::sup;
    ShiftRule shift_rule = ShiftRule::t_power_delta;
    bool force_gate = false;  // run the inadmissible-advection negative control
    bool skip_horizon_check = false;
    double dt = 0.0;
    int threads = 1;
};

struct SandwichReport {
    double delta = 0.0;
    std::vector<double> times;
    std::vector<double> lower_violation;  // max_x (env(t - dt_shift) - u(t))_+
    std::vector<double> upper_violation;  // max_x (u(t) - env(t + up_shift))_+
    std::vector<double> phi_est;          // smallest phi fixing both at this t
    double tau_delta = 0.0;               // burn-in: phi_est non-increasing beyond
    std::size_t active_cubes = 0;
    bool gate_ok = true;
    double gate_margin = 0.0;

    double phi_at(double t, double tol = 1e-9) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::fabs(times[i] - t) <= tol) return phi_est[i];
        throw std::invalid_argument("phi_at: time not sampled");
    }
    double max_phi_after(double t) const {
        double m = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i)
            if (times[i] >= t) m = std::max(m, phi_est[i]);
        return m;
    }
};

namespace detail {

inline double support_width(const GridState& u0) {
    const Grid& g = u0.grid;
    double lo = 1e300, hi = -1e300;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (u0.at(i, j) != 0.0) {
                lo = std::min({lo, g.x(i), g.dim == 2 ? g.y(j) : g.x(i)});
                hi = std::max({hi, g.x(i), g.dim == 2 ? g.y(j) : g.x(i)});
            }
    return hi > lo ? hi - lo : 1.0;
}

inline void horizon_check(const LocalProblem& p, double t_max) {
    double a = supersolution_speed(p.reaction, p.field);
    double need = a * t_max;
    double have = std::min(std::fabs(p.grid.x0), std::fabs(p.grid.xmax()));
    if (p.grid.dim == 2)
        have = std::min({have, std::fabs(p.grid.y0), std::fabs(p.grid.ymax())});
    if (have < need)
        throw ConfigError("domain too small for t_end: supersolution horizon a*T=" + fmt_g(need) +
                          " exceeds half-width " + fmt_g(have));
}

inline GridState make_envelope(const std::vector<const GridState*>& members,
                               EnvelopeVariant variant) {
    return variant == EnvelopeVariant::sup ? envelope(members) : capped_sum(members);
}

inline double burn_in(const std::vector<double>& t, const std::vector<double>& phi,
                      double tol = 1e-9) {
    if (t.empty()) return 0.0;
    std::size_t k = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (phi[i] > phi[i - 1] + tol) k = i;
    return t[k];
}

}  // namespace detail

struct MemberRuns {
    std::vector<Trajectory> trajs;  // one per active cube, deterministic order
    std::vector<double> times;
};

inline MemberRuns solve_members(const LocalProblem& base, const KppReaction& member_reaction,
                                const CubeFamily& fam, const std::vector<double>& times,
                                double dt, int threads) {
    MemberRuns runs;
    runs.times = times;
    std::vector<const GridState*> inits = member_ptrs(fam);
    runs.trajs = run_indexed_jobs<Trajectory>(inits.size(), threads, [&](std::size_t k) {
        LocalProblem mp = base;
        mp.reaction = member_reaction;
        mp.initial = *inits[k];
        return solve_at(mp, times, dt);
    });
    return runs;
}

inline SandwichReport run_sandwich_impl(const LocalProblem& p, double delta, double t_end,
                                        const SandwichOptions& opt, bool members_under_f) {
    if (delta <= 0.0 || delta > 0.5) throw std::invalid_argument("delta must be in (0, 1/2]");
    GateResult gate = gate_theorem11(p.reaction, p.field);
    if (!gate.ok && !opt.force_gate)
        throw ConfigError("gate_theorem11 fails: |b|^2 >= 4 lambda inf f_u(0); margin " +
                          fmt_g(gate.margin));

    auto up_shift = [&](double t) {
        return opt.shift_rule == ShiftRule::t_power_delta ? std::pow(t, delta) : delta * t;
    };

    std::vector<double> sample_ts;
    for (long long k = 0;; ++k) {
        double t = opt.t_start + k * opt.cadence;
        if (t > t_end + 1e-12) break;
        sample_ts.push_back(t);
    }
    if (sample_ts.empty() || std::fabs(sample_ts.back() - t_end) > 1e-9)
        sample_ts.push_back(t_end);

    double t_max = t_end + up_shift(t_end);
    if (!opt.skip_horizon_check) detail::horizon_check(p, t_max);

    // full solution under f
    double dt = opt.dt > 0 ? opt.dt : stable_dt(p);
    Trajectory u = solve_at(p, sample_ts, dt);

    // members under f' (or f itself for the monotone variant)
    CubeFamily fam = decompose(p.initial, opt.cube_scale);
    KppReaction member_reaction = members_under_f ? p.reaction : linearize(p.reaction);
    std::vector<double> member_ts;
    for (double t : sample_ts) {
        member_ts.push_back(t - delta * t);
        member_ts.push_back(t + up_shift(t));
    }
    std::sort(member_ts.begin(), member_ts.end());
    member_ts.erase(std::unique(member_ts.begin(), member_ts.end(),
                                [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
                    member_ts.end());
    MemberRuns mem = solve_members(p, member_reaction, fam, member_ts, dt, opt.threads);

    auto member_states_at = [&](double t) {
        std::vector<const GridState*> out;
        for (const auto& tr : mem.trajs) out.push_back(&tr.at_time(t, 1e-9));
        return out;
    };

    SandwichReport rep;
    rep.delta = delta;
    rep.gate_ok = gate.ok;
    rep.gate_margin = gate.margin;
    rep.active_cubes = fam.members.size();
    for (std::size_t k = 0; k < sample_ts.size(); ++k) {
        double t = sample_ts[k];
        GridState env_lo = detail::make_envelope(member_states_at(t - delta * t), opt.variant);
        GridState env_hi = detail::make_envelope(member_states_at(t + up_shift(t)), opt.variant);
        const GridState& ut = u.snaps[k];
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < ut.v.size(); ++i) {
            lo = std::max(lo, env_lo.v[i] - ut.v[i]);
            hi = std::max(hi, ut.v[i] - env_hi.v[i]);
        }
        rep.times.push_back(t);
        rep.lower_violation.push_back(std::max(0.0, lo));
        rep.upper_violation.push_back(std::max(0.0, hi));
        rep.phi_est.push_back(std::max({0.0, lo, hi}));
    }
    rep.tau_delta = detail::burn_in(rep.times, rep.phi_est);
    return rep;
}

inline SandwichReport run_sandwich(const LocalProblem& p, double delta, double t_end,
                                   const SandwichOptions& opt = SandwichOptions{}) {
    return run_sandwich_impl(p, delta, t_end, opt, /*members_under_f=*/false);
}

// Second claim of the theorem: members evolved under f itself; the lower
// bound holds with zero shift and zero phi by the comparison principle.
struct MonotoneReport {
    SandwichReport sandwich;
    double zero_shift_violation = 0.0;  // max over t,x of (sup_n u_n'(t,x) - u(t,x))_+
};

inline MonotoneReport run_monotone_variant(const LocalProblem& p, double delta, double t_end,
                                           const SandwichOptions& opt = SandwichOptions{}) {
    const KppReaction& r = p.reaction;
    if (!r.monotone_flag)
        throw ConfigError("run_monotone_variant: reaction does not have a monotone f/u (flag false)");
    // sampled check of sup_{u>=gamma} f/u = f(gamma)/gamma
    double cap = g_eval(r.g, r.gamma) / r.gamma;
    for (int k = 0; k <= 200; ++k) {
        double uu = r.gamma + (1.0 - 1e-9 - r.gamma) * k / 200.0;
        if (g_eval(r.g, uu) / uu > cap + 1e-12)
            throw ConfigError("run_monotone_variant: sup_{u>=gamma} f/u exceeds f(gamma)/gamma");
    }

    MonotoneReport out;
    out.sandwich = run_sandwich_impl(p, delta, t_end, opt, /*members_under_f=*/true);

    // zero-shift lower bound, exact comparison on the same sample times
    std::vector<double> sample_ts = out.sandwich.times;
    double dt = opt.dt > 0 ? opt.dt : stable_dt(p);
    Trajectory u = solve_at(p, sample_ts, dt);
    CubeFamily fam = decompose(p.initial, opt.cube_scale);
    MemberRuns mem = solve_members(p, p.reaction, fam, sample_ts, dt, opt.threads);
    for (std::size_t k = 0; k < sample_ts.size(); ++k) {
        std::vector<const GridState*> ms;
        for (const auto& tr : mem.trajs) ms.push_back(&tr.snaps[k]);
        GridState env = envelope(ms);
        for (std::size_t i = 0; i < env.v.size(); ++i)
            out.zero_shift_violation =
                std::max(out.zero_shift_violation, env.v[i] - u.snaps[k].v[i]);
    }
    out.zero_shift_violation = std::max(0.0, out.zero_shift_violation);
    return out;
}

// Comparison-principle bounds: for each s <= gamma and sampled t,
//   s e^{-psi(s) t} sup_n u_n'(t,x) <= u(t,x) <= gamma^{-1} sum_n u_n'(t,x).
struct Eq27Report {
    std::vector<double> s_samples;
    double max_lower_violation = 0.0;
    double max_upper_violation = 0.0;
};

inline Eq27Report eq27_bounds(const LocalProblem& p, const std::vector<double>& s_samples,
                              const ValidationReport& val, double t_end,
                              const SandwichOptions& opt = SandwichOptions{}) {
    double gamma = p.reaction.gamma;
    for (double s : s_samples)
        if (s <= 0 || s > gamma) throw std::invalid_argument("eq27_bounds: s must be in (0,gamma]");

    std::vector<double> sample_ts;
    for (long long k = 0;; ++k) {
        double t = opt.t_start + k * opt.cadence;
        if (t > t_end + 1e-12) break;
        sample_ts.push_back(t);
    }
    double dt = opt.dt > 0 ? opt.dt : stable_dt(p);
    Trajectory u = solve_at(p, sample_ts, dt);
    CubeFamily fam = decompose(p.initial, opt.cube_scale);
    MemberRuns mem = solve_members(p, linearize(p.reaction), fam, sample_ts, dt, opt.threads);

    Eq27Report rep;
    rep.s_samples = s_samples;
    for (std::size_t k = 0; k < sample_ts.size(); ++k) {
        std::vector<const GridState*> ms;
        for (const auto& tr : mem.trajs) ms.push_back(&tr.snaps[k]);
        GridState env = envelope(ms);
        GridState sum = node_sum(ms);
        double t = sample_ts[k];
        for (std::size_t i = 0; i < env.v.size(); ++i) {
            double uu = u.snaps[k].v[i];
            for (double s : s_samples) {
                double lower = s * std::exp(-val.psi_at(s) * t) * env.v[i];
                rep.max_lower_violation = std::max(rep.max_lower_violation, lower - uu);
            }
            rep.max_upper_violation = std::max(rep.max_upper_violation, uu - sum.v[i] / gamma);
        }
    }
    rep.max_lower_violation = std::max(0.0, rep.max_lower_violation);
    rep.max_upper_violation = std::max(0.0, rep.max_upper_violation);
    return rep;
}

}  // namespace kpplab
