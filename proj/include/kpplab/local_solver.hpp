#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kpplab/common.hpp"
#include "kpplab/grid.hpp"
#include "kpplab/reaction.hpp"

namespace kpplab {

// u_t = sum A_ij u_{x_i x_j} + sum b_i u_{x_i} + f(t,x,u), monotone explicit
// scheme: centered second differences, per-node upwind first-order advection,
// explicit Euler reaction, clamp to [0,1].

struct LocalProblem {
    CoefficientField field;
    KppReaction reaction;
    Grid grid;
    GridState initial;
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (grid.h > std::sqrt(field.lambda) / 4.0)
            w.push_back("grid spacing does not resolve diffusion (h > sqrt(lambda)/4)");
        double a11 = field.a11.sup_bound(), a22 = field.a22.sup_bound(),
               a12 = std::fabs(field.a12.sup_bound());
        if (field.dim == 2 && 2.0 * a12 > std::min(a11, a22))
            w.push_back("cross term breaks diagonal dominance (2|A12| > min(A11,A22)); "
                        "monotonicity not guaranteed");
        return w;
    }
};

// Explicit-scheme stability bound; the returned dt also divides `cadence`
// evenly when cadence > 0.
inline double stable_dt(const LocalProblem& p, double cadence = 0.0) {
    double h = p.grid.h;
    double d = p.field.dim;
    double Lf = p.reaction.lipschitz_bound;
    double raw = h * h / (2.0 * d * p.field.Lambda + h * d * p.field.b_sup + h * h * Lf);
    if (cadence > 0.0) {
        double n = std::ceil(cadence / raw - 1e-12);
        return cadence / n;
    }
    return raw;
}

struct StepStats {
    double max_clamp = 0.0;     // largest clamp magnitude applied on any step
    long long steps = 0;
};

class LocalStepper {
public:
    LocalStepper(const LocalProblem& p, double dt)
        : prob_(p), g_(p.grid), dt_(dt), time_(p.initial.time) {
        nx_ = g_.nx;
        ny_ = g_.ny;
        px_ = nx_ + 2;
        py_ = (g_.dim == 2) ? ny_ + 2 : 1;
        cur_.assign(static_cast<std::size_t>(px_) * (g_.dim == 2 ? py_ : 1), 0.0);
        nxt_ = cur_;
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) pat(cur_, i, j) = p.initial.at(i, j);
        cache_coefficients();
    }

    double time() const { return time_; }
    double dt() const { return dt_; }
    const StepStats& stats() const { return stats_; }

    void step() {
        apply_ghosts(cur_);
        if (uniform_)
            step_uniform();
        else
            step_generic();
        cur_.swap(nxt_);
        time_ += dt_;
        ++stats_.steps;
        if ((stats_.steps & 1023) == 0) check_finite();
    }

    void advance_to(double t_target) {
        while (time_ < t_target - 0.5 * dt_) step();
    }

    GridState snapshot() const {
        GridState s(g_, time_);
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) s.at(i, j) = pat_c(cur_, i, j);
        return s;
    }

    // state linearly interpolated in time between the previous and current step
    GridState snapshot_at(double t, const std::vector<double>& prev, double t_prev) const {
        GridState s(g_, t);
        double w = (t - t_prev) / (time_ - t_prev);
        w = std::clamp(w, 0.0, 1.0);
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i)
                s.at(i, j) = (1.0 - w) * prev[pidx(i, j)] + w * pat_c(cur_, i, j);
        return s;
    }

    const std::vector<double>& raw() const { return cur_; }
    std::size_t pidx(int i, int j) const {
        return static_cast<std::size_t>(g_.dim == 2 ? (j + 1) : 0) * px_ +
               static_cast<std::size_t>(i + 1);
    }

    void check_finite() const {
        for (double v : cur_)
            if (!std::isfinite(v))
                throw NumericalAbort("local solver: non-finite value at t=" + fmt_g(time_));
    }

private:
    double& pat(std::vector<double>& a, int i, int j) { return a[pidx(i, j)]; }
    double pat_c(const std::vector<double>& a, int i, int j) const { return a[pidx(i, j)]; }

    void cache_coefficients() {
        const CoefficientField& f = prob_.field;
        uniform_ = f.uniform();
        a11_ = f.a11.sup_bound();
        a12_ = f.a12.sup_bound();
        a22_ = f.a22.sup_bound();
        b1_ = f.b1.sup_bound();
        b2_ = f.b2.sup_bound();
        fu0_separable_ = prob_.reaction.fu0.is_separable();
        fu0_base_.assign(g_.size(), 0.0);
        if (fu0_separable_) {
            for (int j = 0; j < ny_; ++j)
                for (int i = 0; i < nx_; ++i)
                    fu0_base_[g_.idx(i, j)] = prob_.reaction.fu0.base(g_.x(i), g_.y(j));
        }
    }

    void apply_ghosts(std::vector<double>& a) {
        const bool mirror = (g_.bc == Boundary::neumann_zero);
        if (g_.dim == 1) {
            a[0] = mirror ? a[1] : 0.0;
            a[static_cast<std::size_t>(nx_) + 1] = mirror ? a[nx_] : 0.0;
            return;
        }
        for (int j = 0; j < ny_; ++j) {
            a[pidx(-1, j)] = mirror ? a[pidx(0, j)] : 0.0;
            a[pidx(nx_, j)] = mirror ? a[pidx(nx_ - 1, j)] : 0.0;
        }
        for (int i = -1; i <= nx_; ++i) {
            a[pidx(i, -1)] = mirror ? a[pidx(i, 0)] : 0.0;
            a[pidx(i, ny_)] = mirror ? a[pidx(i, ny_ - 1)] : 0.0;
        }
    }

    template <GKind GK>
    void step_uniform_g() {
        const double inv_h2 = 1.0 / (g_.h * g_.h);
        const double inv_h = 1.0 / g_.h;
        const double dt = dt_;
        const double tf = prob_.reaction.fu0.temporal(time_);
        const double a11 = a11_, b1 = b1_;
        double clampmax = 0.0;
        if (g_.dim == 1) {
            const double* c = cur_.data();
            double* n = nxt_.data();
            const double* fb = fu0_base_.data();
            if (b1 >= 0.0) {
                for (int i = 1; i <= nx_; ++i) {
                    double u = c[i];
                    double lap = a11 * (c[i + 1] - 2.0 * u + c[i - 1]) * inv_h2;
                    double adv = b1 * (c[i + 1] - u) * inv_h;
                    double un = u + dt * (lap + adv + tf * fb[i - 1] * g_eval(GK, u));
                    if (un > 1.0) { clampmax = std::max(clampmax, un - 1.0); un = 1.0; }
                    else if (un < 0.0) { clampmax = std::max(clampmax, -un); un = 0.0; }
                    n[i] = un;
                }
            } else {
                for (int i = 1; i <= nx_; ++i) {
                    double u = c[i];
                    double lap = a11 * (c[i + 1] - 2.0 * u + c[i - 1]) * inv_h2;
                    double adv = b1 * (u - c[i - 1]) * inv_h;
                    double un = u + dt * (lap + adv + tf * fb[i - 1] * g_eval(GK, u));
                    if (un > 1.0) { clampmax = std::max(clampmax, un - 1.0); un = 1.0; }
                    else if (un < 0.0) { clampmax = std::max(clampmax, -un); un = 0.0; }
                    n[i] = un;
                }
            }
        } else {
            const double a22 = a22_, a12 = a12_, b2 = b2_;
            const bool cross = (a12 != 0.0);
            for (int j = 0; j < ny_; ++j) {
                const double* rm = cur_.data() + pidx(0, j - 1);
                const double* r0 = cur_.data() + pidx(0, j);
                const double* rp = cur_.data() + pidx(0, j + 1);
                double* n = nxt_.data() + pidx(0, j);
                const double* fb = fu0_base_.data() + g_.idx(0, j);
                for (int i = 0; i < nx_; ++i) {
                    double u = r0[i];
                    double lap = a11 * (r0[i + 1] - 2.0 * u + r0[i - 1]) * inv_h2 +
                                 a22 * (rp[i] - 2.0 * u + rm[i]) * inv_h2;
                    if (cross)
                        lap += 2.0 * a12 * (rp[i + 1] + rm[i - 1] - rp[i - 1] - rm[i + 1]) *
                               (0.25 * inv_h2);
                    double adv = (b1 >= 0.0 ? b1 * (r0[i + 1] - u) : b1 * (u - r0[i - 1])) * inv_h;
                    adv += (b2 >= 0.0 ? b2 * (rp[i] - u) : b2 * (u - rm[i])) * inv_h;
                    double un = u + dt * (lap + adv + tf * fb[i] * g_eval(GK, u));
                    if (un > 1.0) { clampmax = std::max(clampmax, un - 1.0); un = 1.0; }
                    else if (un < 0.0) { clampmax = std::max(clampmax, -un); un = 0.0; }
                    n[i] = un;
                }
            }
        }
        stats_.max_clamp = std::max(stats_.max_clamp, clampmax);
    }

    void step_uniform() {
        if (!fu0_separable_) {
            step_generic();  // time-entangled fu0 goes through the generic path
            return;
        }
        switch (prob_.reaction.g) {
            case GKind::linear_cap: step_uniform_g<GKind::linear_cap>(); break;
            case GKind::logistic: step_uniform_g<GKind::logistic>(); break;
            case GKind::quad_degenerate: step_uniform_g<GKind::quad_degenerate>(); break;
            case GKind::hump: step_uniform_g<GKind::hump>(); break;
        }
    }

    void step_generic() {
        const double inv_h2 = 1.0 / (g_.h * g_.h);
        const double inv_h = 1.0 / g_.h;
        const double t = time_;
        const CoefficientField& f = prob_.field;
        const KppReaction& r = prob_.reaction;
        double clampmax = 0.0;
        for (int j = 0; j < ny_; ++j) {
            for (int i = 0; i < nx_; ++i) {
                double x = g_.x(i), y = g_.y(j);
                double u = pat_c(cur_, i, j);
                double a11 = f.a11(t, x, y);
                double lap = a11 * (pat_c(cur_, i + 1, j) - 2.0 * u + pat_c(cur_, i - 1, j)) * inv_h2;
                double b1 = f.b1(t, x, y);
                double adv = (b1 >= 0.0 ? b1 * (pat_c(cur_, i + 1, j) - u)
                                        : b1 * (u - pat_c(cur_, i - 1, j))) * inv_h;
                if (g_.dim == 2) {
                    double a22 = f.a22(t, x, y), a12 = f.a12(t, x, y), b2 = f.b2(t, x, y);
                    lap += a22 * (pat_c(cur_, i, j + 1) - 2.0 * u + pat_c(cur_, i, j - 1)) * inv_h2;
                    if (a12 != 0.0)
                        lap += 2.0 * a12 *
                               (pat_c(cur_, i + 1, j + 1) + pat_c(cur_, i - 1, j - 1) -
                                pat_c(cur_, i - 1, j + 1) - pat_c(cur_, i + 1, j - 1)) *
                               (0.25 * inv_h2);
                    adv += (b2 >= 0.0 ? b2 * (pat_c(cur_, i, j + 1) - u)
                                      : b2 * (u - pat_c(cur_, i, j - 1))) * inv_h;
                }
                double un = u + dt_ * (lap + adv + r.eval(t, x, u, y));
                if (un > 1.0) { clampmax = std::max(clampmax, un - 1.0); un = 1.0; }
                else if (un < 0.0) { clampmax = std::max(clampmax, -un); un = 0.0; }
                pat(nxt_, i, j) = un;
            }
        }
        stats_.max_clamp = std::max(stats_.max_clamp, clampmax);
    }

    LocalProblem prob_;
    Grid g_;
    double dt_;
    double time_;
    int nx_, ny_, px_, py_;
    bool uniform_ = true, fu0_separable_ = true;
    double a11_ = 1, a12_ = 0, a22_ = 1, b1_ = 0, b2_ = 0;
    std::vector<double> cur_, nxt_, fu0_base_;
    StepStats stats_;
};

struct Trajectory {
    std::vector<GridState> snaps;
    double dt = 0.0;
    StepStats stats;

    const GridState& at_time(double t, double tol = 1e-9) const {
        for (const auto& s : snaps)
            if (std::fabs(s.time - t) <= tol) return s;
        throw std::invalid_argument("trajectory: no snapshot at t=" + fmt_g(t));
    }
};

// Solve storing snapshots at the requested times (sorted); values at requested
// times are linear interpolations between the two adjacent solver steps.
inline Trajectory solve_at(const LocalProblem& p, std::vector<double> times, double dt = 0.0) {
    std::sort(times.begin(), times.end());
    if (dt <= 0.0) dt = stable_dt(p);
    LocalStepper st(p, dt);
    Trajectory traj;
    traj.dt = dt;
    std::vector<double> prev;
    std::size_t k = 0;
    while (k < times.size() && times[k] <= st.time() + 1e-12) {
        traj.snaps.push_back(st.snapshot());
        traj.snaps.back().time = times[k];
        ++k;
    }
    while (k < times.size()) {
        prev = st.raw();
        double t_prev = st.time();
        st.step();
        while (k < times.size() && times[k] <= st.time() + 1e-12) {
            traj.snaps.push_back(st.snapshot_at(times[k], prev, t_prev));
            ++k;
        }
    }
    st.check_finite();
    traj.stats = st.stats();
    return traj;
}

// Solve with snapshots every `cadence` time units from 0 to t_end.
inline Trajectory solve(const LocalProblem& p, double t_end, double cadence, double dt = 0.0) {
    std::vector<double> times;
    for (long long k = 0;; ++k) {
        double t = p.initial.time + k * cadence;
        if (t > t_end + 1e-12) break;
        times.push_back(t);
    }
    if (dt <= 0.0) dt = stable_dt(p, cadence);
    return solve_at(p, times, dt);
}

// The discrete spatial operator of the scheme (centered diffusion, upwind
// advection) applied to a state; boundary ghosts per the grid policy.
// Used by sub/supersolution residual checks so they see the solver's own
// stencil.
inline GridState apply_local_operator(const GridState& s, const CoefficientField& f, double t) {
    const Grid& g = s.grid;
    GridState out(g, s.time);
    const double inv_h2 = 1.0 / (g.h * g.h);
    const double inv_h = 1.0 / g.h;
    const bool mirror = (g.bc == Boundary::neumann_zero);
    auto val = [&](int i, int j) -> double {
        if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) {
            if (!mirror) return 0.0;
            i = std::clamp(i, 0, g.nx - 1);
            j = std::clamp(j, 0, g.ny - 1);
        }
        return s.at(i, j);
    };
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double x = g.x(i), y = g.y(j);
            double u = s.at(i, j);
            double a11 = f.a11(t, x, y);
            double L = a11 * (val(i + 1, j) - 2.0 * u + val(i - 1, j)) * inv_h2;
            double b1 = f.b1(t, x, y);
            L += (b1 >= 0.0 ? b1 * (val(i + 1, j) - u) : b1 * (u - val(i - 1, j))) * inv_h;
            if (g.dim == 2) {
                double a22 = f.a22(t, x, y), a12 = f.a12(t, x, y), b2 = f.b2(t, x, y);
                L += a22 * (val(i, j + 1) - 2.0 * u + val(i, j - 1)) * inv_h2;
                if (a12 != 0.0)
                    L += 2.0 * a12 *
                         (val(i + 1, j + 1) + val(i - 1, j - 1) - val(i - 1, j + 1) -
                          val(i + 1, j - 1)) *
                         (0.25 * inv_h2);
                L += (b2 >= 0.0 ? b2 * (val(i, j + 1) - u) : b2 * (u - val(i, j - 1))) * inv_h;
            }
            out.at(i, j) = L;
        }
    }
    return out;
}

struct CompareReport {
    double max_violation = 0.0;  // max over time/nodes of (a - b)+ where a0 <= b0
    double at_time = 0.0;
};

// Ordering report for trajectories with ordered initial data (a <= b).
inline CompareReport compare(const Trajectory& lo, const Trajectory& hi) {
    CompareReport rep;
    std::size_t n = std::min(lo.snaps.size(), hi.snaps.size());
    for (std::size_t k = 0; k < n; ++k) {
        const auto& a = lo.snaps[k];
        const auto& b = hi.snaps[k];
        for (std::size_t i = 0; i < a.v.size(); ++i) {
            double viol = a.v[i] - b.v[i];
            if (viol > rep.max_violation) {
                rep.max_violation = viol;
                rep.at_time = a.time;
            }
        }
    }
    return rep;
}

}  // namespace kpplab
