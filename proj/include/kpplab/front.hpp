#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "kpplab/common.hpp"
#include "kpplab/grid.hpp"
#include "kpplab/local_solver.hpp"

namespace kpplab {

// Level-set tracking and front asymptotics x_theta(t) ~ s t - k ln t + q.

struct FrontTrack {
    double theta = 0.5;
    std::vector<double> times;
    std::vector<double> positions;  // rightmost crossings (1D)
    FrontFit fit;                   // over [t_min, t_end]
    double t_min = 20.0;

    // plain two-point speed over a window
    double window_speed(double t0, double t1) const {
        double x0 = 0, x1 = 0;
        bool f0 = false, f1 = false;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!f0 && std::fabs(times[i] - t0) < 1e-9) { x0 = positions[i]; f0 = true; }
            if (!f1 && std::fabs(times[i] - t1) < 1e-9) { x1 = positions[i]; f1 = true; }
        }
        if (!f0 || !f1) throw std::invalid_argument("window_speed: endpoints not tracked");
        return (x1 - x0) / (t1 - t0);
    }
};

inline FrontTrack track(const Trajectory& traj, double theta, double t_min = 20.0,
                        bool with_log = true, bool rightmost = true) {
    FrontTrack ft;
    ft.theta = theta;
    ft.t_min = t_min;
    for (const auto& s : traj.snaps) {
        auto c = rightmost ? level_crossing_right(s, theta) : level_crossing_left(s, theta);
        if (!c) continue;
        ft.times.push_back(s.time);
        ft.positions.push_back(*c);
    }
    std::vector<double> tw, xw;
    for (std::size_t i = 0; i < ft.times.size(); ++i) {
        if (ft.times[i] >= t_min && ft.times[i] > 0) {
            tw.push_back(ft.times[i]);
            xw.push_back(ft.positions[i]);
        }
    }
    if (tw.size() >= 3) ft.fit = fit_front(tw, xw, with_log);
    return ft;
}

// --- sharpness counterexample -------------------------------------------------
// u_t = u_xx + b u_x + g(u), g = min{u,1-u}, u(0,.) = chi_(0,1). The solution
// is the drifted no-advection solution w: u(t,x) = w(t, x + b t), which is
// also the only nonzero cube member u_0'. Along y_t = (s - b) t - k ln t + q
// (s, k, q fitted from w), the time-shifted member values expose the failure
// of the sandwich once b exceeds the admissible bound.

struct SharpnessReport {
    double b_bar = 0.0, delta = 0.0;
    double q_half = 0.0;
    FrontFit w_fit;                // fitted right-front asymptotics of w
    std::vector<double> times;     // sampled t
    std::vector<double> y_t;       // evaluation points
    std::vector<double> lower_expr;  // sup_n u_n'(t - delta t, y_t)
    std::vector<double> upper_expr;  // sup_n u_n'(t + t^delta, y_t)
    std::vector<double> u_at_yt;     // u(t, y_t)

    double final_lower() const { return lower_expr.back(); }
    double final_upper() const { return upper_expr.back(); }
    double final_u() const { return u_at_yt.back(); }
};

struct SharpnessOptions {
    double h = 0.05;
    double fit_t_min = 20.0;
    double sample_start = 40.0;
    double sample_step = 20.0;
    double pad = 40.0;
    double dt = 0.0;
};

inline SharpnessReport sharpness_run(double b_bar, double delta, double t_end,
                                     const SharpnessOptions& opt = SharpnessOptions{}) {
    if (b_bar < 0.0 || delta <= 0.0 || delta >= 1.0)
        throw std::invalid_argument("sharpness_run: need b_bar >= 0, delta in (0,1)");
    const double t_max = t_end + std::pow(t_end, delta);

    Grid grid = Grid::make_1d(-(2.0 * t_max + opt.pad), 2.0 * t_max + opt.pad, opt.h);
    LocalProblem wprob;
    wprob.field = CoefficientField::laplacian_1d(1.0, 0.0);
    wprob.reaction = KppReaction::linear_cap(1.0);
    wprob.grid = grid;
    wprob.initial = make_state(grid, [](double x, double) { return (x > 0.0 && x < 1.0) ? 1.0 : 0.0; });

    // snapshot times: fit window plus the shifted evaluation times
    std::vector<double> times;
    for (double t = opt.fit_t_min; t <= t_end + 1e-9; t += 2.0) times.push_back(t);
    std::vector<double> sample_ts;
    for (double t = opt.sample_start; t < t_end - 1e-9; t += opt.sample_step)
        sample_ts.push_back(t);
    sample_ts.push_back(t_end);
    for (double t : sample_ts) {
        times.push_back(t - delta * t);
        times.push_back(t + std::pow(t, delta));
        times.push_back(t);
    }
    Trajectory w = solve_at(wprob, times, opt.dt);

    FrontTrack ft = track(w, 0.5, opt.fit_t_min);
    SharpnessReport rep;
    rep.b_bar = b_bar;
    rep.delta = delta;
    rep.w_fit = ft.fit;
    rep.q_half = ft.fit.offset;

    auto w_at = [&](double t, double xw) -> double {
        const GridState& s = w.at_time(t, 1e-6);
        if (xw < grid.x0 || xw > grid.xmax())
            throw ConfigError("sharpness_run: y_t exits grid; increase pad/half-width");
        return interpolate(s, xw);
    };

    for (double t : sample_ts) {
        double yt = (ft.fit.speed - b_bar) * t - ft.fit.log_coeff * std::log(t) + ft.fit.offset;
        double tm = t - delta * t;
        double tp = t + std::pow(t, delta);
        rep.times.push_back(t);
        rep.y_t.push_back(yt);
        rep.lower_expr.push_back(w_at(tm, yt + b_bar * tm));
        rep.upper_expr.push_back(w_at(tp, yt + b_bar * tp));
        rep.u_at_yt.push_back(w_at(t, yt + b_bar * t));
    }
    return rep;
}

}  // namespace kpplab
