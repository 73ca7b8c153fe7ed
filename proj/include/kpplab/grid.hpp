#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kpplab/common.hpp"

namespace kpplab {

enum class Boundary { dirichlet_zero, neumann_zero };

// Truncated rectangular domain approximating R^d, d = 1 or 2.
// Nodes at x_i = x0 + i*h (and y_j = y0 + j*h in 2D).
struct Grid {
    int dim = 1;
    double x0 = 0.0, y0 = 0.0;
    double h = 0.1;
    int nx = 0, ny = 1;
    Boundary bc = Boundary::dirichlet_zero;

    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    double x(int i) const { return x0 + i * h; }
    double y(int j) const { return y0 + j * h; }
    double xmax() const { return x(nx - 1); }
    double ymax() const { return y(ny - 1); }
    std::size_t idx(int i, int j = 0) const {
        return static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i);
    }
    bool same_layout(const Grid& o) const {
        return dim == o.dim && nx == o.nx && ny == o.ny && x0 == o.x0 && y0 == o.y0 && h == o.h;
    }

    static Grid make_1d(double xmin, double xmax, double h, Boundary bc = Boundary::dirichlet_zero) {
        Grid g;
        g.dim = 1;
        g.h = h;
        g.x0 = xmin;
        g.nx = static_cast<int>(std::round((xmax - xmin) / h)) + 1;
        g.ny = 1;
        g.bc = bc;
        if (g.nx < 8) throw ConfigError("grid: need at least 8 cells per axis");
        return g;
    }
    static Grid make_2d(double xmin, double xmax, double ymin, double ymax, double h,
                        Boundary bc = Boundary::dirichlet_zero) {
        Grid g;
        g.dim = 2;
        g.h = h;
        g.x0 = xmin;
        g.y0 = ymin;
        g.nx = static_cast<int>(std::round((xmax - xmin) / h)) + 1;
        g.ny = static_cast<int>(std::round((ymax - ymin) / h)) + 1;
        g.bc = bc;
        if (g.nx < 8 || g.ny < 8) throw ConfigError("grid: need at least 8 cells per axis");
        return g;
    }
};

// Domain half-width rule: supersolution horizon a*T plus padding around the
// initial support (see solver modules for a).
inline double auto_half_width(double sup_speed, double t_end, double support_width) {
    return sup_speed * t_end + 10.0 * support_width;
}

struct GridState {
    Grid grid;
    double time = 0.0;
    std::vector<double> v;

    GridState() = default;
    explicit GridState(const Grid& g, double t = 0.0) : grid(g), time(t), v(g.size(), 0.0) {}

    double& at(int i, int j = 0) { return v[grid.idx(i, j)]; }
    double at(int i, int j = 0) const { return v[grid.idx(i, j)]; }

    double max() const { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }
    double min() const { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }

    template <class F>
    void fill(F&& f) {
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                v[grid.idx(i, j)] = (grid.dim == 1) ? f(grid.x(i)) : f(grid.x(i), grid.y(j));
    }
};

// fill helpers tolerant to both dims
inline GridState make_state(const Grid& g, const std::function<double(double, double)>& f,
                            double t = 0.0) {
    GridState s(g, t);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s.v[g.idx(i, j)] = f(g.x(i), g.y(j));
    return s;
}

// multilinear interpolation; clamps to the domain box
inline double interpolate(const GridState& s, double x, double y = 0.0) {
    const Grid& g = s.grid;
    double fx = (x - g.x0) / g.h;
    fx = std::clamp(fx, 0.0, static_cast<double>(g.nx - 1));
    int i = std::min(static_cast<int>(fx), g.nx - 2);
    if (g.nx < 2) i = 0;
    double ax = fx - i;
    if (g.dim == 1) {
        return (1 - ax) * s.at(i) + ax * s.at(std::min(i + 1, g.nx - 1));
    }
    double fy = (y - g.y0) / g.h;
    fy = std::clamp(fy, 0.0, static_cast<double>(g.ny - 1));
    int j = std::min(static_cast<int>(fy), g.ny - 2);
    double ay = fy - j;
    double v00 = s.at(i, j), v10 = s.at(i + 1, j), v01 = s.at(i, j + 1), v11 = s.at(i + 1, j + 1);
    return (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 + (1 - ax) * ay * v01 + ax * ay * v11;
}

// rightmost/leftmost level crossings for 1D profiles (linear interpolation)
inline std::optional<double> level_crossing_right(const GridState& s, double theta) {
    const Grid& g = s.grid;
    for (int i = g.nx - 2; i >= 0; --i) {
        double a = s.at(i), b = s.at(i + 1);
        if ((a - theta) * (b - theta) <= 0.0 && a != b) {
            if (a >= theta && b <= theta) return g.x(i) + g.h * (a - theta) / (a - b);
            if (a <= theta && b >= theta) return g.x(i) + g.h * (theta - a) / (b - a);
        }
    }
    return std::nullopt;
}

inline std::optional<double> level_crossing_left(const GridState& s, double theta) {
    const Grid& g = s.grid;
    for (int i = 0; i + 1 < g.nx; ++i) {
        double a = s.at(i), b = s.at(i + 1);
        if ((a - theta) * (b - theta) <= 0.0 && a != b) {
            if (a >= theta && b <= theta) return g.x(i) + g.h * (a - theta) / (a - b);
            if (a <= theta && b >= theta) return g.x(i) + g.h * (theta - a) / (b - a);
        }
    }
    return std::nullopt;
}

// 2D contour extraction by marching squares with linear interpolation.
// Returns a segment soup; enough for level-set geometry at desk scale.
struct Segment {
    double x0, y0, x1, y1;
};

inline std::vector<Segment> contour_segments(const GridState& s, double theta) {
    const Grid& g = s.grid;
    std::vector<Segment> segs;
    if (g.dim != 2) throw std::invalid_argument("contour_segments: 2D states only");
    auto lerp = [&](double a, double b) { return (theta - a) / (b - a); };
    for (int j = 0; j + 1 < g.ny; ++j) {
        for (int i = 0; i + 1 < g.nx; ++i) {
            double bl = s.at(i, j), br = s.at(i + 1, j), tr = s.at(i + 1, j + 1), tl = s.at(i, j + 1);
            int c = (bl >= theta) | ((br >= theta) << 1) | ((tr >= theta) << 2) | ((tl >= theta) << 3);
            if (c == 0 || c == 15) continue;
            double xb = g.x(i) + g.h * lerp(bl, br), yb = g.y(j);
            double xt = g.x(i) + g.h * lerp(tl, tr), yt = g.y(j + 1);
            double xl = g.x(i), yl = g.y(j) + g.h * lerp(bl, tl);
            double xr = g.x(i + 1), yr = g.y(j) + g.h * lerp(br, tr);
            auto add = [&](double ax, double ay, double bx, double by) {
                segs.push_back({ax, ay, bx, by});
            };
            switch (c) {
                case 1: case 14: add(xl, yl, xb, yb); break;
                case 2: case 13: add(xb, yb, xr, yr); break;
                case 3: case 12: add(xl, yl, xr, yr); break;
                case 4: case 11: add(xt, yt, xr, yr); break;
                case 6: case 9:  add(xb, yb, xt, yt); break;
                case 7: case 8:  add(xl, yl, xt, yt); break;
                case 5:  add(xl, yl, xb, yb); add(xt, yt, xr, yr); break;
                case 10: add(xl, yl, xt, yt); add(xb, yb, xr, yr); break;
            }
        }
    }
    return segs;
}

// --- cube decomposition -----------------------------------------------------
// Initial data restricted to half-open cubes [n_i c, (n_i+1) c); node
// membership is unambiguous, so summing members reconstructs the original
// state bit-exactly.

struct CubeKey {
    int n0 = 0, n1 = 0;
    bool operator<(const CubeKey& o) const { return n0 != o.n0 ? n0 < o.n0 : n1 < o.n1; }
    bool operator==(const CubeKey& o) const { return n0 == o.n0 && n1 == o.n1; }
};

struct CubeFamily {
    double c = 1.0;
    std::map<CubeKey, GridState> members;  // ordered: deterministic iteration
};

inline CubeKey cube_of(double x, double y, double c) {
    return {static_cast<int>(std::floor(x / c)), static_cast<int>(std::floor(y / c))};
}

inline CubeFamily decompose(const GridState& u0, double c) {
    if (c <= 0) throw std::invalid_argument("decompose: c must be positive");
    if (c < 2.0 * u0.grid.h) throw std::invalid_argument("decompose: cube under-resolved (c < 2h)");
    CubeFamily fam;
    fam.c = c;
    const Grid& g = u0.grid;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double val = u0.at(i, j);
            if (val == 0.0) continue;
            CubeKey k = cube_of(g.x(i), g.dim == 2 ? g.y(j) : 0.0, c);
            auto it = fam.members.find(k);
            if (it == fam.members.end())
                it = fam.members.emplace(k, GridState(g, u0.time)).first;
            it->second.at(i, j) = val;
        }
    }
    return fam;
}

namespace detail {
inline void check_family(const std::vector<const GridState*>& states) {
    if (states.empty()) throw std::invalid_argument("empty cube family");
    for (const auto* s : states) {
        if (!s->grid.same_layout(states.front()->grid))
            throw std::invalid_argument("cube family: mismatched grids");
        if (s->time != states.front()->time)
            throw std::invalid_argument("cube family: mismatched times");
    }
}
}  // namespace detail

// node-wise sup over members (Eq.-style envelope)
inline GridState envelope(const std::vector<const GridState*>& states) {
    detail::check_family(states);
    GridState out(states.front()->grid, states.front()->time);
    for (const auto* s : states)
        for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] = std::max(out.v[k], s->v[k]);
    return out;
}

// node-wise min{sum, 1}
inline GridState capped_sum(const std::vector<const GridState*>& states) {
    detail::check_family(states);
    GridState out(states.front()->grid, states.front()->time);
    for (const auto* s : states)
        for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += s->v[k];
    for (auto& x : out.v) x = std::min(x, 1.0);
    return out;
}

inline GridState node_sum(const std::vector<const GridState*>& states) {
    detail::check_family(states);
    GridState out(states.front()->grid, states.front()->time);
    for (const auto* s : states)
        for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += s->v[k];
    return out;
}

inline std::vector<const GridState*> member_ptrs(const CubeFamily& fam) {
    std::vector<const GridState*> out;
    out.reserve(fam.members.size());
    for (const auto& [k, s] : fam.members) out.push_back(&s);
    return out;
}

// --- serialization -----------------------------------------------------------

inline std::string state_to_csv(const GridState& s) {
    std::ostringstream os;
    if (s.grid.dim == 1) {
        os << "x,value\n";
        for (int i = 0; i < s.grid.nx; ++i)
            os << fmt_g17(s.grid.x(i)) << ',' << fmt_g17(s.at(i)) << '\n';
    } else {
        os << "x,y,value\n";
        for (int j = 0; j < s.grid.ny; ++j)
            for (int i = 0; i < s.grid.nx; ++i)
                os << fmt_g17(s.grid.x(i)) << ',' << fmt_g17(s.grid.y(j)) << ','
                   << fmt_g17(s.at(i, j)) << '\n';
    }
    return os.str();
}

// PGM (P2, ASCII): values scaled 0..255 row-major; header comment records
// time and spacing so heatmaps are self-describing and diffable.
inline std::string state_to_pgm(const GridState& s) {
    std::ostringstream os;
    os << "P2\n# t=" << fmt_g(s.time) << " h=" << fmt_g(s.grid.h) << " x0=" << fmt_g(s.grid.x0)
       << " y0=" << fmt_g(s.grid.y0) << "\n";
    os << s.grid.nx << ' ' << s.grid.ny << "\n255\n";
    for (int j = 0; j < s.grid.ny; ++j) {
        for (int i = 0; i < s.grid.nx; ++i) {
            int p = static_cast<int>(std::lround(std::clamp(s.at(i, j), 0.0, 1.0) * 255.0));
            os << p << (i + 1 < s.grid.nx ? ' ' : '\n');
        }
    }
    return os.str();
}

}  // namespace kpplab
