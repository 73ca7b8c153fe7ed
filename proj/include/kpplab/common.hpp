#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpplab {

// Error kinds map to process exit codes in the CLI (see runner.hpp).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BudgetExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double sq(double x) { return x * x; }

// --- deterministic hashing / RNG -----------------------------------------
// splitmix64: cheap stateless hash used for lattice-indexed random fields so
// that field evaluation is a pure function of (seed, cell index).

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

// uniform in [0,1) from a hash
inline double hash_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Small deterministic RNG (xorshift-based); distributions are hand-rolled so
// artifacts do not depend on the standard library's implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(splitmix64(seed ^ 0x8badf00d00c0ffeeULL)) {
        if (s_ == 0) s_ = 1;
    }
    std::uint64_t next_u64() {
        std::uint64_t x = s_;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        s_ = x;
        return splitmix64(x);
    }
    double uniform() { return hash_unit(next_u64()); }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    // Box-Muller
    double normal() {
        double u1 = std::max(uniform(), 1e-300);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

private:
    std::uint64_t s_;
};

// --- least squares ---------------------------------------------------------

struct FrontFit {
    double speed = 0.0;      // coefficient of t
    double log_coeff = 0.0;  // coefficient of -ln t
    double offset = 0.0;     // constant
    double rms_residual = 0.0;
    bool with_log = true;
    double eval(double t) const { return speed * t - log_coeff * std::log(t) + offset; }
};

// Fit x(t) ~ s*t - k*ln(t) + q over the given samples (t>0 required).
// If with_log is false, k is pinned to 0.
inline FrontFit fit_front(const std::vector<double>& t, const std::vector<double>& x,
                          bool with_log = true) {
    const std::size_t n = t.size();
    if (n < (with_log ? 3u : 2u) || x.size() != n)
        throw std::invalid_argument("fit_front: not enough samples");
    // normal equations for basis {t, -ln t, 1} (or {t, 1})
    const int m = with_log ? 3 : 2;
    double A[3][3] = {{0}};
    double b[3] = {0};
    for (std::size_t i = 0; i < n; ++i) {
        double phi[3] = {t[i], -std::log(t[i]), 1.0};
        if (!with_log) phi[1] = 1.0;  // basis {t, 1}
        for (int r = 0; r < m; ++r) {
            b[r] += phi[r] * x[i];
            for (int c = 0; c < m; ++c) A[r][c] += phi[r] * phi[c];
        }
    }
    // Gaussian elimination with partial pivoting on the small system
    int idx[3] = {0, 1, 2};
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
        if (piv != col) {
            for (int c = 0; c < m; ++c) std::swap(A[col][c], A[piv][c]);
            std::swap(b[col], b[piv]);
            std::swap(idx[col], idx[piv]);
        }
        if (std::fabs(A[col][col]) < 1e-300) throw std::runtime_error("fit_front: singular system");
        for (int r = col + 1; r < m; ++r) {
            double f = A[r][col] / A[col][col];
            for (int c = col; c < m; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    double sol[3] = {0, 0, 0};
    for (int r = m - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < m; ++c) s -= A[r][c] * sol[c];
        sol[r] = s / A[r][r];
    }
    (void)idx;
    FrontFit fit;
    fit.with_log = with_log;
    fit.speed = sol[0];
    fit.log_coeff = with_log ? sol[1] : 0.0;
    fit.offset = with_log ? sol[2] : sol[1];
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += sq(x[i] - fit.eval(t[i]));
    fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

// simple slope of least squares line y = a*x + c
inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double d = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / d;
}

inline std::pair<double, double> lsq_line(const std::vector<double>& x,
                                          const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double d = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / d;
    double icept = (sy - slope * sx) / n;
    return {slope, icept};
}

// --- Gauss-Legendre nodes (16 point) for kernel moments --------------------

inline const std::array<std::pair<double, double>, 8>& gl16_half() {
    // abscissae/weights on [0,1] half (symmetric): x_i in (0,1), w_i
    static const std::array<std::pair<double, double>, 8> v = {{
        {0.0950125098376374, 0.1894506104550685},
        {0.2816035507792589, 0.1826034150449236},
        {0.4580167776572274, 0.1691565193950025},
        {0.6178762444026438, 0.1495959888165767},
        {0.7554044083550030, 0.1246289712555339},
        {0.8656312023878318, 0.0951585116824928},
        {0.9445750230732326, 0.0622535239386479},
        {0.9894009349916499, 0.0271524594117541},
    }};
    return v;
}

// integrate f over [a,b] with 16-point Gauss-Legendre
template <class F>
double gl16(F&& f, double a, double b) {
    double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (const auto& [x, w] : gl16_half()) s += w * (f(c + r * x) + f(c - r * x));
    return s * r;
}

// --- formatting / file output ----------------------------------------------

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_g(double v, int prec = 10) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

// Atomic write: temp file + rename, so no artifact is ever half-written.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

}  // namespace kpplab
