#pragma once

// Linearized water tank under constant acceleration: steady state, the chain of
// coordinate changes to the zeta-system, quadrature and the L2 inner product.

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "errors.hpp"

namespace wtank {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

struct Params {
    double L = 1.0;
    double gamma = 0.03;
    double mu = 2.0;
    double nu = 0.5;
    int n_modes = 20;
    int grid_points = 2001;
    double ode_tol = 1e-10;
    double t_final = 7.5;
    double dt = 1e-3;

    double h() const { return L / (grid_points - 1); }
    double x(int i) const { return i == grid_points - 1 ? L : i * h(); }

    void validate() const {
        if (!(L > 0.0) || !std::isfinite(L)) throw UsageError("L must be positive, got " + std::to_string(L));
        if (grid_points < 16) throw UsageError("grid_points must be >= 16");
        if (grid_points % 2 == 0) throw UsageError("grid_points must be odd (composite Simpson)");
        if (n_modes < 1) throw UsageError("n_modes must be >= 1");
        if (!std::isfinite(gamma) || std::abs(gamma) * L / 2.0 >= 1.0)
            throw DomainError("gamma*L/2 must be < 1");
        if (!(ode_tol > 0.0)) throw UsageError("ode_tol must be positive");
        if (!(dt > 0.0)) throw UsageError("dt must be positive");
        if (!(t_final > 0.0)) throw UsageError("t_final must be positive");
    }
};

// Samples (f1, f2) on the uniform grid x_i = i L/(n-1), endpoints included.
struct GridFunction2 {
    double L = 1.0;
    std::vector<cplx> f1, f2;

    GridFunction2() = default;
    GridFunction2(double len, int n) : L(len), f1(n), f2(n) {}

    int size() const { return static_cast<int>(f1.size()); }
    double h() const { return L / (size() - 1); }
    double x(int i) const { return i == size() - 1 ? L : i * h(); }

    GridFunction2& operator*=(cplx s) {
        for (auto& v : f1) v *= s;
        for (auto& v : f2) v *= s;
        return *this;
    }
    GridFunction2& operator+=(const GridFunction2& o) {
        for (int i = 0; i < size(); ++i) { f1[i] += o.f1[i]; f2[i] += o.f2[i]; }
        return *this;
    }
    // this += s * o
    void axpy(cplx s, const GridFunction2& o) {
        for (int i = 0; i < size(); ++i) { f1[i] += s * o.f1[i]; f2[i] += s * o.f2[i]; }
    }
};

inline GridFunction2 operator*(cplx s, GridFunction2 f) { return f *= s; }

inline GridFunction2 conj(const GridFunction2& f) {
    GridFunction2 g = f;
    for (auto& v : g.f1) v = std::conj(v);
    for (auto& v : g.f2) v = std::conj(v);
    return g;
}

inline void check_same_grid(const GridFunction2& f, const GridFunction2& g) {
    if (f.size() != g.size() || f.L != g.L) throw UsageError("grid mismatch between grid functions");
}

// Composite Simpson weight of node i out of n (n odd), spacing h.
inline double simpson_weight(int i, int n, double h) {
    if (i == 0 || i == n - 1) return h / 3.0;
    return (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
}

template <class T>
T simpson(const std::vector<T>& v, double h) {
    const int n = static_cast<int>(v.size());
    if (n < 3 || n % 2 == 0) throw UsageError("Simpson quadrature needs an odd number (>= 3) of samples");
    T acc = v[0] + v[n - 1];
    for (int i = 1; i < n - 1; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * v[i];
    return acc * (h / 3.0);
}

// <f,g> = (1/2L) int_0^L (f1 conj(g1) + f2 conj(g2)) dx
inline cplx inner_product(const GridFunction2& f, const GridFunction2& g) {
    check_same_grid(f, g);
    const int n = f.size();
    const double h = f.h();
    cplx acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += simpson_weight(i, n, h) * (f.f1[i] * std::conj(g.f1[i]) + f.f2[i] * std::conj(g.f2[i]));
    return acc / (2.0 * f.L);
}

inline double norm(const GridFunction2& f) { return std::sqrt(std::abs(inner_product(f, f))); }

inline double max_abs(const GridFunction2& f) {
    double m = 0.0;
    for (int i = 0; i < f.size(); ++i) m = std::max({m, std::abs(f.f1[i]), std::abs(f.f2[i])});
    return m;
}

// ---------------------------------------------------------------------------
// Steady state and coordinate change

inline void check_position(const Params& p, double x) {
    const double tol = 1e-12 * p.L;
    if (!(x >= -tol && x <= p.L + tol))
        throw DomainError("position " + std::to_string(x) + " outside [0, L]");
}

inline double steady_state_height(const Params& p, double x) {
    check_position(p, x);
    return 1.0 - p.gamma * (x - p.L / 2.0);
}

// (2/g)(sqrt(1+gL/2) - sqrt(1-gL/2)) rewritten as 2L/(sqrt(1+gL/2)+sqrt(1-gL/2)),
// which is the gamma -> 0 limit branch without a 0/0.
inline double l_gamma(const Params& p) {
    const double a = p.gamma * p.L / 2.0;
    if (!(std::abs(a) < 1.0)) throw DomainError("l_gamma: gamma*L/2 must be < 1");
    return 2.0 * p.L / (std::sqrt(1.0 + a) + std::sqrt(1.0 - a));
}

// sqrt(1+gL/2) - (g L_g/(2L)) x ; equals sqrt(H^gamma) at the physical preimage of x.
inline double weight_base(const Params& p, double x) {
    check_position(p, x);
    const double b = std::sqrt(1.0 + p.gamma * p.L / 2.0) - p.gamma * l_gamma(p) * x / (2.0 * p.L);
    if (!(b > 0.0)) throw DomainError("weight base is not positive");
    return b;
}

inline double delta(const Params& p, double x) {
    check_position(p, x);
    const double lg = l_gamma(p);
    const double den = std::sqrt(1.0 + p.gamma * p.L / 2.0) - p.gamma * lg * x / (2.0 * p.L);
    if (!(den > 0.0)) throw DomainError("delta: denominator is not positive");
    return -(3.0 * lg / (4.0 * p.L)) * p.gamma / den;
}

// Closed form base(x)^{3/2}; differs from exp(int_0^x delta) by the constant (1+gL/2)^{3/4}.
inline double weight_closed_form(const Params& p, double x) { return std::pow(weight_base(p, x), 1.5); }

// exp(int_0^x delta)
inline double exp_weight(const Params& p, double x) {
    return std::pow(weight_base(p, x) / weight_base(p, 0.0), 1.5);
}

// Physical abscissa -> working abscissa z = (L/L_g) (2/g)(sqrt(1+gL/2) - sqrt(H(x))).
inline double physical_to_working(const Params& p, double x) {
    const double y = 2.0 * x / (std::sqrt(1.0 + p.gamma * p.L / 2.0) + std::sqrt(steady_state_height(p, x)));
    return y * p.L / l_gamma(p);
}

inline double working_to_physical(const Params& p, double z) {
    check_position(p, z);
    const double y = z * l_gamma(p) / p.L;
    return std::sqrt(1.0 + p.gamma * p.L / 2.0) * y - p.gamma * y * y / 4.0;
}

// Physical state (h, v) sampled on the uniform physical grid.
struct PhysicalState {
    double L = 1.0;
    std::vector<cplx> h, v;
    int size() const { return static_cast<int>(h.size()); }
};

namespace detail {

// Cubic B-spline resampling of complex samples on a uniform grid. A monotone
// (PCHIP) interpolant flattens slopes at local extrema of the data and loses two
// orders there, which breaks the round-trip tolerance.
class ComplexSpline {
public:
    ComplexSpline(const std::vector<double>& xs, const std::vector<cplx>& ys) {
        std::vector<double> re(ys.size()), im(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) { re[i] = ys[i].real(); im[i] = ys[i].imag(); }
        lo_ = xs.front();
        hi_ = xs.back();
        const double step = (hi_ - lo_) / (xs.size() - 1);
        re_ = std::make_unique<Interp>(re.data(), re.size(), lo_, step, d_left(re, step), d_right(re, step));
        im_ = std::make_unique<Interp>(im.data(), im.size(), lo_, step, d_left(im, step), d_right(im, step));
    }
    cplx operator()(double x) const {
        if (x < lo_ - 1e-12 || x > hi_ + 1e-12) throw DomainError("resampling outside the grid");
        x = std::clamp(x, lo_, hi_);
        return {(*re_)(x), (*im_)(x)};
    }

private:
    using Interp = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    // fourth-order one-sided end slopes (the library default is second order)
    static double d_left(const std::vector<double>& f, double h) {
        return (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    }
    static double d_right(const std::vector<double>& f, double h) {
        const std::size_t n = f.size() - 1;
        return (25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4]) / (12.0 * h);
    }
    std::unique_ptr<Interp> re_, im_;
    double lo_ = 0.0, hi_ = 0.0;
};

inline std::vector<double> nodes(double L, int n) {
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = (i == n - 1) ? L : i * (L / (n - 1));
    return xs;
}

}  // namespace detail

// (h, v) on the physical grid -> zeta on the working grid: Riemann step S(x),
// space map with cubic spline resampling, then multiplication by exp_weight.
inline GridFunction2 physical_to_zeta(const Params& p, const std::vector<cplx>& h, const std::vector<cplx>& v) {
    const int n = static_cast<int>(h.size());
    if (static_cast<int>(v.size()) != n || n < 5) throw UsageError("physical_to_zeta: h and v must share a grid of >= 5 nodes");
    const auto xs = detail::nodes(p.L, n);
    std::vector<cplx> xi1(n), xi2(n);
    for (int i = 0; i < n; ++i) {
        const double s = 1.0 / std::sqrt(steady_state_height(p, xs[i]));
        xi1[i] = s * h[i] + v[i];
        xi2[i] = -s * h[i] + v[i];
    }
    GridFunction2 z(p.L, n);
    if (p.gamma == 0.0) {
        z.f1 = xi1;
        z.f2 = xi2;
        return z;
    }
    detail::ComplexSpline i1(xs, xi1), i2(xs, xi2);
    for (int j = 0; j < n; ++j) {
        const double x = working_to_physical(p, xs[j]);
        const double w = exp_weight(p, xs[j]);
        z.f1[j] = w * i1(x);
        z.f2[j] = w * i2(x);
    }
    return z;
}

inline PhysicalState zeta_to_physical(const Params& p, const GridFunction2& zeta) {
    const int n = zeta.size();
    if (n < 5) throw UsageError("zeta_to_physical: grid too small");
    const auto zs = detail::nodes(p.L, n);
    std::vector<cplx> w1(n), w2(n);
    for (int j = 0; j < n; ++j) {
        const double w = exp_weight(p, zs[j]);
        w1[j] = zeta.f1[j] / w;
        w2[j] = zeta.f2[j] / w;
    }
    PhysicalState out;
    out.L = p.L;
    out.h.resize(n);
    out.v.resize(n);
    std::unique_ptr<detail::ComplexSpline> i1, i2;
    if (p.gamma != 0.0) {
        i1 = std::make_unique<detail::ComplexSpline>(zs, w1);
        i2 = std::make_unique<detail::ComplexSpline>(zs, w2);
    }
    for (int i = 0; i < n; ++i) {
        const double x = zs[i];
        cplx a = w1[i], b = w2[i];
        if (p.gamma != 0.0) {
            const double z = physical_to_working(p, x);
            a = (*i1)(z);
            b = (*i2)(z);
        }
        out.v[i] = (a + b) / 2.0;
        out.h[i] = (a - b) * std::sqrt(steady_state_height(p, x)) / 2.0;
    }
    return out;
}

// int_0^L base(x)^2 (w1 - w2) dx: the conserved mass in w-coordinates.
inline cplx mass_functional(const Params& p, const GridFunction2& w) {
    const int n = w.size();
    if (std::abs(w.L - p.L) > 1e-14 * p.L) throw UsageError("mass_functional: grid length differs from L");
    std::vector<cplx> v(n);
    for (int i = 0; i < n; ++i) {
        const double b = weight_base(p, w.x(i));
        v[i] = b * b * (w.f1[i] - w.f2[i]);
    }
    return simpson(v, w.h());
}

// I = exp_weight (1,1): the control profile in zeta-coordinates.
inline GridFunction2 control_profile(const Params& p) {
    GridFunction2 g(p.L, p.grid_points);
    for (int i = 0; i < p.grid_points; ++i) {
        const double w = exp_weight(p, p.x(i));
        g.f1[i] = w;
        g.f2[i] = w;
    }
    return g;
}

}  // namespace wtank
