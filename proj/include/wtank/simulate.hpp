#pragma once

// Modal time integration of the closed-loop and target systems, the quadratic
// Lyapunov certificate, decay-rate fits and a first-order upwind cross-check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feedback.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace wtank {

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<cplx>> modal_coeffs;  // Z_n = c_n + zeta0 delta_{n0}
    std::vector<cplx> zeta0;
    std::vector<double> l2, da;   // L2 and D(A)-weighted norms of Z
    std::vector<cplx> mode0;      // mode-0 component of zeta (mass direction)
    double dt = 0.0;
    int halvings = 0;
};

inline double l2_norm(const std::vector<cplx>& c) {
    double s = 0.0;
    for (const auto& v : c) s += std::norm(v);
    return std::sqrt(s);
}

inline double da_norm(const std::vector<cplx>& c, const std::vector<cplx>& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += (1.0 + std::norm(mu[i])) * std::norm(c[i]);
    return std::sqrt(s);
}

namespace detail {

// Classic RK4 for y' = M y with fixed step.
inline Eigen::VectorXcd rk4_linear(const Eigen::MatrixXcd& M, const Eigen::VectorXcd& y, double dt) {
    const Eigen::VectorXcd k1 = M * y;
    const Eigen::VectorXcd k2 = M * (y + 0.5 * dt * k1);
    const Eigen::VectorXcd k3 = M * (y + 0.5 * dt * k2);
    const Eigen::VectorXcd k4 = M * (y + dt * k3);
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Spectral radius via eigenvalues; used once per run to guard RK4 stability.
inline double spectral_radius(const Eigen::MatrixXcd& M) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    double r = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) r = std::max(r, std::abs(es.eigenvalues()(i)));
    return r;
}

}  // namespace detail

// Extended state (c_{-N..N}, zeta0):
//   c_n' = -mu_n c_n + u <I, f_n>,  zeta0' = nu u,  u = sum_n Z_n <f_n,F>,
// with Z_n = c_n except Z_0 = c_0 + zeta0. <I, f_0> = 0 keeps c_0 fixed.
inline Trajectory integrate_closed_loop(const Params& p, const FeedbackLaw& law, const std::vector<cplx>& init,
                                        cplx zeta0_init, double t_final, int record_every = 1) {
    const int N = law.N, M = 2 * N + 1;
    if (static_cast<int>(init.size()) != M) throw UsageError("integrate_closed_loop: init size must be 2N+1");
    std::vector<cplx> ib(M);  // <I, f_n>
    for (int i = 0; i < M; ++i) ib[i] = law.inu[i] - (i == N ? cplx(law.nu) : cplx(0.0));
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(M + 1, M + 1);
    for (int m = 0; m < M; ++m) {
        K(m, m) = -law.mu[m];
        for (int n = 0; n < M; ++n) K(m, n) += ib[m] * law.coeffs[n];
        K(m, M) = ib[m] * law.coeffs[N];
    }
    for (int n = 0; n < M; ++n) K(M, n) = law.nu * law.coeffs[n];
    K(M, M) = law.nu * law.coeffs[N];

    Trajectory tr;
    double dt = std::min(0.5 / std::abs(law.mu.back()), p.dt);
    const double rho = detail::spectral_radius(K);
    while (rho * dt > 2.5) {
        dt /= 2.0;
        ++tr.halvings;
    }
    const int steps = static_cast<int>(std::ceil(t_final / dt - 1e-9));
    dt = t_final / steps;
    tr.dt = dt;

    Eigen::VectorXcd y(M + 1);
    for (int i = 0; i < M; ++i) y(i) = init[i];
    y(M) = zeta0_init;
    auto record = [&](double t) {
        std::vector<cplx> Z(y.data(), y.data() + M);
        Z[N] += y(M);
        tr.times.push_back(t);
        tr.l2.push_back(l2_norm(Z));
        tr.da.push_back(da_norm(Z, law.mu));
        tr.mode0.push_back(y(N));
        tr.zeta0.push_back(y(M));
        tr.modal_coeffs.push_back(std::move(Z));
    };
    record(0.0);
    for (int s = 1; s <= steps; ++s) {
        y = detail::rk4_linear(K, y, dt);
        if (s % record_every == 0 || s == steps) record(s * dt);
    }
    return tr;
}

// Target system: c_p(t) = c_p(0) e^{-mu~_p t}, evaluated exactly.
inline Trajectory integrate_target(const Basis& At, const std::vector<cplx>& init, const std::vector<double>& times) {
    const int M = 2 * At.N + 1;
    if (static_cast<int>(init.size()) != M) throw UsageError("integrate_target: init size must be 2N+1");
    const auto mu = At.eigenvalues();
    Trajectory tr;
    for (double t : times) {
        std::vector<cplx> c(M);
        for (int i = 0; i < M; ++i) c[i] = init[i] * std::exp(-mu[i] * t);
        tr.times.push_back(t);
        tr.l2.push_back(l2_norm(c));
        tr.da.push_back(da_norm(c, mu));
        tr.modal_coeffs.push_back(std::move(c));
    }
    return tr;
}

// Real random data: c_{-n} = conj(c_n), |c_n| ~ n^{-decay}, c_0 = 0.
inline std::vector<cplx> random_real_modal_data(int N, unsigned seed, double decay = 2.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<cplx> c(2 * N + 1, 0.0);
    for (int n = 1; n <= N; ++n) {
        const cplx v = cplx(g(rng), g(rng)) / std::pow(static_cast<double>(n), decay);
        c[N + n] = v;
        c[N - n] = std::conj(v);
    }
    return c;
}

inline GridFunction2 synthesize(const Basis& B, const std::vector<cplx>& c) {
    GridFunction2 out = B.pairs.front().func;
    out *= 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) out.axpy(c[i], B.pairs[i].func);
    return out;
}

struct DecayFit {
    double rate = 0.0;
    double r2 = 0.0;
};

// Least-squares fit of log y = a - rate t over t in [t0, t1].
inline DecayFit decay_rate_estimate(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12) continue;
        if (!(y[i] > 0.0)) throw NumericalError("decay_rate_estimate: non-positive norm at t=" + std::to_string(t[i]));
        const double ly = std::log(y[i]);
        sx += t[i]; sy += ly; sxx += t[i] * t[i]; sxy += t[i] * ly; syy += ly * ly;
        ++n;
    }
    if (n < 3) throw UsageError("decay_rate_estimate: fewer than 3 samples in window");
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    DecayFit f;
    f.rate = -cxy / vx;
    f.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
    return f;
}

struct LyapunovCertificate {
    double lambda = 0.0;
    std::vector<double> x, eta, xi;
    double gamma_s = 0.0;
    bool feasible = false;
    double blowup_at = -1.0;  // first x where eta stopped existing, if any
    std::vector<double> theta1, theta2;
};

// 6 lambda (1 - e^{-2(mu-lambda)L}) / (e^{2 lambda L} - e^{2 lambda (L-x)}) taken at x = L, capped by 7/(16L).
inline double gamma_s(const Params& p, double lambda) {
    const double a = 6.0 * lambda * (1.0 - std::exp(-2.0 * (p.mu - lambda) * p.L)) / (std::exp(2.0 * lambda * p.L) - 1.0);
    return std::min(7.0 / (16.0 * p.L), a);
}

inline double delta_sup(const Params& p) {
    double m = 0.0;
    for (int i = 0; i < p.grid_points; ++i) m = std::max(m, std::abs(delta(p, p.x(i))));
    return m;
}

// eta' = |delta/3| (e^{-2 lambda (x-L)} - eta^2 e^{2 lambda (x-L)}), eta(0) = e^{-2(mu-lambda)L}, by RK4 on the grid.
inline LyapunovCertificate lyapunov_certificate(const Params& p, double lambda) {
    if (!(lambda > 0.0 && lambda < p.mu)) throw UsageError("lyapunov_certificate: need 0 < lambda < mu");
    LyapunovCertificate c;
    c.lambda = lambda;
    c.gamma_s = gamma_s(p, lambda);
    const int n = p.grid_points;
    const double h = p.h(), L = p.L, ds = delta_sup(p);
    auto rhs = [&](double x, double e) {
        return std::abs(delta(p, std::clamp(x, 0.0, L)) / 3.0) *
               (std::exp(-2.0 * lambda * (x - L)) - e * e * std::exp(2.0 * lambda * (x - L)));
    };
    double e = std::exp(-2.0 * (p.mu - lambda) * L);
    c.feasible = true;
    for (int i = 0; i < n; ++i) {
        const double x = p.x(i);
        if (i > 0) {
            const double x0 = p.x(i - 1);
            const double k1 = rhs(x0, e), k2 = rhs(x0 + h / 2, e + h / 2 * k1), k3 = rhs(x0 + h / 2, e + h / 2 * k2),
                         k4 = rhs(x0 + h, e + h * k3);
            e += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        if (!std::isfinite(e) || e <= 0.0) {
            c.feasible = false;
            c.blowup_at = x;
            break;
        }
        c.x.push_back(x);
        c.eta.push_back(e);
        c.xi.push_back(std::exp(-2.0 * (p.mu - lambda) * L) +
                       ds / (6.0 * lambda) * (std::exp(2.0 * lambda * L) - std::exp(2.0 * lambda * (L - x))));
        c.theta1.push_back(std::exp(-2.0 * lambda * (x - L)) / e);
        c.theta2.push_back(e * std::exp(2.0 * lambda * (x - L)));
    }
    if (c.feasible && c.eta.back() > 1.0) c.feasible = false;
    return c;
}

// V(z) = int theta1 |z1|^2 + theta2 |z2|^2 plus the same for A~z; the latter
// uses the modal derivative sum mu~_p c_p f~_p.
inline double lyapunov_value(const LyapunovCertificate& cert, const Basis& At, const std::vector<cplx>& c) {
    if (cert.x.size() != At.pairs.front().func.f1.size()) throw UsageError("lyapunov_value: certificate grid mismatch");
    const GridFunction2 z = synthesize(At, c);
    std::vector<cplx> dc(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) dc[i] = At.pairs[i].eigenvalue * c[i];
    const GridFunction2 az = synthesize(At, dc);
    const int n = z.size();
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = cert.theta1[i] * (std::norm(z.f1[i]) + std::norm(az.f1[i])) +
               cert.theta2[i] * (std::norm(z.f2[i]) + std::norm(az.f2[i]));
    return simpson(v, z.h());
}

enum class FdBoundary { Conservative, Damped };

struct FdState {
    std::vector<cplx> z1, z2;
};

// One first-order upwind step: z1 moves right, z2 moves left; the coupling and
// the control term are explicit. Inflow values come from the reflection laws.
inline void fd_upwind_step(const Params& p, FdState& s, FdBoundary bc, cplx u, double dt,
                           const std::vector<double>& d3, const GridFunction2* profile = nullptr) {
    const int n = static_cast<int>(s.z1.size());
    const double dx = p.L / (n - 1), c = dt / dx;
    if (c > 1.0 + 1e-12) throw UsageError("fd_upwind_step: CFL " + std::to_string(c) + " exceeds 1");
    const FdState o = s;
    for (int i = 1; i < n; ++i) s.z1[i] = o.z1[i] - c * (o.z1[i] - o.z1[i - 1]) - dt * d3[i] * o.z2[i];
    for (int i = 0; i < n - 1; ++i) s.z2[i] = o.z2[i] + c * (o.z2[i + 1] - o.z2[i]) + dt * d3[i] * o.z1[i];
    if (profile && u != 0.0)
        for (int i = 0; i < n; ++i) {
            s.z1[i] += dt * u * profile->f1[i];
            s.z2[i] += dt * u * profile->f2[i];
        }
    s.z2[n - 1] = -s.z1[n - 1];
    const double r = bc == FdBoundary::Damped ? std::exp(-2.0 * p.mu * p.L) : 1.0;
    s.z1[0] = -r * s.z2[0];
}

// Uncontrolled upwind run on the working grid up to time t with CFL number cfl.
inline GridFunction2 fd_evolve(const Params& p, const GridFunction2& z0, FdBoundary bc, double t, double cfl = 1.0) {
    const int n = z0.size();
    const double dx = p.L / (n - 1);
    int steps = static_cast<int>(std::ceil(t / (cfl * dx) - 1e-9));
    const double dt = t / steps;
    std::vector<double> d3(n);
    for (int i = 0; i < n; ++i) d3[i] = delta(p, z0.x(i)) / 3.0;
    FdState s{z0.f1, z0.f2};
    for (int k = 0; k < steps; ++k) fd_upwind_step(p, s, bc, 0.0, dt, d3);
    GridFunction2 out(p.L, n);
    out.f1 = s.z1;
    out.f2 = s.z2;
    return out;
}

}  // namespace wtank
