#pragma once

// Moment-method controllability of the w-system w_t + A w = u (1,1) and
// open-loop steering on [0, 2L] through the dual of {e^{mu_n (s - 2L)}}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"
#include "spectral.hpp"

namespace wtank {

// b_n: raw integral of the unit-norm adjoint eigenfunction against (1,1).
// At gamma = 0 this is -(2iL/(pi n))(1 - cos(pi n)).
inline cplx moment_b(const WBases& W, int n) {
    const auto& e = W.chi.at(n).func;
    std::vector<cplx> s(e.size());
    for (int i = 0; i < e.size(); ++i) s[i] = std::conj(e.f1[i] + e.f2[i]);
    return simpson(s, e.h());
}

inline cplx moment_a(const WBases& W, int n) {
    const auto& e = W.psi.at(n).func;
    std::vector<cplx> s(e.size());
    for (int i = 0; i < e.size(); ++i) s[i] = std::conj(e.f1[i] + e.f2[i]);
    return simpson(s, e.h());
}

// d_n in (1,1) = sum_n d_n psi_n.
inline cplx moment_d(const Params& p, const WBases& W, int n) {
    GridFunction2 one(p.L, W.psi.at(n).func.size());
    std::fill(one.f1.begin(), one.f1.end(), cplx(1.0));
    std::fill(one.f2.begin(), one.f2.end(), cplx(1.0));
    return inner_product(one, W.chi.at(n).func) / inner_product(W.psi.at(n).func, W.chi.at(n).func);
}

struct MomentRow {
    int n = 0;
    cplx b, a, inu, mu, psi_chi;
};

struct MomentReport {
    std::vector<MomentRow> rows;
    int gamma_zero_even_count = 0;
    std::vector<int> uncontrollable;   // n with |b_n| < 1e-8 (n != 0)
    double c_lower = 0.0, C_upper = 0.0;  // gamma c/n < |b_n| < C/n fitted over 1 <= n <= N
    double m_lower = 0.0, M_upper = 0.0;  // m <= |mu_n <I,f_n>| <= M, n != 0
    double gram_deviation = 0.0, max_drift = 0.0, inu0 = 0.0;
    bool riesz_ok = false, psi_chi_ok = false, drift_ok = false, moments_ok = false, inu0_ok = false;
    bool all_ok() const { return riesz_ok && psi_chi_ok && drift_ok && moments_ok && inu0_ok; }
};

inline MomentReport controllability_report(const Params& p, const Basis& A) {
    const WBases W = w_bases(p, A);
    const GridFunction2 I = control_profile(p);
    MomentReport r;
    r.gram_deviation = A.gram_deviation;
    r.riesz_ok = A.gram_deviation < 1e-6;
    r.psi_chi_ok = true;
    r.c_lower = 1e300;
    r.m_lower = 1e300;
    for (int n = -A.N; n <= A.N; ++n) {
        MomentRow row;
        row.n = n;
        row.b = moment_b(W, n);
        row.a = moment_a(W, n);
        row.inu = inner_product(I, A.at(n).func);
        row.mu = A.eigenvalue(n);
        row.psi_chi = inner_product(W.psi.at(n).func, W.chi.at(n).func);
        const double pc = std::abs(row.psi_chi);
        if (!(pc > 0.5 && pc < 2.0)) r.psi_chi_ok = false;
        r.max_drift = std::max(r.max_drift, std::abs(row.mu - BcKind::conservative().unperturbed(n, p.L)));
        if (n != 0) {
            const double bn = std::abs(row.b);
            if (bn < 1e-8) {
                r.uncontrollable.push_back(n);
                if (p.gamma == 0.0 && n % 2 == 0) ++r.gamma_zero_even_count;
            }
            if (n > 0) {
                const double scaled = bn * n;
                r.C_upper = std::max(r.C_upper, scaled);
                if (p.gamma > 0.0) r.c_lower = std::min(r.c_lower, scaled / p.gamma);
            }
            const double mi = std::abs(row.mu * row.inu);
            r.m_lower = std::min(r.m_lower, mi);
            r.M_upper = std::max(r.M_upper, mi);
        } else {
            r.inu0 = std::abs(row.inu);
        }
        r.rows.push_back(row);
    }
    if (p.gamma == 0.0) r.c_lower = 0.0;
    r.drift_ok = r.max_drift < 1.0 / (4.0 * p.L);
    r.moments_ok = r.uncontrollable.empty() && r.c_lower > 0.0;
    r.inu0_ok = r.inu0 < 1e-8;
    return r;
}

struct DualBasis {
    std::vector<cplx> mu;    // exponents, n = -N..N
    Eigen::MatrixXcd C;      // p_m = sum_k C(m,k) e_k
    std::vector<double> s;   // quadrature nodes on [0, 2L]
    double hs = 0.0;
    double condition = 0.0;
    double biorth_residual = 0.0;
};

namespace detail {

inline Eigen::MatrixXcd exp_samples(const std::vector<cplx>& mu, const std::vector<double>& s, double L) {
    Eigen::MatrixXcd E(s.size(), mu.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t k = 0; k < mu.size(); ++k) E(i, k) = std::exp(mu[k] * (s[i] - 2.0 * L));
    return E;
}

}  // namespace detail

// Gram system G C^H = I with G_{jk} = int_0^{2L} e_j conj(e_k); Simpson with 8x oversampling.
inline DualBasis dual_exponentials(const Params& p, const std::vector<cplx>& mu) {
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = i + 1; j < mu.size(); ++j)
            if (std::abs(mu[i] - mu[j]) < 1e-8) throw NumericalError("dual_exponentials: colliding exponents");
    DualBasis d;
    d.mu = mu;
    const int ns = 16 * (p.grid_points - 1) + 1;
    d.hs = 2.0 * p.L / (ns - 1);
    for (int i = 0; i < ns; ++i) d.s.push_back(i == ns - 1 ? 2.0 * p.L : i * d.hs);
    const Eigen::MatrixXcd E = detail::exp_samples(mu, d.s, p.L);
    Eigen::VectorXd w(ns);
    for (int i = 0; i < ns; ++i) w(i) = simpson_weight(i, ns, d.hs);
    const Eigen::MatrixXcd G = E.transpose() * w.asDiagonal() * E.conjugate();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
    const auto& sv = svd.singularValues();
    d.condition = sv(0) / sv(sv.size() - 1);
    if (d.condition > 1e12)
        throw NumericalError("dual_exponentials: Gram condition " + std::to_string(d.condition) + " > 1e12; reduce N");
    d.C = G.inverse().adjoint();
    // int e_n conj(p_m) = (G C^H)_{nm}
    const Eigen::MatrixXcd B = G * d.C.adjoint();
    d.biorth_residual = (B - Eigen::MatrixXcd::Identity(B.rows(), B.cols())).cwiseAbs().maxCoeff();
    return d;
}

struct ControlSignal {
    std::vector<double> t;
    std::vector<cplx> u;
    double l2 = 0.0;
};

// u = sum_n (k_n / d_n) conj(p_n) on [0, 2L]; target is indexed n = -N..N.
inline ControlSignal synthesize_open_loop(const Params& p, const WBases& W, const DualBasis& d,
                                          const std::vector<cplx>& target) {
    const int N = W.psi.N, M = 2 * N + 1;
    if (static_cast<int>(target.size()) != M || static_cast<int>(d.mu.size()) != M)
        throw UsageError("synthesize_open_loop: target, basis and duals must share N");
    if (std::abs(target[N]) > 0.0) throw UsageError("synthesize_open_loop: target must have zero mode-0 component (mass)");
    Eigen::VectorXcd coef = Eigen::VectorXcd::Zero(M);  // weights on conj(p_n)
    for (int n = -N; n <= N; ++n) {
        if (n == 0 || target[n + N] == 0.0) continue;
        const cplx dn = moment_d(p, W, n);
        if (std::abs(dn) < 1e-8)
            throw RegimeError("synthesize_open_loop: mode " + std::to_string(n) + " is not controllable (d_n = 0)");
        coef(n + N) = target[n + N] / dn;
    }
    // conj(p_m)(s) = sum_k conj(C(m,k)) conj(e_k(s)), so u = conj(E) C^H coef
    const Eigen::MatrixXcd E = detail::exp_samples(d.mu, d.s, p.L);
    const Eigen::VectorXcd u = E.conjugate() * d.C.adjoint() * coef;
    ControlSignal sig;
    sig.t = d.s;
    sig.u.assign(u.data(), u.data() + u.size());
    std::vector<double> u2(u.size());
    for (int i = 0; i < u.size(); ++i) u2[i] = std::norm(u(i));
    sig.l2 = std::sqrt(simpson(u2, d.hs));
    return sig;
}

struct SteeringResult {
    std::vector<cplx> terminal;   // modal coefficients n = -K..K at t = 2L
    double relative_error = 0.0;  // over |n| <= K against the (zero-padded) target
    double mass_drift = 0.0;
    int K = 0;
};

// Integrates w_n' = -mu_n w_n + d_n u from zero on the modes |n| <= K of B
// (K may exceed the steering window, which exposes spillover), by RK4 with step
// two quadrature spacings. Mass is tracked through the synthesized state.
inline SteeringResult simulate_open_loop(const Params& p, const Basis& A, const ControlSignal& sig,
                                         const std::vector<cplx>& target) {
    const WBases W = w_bases(p, A);
    const int K = A.N, M = 2 * K + 1;
    const int Nt = (static_cast<int>(target.size()) - 1) / 2;
    std::vector<cplx> d(M), w(M, 0.0), mu = A.eigenvalues();
    for (int n = -K; n <= K; ++n) d[n + K] = moment_d(p, W, n);
    const double hq = sig.t[1] - sig.t[0];
    const int steps = (static_cast<int>(sig.t.size()) - 1) / 2;
    auto f = [&](const std::vector<cplx>& y, cplx u) {
        std::vector<cplx> r(M);
        for (int i = 0; i < M; ++i) r[i] = -mu[i] * y[i] + d[i] * u;
        return r;
    };
    auto axpy = [&](const std::vector<cplx>& y, double a, const std::vector<cplx>& k) {
        std::vector<cplx> r(M);
        for (int i = 0; i < M; ++i) r[i] = y[i] + a * k[i];
        return r;
    };
    GridFunction2 zero = W.psi.pairs.front().func;
    zero *= 0.0;
    auto state = [&](const std::vector<cplx>& y) {
        GridFunction2 g = zero;
        for (int i = 0; i < M; ++i) g.axpy(y[i], W.psi.pairs[i].func);
        return g;
    };
    const cplx m0 = mass_functional(p, state(w));
    const double dt = 2.0 * hq;
    for (int s = 0; s < steps; ++s) {
        const cplx u0 = sig.u[2 * s], u1 = sig.u[2 * s + 1], u2 = sig.u[2 * s + 2];
        const auto k1 = f(w, u0);
        const auto k2 = f(axpy(w, dt / 2, k1), u1);
        const auto k3 = f(axpy(w, dt / 2, k2), u1);
        const auto k4 = f(axpy(w, dt, k3), u2);
        for (int i = 0; i < M; ++i) w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    SteeringResult r;
    r.K = K;
    r.terminal = w;
    double num = 0.0, den = 0.0;
    for (int n = -K; n <= K; ++n) {
        const cplx tg = std::abs(n) <= Nt ? target[n + Nt] : cplx(0.0);
        num += std::norm(w[n + K] - tg);
        den += std::norm(tg);
    }
    r.relative_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    r.mass_drift = std::abs(mass_functional(p, state(w)) - m0);
    return r;
}

}  // namespace wtank
