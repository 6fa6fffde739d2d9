#pragma once

// Eigenstructure of A = Lambda d/dx + delta J (conservative reflections), of the
// damped operator A~ (reflection e^{-2 mu L} at x = 0) and of their adjoints, by
// shooting on the eigen-ODE; first-order perturbation series around gamma = 0.

#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"

namespace wtank {

enum class BcTag { Conservative, ConservativeAdjoint, Damped, DampedAdjoint };

struct BcKind {
    BcTag tag = BcTag::Conservative;
    double damping = 0.0;  // mu, used by the damped tags

    static BcKind conservative() { return {BcTag::Conservative, 0.0}; }
    static BcKind conservative_adjoint() { return {BcTag::ConservativeAdjoint, 0.0}; }
    static BcKind damped(double mu) { return {BcTag::Damped, mu}; }
    static BcKind damped_adjoint(double mu) { return {BcTag::DampedAdjoint, mu}; }

    bool adjoint() const { return tag == BcTag::ConservativeAdjoint || tag == BcTag::DampedAdjoint; }
    bool damped() const { return tag == BcTag::Damped || tag == BcTag::DampedAdjoint; }

    // Left boundary value f(0) that satisfies the boundary condition at x = 0.
    std::array<cplx, 2> seed(double L) const {
        switch (tag) {
            case BcTag::Damped: return {cplx(-std::exp(-2.0 * damping * L)), cplx(1.0)};
            case BcTag::DampedAdjoint: return {cplx(-std::exp(2.0 * damping * L)), cplx(1.0)};
            default: return {cplx(1.0), cplx(-1.0)};
        }
    }
    // Eigenvalue of the unperturbed operator for mode n.
    cplx unperturbed(int n, double L) const {
        const cplx base = (damped() ? damping : 0.0) + cplx(0.0, pi * n / L);
        return adjoint() ? std::conj(base) : base;
    }
    std::string name() const {
        switch (tag) {
            case BcTag::Conservative: return "conservative";
            case BcTag::ConservativeAdjoint: return "conservative_adjoint";
            case BcTag::Damped: return "damped";
            case BcTag::DampedAdjoint: return "damped_adjoint";
        }
        return "?";
    }
};

enum class Normalization { Orthonormal, KatoNormalized, Biorthonormal, UnitNorm };

struct EigenPair {
    cplx eigenvalue;
    int mode_index = 0;
    GridFunction2 func;
    std::array<cplx, 4> boundary{};  // f1(0), f2(0), f1(L), f2(L)
    double ode_error = 0.0;          // Richardson estimate, max over nodes, relative to max |f|
    double bc_residual = 0.0;        // |f1(L)+f2(L)| / max |f|

    void refresh_boundary() {
        const int n = func.size();
        boundary = {func.f1[0], func.f2[0], func.f1[n - 1], func.f2[n - 1]};
    }
};

struct Basis {
    BcKind bc;
    int N = 0;
    Normalization normalization = Normalization::Orthonormal;
    std::vector<EigenPair> pairs;  // n = -N..N
    std::vector<EigenPair> duals;  // matched biorthogonal family (damped bases)
    double gram_deviation = 0.0;

    const EigenPair& at(int n) const { return pairs.at(n + N); }
    const EigenPair& dual(int n) const { return duals.at(n + N); }
    cplx eigenvalue(int n) const { return at(n).eigenvalue; }
    std::vector<cplx> eigenvalues() const {
        std::vector<cplx> v;
        for (const auto& p : pairs) v.push_back(p.eigenvalue);
        return v;
    }
    int size() const { return 2 * N + 1; }
};

// ---------------------------------------------------------------------------
// Shooting

// RK4 integrator for f1' = lam f1 - (delta/3) f2, f2' = -lam f2 - (delta/3) f1
// on the shared grid (step h) and on the half-step grid; node values are
// Richardson-combined, which also gives the error estimate.
class Shooter {
public:
    explicit Shooter(const Params& p) : p_(p), n_(p.grid_points) {
        p.validate();
        const int m = 4 * (n_ - 1);
        d_.resize(m + 1);
        for (int k = 0; k <= m; ++k) d_[k] = delta(p, k == m ? p.L : k * (p.L / m)) / 3.0;
    }

    const Params& params() const { return p_; }

    struct Result {
        cplx f1L, f2L;
        double error_estimate = 0.0;
    };

    // lam is the ODE parameter (for adjoint operators the caller passes -eigenvalue).
    Result integrate(cplx lam, std::array<cplx, 2> seed, GridFunction2* out = nullptr) const {
        const double h = p_.L / (n_ - 1);
        cplx a = seed[0], b = seed[1];  // coarse
        cplx c = seed[0], e = seed[1];  // fine
        double err = 0.0, scale = std::max(std::abs(a), std::abs(b));
        if (out) {
            *out = GridFunction2(p_.L, n_);
            out->f1[0] = seed[0];
            out->f2[0] = seed[1];
        }
        for (int i = 0; i < n_ - 1; ++i) {
            step(lam, d_[4 * i], d_[4 * i + 2], d_[4 * i + 4], h, a, b);
            step(lam, d_[4 * i], d_[4 * i + 1], d_[4 * i + 2], h / 2, c, e);
            step(lam, d_[4 * i + 2], d_[4 * i + 3], d_[4 * i + 4], h / 2, c, e);
            const cplx r1 = (16.0 * c - a) / 15.0, r2 = (16.0 * e - b) / 15.0;
            err = std::max({err, std::abs(c - a) / 15.0, std::abs(e - b) / 15.0});
            scale = std::max({scale, std::abs(r1), std::abs(r2)});
            if (out) {
                out->f1[i + 1] = r1;
                out->f2[i + 1] = r2;
            }
        }
        return {(16.0 * c - a) / 15.0, (16.0 * e - b) / 15.0, err / scale};
    }

private:
    static void step(cplx lam, double d0, double dm, double d1, double h, cplx& x, cplx& y) {
        auto fx = [&](double d, cplx u, cplx v) { return lam * u - d * v; };
        auto fy = [&](double d, cplx u, cplx v) { return -lam * v - d * u; };
        const cplx k1x = fx(d0, x, y), k1y = fy(d0, x, y);
        const cplx x2 = x + 0.5 * h * k1x, y2 = y + 0.5 * h * k1y;
        const cplx k2x = fx(dm, x2, y2), k2y = fy(dm, x2, y2);
        const cplx x3 = x + 0.5 * h * k2x, y3 = y + 0.5 * h * k2y;
        const cplx k3x = fx(dm, x3, y3), k3y = fy(dm, x3, y3);
        const cplx x4 = x + h * k3x, y4 = y + h * k3y;
        const cplx k4x = fx(d1, x4, y4), k4y = fy(d1, x4, y4);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    }

    Params p_;
    int n_;
    std::vector<double> d_;  // delta/3 on the quarter-step grid
};

inline cplx ode_parameter(const BcKind& bc, cplx lambda) { return bc.adjoint() ? -lambda : lambda; }

// Right boundary residual f1(L) + f2(L) of the solution started from the left seed.
inline cplx shoot(const Shooter& s, const BcKind& bc, cplx lambda) {
    const auto r = s.integrate(ode_parameter(bc, lambda), bc.seed(s.params().L));
    return r.f1L + r.f2L;
}

inline cplx shoot(const Params& p, const BcKind& bc, cplx lambda) { return shoot(Shooter(p), bc, lambda); }

// Secant refinement of a root of shoot() from the given seed; central-difference
// Newton as a fallback when the secant stalls.
inline cplx refine_root(const Shooter& s, const BcKind& bc, cplx seed, int n_for_msg = 0) {
    const double L = s.params().L;
    const double step_tol = 1e-14 * (1.0 + std::abs(seed));
    // The perturbation direction respects conjugation so that mode -n is the mirror of mode n.
    const cplx dl = cplx(0.0, seed.imag() < 0.0 ? -1e-6 : 1e-6) / L;
    cplx x0 = seed, x1 = seed + dl;
    cplx r0 = shoot(s, bc, x0);
    if (r0 == 0.0) return x0;
    cplx r1 = shoot(s, bc, x1);
    for (int it = 0; it < 60; ++it) {
        if (r1 == 0.0) return x1;
        const cplx den = r1 - r0;
        cplx x2;
        if (den == 0.0 || !std::isfinite(std::abs(den))) {
            const double eps = 1e-7 / L;
            const cplx dr = (shoot(s, bc, x1 + eps) - shoot(s, bc, x1 - eps)) / (2.0 * eps);
            if (dr == 0.0) break;
            x2 = x1 - r1 / dr;
        } else {
            x2 = x1 - r1 * (x1 - x0) / den;
        }
        if (!std::isfinite(x2.real()) || !std::isfinite(x2.imag())) break;
        x0 = x1;
        r0 = r1;
        x1 = x2;
        r1 = shoot(s, bc, x1);
        if (std::abs(x1 - x0) < step_tol) return x1;
    }
    std::ostringstream os;
    os << "eigenvalue search did not converge for " << bc.name() << " mode n=" << n_for_msg;
    throw NumericalError(os.str());
}

// Roots of shoot() seeded at the unperturbed eigenvalues for n in [n_lo, n_hi].
inline std::vector<cplx> find_eigenvalues(const Shooter& s, const BcKind& bc, int n_lo, int n_hi) {
    const double L = s.params().L;
    std::vector<cplx> out;
    std::vector<int> drifted;
    for (int n = n_lo; n <= n_hi; ++n) {
        const cplx seed = bc.unperturbed(n, L);
        const cplx root = refine_root(s, bc, seed, n);
        if (std::abs(root - seed) >= 1.0 / (2.0 * L)) drifted.push_back(n);
        out.push_back(root);
    }
    if (!drifted.empty()) {
        std::ostringstream os;
        os << "eigenvalues left the perturbation regime (drift >= 1/(2L)) for n =";
        for (int n : drifted) os << ' ' << n;
        throw RegimeError(os.str());
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j)
            if (std::abs(out[i] - out[j]) < 1e-8) {
                std::ostringstream os;
                os << "eigenvalue collision between n=" << n_lo + static_cast<int>(i) << " and n=" << n_lo + static_cast<int>(j);
                throw NumericalError(os.str());
            }
    return out;
}

inline std::vector<cplx> find_eigenvalues(const Params& p, const BcKind& bc, int n_lo, int n_hi) {
    return find_eigenvalues(Shooter(p), bc, n_lo, n_hi);
}

// Re-integrates at a converged root and normalizes:
//   conservative tags: ||f|| = 1 with f1(0) > 0;
//   Damped: f1(0) = 1;  DampedAdjoint: ||f|| = 1 (rescaled later for biorthonormality).
inline EigenPair eigenfunction(const Shooter& s, const BcKind& bc, cplx lambda, int n = 0) {
    EigenPair ep;
    ep.eigenvalue = lambda;
    ep.mode_index = n;
    const auto r = s.integrate(ode_parameter(bc, lambda), bc.seed(s.params().L), &ep.func);
    ep.ode_error = r.error_estimate;
    if (bc.tag == BcTag::Damped) {
        ep.func *= 1.0 / ep.func.f1[0];
    } else {
        const double nr = norm(ep.func);
        if (!(nr > 0.0) || !std::isfinite(nr)) throw NumericalError("zero-norm eigenfunction");
        ep.func *= 1.0 / nr;
    }
    ep.refresh_boundary();
    const double m = max_abs(ep.func);
    ep.bc_residual = std::abs(ep.boundary[2] + ep.boundary[3]) / m;
    return ep;
}

inline EigenPair eigenfunction(const Params& p, const BcKind& bc, cplx lambda, int n = 0) {
    return eigenfunction(Shooter(p), bc, lambda, n);
}

// G(i,j) = <a_i, b_j>
inline Eigen::MatrixXcd gram(const std::vector<EigenPair>& a, const std::vector<EigenPair>& b) {
    if (a.empty() || b.empty()) return {};
    const int n = a[0].func.size();
    const double h = a[0].func.h(), L = a[0].func.L;
    Eigen::MatrixXcd A(2 * n, a.size()), B(2 * n, b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        check_same_grid(a[0].func, a[j].func);
        for (int i = 0; i < n; ++i) {
            const double w = simpson_weight(i, n, h) / (2.0 * L);
            A(i, j) = w * a[j].func.f1[i];
            A(n + i, j) = w * a[j].func.f2[i];
        }
    }
    for (std::size_t j = 0; j < b.size(); ++j) {
        check_same_grid(a[0].func, b[j].func);
        for (int i = 0; i < n; ++i) {
            B(i, j) = b[j].func.f1[i];
            B(n + i, j) = b[j].func.f2[i];
        }
    }
    return A.transpose() * B.conjugate();
}

// Assembles n = -N..N. Damped bases get their DampedAdjoint duals, rescaled so
// that <f~_n, phi~_m> = delta_nm.
inline Basis build_basis(const Shooter& s, const BcKind& bc, int N, double gram_tol = 1e-6) {
    const Params& p = s.params();
    Basis B;
    B.bc = bc;
    B.N = N;
    const auto ev = find_eigenvalues(s, bc, -N, N);
    for (int n = -N; n <= N; ++n) B.pairs.push_back(eigenfunction(s, bc, ev[n + N], n));

    std::ostringstream bad;
    int nbad = 0;
    if (bc.tag == BcTag::Damped) {
        B.normalization = Normalization::Biorthonormal;
        const BcKind adj = BcKind::damped_adjoint(bc.damping);
        for (int n = -N; n <= N; ++n) {
            const cplx root = refine_root(s, adj, std::conj(ev[n + N]), n);
            EigenPair d = eigenfunction(s, adj, root, n);
            d.func *= 1.0 / std::conj(inner_product(B.pairs[n + N].func, d.func));
            d.refresh_boundary();
            B.duals.push_back(std::move(d));
        }
        const Eigen::MatrixXcd G = gram(B.pairs, B.duals);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) {
                const double dev = std::abs(G(i, j) - (i == j ? 1.0 : 0.0));
                B.gram_deviation = std::max(B.gram_deviation, dev);
                if (dev > gram_tol && nbad++ < 8) bad << " (" << i - N << ',' << j - N << ')';
            }
    } else if (bc.tag == BcTag::DampedAdjoint) {
        B.normalization = Normalization::UnitNorm;
    } else {
        B.normalization = Normalization::Orthonormal;
        const Eigen::MatrixXcd G = gram(B.pairs, B.pairs);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) {
                const double dev = std::abs(G(i, j) - (i == j ? 1.0 : 0.0));
                B.gram_deviation = std::max(B.gram_deviation, dev);
                if (dev > gram_tol && nbad++ < 8) bad << " (" << i - N << ',' << j - N << ')';
            }
    }
    if (nbad > 0)
        throw NumericalError("Gram condition failed for " + std::to_string(nbad) + " pairs, first:" + bad.str() +
                             "; refine grid_points or reduce N");
    for (int n = -N; n <= N; ++n) {
        if (std::abs(B.pairs[n + N].eigenvalue - bc.unperturbed(n, p.L)) >= 1.0 / (2.0 * p.L))
            throw RegimeError("eigenvalue localization |mu_n - mu_n^0| < 1/(2L) violated at n=" + std::to_string(n));
    }
    return B;
}

inline Basis build_basis(const Params& p, const BcKind& bc, int N) { return build_basis(Shooter(p), bc, N); }

// Eigenfunctions of the w-system: psi_n = e^{-int delta} f_n and chi_n = e^{+int delta} f_n,
// both normalized to unit norm (phase: first component real positive at x = 0).
struct WBases {
    Basis psi, chi;
};

inline WBases w_bases(const Params& p, const Basis& A) {
    WBases W;
    W.psi.bc = W.chi.bc = A.bc;
    W.psi.N = W.chi.N = A.N;
    W.psi.normalization = W.chi.normalization = Normalization::UnitNorm;
    std::vector<double> wt(p.grid_points);
    for (int i = 0; i < p.grid_points; ++i) wt[i] = exp_weight(p, p.x(i));
    for (const auto& e : A.pairs) {
        EigenPair ps = e, ch = e;
        ch.eigenvalue = std::conj(e.eigenvalue);
        for (int i = 0; i < p.grid_points; ++i) {
            ps.func.f1[i] /= wt[i];
            ps.func.f2[i] /= wt[i];
            ch.func.f1[i] *= wt[i];
            ch.func.f2[i] *= wt[i];
        }
        ps.func *= 1.0 / norm(ps.func);
        ch.func *= 1.0 / norm(ch.func);
        ps.refresh_boundary();
        ch.refresh_boundary();
        W.psi.pairs.push_back(std::move(ps));
        W.chi.pairs.push_back(std::move(ch));
    }
    return W;
}

// ---------------------------------------------------------------------------
// First-order perturbation around gamma = 0

// psi_k^(0) = (e^{i pi k x/L}, -e^{-i pi k x/L})
inline GridFunction2 unperturbed_mode(const Params& p, int k) {
    GridFunction2 g(p.L, p.grid_points);
    for (int i = 0; i < p.grid_points; ++i) {
        const cplx e = std::polar(1.0, pi * k * p.x(i) / p.L);
        g.f1[i] = e;
        g.f2[i] = -std::conj(e);
    }
    return g;
}

// <J0 psi_n^(0), psi_k^(0)>, J0 = [[1, 1/3], [-1/3, -1]]
inline cplx j0_coupling(int n, int k) {
    if (std::abs(n) == std::abs(k)) return 0.0;
    const double sgn = ((n + k) % 2 == 0) ? 1.0 : -1.0;
    const double val = (sgn - 1.0) * (1.0 / (n - k) + (1.0 / 3.0) / (n + k));
    return val / cplx(0.0, pi);
}

// Coefficient of psi_k^(0) in psi_n^(1).
inline cplx first_order_coefficient(const Params& p, int n, int k) {
    if (k == n) return 0.0;
    return (3.0 * p.L / 4.0) * j0_coupling(n, k) / cplx(0.0, pi * (k - n));
}

// psi_n^(1) truncated to |k - n| <= K.
inline GridFunction2 first_order_perturbation(const Params& p, int n, int K) {
    if (K < 1) throw UsageError("first_order_perturbation: K must be >= 1");
    GridFunction2 g(p.L, p.grid_points);
    std::vector<cplx> c(2 * K + 1);
    for (int j = 0; j <= 2 * K; ++j) c[j] = first_order_coefficient(p, n, n - K + j);
    for (int i = 0; i < p.grid_points; ++i) {
        const double th = pi * p.x(i) / p.L;
        const cplx z = std::polar(1.0, th);
        cplx e = std::polar(1.0, th * (n - K));  // e^{i pi k x / L} for k = n-K
        cplx s1 = 0.0, s2 = 0.0;
        for (int j = 0; j <= 2 * K; ++j) {
            if (c[j] != 0.0) {
                s1 += c[j] * e;
                s2 -= c[j] * std::conj(e);
            }
            e *= z;
            if ((j & 63) == 63) e = std::polar(1.0, th * (n - K + j + 1));  // limit drift
        }
        g.f1[i] = s1;
        g.f2[i] = s2;
    }
    return g;
}

// psi1_1(L) - psi1_1(0) - psi1_2(L) + psi1_2(0) evaluated from the series.
inline cplx first_order_boundary_combination(const Params& p, int n, int K) {
    cplx acc = 0.0;
    for (int k = n - K; k <= n + K; ++k) {
        const double sk = (k % 2 == 0) ? 1.0 : -1.0;
        acc += first_order_coefficient(p, n, k) * 2.0 * (sk - 1.0);
    }
    return acc;
}

// Rescales psi so that <psi, ref> = 1.
inline GridFunction2 kato_normalize(const GridFunction2& psi, const GridFunction2& ref) {
    GridFunction2 g = psi;
    g *= 1.0 / inner_product(psi, ref);
    return g;
}

// Squared norm of the unperturbed damped mode under the 1/(2L) convention.
inline double damped_mode_norm2(double mu, double L) {
    return (std::exp(4.0 * mu * L) - 1.0) / (4.0 * mu * L);
}
// Same quantity without the 1/(2L) prefactor.
inline double damped_mode_norm2_unscaled(double mu, double L) {
    return (std::exp(4.0 * mu * L) - 1.0) / (2.0 * mu);
}

}  // namespace wtank
