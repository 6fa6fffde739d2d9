#pragma once

// Stabilizing feedback for the extended system dZ/dt = -A Z + u I_nu, with
// Z = zeta + zeta0 f_0 and I_nu = I + nu f_0.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "model.hpp"
#include "spectral.hpp"

namespace wtank {

// I + nu f_0
inline GridFunction2 virtual_profile(const Params& p, const Basis& A) {
    if (p.nu == 0.0) throw UsageError("virtual_profile: nu must be nonzero");
    GridFunction2 g = control_profile(p);
    g.axpy(p.nu, A.at(0).func);
    return g;
}

// Moments <g, f_n> for n = -N..N.
inline std::vector<cplx> moments(const GridFunction2& g, const Basis& A) {
    std::vector<cplx> m;
    m.reserve(A.pairs.size());
    for (const auto& e : A.pairs) m.push_back(inner_product(g, e.func));
    return m;
}

struct FeedbackLaw {
    int N = 0;
    double nu = 0.5;
    double mu_internal = 0.0;
    std::vector<cplx> coeffs;   // <f_n, F>
    std::vector<cplx> inu;      // <I_nu, f_n>
    std::vector<cplx> mu;       // eigenvalues mu_n
    std::vector<double> f10;    // f_{n,1}(0)
    std::vector<cplx> singular; // h_n
    std::vector<cplx> tau;      // tau_n^I
    double c_growth = 0.0, C_growth = 0.0;

    cplx coeff(int n) const { return coeffs.at(n + N); }
};

// <f_n, F> = -2 tanh(mu L) f_{n,1}(0)^2 / (2L <I_nu, f_n>)
// The 2L accounts for the 1/(2L) prefactor of the inner product.
inline FeedbackLaw feedback_coefficients(const Params& p, const Basis& A, const GridFunction2& Inu) {
    FeedbackLaw law;
    law.N = A.N;
    law.nu = p.nu;
    law.mu_internal = p.mu;
    law.inu = moments(Inu, A);
    const double t = std::tanh(p.mu * p.L);
    for (int n = -A.N; n <= A.N; ++n) {
        const auto& e = A.at(n);
        const cplx m = law.inu[n + A.N];
        if (std::abs(m) < 1e-10)
            throw RegimeError("vanishing moment <I_nu, f_n> at n=" + std::to_string(n) + ": mode not controllable");
        const double f10 = e.boundary[0].real();
        law.f10.push_back(f10);
        law.mu.push_back(e.eigenvalue);
        law.coeffs.push_back(-2.0 * t * f10 * f10 / (2.0 * p.L * m));
    }
    double lo = 1e300, hi = 0.0;
    for (int n = -A.N; n <= A.N; ++n) {
        const double r = std::abs(law.coeffs[n + A.N]) / (1.0 + std::abs(n));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    law.c_growth = lo;
    law.C_growth = hi;
    return law;
}

struct SingularSplit {
    std::vector<cplx> h;        // singular part
    std::vector<cplx> tau;      // tau_n^I
    std::vector<cplx> regular;  // (<f_n,F> - h_n)/mu_n, zero at n = 0
    double tau_min = 0.0, tau_max = 0.0;  // over n != 0
    std::vector<double> tail;   // tail[K] = sum over K < |n| <= N of |regular_n|^2
};

// tau_n = e^{int_0^L delta} f_{n,1}(L)/f_{n,1}(0) - 1 and h_n = tanh(mu L) f_{n,1}(0) mu_n / tau_n.
inline SingularSplit singular_split(const Params& p, FeedbackLaw& law, const Basis& A) {
    SingularSplit s;
    const int N = A.N;
    const double t = std::tanh(p.mu * p.L), wL = exp_weight(p, p.L);
    s.tau_min = 1e300;
    for (int n = -N; n <= N; ++n) {
        const auto& e = A.at(n);
        const cplx tau = wL * e.boundary[2] / e.boundary[0] - 1.0;
        s.tau.push_back(tau);
        if (n == 0) {
            s.h.push_back(0.0);
            s.regular.push_back(0.0);
            continue;
        }
        if (std::abs(tau) < 1e-6) throw RegimeError("|tau_n^I| below 1e-6 at n=" + std::to_string(n));
        s.tau_min = std::min(s.tau_min, std::abs(tau));
        s.tau_max = std::max(s.tau_max, std::abs(tau));
        const cplx h = t * e.boundary[0].real() * e.eigenvalue / tau;
        s.h.push_back(h);
        s.regular.push_back((law.coeffs[n + N] - h) / e.eigenvalue);
    }
    s.tail.assign(N + 1, 0.0);
    for (int K = N - 1; K >= 0; --K)
        s.tail[K] = s.tail[K + 1] + std::norm(s.regular[K + 1 + N]) + std::norm(s.regular[-(K + 1) + N]);
    law.singular = s.h;
    law.tau = s.tau;
    return s;
}

// <Z, F> for Z = sum_n c_n f_n (table applied linearly to the coefficients).
inline cplx apply_feedback(const FeedbackLaw& law, const std::vector<cplx>& c) {
    if (static_cast<int>(c.size()) != 2 * law.N + 1) throw UsageError("apply_feedback: coefficient vector size mismatch");
    cplx u = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) u += c[i] * law.coeffs[i];
    return u;
}

struct PhysicalFeedback {
    double mu_phys = 0.0, mu_internal = 0.0;
    std::vector<cplx> coeffs;        // <(h_n, v_n), F_1>
    std::vector<cplx> zeta_coeffs;   // feedback_coefficients at mu_internal, for comparison
    cplx u2_coefficient = 0.0;       // (nu L / L_gamma) <(h_0, v_0), F_1>
    double tanh_ratio = 0.0;         // tanh(4 mu_phys L) / tanh(mu_internal L)
    double max_rel_diff = 0.0;
};

// Physical-coordinate feedback for a requested physical decay rate mu_phys;
// the internal construction runs with mu = 4 mu_phys. The modes (h_n, v_n) are
// the physical preimages of the f_n, and the coefficients are evaluated by
// quadrature on the physical grid:
//   <(h_n,v_n),F_1> = -tanh(4 mu_phys L)/H(0) h_n(0)^2 / int_0^L L/(L_g sqrt H) W^2 conj(v_n) dx,
//   W(x) = (H(x)/H(0))^{3/4};  n = 0: -2 tanh(4 mu_phys L)/H(0) h_0(0)^2 / (2 L nu).
inline PhysicalFeedback physical_feedback(const Params& phys, const Basis& A) {
    if (!(phys.gamma > 0.0)) throw RegimeError("physical_feedback requires gamma > 0");
    Params p = phys;
    p.mu = 4.0 * phys.mu;
    PhysicalFeedback out;
    out.mu_phys = phys.mu;
    out.mu_internal = p.mu;
    const double t = std::tanh(4.0 * phys.mu * p.L);
    out.tanh_ratio = t / std::tanh(p.mu * p.L);
    const FeedbackLaw law = feedback_coefficients(p, A, virtual_profile(p, A));
    out.zeta_coeffs = law.coeffs;
    const double H0 = steady_state_height(p, 0.0), lg = l_gamma(p);
    const int n = p.grid_points;
    std::vector<double> kern(n);
    for (int i = 0; i < n; ++i) {
        const double H = steady_state_height(p, p.x(i));
        const double W = std::pow(H / H0, 0.75);
        kern[i] = p.L / (lg * std::sqrt(H)) * W * W;
    }
    for (int m = -A.N; m <= A.N; ++m) {
        const PhysicalState ps = zeta_to_physical(p, A.at(m).func);
        const cplx h0 = ps.h[0];
        cplx c;
        if (m == 0) {
            c = -2.0 * t / H0 * h0 * h0 / (2.0 * p.L * p.nu);
        } else {
            std::vector<cplx> integrand(n);
            for (int i = 0; i < n; ++i) integrand[i] = kern[i] * std::conj(ps.v[i]);
            c = -t / H0 * h0 * h0 / simpson(integrand, p.h());
        }
        out.coeffs.push_back(c);
        const cplx ref = law.coeffs[m + A.N];
        out.max_rel_diff = std::max(out.max_rel_diff, std::abs(c - ref) / std::abs(ref));
    }
    out.u2_coefficient = p.nu * p.L / lg * out.coeffs[A.N];
    return out;
}

}  // namespace wtank
