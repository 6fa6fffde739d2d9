#pragma once

// The twelve end-to-end checks, shared by the acceptance binary and `wtank report`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "backstepping.hpp"
#include "control.hpp"
#include "feedback.hpp"
#include "finite_dim.hpp"
#include "model.hpp"
#include "simulate.hpp"
#include "spectral.hpp"

namespace wtank {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double value = 0.0;      // the measured quantity compared against tolerance
    double tolerance = 0.0;
    std::string detail;
    double seconds = 0.0;    // wall time where a runtime bound applies (kept out of detail for determinism)
};

namespace accept {

using clock = std::chrono::steady_clock;

inline double seconds_since(clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// 1. gamma = 0 spectra against i pi n/L and mu + i pi n/L, |n| <= 20, under 5 s.
inline CriterionResult unperturbed_spectrum(const Params& base) {
    CriterionResult r{1, "unperturbed spectrum"};
    Params p = base;
    p.gamma = 0.0;
    const auto t0 = clock::now();
    const Shooter s(p);
    const auto a = find_eigenvalues(s, BcKind::conservative(), -20, 20);
    const auto d = find_eigenvalues(s, BcKind::damped(p.mu), -20, 20);
    const double secs = seconds_since(t0);
    double err = 0.0;
    for (int n = -20; n <= 20; ++n) {
        err = std::max(err, std::abs(a[n + 20] - cplx(0.0, pi * n / p.L)));
        err = std::max(err, std::abs(d[n + 20] - cplx(p.mu, pi * n / p.L)));
    }
    r.value = err;
    r.tolerance = 1e-9;
    r.pass = err < 1e-9 && secs < 5.0;
    r.seconds = secs;
    r.detail = "max eigenvalue error " + fmt(err) + "; runtime limit 5 s";
    return r;
}

// 2. gamma = 0.05: |mu_n - i pi n/L| < 1/(4L) and Re mu_n = 0 to 1e-8.
inline CriterionResult perturbed_localization(const Params& base) {
    CriterionResult r{2, "perturbed spectrum localization"};
    Params p = base;
    p.gamma = 0.05;
    const auto ev = find_eigenvalues(p, BcKind::conservative(), -20, 20);
    double drift = 0.0, re = 0.0;
    for (int n = -20; n <= 20; ++n) {
        drift = std::max(drift, std::abs(ev[n + 20] - cplx(0.0, pi * n / p.L)));
        re = std::max(re, std::abs(ev[n + 20].real()));
    }
    r.value = drift;
    r.tolerance = 1.0 / (4.0 * p.L);
    r.pass = drift < r.tolerance && re < 1e-8;
    r.detail = "max drift " + fmt(drift) + ", max |Re mu_n| " + fmt(re);
    return r;
}

// 3. log-log slope of ||psi_n(g) - psi_n^(0) - g psi_n^(1)||_inf over g in {0.01, 0.02, 0.04}.
inline CriterionResult kato_order(const Params& base) {
    CriterionResult r{3, "first-order Kato series"};
    const std::vector<double> gs{0.01, 0.02, 0.04};
    const int K = 2000;  // series truncation, far above the modes tested
    double worst = 0.0;
    std::ostringstream det;
    for (int n : {1, 2, 4, 8}) {
        std::vector<double> lx, ly;
        for (double g : gs) {
            Params p = base;
            p.gamma = g;
            const Shooter s(p);
            const BcKind bc = BcKind::conservative();
            Basis B;
            B.bc = bc;
            B.pairs = {eigenfunction(s, bc, refine_root(s, bc, bc.unperturbed(n, p.L), n), n)};
            const WBases W = w_bases(p, B);
            const GridFunction2 ref = unperturbed_mode(p, n);
            const GridFunction2 psi = kato_normalize(W.psi.pairs[0].func, ref);
            const GridFunction2 p1 = first_order_perturbation(p, n, K);
            double m = 0.0;
            for (int i = 0; i < p.grid_points; ++i) {
                m = std::max(m, std::abs(psi.f1[i] - ref.f1[i] - g * p1.f1[i]));
                m = std::max(m, std::abs(psi.f2[i] - ref.f2[i] - g * p1.f2[i]));
            }
            lx.push_back(std::log(g));
            ly.push_back(std::log(m));
        }
        const double mx = (lx[0] + lx[1] + lx[2]) / 3.0, my = (ly[0] + ly[1] + ly[2]) / 3.0;
        double sxy = 0.0, sxx = 0.0;
        for (int i = 0; i < 3; ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        const double slope = sxy / sxx;
        worst = std::max(worst, std::abs(slope - 2.0));
        det << "n=" << n << " slope " << fmt(slope) << "; ";
    }
    r.value = worst;
    r.tolerance = 0.2;
    r.pass = worst <= 0.2;
    r.detail = det.str() + "max |slope-2| " + fmt(worst);
    return r;
}

// 4. Moment structure at gamma = 0 (closed form) and gamma = 0.05 (two-sided bounds).
inline CriterionResult moment_structure(const Params& base) {
    CriterionResult r{4, "moment structure"};
    Params p0 = base;
    p0.gamma = 0.0;
    const WBases W0 = w_bases(p0, build_basis(p0, BcKind::conservative(), 20));
    double even = 0.0, odd = 0.0;
    for (int n = 1; n <= 20; ++n) {
        const cplx b = moment_b(W0, n);
        if (n % 2 == 0) even = std::max(even, std::abs(b));
        else odd = std::max(odd, std::abs(b - cplx(0.0, -4.0 * p0.L / (pi * n))));
    }
    Params p = base;
    p.gamma = 0.05;
    const WBases W = w_bases(p, build_basis(p, BcKind::conservative(), 20));
    double c = 1e300, C = 0.0;
    for (int n = 1; n <= 20; ++n) {
        const double s = std::abs(moment_b(W, n)) * n;
        c = std::min(c, s / p.gamma);
        C = std::max(C, s);
    }
    r.value = std::max(even, odd);
    r.tolerance = 1e-8;
    r.pass = even < 1e-8 && odd < 1e-6 && c > 0.0 && std::isfinite(C);
    r.detail = "gamma=0: max|b_2n| " + fmt(even) + ", odd closed-form error " + fmt(odd) +
               "; gamma=0.05: fitted c " + fmt(c) + ", C " + fmt(C);
    return r;
}

// 5. |mu~_n <phi~_n,(1,1)> - (2(-1)^n e^{-mu L} - 1 - e^{-2 mu L})| <= C gamma, C stable in gamma.
inline CriterionResult target_moment(const Params& base) {
    CriterionResult r{5, "target-moment zeroth order"};
    const int N = 10;
    std::vector<double> Cs;
    for (double g : {0.01, 0.02}) {
        Params p = base;
        p.gamma = g;
        const Basis At = build_basis(p, BcKind::damped(p.mu), N);
        double dev = 0.0;
        for (int n = -N; n <= N; ++n) {
            const auto& phi = At.dual(n).func;
            std::vector<cplx> s(phi.size());
            for (int i = 0; i < phi.size(); ++i) s[i] = std::conj(phi.f1[i] + phi.f2[i]);
            const cplx q = -At.eigenvalue(n) * simpson(s, phi.h());
            const double sg = (n % 2 == 0) ? 1.0 : -1.0;
            const double ref = 2.0 * sg * std::exp(-p.mu * p.L) - 1.0 - std::exp(-2.0 * p.mu * p.L);
            dev = std::max(dev, std::abs(q - ref));
        }
        Cs.push_back(dev / g);
    }
    const double ratio = Cs[1] / Cs[0];
    r.value = std::abs(ratio - 1.0);
    r.tolerance = 0.2;
    r.pass = r.value <= 0.2;
    r.detail = "fitted C " + fmt(Cs[0]) + " (gamma=0.01), " + fmt(Cs[1]) + " (gamma=0.02), ratio " + fmt(ratio);
    return r;
}

// 6. Open-loop steering of single modes n in {1,2,3}, gamma = 0.05, N = 12, with spillover modes.
inline CriterionResult steering(const Params& base) {
    CriterionResult r{6, "open-loop steering"};
    Params p = base;
    p.gamma = 0.05;
    const int N = 12;
    const Shooter s(p);
    const Basis A = build_basis(s, BcKind::conservative(), N);
    const Basis A2 = build_basis(s, BcKind::conservative(), 2 * N);
    const WBases W = w_bases(p, A);
    const DualBasis d = dual_exponentials(p, A.eigenvalues());
    double err = 0.0, mass = 0.0;
    for (int k : {1, 2, 3}) {
        std::vector<cplx> tg(2 * N + 1, 0.0);
        tg[N + k] = 1.0;
        const ControlSignal sig = synthesize_open_loop(p, W, d, tg);
        const SteeringResult res = simulate_open_loop(p, A2, sig, tg);
        err = std::max(err, res.relative_error);
        mass = std::max(mass, res.mass_drift);
    }
    r.value = err;
    r.tolerance = 5e-2;
    r.pass = err < 5e-2 && mass < 1e-6;
    r.detail = "max terminal relative modal error " + fmt(err) + " (|n| <= " + std::to_string(2 * N) +
               "), max mass drift " + fmt(mass);
    return r;
}

// 7. Dirichlet-sum driver at N = 40, gamma = 0.05, |m| <= 5.
inline CriterionResult dirichlet_sum(const Params& base) {
    CriterionResult r{7, "TB=B partial sums"};
    Params p = base;
    p.gamma = 0.05;
    const Shooter s(p);
    const Basis A = build_basis(s, BcKind::conservative(), 40);
    const Basis At = build_basis(s, BcKind::damped(p.mu), 40);
    double err = 0.0;
    for (int m = -5; m <= 5; ++m) err = std::max(err, dirichlet_driver(A, At, m).error);
    r.value = err;
    r.tolerance = 5e-2;
    r.pass = err < 5e-2;
    r.detail = "max Dirichlet-sum error over |m| <= 5: " + fmt(err);
    return r;
}

struct ClosedLoopSetup {
    Params p;
    Basis A, At;
    FeedbackLaw law;
};

inline ClosedLoopSetup closed_loop_setup(const Params& base, int N) {
    ClosedLoopSetup c;
    c.p = base;
    c.p.gamma = 0.03;
    c.p.mu = 2.0 / c.p.L;
    c.p.nu = 0.5;
    const Shooter s(c.p);
    c.A = build_basis(s, BcKind::conservative(), N);
    c.At = build_basis(s, BcKind::damped(c.p.mu), N);
    c.law = feedback_coefficients(c.p, c.A, virtual_profile(c.p, c.A));
    return c;
}

// 8. Truncated closed-loop eigenvalues within 0.1 mu of -mu~_p for |p| <= 10, N = 41, under 30 s.
inline CriterionResult closed_loop_spectrum_check(const Params& base) {
    CriterionResult r{8, "closed-loop spectrum"};
    const auto t0 = clock::now();
    const ClosedLoopSetup c = closed_loop_setup(base, 41);
    const auto eigs = closed_loop_spectrum(c.law);
    std::vector<cplx> tg;
    for (int q = -10; q <= 10; ++q) tg.push_back(-c.At.eigenvalue(q));
    const auto dist = spectrum_distance(eigs, tg);
    const double secs = seconds_since(t0);
    const double worst = *std::max_element(dist.begin(), dist.end());
    r.value = worst;
    r.tolerance = 0.1 * c.p.mu;
    r.pass = worst < r.tolerance && secs < 30.0;
    r.detail = "max distance to -mu~_p over |p| <= 10: " + fmt(worst) + " (p=0: " + fmt(dist[10]) + ", |p|=10: " +
               fmt(dist[20]) + "); runtime limit 30 s";
    r.seconds = secs;
    return r;
}

// 9. Fitted D(A)-weighted decay rate >= 0.7 (3 mu/4), R^2 > 0.98, for 10 seeded real data.
inline CriterionResult closed_loop_decay(const Params& base) {
    CriterionResult r{9, "closed-loop decay"};
    const ClosedLoopSetup c = closed_loop_setup(base, 41);
    const double mu = c.p.mu, need = 0.7 * 0.75 * mu;
    double worst_rate = 1e300, worst_r2 = 1.0;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const auto init = random_real_modal_data(c.law.N, seed);
        const Trajectory tr = integrate_closed_loop(c.p, c.law, init, 0.0, 15.0 / mu, 10);
        const DecayFit f = decay_rate_estimate(tr.times, tr.da, 5.0 / mu, 15.0 / mu);
        worst_rate = std::min(worst_rate, f.rate);
        worst_r2 = std::min(worst_r2, f.r2);
    }
    r.value = worst_rate;
    r.tolerance = need;
    r.pass = worst_rate >= need && worst_r2 > 0.98;
    r.detail = "min fitted rate " + fmt(worst_rate) + " (need " + fmt(need) + "), min R^2 " + fmt(worst_r2);
    return r;
}

// 10. Lyapunov certificate at lambda = mu/2 and the V e^{2 lambda t} drift along target trajectories.
inline CriterionResult lyapunov(const Params& base) {
    CriterionResult r{10, "Lyapunov certificate"};
    const Params& p = base;
    const double lambda = p.mu / 2.0;
    const LyapunovCertificate cert = lyapunov_certificate(p, lambda);
    const bool in_regime = p.gamma < cert.gamma_s;
    double gap = 0.0;  // max(eta - xi)
    for (std::size_t i = 0; i < cert.eta.size(); ++i) gap = std::max(gap, cert.eta[i] - cert.xi[i]);
    const int N = 20;
    const Basis At = build_basis(p, BcKind::damped(p.mu), N);
    std::vector<double> ts;
    const int steps = 200;
    for (int k = 0; k <= steps; ++k) ts.push_back(10.0 / p.mu * k / steps);
    double drift = 0.0;
    for (unsigned seed = 1; seed <= 3 && cert.feasible; ++seed) {
        const Trajectory tr = integrate_target(At, random_real_modal_data(N, seed), ts);
        double v0 = 0.0, lo = 1e300;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const double g = lyapunov_value(cert, At, tr.modal_coeffs[k]) * std::exp(2.0 * lambda * ts[k]);
            if (k == 0) v0 = g;
            lo = std::min(lo, g);
            drift = std::max(drift, (g - lo) / v0);
        }
    }
    r.value = drift;
    r.tolerance = 1e-3;
    r.pass = in_regime && cert.feasible && gap <= 1e-12 && drift < 1e-3;
    r.detail = "gamma_s " + fmt(cert.gamma_s) + ", eta(L) " + fmt(cert.eta.empty() ? NAN : cert.eta.back()) +
               ", max(eta-xi) " + fmt(gap) + ", max upward drift of V e^{2 lambda t} " + fmt(drift);
    return r;
}

// 11. 100 seeded controllable pairs, n <= 6.
inline CriterionResult finite_oracle(unsigned seed = 20240611u) {
    CriterionResult r{11, "finite-dimensional oracle"};
    std::mt19937_64 rng(seed);
    double res = 0.0, eig = 0.0, paths = 0.0;
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + k % 5;
        const LinearPair s = random_pair(rng, n);
        const LinearPair st = random_pair(rng, n, &s.B);
        const Backstepping b = backstep_pair(s, st);
        const Backstepping q = backstep_pair_lsq(s, st);
        res = std::max({res, b.residual_op, b.residual_b});
        eig = std::max(eig, eigenvalue_mismatch(s.A + s.B * b.K, st.A));
        paths = std::max({paths, (b.T - q.T).cwiseAbs().maxCoeff(), (b.K - q.K).cwiseAbs().maxCoeff()});
    }
    r.value = res;
    r.tolerance = 1e-10;
    r.pass = res < 1e-10 && eig < 1e-8 && paths < 1e-8;
    r.detail = "max residual " + fmt(res) + ", max eigenvalue mismatch " + fmt(eig) + ", path disagreement " + fmt(paths);
    return r;
}

// 12. f_{-n} = (-f_{n,2}, -f_{n,1}) = conj f_n, conjugate-symmetric feedback table, real closed-loop trajectories.
inline CriterionResult symmetry(const Params& base) {
    CriterionResult r{12, "symmetry and reality"};
    const ClosedLoopSetup c = closed_loop_setup(base, 20);
    const int N = c.A.N;
    double fs = 0.0, table = 0.0;
    for (int n = 1; n <= N; ++n) {
        const auto& a = c.A.at(n).func;
        const auto& b = c.A.at(-n).func;
        for (int i = 0; i < a.size(); ++i) {
            fs = std::max(fs, std::abs(b.f1[i] + a.f2[i]));
            fs = std::max(fs, std::abs(b.f2[i] + a.f1[i]));
            fs = std::max(fs, std::abs(b.f1[i] - std::conj(a.f1[i])));
        }
        table = std::max(table, std::abs(c.law.coeff(-n) - std::conj(c.law.coeff(n))) / std::abs(c.law.coeff(n)));
    }
    const Trajectory tr = integrate_closed_loop(c.p, c.law, random_real_modal_data(N, 7), 0.0, 5.0, 50);
    double re = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const auto& Z = tr.modal_coeffs[k];
        const double scale = tr.l2[0];
        for (int n = 0; n <= N; ++n) re = std::max(re, std::abs(Z[N - n] - std::conj(Z[N + n])) / scale);
        re = std::max(re, std::abs(tr.zeta0[k].imag()) / scale);
    }
    r.value = std::max({fs, table, re});
    r.tolerance = 1e-10;
    r.pass = r.value < 1e-10;
    r.detail = "eigenfunction symmetry " + fmt(fs) + ", feedback table " + fmt(table) + ", trajectory reality " + fmt(re);
    return r;
}

}  // namespace accept

// Runs one criterion; solver exceptions become a FAIL with the message.
inline CriterionResult run_criterion(int id, const Params& p) {
    using F = std::function<CriterionResult()>;
    const std::vector<std::pair<std::string, F>> table{
        {"unperturbed spectrum", [&] { return accept::unperturbed_spectrum(p); }},
        {"perturbed spectrum localization", [&] { return accept::perturbed_localization(p); }},
        {"first-order Kato series", [&] { return accept::kato_order(p); }},
        {"moment structure", [&] { return accept::moment_structure(p); }},
        {"target-moment zeroth order", [&] { return accept::target_moment(p); }},
        {"open-loop steering", [&] { return accept::steering(p); }},
        {"TB=B partial sums", [&] { return accept::dirichlet_sum(p); }},
        {"closed-loop spectrum", [&] { return accept::closed_loop_spectrum_check(p); }},
        {"closed-loop decay", [&] { return accept::closed_loop_decay(p); }},
        {"Lyapunov certificate", [&] { return accept::lyapunov(p); }},
        {"finite-dimensional oracle", [&] { return accept::finite_oracle(); }},
        {"symmetry and reality", [&] { return accept::symmetry(p); }},
    };
    if (id < 1 || id > static_cast<int>(table.size())) throw UsageError("criterion id must be in 1..12");
    try {
        return table[id - 1].second();
    } catch (const Error& e) {
        CriterionResult r{id, table[id - 1].first};
        r.detail = std::string("error: ") + e.what();
        return r;
    }
}

inline constexpr int criterion_count = 12;

}  // namespace wtank
