#include <cmath>

#include "catch_amalgamated.hpp"
#include "wtank/spectral.hpp"

using namespace wtank;

namespace {

Params with_gamma(double g) {
    Params p;
    p.gamma = g;
    return p;
}

}  // namespace

TEST_CASE("shooting residual vanishes at the unperturbed eigenvalues", "[spectral]") {
    const Params p = with_gamma(0.0);
    const Shooter s(p);
    for (int n : {-3, 0, 1, 7}) {
        CHECK(std::abs(shoot(s, BcKind::conservative(), cplx(0.0, pi * n))) < 1e-10);
        CHECK(std::abs(shoot(s, BcKind::damped(p.mu), cplx(p.mu, pi * n))) < 1e-10);
        CHECK(std::abs(shoot(s, BcKind::damped_adjoint(p.mu), cplx(p.mu, -pi * n))) < 1e-10);
    }
    CHECK(std::abs(shoot(s, BcKind::conservative(), cplx(0.0, 0.5 * pi))) > 1e-3);
}

// For a holomorphic residual the derivative along the real and imaginary
// directions must agree (d/d(i h) = d/dh).
TEST_CASE("shooting residual is holomorphic in lambda", "[spectral][property]") {
    const Params p = with_gamma(0.05);
    const Shooter s(p);
    const BcKind bc = BcKind::conservative();
    for (cplx lam : {cplx(0.3, 2.0), cplx(-0.1, 9.0), cplx(0.0, -4.0)}) {
        const double h = 1e-5;
        const cplx dr = (shoot(s, bc, lam + h) - shoot(s, bc, lam - h)) / (2.0 * h);
        const cplx di = (shoot(s, bc, lam + cplx(0, h)) - shoot(s, bc, lam - cplx(0, h))) / cplx(0, 2.0 * h);
        CHECK(std::abs(dr - di) < 1e-6 * std::max(1.0, std::abs(dr)));
    }
}

TEST_CASE("gamma = 0 spectra are exact", "[spectral]") {
    const Params p = with_gamma(0.0);
    const auto a = find_eigenvalues(p, BcKind::conservative(), -20, 20);
    const auto d = find_eigenvalues(p, BcKind::damped(p.mu), -20, 20);
    for (int n = -20; n <= 20; ++n) {
        CHECK(std::abs(a[n + 20] - cplx(0.0, pi * n)) < 1e-9);
        CHECK(std::abs(d[n + 20] - cplx(p.mu, pi * n)) < 1e-9);
    }
}

TEST_CASE("perturbed conservative spectrum: localization, imaginary, symmetric", "[spectral][property]") {
    for (double g : {0.01, 0.05, 0.1}) {
        const Params p = with_gamma(g);
        const auto ev = find_eigenvalues(p, BcKind::conservative(), -20, 20);
        CHECK(std::abs(ev[20]) < 1e-10);
        for (int n = -20; n <= 20; ++n) {
            CHECK(std::abs(ev[n + 20] - cplx(0.0, pi * n)) < 0.25);
            CHECK(std::abs(ev[n + 20].real()) < 1e-8);
            CHECK(std::abs(ev[20 - n] - std::conj(ev[n + 20])) < 1e-10);
            CHECK(std::abs(ev[20 - n] + ev[n + 20]) < 1e-8);
        }
    }
}

TEST_CASE("damped spectrum: conjugate pairs and real parts near mu", "[spectral][property]") {
    const Params p = with_gamma(0.05);
    const auto ev = find_eigenvalues(p, BcKind::damped(p.mu), -20, 20);
    for (int n = -20; n <= 20; ++n) {
        CHECK(std::abs(ev[20 - n] - std::conj(ev[n + 20])) < 1e-10);
        CHECK(std::abs(ev[n + 20].real() - p.mu) < 0.1 * p.mu);
    }
}

// The zero mode solves f1' = (delta/3) f1 with f2 = -f1, so after the w-weights
// psi_0 is base^{-1} and chi_0 is base^{2}.
TEST_CASE("zero mode closed forms", "[spectral]") {
    const Params p0 = with_gamma(0.0);
    const Basis B0 = build_basis(p0, BcKind::conservative(), 1);
    const auto& f = B0.at(0).func;
    for (int i = 0; i < f.size(); i += 100) {
        CHECK(std::abs(f.f1[i] - f.f1[0]) < 1e-12);
        CHECK(std::abs(f.f2[i] + f.f1[0]) < 1e-12);
    }
    CHECK(std::abs(norm(f) - 1.0) < 1e-12);

    const Params p = with_gamma(0.08);
    const WBases W = w_bases(p, build_basis(p, BcKind::conservative(), 1));
    const double s = std::sqrt(1.0 + p.gamma * p.L / 2.0), k = (s - std::sqrt(1.0 - p.gamma * p.L / 2.0)) / p.L;
    const auto& ps = W.psi.at(0).func;
    const auto& ch = W.chi.at(0).func;
    const cplx cp = ps.f1[0] * s, cc = ch.f1[0] / (s * s);
    for (int i = 0; i < ps.size(); ++i) {
        const double b = s - k * p.x(i);
        CHECK(std::abs(ps.f1[i] - cp / b) < 1e-7);
        CHECK(std::abs(ps.f2[i] + cp / b) < 1e-7);
        CHECK(std::abs(ch.f1[i] - cc * b * b) < 1e-7);
    }
}

TEST_CASE("bases satisfy their Gram conditions", "[spectral]") {
    const Basis B0 = build_basis(with_gamma(0.0), BcKind::conservative(), 10);
    CHECK(B0.gram_deviation < 1e-9);

    const Params p = with_gamma(0.05);
    const Basis At = build_basis(p, BcKind::damped(p.mu), 10);
    double dev = 0.0;
    for (int n = -10; n <= 10; ++n)
        for (int m = -10; m <= 10; ++m) {
            const cplx v = inner_product(At.at(n).func, At.dual(m).func);
            dev = std::max(dev, std::abs(v - (n == m ? 1.0 : 0.0)));
        }
    CHECK(dev < 1e-6);
    for (int n = -10; n <= 10; ++n) {
        const auto& e = At.at(n);
        CHECK(std::abs(e.boundary[0] + std::exp(-2.0 * p.mu * p.L) * e.boundary[1]) < 1e-10);
        CHECK(e.bc_residual < 1e-8);
        const auto& d = At.dual(n);
        CHECK(std::abs(d.boundary[0] + std::exp(2.0 * p.mu * p.L) * d.boundary[1]) < 1e-8 * std::abs(d.boundary[0]));
    }
}

TEST_CASE("eigen-ODE residual and boundary conditions", "[spectral][property]") {
    const Params p = with_gamma(0.05);
    const Basis A = build_basis(p, BcKind::conservative(), 8);
    for (const auto& e : A.pairs) {
        if (std::abs(e.mode_index) <= 6) CHECK(e.ode_error < p.ode_tol);
        CHECK(e.bc_residual < p.ode_tol);
        CHECK(std::abs(e.boundary[0] + e.boundary[1]) < 1e-12);
        CHECK(e.boundary[0].real() > 0.0);
        CHECK(std::abs(e.boundary[0].imag()) < 1e-14);
        // centred-difference residual of f1' = mu f1 - (delta/3) f2 at interior nodes
        const auto& f = e.func;
        const double h = f.h();
        double r = 0.0;
        for (int i = 100; i < f.size() - 1; i += 100) {
            const cplx d1 = (f.f1[i + 1] - f.f1[i - 1]) / (2.0 * h);
            r = std::max(r, std::abs(d1 - e.eigenvalue * f.f1[i] + delta(p, f.x(i)) / 3.0 * f.f2[i]));
        }
        CHECK(r < 1e-4 * (1.0 + std::norm(e.eigenvalue)));
    }
}

// The stored samples are Richardson-extrapolated; their error against a grid
// twice as fine stays below ode_tol for the low modes and is bounded by the
// reported (half-step) estimate everywhere.
TEST_CASE("eigenfunction samples against a refined grid", "[spectral][property]") {
    Params p = with_gamma(0.05), q = p;
    q.grid_points = 2 * p.grid_points - 1;
    const Basis A = build_basis(p, BcKind::conservative(), 12);
    const Basis B = build_basis(q, BcKind::conservative(), 12);
    for (int n = -12; n <= 12; ++n) {
        const auto& f = A.at(n).func;
        const auto& g = B.at(n).func;
        double m = 0.0;
        for (int i = 0; i < f.size(); ++i)
            m = std::max({m, std::abs(f.f1[i] - g.f1[2 * i]), std::abs(f.f2[i] - g.f2[2 * i])});
        m /= max_abs(f);
        CHECK(m < A.at(n).ode_error + 1e-14);
        if (std::abs(n) <= 10) CHECK(m < p.ode_tol);
        CHECK(std::abs(A.eigenvalue(n) - B.eigenvalue(n)) < 1e-10);
    }
}

TEST_CASE("mode symmetry of the conservative basis", "[spectral][property]") {
    const Params p = with_gamma(0.05);
    const Basis A = build_basis(p, BcKind::conservative(), 10);
    double m = 0.0;
    for (int n = 1; n <= 10; ++n) {
        const auto& a = A.at(n).func;
        const auto& b = A.at(-n).func;
        for (int i = 0; i < a.size(); ++i) {
            m = std::max(m, std::abs(b.f1[i] + a.f2[i]));
            m = std::max(m, std::abs(b.f2[i] + a.f1[i]));
            m = std::max(m, std::abs(b.f1[i] - std::conj(a.f1[i])));
        }
    }
    CHECK(m < 1e-10);
}

TEST_CASE("boundary values stay uniformly away from zero", "[spectral][property]") {
    const Params p = with_gamma(0.05);
    const Shooter s(p);
    const Basis A = build_basis(s, BcKind::conservative(), 20);
    const Basis At = build_basis(s, BcKind::damped(p.mu), 20);
    double lo = 1e300, hi = 0.0;
    for (int n = -20; n <= 20; ++n) {
        for (double v : {std::abs(A.at(n).boundary[0]), std::abs(At.dual(n).boundary[0])}) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    CHECK(lo > 0.1);
    CHECK(hi < 1e3);
}

TEST_CASE("first-order coupling structure", "[spectral]") {
    for (int n = -5; n <= 5; ++n) {
        CHECK(j0_coupling(n, n) == cplx(0.0));
        CHECK(j0_coupling(n, -n) == cplx(0.0));
    }
    const Params p = with_gamma(0.0);
    for (int n : {1, 3, 5}) CHECK(std::abs(first_order_boundary_combination(p, n, 4000)) < 1e-12);
    for (int n : {2, 4, 6}) CHECK(std::abs(first_order_boundary_combination(p, n, 4000)) > 2.0 * p.L / (pi * pi));
}

TEST_CASE("shooting minus first-order series is quadratic in gamma", "[spectral][property]") {
    const int n = 2, K = 2000;
    std::vector<double> lx, ly;
    for (double g : {0.01, 0.02, 0.04}) {
        const Params p = with_gamma(g);
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
        for (int i = 0; i < p.grid_points; ++i)
            m = std::max({m, std::abs(psi.f1[i] - ref.f1[i] - g * p1.f1[i]), std::abs(psi.f2[i] - ref.f2[i] - g * p1.f2[i])});
        lx.push_back(std::log(g));
        ly.push_back(std::log(m));
    }
    const double s1 = (ly[1] - ly[0]) / (lx[1] - lx[0]), s2 = (ly[2] - ly[1]) / (lx[2] - lx[1]);
    CHECK(std::abs(s1 - 2.0) < 0.2);
    CHECK(std::abs(s2 - 2.0) < 0.2);
}

TEST_CASE("damped-mode norm conventions", "[spectral]") {
    const double mu = 2.0, L = 1.0;
    CHECK(damped_mode_norm2(mu, L) == Catch::Approx((std::exp(8.0) - 1.0) / 8.0));
    CHECK(damped_mode_norm2_unscaled(mu, L) == Catch::Approx(2.0 * L * damped_mode_norm2(mu, L)));
    // quadrature norm of the gamma = 0 damped mode normalized to f1(0) = 1
    const Params p = with_gamma(0.0);
    const Basis At = build_basis(p, BcKind::damped(mu), 0);
    CHECK(std::pow(norm(At.at(0).func), 2) == Catch::Approx(damped_mode_norm2(mu, L)).epsilon(1e-10));
}

TEST_CASE("invalid grid is rejected", "[spectral]") {
    Params p = with_gamma(0.05);
    p.grid_points = 2000;
    CHECK_THROWS_AS(Shooter(p), UsageError);
}
