#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "wtank/model.hpp"

using namespace wtank;
using Catch::Approx;

namespace {

Params with_gamma(double g, int grid = 2001) {
    Params p;
    p.gamma = g;
    p.grid_points = grid;
    return p;
}

// Direct closed forms in long double, written from the defining formulas
// rather than the library's rearranged branches.
long double lg_direct(long double g, long double L) {
    return 2.0L / g * (std::sqrt(1.0L + g * L / 2.0L) - std::sqrt(1.0L - g * L / 2.0L));
}
long double delta_direct(long double g, long double L, long double x) {
    const long double lg = lg_direct(g, L);
    return -(3.0L * lg / (4.0L * L)) * g / (std::sqrt(1.0L + g * L / 2.0L) - g * lg * x / (2.0L * L));
}

}  // namespace

TEST_CASE("steady-state height", "[model]") {
    CHECK(steady_state_height(with_gamma(0.0), 0.3) == 1.0);
    CHECK(steady_state_height(with_gamma(0.1), 0.0) == Approx(1.05).epsilon(1e-15));
    CHECK(steady_state_height(with_gamma(0.1), 0.5) == Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(steady_state_height(with_gamma(0.1), 1.5), DomainError);
}

TEST_CASE("mean height equals L", "[model][property]") {
    for (double g : {0.0, 0.05, 0.2}) {
        const Params p = with_gamma(g);
        std::vector<double> h(p.grid_points);
        for (int i = 0; i < p.grid_points; ++i) h[i] = steady_state_height(p, p.x(i));
        CHECK(simpson(h, p.h()) == Approx(p.L).epsilon(1e-13));
    }
}

TEST_CASE("l_gamma limit, symmetry and second-order bound", "[model]") {
    CHECK(l_gamma(with_gamma(0.0)) == 1.0);
    for (double g : {0.01, 0.1, 0.3}) {
        const Params p = with_gamma(g), q = with_gamma(-g);
        CHECK(l_gamma(p) == Approx(static_cast<double>(lg_direct(g, 1.0L))).epsilon(1e-13));
        CHECK(l_gamma(p) == l_gamma(q));
        CHECK(std::abs(l_gamma(p) - p.L) <= g * g * p.L * p.L * p.L / 8.0);
    }
    CHECK_THROWS_AS(l_gamma(with_gamma(2.5)), DomainError);
}

TEST_CASE("delta vanishes at gamma = 0 and grows in x", "[model]") {
    const Params p0 = with_gamma(0.0);
    for (double x : {0.0, 0.4, 1.0}) CHECK(delta(p0, x) == 0.0);
    const Params p = with_gamma(0.05);
    double prev = 0.0;
    for (int i = 0; i < p.grid_points; ++i) {
        const double a = std::abs(delta(p, p.x(i)));
        CHECK(a > prev);
        prev = a;
    }
}

// Expanding the closed form gives -(3/4) g (1 + (g/2)(x - L/2)) + O(g^3).
TEST_CASE("delta second-order expansion with one fitted constant", "[model][property]") {
    const double L = 1.0;
    auto worst = [&](double g) {
        double m = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const long double x = L * i / 100.0L;
            const long double ex = -0.75L * g * (1.0L + g / 2.0L * (x - L / 2.0L));
            m = std::max(m, static_cast<double>(std::abs(delta_direct(g, L, x) - ex)));
            CHECK(delta(with_gamma(g), static_cast<double>(x)) ==
                  Approx(static_cast<double>(delta_direct(g, L, x))).epsilon(1e-13));
        }
        return m;
    };
    const double C = worst(0.05) / std::pow(0.05, 3);
    CHECK(C > 0.0);
    CHECK(C < 1.0);
    for (double g : {0.02, 0.01}) CHECK(worst(g) <= 1.1 * C * g * g * g);

    // The (L/2 + x) ordering leaves a residual of order g^2, so it is not the expansion.
    const double g = 0.02;
    const long double wrong = -0.75L * g * (1.0L + g / 2.0L * (L / 2.0L + 0.0L));
    CHECK(std::abs(static_cast<double>(delta_direct(g, L, 0.0L) - wrong)) > 100.0 * C * g * g * g);
}

TEST_CASE("exp_weight matches an independent Simpson quadrature", "[model][property]") {
    for (double g : {0.0, 0.05, 0.2}) {
        const Params p = with_gamma(g);
        // fine cumulative Simpson on 2 sub-panels per grid interval
        const int n = p.grid_points;
        double acc = 0.0, worst = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i > 0) {
                const double a = p.x(i - 1), b = p.x(i), m = 0.5 * (a + b);
                acc += (b - a) / 6.0 * (delta(p, a) + 4.0 * delta(p, m) + delta(p, b));
            }
            worst = std::max(worst, std::abs(exp_weight(p, p.x(i)) - std::exp(acc)));
        }
        CHECK(worst < 1e-10);
    }
    const Params p = with_gamma(0.05);
    CHECK(exp_weight(p, 0.0) == 1.0);
    CHECK(weight_closed_form(p, 0.0) == Approx(std::pow(1.0 + 0.05 / 2.0, 0.75)).epsilon(1e-15));
    CHECK(exp_weight(with_gamma(0.0), 0.7) == 1.0);
}

TEST_CASE("physical to zeta at gamma = 0 is the Riemann step", "[model]") {
    const Params p = with_gamma(0.0, 101);
    std::vector<cplx> h(101), v(101);
    for (int i = 0; i < 101; ++i) {
        h[i] = std::cos(2.0 * pi * p.x(i));
        v[i] = std::sin(pi * p.x(i));
    }
    const GridFunction2 z = physical_to_zeta(p, h, v);
    for (int i = 0; i < 101; ++i) {
        CHECK(std::abs(z.f1[i] - (h[i] + v[i])) < 1e-15);
        CHECK(std::abs(z.f2[i] - (-h[i] + v[i])) < 1e-15);
    }
}

TEST_CASE("physical/zeta round trip is the identity on smooth data", "[model][property]") {
    for (double g : {0.05, 0.2}) {
        const Params p = with_gamma(g);
        const int n = p.grid_points;
        std::vector<cplx> h(n), v(n);
        for (int i = 0; i < n; ++i) {
            const double x = p.x(i);
            h[i] = std::cos(2.0 * pi * x / p.L);  // zero mean
            v[i] = std::sin(pi * x / p.L) * x * (p.L - x);
        }
        const GridFunction2 z = physical_to_zeta(p, h, v);
        CHECK(std::abs(z.f1[0] + z.f2[0]) < 1e-14);  // v(0) = 0
        const PhysicalState back = zeta_to_physical(p, z);
        double err = 0.0;
        for (int i = 0; i < n; ++i) err = std::max({err, std::abs(back.h[i] - h[i]), std::abs(back.v[i] - v[i])});
        CHECK(err < 1e-8);
    }
}

TEST_CASE("inner product conventions", "[model]") {
    const Params p = with_gamma(0.0, 401);
    GridFunction2 e1(p.L, 401), e2(p.L, 401);
    for (int i = 0; i < 401; ++i) {
        e1.f1[i] = std::polar(1.0, pi * p.x(i));
        e1.f2[i] = -std::polar(1.0, -pi * p.x(i));
        e2.f1[i] = std::polar(1.0, 2.0 * pi * p.x(i));
        e2.f2[i] = -std::polar(1.0, -2.0 * pi * p.x(i));
    }
    CHECK(std::abs(inner_product(e1, e1) - 1.0) < 1e-12);
    CHECK(std::abs(inner_product(e1, e2)) < 1e-10);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    GridFunction2 a(p.L, 401), b(p.L, 401);
    for (int i = 0; i < 401; ++i) {
        a.f1[i] = {g(rng), g(rng)};
        a.f2[i] = {g(rng), g(rng)};
        b.f1[i] = {g(rng), g(rng)};
        b.f2[i] = {g(rng), g(rng)};
    }
    CHECK(std::abs(inner_product(a, b) - std::conj(inner_product(b, a))) < 1e-12);
    CHECK_THROWS_AS(inner_product(a, GridFunction2(p.L, 201)), UsageError);
}

TEST_CASE("mass functional", "[model]") {
    const Params p0 = with_gamma(0.0, 201), p = with_gamma(0.1, 201);
    GridFunction2 same(1.0, 201), one(1.0, 201);
    for (int i = 0; i < 201; ++i) {
        same.f1[i] = same.f2[i] = std::sin(3.0 * p.x(i));
        one.f1[i] = 1.0;
    }
    CHECK(std::abs(mass_functional(p, same)) < 1e-15);
    CHECK(std::abs(mass_functional(p0, one) - 1.0) < 1e-14);
    // int_0^L (s - k x)^2 dx with s = sqrt(1 + gL/2), k = g L_g/(2L)
    const double s = std::sqrt(1.0 + 0.05), k = 0.1 * l_gamma(p) / 2.0;
    const double exact = (std::pow(s, 3) - std::pow(s - k, 3)) / (3.0 * k);
    CHECK(std::abs(mass_functional(p, one) - exact) < 1e-13);
}

TEST_CASE("parameter validation", "[model]") {
    Params p;
    p.grid_points = 2000;
    CHECK_THROWS_AS(p.validate(), UsageError);
    p = Params{};
    p.gamma = 3.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = Params{};
    p.L = -1.0;
    CHECK_THROWS_AS(p.validate(), UsageError);
    CHECK_NOTHROW(Params{}.validate());
}
