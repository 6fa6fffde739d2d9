#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "wtank/finite_dim.hpp"

using namespace wtank;

TEST_CASE("identical pairs give T = I and K = 0", "[finite_dim]") {
    std::mt19937_64 rng(1);
    const LinearPair s = random_pair(rng, 4);
    const Backstepping r = backstep_pair(s, s);
    CHECK((r.T - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.K.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("double integrator by hand", "[finite_dim]") {
    // x'' = u; target s^2 + 2 s + 1 needs u = -x - 2 x'
    LinearPair s{Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd(2)};
    s.A(0, 1) = 1.0;
    s.B << 0.0, 1.0;
    LinearPair st = s;
    st.A(1, 0) = -1.0;
    st.A(1, 1) = -2.0;
    const Backstepping r = backstep_pair(s, st);
    CHECK(std::abs(r.K(0) + 1.0) < 1e-14);
    CHECK(std::abs(r.K(1) + 2.0) < 1e-14);
    CHECK((r.T - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("random pairs: closed-loop eigenvalues match the target", "[finite_dim][property]") {
    std::mt19937_64 rng(20240611u);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 5;
        const LinearPair s = random_pair(rng, n);
        const LinearPair st = random_pair(rng, n, &s.B);
        const Backstepping r = backstep_pair(s, st);
        const double scale = 1.0 + st.A.cwiseAbs().maxCoeff();
        CHECK(eigenvalue_mismatch(s.A + s.B * r.K, st.A) < 1e-8 * scale * r.condition);
        CHECK(r.residual_op < 1e-8 * scale * r.condition);
        CHECK(r.residual_b < 1e-10 * r.condition);
    }
}

TEST_CASE("five by five eigenvalues to 1e-8", "[finite_dim]") {
    std::mt19937_64 rng(7);
    const LinearPair s = random_pair(rng, 5);
    // stable diagonal target with the same B, written as A~ = A + B k for a chosen k
    Eigen::RowVectorXd k(5);
    k << -3.0, 1.0, -0.5, 2.0, -1.0;
    const LinearPair st{s.A + s.B * k, s.B};
    const Backstepping r = backstep_pair(s, st);
    CHECK(eigenvalue_mismatch(s.A + s.B * r.K, st.A) < 1e-8);
    // T = I and K = k is one solution; uniqueness forces it
    CHECK((r.K - k).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((r.T - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("uncontrollable pairs are rejected", "[finite_dim]") {
    LinearPair s{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(3)};
    CHECK_THROWS_AS(to_canonical(s), RegimeError);
    CHECK_THROWS_AS(backstep_pair(s, s), RegimeError);
    LinearPair bad{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Ones(2)};
    CHECK_THROWS_AS(to_canonical(bad), UsageError);
}

TEST_CASE("canonical form structure", "[finite_dim][property]") {
    std::mt19937_64 rng(3);
    for (int n : {1, 3, 6}) {
        const LinearPair s = random_pair(rng, n);
        const CanonicalForm cf = to_canonical(s);
        const Eigen::MatrixXd Ac = cf.Tc * s.A * cf.Tc.inverse();
        CHECK((Ac - companion(cf.a)).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + cf.a.cwiseAbs().maxCoeff()));
        Eigen::VectorXd en = Eigen::VectorXd::Zero(n);
        en(n - 1) = 1.0;
        CHECK((cf.Tc * s.B - en).cwiseAbs().maxCoeff() < 1e-9);
        // characteristic polynomial evaluated at each eigenvalue vanishes
        const Eigen::VectorXcd ev = s.A.eigenvalues();
        for (int i = 0; i < n; ++i) {
            std::complex<double> v = 1.0;
            for (int j = n - 1; j >= 0; --j) v = v * ev(i) + cf.a(j);
            CHECK(std::abs(v) < 1e-8 * std::pow(1.0 + std::abs(ev(i)), n));
        }
    }
}

TEST_CASE("companion and least-squares paths agree", "[finite_dim][property]") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 4;
        const LinearPair s = random_pair(rng, n);
        const LinearPair st = random_pair(rng, n, &s.B);
        const Backstepping a = backstep_pair(s, st), b = backstep_pair_lsq(s, st);
        const double scale = 1e-8 * a.condition * (1.0 + a.T.cwiseAbs().maxCoeff());
        CHECK((a.T - b.T).cwiseAbs().maxCoeff() < scale);
        CHECK((a.K - b.K).cwiseAbs().maxCoeff() < scale * (1.0 + a.K.cwiseAbs().maxCoeff()));
        CHECK(b.residual_b < 1e-9);
    }
}

TEST_CASE("pairs must share B", "[finite_dim]") {
    std::mt19937_64 rng(4);
    const LinearPair s = random_pair(rng, 3), st = random_pair(rng, 3);
    CHECK_THROWS_AS(backstep_pair(s, st), UsageError);
}
