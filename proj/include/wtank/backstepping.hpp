#pragma once

// Truncated Fredholm transform T in modal coordinates, TB = B and operator
// equality residuals, and the truncated closed-loop spectrum.

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feedback.hpp"
#include "spectral.hpp"

namespace wtank {

struct TransformMatrix {
    int N = 0;
    Eigen::MatrixXcd T;             // T(p+N, n+N) = <g_n, phi~_p>
    std::vector<cplx> mu, mu_tilde;
    std::vector<cplx> inu_tilde;    // <I_nu, phi~_p>
    double weighted_condition = 0.0;
    double min_gap = 0.0;
};

// Weighted condition number of T from D(A) (weights 1+|mu_n|) to D(A~) (weights 1+|mu~_p|).
inline double weighted_condition(const Eigen::MatrixXcd& T, const std::vector<cplx>& mu, const std::vector<cplx>& mut) {
    Eigen::MatrixXcd W = T;
    for (int p = 0; p < W.rows(); ++p)
        for (int n = 0; n < W.cols(); ++n) W(p, n) *= (1.0 + std::abs(mut[p])) / (1.0 + std::abs(mu[n]));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(W);
    const auto& s = svd.singularValues();
    return s(0) / s(s.size() - 1);
}

// T_{p,n} = -<f_n,F> <I_nu, phi~_p> / (mu~_p - mu_n)
inline TransformMatrix build_transform(const Params& prm, const Basis& A, const Basis& At, const FeedbackLaw& law,
                                       const GridFunction2& Inu) {
    if (A.N != At.N || law.N != A.N) throw UsageError("build_transform: bases and law must share N");
    const int N = A.N, M = 2 * N + 1;
    TransformMatrix tm;
    tm.N = N;
    tm.mu = A.eigenvalues();
    tm.mu_tilde = At.eigenvalues();
    for (int p = -N; p <= N; ++p) tm.inu_tilde.push_back(inner_product(Inu, At.dual(p).func));
    tm.T.resize(M, M);
    tm.min_gap = std::numeric_limits<double>::infinity();
    for (int p = 0; p < M; ++p)
        for (int n = 0; n < M; ++n) {
            const cplx gap = tm.mu_tilde[p] - tm.mu[n];
            tm.min_gap = std::min(tm.min_gap, std::abs(gap));
            tm.T(p, n) = -law.coeffs[n] * tm.inu_tilde[p] / gap;
        }
    if (tm.min_gap < prm.mu / 2.0)
        throw RegimeError("near-zero denominator: min |mu~_p - mu_n| = " + std::to_string(tm.min_gap) + " < mu/2");
    tm.weighted_condition = weighted_condition(tm.T, tm.mu, tm.mu_tilde);
    return tm;
}

// <T I_nu^(N), phi~_m> - <I_nu, phi~_m> from the partial sum over |n| <= N.
inline cplx tb_residual(const TransformMatrix& tm, const FeedbackLaw& law, int m) {
    cplx acc = 0.0;
    for (int n = 0; n < 2 * tm.N + 1; ++n) acc += law.inu[n] * tm.T(m + tm.N, n);
    return acc - tm.inu_tilde[m + tm.N];
}

struct DirichletDriver {
    cplx value, target;
    double error = 0.0;
};

// sum_{|n|<=N} f_{n,1}(0) <f_n, phi~_m>  versus  conj(phi~_{m,1}(0) - phi~_{m,2}(0))/2.
inline DirichletDriver dirichlet_driver(const Basis& A, const Basis& At, int m) {
    DirichletDriver d;
    const auto& phi = At.dual(m);
    for (int n = -A.N; n <= A.N; ++n)
        d.value += A.at(n).boundary[0].real() * inner_product(A.at(n).func, phi.func);
    d.target = std::conj(phi.boundary[0] - phi.boundary[1]) / 2.0;
    d.error = std::abs(d.value - d.target);
    return d;
}

// Checks f_n = f_{n,1}(0) tau~ k_n, where k_n = sum_{|p|<=P} f~_p/(mu~_p - mu_n) and
// tau~ f~_p = conj(phi~_{p,1}(0)) (1 - e^{-2 mu L})/(2L) f~_p. Returns ||residual|| per n.
inline std::vector<double> kn_relation_check(const Params& prm, const Basis& A, const Basis& At) {
    std::vector<double> res;
    const double fac = (1.0 - std::exp(-2.0 * prm.mu * prm.L)) / (2.0 * prm.L);
    for (int n = -A.N; n <= A.N; ++n) {
        const auto& fn = A.at(n);
        GridFunction2 r = fn.func;
        const cplx f10 = fn.boundary[0];
        for (int p = -At.N; p <= At.N; ++p) {
            const cplx c = f10 * std::conj(At.dual(p).boundary[0]) * fac / (At.eigenvalue(p) - fn.eigenvalue);
            r.axpy(-c, At.at(p).func);
        }
        res.push_back(norm(r));
    }
    return res;
}

// || T(-A a + <a,F> I_nu) + A~ T a ||, all terms modal, in the D(A~)-weighted norm.
inline double operator_equality_residual(const TransformMatrix& tm, const FeedbackLaw& law, const Eigen::VectorXcd& a) {
    const int M = 2 * tm.N + 1;
    if (a.size() != M) throw UsageError("operator_equality_residual: coefficient size mismatch");
    cplx u = 0.0;
    for (int n = 0; n < M; ++n) u += a(n) * law.coeffs[n];
    Eigen::VectorXcd v(M);
    for (int n = 0; n < M; ++n) v(n) = -tm.mu[n] * a(n) + u * law.inu[n];
    const Eigen::VectorXcd Ta = tm.T * a;
    Eigen::VectorXcd r = tm.T * v;
    double acc = 0.0;
    for (int p = 0; p < M; ++p) {
        r(p) += tm.mu_tilde[p] * Ta(p);
        acc += std::norm((1.0 + std::abs(tm.mu_tilde[p])) * r(p));
    }
    return std::sqrt(acc);
}

// M_{mn} = -mu_n delta_{mn} + <I_nu, f_m> <f_n, F>
inline Eigen::MatrixXcd closed_loop_matrix(const FeedbackLaw& law) {
    const int M = 2 * law.N + 1;
    Eigen::MatrixXcd K(M, M);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < M; ++n) K(m, n) = law.inu[m] * law.coeffs[n] - (m == n ? law.mu[n] : 0.0);
    return K;
}

inline std::vector<cplx> closed_loop_spectrum(const FeedbackLaw& law) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(closed_loop_matrix(law), false);
    if (es.info() != Eigen::Success) throw NumericalError("closed-loop eigensolve failed");
    std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return v;
}

// Distance from each target to the nearest computed eigenvalue.
inline std::vector<double> spectrum_distance(const std::vector<cplx>& eigs, const std::vector<cplx>& targets) {
    std::vector<double> d;
    for (const cplx& t : targets) {
        double best = std::numeric_limits<double>::infinity();
        for (const cplx& e : eigs) best = std::min(best, std::abs(e - t));
        d.push_back(best);
    }
    return d;
}

}  // namespace wtank
