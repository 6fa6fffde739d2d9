#pragma once

// Finite-dimensional backstepping: for controllable (A,B) and (A~,B) the unique
// (T,K) with T A + B K = A~ T and T B = B, via companion forms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace wtank {

struct LinearPair {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    int n() const { return static_cast<int>(A.rows()); }
};

inline Eigen::MatrixXd controllability_matrix(const LinearPair& s) {
    const int n = s.n();
    Eigen::MatrixXd C(n, n);
    Eigen::VectorXd v = s.B;
    for (int k = 0; k < n; ++k) {
        C.col(k) = v;
        v = s.A * v;
    }
    return C;
}

inline void check_pair(const LinearPair& s) {
    if (s.A.rows() != s.A.cols() || s.B.size() != s.A.rows()) throw UsageError("LinearPair: shape mismatch");
    if (s.n() < 1 || s.n() > 12) throw UsageError("LinearPair: dimension must be in [1, 12]");
}

struct CanonicalForm {
    Eigen::MatrixXd Tc;   // Tc A Tc^{-1} companion, Tc B = e_n
    LinearPair pair;      // (Tc A Tc^{-1}, e_n)
    Eigen::VectorXd a;    // characteristic coefficients: s^n + a_{n-1} s^{n-1} + ... + a_0
};

// Companion form with ones on the superdiagonal and last row (-a_0, ..., -a_{n-1}).
inline CanonicalForm to_canonical(const LinearPair& s) {
    check_pair(s);
    const int n = s.n();
    const Eigen::MatrixXd C = controllability_matrix(s);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
    lu.setThreshold(1e-10);
    if (lu.rank() < n) throw RegimeError("pair is not controllable (rank " + std::to_string(lu.rank()) + " < " + std::to_string(n) + ")");
    // A^n B = -sum a_k A^k B
    Eigen::VectorXd AnB = s.B;
    for (int k = 0; k < n; ++k) AnB = s.A * AnB;
    CanonicalForm cf;
    cf.a = lu.solve(-AnB);
    // Companion controllability matrix Cc, then Tc = Cc C^{-1}.
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) Ac(i, i + 1) = 1.0;
    for (int j = 0; j < n; ++j) Ac(n - 1, j) = -cf.a(j);
    Eigen::VectorXd en = Eigen::VectorXd::Zero(n);
    en(n - 1) = 1.0;
    const Eigen::MatrixXd Cc = controllability_matrix({Ac, en});
    cf.Tc = Cc * lu.inverse();
    cf.pair = {Ac, en};
    return cf;
}

inline Eigen::MatrixXd companion(const Eigen::VectorXd& a) {
    const int n = static_cast<int>(a.size());
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) Ac(i, i + 1) = 1.0;
    for (int j = 0; j < n; ++j) Ac(n - 1, j) = -a(j);
    return Ac;
}

struct Backstepping {
    Eigen::MatrixXd T;
    Eigen::RowVectorXd K;
    double residual_op = 0.0;  // max |T A + B K - A~ T|
    double residual_b = 0.0;   // max |T B - B|
    double condition = 0.0;
};

inline void fill_residuals(Backstepping& r, const LinearPair& s, const LinearPair& st) {
    r.residual_op = (r.T * s.A + s.B * r.K - st.A * r.T).cwiseAbs().maxCoeff();
    r.residual_b = (r.T * s.B - s.B).cwiseAbs().maxCoeff();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.T);
    const auto& sv = svd.singularValues();
    r.condition = sv(0) / sv(sv.size() - 1);
}

// In canonical coordinates K_c = lastrow(A~_c) - lastrow(A_c) and T_c = I;
// mapping back gives K = K_c T_c and T = T~_c^{-1} T_c.
inline Backstepping backstep_pair(const LinearPair& s, const LinearPair& st) {
    check_pair(s);
    check_pair(st);
    if (s.n() != st.n() || (s.B - st.B).cwiseAbs().maxCoeff() > 0.0) throw UsageError("backstep_pair: pairs must share B");
    const CanonicalForm c = to_canonical(s), ct = to_canonical(st);
    const int n = s.n();
    const Eigen::RowVectorXd Kc = ct.pair.A.row(n - 1) - c.pair.A.row(n - 1);
    Backstepping r;
    r.K = Kc * c.Tc;
    r.T = ct.Tc.fullPivLu().solve(c.Tc);
    fill_residuals(r, s, st);
    return r;
}

// Independent path: least squares on the linear system in (vec T, K).
inline Backstepping backstep_pair_lsq(const LinearPair& s, const LinearPair& st) {
    check_pair(s);
    check_pair(st);
    const int n = s.n(), nt = n * n;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    // vec(T A) = (A^T kron I) vec T, vec(A~ T) = (I kron A~) vec T, vec(B K) = (I kron B) K^T
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nt + n, nt + n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nt + n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    // row index of (k,l) entry in vec ordering (column major): l*n + k
                    // coefficient of T(i,j) in (T A - A~ T)(k,l)
                    double v = 0.0;
                    if (k == i) v += s.A(j, l);
                    if (l == j) v -= st.A(k, i);
                    M(l * n + k, j * n + i) += v;
                }
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) M(l * n + k, nt + l) += s.B(k);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) M(nt + k, j * n + k) += s.B(j);
        rhs(nt + k) = s.B(k);
    }
    const Eigen::VectorXd x = M.colPivHouseholderQr().solve(rhs);
    Backstepping r;
    r.T = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
    r.K = x.tail(n).transpose();
    fill_residuals(r, s, st);
    return r;
}

// Max over eigenvalues of A + B K of the distance to the matched eigenvalue of A~
// (optimal assignment by exhaustive permutation for n <= 8, greedy above).
inline double eigenvalue_mismatch(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    const Eigen::VectorXcd a = X.eigenvalues(), b = Y.eigenvalues();
    const int n = static_cast<int>(a.size());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    if (n <= 8) {
        do {
            double m = 0.0;
            for (int i = 0; i < n; ++i) m = std::max(m, std::abs(a(i) - b(perm[i])));
            best = std::min(best, m);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<bool> used(n, false);
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        int jb = -1;
        for (int j = 0; j < n; ++j)
            if (!used[j] && (jb < 0 || std::abs(a(i) - b(j)) < std::abs(a(i) - b(jb)))) jb = j;
        used[jb] = true;
        m = std::max(m, std::abs(a(i) - b(jb)));
    }
    return m;
}

// Seeded random pair with entries N(0,1); redrawn until the controllability
// matrix is reasonably conditioned.
inline LinearPair random_pair(std::mt19937_64& rng, int n, const Eigen::VectorXd* B = nullptr) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (;;) {
        LinearPair s{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s.A(i, j) = g(rng);
        if (B) s.B = *B;
        else
            for (int i = 0; i < n; ++i) s.B(i) = g(rng);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(controllability_matrix(s));
        const auto& sv = svd.singularValues();
        if (sv(n - 1) > 0.0 && sv(0) / sv(n - 1) < 1e4) return s;
    }
}

}  // namespace wtank
