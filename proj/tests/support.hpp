#pragma once

// Test-only helpers: random systems and reference solutions that do not go
// through the library code they check.

#include "deepc/hankel.hpp"
#include "deepc/qp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace testing {

using deepc::Index;
using deepc::Matrix;
using deepc::Vector;

inline Matrix randn(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct Lti {
    Matrix A, B, C;
    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index p() const { return C.rows(); }
};

inline Index rank_of(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-9 * s(0)) ++r;
    return r;
}

inline Matrix controllability(const Lti& s) {
    Matrix K(s.n(), s.n() * s.m());
    Matrix Ak = Matrix::Identity(s.n(), s.n());
    for (Index k = 0; k < s.n(); ++k) {
        K.middleCols(k * s.m(), s.m()) = Ak * s.B;
        Ak = Ak * s.A;
    }
    return K;
}

inline Matrix observability(const Lti& s, Index rows) {
    Matrix O(rows * s.p(), s.n());
    Matrix Ak = Matrix::Identity(s.n(), s.n());
    for (Index k = 0; k < rows; ++k) {
        O.middleRows(k * s.p(), s.p()) = s.C * Ak;
        Ak = Ak * s.A;
    }
    return O;
}

/// Random stable, controllable and observable system with spectral radius in [0.3, 0.9].
inline Lti random_lti(std::mt19937_64& rng, Index n, Index m, Index p) {
    while (true) {
        Lti s;
        s.A = randn(rng, n, n);
        const double rho =
            Eigen::EigenSolver<Matrix>(s.A, false).eigenvalues().cwiseAbs().maxCoeff();
        if (rho < 1e-6) continue;
        s.A *= uniform(rng, 0.3, 0.9) / rho;
        s.B = randn(rng, n, m);
        s.C = randn(rng, p, n);
        if (rank_of(controllability(s)) == n && rank_of(observability(s, n)) == n) return s;
    }
}

/// y_k = C x_k, x_{k+1} = A x_k + B u_k; returns outputs p x T.
inline Matrix simulate(const Lti& s, const Matrix& u, Vector x0, const Vector& dy = Vector()) {
    Matrix y(s.p(), u.cols());
    Vector x = std::move(x0);
    for (Index k = 0; k < u.cols(); ++k) {
        y.col(k) = s.C * x;
        if (dy.size()) y.col(k) += dy;
        x = s.A * x + s.B * u.col(k);
    }
    return y;
}

inline Vector state_after(const Lti& s, const Matrix& u, Vector x0) {
    for (Index k = 0; k < u.cols(); ++k) x0 = s.A * x0 + s.B * u.col(k);
    return x0;
}

/// Unconstrained condensed MPC: predicted outputs O x + Gamma u over N steps,
/// minimise sum ||y - r||_Q^2 + ||u||_R^2. Returns the full input plan (m*N).
inline Vector mpc_plan(const Lti& s, const Vector& x, const Matrix& ref, double q, double r) {
    const Index N = ref.cols(), m = s.m(), p = s.p();
    const Matrix O = observability(s, N);
    Matrix Gamma = Matrix::Zero(N * p, N * m);
    for (Index i = 0; i < N; ++i) {
        Matrix Ak = Matrix::Identity(s.n(), s.n());
        for (Index j = i - 1; j >= 0; --j) {
            Gamma.block(i * p, j * m, p, m) = s.C * Ak * s.B;
            Ak = Ak * s.A;
        }
    }
    const Vector rv = Eigen::Map<const Vector>(ref.data(), ref.size());
    const Matrix H = q * Gamma.transpose() * Gamma + r * Matrix::Identity(N * m, N * m);
    return H.ldlt().solve(-q * Gamma.transpose() * (O * x - rv));
}

/// State at the end of a window (the state the next input acts on), from the
/// window's inputs and outputs, via least squares on the observability map.
inline Vector estimate_state(const Lti& s, const Matrix& u_ini, const Matrix& y_ini) {
    const Index T = u_ini.cols(), m = s.m(), p = s.p();
    const Matrix O = observability(s, T);
    Matrix Tu = Matrix::Zero(T * p, T * m);
    for (Index i = 0; i < T; ++i) {
        Matrix Ak = Matrix::Identity(s.n(), s.n());
        for (Index j = i - 1; j >= 0; --j) {
            Tu.block(i * p, j * m, p, m) = s.C * Ak * s.B;
            Ak = Ak * s.A;
        }
    }
    const Vector uv = Eigen::Map<const Vector>(u_ini.data(), u_ini.size());
    const Vector yv = Eigen::Map<const Vector>(y_ini.data(), y_ini.size());
    const Vector x0 = O.colPivHouseholderQr().solve(yv - Tu * uv);
    return state_after(s, u_ini, x0);
}

/// Recorded experiment with uniform random inputs in [-1, 1] from a random
/// initial state; `dy` is added to every output sample.
inline deepc::Trajectory lti_trajectory(const Lti& s, Index T, std::mt19937_64& rng,
                                        const Vector& dy = Vector()) {
    deepc::Trajectory t;
    t.inputs = Matrix::NullaryExpr(s.m(), T, [&] { return uniform(rng, -1.0, 1.0); });
    t.outputs = simulate(s, t.inputs, randn(rng, s.n(), 1), dy);
    return t;
}

/// Brute-force QP reference: enumerate which inequality rows sit at their
/// lower or upper bound, solve each equality-constrained subproblem directly
/// and keep the best feasible candidate. P must be positive definite.
inline std::optional<Vector> kkt_oracle(const deepc::QuadraticProgram& qp, double feas_tol = 1e-9) {
    const Index d = qp.q.size(), e = qp.Aeq.rows(), c = qp.G.rows();
    Index combos = 1;
    for (Index i = 0; i < c; ++i) combos *= 3;
    std::optional<Vector> best;
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<int> state(static_cast<std::size_t>(c));
    for (Index code = 0; code < combos; ++code) {
        Index rest = code;
        Index active = 0;
        bool skip = false;
        for (Index i = 0; i < c; ++i) {
            state[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3);
            rest /= 3;
            const int st = state[static_cast<std::size_t>(i)];
            if (st == 1 && !std::isfinite(qp.lower(i))) skip = true;
            if (st == 2 && !std::isfinite(qp.upper(i))) skip = true;
            if (st) ++active;
        }
        if (skip) continue;
        const Index k = e + active;
        Matrix K = Matrix::Zero(d + k, d + k);
        Vector rhs = Vector::Zero(d + k);
        K.topLeftCorner(d, d) = qp.P;
        rhs.head(d) = -qp.q;
        if (e) {
            K.block(d, 0, e, d) = qp.Aeq;
            K.block(0, d, d, e) = qp.Aeq.transpose();
            rhs.segment(d, e) = qp.beq;
        }
        Index row = d + e;
        for (Index i = 0; i < c; ++i) {
            const int st = state[static_cast<std::size_t>(i)];
            if (!st) continue;
            K.block(row, 0, 1, d) = qp.G.row(i);
            K.block(0, row, d, 1) = qp.G.row(i).transpose();
            rhs(row) = st == 1 ? qp.lower(i) : qp.upper(i);
            ++row;
        }
        Eigen::FullPivLU<Matrix> lu(K);
        if (!lu.isInvertible()) continue;
        const Vector sol = lu.solve(rhs);
        const Vector z = sol.head(d);
        if (e && (qp.Aeq * z - qp.beq).cwiseAbs().maxCoeff() > 1e-7) continue;
        const Vector gz = qp.G * z;
        bool ok = true;
        for (Index i = 0; i < c && ok; ++i)
            ok = gz(i) >= qp.lower(i) - feas_tol && gz(i) <= qp.upper(i) + feas_tol;
        if (!ok) continue;
        const double obj = 0.5 * z.dot(qp.P * z) + qp.q.dot(z);
        if (obj < best_obj) {
            best_obj = obj;
            best = z;
        }
    }
    return best;
}

}  // namespace testing
