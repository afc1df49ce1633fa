#include "deepc/qp.hpp"

#include "deepc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace deepc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqFactor = 1e3;
constexpr double kAdaptiveRhoTolerance = 5.0;
constexpr double kPolishDelta = 1e-6;

enum class RowKind : unsigned char { loose, inequality, equality };

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double limit_scaling(double v) {
    if (v < kMinScaling) return 1.0;
    return std::min(v, kMaxScaling);
}

bool same_matrix(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

std::string_view to_string(QpStatus status) {
    switch (status) {
        case QpStatus::solved: return "solved";
        case QpStatus::max_iterations: return "max_iterations";
        case QpStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

void QuadraticProgram::validate() const {
    const Index d = q.size();
    if (d < 1) throw DimensionError("QP needs at least one variable");
    if (P.rows() != d || P.cols() != d)
        throw DimensionError("P is " + std::to_string(P.rows()) + "x" + std::to_string(P.cols()) +
                             ", expected " + std::to_string(d) + "x" + std::to_string(d));
    if (Aeq.rows() != beq.size() || (Aeq.rows() > 0 && Aeq.cols() != d))
        throw DimensionError("equality block shapes disagree");
    if (G.rows() != lower.size() || G.rows() != upper.size() || (G.rows() > 0 && G.cols() != d))
        throw DimensionError("inequality block shapes disagree");
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("P is not symmetric");
    if (!P.allFinite() || !q.allFinite() || !Aeq.allFinite() || !beq.allFinite() ||
        !G.allFinite())
        throw InvalidArgument("QP data contains non-finite entries");
    for (Index i = 0; i < lower.size(); ++i)
        if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) == kInf || upper(i) == -kInf)
            throw InvalidArgument("invalid bound at row " + std::to_string(i));
}

struct QpSolver::Workspace {
    // Problem structure the cached scaling / factorization belong to.
    Matrix P, Aeq, G;
    std::vector<RowKind> kinds;

    Index d = 0, rows = 0;
    Vector D, E;  // variable / constraint scaling
    double c = 1.0;
    Matrix Ps, As;
    double rho = 0.1;
    Vector rho_vec;
    Eigen::LLT<Matrix> kkt;
    Eigen::LDLT<Matrix> kkt_pivoted;  // when rounding makes K look indefinite
    bool pivoted = false;
    bool factored = false;

    void equilibrate(const Vector& q, int iterations);
    void update_rho_vec();
    void factor(double sigma);
};

void QpSolver::Workspace::equilibrate(const Vector& q, int iterations) {
    D = Vector::Ones(d);
    E = Vector::Ones(rows);
    c = 1.0;
    Ps = P;
    As.resize(rows, d);
    if (Aeq.rows() > 0) As.topRows(Aeq.rows()) = Aeq;
    if (G.rows() > 0) As.bottomRows(G.rows()) = G;

    for (int it = 0; it < iterations; ++it) {
        Vector dx(d), dz(rows);
        for (Index j = 0; j < d; ++j) {
            double n = Ps.col(j).cwiseAbs().maxCoeff();
            if (rows > 0) n = std::max(n, As.col(j).cwiseAbs().maxCoeff());
            dx(j) = 1.0 / std::sqrt(limit_scaling(n));
        }
        for (Index i = 0; i < rows; ++i)
            dz(i) = 1.0 / std::sqrt(limit_scaling(As.row(i).cwiseAbs().maxCoeff()));
        Ps = dx.asDiagonal() * Ps * dx.asDiagonal();
        if (rows > 0) As = dz.asDiagonal() * As * dx.asDiagonal();
        D.array() *= dx.array();
        E.array() *= dz.array();

        double mean_col = 0.0;
        for (Index j = 0; j < d; ++j) mean_col += Ps.col(j).cwiseAbs().maxCoeff();
        mean_col /= static_cast<double>(d);
        const Vector qs = c * D.cwiseProduct(q);
        const double gamma = 1.0 / limit_scaling(std::max(mean_col, inf_norm(qs)));
        Ps *= gamma;
        c *= gamma;
    }
    // Symmetrize against rounding in the diagonal products.
    Ps = 0.5 * (Ps + Ps.transpose()).eval();
}

void QpSolver::Workspace::update_rho_vec() {
    rho_vec.resize(rows);
    for (Index i = 0; i < rows; ++i) {
        switch (kinds[static_cast<std::size_t>(i)]) {
            case RowKind::loose: rho_vec(i) = kRhoMin; break;
            case RowKind::inequality: rho_vec(i) = rho; break;
            case RowKind::equality: rho_vec(i) = kRhoEqFactor * rho; break;
        }
    }
}

void QpSolver::Workspace::factor(double sigma) {
    update_rho_vec();
    Matrix K = Ps;
    K.diagonal().array() += sigma;
    if (rows > 0) K.noalias() += As.transpose() * rho_vec.asDiagonal() * As;
    kkt.compute(K);
    pivoted = kkt.info() != Eigen::Success;
    if (pivoted) {
        kkt_pivoted.compute(K);
        if (kkt_pivoted.info() != Eigen::Success)
            throw InvalidArgument("QP KKT factorization failed; P is probably not PSD");
    }
    factored = true;
}

QpSolver::QpSolver(QpSettings settings) : settings_(settings) {}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

QpSolution QpSolver::solve(const QuadraticProgram& qp, const QpWarmStart* warm) {
    qp.validate();
    const QpSettings& s = settings_;
    if (!(s.eps_abs > 0.0) || !(s.eps_rel > 0.0) || s.max_iter < 1)
        throw InvalidArgument("solver tolerances must be positive");

    const Index d = qp.num_variables();
    const Index e = qp.Aeq.rows();
    const Index rows = e + qp.G.rows();

    Vector l(rows), u(rows);
    l << qp.beq, qp.lower;
    u << qp.beq, qp.upper;

    QpSolution sol;
    sol.z = Vector::Zero(d);
    sol.dual = Vector::Zero(rows);
    for (Index i = 0; i < rows; ++i) {
        if (l(i) > u(i)) {
            sol.status = QpStatus::infeasible;
            sol.objective = qp.constant;
            return sol;
        }
    }

    std::vector<RowKind> kinds(static_cast<std::size_t>(rows));
    for (Index i = 0; i < rows; ++i) {
        RowKind k = RowKind::inequality;
        if (i < e || l(i) == u(i))
            k = RowKind::equality;
        else if (l(i) == -kInf && u(i) == kInf)
            k = RowKind::loose;
        kinds[static_cast<std::size_t>(i)] = k;
    }

    if (!ws_ || !same_matrix(ws_->P, qp.P) || !same_matrix(ws_->Aeq, qp.Aeq) ||
        !same_matrix(ws_->G, qp.G) || ws_->Aeq.rows() != e) {
        ws_ = std::make_unique<Workspace>();
        ws_->P = qp.P;
        ws_->Aeq = qp.Aeq;
        ws_->G = qp.G;
        ws_->d = d;
        ws_->rows = rows;
        ws_->rho = s.rho;
        ws_->kinds = kinds;
        ws_->equilibrate(qp.q, s.scaling_iterations);
        ws_->factor(s.sigma);
    } else if (ws_->kinds != kinds) {
        ws_->kinds = kinds;
        ws_->factor(s.sigma);
    }
    Workspace& w = *ws_;

    const Vector qs = w.c * w.D.cwiseProduct(qp.q);
    const Vector ls = w.E.cwiseProduct(l);
    const Vector us = w.E.cwiseProduct(u);
    const Vector Dinv = w.D.cwiseInverse();
    const Vector Einv = w.E.cwiseInverse();

    Vector x = Vector::Zero(d), z = Vector::Zero(rows), y = Vector::Zero(rows);
    if (warm) {
        if (warm->z.size() == d) x = warm->z.cwiseProduct(Dinv);
        if (warm->dual.size() == rows) y = w.c * warm->dual.cwiseProduct(Einv);
        z = (w.As * x).cwiseMax(ls).cwiseMin(us);
    }

    struct Residuals {
        double prim, dual, eps_prim, eps_dual;
        double prim_norm, dual_norm;  // normalizers for rho adaptation
        double score() const { return std::max(prim / eps_prim, dual / eps_dual); }
        bool converged() const { return prim <= eps_prim && dual <= eps_dual; }
    };
    auto residuals = [&](const Vector& xv, const Vector& zv, const Vector& yv) {
        Residuals r{};
        const Vector Ax = w.As * xv;
        const Vector Px = w.Ps * xv;
        const Vector Aty = w.As.transpose() * yv;
        const double ax = inf_norm(Einv.cwiseProduct(Ax));
        const double zn = inf_norm(Einv.cwiseProduct(zv));
        r.prim = inf_norm(Einv.cwiseProduct(Ax - zv));
        r.dual = inf_norm(Dinv.cwiseProduct(Px + qs + Aty)) / w.c;
        r.prim_norm = std::max(ax, zn);
        r.dual_norm = std::max({inf_norm(Dinv.cwiseProduct(Px)), inf_norm(Dinv.cwiseProduct(Aty)),
                                inf_norm(Dinv.cwiseProduct(qs))}) /
                      w.c;
        r.eps_prim = s.eps_abs + s.eps_rel * r.prim_norm;
        r.eps_dual = s.eps_abs + s.eps_rel * r.dual_norm;
        return r;
    };

    // Primal infeasibility certificate on the dual increment.
    auto certifies_infeasible = [&](const Vector& dy) {
        if (rows == 0) return false;
        const Vector dyu = w.E.cwiseProduct(dy);
        const double n = inf_norm(dyu);
        if (n < 1e-30) return false;
        const double tol = s.eps_infeasible * n;
        if (inf_norm(Dinv.cwiseProduct(w.As.transpose() * dy)) >= tol) return false;
        double support = 0.0;
        for (Index i = 0; i < rows; ++i) {
            if (dyu(i) > tol) {
                if (u(i) == kInf) return false;
                support += u(i) * dyu(i);
            } else if (dyu(i) < -tol) {
                if (l(i) == -kInf) return false;
                support += l(i) * dyu(i);
            }
        }
        return support < -tol;
    };

    Vector best_x = x, best_z = z, best_y = y;
    Residuals best = residuals(x, z, y);
    int since_improved = 0;
    bool done = false;
    int iter = 0;
    Vector rhs(d), xt(d), zt(rows), zr(rows), znew(rows), ynew(rows);

    for (iter = 1; iter <= s.max_iter; ++iter) {
        rhs = s.sigma * x - qs;
        if (rows > 0) rhs.noalias() += w.As.transpose() * (w.rho_vec.cwiseProduct(z) - y);
        if (w.pivoted) xt = w.kkt_pivoted.solve(rhs);
        else xt = w.kkt.solve(rhs);
        zt.noalias() = w.As * xt;
        x = s.alpha * xt + (1.0 - s.alpha) * x;
        zr = s.alpha * zt + (1.0 - s.alpha) * z;
        znew = (zr + y.cwiseQuotient(w.rho_vec)).cwiseMax(ls).cwiseMin(us);
        ynew = y + w.rho_vec.cwiseProduct(zr - znew);
        const Vector dy = ynew - y;
        z.swap(znew);
        y.swap(ynew);

        const bool adapt = s.adaptive_rho_interval > 0 && iter % s.adaptive_rho_interval == 0;
        if (iter % s.check_interval != 0 && !adapt && iter != s.max_iter) {
            ++since_improved;
            continue;
        }

        const Residuals r = residuals(x, z, y);
        if (r.score() < best.score()) {
            best = r;
            best_x = x;
            best_z = z;
            best_y = y;
            since_improved = 0;
        } else {
            since_improved += 1;
        }
        if (r.converged()) {
            done = true;
            break;
        }
        if (since_improved >= s.infeasibility_patience && certifies_infeasible(dy)) {
            sol.status = QpStatus::infeasible;
            sol.iterations = iter;
            sol.z = w.D.cwiseProduct(x);
            sol.dual = w.E.cwiseProduct(y) / w.c;
            sol.primal_residual = r.prim;
            sol.dual_residual = r.dual;
            sol.objective = 0.5 * sol.z.dot(qp.P * sol.z) + qp.q.dot(sol.z) + qp.constant;
            return sol;
        }
        if (adapt && rows > 0) {
            const double pn = r.prim / std::max(r.prim_norm, 1e-30);
            const double dn = r.dual / std::max(r.dual_norm, 1e-30);
            if (pn > 0.0 && dn > 0.0) {
                const double rho_new = std::clamp(w.rho * std::sqrt(pn / dn), kRhoMin, kRhoMax);
                if (rho_new > kAdaptiveRhoTolerance * w.rho ||
                    rho_new < w.rho / kAdaptiveRhoTolerance) {
                    w.rho = rho_new;
                    w.factor(s.sigma);
                }
            }
        }
    }
    if (!done) {
        iter = s.max_iter;
        x = best_x;
        z = best_z;
        y = best_y;
    }
    sol.iterations = iter;
    sol.status = done ? QpStatus::solved : QpStatus::max_iterations;
    Residuals fin = done ? residuals(x, z, y) : best;

    if (done && s.polish) {
        // Guess the active set from the ADMM iterate and solve the reduced
        // KKT system exactly, with iterative refinement.
        std::vector<Index> act;
        std::vector<int> side;  // -1 lower, +1 upper, 0 equality
        for (Index i = 0; i < rows; ++i) {
            if (w.kinds[static_cast<std::size_t>(i)] == RowKind::equality) {
                act.push_back(i);
                side.push_back(0);
            } else if (z(i) - ls(i) < -y(i)) {
                act.push_back(i);
                side.push_back(-1);
            } else if (us(i) - z(i) < y(i)) {
                act.push_back(i);
                side.push_back(1);
            }
        }
        const Index k = static_cast<Index>(act.size());
        Matrix Aact(k, d);
        Vector bact(k);
        for (Index a = 0; a < k; ++a) {
            const Index i = act[static_cast<std::size_t>(a)];
            Aact.row(a) = w.As.row(i);
            bact(a) = side[static_cast<std::size_t>(a)] > 0 ? us(i) : ls(i);
        }
        Matrix Kt = Matrix::Zero(d + k, d + k);
        Kt.topLeftCorner(d, d) = w.Ps;
        Kt.topRightCorner(d, k) = Aact.transpose();
        Kt.bottomLeftCorner(k, d) = Aact;
        Matrix Kr = Kt;
        Kr.diagonal().head(d).array() += kPolishDelta;
        Kr.diagonal().tail(k).array() -= kPolishDelta;
        Eigen::PartialPivLU<Matrix> lu(Kr);
        Vector b(d + k);
        b << -qs, bact;
        Vector sol_vec = lu.solve(b);
        for (int it = 0; it < s.polish_refine_iterations; ++it) {
            const Vector res = b - Kt * sol_vec;
            sol_vec += lu.solve(res);
        }
        if (sol_vec.allFinite()) {
            const Vector xp = sol_vec.head(d);
            Vector yp = Vector::Zero(rows);
            bool signs_ok = true;
            const Residuals ref = fin;
            for (Index a = 0; a < k; ++a) {
                const Index i = act[static_cast<std::size_t>(a)];
                yp(i) = sol_vec(d + a);
                // y (unscaled) = E y / c; compare against the dual tolerance.
                const double yu = w.E(i) * yp(i) / w.c;
                const int sd = side[static_cast<std::size_t>(a)];
                if ((sd < 0 && yu > ref.eps_dual) || (sd > 0 && yu < -ref.eps_dual))
                    signs_ok = false;
            }
            const Vector zp = (w.As * xp).cwiseMax(ls).cwiseMin(us);
            const Residuals pr = residuals(xp, zp, yp);
            if (signs_ok && pr.converged() && pr.prim <= std::max(ref.prim, ref.eps_prim) &&
                pr.dual <= std::max(ref.dual, ref.eps_dual)) {
                x = xp;
                z = zp;
                y = yp;
                fin = pr;
                sol.polished = true;
            }
        }
    }

    sol.z = w.D.cwiseProduct(x);
    sol.dual = w.E.cwiseProduct(y) / w.c;
    sol.primal_residual = fin.prim;
    sol.dual_residual = fin.dual;
    sol.objective = 0.5 * sol.z.dot(qp.P * sol.z) + qp.q.dot(sol.z) + qp.constant;
    return sol;
}

QpSolution solve_qp(const QuadraticProgram& problem, const QpSettings& settings,
                    const QpWarmStart* warm) {
    QpSolver solver(settings);
    return solver.solve(problem, warm);
}

}  // namespace deepc
