#include "deepc/deepc.hpp"

#include "deepc/errors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace deepc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix block_diag(const Matrix& w, Index blocks) {
    const Index n = w.rows();
    Matrix out = Matrix::Zero(n * blocks, n * blocks);
    for (Index k = 0; k < blocks; ++k) out.block(k * n, k * n, n, n) = w;
    return out;
}

Vector repeat(const Vector& v, Index times) { return v.replicate(times, 1); }

void check_weight(const Matrix& w, Index n, const char* name) {
    if (w.rows() != n || w.cols() != n)
        throw DimensionError(std::string(name) + " must be " + std::to_string(n) + "x" +
                             std::to_string(n));
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff()))
        throw InvalidArgument(std::string(name) + " is not symmetric");
    Eigen::LLT<Matrix> llt(w);
    if (llt.info() != Eigen::Success)
        throw InvalidArgument(std::string(name) + " is not positive definite");
}

void check_bounds(const Bounds& b, Index n, const char* name) {
    if (b.lower.size() != n || b.upper.size() != n)
        throw DimensionError(std::string(name) + " must have " + std::to_string(n) + " channels");
    for (Index i = 0; i < n; ++i)
        if (!(b.lower(i) <= b.upper(i)))
            throw InvalidArgument(std::string(name) + " is empty in channel " +
                                  std::to_string(i + 1));
}

// Future rows of the decision problem: u = Hu g + u_off, y = Hy g + y_off.
struct Condensed {
    const Matrix& Hu_f;
    Vector u_off;
    const Matrix& Hy_f;
    Vector y_off;
    const Matrix& Hu_p;
    Vector u_p;
    const Matrix& Hy_p;
    Vector y_p;
};

QuadraticProgram build(const Condensed& c, const Matrix& reference, const DeePCParams& params,
                       Index m, Index p) {
    const Index N = params.horizon;
    if (reference.rows() != p || reference.cols() != N)
        throw DimensionError("reference must be " + std::to_string(p) + "x" + std::to_string(N));
    if (!reference.allFinite()) throw InvalidArgument("reference contains non-finite entries");

    const Index cols = c.Hu_f.cols();
    const Index ns = params.has_slack() ? c.Hy_p.rows() : 0;
    const Index d = cols + ns;

    const Matrix Qbar = block_diag(params.Q, N);
    const Matrix Rbar = block_diag(params.R, N);
    const Vector e_y = c.y_off - flatten(reference);
    const Vector& e_u = c.u_off;

    const Matrix QH = Qbar * c.Hy_f;
    const Matrix RH = Rbar * c.Hu_f;

    QuadraticProgram qp;
    qp.P = Matrix::Zero(d, d);
    Matrix Pg = c.Hy_f.transpose() * QH;
    Pg.noalias() += c.Hu_f.transpose() * RH;
    Pg.diagonal().array() += params.lambda_g;
    qp.P.topLeftCorner(cols, cols) = Pg + Pg.transpose();  // 2 * symmetric part
    if (ns > 0) qp.P.bottomRightCorner(ns, ns).diagonal().setConstant(2.0 * params.lambda_y);

    qp.q = Vector::Zero(d);
    qp.q.head(cols) = 2.0 * (QH.transpose() * e_y + RH.transpose() * e_u);
    qp.constant = e_y.dot(Qbar * e_y) + e_u.dot(Rbar * e_u);

    const Index eu = c.Hu_p.rows(), ey = c.Hy_p.rows();
    qp.Aeq = Matrix::Zero(eu + ey, d);
    qp.Aeq.topLeftCorner(eu, cols) = c.Hu_p;
    qp.Aeq.bottomLeftCorner(ey, cols) = c.Hy_p;
    if (ns > 0) qp.Aeq.bottomRightCorner(ey, ns) = -Matrix::Identity(ey, ns);
    qp.beq.resize(eu + ey);
    qp.beq << c.u_p, c.y_p;

    // Box rows on the affine images; rows that are unbounded on both sides are dropped.
    std::vector<Index> urows, yrows;
    for (Index i = 0; i < N * m; ++i)
        if (std::isfinite(params.u_bounds.lower(i % m)) || std::isfinite(params.u_bounds.upper(i % m)))
            urows.push_back(i);
    for (Index i = 0; i < N * p; ++i)
        if (std::isfinite(params.y_bounds.lower(i % p)) || std::isfinite(params.y_bounds.upper(i % p)))
            yrows.push_back(i);
    const Index nb = static_cast<Index>(urows.size() + yrows.size());
    qp.G = Matrix::Zero(nb, d);
    qp.lower.resize(nb);
    qp.upper.resize(nb);
    Index r = 0;
    for (Index i : urows) {
        qp.G.row(r).head(cols) = c.Hu_f.row(i);
        qp.lower(r) = params.u_bounds.lower(i % m) - c.u_off(i);
        qp.upper(r) = params.u_bounds.upper(i % m) - c.u_off(i);
        ++r;
    }
    for (Index i : yrows) {
        qp.G.row(r).head(cols) = c.Hy_f.row(i);
        qp.lower(r) = params.y_bounds.lower(i % p) - c.y_off(i);
        qp.upper(r) = params.y_bounds.upper(i % p) - c.y_off(i);
        ++r;
    }
    return qp;
}

ControlSolution decode(const QpSolution& s, const Matrix& Hu_f, const Vector& u_off,
                       const Matrix& Hy_f, const Vector& y_off, Index ns, Index m, Index p,
                       Index N) {
    if (s.status == QpStatus::infeasible)
        throw InfeasibleError("DeePC QP declared infeasible");
    const Index cols = Hu_f.cols();
    if (s.z.size() != cols + ns)
        throw DimensionError("solution has " + std::to_string(s.z.size()) +
                             " entries, expected " + std::to_string(cols + ns));
    ControlSolution out;
    out.g = s.z.head(cols);
    out.sigma_y = s.z.segment(cols, ns);
    const Vector u = Hu_f * out.g + u_off;
    const Vector y = Hy_f * out.g + y_off;
    out.u_star = Eigen::Map<const Matrix>(u.data(), m, N);
    out.y_pred = Eigen::Map<const Matrix>(y.data(), p, N);
    out.objective = s.objective;
    out.qp_diag = {s.status, s.iterations, s.primal_residual, s.dual_residual, s.polished};
    return out;
}

void check_velocity_inputs(const DeltaHankelPartition& partition, const OnlineWindow& window,
                           const DeePCParams& params) {
    partition.validate();
    const auto& d = partition.dims;
    if (d.t_ini != params.t_ini || d.horizon != params.horizon)
        throw DimensionError("partition horizons disagree with parameters");
    params.validate(d.m, d.p);
    window.validate(params.t_ini, d.m, d.p);
}

}  // namespace

Bounds Bounds::unbounded(Index n) {
    return {Vector::Constant(n, -kInf), Vector::Constant(n, kInf)};
}

Bounds Bounds::uniform(Index n, double lo, double hi) {
    return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

DeePCParams DeePCParams::with_scalar_weights(Index m, Index p, Index t_ini, Index horizon,
                                             double q, double r, double lambda_g,
                                             double lambda_y) {
    DeePCParams out;
    out.t_ini = t_ini;
    out.horizon = horizon;
    out.Q = q * Matrix::Identity(p, p);
    out.R = r * Matrix::Identity(m, m);
    out.lambda_g = lambda_g;
    out.lambda_y = lambda_y;
    out.u_bounds = Bounds::unbounded(m);
    out.y_bounds = Bounds::unbounded(p);
    return out;
}

void DeePCParams::validate(Index m, Index p) const {
    if (t_ini < 2) throw InvalidArgument("T_ini must be >= 2");
    if (horizon < 1) throw InvalidArgument("N must be >= 1");
    check_weight(Q, p, "Q");
    check_weight(R, m, "R");
    if (!(lambda_g >= 0.0) || !(lambda_y >= 0.0))
        throw InvalidArgument("regularizers must be non-negative");
    check_bounds(u_bounds, m, "u_bounds");
    check_bounds(y_bounds, p, "y_bounds");
}

Vector OnlineWindow::delta_u_tilde() const {
    const Index n = u_ini.cols() - 1;
    const Matrix d = u_ini.rightCols(n).colwise() - u_ini.col(0);
    return flatten(d);
}

Vector OnlineWindow::delta_y_tilde() const {
    const Index n = y_ini.cols() - 1;
    const Matrix d = y_ini.rightCols(n).colwise() - y_ini.col(0);
    return flatten(d);
}

void OnlineWindow::validate(Index t_ini, Index m, Index p) const {
    if (u_ini.cols() != t_ini || y_ini.cols() != t_ini)
        throw DimensionError("window must hold exactly " + std::to_string(t_ini) + " samples");
    if (u_ini.rows() != m || y_ini.rows() != p)
        throw DimensionError("window channel counts disagree with the data");
    if (!u_ini.allFinite() || !y_ini.allFinite())
        throw InvalidArgument("window contains non-finite samples");
}

QuadraticProgram assemble_regularized(const HankelPartition& partition,
                                      const OnlineWindow& window, const Matrix& reference,
                                      const DeePCParams& params) {
    partition.validate();
    const auto& d = partition.dims;
    if (d.t_ini != params.t_ini || d.horizon != params.horizon)
        throw DimensionError("partition horizons disagree with parameters");
    params.validate(d.m, d.p);
    window.validate(params.t_ini, d.m, d.p);
    const Condensed c{partition.Uf,
                      Vector::Zero(partition.Uf.rows()),
                      partition.Yf,
                      Vector::Zero(partition.Yf.rows()),
                      partition.Up,
                      flatten(window.u_ini),
                      partition.Yp,
                      flatten(window.y_ini)};
    return build(c, reference, params, d.m, d.p);
}

QuadraticProgram assemble_velocity(const DeltaHankelPartition& partition,
                                   const OnlineWindow& window, const Matrix& reference,
                                   const DeePCParams& params) {
    check_velocity_inputs(partition, window, params);
    const auto& d = partition.dims;
    const Condensed c{partition.dUf,
                      repeat(window.u_prev(), params.horizon),
                      partition.dYf,
                      repeat(window.y_prev(), params.horizon),
                      partition.dUp,
                      window.delta_u_tilde(),
                      partition.dYp,
                      window.delta_y_tilde()};
    return build(c, reference, params, d.m, d.p);
}

QuadraticProgram assemble_velocity(const ReducedBasis& basis, const OnlineWindow& window,
                                   const Matrix& reference, const DeePCParams& params) {
    return assemble_velocity(basis.partition(), window, reference, params);
}

ControlSolution decode_solution(const QpSolution& solution, const HankelPartition& partition,
                                const OnlineWindow& window, const DeePCParams& params) {
    const auto& d = partition.dims;
    window.validate(params.t_ini, d.m, d.p);
    const Index ns = params.has_slack() ? partition.Yp.rows() : 0;
    return decode(solution, partition.Uf, Vector::Zero(partition.Uf.rows()), partition.Yf,
                  Vector::Zero(partition.Yf.rows()), ns, d.m, d.p, params.horizon);
}

ControlSolution decode_solution(const QpSolution& solution,
                                const DeltaHankelPartition& partition,
                                const OnlineWindow& window, const DeePCParams& params) {
    const auto& d = partition.dims;
    window.validate(params.t_ini, d.m, d.p);
    const Index ns = params.has_slack() ? partition.dYp.rows() : 0;
    return decode(solution, partition.dUf, repeat(window.u_prev(), params.horizon),
                  partition.dYf, repeat(window.y_prev(), params.horizon), ns, d.m, d.p,
                  params.horizon);
}

ControlSolution decode_solution(const QpSolution& solution, const ReducedBasis& basis,
                                const OnlineWindow& window, const DeePCParams& params) {
    return decode_solution(solution, basis.partition(), window, params);
}

double evaluate_cost(const ControlSolution& s, const Matrix& reference,
                     const DeePCParams& params) {
    double cost = 0.0;
    for (Index k = 0; k < s.u_star.cols(); ++k) {
        const Vector ey = s.y_pred.col(k) - reference.col(k);
        cost += ey.dot(params.Q * ey);
        cost += s.u_star.col(k).dot(params.R * s.u_star.col(k));
    }
    cost += params.lambda_g * s.g.squaredNorm();
    cost += params.lambda_y * s.sigma_y.squaredNorm();
    return cost;
}

}  // namespace deepc
