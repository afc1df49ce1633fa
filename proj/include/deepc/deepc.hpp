#pragma once

#include "deepc/hankel.hpp"
#include "deepc/qp.hpp"

namespace deepc {

/// Per-channel box [lower, upper]; entries may be infinite.
struct Bounds {
    Vector lower;
    Vector upper;

    static Bounds unbounded(Index n);
    static Bounds uniform(Index n, double lo, double hi);
    Index size() const { return lower.size(); }
};

/// Horizons, weights, regularizers and constraint sets of the DeePC problem.
///
/// `lambda_y == 0` removes the slack variable altogether, so the past-output
/// equality is enforced exactly; with `lambda_g == 0` as well the regularized
/// problem is the plain LTI formulation.
struct DeePCParams {
    Index t_ini = 20;
    Index horizon = 20;
    Matrix Q;  ///< p x p output weight
    Matrix R;  ///< m x m input weight
    double lambda_g = 0.0;
    double lambda_y = 0.0;
    Bounds u_bounds;
    Bounds y_bounds;

    /// Scalar weights expanded to scalar * identity; unbounded boxes.
    static DeePCParams with_scalar_weights(Index m, Index p, Index t_ini, Index horizon, double q,
                                           double r, double lambda_g, double lambda_y);

    bool has_slack() const { return lambda_y > 0.0; }
    void validate(Index m, Index p) const;
};

/// The last T_ini applied inputs and measured outputs, oldest first (m x T_ini
/// and p x T_ini). The newest column is (u_{t-1}, y_{t-1}).
struct OnlineWindow {
    Matrix u_ini;
    Matrix y_ini;

    Vector u_prev() const { return u_ini.col(u_ini.cols() - 1); }
    Vector y_prev() const { return y_ini.col(y_ini.cols() - 1); }
    Index length() const { return u_ini.cols(); }

    /// Running sums of the window increments anchored at the oldest sample,
    /// i.e. stacked (w_{k+1} - w_0) for k = 0..T_ini-2.
    Vector delta_u_tilde() const;
    Vector delta_y_tilde() const;

    void validate(Index t_ini, Index m, Index p) const;
};

struct QpDiagnostics {
    QpStatus status = QpStatus::max_iterations;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool polished = false;
};

struct ControlSolution {
    Matrix u_star;  ///< m x N
    Matrix y_pred;  ///< p x N
    Vector g;
    Vector sigma_y;
    double objective = 0.0;
    QpDiagnostics qp_diag;

    Vector first_input() const { return u_star.col(0); }
};

/// Condensed regularized problem over (g, sigma_y). `reference` is p x N.
QuadraticProgram assemble_regularized(const HankelPartition& partition,
                                      const OnlineWindow& window, const Matrix& reference,
                                      const DeePCParams& params);

/// Condensed velocity-form problem over (g, sigma_y); the partition must be
/// tilde-transformed. Cost and boxes act on the absolute u and y obtained by
/// anchoring the predicted running sums at (u_{t-1}, y_{t-1}).
QuadraticProgram assemble_velocity(const DeltaHankelPartition& partition,
                                   const OnlineWindow& window, const Matrix& reference,
                                   const DeePCParams& params);
QuadraticProgram assemble_velocity(const ReducedBasis& basis, const OnlineWindow& window,
                                   const Matrix& reference, const DeePCParams& params);

/// Throws InfeasibleError when the QP was declared infeasible.
ControlSolution decode_solution(const QpSolution& solution, const HankelPartition& partition,
                                const OnlineWindow& window, const DeePCParams& params);
ControlSolution decode_solution(const QpSolution& solution,
                                const DeltaHankelPartition& partition,
                                const OnlineWindow& window, const DeePCParams& params);
ControlSolution decode_solution(const QpSolution& solution, const ReducedBasis& basis,
                                const OnlineWindow& window, const DeePCParams& params);

/// Full DeePC cost of a decoded solution, evaluated from u, y, g and sigma_y.
double evaluate_cost(const ControlSolution& solution, const Matrix& reference,
                     const DeePCParams& params);

}  // namespace deepc
