#pragma once

#include "deepc/hankel.hpp"

#include <iosfwd>
#include <memory>
#include <string_view>

namespace deepc {

/// minimize   0.5 z'Pz + q'z + constant
/// subject to Aeq z = beq,  lower <= G z <= upper
///
/// Bounds may be +/-infinity. `constant` only shifts the reported objective.
struct QuadraticProgram {
    Matrix P;
    Vector q;
    Matrix Aeq;
    Vector beq;
    Matrix G;
    Vector lower;
    Vector upper;
    double constant = 0.0;

    Index num_variables() const { return q.size(); }
    /// Shapes, symmetry of P and finiteness. Empty bounds are not an error here;
    /// the solver reports them as infeasible.
    void validate() const;
};

enum class QpStatus { solved, max_iterations, infeasible };

std::string_view to_string(QpStatus status);

struct QpSettings {
    double eps_abs = 1e-6;
    double eps_rel = 1e-6;
    int max_iter = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;  // over-relaxation
    int adaptive_rho_interval = 25;
    int check_interval = 5;
    int scaling_iterations = 15;
    int infeasibility_patience = 500;
    double eps_infeasible = 1e-5;
    bool polish = true;
    int polish_refine_iterations = 10;
};

struct QpSolution {
    Vector z;
    Vector dual;  ///< stacked [equality rows; inequality rows]
    double objective = 0.0;
    QpStatus status = QpStatus::max_iterations;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool polished = false;
};

struct QpWarmStart {
    Vector z;
    Vector dual;  ///< same layout as QpSolution::dual; may be empty
};

/// ADMM (operator splitting) solver. An instance caches the scaling and the
/// KKT factorization and reuses them while P, Aeq and G stay unchanged, so a
/// receding-horizon loop only pays for a refactorization when rho adapts.
/// Not safe for concurrent use; give each thread its own instance.
class QpSolver {
public:
    explicit QpSolver(QpSettings settings = {});
    ~QpSolver();
    QpSolver(QpSolver&&) noexcept;
    QpSolver& operator=(QpSolver&&) noexcept;

    QpSolution solve(const QuadraticProgram& problem, const QpWarmStart* warm = nullptr);

    const QpSettings& settings() const { return settings_; }

private:
    struct Workspace;
    QpSettings settings_;
    std::unique_ptr<Workspace> ws_;
};

/// One-shot convenience wrapper around a fresh QpSolver.
QpSolution solve_qp(const QuadraticProgram& problem, const QpSettings& settings = {},
                    const QpWarmStart* warm = nullptr);

/// Text dump for offline inspection. Sections look like
///   %%QuadraticProgram d=<vars> e=<eq rows> c=<ineq rows>
///   P <rows> <cols> <nnz>       followed by "i j value" lines, 1-based
///   q <n>                       followed by one value per line
/// for P, q, Aeq, beq, G, lower, upper and a final "constant <value>" line.
/// Infinite bounds are written as inf / -inf.
void dump_qp(const QuadraticProgram& problem, std::ostream& out);
QuadraticProgram read_qp(std::istream& in);

}  // namespace deepc
