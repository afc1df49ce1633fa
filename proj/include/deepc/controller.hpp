#pragma once

#include "deepc/deepc.hpp"
#include "deepc/plants.hpp"
#include "deepc/qp.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace deepc {

enum class ControlMode { regularized, velocity };

std::string_view to_string(ControlMode mode);

/// Regularized mode takes a HankelPartition; velocity mode a tilde-transformed
/// DeltaHankelPartition or its ReducedBasis.
using ControllerData = std::variant<HankelPartition, DeltaHankelPartition, ReducedBasis>;

struct StepDiagnostics {
    QpStatus status = QpStatus::solved;
    int iterations = 0;
    double objective = 0.0;
    double solve_seconds = 0.0;
    bool flagged = false;  // best iterate applied after max_iterations
};

struct StepResult {
    Vector input;
    Vector measurement;
    StepDiagnostics diag;
};

class Controller {
public:
    Controller(ControllerData data, DeePCParams params, QpSettings settings = {});

    ControlMode mode() const { return mode_; }
    const DeePCParams& params() const { return params_; }
    const ControllerData& data() const { return data_; }
    Index input_dim() const { return dims_.m; }
    Index output_dim() const { return dims_.p; }

    /// Sample period of the data the controller was built from; 0 = unknown.
    void set_sample_period(double ts) { sample_period_ = ts; }
    double sample_period() const { return sample_period_; }

    void set_warm_start(bool on) { warm_start_enabled_ = on; }
    /// Where infeasible QPs are dumped; defaults to the system temp directory.
    void set_dump_directory(std::filesystem::path dir) { dump_dir_ = std::move(dir); }

    /// Zero input for T_ini steps, recording the measurements. Call after plant.reset().
    void initialize(Plant& plant);
    /// Start from a given window instead (t = T_ini).
    void initialize(const OnlineWindow& window);
    bool initialized() const { return initialized_; }

    /// Solves for the current window without touching it. `ref_window` is p x N.
    ControlSolution solve(const Matrix& ref_window);
    /// Appends an applied input and the measurement taken with it; drops the oldest.
    void push(const Vector& u, const Vector& y);

    /// solve, apply the first input (clipped to u_bounds) to the plant, push.
    StepResult control_step(Plant& plant, const Matrix& ref_window);

    const OnlineWindow& window() const { return window_; }
    Index step() const { return step_; }
    const StepDiagnostics& last_diagnostics() const { return last_diag_; }
    const QuadraticProgram& last_qp() const { return last_qp_; }

private:
    QuadraticProgram assemble(const Matrix& ref_window) const;
    ControlSolution decode(const QpSolution& s) const;
    QpWarmStart shifted_warm_start() const;

    ControllerData data_;
    DeltaHankelPartition reduced_view_;  // cached blocks of a ReducedBasis
    ControlMode mode_;
    PartitionDims dims_;
    DeePCParams params_;
    QpSolver solver_;
    OnlineWindow window_;
    Index step_ = 0;
    bool initialized_ = false;
    double sample_period_ = 0.0;
    bool warm_start_enabled_ = true;
    std::optional<QpSolution> previous_;
    StepDiagnostics last_diag_;
    QuadraticProgram last_qp_;
    std::filesystem::path dump_dir_;
};

struct TraceRecord {
    Index step = 0;
    double time = 0.0;
    Vector reference;
    Vector input;
    Vector output;
    double objective = 0.0;
    int iterations = 0;
    double solve_seconds = 0.0;
    bool flagged = false;
};

struct ClosedLoopTrace {
    std::vector<TraceRecord> records;
    double sample_period = 0.1;
    bool failed = false;
    std::string error;

    std::size_t size() const { return records.size(); }
    Index flagged_steps() const;
};

/// Resets the plant, initializes the controller and runs t = T_ini..t_end.
/// Step errors end the run early with `failed` set and the message kept.
ClosedLoopTrace run_closed_loop(Controller& controller, Plant& plant,
                                const ReferenceSchedule& schedule, Index t_end);

/// Columns t,ref1..refp,u1..um,y1..yp,objective,iters,solve_ms.
void write_trace_csv(const ClosedLoopTrace& trace, std::ostream& out);

}  // namespace deepc
