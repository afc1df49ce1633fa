#include "deepc/controller.hpp"

#include "deepc/errors.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace deepc {

std::string_view to_string(ControlMode mode) {
    return mode == ControlMode::regularized ? "deepc" : "vdeepc";
}

Controller::Controller(ControllerData data, DeePCParams params, QpSettings settings)
    : data_(std::move(data)), params_(std::move(params)), solver_(settings) {
    if (const auto* h = std::get_if<HankelPartition>(&data_)) {
        h->validate();
        mode_ = ControlMode::regularized;
        dims_ = h->dims;
    } else if (const auto* dh = std::get_if<DeltaHankelPartition>(&data_)) {
        dh->validate();
        mode_ = ControlMode::velocity;
        dims_ = dh->dims;
    } else {
        const auto& rb = std::get<ReducedBasis>(data_);
        reduced_view_ = rb.partition();
        reduced_view_.validate();
        mode_ = ControlMode::velocity;
        dims_ = rb.dims;
    }
    if (dims_.t_ini != params_.t_ini || dims_.horizon != params_.horizon)
        throw DimensionError("data matrices were built for T_ini=" + std::to_string(dims_.t_ini) +
                             ", N=" + std::to_string(dims_.horizon) + " but params ask for T_ini=" +
                             std::to_string(params_.t_ini) + ", N=" +
                             std::to_string(params_.horizon));
    params_.validate(dims_.m, dims_.p);
    dump_dir_ = std::filesystem::temp_directory_path();
}

void Controller::initialize(Plant& plant) {
    if (plant.input_dim() != dims_.m || plant.output_dim() != dims_.p)
        throw DimensionError("plant dimensions do not match the controller data");
    OnlineWindow w;
    w.u_ini = Matrix::Zero(dims_.m, params_.t_ini);
    w.y_ini.resize(dims_.p, params_.t_ini);
    const Vector zero = Vector::Zero(dims_.m);
    for (Index k = 0; k < params_.t_ini; ++k) w.y_ini.col(k) = plant.step(zero);
    initialize(w);
}

void Controller::initialize(const OnlineWindow& window) {
    window.validate(params_.t_ini, dims_.m, dims_.p);
    window_ = window;
    step_ = params_.t_ini;
    previous_.reset();
    initialized_ = true;
}

QuadraticProgram Controller::assemble(const Matrix& ref) const {
    if (const auto* h = std::get_if<HankelPartition>(&data_))
        return assemble_regularized(*h, window_, ref, params_);
    if (const auto* dh = std::get_if<DeltaHankelPartition>(&data_))
        return assemble_velocity(*dh, window_, ref, params_);
    return assemble_velocity(reduced_view_, window_, ref, params_);
}

ControlSolution Controller::decode(const QpSolution& s) const {
    if (const auto* h = std::get_if<HankelPartition>(&data_))
        return decode_solution(s, *h, window_, params_);
    if (const auto* dh = std::get_if<DeltaHankelPartition>(&data_))
        return decode_solution(s, *dh, window_, params_);
    return decode_solution(s, reduced_view_, window_, params_);
}

QpWarmStart Controller::shifted_warm_start() const {
    QpWarmStart w{previous_->z, previous_->dual};
    const Index cols = mode_ == ControlMode::regularized
                           ? std::get<HankelPartition>(data_).columns()
                           : (std::holds_alternative<ReducedBasis>(data_)
                                  ? reduced_view_.columns()
                                  : std::get<DeltaHankelPartition>(data_).columns());
    const Index ns = w.z.size() - cols;
    const Index p = dims_.p;
    if (ns > p) {
        auto sigma = w.z.tail(ns);
        const Vector old = sigma;
        sigma.head(ns - p) = old.tail(ns - p);
    }
    return w;
}

ControlSolution Controller::solve(const Matrix& ref_window) {
    if (!initialized_) throw InvalidArgument("controller used before initialize()");
    last_qp_ = assemble(ref_window);

    std::optional<QpWarmStart> warm;
    if (warm_start_enabled_ && previous_ && previous_->z.size() == last_qp_.num_variables())
        warm = shifted_warm_start();

    const auto t0 = std::chrono::steady_clock::now();
    QpSolution s = solver_.solve(last_qp_, warm ? &*warm : nullptr);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    last_diag_ = {s.status, s.iterations, s.objective, elapsed,
                  s.status == QpStatus::max_iterations};

    if (s.status == QpStatus::infeasible) {
        const auto path = dump_dir_ / ("deepc_infeasible_step" + std::to_string(step_) + ".qp");
        std::ofstream f(path);
        if (f) dump_qp(last_qp_, f);
        throw InfeasibleError("QP infeasible at step " + std::to_string(step_) +
                              (f ? "; problem dumped to " + path.string() : std::string()));
    }
    ControlSolution out = decode(s);
    out.qp_diag = {s.status, s.iterations, s.primal_residual, s.dual_residual, s.polished};
    previous_ = std::move(s);
    return out;
}

void Controller::push(const Vector& u, const Vector& y) {
    if (!initialized_) throw InvalidArgument("controller used before initialize()");
    if (u.size() != dims_.m || y.size() != dims_.p)
        throw DimensionError("pushed sample has wrong dimension");
    if (!u.allFinite() || !y.allFinite()) throw InvalidArgument("non-finite sample pushed");
    const Index T = params_.t_ini;
    window_.u_ini.leftCols(T - 1) = window_.u_ini.rightCols(T - 1).eval();
    window_.y_ini.leftCols(T - 1) = window_.y_ini.rightCols(T - 1).eval();
    window_.u_ini.col(T - 1) = u;
    window_.y_ini.col(T - 1) = y;
    ++step_;
}

StepResult Controller::control_step(Plant& plant, const Matrix& ref_window) {
    const ControlSolution sol = solve(ref_window);
    Vector u = sol.first_input();
    u = u.cwiseMax(params_.u_bounds.lower).cwiseMin(params_.u_bounds.upper);
    const Vector y = plant.step(u);
    if (!y.allFinite()) throw SimulationError("plant returned a non-finite measurement");
    push(u, y);
    return {u, y, last_diag_};
}

Index ClosedLoopTrace::flagged_steps() const {
    return std::count_if(records.begin(), records.end(),
                         [](const TraceRecord& r) { return r.flagged; });
}

ClosedLoopTrace run_closed_loop(Controller& controller, Plant& plant,
                                const ReferenceSchedule& schedule, Index t_end) {
    const Index t_ini = controller.params().t_ini;
    if (t_end < t_ini) throw InvalidArgument("t_end must be at least T_ini");
    const double ts = plant.sample_period();
    if (controller.sample_period() > 0.0 &&
        std::abs(controller.sample_period() - ts) > 1e-12 * std::max(1.0, ts))
        throw InvalidArgument("controller data and plant disagree on the sample period");
    schedule.validate();
    if (schedule.segments.front().second.size() != controller.output_dim())
        throw DimensionError("reference dimension does not match the plant outputs");

    ClosedLoopTrace trace;
    trace.sample_period = ts;
    trace.records.reserve(static_cast<std::size_t>(t_end - t_ini + 1));
    try {
        plant.reset();
        controller.initialize(plant);
        const Index N = controller.params().horizon;
        for (Index t = t_ini; t <= t_end; ++t) {
            const Matrix ref = schedule.window(t, N);
            const StepResult r = controller.control_step(plant, ref);
            TraceRecord rec;
            rec.step = t;
            rec.time = static_cast<double>(t) * ts;
            rec.reference = ref.col(0);
            rec.input = r.input;
            rec.output = r.measurement;
            rec.objective = r.diag.objective;
            rec.iterations = r.diag.iterations;
            rec.solve_seconds = r.diag.solve_seconds;
            rec.flagged = r.diag.flagged;
            trace.records.push_back(std::move(rec));
        }
    } catch (const Error& e) {
        trace.failed = true;
        trace.error = e.what();
    }
    return trace;
}

void write_trace_csv(const ClosedLoopTrace& trace, std::ostream& out) {
    if (trace.records.empty()) {
        out << "t,objective,iters,solve_ms\n";
        return;
    }
    const auto& first = trace.records.front();
    out << 't';
    for (Index i = 0; i < first.reference.size(); ++i) out << ",ref" << i + 1;
    for (Index i = 0; i < first.input.size(); ++i) out << ",u" << i + 1;
    for (Index i = 0; i < first.output.size(); ++i) out << ",y" << i + 1;
    out << ",objective,iters,solve_ms\n";
    const auto old = out.precision(12);
    for (const auto& r : trace.records) {
        out << r.time;
        for (Index i = 0; i < r.reference.size(); ++i) out << ',' << r.reference(i);
        for (Index i = 0; i < r.input.size(); ++i) out << ',' << r.input(i);
        for (Index i = 0; i < r.output.size(); ++i) out << ',' << r.output(i);
        out << ',' << r.objective << ',' << r.iterations << ',' << r.solve_seconds * 1e3 << '\n';
    }
    out.precision(old);
}

}  // namespace deepc
