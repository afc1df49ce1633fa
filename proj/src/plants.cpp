#include "deepc/plants.hpp"

#include "deepc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace deepc {

Vector StepSchedule::at(Index k, Index dim) const {
    Vector v = Vector::Zero(dim);
    for (const auto& [start, value] : entries) {
        if (start > k) break;
        if (value.size() != dim) throw DimensionError("disturbance schedule has wrong dimension");
        v = value;
    }
    return v;
}

LtiPlant::LtiPlant(Matrix A, Matrix B, Matrix C, Matrix D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)), rng_(0) {
    const Index n = A_.rows();
    if (A_.cols() != n || B_.rows() != n || C_.cols() != n)
        throw DimensionError("LTI matrices have inconsistent shapes");
    if (D_.size() == 0) D_ = Matrix::Zero(C_.rows(), B_.cols());
    if (D_.rows() != C_.rows() || D_.cols() != B_.cols())
        throw DimensionError("D must be p x m");
    x0_ = Vector::Zero(n);
    x_ = x0_;
    noise_std_ = Vector::Zero(C_.rows());
}

void LtiPlant::set_initial_state(const Vector& x0) {
    if (x0.size() != A_.rows()) throw DimensionError("initial state has wrong dimension");
    x0_ = x0;
    x_ = x0;
}

void LtiPlant::set_noise(const Vector& stddev, std::uint64_t seed) {
    if (stddev.size() != C_.rows()) throw DimensionError("noise stddev must have p entries");
    noise_std_ = stddev;
    seed_ = seed;
    rng_.seed(seed);
}

void LtiPlant::reset() {
    x_ = x0_;
    k_ = 0;
}

Vector LtiPlant::step(const Vector& u) {
    if (u.size() != B_.cols()) throw DimensionError("input has wrong dimension");
    if (!u.allFinite()) throw InvalidArgument("non-finite input");
    Vector y = C_ * x_ + D_ * u + w_y_.at(k_, C_.rows());
    if (noise_std_.any()) {
        std::normal_distribution<double> n01(0.0, 1.0);
        for (Index i = 0; i < y.size(); ++i) y(i) += noise_std_(i) * n01(rng_);
    }
    x_ = A_ * x_ + B_ * u + w_x_.at(k_, A_.rows());
    ++k_;
    if (!x_.allFinite()) throw SimulationError("LTI state diverged");
    return y;
}

double LtiPlant::spectral_radius() const {
    if (A_.size() == 0) return 0.0;
    return Eigen::EigenSolver<Matrix>(A_, false).eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::Vector2d constant_curvature_tip(double theta, double length) {
    const double t2 = theta * theta;
    if (std::abs(theta) < 1e-6) {
        // (1 - cos t)/t and sin(t)/t to fourth order.
        return {length * (theta / 2.0 - theta * t2 / 24.0), length * (1.0 - t2 / 6.0 + t2 * t2 / 120.0)};
    }
    return {length * (1.0 - std::cos(theta)) / theta, length * std::sin(theta) / theta};
}

SoftArmPlant::SoftArmPlant(SoftArmParams params) : params_(params), rng_(params.seed) {
    if (!(params_.length_mm > 0.0)) throw InvalidArgument("arm length must be positive");
    if (!(params_.inertia > 0.0)) throw InvalidArgument("inertia must be positive");
    if (!(params_.payload_g >= 0.0)) throw InvalidArgument("payload must be non-negative");
    if (params_.substeps < 1 || !(params_.sample_period > 0.0))
        throw InvalidArgument("invalid integration step");
    reset();
}

void SoftArmPlant::set_noise(double stddev_mm, std::uint64_t seed) {
    params_.noise_std_mm = stddev_mm;
    params_.seed = seed;
    rng_.seed(seed);
}

void SoftArmPlant::reset() {
    theta_ = 0.0;
    omega_ = 0.0;
}

double SoftArmPlant::acceleration(double theta, double omega, double u) const {
    const auto& p = params_;
    const double payload_torque = (p.payload_g * 1e-3) * p.gravity * (p.length_mm * 1e-3) *
                                  std::sin(theta + p.mount_angle);
    return (-p.k1 * theta - p.k3 * theta * theta * theta - p.damping * omega +
            p.input_gain * u + payload_torque) /
           p.inertia;
}

Eigen::Vector2d SoftArmPlant::tip_at(double theta) const {
    return constant_curvature_tip(theta, params_.length_mm) +
           Eigen::Vector2d(params_.mount_x_mm, params_.mount_z_mm);
}

double SoftArmPlant::energy() const {
    const auto& p = params_;
    const double t2 = theta_ * theta_;
    return 0.5 * p.inertia * omega_ * omega_ + 0.5 * p.k1 * t2 + 0.25 * p.k3 * t2 * t2;
}

Vector SoftArmPlant::step(const Vector& u_in) {
    if (u_in.size() != 1) throw DimensionError("soft arm takes a single pressure command");
    if (!std::isfinite(u_in(0))) throw InvalidArgument("non-finite input");
    const double u = std::clamp(u_in(0), params_.u_min, params_.u_max);

    Vector y = tip();
    if (params_.noise_std_mm > 0.0) {
        std::normal_distribution<double> n01(0.0, 1.0);
        y(0) += params_.noise_std_mm * n01(rng_);
        y(1) += params_.noise_std_mm * n01(rng_);
    }

    const double h = params_.sample_period / params_.substeps;
    for (int s = 0; s < params_.substeps; ++s) {
        const double t0 = theta_, w0 = omega_;
        const double k1t = w0, k1w = acceleration(t0, w0, u);
        const double k2t = w0 + 0.5 * h * k1w, k2w = acceleration(t0 + 0.5 * h * k1t, k2t, u);
        const double k3t = w0 + 0.5 * h * k2w, k3w = acceleration(t0 + 0.5 * h * k2t, k3t, u);
        const double k4t = w0 + h * k3w, k4w = acceleration(t0 + h * k3t, k4t, u);
        theta_ = t0 + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
        omega_ = w0 + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }
    if (!std::isfinite(theta_) || !std::isfinite(omega_))
        throw SimulationError("soft arm state became non-finite");
    return y;
}

double SoftArmPlant::equilibrium_angle(double u) const {
    const auto& p = params_;
    const double load = (p.payload_g * 1e-3) * p.gravity * (p.length_mm * 1e-3);
    double th = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double f = -p.k1 * th - p.k3 * th * th * th + p.input_gain * u +
                         load * std::sin(th + p.mount_angle);
        const double df = -p.k1 - 3.0 * p.k3 * th * th + load * std::cos(th + p.mount_angle);
        const double step = f / df;
        th -= step;
        if (std::abs(step) < 1e-14) break;
    }
    return th;
}

ReferenceSchedule ReferenceSchedule::from_sequence(const Matrix& per_step) {
    ReferenceSchedule s;
    for (Index k = 0; k < per_step.cols(); ++k) s.segments.emplace_back(k, per_step.col(k));
    return s;
}

Vector ReferenceSchedule::at(Index k) const {
    if (segments.empty()) throw InvalidArgument("empty reference schedule");
    const Vector* v = &segments.front().second;
    for (const auto& [start, value] : segments) {
        if (start > k) break;
        v = &value;
    }
    return *v;
}

Matrix ReferenceSchedule::window(Index k, Index horizon) const {
    if (segments.empty()) throw InvalidArgument("empty reference schedule");
    Matrix out(segments.front().second.size(), horizon);
    for (Index j = 0; j < horizon; ++j) out.col(j) = at(k + j);
    return out;
}

void ReferenceSchedule::validate(const Vector* lower, const Vector* upper) const {
    if (segments.empty()) throw InvalidArgument("empty reference schedule");
    const Index p = segments.front().second.size();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& [start, v] = segments[i];
        if (v.size() != p) throw DimensionError("setpoints disagree on dimension");
        if (i > 0 && start <= segments[i - 1].first)
            throw InvalidArgument("reference start steps must be strictly increasing");
        for (Index j = 0; j < p; ++j) {
            if ((lower && v(j) < (*lower)(j)) || (upper && v(j) > (*upper)(j)))
                throw InvalidArgument("setpoint at step " + std::to_string(start) +
                                      " lies outside the output bounds");
        }
    }
}

Matrix generate_excitation(const ExcitationConfig& c) {
    if (c.length < 1) throw InvalidArgument("excitation length must be >= 1");
    if (c.hold < 1) throw InvalidArgument("hold must be >= 1");
    if (c.channels < 1) throw InvalidArgument("excitation needs at least one channel");
    if (c.low > c.high) throw InvalidArgument("excitation low must not exceed high");
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> level(c.low, c.high);
    Matrix out(c.channels, c.length);
    for (Index k = 0; k < c.length; k += c.hold) {
        for (Index i = 0; i < c.channels; ++i) {
            const double v = c.low == c.high ? c.low : level(rng);
            for (Index j = k; j < std::min(k + c.hold, c.length); ++j) out(i, j) = v;
        }
    }
    return out;
}

std::vector<Trajectory> collect_dataset(Plant& plant, const ExcitationConfig& config,
                                        Index datasets) {
    if (datasets < 1) throw InvalidArgument("need at least one dataset");
    std::vector<Trajectory> out;
    for (Index i = 0; i < datasets; ++i) {
        ExcitationConfig cfg = config;
        cfg.seed = config.seed + static_cast<std::uint64_t>(i);
        cfg.channels = plant.input_dim();
        const Matrix u = generate_excitation(cfg);
        plant.reset();
        Trajectory t;
        t.sample_period = plant.sample_period();
        t.inputs = u;
        t.outputs.resize(plant.output_dim(), u.cols());
        for (Index k = 0; k < u.cols(); ++k) t.outputs.col(k) = plant.step(u.col(k));
        t.label = "dataset " + std::to_string(i) + " excitation seed " + std::to_string(cfg.seed);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace deepc
