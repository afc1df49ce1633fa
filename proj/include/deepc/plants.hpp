#pragma once

#include "deepc/hankel.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <utility>
#include <vector>

namespace deepc {

/// A sampled plant. `step(u)` returns the measurement y_k for the current
/// sample and then advances the internal state with u_k.
class Plant {
public:
    virtual ~Plant() = default;

    virtual Vector step(const Vector& u) = 0;
    /// Back to the initial condition. The noise stream continues; it is
    /// seeded once at construction / set_noise.
    virtual void reset() = 0;
    virtual Index input_dim() const = 0;
    virtual Index output_dim() const = 0;
    virtual double sample_period() const = 0;
    virtual std::unique_ptr<Plant> clone() const = 0;
};

/// Piecewise-constant signal: value of the last entry whose start step is <= k.
/// An empty schedule is zero.
struct StepSchedule {
    std::vector<std::pair<Index, Vector>> entries;

    static StepSchedule constant(const Vector& v) { return {{{0, v}}}; }
    Vector at(Index k, Index dim) const;
};

/// x_{k+1} = A x_k + B u_k + w_x(k),  y_k = C x_k + D u_k + w_y(k) (+ noise).
class LtiPlant final : public Plant {
public:
    LtiPlant(Matrix A, Matrix B, Matrix C, Matrix D = Matrix());

    Vector step(const Vector& u) override;
    void reset() override;
    Index input_dim() const override { return B_.cols(); }
    Index output_dim() const override { return C_.rows(); }
    Index state_dim() const { return A_.rows(); }
    double sample_period() const override { return sample_period_; }
    std::unique_ptr<Plant> clone() const override { return std::make_unique<LtiPlant>(*this); }

    void set_initial_state(const Vector& x0);
    void set_state_disturbance(StepSchedule w) { w_x_ = std::move(w); }
    void set_output_disturbance(StepSchedule w) { w_y_ = std::move(w); }
    void set_noise(const Vector& stddev, std::uint64_t seed);
    void set_sample_period(double ts) { sample_period_ = ts; }

    double spectral_radius() const;
    const Vector& state() const { return x_; }
    Index steps_taken() const { return k_; }
    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    const Matrix& C() const { return C_; }
    const Matrix& D() const { return D_; }

private:
    Matrix A_, B_, C_, D_;
    Vector x0_, x_;
    StepSchedule w_x_, w_y_;
    Vector noise_std_;
    std::uint64_t seed_ = 0;
    std::mt19937_64 rng_;
    Index k_ = 0;
    double sample_period_ = 0.1;
};

/// Single-segment planar bending arm used as a stand-in for the pneumatic
/// robot. The bend angle obeys
///   J th'' = -k1 th - k3 th^3 - c th' + b u + m_p g l_eff sin(th + th_mount)
/// with l_eff = length (converted to metres) and m_p in kilograms. The tip
/// (x, z) in mm follows constant-curvature kinematics plus a mount offset.
struct SoftArmParams {
    double length_mm = 300.0;
    double inertia = 1.0;
    double k1 = 4.0;
    double k3 = 1.0;
    double damping = 1.2;
    double input_gain = 0.05;  ///< per psi
    double mount_angle = 0.3;  ///< rad
    double gravity = 9.81;
    double payload_g = 0.0;
    double mount_x_mm = 35.0;
    double mount_z_mm = 0.0;
    double u_min = 0.0;
    double u_max = 80.0;
    double sample_period = 0.1;
    int substeps = 10;
    double noise_std_mm = 0.0;
    std::uint64_t seed = 0;
};

/// Tip position (x, z) in the segment frame for bend angle theta. Uses a
/// series expansion for |theta| < 1e-6.
Eigen::Vector2d constant_curvature_tip(double theta, double length);

class SoftArmPlant final : public Plant {
public:
    explicit SoftArmPlant(SoftArmParams params = {});

    Vector step(const Vector& u) override;
    void reset() override;
    Index input_dim() const override { return 1; }
    Index output_dim() const override { return 2; }
    double sample_period() const override { return params_.sample_period; }
    std::unique_ptr<Plant> clone() const override { return std::make_unique<SoftArmPlant>(*this); }

    const SoftArmParams& params() const { return params_; }
    void set_payload(double grams) { params_.payload_g = grams; }
    void set_noise(double stddev_mm, std::uint64_t seed);

    double angle() const { return theta_; }
    double angular_rate() const { return omega_; }
    /// Noise-free tip position in world coordinates (mm).
    Eigen::Vector2d tip() const { return tip_at(theta_); }
    Eigen::Vector2d tip_at(double theta) const;
    /// Mechanical energy 0.5 J w^2 + 0.5 k1 th^2 + 0.25 k3 th^4 (payload excluded).
    double energy() const;
    /// Bend angle at rest for constant pressure u (Newton on the static balance).
    double equilibrium_angle(double u) const;
    Eigen::Vector2d equilibrium_tip(double u) const { return tip_at(equilibrium_angle(u)); }

private:
    double acceleration(double theta, double omega, double u) const;

    SoftArmParams params_;
    double theta_ = 0.0;
    double omega_ = 0.0;
    std::mt19937_64 rng_;
};

/// Setpoints that switch at given steps, or an explicit per-step sequence.
struct ReferenceSchedule {
    std::vector<std::pair<Index, Vector>> segments;  ///< (start_step, setpoint)

    static ReferenceSchedule constant(const Vector& setpoint) { return {{{0, setpoint}}}; }
    static ReferenceSchedule from_sequence(const Matrix& per_step);

    Vector at(Index k) const;
    /// References for steps k..k+N-1 (p x N); past the last entry the last value is held.
    Matrix window(Index k, Index horizon) const;
    /// Strictly increasing starts; setpoints inside the given bounds (if any).
    void validate(const Vector* lower = nullptr, const Vector* upper = nullptr) const;
};

struct ExcitationConfig {
    Index length = 601;
    Index hold = 5;
    double low = 0.0;
    double high = 80.0;
    std::uint64_t seed = 0;
    Index channels = 1;
};

/// Piecewise-constant uniform random levels in [low, high], each held `hold`
/// samples. Returns channels x length.
Matrix generate_excitation(const ExcitationConfig& config);

/// Records `datasets` experiments, resetting the plant before each one.
/// Dataset i uses excitation seed `config.seed + i`; its label records it.
std::vector<Trajectory> collect_dataset(Plant& plant, const ExcitationConfig& config,
                                        Index datasets);

}  // namespace deepc
