#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deepc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kDefaultRankTol = 1e-9;

/// Default upper bound on the (unknown) system order used for PE checks.
inline constexpr int kDefaultOrderBound = 10;

/// Recorded input/output experiment. Samples are stored column-wise:
/// `inputs` is m x T and `outputs` is p x T.
struct Trajectory {
    Matrix inputs;
    Matrix outputs;
    double sample_period = 0.1;
    std::string label;

    Index length() const { return inputs.cols(); }
    Index input_dim() const { return inputs.rows(); }
    Index output_dim() const { return outputs.rows(); }

    /// Throws DimensionError / InvalidArgument when the invariants are broken.
    void validate() const;
};

/// Forward differences of a Trajectory, one sample shorter than its source.
struct DeltaTrajectory {
    Matrix delta_inputs;
    Matrix delta_outputs;
    double sample_period = 0.1;

    Index length() const { return delta_inputs.cols(); }
    Index input_dim() const { return delta_inputs.rows(); }
    Index output_dim() const { return delta_outputs.rows(); }
};

/// Shape of a past/future split: m inputs, p outputs, T_ini past samples and
/// an N-step prediction horizon.
struct PartitionDims {
    Index m = 1;
    Index p = 1;
    Index t_ini = 1;
    Index horizon = 1;

    Index depth() const { return t_ini + horizon; }
    bool operator==(const PartitionDims&) const = default;
};

/// Block-Hankel data split into past (Up, Yp) and future (Uf, Yf) rows.
/// Stacked order is [Up; Uf; Yp; Yf].
struct HankelPartition {
    Matrix Up, Uf, Yp, Yf;
    PartitionDims dims;

    Index columns() const { return Up.cols(); }
    Matrix stacked() const;
    static HankelPartition from_stacked(const Matrix& stacked, const PartitionDims& dims);
    void validate() const;
};

/// Velocity-form data: past blocks have T_ini-1 block rows, future blocks N.
/// After `cumulative_transform` the blocks hold running block sums.
/// Stacked order is [dUp; dUf; dYp; dYf].
struct DeltaHankelPartition {
    Matrix dUp, dUf, dYp, dYf;
    PartitionDims dims;

    Index columns() const { return dUp.cols(); }
    Index past_rows() const { return dims.t_ini - 1; }
    Matrix stacked() const;
    static DeltaHankelPartition from_stacked(const Matrix& stacked, const PartitionDims& dims);
    void validate() const;
};

/// Column-compressed velocity data H_tilde = H V1 = W1 Sigma1.
struct ReducedBasis {
    Matrix H_tilde;          ///< q1 x r
    Vector singular_values;  ///< all singular values of H, descending
    Index rank = 0;          ///< retained r
    Matrix V1;               ///< q2 x r
    PartitionDims dims;

    /// The four row blocks of H_tilde, usable wherever a DeltaHankelPartition is.
    DeltaHankelPartition partition() const;
};

DeltaTrajectory diff_trajectory(const Trajectory& traj);

/// Depth-L block-Hankel matrix of a signal stored column-wise (dim x T).
Matrix build_hankel(const Matrix& signal, Index depth);

/// Number of singular values above rank_tol * sigma_max.
Index numerical_rank(const Matrix& m, double rank_tol = kDefaultRankTol);

/// Persistency of excitation of the given order.
bool check_pe(const Matrix& signal, Index order, double rank_tol = kDefaultRankTol);

/// Horizontal concatenation of depth-L Hankel matrices of several signals.
Matrix build_mosaic_hankel(std::span<const Matrix> signals, Index depth);

/// Collective persistency of excitation: the mosaic Hankel has full row rank.
bool check_collective_pe(std::span<const Matrix> signals, Index order,
                         double rank_tol = kDefaultRankTol);

/// Lower bound (m + kappa)(n + L - 1) - kappa on the total sample count.
Index minimum_data_length(Index m, Index n, Index depth, Index datasets);

/// Regular (absolute-valued) partition; several trajectories give a mosaic.
HankelPartition build_partition(std::span<const Trajectory> trajectories, Index t_ini,
                                Index horizon);

/// Raw (untransformed) velocity blocks of one or more difference trajectories.
DeltaHankelPartition build_delta_partition(std::span<const DeltaTrajectory> trajectories,
                                           Index t_ini, Index horizon);

/// Tilde-transformed velocity mosaic. The cumulative-sum transform is
/// applied per dataset before concatenation.
DeltaHankelPartition build_mosaic(std::span<const DeltaTrajectory> trajectories, Index t_ini,
                                  Index horizon);

/// Running block sums down each column (multiplication by the block
/// lower-triangular all-ones matrix).
Matrix block_cumsum(const Matrix& block, Index block_rows);

/// Inverse of block_cumsum: block first differences.
Matrix block_difference(const Matrix& block, Index block_rows);

DeltaHankelPartition cumulative_transform(const DeltaHankelPartition& raw);
DeltaHankelPartition inverse_cumulative_transform(const DeltaHankelPartition& tilde);

/// Truncated SVD compression of a tilde-transformed partition to r columns.
ReducedBasis reduce_svd(const DeltaHankelPartition& partition, Index r);

/// Same compression for a regular partition; r must satisfy 1 <= r <= min(rows, cols).
HankelPartition reduce_svd(const HankelPartition& partition, Index r);

}  // namespace deepc
