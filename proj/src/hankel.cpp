#include "deepc/hankel.hpp"

#include "deepc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace deepc {

namespace {

std::string dims_str(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

void expect_rows(const Matrix& m, Index rows, const char* name) {
    if (m.rows() != rows)
        throw DimensionError(std::string(name) + " has " + std::to_string(m.rows()) +
                             " rows, expected " + std::to_string(rows));
}

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) return Vector();
    return Eigen::BDCSVD<Matrix>(m).singularValues();
}

}  // namespace

void Trajectory::validate() const {
    if (inputs.rows() < 1 || outputs.rows() < 1)
        throw DimensionError("trajectory needs m >= 1 and p >= 1");
    if (inputs.cols() != outputs.cols())
        throw DimensionError("inputs and outputs differ in length: " +
                             dims_str(inputs.rows(), inputs.cols()) + " vs " +
                             dims_str(outputs.rows(), outputs.cols()));
    if (inputs.cols() < 1) throw InsufficientDataError("empty trajectory");
    if (!inputs.allFinite() || !outputs.allFinite())
        throw InvalidArgument("trajectory contains non-finite samples");
    if (!(sample_period > 0.0)) throw InvalidArgument("sample_period must be positive");
}

Matrix HankelPartition::stacked() const {
    Matrix h(Up.rows() + Uf.rows() + Yp.rows() + Yf.rows(), columns());
    h << Up, Uf, Yp, Yf;
    return h;
}

HankelPartition HankelPartition::from_stacked(const Matrix& h, const PartitionDims& d) {
    const Index up = d.t_ini * d.m, uf = d.horizon * d.m;
    const Index yp = d.t_ini * d.p, yf = d.horizon * d.p;
    expect_rows(h, up + uf + yp + yf, "stacked Hankel");
    HankelPartition out;
    out.dims = d;
    out.Up = h.topRows(up);
    out.Uf = h.middleRows(up, uf);
    out.Yp = h.middleRows(up + uf, yp);
    out.Yf = h.bottomRows(yf);
    return out;
}

void HankelPartition::validate() const {
    expect_rows(Up, dims.t_ini * dims.m, "Up");
    expect_rows(Uf, dims.horizon * dims.m, "Uf");
    expect_rows(Yp, dims.t_ini * dims.p, "Yp");
    expect_rows(Yf, dims.horizon * dims.p, "Yf");
    const Index c = Up.cols();
    if (Uf.cols() != c || Yp.cols() != c || Yf.cols() != c)
        throw DimensionError("partition blocks disagree on column count");
}

Matrix DeltaHankelPartition::stacked() const {
    Matrix h(dUp.rows() + dUf.rows() + dYp.rows() + dYf.rows(), columns());
    h << dUp, dUf, dYp, dYf;
    return h;
}

DeltaHankelPartition DeltaHankelPartition::from_stacked(const Matrix& h, const PartitionDims& d) {
    const Index up = (d.t_ini - 1) * d.m, uf = d.horizon * d.m;
    const Index yp = (d.t_ini - 1) * d.p, yf = d.horizon * d.p;
    expect_rows(h, up + uf + yp + yf, "stacked velocity Hankel");
    DeltaHankelPartition out;
    out.dims = d;
    out.dUp = h.topRows(up);
    out.dUf = h.middleRows(up, uf);
    out.dYp = h.middleRows(up + uf, yp);
    out.dYf = h.bottomRows(yf);
    return out;
}

void DeltaHankelPartition::validate() const {
    if (dims.t_ini < 2) throw InvalidArgument("velocity form needs T_ini >= 2");
    expect_rows(dUp, (dims.t_ini - 1) * dims.m, "dUp");
    expect_rows(dUf, dims.horizon * dims.m, "dUf");
    expect_rows(dYp, (dims.t_ini - 1) * dims.p, "dYp");
    expect_rows(dYf, dims.horizon * dims.p, "dYf");
    const Index c = dUp.cols();
    if (dUf.cols() != c || dYp.cols() != c || dYf.cols() != c)
        throw DimensionError("partition blocks disagree on column count");
}

DeltaHankelPartition ReducedBasis::partition() const {
    return DeltaHankelPartition::from_stacked(H_tilde, dims);
}

DeltaTrajectory diff_trajectory(const Trajectory& traj) {
    const Index T = traj.length();
    if (T < 2) throw InsufficientDataError("differencing needs at least 2 samples, got " +
                                           std::to_string(T));
    if (traj.outputs.cols() != T) throw DimensionError("inputs and outputs differ in length");
    DeltaTrajectory d;
    d.sample_period = traj.sample_period;
    d.delta_inputs = traj.inputs.rightCols(T - 1) - traj.inputs.leftCols(T - 1);
    d.delta_outputs = traj.outputs.rightCols(T - 1) - traj.outputs.leftCols(T - 1);
    return d;
}

Matrix build_hankel(const Matrix& signal, Index depth) {
    const Index dim = signal.rows();
    const Index T = signal.cols();
    if (depth < 1) throw InvalidArgument("Hankel depth must be >= 1");
    if (depth > T)
        throw DimensionError("Hankel depth " + std::to_string(depth) + " exceeds signal length " +
                             std::to_string(T));
    const Index cols = T - depth + 1;
    Matrix h(dim * depth, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < depth; ++i) h.block(i * dim, j, dim, 1) = signal.col(i + j);
    return h;
}

Index numerical_rank(const Matrix& m, double rank_tol) {
    if (!(rank_tol > 0.0)) throw InvalidArgument("rank_tol must be positive");
    const Vector s = singular_values(m);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double cut = rank_tol * s(0);
    return static_cast<Index>((s.array() > cut).count());
}

bool check_pe(const Matrix& signal, Index order, double rank_tol) {
    if (order < 1) throw InvalidArgument("PE order must be >= 1");
    const Matrix h = build_hankel(signal, order);
    return numerical_rank(h, rank_tol) == h.rows();
}

Matrix build_mosaic_hankel(std::span<const Matrix> signals, Index depth) {
    if (signals.empty()) throw InvalidArgument("mosaic Hankel needs at least one signal");
    const Index dim = signals.front().rows();
    Index cols = 0;
    for (const auto& s : signals) {
        if (s.rows() != dim) throw DimensionError("signals disagree on dimension");
        if (s.cols() < depth)
            throw InsufficientDataError("signal of length " + std::to_string(s.cols()) +
                                        " is shorter than depth " + std::to_string(depth));
        cols += s.cols() - depth + 1;
    }
    Matrix out(dim * depth, cols);
    Index at = 0;
    for (const auto& s : signals) {
        const Matrix h = build_hankel(s, depth);
        out.middleCols(at, h.cols()) = h;
        at += h.cols();
    }
    return out;
}

bool check_collective_pe(std::span<const Matrix> signals, Index order, double rank_tol) {
    if (order < 1) throw InvalidArgument("PE order must be >= 1");
    const Matrix h = build_mosaic_hankel(signals, order);
    return numerical_rank(h, rank_tol) == h.rows();
}

Index minimum_data_length(Index m, Index n, Index depth, Index datasets) {
    return (m + datasets) * (n + depth - 1) - datasets;
}

HankelPartition build_partition(std::span<const Trajectory> trajectories, Index t_ini,
                                Index horizon) {
    if (trajectories.empty()) throw InvalidArgument("no trajectories given");
    if (t_ini < 1 || horizon < 1) throw InvalidArgument("T_ini and N must be >= 1");
    std::vector<Matrix> u, y;
    const Index m = trajectories.front().input_dim();
    const Index p = trajectories.front().output_dim();
    for (const auto& t : trajectories) {
        t.validate();
        if (t.input_dim() != m || t.output_dim() != p)
            throw DimensionError("trajectories disagree on (m, p)");
        u.push_back(t.inputs);
        y.push_back(t.outputs);
    }
    const Index L = t_ini + horizon;
    const Matrix hu = build_mosaic_hankel(u, L);
    const Matrix hy = build_mosaic_hankel(y, L);
    HankelPartition out;
    out.dims = {m, p, t_ini, horizon};
    out.Up = hu.topRows(t_ini * m);
    out.Uf = hu.bottomRows(horizon * m);
    out.Yp = hy.topRows(t_ini * p);
    out.Yf = hy.bottomRows(horizon * p);
    return out;
}

DeltaHankelPartition build_delta_partition(std::span<const DeltaTrajectory> trajectories,
                                           Index t_ini, Index horizon) {
    if (trajectories.empty()) throw InvalidArgument("no trajectories given");
    if (t_ini < 2) throw InvalidArgument("velocity form needs T_ini >= 2");
    if (horizon < 1) throw InvalidArgument("N must be >= 1");
    const Index m = trajectories.front().input_dim();
    const Index p = trajectories.front().output_dim();
    std::vector<Matrix> du, dy;
    for (const auto& t : trajectories) {
        if (t.input_dim() != m || t.output_dim() != p)
            throw DimensionError("trajectories disagree on (m, p)");
        if (t.delta_outputs.cols() != t.length())
            throw DimensionError("delta inputs and outputs differ in length");
        du.push_back(t.delta_inputs);
        dy.push_back(t.delta_outputs);
    }
    // Depth L-1 on difference data of length T-1.
    const Index depth = t_ini + horizon - 1;
    const Matrix hu = build_mosaic_hankel(du, depth);
    const Matrix hy = build_mosaic_hankel(dy, depth);
    DeltaHankelPartition out;
    out.dims = {m, p, t_ini, horizon};
    out.dUp = hu.topRows((t_ini - 1) * m);
    out.dUf = hu.bottomRows(horizon * m);
    out.dYp = hy.topRows((t_ini - 1) * p);
    out.dYf = hy.bottomRows(horizon * p);
    return out;
}

DeltaHankelPartition build_mosaic(std::span<const DeltaTrajectory> trajectories, Index t_ini,
                                  Index horizon) {
    if (trajectories.empty()) throw InvalidArgument("no trajectories given");
    std::vector<DeltaHankelPartition> parts;
    Index cols = 0;
    for (const auto& t : trajectories) {
        parts.push_back(cumulative_transform(
            build_delta_partition(std::span<const DeltaTrajectory>(&t, 1), t_ini, horizon)));
        if (parts.back().dims != parts.front().dims)
            throw DimensionError("trajectories disagree on (m, p)");
        cols += parts.back().columns();
    }
    DeltaHankelPartition out;
    out.dims = parts.front().dims;
    out.dUp.resize(parts.front().dUp.rows(), cols);
    out.dUf.resize(parts.front().dUf.rows(), cols);
    out.dYp.resize(parts.front().dYp.rows(), cols);
    out.dYf.resize(parts.front().dYf.rows(), cols);
    Index at = 0;
    for (const auto& part : parts) {
        const Index c = part.columns();
        out.dUp.middleCols(at, c) = part.dUp;
        out.dUf.middleCols(at, c) = part.dUf;
        out.dYp.middleCols(at, c) = part.dYp;
        out.dYf.middleCols(at, c) = part.dYf;
        at += c;
    }
    return out;
}

Matrix block_cumsum(const Matrix& block, Index block_rows) {
    if (block_rows < 1 || block.rows() % block_rows != 0)
        throw DimensionError("row count " + std::to_string(block.rows()) +
                             " is not a multiple of block size " + std::to_string(block_rows));
    Matrix out = block;
    for (Index r = block_rows; r < out.rows(); r += block_rows)
        out.middleRows(r, block_rows) += out.middleRows(r - block_rows, block_rows);
    return out;
}

Matrix block_difference(const Matrix& block, Index block_rows) {
    if (block_rows < 1 || block.rows() % block_rows != 0)
        throw DimensionError("row count " + std::to_string(block.rows()) +
                             " is not a multiple of block size " + std::to_string(block_rows));
    Matrix out = block;
    for (Index r = out.rows() - block_rows; r >= block_rows; r -= block_rows)
        out.middleRows(r, block_rows) -= block.middleRows(r - block_rows, block_rows);
    return out;
}

DeltaHankelPartition cumulative_transform(const DeltaHankelPartition& raw) {
    raw.validate();
    DeltaHankelPartition out;
    out.dims = raw.dims;
    out.dUp = block_cumsum(raw.dUp, raw.dims.m);
    out.dUf = block_cumsum(raw.dUf, raw.dims.m);
    out.dYp = block_cumsum(raw.dYp, raw.dims.p);
    out.dYf = block_cumsum(raw.dYf, raw.dims.p);
    return out;
}

DeltaHankelPartition inverse_cumulative_transform(const DeltaHankelPartition& tilde) {
    tilde.validate();
    DeltaHankelPartition out;
    out.dims = tilde.dims;
    out.dUp = block_difference(tilde.dUp, tilde.dims.m);
    out.dUf = block_difference(tilde.dUf, tilde.dims.m);
    out.dYp = block_difference(tilde.dYp, tilde.dims.p);
    out.dYf = block_difference(tilde.dYf, tilde.dims.p);
    return out;
}

namespace {

struct Truncated {
    Matrix compressed;  // H V1 = W1 Sigma1
    Matrix V1;
    Vector sigma;
};

Truncated truncate(const Matrix& h, Index r) {
    const Index limit = std::min(h.rows(), h.cols());
    if (r < 1 || r > limit)
        throw InvalidArgument("SVD rank " + std::to_string(r) + " outside [1, " +
                              std::to_string(limit) + "]");
    Eigen::BDCSVD<Matrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Truncated t;
    t.sigma = svd.singularValues();
    t.V1 = svd.matrixV().leftCols(r);
    t.compressed = svd.matrixU().leftCols(r) * t.sigma.head(r).asDiagonal();
    return t;
}

}  // namespace

ReducedBasis reduce_svd(const DeltaHankelPartition& partition, Index r) {
    partition.validate();
    Truncated t = truncate(partition.stacked(), r);
    ReducedBasis out;
    out.H_tilde = std::move(t.compressed);
    out.singular_values = std::move(t.sigma);
    out.V1 = std::move(t.V1);
    out.rank = r;
    out.dims = partition.dims;
    return out;
}

HankelPartition reduce_svd(const HankelPartition& partition, Index r) {
    partition.validate();
    const Truncated t = truncate(partition.stacked(), r);
    return HankelPartition::from_stacked(t.compressed, partition.dims);
}

}  // namespace deepc
