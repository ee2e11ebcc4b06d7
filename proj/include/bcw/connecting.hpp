#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "bcw/array2d.hpp"
#include "bcw/grid.hpp"
#include "bcw/source.hpp"
#include "bcw/wave1d.hpp"

namespace bcw {

/// Discrete DtN operator: flux samples = entries * source samples.
///
/// Column j is the flux produced by the unit boundary impulse at t_j (the nodal hat
/// on the time grid), so applying the matrix to any sampled source reproduces the
/// forward solve exactly when data and inversion share a grid.
struct DtnMatrix {
    Eigen::MatrixXd entries;
    TimeGrid tg;
    /// Spatial grid the data were generated on (finer than the inversion grid in de-crime mode).
    int data_n_x = 0;
    int refinement = 1;
    DtnStencil stencil = DtnStencil::SummationByParts;

    int size() const { return static_cast<int>(entries.rows()); }
    std::vector<double> apply(const std::vector<double>& f) const;
    std::vector<double> apply(const SourceSignal& f) const { return apply(f.samples); }
};

struct DtnAssemblyOptions {
    DtnStencil stencil = DtnStencil::SummationByParts;
    /// 1: data on the inversion grid. 2: data generated at dx/2, dt/2 (de-crime mode).
    int refinement = 1;
    int workers = 1;
};

/// Assembles the matrix by one forward march per column.
DtnMatrix assemble_dtn(const std::function<double(double)>& q, const SpatialGrid& sg, const TimeGrid& tg,
                       const DtnAssemblyOptions& options = {});

DtnMatrix assemble_dtn(const PotentialGrid& q, const SpatialGrid& sg, const TimeGrid& tg,
                       const DtnAssemblyOptions& options = {});

/// W_{f,h}(t_k, s_j) on the full n_t x n_t grid; trustworthy where t + s <= t_max.
struct ConnectingKernel {
    Array2D W;
    TimeGrid tg;
    SourceSignal f;
    SourceSignal h;

    /// Whether (t_k, s_j) lies in the region unaffected by the truncated s-range.
    bool valid(int k, int j) const { return k + j <= tg.size() - 1; }
};

/// Solves W_tt - W_ss = f(t) (Lh)(s) - (Lf)(t) h(s) with zero Cauchy data and the odd
/// extension across s = 0, by leapfrog at unit Courant number in the (t, s) plane.
ConnectingKernel blagoveshchenskii(const SourceSignal& f, const SourceSignal& h, const DtnMatrix& dtn);

std::vector<double> diagonal(const ConnectingKernel& W);

/// W_{f,h}(t_K, t_K) without building the kernel.
///
/// At unit Courant number the discrete Green's function of the (t, s) march is a
/// checkerboard indicator, so the diagonal value is a sum of the forcing over a
/// backward cone. Parity-strided prefix sums make each evaluation O(K).
class DiagonalEvaluator {
public:
    DiagonalEvaluator(const SourceSignal& f, const DtnMatrix& dtn);
    DiagonalEvaluator(std::vector<double> f, std::vector<double> lf, double dt);

    /// W_{f,h}(t_K, t_K); requires 2K - 1 <= n_t - 1.
    double value(const DiagonalEvaluator& h, int K) const;
    /// Largest K whose backward cone stays on the grid.
    int max_index() const { return static_cast<int>(f_.size()) / 2; }

    const std::vector<double>& samples() const { return f_; }
    const std::vector<double>& flux() const { return lf_; }

private:
    void build_prefix();
    // Sum of v[j] over j in {lo, lo+2, ..., hi}.
    static double strided(const std::vector<double>& prefix, int lo, int hi);

    std::vector<double> f_;
    std::vector<double> lf_;
    std::vector<double> pf_;
    std::vector<double> plf_;
    double dt_ = 0.0;
};

} // namespace bcw
