#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bcw/connecting.hpp"
#include "bcw/source.hpp"

namespace bcw {

/// B_jk(x_n, T_l) = u^{h_j}(T_l, x_n) u^{h_k}(T_l, x_n), one J x J slice per (x, T).
struct ProductTensor {
    int J = 0;
    std::vector<double> x;
    std::vector<double> T;
    /// Slice (n, l) stored at l * x.size() + n.
    std::vector<Eigen::MatrixXd> slices;

    const Eigen::MatrixXd& at(int n, int l) const { return slices[l * x.size() + n]; }
    Eigen::MatrixXd& at(int n, int l) { return slices[l * x.size() + n]; }
};

struct ProductOptions {
    /// Knot spacing of the nested control basis; also the s-grid spacing.
    double delta = 0.01;
    double alpha = 0.0;
    /// Smallest s-grid point kept (x below this is a boundary layer of the projector).
    double x_min = 0.0;
    double x_max = 1.0;
    int workers = 1;
};

/// Mass lost at one end of a long window when projecting onto cubic B-splines
/// supported inside it, in units of the knot spacing (about 1.0331).
double spline_window_deficit();

/// G(s) = (1_(0,s) u^{h_j}(T), u^{h_k}(T)) on the nested s-grid, differentiated in s
/// with a five-point local quadratic fit.
ProductTensor product_profile(const std::vector<SourceSignal>& h, const std::vector<double>& T_grid,
                              const DtnMatrix& dtn, const ProductOptions& options);

/// v_j(x, T) = +-u^{h_j}(T, x) with one sign convention across the whole (x, T) grid.
struct RecoveredField {
    int J = 0;
    std::vector<double> x;
    std::vector<double> T;
    /// v(j, l * n_x + n).
    Eigen::MatrixXd v;
    std::vector<bool> mask;
    /// Second over first eigenvalue per point.
    std::vector<double> eigen_ratio;
    std::vector<double> leading_eigenvalue;

    int nx() const { return static_cast<int>(x.size()); }
    int nT() const { return static_cast<int>(T.size()); }
    double value(int j, int n, int l) const { return v(j, l * nx() + n); }
    bool reliable(int n, int l) const { return mask[l * nx() + n]; }
};

struct FactorOptions {
    double rank_tolerance = 0.05;
    /// Leading eigenvalues below this fraction of the largest are noise.
    double noise_floor = 1e-4;
};

/// Leading eigenpair per slice; signs aligned by a flood fill that visits points in
/// decreasing leading eigenvalue and matches each to its strongest fixed neighbour.
RecoveredField factor_rank_one(const ProductTensor& B, const FactorOptions& options = {});

struct ReconstructionResult {
    std::vector<double> x;
    std::vector<double> q_est;
    /// Sum of v_j^2 over admissible (j, T).
    std::vector<double> weight;
    /// Weighted spread of the pointwise estimates, used as an error bar.
    std::vector<double> spread;
    std::vector<bool> mask;
    /// Fraction of eval points inside (0.1, 0.9) that carry an estimate.
    double coverage = 0.0;
    double eigen_ratio_median = 0.0;
    double eigen_ratio_max = 0.0;
};

struct RecoverOptions {
    double amplitude_tolerance = 0.05;
};

/// q(x) = (v_xx - v_TT) / v, with the x-step matched to the T-step, averaged over (j, T)
/// with weights v_j^2.
ReconstructionResult recover_potential(const RecoveredField& v, const RecoverOptions& options = {});

struct PipelineOptions {
    std::vector<double> T_grid;
    ProductOptions product;
    FactorOptions factor;
    RecoverOptions recover;
};

/// T levels 1.1, 1.15, ..., 1.5.
std::vector<double> default_T_grid();

/// J broad bumps with staggered supports.
std::vector<SourceSignal> default_source_family(const TimeGrid& tg, int J = 6);

/// Cubic B-spline pulses on shifted supports, a second family for cross-validation.
std::vector<SourceSignal> alternate_source_family(const TimeGrid& tg, int J = 6);

/// The whole pipeline. Only the DtN matrix enters; the sources are chosen by the user.
ReconstructionResult reconstruct(const DtnMatrix& dtn, const std::vector<SourceSignal>& h,
                                 const PipelineOptions& options);

/// Adds zero-mean Gaussian noise of standard deviation level * max|entries|.
void add_noise(DtnMatrix& dtn, double level, std::uint64_t seed);

} // namespace bcw
